use subphase::family::{build_hyperplane_family, build_real_family, extend_to_hyperplanes, r3_counterexample_family};
use subphase::frames::has_complement_property;
use subphase::linalg::{operator_norm, Vector};
use subphase::reconstruct::{reconstruct, reconstruct_hyperplanes};
use subphase::rng::RngState;
use subphase::verify::{
    adapted_basis, certify_hyperplanes, certify_structured, is_witness_pair, measure, orthogonal_pair_search,
    perturb_family, random_basis_complement_check, random_basis_disproof, rank12_witness_search, stability_margin,
    witness_to_pair,
};

#[test]
fn certified_families_resist_every_search() {
    for (m, dims, seed) in [(3, vec![2, 2, 1, 1, 2], 1u64), (4, vec![3, 2, 2, 1, 2, 2, 1], 7), (5, vec![4, 1, 2, 3, 2, 4, 4, 1, 2], 2)] {
        let (fam, recipe) = build_real_family(m, &dims, &mut RngState::new(seed)).unwrap();
        assert!(certify_structured(&recipe).is_certified());
        assert!(rank12_witness_search(&fam).is_none());
        assert!(orthogonal_pair_search(&fam, &mut RngState::new(seed), 50).is_none());
        if dims.iter().sum::<usize>() <= 14 {
            assert!(random_basis_complement_check(&fam, &mut RngState::new(seed), 20).unwrap());
        }
    }
}

#[test]
fn perturbed_family_stays_injective_under_search() {
    let (fam, recipe) = build_real_family(3, &[2, 1, 1, 2, 1], &mut RngState::new(5)).unwrap();
    let margin = stability_margin(&fam, &mut RngState::new(5), 30);
    assert!(margin > 0.0);
    let q = perturb_family(&fam, margin / 4.0, &mut RngState::new(6)).unwrap();
    assert!(orthogonal_pair_search(&q, &mut RngState::new(7), 50).is_none());
    // Reconstruction against the unperturbed recipe is close, not exact.
    let x = Vector::from_column_slice(&[0.2, -0.9, 0.4]);
    let approx = reconstruct(&recipe, &measure(&q, &x).unwrap());
    if let Ok(r) = approx {
        assert!((&r.signal - &x).norm().min((&r.signal + &x).norm()) < 1.0);
    }
}

#[test]
fn counterexample_complements_fail_everywhere() {
    let ex = r3_counterexample_family(&mut RngState::new(2)).unwrap();
    assert!(certify_structured(&ex.recipe).is_certified());
    let w = rank12_witness_search(&ex.complements).expect("lifted witness");
    let (x, y) = witness_to_pair(&w).unwrap();
    assert!(is_witness_pair(&ex.complements, &x, &y, 1e-8).unwrap());

    // Adapted bases built from the witness break the complement property.
    let mut pooled = Vec::new();
    for s in ex.complements.subspaces() {
        pooled.extend(adapted_basis(s, &x, &y).unwrap());
    }
    let frame = subphase::frames::Frame::new(3, pooled).unwrap();
    assert!(!has_complement_property(&frame).unwrap().holds);

    // Enlarging to hyperplanes keeps the same witness.
    let hyper = extend_to_hyperplanes(&ex.complements, &x, &y).unwrap();
    assert!(hyper.dims().iter().all(|&d| d == 2));
    assert!(is_witness_pair(&hyper, &x, &y, 1e-8).unwrap());
}

#[test]
fn random_bases_expose_a_sparse_family() {
    // Four lines and a plane in R^4 (total dimension 6 < 2M - 1).
    let mut rng = RngState::new(13);
    let subs = (0..5)
        .map(|k| {
            let d = if k == 0 { 2 } else { 1 };
            let vs: Vec<Vector> = (0..d).map(|_| rng.gaussian_vector(4)).collect();
            subphase::family::Subspace::span(4, &vs).unwrap()
        })
        .collect();
    let fam = subphase::family::SubspaceFamily::new(4, subs).unwrap();
    let (x, y) = random_basis_disproof(&fam, &mut RngState::new(1), 3).unwrap().expect("too few vectors");
    assert!(is_witness_pair(&fam, &x, &y, 1e-10).unwrap());
}

#[test]
fn hyperplane_suite() {
    for (m, n, seed) in [(4, 7, 1u64), (5, 9, 2)] {
        let hf = build_hyperplane_family(m, n, &mut RngState::new(seed)).unwrap();
        assert!(certify_hyperplanes(&hf).is_certified());
        let mut rng = RngState::new(seed + 100);
        for _ in 0..20 {
            let x = rng.gaussian_vector(m);
            let r = reconstruct_hyperplanes(&hf, &measure(&hf.family, &x).unwrap()).unwrap();
            assert!((&r.signal - &x).norm().min((&r.signal + &x).norm()) <= 1e-8 * x.norm());
        }
        let q = perturb_family(&hf.family, 1e-3, &mut rng).unwrap();
        for (a, b) in hf.family.subspaces().iter().zip(q.subspaces()) {
            assert!(operator_norm(&(a.projection() - b.projection())) < 1e-3);
        }
    }
}
