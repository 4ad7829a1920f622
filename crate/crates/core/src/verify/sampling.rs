//! Randomized checks: adapted bases, perturbations, random bases and
//! empirical distinguishability.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::family::{RealFamily, RealSubspace, Scalar, Subspace, SubspaceFamily};
use crate::frames::{complement_failure_witness, has_complement_property, Frame, COMPLEMENT_CAP};
use crate::linalg::{extend_orthonormal, operator_norm, random_orthonormal_basis, Matrix, Vector};
use crate::rng::RngState;

use super::real_only;

const ADAPTED_TOL: f64 = 1e-9;

/// Orthonormal basis of `W` whose first vectors are proportional to
/// `Px + Py` and `Px - Py`. Against it, `x` and `y` have the same moduli.
pub fn adapted_basis(w: &RealSubspace, x: &Vector, y: &Vector) -> Result<Vec<Vector>> {
    let m = w.ambient();
    for v in [x, y] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: v.len() });
        }
    }
    let p = w.projection();
    let px = &p * x;
    let py = &p * y;
    let scale = px.norm() + py.norm();
    if (px.norm() - py.norm()).abs() > ADAPTED_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(crate::error::domain(format!(
            "projections differ in norm: {} vs {}",
            px.norm(),
            py.norm()
        )));
    }
    let mut seeds = Vec::new();
    for c in [&px + &py, &px - &py] {
        if c.norm() > ADAPTED_TOL * scale {
            seeds.push(c);
        }
    }
    let start = extend_orthonormal(Vec::new(), &seeds, ADAPTED_TOL);
    let basis = extend_orthonormal(start, &w.basis(), 1e-8);
    debug_assert_eq!(basis.len(), w.dim());
    Ok(basis)
}

/// Rotates every subspace by a random orthogonal matrix close to the
/// identity, so that `||P_n - Q_n|| < eps` in operator norm.
pub fn perturb_family(family: &RealFamily, eps: f64, rng: &mut RngState) -> Result<RealFamily> {
    real_only(family)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(crate::error::domain("perturbation size must be positive"));
    }
    let m = family.ambient();
    let mut out = Vec::with_capacity(family.len());
    for s in family.subspaces() {
        let p = s.projection();
        let mut size = eps / 4.0;
        let q = loop {
            let g = Matrix::from_fn(m, m, |_, _| rng.gaussian());
            let skew = &g - g.transpose();
            let norm = operator_norm(&skew);
            let skew = if norm > 0.0 { skew * (size / norm) } else { skew };
            let half = &skew * 0.5;
            let id = Matrix::identity(m, m);
            let rot = (&id - &half).try_inverse().expect("Cayley transform of a small skew matrix") * (&id + &half);
            let moved: Vec<Vector> = s.stored_vectors().iter().map(|v| &rot * v).collect();
            let q = if s.is_complement_encoded() {
                Subspace::complement_of(m, &moved[0])?
            } else {
                Subspace::span(m, &moved)?
            };
            if operator_norm(&(&p - q.projection())) < eps {
                break q;
            }
            size /= 2.0;
        };
        out.push(q);
    }
    SubspaceFamily::new(m, out)
}

fn random_pooled_frame(family: &RealFamily, rng: &mut RngState) -> Result<Frame> {
    let mut pooled = Vec::new();
    for s in family.subspaces() {
        let basis = s.basis();
        let d = basis.len();
        let mix = random_orthonormal_basis(d, rng)?;
        for col in &mix {
            let mut v = Vector::zeros(family.ambient());
            for (b, c) in basis.iter().zip(col.iter()) {
                v.axpy(*c, b, 1.0);
            }
            pooled.push(v);
        }
    }
    Frame::new(family.ambient(), pooled)
}

fn check_pool_size(family: &RealFamily) -> Result<()> {
    let total: usize = family.dims().iter().sum();
    if total > COMPLEMENT_CAP {
        return Err(Error::Resource { required: 1u128 << total.min(127), cap: 1u128 << COMPLEMENT_CAP });
    }
    Ok(())
}

/// For each trial, pools random orthonormal bases of all subspaces and tests
/// the complement property. `false` on the first failure, which disproves
/// injectivity; `true` after all trials pass, which is evidence only.
pub fn random_basis_complement_check(family: &RealFamily, rng: &mut RngState, trials: usize) -> Result<bool> {
    Ok(random_basis_disproof(family, rng, trials)?.is_none())
}

/// Like [`random_basis_complement_check`], returning the two signals with
/// equal measurements built from the first failing pooled frame.
pub fn random_basis_disproof(family: &RealFamily, rng: &mut RngState, trials: usize) -> Result<Option<(Vector, Vector)>> {
    real_only(family)?;
    check_pool_size(family)?;
    for _ in 0..trials {
        let frame = random_pooled_frame(family, rng)?;
        let report = has_complement_property(&frame)?;
        if let Some(subset) = report.failing_subset {
            return complement_failure_witness(&frame, &subset).map(Some);
        }
    }
    Ok(None)
}

fn random_signal<T: Scalar>(m: usize, rng: &mut RngState) -> DVector<T> {
    DVector::from_fn(m, |_, _| {
        let re = rng.gaussian();
        let im = if T::FIELD == crate::family::Field::Complex { rng.gaussian() } else { 0.0 };
        T::from_parts(re, im)
    })
}

/// Distance from `y` to the orbit `{c x : |c| = 1}`.
fn orbit_distance<T: Scalar>(x: &DVector<T>, y: &DVector<T>) -> f64 {
    let ip = x.dotc(y);
    let (re, im) = ip.parts();
    let r = Complex64::new(re, im);
    let phase = if r.norm() > 0.0 { r / r.norm() } else { Complex64::new(1.0, 0.0) };
    let c = T::from_parts(phase.re, phase.im);
    (y - x * c).norm()
}

/// Smallest sup-norm difference between the measurement vectors of sampled
/// pairs `(x, y)` not related by a unimodular scalar. Empirical evidence only.
pub fn empirical_distinguishability<T: Scalar>(family: &SubspaceFamily<T>, rng: &mut RngState, pairs: usize) -> f64 {
    let m = family.ambient();
    let mut best = f64::INFINITY;
    for _ in 0..pairs {
        let x: DVector<T> = random_signal(m, rng);
        let y: DVector<T> = random_signal(m, rng);
        if orbit_distance(&x, &y) <= 1e-6 * x.norm().max(y.norm()) {
            continue;
        }
        let (Ok(a), Ok(b)) = (family.measure(&x), family.measure(&y)) else { continue };
        let gap = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        best = best.min(gap);
    }
    best
}
