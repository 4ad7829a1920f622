use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ComplexFamily, HyperplaneFamily, RealFamily, Recipe, Subspace, SubspaceFamily};
use crate::designs::{zero_one_invertible, BinaryMatrix};
use crate::error::{domain, Error, Result};
use crate::frames::{is_full_spark, stacked_orthobases, Frame, SPARK_CAP};
use crate::linalg::{binomial, orthonormalize, Vector, DEFAULT_TOL};
use crate::rng::RngState;

const HYPERPLANE_BUDGET: usize = 64;

fn check_dims(m: usize, dims: &[usize], expected: usize) -> Result<()> {
    if m < 2 {
        return Err(domain("ambient dimension must be at least 2"));
    }
    if dims.len() != expected {
        return Err(domain(format!("expected {} dimensions, got {}", expected, dims.len())));
    }
    if let Some(&bad) = dims.iter().find(|&&d| d < 1 || d > m - 1) {
        return Err(domain(format!("subspace dimension {} outside [1, {}]", bad, m - 1)));
    }
    Ok(())
}

/// Design for a block of `M - 1` vectors. Dimension `M - 1` requests become
/// the complement of one vector, so their design row has a single one.
fn secondary_block_design(m: usize, dims: &[usize]) -> Result<(BinaryMatrix, Vec<bool>)> {
    if m == 2 {
        // A single line: the 1x1 design [1], no complement trick needed.
        return Ok((BinaryMatrix::identity(1), vec![false]));
    }
    let flags: Vec<bool> = dims.iter().map(|&d| d == m - 1).collect();
    let sums: Vec<usize> = dims.iter().zip(&flags).map(|(&d, &c)| if c { 1 } else { d }).collect();
    let design = zero_one_invertible(&sums)?;
    Ok((design.matrix().clone(), flags))
}

/// Builds `2M - 1` subspaces of `R^M` with the requested dimensions (each in
/// `[1, M - 1]`) together with the recipe that certifies and inverts them.
///
/// The first `M` dimensions go to spans of the first orthonormal block via a
/// 0–1 design `A`; the remaining `M - 1` go to the second block via `B`, with
/// `(M - 1)`-dimensional requests realized as complements of one vector.
pub fn build_real_family(m: usize, dims: &[usize], rng: &mut RngState) -> Result<(RealFamily, Recipe)> {
    check_dims(m, dims, 2 * m - 1)?;
    let stacked = stacked_orthobases(m, 2, rng)?;
    let vectors: Vec<Vector> = stacked.vectors()[..2 * m - 1].to_vec();
    let frame = Frame::with_blocks(m, vectors, vec![0..m, m..2 * m - 1])?;
    if binomial(frame.len(), m) <= SPARK_CAP && !is_full_spark(&frame, DEFAULT_TOL)? {
        return Err(domain("base frame is not full spark"));
    }

    let design_a = zero_one_invertible(&dims[..m])?.matrix().clone();
    let (design_b, flags_b) = secondary_block_design(m, &dims[m..])?;

    let mut index_sets = Vec::with_capacity(2 * m - 1);
    let mut complement = Vec::with_capacity(2 * m - 1);
    for k in 0..m {
        index_sets.push(design_a.support(k));
        complement.push(false);
    }
    for k in 0..m - 1 {
        index_sets.push(design_b.support(k).into_iter().map(|z| z + m).collect());
        complement.push(flags_b[k]);
    }
    let recipe = Recipe { frame, index_sets, complement, design_a, design_b };
    let family = recipe.family()?;
    debug_assert_eq!(family.dims(), dims);
    Ok((family, recipe))
}

fn random_unitary(m: usize, rng: &mut RngState) -> Result<Vec<DVector<Complex64>>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let gs: Vec<DVector<Complex64>> = (0..m)
        .map(|_| DVector::from_fn(m, |_, _| Complex64::new(rng.gaussian() * scale, rng.gaussian() * scale)))
        .collect();
    orthonormalize(&gs, DEFAULT_TOL)
}

/// `4M - 3` subspaces of `C^M`: rows of four random unitaries (all of the
/// first, `M - 1` of each other one) grouped by 0–1 designs per block.
///
/// There is no certificate for this construction; injectivity is only
/// checked empirically.
pub fn build_complex_family(m: usize, dims: &[usize], rng: &mut RngState) -> Result<ComplexFamily> {
    check_dims(m, dims, 4 * m - 3)?;
    let mut subspaces = Vec::with_capacity(4 * m - 3);

    let first = random_unitary(m, rng)?;
    let design_a = zero_one_invertible(&dims[..m])?;
    for k in 0..m {
        let vs: Vec<DVector<Complex64>> = design_a.matrix().support(k).iter().map(|&z| first[z].clone()).collect();
        subspaces.push(Subspace::from_orthonormal(m, vs)?);
    }
    for block in 0..3 {
        let rows: Vec<DVector<Complex64>> = random_unitary(m, rng)?.into_iter().take(m - 1).collect();
        let lo = m + block * (m - 1);
        let (design, flags) = secondary_block_design(m, &dims[lo..lo + m - 1])?;
        for k in 0..m - 1 {
            let support = design.support(k);
            if flags[k] {
                subspaces.push(Subspace::complement_of(m, &rows[support[0]])?);
            } else {
                let vs: Vec<DVector<Complex64>> = support.iter().map(|&z| rows[z].clone()).collect();
                subspaces.push(Subspace::from_orthonormal(m, vs)?);
            }
        }
    }
    SubspaceFamily::new(m, subspaces)
}

/// Hyperplanes orthogonal to the vectors of a random full-spark Parseval
/// frame of `N > M` vectors with no two vectors orthogonal.
pub fn build_hyperplane_family(m: usize, n: usize, rng: &mut RngState) -> Result<HyperplaneFamily> {
    if m < 2 {
        return Err(domain("ambient dimension must be at least 2"));
    }
    if n <= m {
        return Err(domain(format!(
            "need more than M = {} vectors; a Parseval frame of {} vectors is an orthonormal basis",
            m, n
        )));
    }
    for _ in 0..HYPERPLANE_BUDGET {
        let g = DMatrix::<f64>::from_fn(m, n, |_, _| rng.gaussian());
        let s = &g * g.transpose();
        let eig = s.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
            continue;
        }
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let phi = inv_sqrt * g;
        let vectors: Vec<Vector> = (0..n).map(|j| phi.column(j).into_owned()).collect();
        let frame = Frame::new(m, vectors)?;

        let min_cos = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (a, b) = (&frame.vectors()[i], &frame.vectors()[j]);
                a.dot(b).abs() / (a.norm() * b.norm())
            })
            .fold(f64::INFINITY, f64::min);
        if min_cos <= 1e-6 {
            continue;
        }
        if binomial(n, m) <= SPARK_CAP && !is_full_spark(&frame, DEFAULT_TOL)? {
            continue;
        }
        return HyperplaneFamily::from_parseval_frame(&frame);
    }
    Err(Error::BudgetExhausted(HYPERPLANE_BUDGET))
}

/// Five vectors in `R^3`: equally spaced on a circle of radius `sqrt(2/5)`
/// lifted to height `1/sqrt(5)`. A full-spark Parseval frame.
pub fn r3_parseval_example() -> Frame {
    let r = (2.0f64 / 5.0).sqrt();
    let z = 1.0 / 5.0f64.sqrt();
    let vectors = (0..5)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
            Vector::from_column_slice(&[r * t.cos(), r * t.sin(), z])
        })
        .collect();
    Frame::new(3, vectors).expect("constant frame is well formed")
}

/// The five-subspace family in `R^3` that allows phase retrieval while its
/// orthogonal complements do not.
#[derive(Debug, Clone)]
pub struct R3Example {
    pub family: RealFamily,
    pub recipe: Recipe,
    pub complements: RealFamily,
    /// The two orthonormal bases `phi` and `psi` (six vectors, full spark).
    pub bases: Frame,
}

/// With orthonormal bases `phi`, `psi` of `R^3` whose union is full spark:
/// `W1 = span{phi1, phi3}`, `W2 = span{phi2, phi3}`, `W3 = span{phi3}`,
/// `W4 = span{psi1}`, `W5 = span{psi2}`.
pub fn r3_counterexample_family(rng: &mut RngState) -> Result<R3Example> {
    let bases = stacked_orthobases(3, 2, rng)?;
    let v = bases.vectors();
    let (phi, psi) = (&v[..3], &v[3..]);
    let frame = Frame::with_blocks(
        3,
        vec![phi[0].clone(), phi[1].clone(), phi[2].clone(), psi[0].clone(), psi[1].clone()],
        vec![0..3, 3..5],
    )?;
    let index_sets = vec![vec![0, 2], vec![1, 2], vec![2], vec![3], vec![4]];
    let design_a = BinaryMatrix::from_index_sets(3, &[vec![0, 2], vec![1, 2], vec![2]])?;
    let design_b = BinaryMatrix::identity(2);
    let recipe = Recipe { frame, index_sets, complement: vec![false; 5], design_a, design_b };
    let family = recipe.family()?;

    let span = |vs: &[&Vector]| Subspace::from_orthonormal(3, vs.iter().map(|&x| x.clone()).collect());
    let complements = SubspaceFamily::new(
        3,
        vec![
            span(&[&phi[1]])?,
            span(&[&phi[0]])?,
            span(&[&phi[0], &phi[1]])?,
            span(&[&psi[1], &psi[2]])?,
            span(&[&psi[0], &psi[2]])?,
        ],
    )?;
    Ok(R3Example { family, recipe, complements, bases })
}
