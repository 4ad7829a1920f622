//! Recovering a real signal up to sign from its projection norms.

use crate::designs::BinaryMatrix;
use crate::error::{domain, Error, Result};
use crate::family::{HyperplaneFamily, RealFamily, Recipe};
use crate::frames::{best_conditioned_basis, sign_recovery_with_basis, Frame, SignTolerance};
use crate::linalg::Vector;
use crate::verify::MeasurementVector;

/// Negative squared moduli down to `-CLAMP_TOL * ||x||^2` are rounding noise.
const CLAMP_TOL: f64 = 1e-9;
/// Largest accepted relative mismatch when re-measuring the result.
pub const RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// The recovered signal; its first nonzero coordinate is nonnegative.
    pub signal: Vector,
    /// Largest measurement mismatch relative to the largest measurement.
    pub residual: f64,
}

/// Solves `design * out = rhs` exactly up to floating products, using the
/// integer adjugate and determinant.
fn solve_design(design: &BinaryMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let det = design.determinant();
    if det == 0 {
        return Err(domain("design is singular"));
    }
    let adj = design.adjugate();
    Ok(adj
        .iter()
        .map(|row| row.iter().zip(rhs).map(|(&a, &b)| a as f64 * b).sum::<f64>() / det as f64)
        .collect())
}

fn clamp_squares(values: &mut [f64], norm2: f64, tol: f64) -> Result<()> {
    let floor = tol * norm2.max(0.0);
    for v in values.iter_mut() {
        if *v < -floor {
            return Err(Error::Inconsistent { residual: -*v / norm2.max(f64::MIN_POSITIVE) });
        }
        *v = v.max(0.0);
    }
    Ok(())
}

/// Flips `x` so its first coordinate that is not negligible is nonnegative.
fn canonical_sign(mut x: Vector) -> Vector {
    let cut = 1e-12 * x.amax();
    if let Some(first) = x.iter().find(|v| v.abs() > cut) {
        if *first < 0.0 {
            x.neg_mut();
        }
    }
    x
}

fn finish(family: &RealFamily, meas: &[f64], x: Vector, tol: f64) -> Result<ReconstructionResult> {
    let x = canonical_sign(x);
    let again = family.measure(&x)?;
    let scale = meas.iter().cloned().fold(x.norm_squared(), f64::max);
    let residual = if scale > 0.0 {
        again.iter().zip(meas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    } else {
        0.0
    };
    if residual > tol {
        return Err(Error::Inconsistent { residual });
    }
    Ok(ReconstructionResult { signal: x, residual })
}

fn check_len(meas: &MeasurementVector, n: usize) -> Result<()> {
    if meas.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: meas.len() });
    }
    Ok(())
}

/// Inverts a `2M - 1` family built from a recipe: the two 0–1 systems give
/// the squared moduli against the base frame, and sign enumeration on the
/// first orthonormal block finishes the job.
pub fn reconstruct(recipe: &Recipe, meas: &MeasurementVector) -> Result<ReconstructionResult> {
    reconstruct_with_tolerance(recipe, meas, RESIDUAL_TOL)
}

/// [`reconstruct`] accepting relative mismatches up to `tol` (at least the
/// default), for measurements known to be noisy.
pub fn reconstruct_with_tolerance(recipe: &Recipe, meas: &MeasurementVector, tol: f64) -> Result<ReconstructionResult> {
    let tol = tol.max(RESIDUAL_TOL);
    let clamp = if tol > RESIDUAL_TOL { tol } else { CLAMP_TOL };
    let family = recipe.family()?;
    let m = recipe.ambient();
    check_len(meas, 2 * m - 1)?;
    let values = meas.values();

    let mut first = solve_design(&recipe.design_a, &values[..m])?;
    let norm2: f64 = first.iter().sum();
    clamp_squares(&mut first, norm2, clamp)?;
    let norm2: f64 = first.iter().sum();

    let rhs: Vec<f64> = (0..m - 1)
        .map(|k| if recipe.complement[m + k] { norm2 - values[m + k] } else { values[m + k] })
        .collect();
    let mut second = solve_design(&recipe.design_b, &rhs)?;
    clamp_squares(&mut second, norm2, clamp)?;

    let moduli: Vec<f64> = first.iter().chain(&second).map(|v| v.sqrt()).collect();
    let basis: Vec<usize> = (0..m).collect();
    let x = sign_recovery_with_basis(&recipe.frame, &basis, &moduli, SignTolerance { residual: tol })?;
    finish(&family, values, x, tol)
}

/// Inverts a hyperplane family: the weighted sum of the measurements is
/// `||x||^2`, each measurement then gives one squared modulus against a unit
/// normal, and signs are enumerated on the best-conditioned normals.
pub fn reconstruct_hyperplanes(hf: &HyperplaneFamily, meas: &MeasurementVector) -> Result<ReconstructionResult> {
    hf.validate()?;
    let n = hf.family.len();
    check_len(meas, n)?;
    let values = meas.values();
    let b: f64 = hf.weights.iter().sum::<f64>() - 1.0;
    let norm2: f64 = hf.weights.iter().zip(values).map(|(a, v)| a / b * v).sum();
    let max_meas = values.iter().cloned().fold(0.0, f64::max);
    if norm2 < -CLAMP_TOL * max_meas {
        return Err(Error::Inconsistent { residual: -norm2 / max_meas.max(f64::MIN_POSITIVE) });
    }
    let norm2 = norm2.max(0.0);

    let mut squares: Vec<f64> = values.iter().map(|v| norm2 - v).collect();
    clamp_squares(&mut squares, norm2, CLAMP_TOL)?;
    let moduli: Vec<f64> = squares.iter().map(|v| v.sqrt()).collect();

    let frame = Frame::new(hf.family.ambient(), hf.unit_normals())?;
    let basis = best_conditioned_basis(&frame)?;
    let x = sign_recovery_with_basis(&frame, &basis, &moduli, SignTolerance::default())?;
    finish(&hf.family, values, x, RESIDUAL_TOL)
}
