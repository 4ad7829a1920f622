//! Measurement map, lifted operator, injectivity certificates and
//! refutation witnesses.

mod lift;
mod search;
mod sampling;

pub use lift::{
    lift, lift_null_space, lift_operator, pencil_witness, rank12_witness_search, unlift, witness_to_pair,
    LiftOperator, SpectralPair, WitnessMatrix, WitnessStrategy,
};
pub use sampling::{
    adapted_basis, empirical_distinguishability, perturb_family, random_basis_complement_check,
    random_basis_disproof,
};
pub use search::{orthogonal_pair_search, stability_margin};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::family::{HyperplaneFamily, RealFamily, Recipe, Scalar, SubspaceFamily};
use crate::frames::{has_complement_property, is_full_spark, ComplementReport, Frame, COMPLEMENT_CAP};
use crate::linalg::{Vector, DEFAULT_TOL};

/// Squared projection norms `||P_n x||^2`, one per subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    /// Values within `-tol` of zero are clamped; more negative ones are rejected.
    pub fn new(values: Vec<f64>, tol: f64) -> Result<Self> {
        let mut values = values;
        for v in values.iter_mut() {
            if !v.is_finite() || *v < -tol {
                return Err(crate::error::domain(format!("invalid measurement value {}", v)));
            }
            *v = v.max(0.0);
        }
        Ok(MeasurementVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `A(x)(n) = ||P_n x||^2`.
pub fn measure<T: Scalar>(family: &SubspaceFamily<T>, x: &DVector<T>) -> Result<MeasurementVector> {
    Ok(MeasurementVector { values: family.measure(x)? })
}

/// Evidence that a real family is injective on `R^M / {+-1}` up to global sign, or not.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Both designs invertible and the base frame has the complement property.
    Structured { det_a: i128, det_b: i128, complement: ComplementReport },
    /// Hyperplanes whose weighted complements resolve the identity, with
    /// unit normals having the complement property.
    Hyperplane { complement: ComplementReport },
    /// The lifted operator is injective, so its null space has no rank-1 or
    /// rank-2 element.
    LiftInjective,
    /// A concrete counterexample to injectivity.
    Refuted(Refutation),
    /// Heuristic searches found nothing; not a proof.
    Empirical { note: String },
    /// Neither certified nor refuted.
    Uncertified { reason: String },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Structured { .. } => "structured",
            Certificate::Hyperplane { .. } => "hyperplane",
            Certificate::LiftInjective => "lift-injective",
            Certificate::Refuted(_) => "refuted",
            Certificate::Empirical { .. } => "empirical",
            Certificate::Uncertified { .. } => "uncertified",
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Structured { .. } | Certificate::Hyperplane { .. } | Certificate::LiftInjective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Refutation {
    /// Two signals, not equal up to sign, with equal measurements.
    Pair { x: Vector, y: Vector },
    /// A nonzero vector every subspace annihilates.
    Annihilated { x: Vector },
    /// A rank ≤ 2 element of the lifted null space.
    Matrix(WitnessMatrix),
}

/// Certifies the family described by `recipe` when both designs are
/// invertible (exact integer determinants) and the base frame has the
/// complement property.
pub fn certify_structured(recipe: &Recipe) -> Certificate {
    if let Err(e) = recipe.validate() {
        return Certificate::Uncertified { reason: format!("inconsistent recipe: {}", e) };
    }
    let det_a = recipe.design_a.determinant();
    let det_b = recipe.design_b.determinant();
    if det_a == 0 {
        return Certificate::Uncertified { reason: "design A is singular".into() };
    }
    if det_b == 0 {
        return Certificate::Uncertified { reason: "design B is singular".into() };
    }
    let complement = if recipe.frame.len() <= COMPLEMENT_CAP {
        match has_complement_property(&recipe.frame) {
            Ok(r) => r,
            Err(e) => return Certificate::Uncertified { reason: e.to_string() },
        }
    } else {
        // Full spark with 2M-1 vectors implies the complement property.
        match is_full_spark(&recipe.frame, DEFAULT_TOL) {
            Ok(true) => ComplementReport { holds: true, failing_subset: None, borderline: false },
            Ok(false) => {
                return Certificate::Uncertified {
                    reason: "base frame too large for the complement check and not full spark".into(),
                }
            }
            Err(e) => return Certificate::Uncertified { reason: e.to_string() },
        }
    };
    if !complement.holds {
        return Certificate::Uncertified { reason: "base frame lacks the complement property".into() };
    }
    Certificate::Structured { det_a, det_b, complement }
}

/// Certifies a hyperplane family: the weights recover `||x||^2`, so the
/// measurements determine the moduli against the unit normals, and those
/// determine `x` up to sign when the normals have the complement property.
pub fn certify_hyperplanes(hf: &HyperplaneFamily) -> Certificate {
    if let Err(e) = hf.validate() {
        return Certificate::Uncertified { reason: e.to_string() };
    }
    let frame = match Frame::new(hf.family.ambient(), hf.unit_normals()) {
        Ok(f) => f,
        Err(e) => return Certificate::Uncertified { reason: e.to_string() },
    };
    let complement = if frame.len() <= COMPLEMENT_CAP {
        match has_complement_property(&frame) {
            Ok(r) => r,
            Err(e) => return Certificate::Uncertified { reason: e.to_string() },
        }
    } else {
        match is_full_spark(&frame, DEFAULT_TOL) {
            Ok(true) if frame.len() >= 2 * frame.dim() - 1 => {
                ComplementReport { holds: true, failing_subset: None, borderline: false }
            }
            Ok(_) => return Certificate::Uncertified { reason: "normals too many for the complement check".into() },
            Err(e) => return Certificate::Uncertified { reason: e.to_string() },
        }
    };
    if !complement.holds {
        return Certificate::Uncertified { reason: "unit normals lack the complement property".into() };
    }
    Certificate::Hyperplane { complement }
}

/// Checks that `(x, y)` refutes injectivity: both nonzero, not equal up to
/// sign, measurements equal within `tol * max(||x||^2, ||y||^2)`.
pub fn is_witness_pair(family: &RealFamily, x: &Vector, y: &Vector, tol: f64) -> Result<bool> {
    let mx = family.measure(x)?;
    let my = family.measure(y)?;
    let scale = x.norm_squared().max(y.norm_squared());
    if x.norm() == 0.0 || y.norm() == 0.0 {
        return Ok(false);
    }
    let distinct = (x - y).norm().min((x + y).norm()) > 1e-8 * scale.sqrt();
    let gap = mx.iter().zip(&my).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(distinct && gap <= tol * scale)
}

pub(crate) fn real_only<T: Scalar>(family: &SubspaceFamily<T>) -> Result<()> {
    match family.field() {
        crate::family::Field::Real => Ok(()),
        crate::family::Field::Complex => Err(Error::Unsupported("complex families".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::BinaryMatrix;
    use crate::family::{build_hyperplane_family, build_real_family, r3_parseval_example, Subspace};
    use crate::rng::RngState;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn measure_examples() {
        let fam = SubspaceFamily::new(2, vec![Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap()]).unwrap();
        assert_eq!(measure(&fam, &v(&[1.0, 0.0])).unwrap().values(), &[1.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((measure(&fam, &v(&[s, s])).unwrap().values()[0] - 0.5).abs() < 1e-15);
        assert!(matches!(measure(&fam, &v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn measurement_is_sign_invariant() {
        let (fam, _) = build_real_family(4, &[3, 2, 2, 1, 2, 2, 1], &mut RngState::new(7)).unwrap();
        let mut rng = RngState::new(70);
        for _ in 0..20 {
            let x = rng.gaussian_vector(4);
            assert_eq!(measure(&fam, &x).unwrap(), measure(&fam, &-&x).unwrap());
        }
    }

    #[test]
    fn structured_pipeline_certifies() {
        let (_, recipe) = build_real_family(3, &[2, 1, 1, 1, 1], &mut RngState::new(1)).unwrap();
        let cert = certify_structured(&recipe);
        assert_eq!(cert.kind(), "structured");
    }

    #[test]
    fn singular_design_not_certified() {
        let (_, mut recipe) = build_real_family(3, &[1, 1, 1, 1, 1], &mut RngState::new(1)).unwrap();
        recipe.design_a = BinaryMatrix::new(vec![vec![1, 0, 0], vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        recipe.index_sets[..3].clone_from_slice(&[vec![0], vec![0], vec![2]]);
        let cert = certify_structured(&recipe);
        assert!(matches!(cert, Certificate::Uncertified { ref reason } if reason.contains("singular")));
    }

    #[test]
    fn duplicate_base_vectors_not_certified() {
        let (_, mut recipe) = build_real_family(3, &[1, 1, 1, 1, 1], &mut RngState::new(1)).unwrap();
        let vs = recipe.frame.vectors();
        let forged = vec![vs[0].clone(), vs[1].clone(), vs[2].clone(), vs[0].clone(), vs[1].clone()];
        recipe.frame = Frame::with_blocks(3, forged, vec![0..3, 3..5]).unwrap();
        let cert = certify_structured(&recipe);
        assert!(matches!(cert, Certificate::Uncertified { ref reason } if reason.contains("complement")));
    }

    #[test]
    fn hyperplane_certificates() {
        let hf = HyperplaneFamily::from_parseval_frame(&r3_parseval_example()).unwrap();
        assert_eq!(certify_hyperplanes(&hf).kind(), "hyperplane");
        let hf = build_hyperplane_family(4, 7, &mut RngState::new(3)).unwrap();
        assert!(certify_hyperplanes(&hf).is_certified());
        // Too few normals for the complement property.
        let few = build_hyperplane_family(3, 4, &mut RngState::new(3)).unwrap();
        assert_eq!(certify_hyperplanes(&few).kind(), "uncertified");
    }
}
