//! Subspaces, subspace families and the construction recipes that certify them.

mod build;
mod extend;

pub use build::{
    build_complex_family, build_hyperplane_family, build_real_family, r3_counterexample_family,
    r3_parseval_example, R3Example,
};
pub use extend::extend_to_hyperplanes;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::designs::BinaryMatrix;
use crate::error::{domain, Error, Result};
use crate::frames::Frame;
use crate::linalg::{frame_operator, orthonormalize, Vector, DEFAULT_TOL};

/// Scalar field of a family: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const FIELD: Field;
    fn from_parts(re: f64, im: f64) -> Self;
    fn parts(self) -> (f64, f64);
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

const ORTHO_TOL: f64 = 1e-10;

/// A proper nonzero subspace `W` of the ambient space.
///
/// Stored either by an orthonormal basis, or (`complement_encoded`) as the
/// orthogonal complement of one unit vector, in which case `vectors` holds
/// that single normal and the subspace has dimension `M - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Scalar> {
    ambient: usize,
    vectors: Vec<DVector<T>>,
    complement_encoded: bool,
}

pub type RealSubspace = Subspace<f64>;
pub type RealFamily = SubspaceFamily<f64>;
pub type ComplexFamily = SubspaceFamily<Complex64>;

impl<T: Scalar> Subspace<T> {
    /// Span of `vectors`, orthonormalized in order.
    pub fn span(ambient: usize, vectors: &[DVector<T>]) -> Result<Self> {
        let basis = orthonormalize(vectors, DEFAULT_TOL)?;
        Subspace::from_orthonormal(ambient, basis)
    }

    /// Wraps an orthonormal basis (checked to 1e-10).
    pub fn from_orthonormal(ambient: usize, basis: Vec<DVector<T>>) -> Result<Self> {
        check_orthonormal(ambient, &basis)?;
        if basis.is_empty() || basis.len() >= ambient {
            return Err(domain(format!(
                "subspace dimension {} must lie in [1, {}]",
                basis.len(),
                ambient.saturating_sub(1)
            )));
        }
        Ok(Subspace { ambient, vectors: basis, complement_encoded: false })
    }

    /// The hyperplane orthogonal to `normal` (normalized here unless already unit).
    pub fn complement_of(ambient: usize, normal: &DVector<T>) -> Result<Self> {
        if ambient < 2 {
            return Err(domain("hyperplanes need ambient dimension at least 2"));
        }
        if normal.len() != ambient {
            return Err(Error::DimensionMismatch { expected: ambient, got: normal.len() });
        }
        let n = normal.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(domain("normal vector must be nonzero and finite"));
        }
        // Vectors already unit to rounding are kept as given, so stored normals
        // survive a write/parse cycle bit for bit.
        let unit = if (n - 1.0).abs() <= 4.0 * f64::EPSILON { normal.clone() } else { normal.unscale(n) };
        Ok(Subspace { ambient, vectors: vec![unit], complement_encoded: true })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        if self.complement_encoded {
            self.ambient - 1
        } else {
            self.vectors.len()
        }
    }

    pub fn is_complement_encoded(&self) -> bool {
        self.complement_encoded
    }

    /// Stored vectors: the basis, or the single normal when complement-encoded.
    pub fn stored_vectors(&self) -> &[DVector<T>] {
        &self.vectors
    }

    /// The unit normal of a complement-encoded subspace.
    pub fn normal(&self) -> Option<&DVector<T>> {
        self.complement_encoded.then(|| &self.vectors[0])
    }

    /// An orthonormal basis of `W` itself.
    pub fn basis(&self) -> Vec<DVector<T>> {
        if self.complement_encoded {
            let full = complete_basis(&self.vectors, self.ambient);
            full[1..].to_vec()
        } else {
            self.vectors.clone()
        }
    }

    /// Orthonormal basis of the orthogonal complement of `W`.
    pub fn complement_basis(&self) -> Vec<DVector<T>> {
        if self.complement_encoded {
            self.vectors.clone()
        } else {
            let full = complete_basis(&self.vectors, self.ambient);
            full[self.vectors.len()..].to_vec()
        }
    }

    /// `W^perp` as a subspace.
    pub fn orthogonal_complement(&self) -> Subspace<T> {
        if self.complement_encoded {
            Subspace { ambient: self.ambient, vectors: self.vectors.clone(), complement_encoded: false }
        } else {
            Subspace { ambient: self.ambient, vectors: self.complement_basis(), complement_encoded: false }
        }
    }

    /// Orthogonal projection onto `W`.
    pub fn projection(&self) -> DMatrix<T> {
        let p = frame_operator(&self.vectors, self.ambient);
        if self.complement_encoded {
            DMatrix::<T>::identity(self.ambient, self.ambient) - p
        } else {
            p
        }
    }

    /// `||P x||^2`, via `||x||^2 - |<x, n>|^2` when complement-encoded.
    pub fn measure(&self, x: &DVector<T>) -> f64 {
        let stored: f64 = self.vectors.iter().map(|v| v.dotc(x).modulus_squared()).sum();
        let value = if self.complement_encoded { x.norm_squared() - stored } else { stored };
        value.max(0.0)
    }
}

fn check_orthonormal<T: Scalar>(ambient: usize, basis: &[DVector<T>]) -> Result<()> {
    if let Some(bad) = basis.iter().find(|v| v.len() != ambient) {
        return Err(Error::DimensionMismatch { expected: ambient, got: bad.len() });
    }
    for (i, u) in basis.iter().enumerate() {
        for (j, w) in basis.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            let err = (u.dotc(w) - T::from_real(target)).modulus();
            if !(err <= ORTHO_TOL) {
                return Err(domain(format!("basis is not orthonormal (error {:.2e})", err)));
            }
        }
    }
    Ok(())
}

/// Extends an orthonormal set to an orthonormal basis of the whole space
/// using the standard basis vectors as candidates.
pub(crate) fn complete_basis<T: Scalar>(start: &[DVector<T>], ambient: usize) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = start.to_vec();
    // Try the standard vectors in order of how far they stick out of the span.
    let mut candidates: Vec<usize> = (0..ambient).collect();
    while out.len() < ambient && !candidates.is_empty() {
        let mut best: Option<(usize, f64, DVector<T>)> = None;
        for (pos, &i) in candidates.iter().enumerate() {
            let mut w = DVector::<T>::from_fn(ambient, |r, _| if r == i { T::one() } else { T::zero() });
            for _ in 0..2 {
                for q in &out {
                    let c = q.dotc(&w);
                    w.axpy(-c, q, T::one());
                }
            }
            let n = w.norm();
            if best.as_ref().map_or(true, |(_, b, _)| n > *b) {
                best = Some((pos, n, w));
            }
        }
        let (pos, n, w) = best.expect("candidates remain");
        out.push(w.unscale(n));
        candidates.remove(pos);
    }
    out
}

/// An ordered family of subspaces of one ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFamily<T: Scalar> {
    ambient: usize,
    subspaces: Vec<Subspace<T>>,
}

impl<T: Scalar> SubspaceFamily<T> {
    pub fn new(ambient: usize, subspaces: Vec<Subspace<T>>) -> Result<Self> {
        if ambient < 2 {
            return Err(domain("ambient dimension must be at least 2"));
        }
        if let Some(bad) = subspaces.iter().find(|s| s.ambient != ambient) {
            return Err(Error::DimensionMismatch { expected: ambient, got: bad.ambient });
        }
        Ok(SubspaceFamily { ambient, subspaces })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn subspaces(&self) -> &[Subspace<T>] {
        &self.subspaces
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(Subspace::dim).collect()
    }

    /// `[||P_n x||^2]_n`.
    pub fn measure(&self, x: &DVector<T>) -> Result<Vec<f64>> {
        if x.len() != self.ambient {
            return Err(Error::DimensionMismatch { expected: self.ambient, got: x.len() });
        }
        Ok(self.subspaces.iter().map(|s| s.measure(x)).collect())
    }

    /// Family of orthogonal complements `W_n^perp`.
    pub fn complements(&self) -> SubspaceFamily<T> {
        SubspaceFamily {
            ambient: self.ambient,
            subspaces: self.subspaces.iter().map(Subspace::orthogonal_complement).collect(),
        }
    }

    /// Keeps the subspaces with the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<SubspaceFamily<T>> {
        let subspaces = indices
            .iter()
            .map(|&i| self.subspaces.get(i).cloned().ok_or_else(|| domain(format!("index {} out of range", i))))
            .collect::<Result<Vec<_>>>()?;
        SubspaceFamily::new(self.ambient, subspaces)
    }
}

/// Construction data of a `2M - 1` family: the base frame (two orthonormal
/// blocks of sizes `M` and `M - 1`), the frame indices grouped into each
/// subspace, the complement flags, and the two 0–1 designs.
///
/// Subspace `k < M` is spanned by block-one vectors; subspace `k >= M` by
/// block-two vectors, or when flagged is the complement of a single
/// block-two vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub frame: Frame,
    pub index_sets: Vec<Vec<usize>>,
    pub complement: Vec<bool>,
    pub design_a: BinaryMatrix,
    pub design_b: BinaryMatrix,
}

impl Recipe {
    pub fn ambient(&self) -> usize {
        self.frame.dim()
    }

    /// Checks shapes and that the designs match the index sets.
    pub fn validate(&self) -> Result<()> {
        let m = self.ambient();
        if m < 2 || self.frame.len() != 2 * m - 1 {
            return Err(domain(format!("recipe frame must have 2M-1 = {} vectors", 2 * m - 1)));
        }
        if self.index_sets.len() != 2 * m - 1 || self.complement.len() != 2 * m - 1 {
            return Err(domain("recipe must describe 2M-1 subspaces"));
        }
        if self.design_a.size() != m || self.design_b.size() != m - 1 {
            return Err(domain("design sizes must be M and M-1"));
        }
        for (k, set) in self.index_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(domain(format!("subspace {} has an empty index set", k + 1)));
            }
            let (lo, hi, design, row) =
                if k < m { (0, m, &self.design_a, k) } else { (m, 2 * m - 1, &self.design_b, k - m) };
            if set.iter().any(|&i| i < lo || i >= hi) {
                return Err(domain(format!("subspace {} uses vectors outside its block", k + 1)));
            }
            let support: Vec<usize> = design.support(row).iter().map(|z| z + lo).collect();
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted != support {
                return Err(domain(format!("design row for subspace {} does not match its index set", k + 1)));
            }
            if self.complement[k] && (k < m || set.len() != 1) {
                return Err(domain(format!("subspace {} cannot be complement-encoded", k + 1)));
            }
        }
        Ok(())
    }

    /// The subspace family this recipe describes.
    pub fn family(&self) -> Result<RealFamily> {
        self.validate()?;
        let m = self.ambient();
        let subspaces = self
            .index_sets
            .iter()
            .zip(&self.complement)
            .map(|(set, &comp)| {
                if comp {
                    Subspace::complement_of(m, &self.frame.vectors()[set[0]])
                } else {
                    let vs: Vec<Vector> = set.iter().map(|&i| self.frame.vectors()[i].clone()).collect();
                    Subspace::from_orthonormal(m, vs)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SubspaceFamily::new(m, subspaces)
    }

    pub fn dims(&self) -> Vec<usize> {
        let m = self.ambient();
        self.index_sets
            .iter()
            .zip(&self.complement)
            .map(|(s, &c)| if c { m - 1 } else { s.len() })
            .collect()
    }
}

/// Hyperplanes `W_n = (span phi_n)^perp` with `sum_n a_n phi_n phi_n^T / ||phi_n||^2 = I`
/// for weights summing to something other than one.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneFamily {
    pub family: RealFamily,
    /// Frame vectors `phi_n` (not normalized).
    pub normals: Vec<Vector>,
    pub weights: Vec<f64>,
}

impl HyperplaneFamily {
    /// Hyperplane family from a Parseval frame: `a_n = ||phi_n||^2`.
    pub fn from_parseval_frame(frame: &Frame) -> Result<Self> {
        let m = frame.dim();
        let normals = frame.vectors().to_vec();
        let weights: Vec<f64> = normals.iter().map(|v| v.norm_squared()).collect();
        let subspaces = normals.iter().map(|v| Subspace::complement_of(m, v)).collect::<Result<Vec<_>>>()?;
        let hf = HyperplaneFamily { family: SubspaceFamily::new(m, subspaces)?, normals, weights };
        hf.validate()?;
        Ok(hf)
    }

    /// Checks the resolution of the identity and the weight condition.
    pub fn validate(&self) -> Result<()> {
        let m = self.family.ambient();
        let n = self.family.len();
        if self.normals.len() != n || self.weights.len() != n {
            return Err(domain("hyperplane family arrays have mismatched lengths"));
        }
        let mut s = DMatrix::<f64>::zeros(m, m);
        for (phi, a) in self.normals.iter().zip(&self.weights) {
            s += phi * phi.transpose() * (a / phi.norm_squared());
        }
        let err = crate::linalg::max_abs(&(s - DMatrix::<f64>::identity(m, m)));
        if err > 1e-10 {
            return Err(domain(format!("weighted projections do not resolve the identity (error {:.2e})", err)));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() <= 1e-6 {
            return Err(domain("weights must not sum to one"));
        }
        Ok(())
    }

    pub fn unit_normals(&self) -> Vec<Vector> {
        self.normals.iter().map(|v| v.normalize()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn measure_basic() {
        let w = Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap();
        assert_eq!(w.measure(&v(&[1.0, 0.0])), 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.measure(&v(&[s, s])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn complement_encoding_agrees_with_explicit_basis() {
        let n = v(&[1.0, 2.0, 2.0]);
        let c = Subspace::complement_of(3, &n).unwrap();
        assert_eq!(c.dim(), 2);
        let explicit = Subspace::from_orthonormal(3, c.basis()).unwrap();
        let x = v(&[0.3, -1.0, 0.7]);
        assert!((c.measure(&x) - explicit.measure(&x)).abs() < 1e-14);
        assert!((c.projection() - explicit.projection()).amax() < 1e-14);
    }

    #[test]
    fn dimension_bounds_enforced() {
        let e = |i: usize| Vector::from_fn(2, |r, _| if r == i { 1.0 } else { 0.0 });
        assert!(Subspace::from_orthonormal(2, vec![e(0), e(1)]).is_err());
        assert!(Subspace::<f64>::from_orthonormal(2, vec![]).is_err());
    }

    #[test]
    fn complex_complement_basis_is_orthonormal() {
        let n = DVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0), Complex64::new(-1.0, 0.5)]);
        let s = Subspace::complement_of(3, &n).unwrap();
        let b = s.basis();
        assert_eq!(b.len(), 2);
        check_orthonormal(3, &b).unwrap();
        for w in &b {
            assert!(s.normal().unwrap().dotc(w).modulus() < 1e-14);
        }
    }
}
