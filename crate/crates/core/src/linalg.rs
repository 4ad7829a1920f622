//! Dense linear-algebra kernel shared by every other module.
//!
//! Rank and kernel decisions go through singular values (nalgebra's SVD);
//! orthonormalization is modified Gram–Schmidt with one reorthogonalization
//! pass so that input order is respected.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::rng::RngState;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative tolerance used for rank and kernel decisions unless a caller
/// supplies its own.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Real symmetric matrix, stored symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Symmetrizes `m` as `(m + m^T) / 2`.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(domain(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(domain("symmetric matrix has non-finite entries"));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymmetricMatrix(sym))
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix(Matrix::zeros(dim, dim))
    }

    /// `x x^T`.
    pub fn outer(x: &Vector) -> Self {
        SymmetricMatrix(x * x.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Hilbert–Schmidt inner product `Tr(A B)`.
    pub fn hs_inner(&self, other: &SymmetricMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Eigenpairs sorted by decreasing absolute eigenvalue.
    pub fn eigenpairs(&self) -> Vec<(f64, Vector)> {
        let eig = self.0.clone().symmetric_eigen();
        let mut pairs: Vec<(f64, Vector)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
        pairs
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// `a cos t + b sin t`.
    pub fn pencil(a: &SymmetricMatrix, b: &SymmetricMatrix, t: f64) -> SymmetricMatrix {
        SymmetricMatrix(&a.0 * t.cos() + &b.0 * t.sin())
    }
}

/// Orthonormalizes `vs` in order; fails if some vector is numerically in the
/// span of its predecessors. Works for real and complex vectors.
pub fn orthonormalize<T>(vs: &[DVector<T>], tol: f64) -> Result<Vec<DVector<T>>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let Some(first) = vs.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if let Some(bad) = vs.iter().find(|v| v.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: bad.len() });
    }
    let scale = vs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out: Vec<DVector<T>> = Vec::with_capacity(vs.len());
    for (index, v) in vs.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dotc(&w);
                w.axpy(-c, q, T::one());
            }
        }
        let residual = w.norm();
        if scale == 0.0 || residual <= tol * scale {
            return Err(Error::Dependency { index, residual });
        }
        w.unscale_mut(residual);
        out.push(w);
    }
    Ok(out)
}

/// Greedy completion: appends the vectors of `candidates` that are not (within
/// `tol`) in the span of what has been accepted so far. `start` must already be
/// orthonormal.
pub fn extend_orthonormal(start: Vec<Vector>, candidates: &[Vector], tol: f64) -> Vec<Vector> {
    let mut out = start;
    for c in candidates {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&w);
                w.axpy(-d, q, 1.0);
            }
        }
        let n = w.norm();
        if n > tol * c.norm().max(f64::MIN_POSITIVE) && n > 0.0 {
            out.push(w / n);
        }
    }
    out
}

/// Singular values in decreasing order. Empty matrices have none.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `tol` times the largest one.
pub fn numeric_rank(m: &Matrix, tol: f64) -> usize {
    numeric_rank_with_margin(m, tol).0
}

/// Rank plus a flag set when some singular-value ratio lies within a factor
/// of ten of the threshold, i.e. the decision is fragile.
pub fn numeric_rank_with_margin(m: &Matrix, tol: f64) -> (usize, bool) {
    let sv = singular_values(m);
    let Some(&top) = sv.first() else {
        return (0, false);
    };
    if top == 0.0 {
        return (0, false);
    }
    let mut rank = 0;
    let mut borderline = false;
    for s in &sv {
        let ratio = s / top;
        if ratio > tol {
            rank += 1;
        }
        if ratio > tol / 10.0 && ratio < tol * 10.0 {
            borderline = true;
        }
    }
    (rank, borderline)
}

/// Orthonormal basis of the numerical right kernel of `m`.
pub fn null_space(m: &Matrix, tol: f64) -> Vec<Vector> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 || m.iter().all(|&v| v == 0.0) {
        return (0..cols).map(|i| Vector::from_fn(cols, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    }
    // Pad wide matrices with zero rows so the SVD returns a full right basis.
    let padded = if m.nrows() < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut kernel: Vec<(f64, Vector)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * top)
        .map(|(i, &s)| (s, v_t.row(i).transpose().into_owned()))
        .collect();
    kernel.sort_by(|a, b| a.0.total_cmp(&b.0));
    kernel.into_iter().map(|(_, v)| v).collect()
}

/// Largest singular value.
pub fn operator_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Matrix whose rows are the given vectors.
pub fn rows_to_matrix(rows: &[&Vector], cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows.len(), cols);
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).copy_from(&r.transpose());
    }
    m
}

/// Uniformly random unit vector orthogonal to `span` in `R^dim`.
pub fn random_unit_in_complement(span: &[Vector], dim: usize, rng: &mut RngState) -> Result<Vector> {
    if dim == 0 {
        return Err(domain("ambient dimension must be positive"));
    }
    if let Some(bad) = span.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    if span.len() >= dim {
        return Err(domain(format!(
            "complement of {} vectors in R^{} is trivial",
            span.len(),
            dim
        )));
    }
    let basis = orthonormalize(span, DEFAULT_TOL)?;
    loop {
        let mut g = rng.gaussian_vector(dim);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&g);
                g.axpy(-c, q, 1.0);
            }
        }
        let n = g.norm();
        if n > 1e-6 {
            return Ok(g / n);
        }
    }
}

/// Orthonormal basis built by drawing each vector at random from the
/// orthogonal complement of its predecessors.
pub fn random_orthonormal_basis(dim: usize, rng: &mut RngState) -> Result<Vec<Vector>> {
    let mut basis: Vec<Vector> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let v = random_unit_in_complement(&basis, dim, rng)?;
        basis.push(v);
    }
    Ok(basis)
}

/// Solves `m x = b` for square nonsingular `m`.
pub fn solve(m: &Matrix, b: &Vector) -> Option<Vector> {
    m.clone().lu().solve(b)
}

/// `sum_i v_i v_i^H` as a dense matrix.
pub fn frame_operator<T>(vs: &[DVector<T>], dim: usize) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let mut s = DMatrix::<T>::zeros(dim, dim);
    for v in vs {
        s += v * v.adjoint();
    }
    s
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order; stops early
/// when `f` returns `false`. Returns `false` iff stopped early.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn orthonormalize_keeps_orthonormal_input() {
        let out = orthonormalize(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], 1e-12).unwrap();
        assert_eq!(out, vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }

    #[test]
    fn orthonormalize_hand_gram_schmidt() {
        let out = orthonormalize(&[v(&[1.0, 1.0]), v(&[1.0, 0.0])], 1e-12).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((&out[0] - v(&[s, s])).amax() < 1e-15);
        assert!((&out[1] - v(&[s, -s])).amax() < 1e-15);
    }

    #[test]
    fn orthonormalize_rejects_collinear() {
        let err = orthonormalize(&[v(&[1.0, 0.0]), v(&[2.0, 0.0])], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Dependency { index: 1, .. }));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numeric_rank(&Matrix::zeros(3, 3), DEFAULT_TOL), 0);
        let x = v(&[1.0, 2.0, 0.5]);
        let y = v(&[-1.0, 0.0, 3.0]);
        let d = &x * x.transpose() - &y * y.transpose();
        assert_eq!(numeric_rank(&d, DEFAULT_TOL), 2);
        let m = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(numeric_rank(&m, DEFAULT_TOL), 3);
    }

    #[test]
    fn null_space_examples() {
        assert!(null_space(&Matrix::identity(2, 2), DEFAULT_TOL).is_empty());
        let ns = null_space(&Matrix::from_row_slice(1, 2, &[1.0, 0.0]), DEFAULT_TOL);
        assert_eq!(ns.len(), 1);
        assert!(ns[0][0].abs() < 1e-15 && (ns[0][1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn null_space_of_rank_two_wide_matrix() {
        let mut rng = RngState::new(11);
        let a = Matrix::from_fn(3, 2, |_, _| rng.gaussian());
        let b = Matrix::from_fn(2, 4, |_, _| rng.gaussian());
        let m = &a * &b;
        let ns = null_space(&m, DEFAULT_TOL);
        assert_eq!(ns.len(), 2);
        let scale = operator_norm(&m);
        for (i, k) in ns.iter().enumerate() {
            assert!((&m * k).norm() <= DEFAULT_TOL * scale);
            assert!((k.norm() - 1.0).abs() < 1e-12);
            for k2 in &ns[i + 1..] {
                assert!(k.dot(k2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complement_sampling() {
        let mut rng = RngState::new(3);
        let e1 = v(&[1.0, 0.0]);
        let u = random_unit_in_complement(&[e1], 2, &mut rng).unwrap();
        assert!(u[0].abs() < 1e-15 && (u[1].abs() - 1.0).abs() < 1e-15);
        let w = random_unit_in_complement(&[], 3, &mut rng).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let full = [v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        assert!(random_unit_in_complement(&full, 3, &mut rng).is_err());
    }

    #[test]
    fn subsets_enumerated() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| {
            seen.push(s.to_vec());
            true
        });
        assert_eq!(seen.len() as u128, binomial(4, 2));
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
        let mut count = 0;
        for_each_subset(3, 0, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 1);
    }
}
