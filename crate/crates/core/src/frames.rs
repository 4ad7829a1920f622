//! Vector-family phase retrieval: full spark, the complement property,
//! witnesses of its failure, and sign recovery from moduli.

use std::ops::Range;

use crate::error::{domain, Error, Result};
use crate::linalg::{
    binomial, for_each_subset, frame_operator, max_abs, null_space, numeric_rank_with_margin,
    random_unit_in_complement, rows_to_matrix, singular_values, Matrix, Vector, DEFAULT_TOL,
};
use crate::rng::RngState;

/// Largest frame for which the complement property is checked exhaustively.
pub const COMPLEMENT_CAP: usize = 24;
/// Largest number of `M`-subsets enumerated by the full-spark check.
pub const SPARK_CAP: u128 = 2_000_000;

const BUILD_RETRIES: usize = 16;

/// An ordered family of vectors in `R^M`, optionally marked with index ranges
/// that are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dim: usize,
    vectors: Vec<Vector>,
    blocks: Vec<Range<usize>>,
}

impl Frame {
    pub fn new(dim: usize, vectors: Vec<Vector>) -> Result<Self> {
        Frame::with_blocks(dim, vectors, Vec::new())
    }

    pub fn with_blocks(dim: usize, vectors: Vec<Vector>, blocks: Vec<Range<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(domain("ambient dimension must be positive"));
        }
        if vectors.is_empty() {
            return Err(domain("a frame needs at least one vector"));
        }
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(domain("frame vectors must be finite"));
        }
        for b in &blocks {
            if b.end > vectors.len() || b.start >= b.end {
                return Err(domain(format!("block {:?} out of range", b)));
            }
            let block = &vectors[b.clone()];
            let gram_err = block
                .iter()
                .enumerate()
                .flat_map(|(i, u)| block.iter().enumerate().map(move |(j, w)| (u.dot(w) - f64::from(u8::from(i == j))).abs()))
                .fold(0.0, f64::max);
            if gram_err > 1e-10 {
                return Err(domain(format!("block {:?} is not orthonormal (error {:.2e})", b, gram_err)));
            }
        }
        Ok(Frame { dim, vectors, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Matrix whose rows are the vectors with the given indices.
    pub fn rows(&self, indices: &[usize]) -> Matrix {
        let rows: Vec<&Vector> = indices.iter().map(|&i| &self.vectors[i]).collect();
        rows_to_matrix(&rows, self.dim)
    }

    /// Absolute inner products `|<x, phi_n>|`.
    pub fn moduli(&self, x: &Vector) -> Vec<f64> {
        self.vectors.iter().map(|v| v.dot(x).abs()).collect()
    }
}

/// `count` orthonormal bases of `R^M`, each drawn vector by vector from the
/// orthogonal complement of its predecessors, stacked into one frame.
pub fn stacked_orthobases(dim: usize, count: usize, rng: &mut RngState) -> Result<Frame> {
    if dim < 2 {
        return Err(domain("ambient dimension must be at least 2"));
    }
    if count < 1 {
        return Err(domain("need at least one basis"));
    }
    let n = dim * count;
    let check = binomial(n, dim) <= SPARK_CAP;
    for _ in 0..BUILD_RETRIES {
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..count {
            let mut basis: Vec<Vector> = Vec::with_capacity(dim);
            for _ in 0..dim {
                let v = random_unit_in_complement(&basis, dim, rng)?;
                basis.push(v);
            }
            vectors.extend(basis);
        }
        let blocks = (0..count).map(|b| b * dim..(b + 1) * dim).collect();
        let frame = Frame::with_blocks(dim, vectors, blocks)?;
        let ok = if check {
            is_full_spark(&frame, DEFAULT_TOL)?
        } else {
            spot_check_spark(&frame, rng, 2_000)
        };
        if ok {
            return Ok(frame);
        }
    }
    Err(Error::BudgetExhausted(BUILD_RETRIES))
}

fn spot_check_spark(frame: &Frame, rng: &mut RngState, samples: usize) -> bool {
    let n = frame.len();
    let m = frame.dim();
    (0..samples).all(|_| {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + (rng.uniform() * (n - i) as f64) as usize;
            idx.swap(i, j.min(n - 1));
        }
        idx.truncate(m);
        numeric_rank_with_margin(&frame.rows(&idx), DEFAULT_TOL).0 == m
    })
}

/// True iff every `M`-subset of the frame has numeric rank `M`.
pub fn is_full_spark(frame: &Frame, tol: f64) -> Result<bool> {
    let m = frame.dim();
    let n = frame.len();
    if n < m {
        return Err(domain(format!("full spark needs at least {} vectors, got {}", m, n)));
    }
    let required = binomial(n, m);
    if required > SPARK_CAP {
        return Err(Error::Resource { required, cap: SPARK_CAP });
    }
    Ok(for_each_subset(n, m, |s| numeric_rank_with_margin(&frame.rows(s), tol).0 == m))
}

/// Outcome of the exhaustive complement-property check.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementReport {
    pub holds: bool,
    /// A failing subset of minimal size, when the property fails.
    pub failing_subset: Option<Vec<usize>>,
    /// Some rank decision landed within a factor of ten of the tolerance.
    pub borderline: bool,
}

/// Checks whether, for every subset `I`, the vectors indexed by `I` or by its
/// complement span `R^M`.
pub fn has_complement_property(frame: &Frame) -> Result<ComplementReport> {
    has_complement_property_tol(frame, DEFAULT_TOL)
}

pub fn has_complement_property_tol(frame: &Frame, tol: f64) -> Result<ComplementReport> {
    let n = frame.len();
    let m = frame.dim();
    if n > COMPLEMENT_CAP {
        return Err(Error::Resource { required: 1u128 << n, cap: 1u128 << COMPLEMENT_CAP });
    }
    let mut borderline = false;
    let mut spans = |idx: &[usize]| -> bool {
        if idx.len() < m {
            return false;
        }
        let (r, b) = numeric_rank_with_margin(&frame.rows(idx), tol);
        borderline |= b;
        r == m
    };
    // I and its complement play symmetric roles, so |I| <= N/2 suffices, and
    // increasing size makes the first failure a minimal one.
    for size in 0..=n / 2 {
        let mut failing = None;
        for_each_subset(n, size, |subset| {
            let comp: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
            if !spans(subset) && !spans(&comp) {
                failing = Some(subset.to_vec());
                return false;
            }
            true
        });
        if let Some(f) = failing {
            return Ok(ComplementReport { holds: false, failing_subset: Some(f), borderline });
        }
    }
    Ok(ComplementReport { holds: true, failing_subset: None, borderline })
}

/// For a subset `I` on which the complement property fails, returns
/// `(x + y, x - y)` with `x` orthogonal to the vectors in `I` and `y`
/// orthogonal to those outside it. The two have equal moduli against every
/// frame vector and are not equal up to sign.
pub fn complement_failure_witness(frame: &Frame, subset: &[usize]) -> Result<(Vector, Vector)> {
    let n = frame.len();
    let m = frame.dim();
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(domain(format!("index {} out of range for {} vectors", bad, n)));
    }
    let comp: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
    let x = orthogonal_direction(frame, subset, m)
        .ok_or_else(|| Error::NotAWitness("the selected vectors span the space".into()))?;
    let y = orthogonal_direction(frame, &comp, m)
        .ok_or_else(|| Error::NotAWitness("the complementary vectors span the space".into()))?;
    Ok((&x + &y, &x - &y))
}

fn orthogonal_direction(frame: &Frame, idx: &[usize], m: usize) -> Option<Vector> {
    if idx.is_empty() {
        return Some(Vector::from_fn(m, |i, _| if i == 0 { 1.0 } else { 0.0 }));
    }
    null_space(&frame.rows(idx), DEFAULT_TOL).into_iter().next()
}

/// Tolerances for sign recovery; residuals are relative to the signal norm.
#[derive(Debug, Clone, Copy)]
pub struct SignTolerance {
    pub residual: f64,
}

impl Default for SignTolerance {
    fn default() -> Self {
        SignTolerance { residual: 1e-7 }
    }
}

/// Recovers `x` (up to sign) from `|<x, phi_n>|` when the frame begins with
/// `M` vectors forming a basis (normally an orthonormal block).
pub fn classical_sign_recovery(frame: &Frame, moduli: &[f64]) -> Result<Vector> {
    let basis: Vec<usize> = (0..frame.dim()).collect();
    sign_recovery_with_basis(frame, &basis, moduli, SignTolerance::default())
}

/// Sign recovery using the frame vectors at `basis` as the coordinate system.
///
/// Enumerates the sign patterns on the basis moduli with the largest one fixed
/// nonnegative (zero moduli carry no sign), reconstructs the candidate signal
/// and keeps the one that best reproduces the remaining moduli.
pub fn sign_recovery_with_basis(
    frame: &Frame,
    basis: &[usize],
    moduli: &[f64],
    tol: SignTolerance,
) -> Result<Vector> {
    let m = frame.dim();
    let n = frame.len();
    if moduli.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: moduli.len() });
    }
    if basis.len() != m || basis.iter().any(|&b| b >= n) {
        return Err(domain("basis must select M distinct frame vectors"));
    }
    if moduli.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(domain("moduli must be finite and nonnegative"));
    }
    let basis_rows = frame.rows(basis);
    let lu = basis_rows.clone().lu();
    let lead: Vec<f64> = basis.iter().map(|&b| moduli[b]).collect();

    // Measurement scale for relative thresholds.
    let scale = lead.iter().map(|v| v * v).sum::<f64>().sqrt().max(moduli.iter().cloned().fold(0.0, f64::max));
    let abs_scale = if scale > 0.0 { scale } else { 1.0 };

    let pivot = (0..m).max_by(|&a, &b| lead[a].total_cmp(&lead[b])).unwrap_or(0);
    let free: Vec<usize> = (0..m)
        .filter(|&k| k != pivot && lead[k] > tol.residual * abs_scale)
        .collect();
    if free.len() > 40 {
        return Err(Error::Resource { required: 1u128 << free.len(), cap: 1u128 << 40 });
    }
    let others: Vec<usize> = (0..n).filter(|i| !basis.contains(i)).collect();

    let mut best: Option<(f64, Vector)> = None;
    let mut consistent = 0usize;
    let mut rhs = Vector::from_column_slice(&lead);
    for pattern in 0u64..(1u64 << free.len()) {
        for (bit, &k) in free.iter().enumerate() {
            rhs[k] = if pattern >> bit & 1 == 1 { -lead[k] } else { lead[k] };
        }
        let x = lu.solve(&rhs).ok_or_else(|| domain("selected basis is singular"))?;
        let residual = others
            .iter()
            .map(|&i| (frame.vectors[i].dot(&x).abs() - moduli[i]).abs())
            .fold(0.0, f64::max)
            / abs_scale;
        if residual <= tol.residual {
            consistent += 1;
        }
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, x));
        }
    }
    let (residual, x) = best.expect("at least one sign pattern");
    if residual > tol.residual {
        return Err(Error::Inconsistent { residual });
    }
    if consistent > 1 {
        return Err(Error::Ambiguous(consistent));
    }
    Ok(x)
}

/// Picks `M` vectors greedily maximizing the volume they span (pivoted
/// Gram–Schmidt on the rows).
pub fn best_conditioned_basis(frame: &Frame) -> Result<Vec<usize>> {
    let m = frame.dim();
    let mut residuals: Vec<Vector> = frame.vectors().to_vec();
    let mut chosen = Vec::with_capacity(m);
    for _ in 0..m {
        let (idx, norm) = residuals
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, r.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| domain("frame has fewer than M vectors"))?;
        if norm <= DEFAULT_TOL {
            return Err(domain("frame does not span the space"));
        }
        chosen.push(idx);
        let q = &residuals[idx] / norm;
        for r in residuals.iter_mut() {
            let c = q.dot(r);
            r.axpy(-c, &q, 1.0);
        }
    }
    Ok(chosen)
}

/// True iff `sum_n phi_n phi_n^T = I` entrywise within `tol`.
pub fn is_parseval(frame: &Frame, tol: f64) -> bool {
    parseval_error(frame) <= tol
}

/// `max |sum_n phi_n phi_n^T - I|`.
pub fn parseval_error(frame: &Frame) -> f64 {
    let s = frame_operator(frame.vectors(), frame.dim());
    max_abs(&(s - Matrix::identity(frame.dim(), frame.dim())))
}

/// Smallest singular value over all `M`-subsets relative to the largest; a
/// diagnostic for how robustly a frame is full spark.
pub fn spark_margin(frame: &Frame) -> Result<f64> {
    let m = frame.dim();
    let required = binomial(frame.len(), m);
    if required > SPARK_CAP {
        return Err(Error::Resource { required, cap: SPARK_CAP });
    }
    let mut worst = f64::INFINITY;
    for_each_subset(frame.len(), m, |s| {
        let sv = singular_values(&frame.rows(s));
        worst = worst.min(sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE));
        true
    });
    Ok(worst)
}
