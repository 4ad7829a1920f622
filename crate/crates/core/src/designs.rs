//! Invertible 0–1 matrices with prescribed row sums.
//!
//! Construction is inductive on the size: a design for `M + 1` rows is built
//! from a design for `M` rows by appending a column of ones to the rows whose
//! sum is the maximum `M`, plus a last row with its ones packed to the left.
//! If that extension is singular, moving one of the last row's ones into the
//! new column makes it invertible for some choice of the moved one.
//! Determinants are computed exactly over the integers.

use crate::error::{domain, Result};

/// Square matrix with entries in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: Vec<Vec<u8>>,
}

impl BinaryMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(domain("binary matrix must have at least one row"));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(domain(format!("row {} has length {}, expected {}", k + 1, r.len(), n)));
            }
            if r.iter().any(|&v| v > 1) {
                return Err(domain(format!("row {} has an entry other than 0 or 1", k + 1)));
            }
        }
        Ok(BinaryMatrix { rows })
    }

    pub fn identity(n: usize) -> Self {
        BinaryMatrix {
            rows: (0..n).map(|i| (0..n).map(|j| u8::from(i == j)).collect()).collect(),
        }
    }

    /// Matrix whose row `k` has ones exactly at the columns listed in `sets[k]`.
    pub fn from_index_sets(n: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let mut rows = vec![vec![0u8; n]; sets.len()];
        for (k, set) in sets.iter().enumerate() {
            for &z in set {
                if z >= n {
                    return Err(domain(format!("column index {} out of range for size {}", z, n)));
                }
                rows[k][z] = 1;
            }
        }
        BinaryMatrix::new(rows)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.rows[i][j]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.iter().map(|&v| v as usize).sum()).collect()
    }

    /// Column indices of the ones in row `k`.
    pub fn support(&self, k: usize) -> Vec<usize> {
        self.rows[k].iter().enumerate().filter(|(_, &v)| v == 1).map(|(j, _)| j).collect()
    }

    pub fn determinant(&self) -> i128 {
        let m: Vec<Vec<i128>> = self.rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
        bareiss_det(m)
    }

    /// Integer adjugate, so that `A^{-1} = adj(A) / det(A)`.
    pub fn adjugate(&self) -> Vec<Vec<i128>> {
        let n = self.size();
        if n == 1 {
            return vec![vec![1]];
        }
        let mut adj = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<i128>> = (0..n)
                    .filter(|&r| r != i)
                    .map(|r| (0..n).filter(|&c| c != j).map(|c| self.rows[r][c] as i128).collect())
                    .collect();
                let cof = bareiss_det(minor);
                // adj = transpose of the cofactor matrix
                adj[j][i] = if (i + j) % 2 == 0 { cof } else { -cof };
            }
        }
        adj
    }
}

/// Fraction-free Gaussian elimination; exact for integer input.
pub(crate) fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// A validated invertible 0–1 design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroOneDesign {
    matrix: BinaryMatrix,
    det: i128,
}

impl ZeroOneDesign {
    /// Wraps `matrix` if it is invertible.
    pub fn from_matrix(matrix: BinaryMatrix) -> Result<Self> {
        let det = matrix.determinant();
        if det == 0 {
            return Err(domain("0-1 design is singular"));
        }
        Ok(ZeroOneDesign { matrix, det })
    }

    pub fn matrix(&self) -> &BinaryMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn determinant(&self) -> i128 {
        self.det
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.matrix.row_sums()
    }
}

pub fn row_sums_of(design: &ZeroOneDesign) -> Vec<usize> {
    design.row_sums()
}

/// Builds an invertible 0–1 matrix whose row `k` has exactly `row_sums[k]` ones.
///
/// Requires `M = row_sums.len() >= 2` and every sum in `[1, M - 1]`. The sums
/// need not be sorted; the result is deterministic.
pub fn zero_one_invertible(row_sums: &[usize]) -> Result<ZeroOneDesign> {
    let m = row_sums.len();
    if m < 2 {
        return Err(domain(format!("need at least 2 rows, got {}", m)));
    }
    if let Some(&bad) = row_sums.iter().find(|&&s| s < 1 || s > m - 1) {
        return Err(domain(format!("row sum {} outside [1, {}]", bad, m - 1)));
    }
    // Stable sort into nonincreasing order, remembering where each row came from.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| row_sums[b].cmp(&row_sums[a]));
    let sorted: Vec<usize> = order.iter().map(|&i| row_sums[i]).collect();

    let built = build_sorted(&sorted);
    let mut rows = vec![Vec::new(); m];
    for (pos, &orig) in order.iter().enumerate() {
        rows[orig] = built[pos].clone();
    }
    let design = ZeroOneDesign::from_matrix(BinaryMatrix::new(rows)?)?;
    debug_assert_eq!(design.row_sums(), row_sums);
    Ok(design)
}

/// `sums` is nonincreasing with entries in `[1, len - 1]`.
fn build_sorted(sums: &[usize]) -> Vec<Vec<u8>> {
    let n = sums.len();
    if n == 2 {
        return vec![vec![1, 0], vec![0, 1]];
    }
    // Step from size n - 1 = `prev` to size n.
    let prev = n - 1;
    let s = sums.iter().take_while(|&&v| v == prev).count();
    let reduced: Vec<usize> = sums[..prev]
        .iter()
        .enumerate()
        .map(|(k, &v)| if k < s { v - 1 } else { v })
        .collect();
    let a = build_sorted(&reduced);

    let last_sum = sums[n - 1];
    let mut b = vec![vec![0u8; n]; n];
    for i in 0..prev {
        b[i][..prev].copy_from_slice(&a[i]);
        if i < s {
            b[i][prev] = 1;
        }
    }
    for j in 0..last_sum {
        b[prev][j] = 1;
    }
    if det_u8(&b) != 0 {
        return b;
    }
    for ell in 0..last_sum {
        let mut candidate = b.clone();
        candidate[prev][ell] = 0;
        candidate[prev][prev] = 1;
        if det_u8(&candidate) != 0 {
            return candidate;
        }
    }
    unreachable!("one of the repaired last rows is always invertible")
}

fn det_u8(rows: &[Vec<u8>]) -> i128 {
    bareiss_det(rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect())
}
