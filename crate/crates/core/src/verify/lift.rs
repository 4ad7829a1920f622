//! The lifted measurement operator `F(A)(n) = <A, P_n>_HS` on symmetric
//! matrices, and searches for rank ≤ 2 elements of its null space.
//!
//! Symmetric matrices are coordinatized by the orthonormal basis `E_ii`,
//! `(E_ij + E_ji) / sqrt(2)` for `i < j`, in row-major upper-triangular order.

use crate::error::{Error, Result};
use crate::family::RealFamily;
use crate::linalg::{null_space, operator_norm, Matrix, SymmetricMatrix, Vector, DEFAULT_TOL};
use crate::rng::RngState;

use super::real_only;

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// `||F(C)|| <= RESIDUAL_TOL * ||F||` for unit-Frobenius `C`.
const RESIDUAL_TOL: f64 = 1e-10;
/// `sigma_2 / sigma_3 >= RANK_GAP` declares rank ≤ 2.
const RANK_GAP: f64 = 1e6;
const RANK_ONE_TOL: f64 = 1e-9;

pub fn lift_dim(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Coordinates of a symmetric matrix in the orthonormal basis.
pub fn lift(a: &SymmetricMatrix) -> Vector {
    let m = a.dim();
    let s = a.as_matrix();
    let mut out = Vector::zeros(lift_dim(m));
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            out[k] = if i == j { s[(i, i)] } else { SQRT2 * s[(i, j)] };
            k += 1;
        }
    }
    out
}

/// Inverse of [`lift`].
pub fn unlift(coords: &Vector, m: usize) -> SymmetricMatrix {
    let mut s = Matrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            if i == j {
                s[(i, i)] = coords[k];
            } else {
                s[(i, j)] = coords[k] / SQRT2;
                s[(j, i)] = s[(i, j)];
            }
            k += 1;
        }
    }
    SymmetricMatrix::new(s).expect("square and finite")
}

/// Matrix of `F` in lifted coordinates: row `n` is the lift of `P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftOperator {
    ambient: usize,
    matrix: Matrix,
}

impl LiftOperator {
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, a: &SymmetricMatrix) -> Vector {
        &self.matrix * lift(a)
    }

    /// Operator norm of `F`.
    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }
}

pub fn lift_operator(family: &RealFamily) -> Result<LiftOperator> {
    real_only(family)?;
    let m = family.ambient();
    let mut matrix = Matrix::zeros(family.len(), lift_dim(m));
    for (n, s) in family.subspaces().iter().enumerate() {
        let p = SymmetricMatrix::new(s.projection())?;
        matrix.row_mut(n).copy_from(&lift(&p).transpose());
    }
    Ok(LiftOperator { ambient: m, matrix })
}

/// Orthonormal basis (in Frobenius norm) of `Null(F)`.
pub fn lift_null_space(op: &LiftOperator) -> Vec<SymmetricMatrix> {
    null_space(&op.matrix, DEFAULT_TOL).iter().map(|c| unlift(c, op.ambient)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessStrategy {
    /// A null-space basis element already has rank ≤ 2.
    Direct,
    /// Root of `t -> det(A cos t + B sin t)` (odd `M`).
    Pencil,
    /// Local minimization of the trailing eigenvalues over the null sphere.
    Descent,
}

impl WitnessStrategy {
    pub fn name(self) -> &'static str {
        match self {
            WitnessStrategy::Direct => "direct",
            WitnessStrategy::Pencil => "pencil",
            WitnessStrategy::Descent => "descent",
        }
    }
}

/// `C = lambda_1 u u^T + lambda_2 v v^T` with orthonormal `u`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub u: Vector,
    pub v: Vector,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// A nonzero symmetric `C` of rank ≤ 2 with `F(C) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessMatrix {
    pub matrix: SymmetricMatrix,
    /// `||F(C)|| / ||F||` with `||C||_F = 1`.
    pub residual: f64,
    pub rank: usize,
    pub spectral: SpectralPair,
    pub strategy: WitnessStrategy,
}

/// Accepts `c` (any scale) as a witness if `F(c)` vanishes and the rank gap
/// criterion holds.
fn accept(op: &LiftOperator, f_norm: f64, c: &SymmetricMatrix, strategy: WitnessStrategy) -> Option<WitnessMatrix> {
    let norm = c.frobenius_norm();
    if !(norm > 0.0) {
        return None;
    }
    let c = SymmetricMatrix::new(c.as_matrix() / norm).ok()?;
    let residual = op.apply(&c).norm() / f_norm.max(f64::MIN_POSITIVE);
    if residual > RESIDUAL_TOL {
        return None;
    }
    let eig = c.eigenpairs();
    let sigma: Vec<f64> = eig.iter().map(|(l, _)| l.abs()).collect();
    let rank = if sigma.len() < 2 || sigma[1] <= RANK_ONE_TOL * sigma[0] {
        1
    } else if sigma.len() < 3 || sigma[2] * RANK_GAP <= sigma[1] {
        2
    } else {
        return None;
    };
    let spectral = SpectralPair {
        u: eig[0].1.clone(),
        v: eig.get(1).map(|e| e.1.clone()).unwrap_or_else(|| Vector::zeros(c.dim())),
        lambda1: eig[0].0,
        lambda2: if rank == 2 { eig[1].0 } else { 0.0 },
    };
    Some(WitnessMatrix { matrix: c, residual, rank, spectral, strategy })
}

/// Bisection on `t -> det(A cos t + B sin t)` over `[0, pi]`; for odd `M`
/// the endpoints have opposite signs.
pub fn pencil_witness(op: &LiftOperator, a: &SymmetricMatrix, b: &SymmetricMatrix) -> Option<WitnessMatrix> {
    let f_norm = op.norm();
    let f = |t: f64| SymmetricMatrix::pencil(a, b, t).determinant();
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    let (mut flo, fhi) = (f(lo), f(hi));
    let t = if flo == 0.0 {
        lo
    } else if fhi == 0.0 {
        hi
    } else if flo.signum() == fhi.signum() {
        return None;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        if f(lo).abs() <= f(hi).abs() {
            lo
        } else {
            hi
        }
    };
    accept(op, f_norm, &SymmetricMatrix::pencil(a, b, t), WitnessStrategy::Pencil)
}

/// Searches `Null(F)` for a nonzero element of rank ≤ 2.
///
/// `None` means nothing was found: the null space is trivial (then the family
/// is injective) or the searches were inconclusive.
pub fn rank12_witness_search(family: &RealFamily) -> Option<WitnessMatrix> {
    let op = lift_operator(family).ok()?;
    let null = lift_null_space(&op);
    if null.is_empty() {
        return None;
    }
    let f_norm = op.norm();
    let m = family.ambient();

    for c in &null {
        if let Some(w) = accept(&op, f_norm, c, WitnessStrategy::Direct) {
            return Some(w);
        }
    }
    if null.len() < 2 {
        return None;
    }
    if m == 3 {
        if let Some(w) = pencil_witness(&op, &null[0], &null[1]) {
            return Some(w);
        }
    }
    descent_witness(&op, f_norm, &null)
}

/// Levenberg–Marquardt on the unit sphere of null-space coefficients,
/// driving all but the two largest-magnitude eigenvalues to zero.
fn descent_witness(op: &LiftOperator, f_norm: f64, null: &[SymmetricMatrix]) -> Option<WitnessMatrix> {
    let d = null.len();
    let m = op.ambient;
    let combine = |c: &[f64]| {
        let mut s = Matrix::zeros(m, m);
        for (ci, ni) in c.iter().zip(null) {
            s += ni.as_matrix() * *ci;
        }
        SymmetricMatrix::new(s).expect("finite")
    };
    let trailing = |c: &[f64]| -> (Vec<f64>, Matrix) {
        let eig = combine(c).eigenpairs();
        let tail = &eig[2.min(eig.len())..];
        let r: Vec<f64> = tail.iter().map(|(l, _)| *l).collect();
        let mut jac = Matrix::zeros(r.len(), d);
        for (row, (_, w)) in tail.iter().enumerate() {
            for (k, nk) in null.iter().enumerate() {
                jac[(row, k)] = w.dot(&(nk.as_matrix() * w));
            }
        }
        (r, jac)
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let master = RngState::new(0x5eed_0f_7a11);
    let restarts = 8 * d;
    for restart in 0..restarts {
        let mut rng = master.fork(restart as u64);
        let mut c: Vec<f64> = rng.unit_vector(d).iter().copied().collect();
        let (mut r, mut jac) = trailing(&c);
        let mut current = cost(&r);
        let mut mu = 1e-3;
        for _ in 0..300 {
            if current < 1e-30 {
                break;
            }
            // Tangent-space LM step.
            let cv = Vector::from_column_slice(&c);
            let proj = Matrix::identity(d, d) - &cv * cv.transpose();
            let jt = &jac * &proj;
            let g = jt.transpose() * Vector::from_column_slice(&r);
            let h = jt.transpose() * &jt;
            let mut improved = false;
            for _ in 0..20 {
                let damped = &h + Matrix::identity(d, d) * mu * (1.0 + h.diagonal().amax());
                let Some(step) = damped.lu().solve(&(-&g)) else { break };
                let trial = (&cv + step).normalize();
                let tc: Vec<f64> = trial.iter().copied().collect();
                let (tr, tj) = trailing(&tc);
                let tcost = cost(&tr);
                if tcost < current {
                    c = tc;
                    r = tr;
                    jac = tj;
                    current = tcost;
                    mu = (mu * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        if let Some(w) = accept(op, f_norm, &combine(&c), WitnessStrategy::Descent) {
            return Some(w);
        }
    }
    None
}

/// Turns a rank-2 witness `lambda_1 u u^T + lambda_2 v v^T` with eigenvalues
/// of opposite sign into the orthogonal pair `(u, sqrt(|lambda_2| / |lambda_1|) v)`,
/// which has equal measurements. The first vector is a unit vector and the
/// second is no longer than it.
///
/// Rank one, or two eigenvalues of the same sign, means some nonzero vector
/// is annihilated by every subspace; that is reported as
/// [`Error::RankOneWitness`].
pub fn witness_to_pair(w: &WitnessMatrix) -> Result<(Vector, Vector)> {
    let sp = &w.spectral;
    if w.rank < 2 || sp.lambda2 == 0.0 || sp.lambda1.signum() == sp.lambda2.signum() {
        return Err(Error::RankOneWitness { annihilated: sp.u.iter().copied().collect() });
    }
    Ok((sp.u.clone(), &sp.v * (sp.lambda2.abs() / sp.lambda1.abs()).sqrt()))
}
