//! Local searches for orthogonal pairs with equal measurements.

use crate::family::RealFamily;
use crate::linalg::{Matrix, Vector};
use crate::rng::RngState;

use super::real_only;

/// A pair is accepted when `sum_n (||P_n u||^2 - ||P_n v||^2)^2 < OBJECTIVE_TOL`
/// with `||u|| = 1`.
const OBJECTIVE_TOL: f64 = 1e-16;
const MIN_SECOND_NORM: f64 = 1e-6;
const MAX_ITERS: usize = 400;

struct PairProblem {
    projections: Vec<Matrix>,
    dim: usize,
}

impl PairProblem {
    fn new(family: &RealFamily) -> Self {
        PairProblem { projections: family.subspaces().iter().map(|s| s.projection()).collect(), dim: family.ambient() }
    }

    /// Measurement differences only.
    fn objective(&self, u: &Vector, v: &Vector) -> f64 {
        self.projections
            .iter()
            .map(|p| {
                let d = u.dot(&(p * u)) - v.dot(&(p * v));
                d * d
            })
            .sum()
    }

    /// Residuals: measurement differences, `u . v`, `u . u - 1`.
    fn residuals(&self, z: &Vector) -> (Vector, Matrix) {
        let m = self.dim;
        let u = z.rows(0, m).into_owned();
        let v = z.rows(m, m).into_owned();
        let n = self.projections.len();
        let mut r = Vector::zeros(n + 2);
        let mut jac = Matrix::zeros(n + 2, 2 * m);
        for (k, p) in self.projections.iter().enumerate() {
            let pu = p * &u;
            let pv = p * &v;
            r[k] = u.dot(&pu) - v.dot(&pv);
            jac.view_mut((k, 0), (1, m)).copy_from(&(pu * 2.0).transpose());
            jac.view_mut((k, m), (1, m)).copy_from(&(pv * -2.0).transpose());
        }
        r[n] = u.dot(&v);
        jac.view_mut((n, 0), (1, m)).copy_from(&v.transpose());
        jac.view_mut((n, m), (1, m)).copy_from(&u.transpose());
        r[n + 1] = u.norm_squared() - 1.0;
        jac.view_mut((n + 1, 0), (1, m)).copy_from(&(&u * 2.0).transpose());
        (r, jac)
    }

    /// Levenberg–Marquardt from `(u, v)`; returns the normalized pair
    /// (`||u|| = 1 >= ||v||`, `u ⊥ v`).
    fn descend(&self, u: Vector, v: Vector) -> (Vector, Vector) {
        let m = self.dim;
        let mut z = Vector::zeros(2 * m);
        z.rows_mut(0, m).copy_from(&u);
        z.rows_mut(m, m).copy_from(&v);
        let (mut r, mut jac) = self.residuals(&z);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        for _ in 0..MAX_ITERS {
            if cost < 1e-32 {
                break;
            }
            let g = jac.transpose() * &r;
            let h = jac.transpose() * &jac;
            let scale = 1.0 + h.diagonal().amax();
            let mut improved = false;
            for _ in 0..25 {
                let damped = &h + Matrix::identity(2 * m, 2 * m) * (mu * scale);
                let Some(step) = damped.lu().solve(&(-&g)) else { break };
                let trial = &z + step;
                let (tr, tj) = self.residuals(&trial);
                let tcost = tr.norm_squared();
                if tcost < cost {
                    z = trial;
                    r = tr;
                    jac = tj;
                    cost = tcost;
                    mu = (mu * 0.3).max(1e-15);
                    improved = true;
                    break;
                }
                mu *= 8.0;
            }
            if !improved {
                break;
            }
        }
        normalize_pair(z.rows(0, m).into_owned(), z.rows(m, m).into_owned())
    }
}

/// Swaps so the longer vector comes first, scales it to unit length and
/// makes the second orthogonal to it.
fn normalize_pair(u: Vector, v: Vector) -> (Vector, Vector) {
    let (mut u, mut v) = if v.norm() > u.norm() { (v, u) } else { (u, v) };
    let n = u.norm();
    if n > 0.0 {
        u /= n;
        v /= n;
    }
    let d = u.dot(&v);
    v.axpy(-d, &u, 1.0);
    (u, v)
}

fn random_start(m: usize, rng: &mut RngState) -> (Vector, Vector) {
    let u = rng.unit_vector(m);
    let mut v = rng.gaussian_vector(m);
    let d = u.dot(&v);
    v.axpy(-d, &u, 1.0);
    let len = rng.uniform().max(0.05);
    let v = v.normalize() * len;
    (u, v)
}

/// Seeded restarts of a least-squares descent for `u ⊥ v`, `||u|| = 1 >=
/// ||v|| > 0` with `||P_n u|| = ||P_n v||` for all `n`.
///
/// A returned pair is a genuine counterexample to injectivity. `None` is
/// inconclusive.
pub fn orthogonal_pair_search(family: &RealFamily, rng: &mut RngState, restarts: usize) -> Option<(Vector, Vector)> {
    real_only(family).ok()?;
    let problem = PairProblem::new(family);
    let m = family.ambient();
    let base = rng.fork(0);
    for k in 0..restarts {
        let mut sub = base.fork(k as u64);
        let (u0, v0) = random_start(m, &mut sub);
        let (u, v) = problem.descend(u0, v0);
        if !u.iter().chain(v.iter()).all(|x| x.is_finite()) {
            continue;
        }
        if v.norm() > MIN_SECOND_NORM && problem.objective(&u, &v) < OBJECTIVE_TOL {
            return Some((u, v));
        }
    }
    None
}

fn margin_at(problem: &PairProblem, x: &Vector, y: &Vector) -> Option<f64> {
    if !(y.norm() > 0.0) || !x.iter().chain(y.iter()).all(|t| t.is_finite()) {
        return None;
    }
    Some(
        problem
            .projections
            .iter()
            .map(|p| ((x.dot(&(p * x))).max(0.0).sqrt() - (y.dot(&(p * y))).max(0.0).sqrt()).abs())
            .fold(0.0, f64::max),
    )
}

/// Upper estimate of the stability margin: the smallest
/// `max_n | ||P_n x|| - ||P_n y|| |` seen over sampled pairs `x ⊥ y`,
/// `1 = ||x|| >= ||y|| > 0`, each refined by local descent. The true
/// margin can only be smaller.
pub fn stability_margin(family: &RealFamily, rng: &mut RngState, samples: usize) -> f64 {
    if real_only(family).is_err() {
        return f64::NAN;
    }
    let problem = PairProblem::new(family);
    let m = family.ambient();
    let base = rng.fork(1);
    let mut best = f64::INFINITY;
    for k in 0..samples.max(1) {
        let mut sub = base.fork(k as u64);
        let (u0, v0) = random_start(m, &mut sub);
        if let Some(val) = margin_at(&problem, &u0, &v0) {
            best = best.min(val);
        }
        let (u, v) = problem.descend(u0, v0);
        if let Some(val) = margin_at(&problem, &u, &v) {
            best = best.min(val);
        }
    }
    best
}
