use super::{complete_basis, RealFamily, Subspace, SubspaceFamily};
use crate::error::{Error, Result};
use crate::linalg::Vector;

const WITNESS_TOL: f64 = 1e-8;

/// Enlarges every subspace of a non-injective family to a hyperplane while
/// keeping the witness `(x, y)` a witness.
///
/// Each step adjoins a unit `z` from a 2-plane `Z` inside the current
/// orthogonal complement, chosen so that `|<x, z>| = |<y, z>|`; such a `z`
/// exists between the directions orthogonal to `P_Z x` and to `P_Z y`.
pub fn extend_to_hyperplanes(family: &RealFamily, x: &Vector, y: &Vector) -> Result<RealFamily> {
    let m = family.ambient();
    check_witness(family, x, y)?;
    let mut out = Vec::with_capacity(family.len());
    for s in family.subspaces() {
        if s.dim() == m - 1 {
            out.push(s.clone());
            continue;
        }
        let mut basis = s.basis();
        while basis.len() < m - 1 {
            let comp = complete_basis(&basis, m);
            let (e1, e2) = (&comp[basis.len()], &comp[basis.len() + 1]);
            let u = [x.dot(e1), x.dot(e2)];
            let v = [y.dot(e1), y.dot(e2)];
            let t = balanced_angle(u, v);
            let z = e1 * t.cos() + e2 * t.sin();
            basis.push(z);
        }
        out.push(Subspace::from_orthonormal(m, basis)?);
    }
    let extended = SubspaceFamily::new(m, out)?;
    check_witness(&extended, x, y)?;
    Ok(extended)
}

/// Angle `t` with `|<u, z(t)>| = |<v, z(t)>|` for `z(t) = (cos t, sin t)`,
/// by bisection between a direction orthogonal to `u` (where the difference
/// is `<= 0`) and one orthogonal to `v` (where it is `>= 0`).
fn balanced_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let f = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        (u[0] * c + u[1] * s).abs() - (v[0] * c + v[1] * s).abs()
    };
    let perp = |w: [f64; 2]| {
        if w[0] == 0.0 && w[1] == 0.0 {
            0.0
        } else {
            w[1].atan2(w[0]) + std::f64::consts::FRAC_PI_2
        }
    };
    let (mut lo, mut hi) = (perp(u), perp(v));
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    // f(lo) < 0 < f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

fn check_witness(family: &RealFamily, x: &Vector, y: &Vector) -> Result<()> {
    let mx = family.measure(x)?;
    let my = family.measure(y)?;
    let scale = x.norm().max(y.norm());
    if x.norm() == 0.0 || y.norm() == 0.0 {
        return Err(Error::NotAWitness("witness vectors must be nonzero".into()));
    }
    if (x - y).norm().min((x + y).norm()) <= WITNESS_TOL * scale {
        return Err(Error::NotAWitness("x and y agree up to sign".into()));
    }
    let gap = mx.iter().zip(&my).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > WITNESS_TOL * scale * scale {
        return Err(Error::NotAWitness(format!("measurements differ by {:.3e}", gap)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn hyperplanes_unchanged() {
        let fam = SubspaceFamily::new(3, vec![Subspace::complement_of(3, &v(&[1.0, 0.0, 0.0])).unwrap()]).unwrap();
        let x = v(&[1.0, 0.0, 0.0]);
        let y = v(&[0.0, 0.0, 0.0]);
        // y = 0 is rejected as a witness
        assert!(extend_to_hyperplanes(&fam, &x, &y).is_err());
        let x = v(&[0.0, 1.0, 0.0]);
        let y = v(&[0.0, 0.0, 1.0]);
        let out = extend_to_hyperplanes(&fam, &x, &y).unwrap();
        assert_eq!(out, fam);
    }

    #[test]
    fn lines_in_r3_become_planes() {
        let s = |xs: &[f64]| Subspace::span(3, &[v(xs)]).unwrap();
        let fam = SubspaceFamily::new(3, vec![s(&[1.0, 0.0, 0.0]), s(&[0.0, 1.0, 0.0]), s(&[1.0, 1.0, 1.0])]).unwrap();
        // x + y and x - y are each orthogonal to some of the three lines
        let x = v(&[1.0, 1.0, -2.0]);
        let y = v(&[-1.0, 1.0, 0.0]);
        let mx = fam.measure(&x).unwrap();
        let my = fam.measure(&y).unwrap();
        assert!((mx[0] - my[0]).abs() < 1e-15 && (mx[1] - my[1]).abs() < 1e-15 && (mx[2] - my[2]).abs() < 1e-15);
        let out = extend_to_hyperplanes(&fam, &x, &y).unwrap();
        assert!(out.dims().iter().all(|&d| d == 2));
        let (ax, ay) = (out.measure(&x).unwrap(), out.measure(&y).unwrap());
        let scale = x.norm_squared().max(y.norm_squared());
        for (a, b) in ax.iter().zip(&ay) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
        for (orig, ext) in fam.subspaces().iter().zip(out.subspaces()) {
            // W_n is contained in W'_n
            let p = ext.projection();
            for b in orig.basis() {
                assert!((&p * &b - &b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_witness_rejected() {
        let fam = SubspaceFamily::new(2, vec![Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap()]).unwrap();
        assert!(matches!(
            extend_to_hyperplanes(&fam, &v(&[1.0, 0.0]), &v(&[0.0, 1.0])),
            Err(Error::NotAWitness(_))
        ));
    }
}
