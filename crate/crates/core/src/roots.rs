//! Scalar root finding shared by the solvers.

/// Safeguarded Newton iteration inside a sign-changing bracket.
///
/// `f` returns the residual and its derivative. `f_lo` is the residual at
/// `lo`, which may lie on either side of `hi`; the residual at `hi` must
/// have the opposite sign. Newton steps that leave the bracket fall back to
/// bisection. Returns the root and the number of evaluations.
pub(crate) fn safeguarded_newton<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    f_lo: f64,
    x0: f64,
    ftol: f64,
    max_iter: usize,
) -> Option<(f64, usize)>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut lo_sign = f_lo.signum();
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
        lo_sign = -lo_sign;
    }
    let mut x = x0.clamp(lo, hi);
    for iter in 1..=max_iter {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return None;
        }
        if fx.abs() <= ftol {
            return Some((x, iter));
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        // bracket collapsed to rounding level: the root is as good as it gets
        if (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Some((next, iter));
        }
        x = next;
    }
    None
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= xtol {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt_two() {
        let (x, _) = safeguarded_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, -2.0, 0.1, 1e-15, 100).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_flat_start() {
        // derivative vanishes at the start point, forcing a bisection step
        let (x, _) =
            safeguarded_newton(|x| (x.powi(3) - 0.001, 3.0 * x * x), -1.0, 1.0, -1.001, 0.0, 1e-15, 200).unwrap();
        assert!((x - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
        let r = bisect(|x| x - 0.3, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.3).abs() < 1e-13);
    }
}
