//! One-dimensional root finding and minimization used by the calibrators.

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a non-increasing `f`,
/// by bisection until the bracket is below `rel_tol · hi` (plus a tiny
/// absolute floor).
pub(crate) fn bisect_decreasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs() + 1e-300 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Expands `hi` geometrically until `f(hi) <= target` or `limit` is passed.
/// Returns `None` when the target is not reached below `limit`.
pub(crate) fn bracket_upper<F>(mut f: F, target: f64, start: f64, limit: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start.max(1e-9);
    loop {
        if f(hi) <= target {
            return Some(hi);
        }
        if hi >= limit {
            return None;
        }
        hi = (hi * 2.0).min(limit);
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization on `[a, b]`; returns `(x_min, f(x_min))`.
pub(crate) fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, abs_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= abs_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_root() {
        let x = bisect_decreasing(|x| -x * x, -2.0, 0.0, 4.0, 1e-14);
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bracket_expansion() {
        assert_eq!(bracket_upper(|x| 10.0 - x, 0.0, 1.0, 100.0), Some(16.0));
        assert_eq!(bracket_upper(|x| 10.0 - x, 0.0, 1.0, 8.0), None);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-10);
        // f is flat to within machine epsilon over |x − x*| ≲ 1e-8
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}
