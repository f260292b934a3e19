//! Small numeric helpers shared across modules.

/// Maximum number of bisection steps.
pub const BISECTION_MAX_ITER: usize = 200;
/// Bisection stops once the bracketing interval is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-13;

/// Generalized inverse `inf{x ∈ [lo, hi] : f(x) ≥ y}` of a non-decreasing `f`
/// by bisection. Returns the left end of the final bracket.
pub fn generalized_inverse<F>(f: F, y: f64, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if f(lo) >= y {
        return lo;
    }
    if f(hi) < y {
        return hi;
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Clip a value that should lie in `[0, 1]`, tolerating round-off of `tol`.
/// Returns `None` when the value is further out than that.
pub fn clip_unit(x: f64, tol: f64) -> Option<f64> {
    if x.is_nan() || x < -tol || x > 1.0 + tol {
        None
    } else {
        Some(x.clamp(0.0, 1.0))
    }
}
