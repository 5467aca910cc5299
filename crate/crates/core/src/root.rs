//! Bracketed scalar root finding.
//!
//! Every root in the crate is isolated by sampling sign changes and then
//! refined by plain bisection, so uniqueness conditions can be checked
//! before a root is accepted.

/// Parameter tolerance used for every bisection.
pub const PARAM_TOL: f64 = 1e-12;

const MAX_ITER: usize = 200;

#[inline]
fn positive(v: f64) -> bool {
    v > 0.0
}

/// True when `a` and `b` lie in different sign classes (`> 0` versus `<= 0`).
#[inline]
pub fn crosses(a: f64, b: f64) -> bool {
    positive(a) != positive(b)
}

/// Bisection on `[a, b]` given `f(a)` and `f(b)` in different sign classes.
///
/// Stops when the bracket is narrower than `tol` or when `f` vanishes
/// exactly, returning the midpoint of the final bracket.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, fb: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(crosses(fa, fb), "bisect called without a sign change");
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if crosses(fa, fm) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let _ = fb;
    0.5 * (a + b)
}

/// [`bisect`] for fallible functions: the first error aborts the search.
pub fn try_bisect<F, E>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, tol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut err = None;
    let r = bisect(
        |x| {
            if err.is_some() {
                return 0.0;
            }
            match f(x) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        a,
        b,
        fa,
        fb,
        tol,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Indices `i` such that samples `i` and `i + 1` cross.
pub fn sign_change_indices(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| crosses(w[0], w[1]))
        .map(|(i, _)| i)
        .collect()
}

/// Like [`sign_change_indices`] but also checks the wrap-around pair
/// `(last, first)`, reported as index `len - 1`.
pub fn cyclic_sign_change_indices(values: &[f64]) -> Vec<usize> {
    let mut out = sign_change_indices(values);
    if let (Some(&first), Some(&last)) = (values.first(), values.last()) {
        if values.len() > 1 && crosses(last, first) {
            out.push(values.len() - 1);
        }
    }
    out
}
