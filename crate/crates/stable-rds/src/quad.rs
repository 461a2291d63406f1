//! Adaptive Simpson quadrature over real- and complex-valued integrands.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

pub(crate) trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

fn simpson<T: Integrand>(fa: T, fm: T, fb: T, h: f64) -> T {
    (fa + fm * 4.0 + fb) * (h / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn adapt<T: Integrand, F: Fn(f64) -> T>(
    f: &F,
    a: f64,
    b: f64,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: f64,
    depth: u32,
) -> T {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        left + right + delta * (1.0 / 15.0)
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<T: Integrand, F: Fn(f64) -> T>(f: F, a: f64, b: f64, tol: f64) -> T {
    if a == b {
        return T::zero();
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Adaptive Simpson over a pre-split panel list; each panel gets an equal
/// share of the tolerance. Used for oscillatory integrands where a single
/// top-level Simpson estimate is meaningless.
pub(crate) fn panel_simpson<T: Integrand, F: Fn(f64) -> T>(
    f: F,
    knots: &[f64],
    tol: f64,
) -> T {
    let mut acc = T::zero();
    let per = tol / knots.len().max(1) as f64;
    for w in knots.windows(2) {
        acc = acc + adaptive_simpson(&f, w[0], w[1], per);
    }
    acc
}
