//! The heavy-tailed observable and its regular-variation data: scaling and
//! centering constants, the truncated-moment constant `c_alpha(eps)`, the
//! Levy measure on interval unions, and Karamata truncated-moment checks.
//!
//! The observable is `phi(x) = |x - x0|^(-1/alpha)`, which is regularly
//! varying of index `alpha` with constant slowly varying function
//! `L(t) == b`, where `b = lim (1/eps) integral_{|x-x0|<eps} h`. Under that
//! model the scaling sequence solves `n nu(phi > b_n) = 1` exactly:
//! `b_n = (b n)^(1/alpha)`.
//!
//! Densities are piecewise constant on a uniform grid over `[0,1]` (cell
//! values, mass = mean of cells). All moments against such densities are
//! computed cell-by-cell with the closed-form antiderivative of
//! `|x - x0|^q`, so the singular cell around `x0` is exact and there is no
//! quadrature error beyond the density discretization itself.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Regular-variation data of the observable: index, pole location, tail
/// balance and the constant slowly varying function.
#[derive(Debug, Clone, Copy)]
pub struct TailModel {
    alpha: f64,
    x0: f64,
    p_pos: f64,
    b_const: f64,
}

impl TailModel {
    /// `alpha` in `(0,2)` strictly, `x0` in `[0,1]`, `b_const > 0`.
    /// The observable `phi` is positive, so `p = 1`; other `p` are allowed
    /// for the Levy-measure side of the model.
    pub fn new(alpha: f64, x0: f64, p_pos: f64, b_const: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("alpha must be in (0,2), got {alpha}")));
        }
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::Domain(format!("x0 must be in [0,1], got {x0}")));
        }
        if !(0.0..=1.0).contains(&p_pos) {
            return Err(Error::Domain(format!("p must be in [0,1], got {p_pos}")));
        }
        if !(b_const > 0.0) {
            return Err(Error::Domain(format!("b must be > 0, got {b_const}")));
        }
        Ok(TailModel { alpha, x0, p_pos, b_const })
    }

    /// Model for the observable itself: totally positive tails (`p = 1`).
    pub fn for_observable(alpha: f64, x0: f64, b_const: f64) -> Result<Self> {
        Self::new(alpha, x0, 1.0, b_const)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn p_pos(&self) -> f64 {
        self.p_pos
    }

    /// Skewness `beta = 2p - 1`.
    pub fn beta_skew(&self) -> f64 {
        2.0 * self.p_pos - 1.0
    }

    pub fn b_const(&self) -> f64 {
        self.b_const
    }

    /// The observable `|x - x0|^(-1/alpha)`; `+inf` at the pole. Downstream
    /// threshold counting treats the sentinel as exceeding every level.
    #[inline]
    pub fn phi_star(&self, x: f64) -> f64 {
        let d = (x - self.x0).abs();
        if d == 0.0 {
            f64::INFINITY
        } else {
            d.powf(-1.0 / self.alpha)
        }
    }

    /// Exact solution of `n * nu(phi > t) = 1` under the constant-L model:
    /// `b_n = (b n)^(1/alpha)`.
    pub fn scaling_bn(&self, n: u64) -> f64 {
        (self.b_const * n as f64).powf(1.0 / self.alpha)
    }

    /// Ball radius `t^(-alpha)` such that `phi > t  <=>  |x - x0| < radius`.
    pub fn ball_radius(&self, t: f64) -> f64 {
        t.powf(-self.alpha)
    }

    /// Centering sequence: 0 for `alpha < 1`; `(n/b_n) E(phi 1_{phi<=b_n})`
    /// for `alpha = 1`; `(n/b_n) E(phi)` for `alpha` in `(1,2)`. Expectations
    /// are taken against the supplied grid density.
    pub fn centering_cn(&self, n: u64, density: &[f64]) -> Result<f64> {
        if self.alpha < 1.0 {
            return Ok(0.0);
        }
        let bn = self.scaling_bn(n);
        let q = -1.0 / self.alpha;
        let mean = if self.alpha == 1.0 {
            let r = self.ball_radius(bn);
            truncated_power_moment(density, self.x0, q, r, f64::INFINITY)
        } else {
            let full = truncated_power_moment(density, self.x0, q, 0.0, f64::INFINITY);
            if !full.is_finite() {
                return Err(Error::Domain("mean of phi is not finite".into()));
            }
            full
        };
        Ok(n as f64 / bn * mean)
    }

    /// Empirical tail `nu(phi > t)` under the grid density.
    pub fn tail_probability(&self, density: &[f64], t: f64) -> f64 {
        truncated_power_moment(density, self.x0, 0.0, 0.0, self.ball_radius(t))
    }

    /// Karamata truncated-moment report at truncation level `eps * b_n`.
    pub fn karamata_ratio_check(&self, n: u64, trunc_eps: f64, density: &[f64]) -> KaramataReport {
        let bn = self.scaling_bn(n);
        let t = trunc_eps * bn;
        let r = self.ball_radius(t);
        let tail = truncated_power_moment(density, self.x0, 0.0, 0.0, r);
        let second = truncated_power_moment(density, self.x0, -2.0 / self.alpha, r, f64::INFINITY);
        let second_ratio = second / (t * t * tail);
        let first = if self.alpha < 1.0 {
            let m1 = truncated_power_moment(density, self.x0, -1.0 / self.alpha, r, f64::INFINITY);
            Some(m1 / (t * tail))
        } else {
            None
        };
        KaramataReport {
            n,
            b_n: bn,
            trunc_eps,
            second_moment_observed: second_ratio,
            second_moment_target: self.alpha / (2.0 - self.alpha),
            first_moment_observed: first,
            first_moment_target: if self.alpha < 1.0 { Some(self.alpha / (1.0 - self.alpha)) } else { None },
        }
    }

    /// Levy measure of an interval union under this model's `(alpha, p)`.
    pub fn levy_measure(&self, j: &IntervalUnion) -> f64 {
        let a = self.alpha;
        j.parts()
            .iter()
            .map(|&(x, y)| {
                if x > 0.0 {
                    self.p_pos * (x.powf(-a) - if y.is_infinite() { 0.0 } else { y.powf(-a) })
                } else {
                    // y < 0 guaranteed by IntervalUnion validation
                    (1.0 - self.p_pos)
                        * ((-y).powf(-a) - if x.is_infinite() { 0.0 } else { (-x).powf(-a) })
                }
            })
            .sum()
    }
}

/// Truncated-moment report: observed ratios against the Karamata targets
/// `alpha/(2-alpha)` (second moment) and `alpha/(1-alpha)` (first moment,
/// `alpha < 1` only).
#[derive(Debug, Clone)]
pub struct KaramataReport {
    pub n: u64,
    pub b_n: f64,
    pub trunc_eps: f64,
    pub second_moment_observed: f64,
    pub second_moment_target: f64,
    pub first_moment_observed: Option<f64>,
    pub first_moment_target: Option<f64>,
}

/// `c_alpha(eps)`: 0 for `alpha` in `(0,1)`; `-beta ln(eps)` at `alpha = 1`;
/// `eps^(1-alpha) beta alpha / (alpha - 1)` for `alpha` in `(1,2)`.
pub fn c_alpha_eps(alpha: f64, beta_skew: f64, eps: f64) -> f64 {
    debug_assert!(eps > 0.0);
    if alpha < 1.0 {
        0.0
    } else if alpha == 1.0 {
        -beta_skew * eps.ln()
    } else {
        eps.powf(1.0 - alpha) * beta_skew * alpha / (alpha - 1.0)
    }
}

/// A finite union of half-open intervals `(x, y]` staying away from 0
/// (each part has `x > 0` or `y < 0`).
#[derive(Debug, Clone)]
pub struct IntervalUnion {
    parts: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, y) in &parts {
            if !(x < y) {
                return Err(Error::Domain(format!("interval ({x}, {y}] is empty")));
            }
            if !(x > 0.0 || y < 0.0) {
                return Err(Error::Domain(format!("interval ({x}, {y}] touches 0")));
            }
        }
        parts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in parts.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Domain(format!(
                    "intervals ({}, {}] and ({}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IntervalUnion { parts })
    }

    /// Single interval `(x, y]`.
    pub fn interval(x: f64, y: f64) -> Result<Self> {
        Self::new(vec![(x, y)])
    }

    /// `(lambda, +inf)`.
    pub fn above(lambda: f64) -> Result<Self> {
        Self::new(vec![(lambda, f64::INFINITY)])
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    /// Membership in the union; `+inf` values land in unbounded parts.
    pub fn contains(&self, v: f64) -> bool {
        self.parts.iter().any(|&(x, y)| v > x && v <= y)
    }

    /// Smallest `|v|` over the union's closure; positive by construction.
    pub fn distance_to_zero(&self) -> f64 {
        self.parts
            .iter()
            .map(|&(x, y)| if x > 0.0 { x } else { -y })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Independent quadrature route for the Levy measure: integrates the density
/// `alpha p |x|^(-alpha-1)` in log space by adaptive Simpson. Unbounded parts
/// are cut where the remaining closed-form tail drops below 1e-13.
pub fn levy_measure_quadrature(alpha: f64, p_pos: f64, j: &IntervalUnion, tol: f64) -> f64 {
    let mass_one_sided = |x: f64, y: f64, w: f64| -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let y_cut = if y.is_infinite() { (w / 1e-13).powf(1.0 / alpha).max(x * 2.0) } else { y };
        let residual = if y.is_infinite() { w * y_cut.powf(-alpha) } else { 0.0 };
        // substitute x = e^t
        let f = |t: f64| -> f64 {
            let s = t.exp();
            w * alpha * s.powf(-alpha)
        };
        adaptive_simpson(f, x.ln(), y_cut.ln(), tol) + residual
    };
    j.parts()
        .iter()
        .map(|&(x, y)| {
            if x > 0.0 {
                mass_one_sided(x, y, p_pos)
            } else {
                mass_one_sided(-y, if x.is_infinite() { f64::INFINITY } else { -x }, 1.0 - p_pos)
            }
        })
        .sum()
}

/// `integral_a^b |x - x0|^q dx` by the closed-form antiderivative. Handles
/// intervals straddling the pole (requires `q > -1` there) and `q = -1`.
fn pow_primitive(u: f64, q: f64) -> f64 {
    // antiderivative of |u|^q on u >= 0
    if q == -1.0 {
        u.ln()
    } else {
        u.powf(q + 1.0) / (q + 1.0)
    }
}

fn pow_integral(a: f64, b: f64, x0: f64, q: f64) -> f64 {
    debug_assert!(a <= b);
    let ua = a - x0;
    let ub = b - x0;
    if ua >= 0.0 {
        pow_primitive(ub, q) - pow_primitive(ua, q)
    } else if ub <= 0.0 {
        pow_primitive(-ua, q) - pow_primitive(-ub, q)
    } else {
        // straddles the pole; integrable only for q > -1
        pow_primitive(ub, q) + pow_primitive(-ua, q)
    }
}

/// `integral |x - x0|^q h(x) dx` over `{x in [0,1] : r_min <= |x - x0| < r_max}`
/// for a piecewise-constant grid density `h` (cell values, mean-normalized).
/// Exact per cell, including the singular cell.
pub fn truncated_power_moment(density: &[f64], x0: f64, q: f64, r_min: f64, r_max: f64) -> f64 {
    let k = density.len();
    debug_assert!(k > 0);
    let mut total = 0.0;
    let mut add_interval = |mut a: f64, mut b: f64| {
        a = a.max(0.0);
        b = b.min(1.0);
        if a >= b {
            return;
        }
        let i0 = ((a * k as f64).floor() as usize).min(k - 1);
        let i1 = ((b * k as f64).ceil() as usize).min(k);
        for i in i0..i1 {
            let lo = (i as f64 / k as f64).max(a);
            let hi = ((i + 1) as f64 / k as f64).min(b);
            if lo < hi {
                total += density[i] * pow_integral(lo, hi, x0, q);
            }
        }
    };
    if r_min <= 0.0 {
        // single interval around the pole, radius r_max
        add_interval(x0 - r_max, x0 + r_max);
    } else {
        add_interval(x0 - r_max, x0 - r_min);
        add_interval(x0 + r_min, x0 + r_max);
    }
    total
}

/// Estimate `b = lim (1/eps) integral_{|x-x0|<eps} h` over a decreasing
/// `eps_grid` by least-squares linear extrapolation in `eps`. Errors when the
/// fit residual exceeds `diag_tol` (the sequence did not settle).
pub fn local_density_constant(
    density: &[f64],
    x0: f64,
    eps_grid: &[f64],
    diag_tol: f64,
) -> Result<f64> {
    if eps_grid.len() < 2 {
        return Err(Error::Domain("eps_grid needs at least two levels".into()));
    }
    let vals: Vec<(f64, f64)> = eps_grid
        .iter()
        .map(|&eps| (eps, truncated_power_moment(density, x0, 0.0, 0.0, eps) / eps))
        .collect();
    // least squares v = b + c * eps
    let n = vals.len() as f64;
    let sx: f64 = vals.iter().map(|v| v.0).sum();
    let sy: f64 = vals.iter().map(|v| v.1).sum();
    let sxx: f64 = vals.iter().map(|v| v.0 * v.0).sum();
    let sxy: f64 = vals.iter().map(|v| v.0 * v.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_resid = vals
        .iter()
        .map(|&(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    if max_resid > diag_tol {
        return Err(Error::NonConvergence(format!(
            "local density estimate did not settle: max residual {max_resid:.3e} over eps grid"
        )));
    }
    Ok(intercept)
}

/// Default eps grid for the local density constant: `0.1 * 2^-k`, `k = 0..=6`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=6).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LEBESGUE: [f64; 64] = [1.0; 64];

    #[test]
    fn phi_star_values() {
        let m = TailModel::for_observable(0.5, 0.3, 1.0).unwrap();
        // |x - x0| = 1 at x = 1.3 is out of range; use x0 = 0 instead
        let m0 = TailModel::for_observable(0.5, 0.0, 1.0).unwrap();
        assert_eq!(m0.phi_star(1.0), 1.0);
        assert!((m.phi_star(0.31) - 1e4).abs() / 1e4 < 1e-12);
        assert_eq!(m.phi_star(0.3), f64::INFINITY);
    }

    #[test]
    fn phi_star_monotone_in_distance() {
        let m = TailModel::for_observable(0.75, 0.4, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let v = m.phi_star(0.4 + i as f64 * 0.01);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn scaling_bn_closed_form() {
        let m = TailModel::for_observable(1.0, 0.5, 1.0).unwrap();
        assert!((m.scaling_bn(100) - 100.0).abs() < 1e-12);
        let m = TailModel::for_observable(0.5, 0.5, 2.0).unwrap();
        assert!((m.scaling_bn(10) - 400.0).abs() < 1e-9);
    }

    #[test]
    fn tail2_identity_exact() {
        // n * (model tail at lambda b_n) = lambda^(-alpha), algebraically
        for alpha in [0.5, 1.0, 1.5] {
            let m = TailModel::for_observable(alpha, 0.5, 2.0).unwrap();
            for n in [10u64, 1000, 1_000_000] {
                for lambda in [0.5, 1.0, 2.0, 7.0] {
                    let t = lambda * m.scaling_bn(n);
                    // model tail: b * t^(-alpha)
                    let model_tail = m.b_const() * t.powf(-alpha);
                    let lhs = n as f64 * model_tail;
                    assert!((lhs - lambda.powf(-alpha)).abs() < 1e-10, "alpha={alpha} n={n}");
                }
            }
        }
    }

    #[test]
    fn centering_zero_below_one() {
        let m = TailModel::for_observable(0.5, 0.3, 1.7).unwrap();
        for n in [1u64, 10, 100000] {
            assert_eq!(m.centering_cn(n, &LEBESGUE).unwrap(), 0.0);
        }
    }

    #[test]
    fn centering_matches_closed_form_alpha_three_halves() {
        // E_Leb |x - 0.5|^(-2/3) = 2 * 3 * (1/2)^(1/3), oracle: antiderivative
        // 3 u^(1/3) on each side of the pole.
        let mean_oracle = 6.0 * 0.5f64.powf(1.0 / 3.0);
        let fine = vec![1.0; 4096];
        let m = TailModel::for_observable(1.5, 0.5, 2.0).unwrap();
        let n = 1000u64;
        let bn = m.scaling_bn(n);
        let cn = m.centering_cn(n, &fine).unwrap();
        assert!((cn - n as f64 / bn * mean_oracle).abs() < 1e-9, "cn={cn}");
    }

    #[test]
    fn centering_alpha_one_truncated_mean_closed_form() {
        // E_Leb(phi 1_{phi <= T}) with phi = |x-0.5|^{-1} and T >= 2:
        // = ln(0.5 T) + ln(0.5 T) = 2 ln(T/2)
        let fine = vec![1.0; 4096];
        let m = TailModel::for_observable(1.0, 0.5, 2.0).unwrap();
        let n = 50u64;
        let bn = m.scaling_bn(n); // 100
        let expect = 2.0 * (bn / 2.0).ln();
        let cn = m.centering_cn(n, &fine).unwrap();
        assert!((cn - n as f64 / bn * expect).abs() < 1e-6, "cn={cn} expect={}", n as f64 / bn * expect);
    }

    #[test]
    fn c_alpha_table() {
        assert_eq!(c_alpha_eps(0.5, 1.0, 0.123), 0.0);
        assert!((c_alpha_eps(1.0, 1.0, (-1.0f64).exp()) - 1.0).abs() < 1e-12);
        assert!((c_alpha_eps(1.5, 1.0, 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn c_alpha_continuous_in_eps() {
        for alpha in [0.5, 1.0, 1.5] {
            for i in 0..500 {
                let eps = 0.002 * (i as f64 + 1.0);
                let v = c_alpha_eps(alpha, 1.0, eps);
                let v2 = c_alpha_eps(alpha, 1.0, eps * (1.0 + 1e-9));
                assert!((v2 - v).abs() <= 1e-6 * (1.0 + v.abs()), "jump at alpha={alpha} eps={eps}");
            }
        }
    }

    #[test]
    fn levy_measure_values() {
        let m = TailModel::new(1.0, 0.5, 1.0, 1.0).unwrap();
        assert!((m.levy_measure(&IntervalUnion::above(1.0).unwrap()) - 1.0).abs() < 1e-12);
        assert!((m.levy_measure(&IntervalUnion::interval(1.0, 2.0).unwrap()) - 0.5).abs() < 1e-12);
        assert_eq!(m.levy_measure(&IntervalUnion::interval(-2.0, -1.0).unwrap()), 0.0);
        let m2 = TailModel::new(1.0, 0.5, 0.25, 1.0).unwrap();
        assert!((m2.levy_measure(&IntervalUnion::interval(-2.0, -1.0).unwrap()) - 0.75 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn levy_measure_additive_and_matches_quadrature() {
        let m = TailModel::new(0.7, 0.5, 0.6, 1.0).unwrap();
        let mut rng = crate::driving::CounterRng::new(31337);
        for _ in 0..50 {
            let a = 0.1 + 3.0 * rng.next_uniform();
            let len = 0.1 + 2.0 * rng.next_uniform();
            let neg_hi = -(0.1 + rng.next_uniform());
            let neg_lo = neg_hi - (0.2 + rng.next_uniform());
            let u = IntervalUnion::new(vec![(a, a + len), (neg_lo, neg_hi)]).unwrap();
            let closed = m.levy_measure(&u);
            let quad = levy_measure_quadrature(0.7, 0.6, &u, 1e-11);
            assert!((closed - quad).abs() <= 1e-8, "closed={closed} quad={quad}");
            // additivity over the two parts
            let p1 = m.levy_measure(&IntervalUnion::interval(a, a + len).unwrap());
            let p2 = m.levy_measure(&IntervalUnion::interval(neg_lo, neg_hi).unwrap());
            assert!((closed - (p1 + p2)).abs() < 1e-12);
        }
    }

    #[test]
    fn levy_measure_monotone_under_inclusion() {
        let m = TailModel::new(1.2, 0.5, 0.8, 1.0).unwrap();
        let small = IntervalUnion::interval(1.0, 2.0).unwrap();
        let big = IntervalUnion::interval(0.5, 3.0).unwrap();
        assert!(m.levy_measure(&small) <= m.levy_measure(&big));
    }

    #[test]
    fn interval_union_rejects_zero_touch() {
        assert!(IntervalUnion::interval(0.0, 1.0).is_err());
        assert!(IntervalUnion::interval(-1.0, 0.0).is_err());
        assert!(IntervalUnion::interval(-1.0, 1.0).is_err());
        assert!(IntervalUnion::new(vec![(1.0, 3.0), (2.0, 4.0)]).is_err());
    }

    #[test]
    fn local_density_lebesgue_is_two() {
        let b = local_density_constant(&LEBESGUE, 0.37, &default_eps_grid(), 0.1).unwrap();
        assert!((b - 2.0).abs() < 1e-10, "b={b}");
    }

    #[test]
    fn local_density_linear_density() {
        // h(x) = 2x on a fine grid, x0 = 0.5 -> b = 2 h(0.5) = 2
        let k = 4096;
        let h: Vec<f64> = (0..k).map(|i| 2.0 * (i as f64 + 0.5) / k as f64).collect();
        let b = local_density_constant(&h, 0.5, &default_eps_grid(), 0.1).unwrap();
        assert!((b - 2.0).abs() < 1e-3, "b={b}");
    }

    #[test]
    fn karamata_ratios_lebesgue() {
        let m = TailModel::for_observable(0.5, 0.5, 2.0).unwrap();
        let fine = vec![1.0; 4096];
        let rep = m.karamata_ratio_check(1_000_000, 0.5, &fine);
        assert!((rep.second_moment_observed - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02,
            "second ratio {}", rep.second_moment_observed);
        let first = rep.first_moment_observed.unwrap();
        assert!((first - 1.0).abs() < 0.02, "first ratio {first}");
    }

    proptest! {
        #[test]
        fn union_measure_additive_on_random_splits(split in 1.05f64..4.0) {
            let m = TailModel::new(0.9, 0.5, 1.0, 1.0).unwrap();
            let whole = IntervalUnion::interval(1.0, 5.0).unwrap();
            let left = IntervalUnion::interval(1.0, split).unwrap();
            let right = IntervalUnion::interval(split, 5.0).unwrap();
            let d = m.levy_measure(&whole) - m.levy_measure(&left) - m.levy_measure(&right);
            prop_assert!(d.abs() < 1e-12);
        }
    }
}
