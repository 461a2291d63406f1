//! Ulam-discretized transfer operators.
//!
//! The operator of a map `T` on a uniform `k`-grid has entries
//! `M[i][j] = m(I_i intersect T^{-1} I_j) / m(I_i)`, computed exactly per
//! monotone branch by interval preimage arithmetic: every branch of both
//! families has a closed-form or bisection inverse, so no sampling noise
//! enters the matrix. Rows are sparse (a map with derivative `T'` spreads a
//! cell over about `T' + 1` image cells).
//!
//! Densities are piecewise constant (cell values; mass = mean). The operator
//! acts on densities from the right (`f -> f * M`), preserves mass, and the
//! annealed operator is the probability-weighted average of the per-map
//! matrices.

use crate::driving::OmegaPath;
use crate::error::{Error, Result};
use crate::maps::{Family, MapFamily, MapSpec};
use rayon::prelude::*;

/// Piecewise-constant density on a uniform grid over `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    cells: Vec<f64>,
}

impl DensityVector {
    pub fn constant(k: usize) -> Self {
        DensityVector { cells: vec![1.0; k] }
    }

    pub fn from_cells(cells: Vec<f64>) -> Self {
        DensityVector { cells }
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Total mass `integral f dm` = mean of cell values.
    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        if m > 0.0 {
            for c in &mut self.cells {
                *c /= m;
            }
        }
        self
    }

    /// `L1(m)` distance to another density on the same grid.
    pub fn l1_distance(&self, other: &DensityVector) -> f64 {
        assert_eq!(self.k(), other.k());
        self.cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.cells.len() as f64
    }

    /// Midpoint of cell `i`.
    pub fn x_mid(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.cells.len() as f64
    }

    /// Integral of the density over a union of subintervals of `[0,1]`.
    pub fn measure(&self, parts: &[(f64, f64)]) -> f64 {
        let k = self.cells.len();
        let mut total = 0.0;
        for &(a, b) in parts {
            let a = a.max(0.0);
            let b = b.min(1.0);
            if a >= b {
                continue;
            }
            let i0 = ((a * k as f64).floor() as usize).min(k - 1);
            let i1 = ((b * k as f64).ceil() as usize).min(k);
            for i in i0..i1 {
                let lo = (i as f64 / k as f64).max(a);
                let hi = ((i + 1) as f64 / k as f64).min(b);
                if lo < hi {
                    total += self.cells[i] * (hi - lo);
                }
            }
        }
        total
    }

    /// Comparability constant over `[delta, 1]`: smallest `C` with
    /// `1/C <= f(x)/mass <= C` on that range.
    pub fn comparability_constant(&self, delta: f64) -> f64 {
        let k = self.cells.len();
        let mass = self.mass();
        let start = ((delta * k as f64).floor() as usize).min(k - 1);
        let mut c: f64 = 1.0;
        for i in start..k {
            let r = self.cells[i] / mass;
            if r <= 0.0 {
                return f64::INFINITY;
            }
            c = c.max(r).max(1.0 / r);
        }
        c
    }

    /// Inverse-CDF sampler for this density.
    pub fn sampler(&self) -> DensitySampler {
        let k = self.cells.len();
        let total: f64 = self.cells.iter().sum();
        let mut cdf = Vec::with_capacity(k + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for &c in &self.cells {
            acc += c / total;
            cdf.push(acc);
        }
        cdf[k] = 1.0;
        DensitySampler { cdf, k }
    }
}

/// Maps uniforms in `[0,1)` to samples of a piecewise-constant density.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    cdf: Vec<f64>,
    k: usize,
}

impl DensitySampler {
    pub fn sample(&self, u: f64) -> f64 {
        let i = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
        .min(self.k - 1);
        let lo = self.cdf[i];
        let hi = self.cdf[i + 1];
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        (i as f64 + frac) / self.k as f64
    }
}

/// Where an Ulam matrix came from.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSource {
    Map(Family),
    Annealed,
    Composite,
}

/// Row-stochastic `k x k` discretization of a transfer operator,
/// sparse by rows.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    k: usize,
    rows: Vec<Vec<(u32, f64)>>,
    source: OperatorSource,
}

impl UlamOperator {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source(&self) -> &OperatorSource {
        &self.source
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for r in &self.rows {
            for &(j, w) in r {
                out[j as usize] += w;
            }
        }
        out
    }

    /// Push a density forward: `(fM)_j = sum_i f_i M_ij`. Mass preserving.
    pub fn apply_left(&self, f: &DensityVector) -> DensityVector {
        assert_eq!(f.k(), self.k);
        let mut out = vec![0.0; self.k];
        for (i, row) in self.rows.iter().enumerate() {
            let fi = f.cells[i];
            if fi == 0.0 {
                continue;
            }
            for &(j, w) in row {
                out[j as usize] += fi * w;
            }
        }
        DensityVector { cells: out }
    }

    /// Koopman (conditional-expectation) action on grid functions:
    /// `(Mg)_i = sum_j M_ij g_j`, the grid version of `g . T`.
    pub fn apply_koopman(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.k);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * g[j as usize]).sum())
            .collect()
    }

    /// Cocycle composition: `self` applied first, `then` second
    /// (`f * (self.compose(then)) = (f * self) * then`).
    pub fn compose(&self, then: &UlamOperator) -> Result<UlamOperator> {
        if self.k != then.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: then.k });
        }
        let rows: Vec<Vec<(u32, f64)>> = self
            .rows
            .par_iter()
            .map(|row| {
                let mut buf = vec![0.0; self.k];
                for &(l, w) in row {
                    for &(j, w2) in &then.rows[l as usize] {
                        buf[j as usize] += w * w2;
                    }
                }
                compress(&buf)
            })
            .collect();
        Ok(UlamOperator { k: self.k, rows, source: OperatorSource::Composite })
    }
}

fn compress(buf: &[f64]) -> Vec<(u32, f64)> {
    buf.iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(j, &w)| (j as u32, w))
        .collect()
}

/// Exact Ulam matrix of one map: entry `(i,j)` is the fraction of cell `i`
/// whose image lands in cell `j`, obtained by cutting cell `i` at the branch
/// preimages of the grid lines.
pub fn ulam_matrix(spec: &MapSpec, k: usize) -> UlamOperator {
    assert!(k >= 2);
    let branches = spec.branches();
    let rows: Vec<Vec<(u32, f64)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let a0 = i as f64 / k as f64;
            let b0 = (i + 1) as f64 / k as f64;
            let mut buf: Vec<(u32, f64)> = Vec::with_capacity(8);
            for br in &branches {
                let lo = a0.max(br.lo());
                let hi = b0.min(br.hi());
                if hi <= lo {
                    continue;
                }
                let ya = br.eval(lo).clamp(0.0, 1.0);
                let yb = br.eval(hi).clamp(0.0, 1.0);
                let mut x_prev = lo;
                let mut j = ((ya * k as f64).floor() as usize).min(k - 1);
                loop {
                    let cell_top = (j + 1) as f64 / k as f64;
                    if yb <= cell_top || j == k - 1 {
                        let w = (hi - x_prev).max(0.0) * k as f64;
                        if w > 0.0 {
                            buf.push((j as u32, w));
                        }
                        break;
                    }
                    let x_cut = br.inverse(cell_top).clamp(x_prev, hi);
                    let w = (x_cut - x_prev) * k as f64;
                    if w > 0.0 {
                        buf.push((j as u32, w));
                    }
                    x_prev = x_cut;
                    j += 1;
                }
            }
            merge_entries(buf)
        })
        .collect();
    UlamOperator { k, rows, source: OperatorSource::Map(spec.family()) }
}

fn merge_entries(mut buf: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    buf.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(buf.len());
    for (j, w) in buf {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += w,
            _ => out.push((j, w)),
        }
    }
    out
}

/// Per-map Ulam operators for a family, plus the annealed average.
#[derive(Debug, Clone)]
pub struct UlamCocycle {
    k: usize,
    ops: Vec<UlamOperator>,
}

impl UlamCocycle {
    pub fn new(family: &MapFamily, k: usize) -> Self {
        let ops = family.specs().iter().map(|s| ulam_matrix(s, k)).collect();
        UlamCocycle { k, ops }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn op(&self, symbol: usize) -> &UlamOperator {
        &self.ops[symbol]
    }

    pub fn ops(&self) -> &[UlamOperator] {
        &self.ops
    }

    /// Annealed operator `sum_i p_i P_i`.
    pub fn annealed(&self, probs: &[f64]) -> Result<UlamOperator> {
        if probs.len() != self.ops.len() {
            return Err(Error::DimensionMismatch { expected: self.ops.len(), got: probs.len() });
        }
        let rows: Vec<Vec<(u32, f64)>> = (0..self.k)
            .map(|i| {
                let mut buf = vec![0.0; self.k];
                for (op, &p) in self.ops.iter().zip(probs) {
                    for &(j, w) in &op.rows[i] {
                        buf[j as usize] += p * w;
                    }
                }
                compress(&buf)
            })
            .collect();
        Ok(UlamOperator { k: self.k, rows, source: OperatorSource::Annealed })
    }

    /// Pullback sample density `h_n(omega) = P_{omega_{-1}} ... P_{omega_{-n}} 1`.
    pub fn pullback_density(&self, omega: &OmegaPath, n: usize) -> Result<DensityVector> {
        omega.require_window(-(n as i64), 1)?;
        let mut f = DensityVector::constant(self.k);
        for j in (1..=n as i64).rev() {
            f = self.ops[omega.symbol(-j)].apply_left(&f);
        }
        Ok(f)
    }

    /// One forward step of the density cocycle: `P_{omega_j} f`.
    pub fn evolve(&self, f: &DensityVector, symbol: usize) -> DensityVector {
        self.ops[symbol].apply_left(f)
    }

    /// `sum_{j=floor(ns)+1}^{floor(nt)} nu^{sigma^j omega}(A)` with the fiber
    /// measures approximated by pullback densities of depth at least `depth`:
    /// the first fiber is a depth-`depth` pullback, later fibers are evolved
    /// forward one operator at a time (depth grows along the way).
    pub fn fiber_measure_sum(
        &self,
        omega: &OmegaPath,
        region: &[(f64, f64)],
        s: f64,
        t: f64,
        n: u64,
        depth: usize,
    ) -> Result<f64> {
        if region.is_empty() {
            return Ok(0.0);
        }
        let j_start = (n as f64 * s).floor() as i64 + 1;
        let j_end = (n as f64 * t).floor() as i64;
        if j_end < j_start {
            return Ok(0.0);
        }
        omega.require_window(j_start - depth as i64, j_end)?;
        let mut f = self.pullback_density(&omega.shift(j_start), depth)?;
        let mut total = f.measure(region);
        for j in j_start..j_end {
            f = self.evolve(&f, omega.symbol(j));
            total += f.measure(region);
        }
        Ok(total)
    }
}

/// Pullback depth rule: 50 for uniformly expanding families (exponential
/// Cauchy rate), `ceil(sqrt(n))` capped at 400 for intermittent families
/// (polynomial rate).
pub fn default_pullback_depth(family: &MapFamily, n: u64) -> usize {
    let has_lsv = family.specs().iter().any(|s| matches!(s.family(), Family::Lsv(_)));
    if has_lsv {
        ((n as f64).sqrt().ceil() as usize).clamp(50, 400)
    } else {
        50
    }
}

/// Result of a stationary-density solve.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub density: DensityVector,
    pub residual: f64,
    pub iterations: usize,
}

/// Left fixed point `h = h P` by power iteration with Cesaro averaging every
/// 100 steps to damp cyclic modes. `residual` is the final `L1` step size.
pub fn stationary_density(op: &UlamOperator, tol: f64, max_iter: usize) -> Result<StationarySolution> {
    let k = op.k();
    let mut f = DensityVector::constant(k);
    let mut accum = vec![0.0; k];
    let mut in_block = 0usize;
    for it in 1..=max_iter {
        let g = op.apply_left(&f).normalized();
        let res = g.l1_distance(&f);
        for (a, &c) in accum.iter_mut().zip(g.cells()) {
            *a += c;
        }
        in_block += 1;
        if res <= tol {
            return Ok(StationarySolution { density: g.normalized(), residual: res, iterations: it });
        }
        if in_block == 100 {
            let avg: Vec<f64> = accum.iter().map(|&a| a / 100.0).collect();
            f = DensityVector::from_cells(avg).normalized();
            accum.iter_mut().for_each(|a| *a = 0.0);
            in_block = 0;
        } else {
            f = g;
        }
    }
    Err(Error::NonConvergence(format!(
        "stationary density: residual above {tol:.1e} after {max_iter} iterations"
    )))
}

/// Cone-membership report for the intermittent cone: `f >= 0`,
/// `f` non-increasing, `x^(gamma+1) f(x)` non-decreasing, and
/// `f(x) <= a x^(-gamma) mass(f)`, all checked on cell midpoints.
#[derive(Debug, Clone)]
pub struct ConeReport {
    pub ok: bool,
    pub violations: Vec<String>,
}

pub fn cone_check(f: &DensityVector, gamma_max: f64, a: f64) -> ConeReport {
    let k = f.k();
    let mass = f.mass();
    let mut violations = Vec::new();
    let rel_tol = 1e-9;
    for i in 0..k {
        if f.cells()[i] < 0.0 {
            violations.push(format!("negative cell {i}"));
            break;
        }
    }
    for i in 0..k - 1 {
        let (a0, a1) = (f.cells()[i], f.cells()[i + 1]);
        if a1 > a0 * (1.0 + rel_tol) + 1e-300 {
            violations.push(format!("not non-increasing at cells {i},{}", i + 1));
            break;
        }
    }
    for i in 0..k - 1 {
        let g0 = f.x_mid(i).powf(gamma_max + 1.0) * f.cells()[i];
        let g1 = f.x_mid(i + 1).powf(gamma_max + 1.0) * f.cells()[i + 1];
        if g1 < g0 * (1.0 - rel_tol) - 1e-300 {
            violations.push(format!("x^(gamma+1) f not non-decreasing at cells {i},{}", i + 1));
            break;
        }
    }
    for i in 0..k {
        let bound = a * f.x_mid(i).powf(-gamma_max) * mass;
        if f.cells()[i] > bound * (1.0 + rel_tol) {
            violations.push(format!(
                "upper envelope violated at cell {i}: {} > {bound}",
                f.cells()[i]
            ));
            break;
        }
    }
    ConeReport { ok: violations.is_empty(), violations }
}

/// Correlation sequence and fitted decay rates of the annealed operator.
#[derive(Debug, Clone)]
pub struct DecayReport {
    /// `|cov(f, g . U^n)|` for `n = 1..=n_max`.
    pub correlations: Vec<f64>,
    /// `exp(slope)` of `ln c_n ~ n` over the fit window (geometric model).
    pub geometric_ratio: f64,
    pub geometric_r2: f64,
    /// Slope of `ln c_n ~ ln n` over the fit window (polynomial model).
    pub loglog_slope: f64,
    pub loglog_r2: f64,
    /// Range of `n` used in the fits.
    pub fit_window: (usize, usize),
}

/// Annealed correlations `|int f (g . U^n) dnu - int f dnu int g dnu|`
/// computed on the grid through the Koopman action of the annealed operator.
/// Fits start at `fit_from` and stop where correlations hit the noise floor.
pub fn decay_estimate(
    annealed: &UlamOperator,
    stationary: &DensityVector,
    f: &[f64],
    g: &[f64],
    n_max: usize,
    fit_from: usize,
) -> DecayReport {
    let k = annealed.k();
    assert_eq!(f.len(), k);
    assert_eq!(g.len(), k);
    let inner = |u: &[f64]| -> f64 {
        u.iter().zip(stationary.cells()).map(|(a, h)| a * h).sum::<f64>() / k as f64
    };
    let mean_f = inner(f);
    let mean_g = inner(g);
    let mut correlations = Vec::with_capacity(n_max);
    let mut ug = g.to_vec();
    for _ in 1..=n_max {
        ug = annealed.apply_koopman(&ug);
        let cov = f
            .iter()
            .zip(&ug)
            .zip(stationary.cells())
            .map(|((a, b), h)| a * b * h)
            .sum::<f64>()
            / k as f64
            - mean_f * mean_g;
        correlations.push(cov.abs());
    }
    let floor = correlations.first().copied().unwrap_or(0.0).max(1e-300) * 1e-12 + 1e-16;
    let mut fit_to = n_max;
    for (idx, &c) in correlations.iter().enumerate() {
        if c < floor {
            fit_to = idx; // n = idx is the last point above the floor
            break;
        }
    }
    let lo = fit_from.max(1);
    let pts: Vec<(f64, f64)> = (lo..=fit_to)
        .filter(|&n| correlations[n - 1] > 0.0)
        .map(|n| (n as f64, correlations[n - 1].ln()))
        .collect();
    let (slope_n, r2_n) = linear_fit(&pts);
    let log_pts: Vec<(f64, f64)> = pts.iter().map(|&(n, l)| (n.ln(), l)).collect();
    let (slope_ln, r2_ln) = linear_fit(&log_pts);
    DecayReport {
        correlations,
        geometric_ratio: slope_n.exp(),
        geometric_r2: r2_n,
        loglog_slope: slope_ln,
        loglog_r2: r2_ln,
        fit_window: (lo, fit_to),
    }
}

/// Least-squares slope and R^2 of `y ~ x`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = pts.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let mean_y = sy / n;
    let ss_tot: f64 = pts.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::{CounterRng, OmegaPath};
    use crate::maps::MapSpec;

    fn beta_family() -> MapFamily {
        MapFamily::new(vec![MapSpec::beta(2.1).unwrap(), MapSpec::beta(3.3).unwrap()]).unwrap()
    }

    fn lsv_family() -> MapFamily {
        MapFamily::new(vec![MapSpec::lsv(0.2).unwrap(), MapSpec::lsv(0.25).unwrap()]).unwrap()
    }

    #[test]
    fn doubling_two_cells() {
        let m = ulam_matrix(&MapSpec::beta(2.0).unwrap(), 2);
        for i in 0..2 {
            let row = m.row(i);
            assert_eq!(row.len(), 2);
            assert!((row[0].1 - 0.5).abs() < 1e-15);
            assert!((row[1].1 - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn row_sums_are_one() {
        for spec in [
            MapSpec::beta(2.1).unwrap(),
            MapSpec::beta(3.3).unwrap(),
            MapSpec::lsv(0.25).unwrap(),
            MapSpec::lsv(0.75).unwrap(),
        ] {
            for k in [2usize, 17, 256] {
                let m = ulam_matrix(&spec, k);
                for (i, s) in m.row_sums().iter().enumerate() {
                    assert!((s - 1.0).abs() < 1e-10, "{spec:?} k={k} row {i}: {s}");
                }
            }
        }
    }

    #[test]
    fn lsv_column_mass_spikes_at_origin() {
        let m = ulam_matrix(&MapSpec::lsv(0.5).unwrap(), 512);
        let cols = m.column_sums();
        let avg = cols.iter().sum::<f64>() / 512.0;
        assert!(cols[0] > 1.2 * avg, "col0 = {}, avg = {avg}", cols[0]);
    }

    #[test]
    fn doubling_stationary_is_lebesgue() {
        let m = ulam_matrix(&MapSpec::beta(2.0).unwrap(), 4096);
        let sol = stationary_density(&m, 1e-12, 10_000).unwrap();
        for &c in sol.density.cells() {
            assert!((c - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn beta_family_stationary_bounded() {
        let coc = UlamCocycle::new(&beta_family(), 1024);
        let ann = coc.annealed(&[0.5, 0.5]).unwrap();
        let sol = stationary_density(&ann, 1e-12, 20_000).unwrap();
        let min = sol.density.cells().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = sol.density.cells().iter().cloned().fold(0.0, f64::max);
        assert!(min > 0.05, "min {min}");
        assert!(max < 20.0, "max {max}");
    }

    #[test]
    fn lsv_stationary_power_law_shape() {
        // the x^(-gamma) exponent emerges slowly toward 0; needs a fine grid
        let m = ulam_matrix(&MapSpec::lsv(0.25).unwrap(), 32_768);
        let sol = stationary_density(&m, 1e-12, 50_000).unwrap();
        let h = sol.density;
        // log-log slope over cells 2..64 should be about -gamma
        let pts: Vec<(f64, f64)> = (2..64).map(|i| (h.x_mid(i).ln(), h.cells()[i].ln())).collect();
        let (slope, _) = linear_fit(&pts);
        assert!((slope + 0.25).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn annealed_single_map_is_identity_combination() {
        let fam = MapFamily::new(vec![MapSpec::beta(2.5).unwrap()]).unwrap();
        let coc = UlamCocycle::new(&fam, 64);
        let ann = coc.annealed(&[1.0]).unwrap();
        for i in 0..64 {
            assert_eq!(ann.row(i), coc.op(0).row(i));
        }
    }

    #[test]
    fn annealed_half_half_is_arithmetic_mean() {
        let coc = UlamCocycle::new(&beta_family(), 128);
        let ann = coc.annealed(&[0.5, 0.5]).unwrap();
        let f = DensityVector::from_cells(
            (0..128).map(|i| 1.0 + (i as f64 * 0.37).sin().powi(2)).collect(),
        );
        let lhs = ann.apply_left(&f);
        let a = coc.op(0).apply_left(&f);
        let b = coc.op(1).apply_left(&f);
        for j in 0..128 {
            let rhs = 0.5 * a.cells()[j] + 0.5 * b.cells()[j];
            assert!((lhs.cells()[j] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn annealed_dimension_mismatch() {
        let coc = UlamCocycle::new(&beta_family(), 32);
        assert!(coc.annealed(&[1.0]).is_err());
    }

    #[test]
    fn mass_preserved_by_application_and_products() {
        let coc = UlamCocycle::new(&beta_family(), 512);
        let mut rng = CounterRng::new(5);
        let f = DensityVector::from_cells((0..512).map(|_| rng.next_uniform() + 0.1).collect())
            .normalized();
        let g = coc.op(0).apply_left(&f);
        assert!((g.mass() - 1.0).abs() < 1e-10);
        let prod = coc.op(0).compose(coc.op(1)).unwrap();
        for s in prod.row_sums() {
            assert!((s - 1.0).abs() < 1e-10);
        }
        let h = prod.apply_left(&f);
        let h2 = coc.op(1).apply_left(&g);
        for j in 0..512 {
            assert!((h.cells()[j] - h2.cells()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn pullback_depth_zero_is_constant() {
        let coc = UlamCocycle::new(&beta_family(), 64);
        let omega = OmegaPath::sample(&[0.5, 0.5], 11, -10, 1).unwrap();
        let f = coc.pullback_density(&omega, 0).unwrap();
        assert_eq!(f, DensityVector::constant(64));
    }

    #[test]
    fn pullback_single_map_is_matrix_power() {
        let fam = MapFamily::new(vec![MapSpec::beta(2.1).unwrap()]).unwrap();
        let coc = UlamCocycle::new(&fam, 128);
        let omega = OmegaPath::sample(&[1.0], 3, -8, 1).unwrap();
        let f = coc.pullback_density(&omega, 5).unwrap();
        let mut g = DensityVector::constant(128);
        for _ in 0..5 {
            g = coc.op(0).apply_left(&g);
        }
        assert_eq!(f, g);
    }

    #[test]
    fn pullback_window_too_short() {
        let coc = UlamCocycle::new(&beta_family(), 32);
        let omega = OmegaPath::sample(&[0.5, 0.5], 3, -4, 1).unwrap();
        assert!(coc.pullback_density(&omega, 5).is_err());
    }

    #[test]
    fn beta_pullback_cauchy_geometric() {
        let coc = UlamCocycle::new(&beta_family(), 512);
        let omega = OmegaPath::sample(&[0.5, 0.5], 2718, -64, 1).unwrap();
        let mut diffs = Vec::new();
        for n in 1..=20 {
            let a = coc.pullback_density(&omega, n).unwrap();
            let b = coc.pullback_density(&omega, n + 5).unwrap();
            diffs.push(a.l1_distance(&b));
        }
        let pts: Vec<(f64, f64)> = diffs
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 1e-13)
            .map(|(i, &d)| ((i + 1) as f64, d.ln()))
            .collect();
        assert!(pts.len() >= 5);
        let (slope, r2) = linear_fit(&pts);
        assert!(slope.exp() < 1.0, "ratio {}", slope.exp());
        assert!(r2 > 0.9, "r2 {r2}");
        // Cauchy differences roughly non-increasing (10% jitter allowed)
        for w in diffs.windows(2) {
            if w[0] > 1e-9 {
                assert!(w[1] <= w[0] * 1.1, "jitter {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn cone_accepts_constants_rejects_increasing() {
        let k = 256;
        assert!(cone_check(&DensityVector::constant(k), 0.25, 2.0).ok);
        let incr = DensityVector::from_cells((0..k).map(|i| i as f64 / k as f64).collect());
        let rep = cone_check(&incr, 0.25, 2.0);
        assert!(!rep.ok);
        assert!(rep.violations.iter().any(|v| v.contains("non-increasing")));
    }

    #[test]
    fn lsv_pullback_stays_in_cone() {
        let coc = UlamCocycle::new(&lsv_family(), 512);
        let omega = OmegaPath::sample(&[0.5, 0.5], 999, -40, 1).unwrap();
        for n in [1usize, 5, 20, 40] {
            let f = coc.pullback_density(&omega, n).unwrap();
            let rep = cone_check(&f, 0.25, 8.0);
            assert!(rep.ok, "n={n}: {:?}", rep.violations);
        }
    }

    #[test]
    fn duality_on_grid() {
        // <Pf, g>_m == <f, g.T>_m within O(1/k), g.T sampled per cell
        let k = 512;
        let spec = MapSpec::beta(2.1).unwrap();
        let m = ulam_matrix(&spec, k);
        let mut rng = CounterRng::new(77);
        for _ in 0..20 {
            let f = DensityVector::from_cells((0..k).map(|_| rng.next_uniform()).collect());
            let g: Vec<f64> = (0..k).map(|_| rng.next_uniform()).collect();
            let pf = m.apply_left(&f);
            let lhs: f64 = pf.cells().iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() / k as f64;
            let mut rhs = 0.0;
            for i in 0..k {
                let mut cell = 0.0;
                for s in 0..8 {
                    let x = (i as f64 + (s as f64 + 0.5) / 8.0) / k as f64;
                    let y = spec.eval(x);
                    let j = ((y * k as f64).floor() as usize).min(k - 1);
                    cell += g[j];
                }
                rhs += f.cells()[i] * cell / 8.0;
            }
            rhs /= k as f64;
            assert!((lhs - rhs).abs() <= 5.0 / k as f64, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn fiber_sum_empty_region_is_zero() {
        let coc = UlamCocycle::new(&beta_family(), 64);
        let omega = OmegaPath::sample(&[0.5, 0.5], 1, -64, 256).unwrap();
        assert_eq!(coc.fiber_measure_sum(&omega, &[], 0.0, 1.0, 100, 50).unwrap(), 0.0);
    }

    #[test]
    fn fiber_sum_doubling_stationarity_exact() {
        // the doubling map preserves Lebesgue exactly on the grid, so every
        // fiber measure equals Leb(A)
        let fam = MapFamily::new(vec![MapSpec::beta(2.0).unwrap()]).unwrap();
        let coc = UlamCocycle::new(&fam, 128);
        let omega = OmegaPath::sample(&[1.0], 1, -64, 256).unwrap();
        let region = [(0.25, 0.5)];
        let n = 200u64;
        let total = coc.fiber_measure_sum(&omega, &region, 0.0, 1.0, n, 20).unwrap();
        assert!((total - 200.0 * 0.25).abs() < 1e-9, "total {total}");
    }

    #[test]
    fn densities_comparable_away_from_zero() {
        let coc = UlamCocycle::new(&lsv_family(), 512);
        let ann = coc.annealed(&[0.5, 0.5]).unwrap();
        let sol = stationary_density(&ann, 1e-12, 50_000).unwrap();
        let c = sol.density.comparability_constant(0.1);
        assert!(c.is_finite() && c < 10.0, "C_delta = {c}");
    }

    #[test]
    fn beta_decay_is_geometric() {
        let coc = UlamCocycle::new(&beta_family(), 1024);
        let ann = coc.annealed(&[0.5, 0.5]).unwrap();
        let sol = stationary_density(&ann, 1e-12, 20_000).unwrap();
        let k = 1024;
        let f: Vec<f64> = (0..k).map(|i| if i < k / 2 { 1.0 } else { 0.0 }).collect();
        let g = f.clone();
        let rep = decay_estimate(&ann, &sol.density, &f, &g, 40, 1);
        assert!(rep.geometric_ratio < 1.0, "ratio {}", rep.geometric_ratio);
        // constants have zero correlation
        let ones = vec![1.0; k];
        let rep0 = decay_estimate(&ann, &sol.density, &ones, &ones, 10, 1);
        for c in rep0.correlations {
            assert!(c < 1e-12);
        }
    }
}
