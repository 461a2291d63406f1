//! Interval map families and random cocycle orbits.
//!
//! Two families are supported on the phase space `[0,1]`:
//!
//! - `Beta(beta)`: `T(x) = beta*x mod 1` with `beta > 1`, uniformly expanding,
//!   `ceil(beta)` linear branches.
//! - `Lsv(gamma)`: the intermittent map `T(x) = x(1 + 2^gamma x^gamma)` on
//!   `[0, 1/2]` and `2x - 1` on `(1/2, 1]`, with a neutral fixed point at 0.
//!
//! Boundary convention (fixed once for reproducibility): the LSV left branch
//! owns `x = 1/2`, so `T(1/2) = 1`; the beta map uses
//! `T(x) = beta*x - floor(beta*x)` everywhere, which gives
//! `T(1) = beta - floor(beta)` for non-integer `beta` and `T(1) = 0` otherwise.

use crate::driving::OmegaPath;
use crate::error::{Error, Result};

/// Map family tag with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// LSV intermittent map, `gamma` in `(0,1)`.
    Lsv(f64),
    /// `beta x mod 1`, `beta > 1`.
    Beta(f64),
}

/// One interval map: family tag plus derived branch data.
#[derive(Debug, Clone)]
pub struct MapSpec {
    family: Family,
    branch_points: Vec<f64>,
}

/// A monotone branch of a map, with closed-form evaluation and inverse
/// (the LSV left branch inverse is solved by bisection).
#[derive(Debug, Clone, Copy)]
pub enum Branch {
    /// `T(x) = slope * x + offset` on `[lo, hi]`.
    Linear { lo: f64, hi: f64, slope: f64, offset: f64 },
    /// `T(x) = x + 2^gamma x^(1+gamma)` on `[lo, hi]`.
    LsvLeft { lo: f64, hi: f64, gamma: f64 },
}

impl Branch {
    pub fn lo(&self) -> f64 {
        match *self {
            Branch::Linear { lo, .. } | Branch::LsvLeft { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Branch::Linear { hi, .. } | Branch::LsvLeft { hi, .. } => hi,
        }
    }

    /// Branch-local evaluation (no mod-1 wrapping).
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Branch::Linear { slope, offset, .. } => slope * x + offset,
            Branch::LsvLeft { gamma, .. } => x + 2f64.powf(gamma) * x.powf(1.0 + gamma),
        }
    }

    /// Inverse of the branch restricted to its image. `y` must lie in
    /// `[eval(lo), eval(hi)]`. Linear branches invert exactly; the LSV left
    /// branch is solved by monotone bisection to 1e-14.
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Branch::Linear { slope, offset, lo, hi } => ((y - offset) / slope).clamp(lo, hi),
            Branch::LsvLeft { lo, hi, .. } => {
                let (mut a, mut b) = (lo, hi);
                if self.eval(a) >= y {
                    return a;
                }
                if self.eval(b) <= y {
                    return b;
                }
                while b - a > 1e-14 {
                    let mid = 0.5 * (a + b);
                    if self.eval(mid) < y {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                0.5 * (a + b)
            }
        }
    }
}

impl MapSpec {
    /// LSV intermittent map with parameter `gamma` in `(0,1)`.
    pub fn lsv(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!("LSV gamma must be in (0,1), got {gamma}")));
        }
        Ok(MapSpec { family: Family::Lsv(gamma), branch_points: vec![0.0, 0.5, 1.0] })
    }

    /// `beta x mod 1` with `beta > 1`.
    pub fn beta(beta: f64) -> Result<Self> {
        if !(beta > 1.0) {
            return Err(Error::Domain(format!("beta must be > 1, got {beta}")));
        }
        let mut pts = vec![0.0];
        let mut j = 1.0;
        while j / beta < 1.0 {
            pts.push(j / beta);
            j += 1.0;
        }
        pts.push(1.0);
        Ok(MapSpec { family: Family::Beta(beta), branch_points: pts })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of monotonicity branches.
    pub fn branch_count(&self) -> usize {
        self.branch_points.len() - 1
    }

    /// Endpoints of the monotonicity partition, starting at 0 and ending at 1.
    pub fn branch_points(&self) -> &[f64] {
        &self.branch_points
    }

    /// The monotonicity partition as a list of `[a, b)` intervals (the last
    /// one closed at 1).
    pub fn branch_partition(&self) -> Vec<(f64, f64)> {
        self.branch_points.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Branch geometry, in left-to-right order.
    pub fn branches(&self) -> Vec<Branch> {
        match self.family {
            Family::Lsv(gamma) => vec![
                Branch::LsvLeft { lo: 0.0, hi: 0.5, gamma },
                Branch::Linear { lo: 0.5, hi: 1.0, slope: 2.0, offset: -1.0 },
            ],
            Family::Beta(beta) => self
                .branch_partition()
                .iter()
                .enumerate()
                .map(|(j, &(lo, hi))| Branch::Linear { lo, hi, slope: beta, offset: -(j as f64) })
                .collect(),
        }
    }

    /// Evaluate the map at `x` in `[0,1]`. Total; result clamped to `[0,1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let y = match self.family {
            Family::Lsv(gamma) => {
                if x <= 0.5 {
                    x * (1.0 + 2f64.powf(gamma) * x.powf(gamma))
                } else {
                    2.0 * x - 1.0
                }
            }
            Family::Beta(beta) => {
                let bx = beta * x;
                bx - bx.floor()
            }
        };
        y.clamp(0.0, 1.0)
    }

    /// `T'(x)`; at a branch endpoint the value of the branch owning the point
    /// under the boundary convention (LSV: left branch owns 1/2).
    pub fn derivative(&self, x: f64) -> f64 {
        match self.family {
            Family::Lsv(gamma) => {
                if x <= 0.5 {
                    1.0 + 2f64.powf(gamma) * (1.0 + gamma) * x.powf(gamma)
                } else {
                    2.0
                }
            }
            Family::Beta(beta) => beta,
        }
    }
}

/// Evaluate one map step. Free-function form of [`MapSpec::eval`].
pub fn eval_map(spec: &MapSpec, x: f64) -> f64 {
    spec.eval(x)
}

/// Free-function form of [`MapSpec::derivative`].
pub fn eval_derivative(spec: &MapSpec, x: f64) -> f64 {
    spec.derivative(x)
}

/// A finite family of maps sharing the phase space `[0,1]`, selected by the
/// driving symbols.
#[derive(Debug, Clone)]
pub struct MapFamily {
    specs: Vec<MapSpec>,
    /// First-generation branch endpoints of all member maps (interior ones);
    /// forward word-orbits are checked against this set to probe the
    /// discontinuity set.
    discontinuity_probe: Vec<f64>,
}

impl MapFamily {
    pub fn new(specs: Vec<MapSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Domain("map family must contain at least one map".into()));
        }
        let mut probe: Vec<f64> = specs
            .iter()
            .flat_map(|s| s.branch_points().iter().copied())
            .collect();
        probe.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probe.dedup();
        Ok(MapFamily { specs, discontinuity_probe: probe })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn spec(&self, i: usize) -> &MapSpec {
        &self.specs[i]
    }

    pub fn specs(&self) -> &[MapSpec] {
        &self.specs
    }

    pub fn discontinuity_probe(&self) -> &[f64] {
        &self.discontinuity_probe
    }

    /// One cocycle step: apply the map selected by `symbol`.
    pub fn step(&self, symbol: usize, x: f64) -> f64 {
        self.specs[symbol].eval(x)
    }

    /// Orbit `[x, T_w0 x, T_w1 T_w0 x, ...]` of length `n+1` driven by the
    /// symbols of `omega` at indices `0..n`.
    ///
    /// Fails if the window of `omega` does not cover `[0, n)`.
    pub fn cocycle_orbit(&self, omega: &OmegaPath, x: f64, n: usize) -> Result<Vec<f64>> {
        omega.require_window(0, n as i64)?;
        let mut orbit = Vec::with_capacity(n + 1);
        let mut y = x;
        orbit.push(y);
        for j in 0..n as i64 {
            y = self.step(omega.symbol(j), y);
            orbit.push(y);
        }
        Ok(orbit)
    }

    /// Minimum distance from any forward word-orbit value of `x0` (words of
    /// length `1..=max_len` over the family, capped at `node_budget` tree
    /// nodes) to the branch-endpoint probe set. A small value means `x0` is
    /// close to the discontinuity set of some composed map.
    pub fn x0_probe_clearance(&self, x0: f64, max_len: usize, node_budget: usize) -> f64 {
        let m = self.specs.len();
        let mut depth = max_len;
        // keep m^depth within budget
        while depth > 1 && (m as f64).powi(depth as i32) > node_budget as f64 {
            depth -= 1;
        }
        let mut best = f64::INFINITY;
        // iterative DFS over words
        let mut stack: Vec<(f64, usize)> = vec![(x0, 0)];
        while let Some((x, d)) = stack.pop() {
            if d > 0 {
                for &e in &self.discontinuity_probe {
                    let dist = (x - e).abs();
                    if dist < best {
                        best = dist;
                    }
                }
            }
            if d < depth {
                for s in 0..m {
                    stack.push((self.specs[s].eval(x), d + 1));
                }
            }
        }
        best
    }
}
