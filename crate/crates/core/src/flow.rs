//! Reduced graphical mean curvature flow on an interval of orbit distances.
//!
//! For an invariant graph `u(s, t)` the flow reduces to
//!
//! ```text
//! u_t = u_ss / (1 + u_s²) + h(s) u_s
//! ```
//!
//! which is discretised by the method of lines (centered differences on a
//! uniform grid) and advanced in time with the adaptive engine. A profile
//! solving the translator equation must move up at unit speed.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::ode::{self, EventTag, IntegratorConfig};
use crate::rank1::MaximalSolution;
use crate::spaces::RankOneSpace;

/// Uniform grid with `n` intervals on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || n < 2 {
            return Err(LabError::Domain(format!("grid needs a < b and n >= 2, got [{a}, {b}], n = {n}")));
        }
        Ok(Grid { a, b, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let ds = self.spacing();
        (0..=self.n).map(|i| if i == self.n { self.b } else { self.a + i as f64 * ds }).collect()
    }
}

pub fn flow_config() -> IntegratorConfig {
    IntegratorConfig { rtol: 1e-9, atol: 1e-11, h_init: 1e-5, y_max: 1e12, ..IntegratorConfig::default() }
}

/// Evolves `u0` (one value per grid node) to time `t_end` with end values
/// `dirichlet(t) = (u(a, t), u(b, t))`. Returns the values at all nodes.
pub fn evolve_graph<D>(
    space: &RankOneSpace,
    grid: &Grid,
    u0: &[f64],
    dirichlet: D,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>>
where
    D: Fn(f64) -> (f64, f64),
{
    if u0.len() != grid.n + 1 {
        return Err(LabError::Domain(format!("expected {} samples, got {}", grid.n + 1, u0.len())));
    }
    if !(t_end >= 0.0) {
        return Err(LabError::Domain(format!("horizon must be non-negative, got {t_end}")));
    }
    // both ends must keep clear of the poles of h
    space.mean_curvature(grid.a)?;
    space.mean_curvature(grid.b)?;
    if !(grid.a > 0.0 && grid.b < space.alpha()) {
        return Err(LabError::Domain(format!("[{}, {}] not inside (0, {})", grid.a, grid.b, space.alpha())));
    }
    if t_end == 0.0 {
        return Ok(u0.to_vec());
    }
    cfg.validate()?;
    let nodes = grid.nodes();
    let h: Vec<f64> = nodes.iter().map(|&s| space.profile(s)).collect();
    let ds = grid.spacing();
    let m = grid.n - 1;
    let rhs = |t: f64, u: &[f64], du: &mut [f64]| {
        let (ua, ub) = dirichlet(t);
        let at = |i: usize| match i {
            0 => ua,
            i if i == grid.n => ub,
            i => u[i - 1],
        };
        for i in 1..=m {
            let (l, c, r) = (at(i - 1), at(i), at(i + 1));
            let us = (r - l) / (2.0 * ds);
            let uss = (r - 2.0 * c + l) / (ds * ds);
            du[i - 1] = uss / (1.0 + us * us) + h[i] * us;
        }
    };
    let (y, ev) = ode::advance(rhs, 0.0, &u0[1..grid.n], t_end, cfg)?;
    match ev.tag {
        EventTag::BoundaryApproach => {}
        EventTag::StepUnderflow => return Err(LabError::StepUnderflow { location: ev.last_t }),
        EventTag::MaxSteps => return Err(LabError::MaxSteps { location: ev.last_t }),
        tag => return Err(LabError::Numerical(format!("flow stopped by {tag:?} at t = {}", ev.last_t))),
    }
    let (ua, ub) = dirichlet(t_end);
    let mut out = Vec::with_capacity(grid.n + 1);
    out.push(ua);
    out.extend_from_slice(&y);
    out.push(ub);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub grid: Grid,
    pub horizon: f64,
    /// `(s, u(s, T), V(s) + T)` per node.
    pub rows: Vec<(f64, f64, f64)>,
    pub sup_deviation: f64,
}

impl DriftReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("s,u_final,u_expected,abs_err\n");
        for &(s, u, e) in &self.rows {
            out.push_str(&format!("{s},{u},{e},{}\n", (u - e).abs()));
        }
        out
    }
}

/// Evolves the restriction of a translator profile to `grid` with exact
/// translating end values and measures `sup |u(·, T) - V - T|`.
pub fn translator_drift(
    space: &RankOneSpace,
    sol: &MaximalSolution,
    grid: &Grid,
    horizon: f64,
    shift: f64,
    cfg: &IntegratorConfig,
) -> Result<DriftReport> {
    let nodes = grid.nodes();
    let (lo, hi) = sol.s_range();
    if !(grid.a > lo && grid.b < hi) {
        return Err(LabError::Domain(format!("grid [{}, {}] not inside the trace range [{lo}, {hi}]", grid.a, grid.b)));
    }
    let v: Vec<f64> = nodes.iter().map(|&s| sol.value(s)).collect::<Result<_>>()?;
    let u0: Vec<f64> = v.iter().map(|x| x + shift).collect();
    let (va, vb) = (u0[0], u0[grid.n]);
    let u = evolve_graph(space, grid, &u0, |t| (va + t, vb + t), horizon, cfg)?;
    let rows: Vec<(f64, f64, f64)> = nodes.iter().zip(&u).zip(&u0).map(|((&s, &u), &w)| (s, u, w + horizon)).collect();
    let sup_deviation = rows.iter().map(|&(_, u, e)| (u - e).abs()).fold(0.0, f64::max);
    Ok(DriftReport { grid: *grid, horizon, rows, sup_deviation })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub intervals: Vec<usize>,
    pub deviations: Vec<f64>,
    /// `log2` ratios of successive deviations (grids double in size).
    pub orders: Vec<f64>,
}

/// Runs [`translator_drift`] on successively doubled grids.
pub fn refinement_study(
    space: &RankOneSpace,
    sol: &MaximalSolution,
    interval: (f64, f64),
    intervals: &[usize],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<RefinementReport> {
    let mut deviations = Vec::with_capacity(intervals.len());
    for &n in intervals {
        let grid = Grid::new(interval.0, interval.1, n)?;
        deviations.push(translator_drift(space, sol, &grid, horizon, 0.0, cfg)?.sup_deviation);
    }
    let orders = deviations.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(RefinementReport { intervals: intervals.to_vec(), deviations, orders })
}
