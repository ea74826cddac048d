//! Explicit adaptive Runge–Kutta integration for small first-order systems.
//!
//! The stepper is the Dormand–Prince 5(4) embedded pair with a PI step
//! controller and its native fourth-order continuous extension. Integration
//! runs until one of the [`EventTag`]s fires: finite-time blow-up of a state
//! component, arrival at the guarded end of the domain, step underflow, or the
//! step cap.

use serde::Serialize;

use crate::error::{LabError, Result};

/// Step control and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Magnitude of the first trial step.
    pub h_init: f64,
    pub h_min: f64,
    /// Blow-up threshold on any state component.
    pub y_max: f64,
    /// Stop distance from a domain endpoint, as a fraction of the domain length.
    pub boundary_guard: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-4,
            h_min: 1e-15,
            y_max: 1e8,
            boundary_guard: 1e-6,
            max_steps: 200_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.h_min > 0.0
            && self.h_min < self.h_init
            && self.y_max > 0.0
            && self.boundary_guard >= 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(LabError::Config(format!("invalid integrator settings {self:?}")))
        }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EventTag {
    BlowUpPlus,
    BlowUpMinus,
    BoundaryApproach,
    StepUnderflow,
    MaxSteps,
}

impl EventTag {
    pub fn is_blow_up(self) -> bool {
        matches!(self, EventTag::BlowUpPlus | EventTag::BlowUpMinus)
    }
}

/// How an integration leg ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointEvent {
    pub tag: EventTag,
    /// Independent-variable location; for blow-ups this is the extrapolated pole.
    pub location: f64,
    /// Spread between the last two location estimates (zero for exact stops).
    pub uncertainty: f64,
    /// Value of `component` at the last accepted step.
    pub value: f64,
    pub component: usize,
    /// Independent variable of the last accepted step.
    pub last_t: f64,
}

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    t1: f64,
    /// Nominal step the coefficients were built with; `t0 + h` may round to `t1`.
    h: f64,
    /// `5 * dim` coefficients, laid out coefficient-major.
    coeffs: Vec<f64>,
}

impl Segment {
    fn lo(&self) -> f64 {
        self.t0.min(self.t1)
    }

    fn hi(&self) -> f64 {
        self.t0.max(self.t1)
    }

    fn theta(&self, t: f64) -> f64 {
        (t - self.t0) / self.h
    }

    fn eval(&self, dim: usize, k: usize, t: f64) -> f64 {
        let th = self.theta(t);
        let th1 = 1.0 - th;
        let r = |j: usize| self.coeffs[j * dim + k];
        r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))))
    }

    /// Integral of component `k` from `t0` to `t` (signed, follows the step direction).
    fn integral_from_start(&self, dim: usize, k: usize, t: f64) -> f64 {
        let h = self.h;
        let x = self.theta(t);
        let (x2, x3, x4, x5) = (x * x, x * x * x, x * x * x * x, x * x * x * x * x);
        let r = |j: usize| self.coeffs[j * dim + k];
        h * (r(0) * x
            + r(1) * x2 / 2.0
            + r(2) * (x2 / 2.0 - x3 / 3.0)
            + r(3) * (x3 / 3.0 - x4 / 4.0)
            + r(4) * (x3 / 3.0 - x4 / 2.0 + x5 / 5.0))
    }

    /// Integral of component `k` from the lower end of the segment to `t`.
    fn integral_from_lo(&self, dim: usize, k: usize, t: f64) -> f64 {
        self.integral_from_start(dim, k, t) - self.integral_from_start(dim, k, self.lo())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
}

/// Dense record of an integration, stored in increasing order of the
/// independent variable regardless of the direction(s) it was computed in.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    dim: usize,
    samples: Vec<Sample>,
    segments: Vec<Segment>,
    /// Running integral of each component at each segment's lower end.
    cumulative: Vec<Vec<f64>>,
    pub left_event: Option<EndpointEvent>,
    pub right_event: Option<EndpointEvent>,
    pub ic: (f64, Vec<f64>),
}

impl SolutionTrace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn t_min(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_max(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.t_min() && t <= self.t_max()
    }

    fn segment_index(&self, t: f64) -> Result<usize> {
        if !self.covers(t) || self.segments.is_empty() {
            return Err(LabError::Domain(format!(
                "t = {t} outside trace interval [{}, {}]",
                self.t_min(),
                self.t_max()
            )));
        }
        let idx = self.segments.partition_point(|s| s.hi() < t);
        Ok(idx.min(self.segments.len() - 1))
    }

    /// Interpolated state at `t`; exact at stored sample abscissae.
    pub fn dense_eval(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.dim).map(|k| self.dense_component(t, k)).collect()
    }

    pub fn dense_component(&self, t: f64, k: usize) -> Result<f64> {
        let i = self.segment_index(t)?;
        // samples[i] and samples[i + 1] bound segments[i]
        for s in &self.samples[i..=i + 1] {
            if s.t == t {
                return Ok(s.y[k]);
            }
        }
        Ok(self.segments[i].eval(self.dim, k, t))
    }

    /// Integral of component `k` from the initial abscissa to `t`.
    pub fn quadrature(&self, k: usize, t: f64) -> Result<f64> {
        Ok(self.integral_from_min(k, t)? - self.integral_from_min(k, self.ic.0)?)
    }

    fn integral_from_min(&self, k: usize, t: f64) -> Result<f64> {
        let i = self.segment_index(t)?;
        Ok(self.cumulative[i][k] + self.segments[i].integral_from_lo(self.dim, k, t))
    }

    /// Interior abscissae for residual checks: `per_step` evenly spaced
    /// points strictly inside every accepted step.
    pub fn interior_points(&self, per_step: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() * per_step);
        for seg in &self.segments {
            for j in 1..=per_step {
                let f = j as f64 / (per_step + 1) as f64;
                out.push(seg.lo() + f * (seg.hi() - seg.lo()));
            }
        }
        out
    }

    /// Step sizes of the accepted steps, in ascending order of position.
    pub fn step_widths(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|s| (s.lo(), s.hi() - s.lo())).collect()
    }

    fn from_legs(dim: usize, ic: (f64, Vec<f64>), backward: Option<Leg>, forward: Option<Leg>) -> Self {
        let mut samples = Vec::new();
        let mut segments = Vec::new();
        let mut left_event = None;
        let mut right_event = None;
        if let Some(leg) = backward {
            samples.extend(leg.samples.into_iter().rev());
            segments.extend(leg.segments.into_iter().rev());
            left_event = leg.event;
        } else {
            samples.push(Sample { t: ic.0, y: ic.1.clone() });
        }
        if let Some(leg) = forward {
            // first forward sample duplicates the initial condition
            samples.extend(leg.samples.into_iter().skip(1));
            segments.extend(leg.segments);
            right_event = leg.event;
        }
        let mut cumulative = Vec::with_capacity(segments.len());
        let mut acc = vec![0.0; dim];
        for seg in &segments {
            cumulative.push(acc.clone());
            for (k, a) in acc.iter_mut().enumerate() {
                *a += seg.integral_from_lo(dim, k, seg.hi());
            }
        }
        SolutionTrace { dim, samples, segments, cumulative, left_event, right_event, ic }
    }
}

struct Leg {
    samples: Vec<Sample>,
    segments: Vec<Segment>,
    event: Option<EndpointEvent>,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Stepper<F> {
    rhs: F,
    dim: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y1: Vec<f64>,
    err: Vec<f64>,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Stepper<F> {
    fn new(rhs: F, dim: usize) -> Self {
        let z = || vec![0.0; dim];
        Stepper { rhs, dim, k: [z(), z(), z(), z(), z(), z(), z()], tmp: z(), y1: z(), err: z() }
    }

    /// One trial step from `(t, y)` with `k[0] = f(t, y)` already set.
    /// Leaves the candidate in `y1`, the error estimate in `err`, and
    /// `f(t + h, y1)` in `k[6]`.
    fn trial(&mut self, t: f64, y: &[f64], h: f64) {
        let d = self.dim;
        macro_rules! stage {
            ($dst:expr, $c:expr, $($a:expr => $j:expr),+) => {{
                for i in 0..d {
                    self.tmp[i] = y[i] + h * (0.0 $(+ $a * self.k[$j][i])+);
                }
                (self.rhs)(t + $c * h, &self.tmp, &mut self.k[$dst]);
            }};
        }
        stage!(1, C2, A21 => 0);
        stage!(2, C3, A31 => 0, A32 => 1);
        stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..d {
            self.y1[i] = y[i]
                + h * (A71 * self.k[0][i]
                    + A73 * self.k[2][i]
                    + A74 * self.k[3][i]
                    + A75 * self.k[4][i]
                    + A76 * self.k[5][i]);
        }
        (self.rhs)(t + h, &self.y1, &mut self.k[6]);
        for i in 0..d {
            self.err[i] = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
        }
    }

    fn error_norm(&self, y: &[f64], cfg: &IntegratorConfig) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(self.y1[i].abs());
            let e = (self.err[i] / sc).abs();
            if !e.is_finite() || !self.y1[i].is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(e);
        }
        worst
    }

    fn dense_coeffs(&self, y: &[f64], h: f64) -> Vec<f64> {
        let d = self.dim;
        let mut c = vec![0.0; 5 * d];
        for i in 0..d {
            let ydiff = self.y1[i] - y[i];
            let bspl = h * self.k[0][i] - ydiff;
            c[i] = y[i];
            c[d + i] = ydiff;
            c[2 * d + i] = bspl;
            c[3 * d + i] = ydiff - h * self.k[6][i] - bspl;
            c[4 * d + i] = h
                * (D1 * self.k[0][i]
                    + D3 * self.k[2][i]
                    + D4 * self.k[3][i]
                    + D5 * self.k[4][i]
                    + D6 * self.k[5][i]
                    + D7 * self.k[6][i]);
        }
        c
    }
}

/// Point of an accepted step kept for blow-up extrapolation.
#[derive(Clone, Copy)]
struct Growth {
    t: f64,
    y: f64,
    f: f64,
}

/// Extrapolated pole location from the last accepted points of a growing
/// component. With `y ~ C |t* - t|^(-q)` one has `|t* - t| = q |y / y'|`,
/// and `q` follows from the log-ratio of `y` and `y'` over consecutive points,
/// i.e. `|y|^(-1/q)` is fitted linearly.
fn pole_estimate(hist: &[Growth], dir: f64) -> (f64, f64) {
    let est = |a: Growth, b: Growth| -> f64 {
        let r = (b.y.abs() / a.y.abs()).ln() / (b.f.abs() / a.f.abs()).ln();
        let q = if r.is_finite() && r > 0.0 && r < 1.0 { (r / (1.0 - r)).clamp(0.05, 20.0) } else { 1.0 };
        b.t + dir * q * (b.y / b.f).abs()
    };
    let n = hist.len();
    match n {
        0 => (f64::NAN, f64::INFINITY),
        1 => {
            let p = hist[0];
            (p.t + dir * (p.y / p.f).abs(), (p.y / p.f).abs())
        }
        2 => {
            let e = est(hist[0], hist[1]);
            (e, (e - hist[1].t).abs())
        }
        _ => {
            let e1 = est(hist[n - 3], hist[n - 2]);
            let e2 = est(hist[n - 2], hist[n - 1]);
            (e2, (e2 - e1).abs())
        }
    }
}

fn largest_component(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if v.abs() > y[best].abs() {
            best = i;
        }
    }
    best
}

fn run<F>(rhs: F, t0: f64, y0: &[f64], target: f64, cfg: &IntegratorConfig, record: bool) -> Result<(Leg, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    const EXPO: f64 = 0.2 - BETA * 0.75;

    cfg.validate()?;
    let dim = y0.len();
    let dir = if target >= t0 { 1.0 } else { -1.0 };
    let mut st = Stepper::new(rhs, dim);
    let mut t = t0;
    let mut y = y0.to_vec();
    (st.rhs)(t, &y, &mut st.k[0]);
    if st.k[0].iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(LabError::Domain(format!("right-hand side not finite at t = {t0}")));
    }
    let mut samples = Vec::new();
    let mut segments = Vec::new();
    if record {
        samples.push(Sample { t, y: y.clone() });
    }
    let mut growth: Vec<Vec<Growth>> = vec![Vec::new(); dim];
    let record_growth = |growth: &mut Vec<Vec<Growth>>, t: f64, y: &[f64], f: &[f64]| {
        for k in 0..y.len() {
            let g = &mut growth[k];
            if g.len() == 4 {
                g.remove(0);
            }
            g.push(Growth { t, y: y[k], f: f[k] });
        }
    };
    record_growth(&mut growth, t, &y, &st.k[0]);

    let mut h = dir * cfg.h_init.min((target - t0).abs());
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;

    let event = loop {
        if t == target {
            break EndpointEvent {
                tag: EventTag::BoundaryApproach,
                location: target,
                uncertainty: 0.0,
                value: y[0],
                component: 0,
                last_t: t,
            };
        }
        if steps >= cfg.max_steps {
            break EndpointEvent {
                tag: EventTag::MaxSteps,
                location: t,
                uncertainty: 0.0,
                value: y[0],
                component: 0,
                last_t: t,
            };
        }
        steps += 1;
        let remaining = target - t;
        let mut landing = false;
        if (h.abs()) >= remaining.abs() {
            h = remaining;
            landing = true;
        }
        st.trial(t, &y, h);
        let err = st.error_norm(&y, cfg);
        if err <= 1.0 {
            let fac11 = err.powf(EXPO);
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            facold = err.max(1e-4);
            let t_new = if landing { target } else { t + h };
            if record {
                segments.push(Segment { t0: t, t1: t_new, h, coeffs: st.dense_coeffs(&y, h) });
            }
            t = t_new;
            y.copy_from_slice(&st.y1);
            let (k0, rest) = st.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            if record {
                samples.push(Sample { t, y: y.clone() });
            }
            record_growth(&mut growth, t, &y, &st.k[0]);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = dir * h_new.abs().min(h.abs());
            }
            rejected_last = false;
            h = h_new;
            let k = largest_component(&y);
            if y[k].abs() > cfg.y_max {
                let (location, uncertainty) = pole_estimate(&growth[k], dir);
                break EndpointEvent {
                    tag: if y[k] > 0.0 { EventTag::BlowUpPlus } else { EventTag::BlowUpMinus },
                    location,
                    uncertainty,
                    value: y[k],
                    component: k,
                    last_t: t,
                };
            }
        } else {
            let fac11 = if err.is_finite() { err.powf(EXPO) } else { 1.0 / FAC_MIN };
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
        if h.abs() < cfg.h_min {
            // a stalled controller on a monotonically exploding component is a pole
            let k = largest_component(&y);
            let g = &growth[k];
            let exploding = g.len() >= 3
                && g.windows(2).all(|w| w[1].y.abs() > w[0].y.abs() && w[1].f.abs() > w[0].f.abs())
                && g[g.len() - 1].y.abs() > 1.0;
            break if exploding {
                let (location, uncertainty) = pole_estimate(g, dir);
                EndpointEvent {
                    tag: if y[k] > 0.0 { EventTag::BlowUpPlus } else { EventTag::BlowUpMinus },
                    location,
                    uncertainty,
                    value: y[k],
                    component: k,
                    last_t: t,
                }
            } else {
                EndpointEvent {
                    tag: EventTag::StepUnderflow,
                    location: t,
                    uncertainty: 0.0,
                    value: y[0],
                    component: 0,
                    last_t: t,
                }
            };
        }
    };
    Ok((Leg { samples, segments, event: Some(event) }, y))
}

fn guarded_target(domain: (f64, f64), direction: Direction, cfg: &IntegratorConfig) -> f64 {
    let guard = cfg.boundary_guard * (domain.1 - domain.0);
    match direction {
        Direction::Forward => domain.1 - guard,
        Direction::Backward => domain.0 + guard,
    }
}

fn check_ic(t0: f64, domain: (f64, f64), cfg: &IntegratorConfig) -> Result<()> {
    if !(domain.0 < domain.1) {
        return Err(LabError::Domain(format!("empty domain {domain:?}")));
    }
    let guard = cfg.boundary_guard * (domain.1 - domain.0);
    if !(t0 > domain.0 + guard && t0 < domain.1 - guard) {
        return Err(LabError::Domain(format!("initial point {t0} not interior to {domain:?}")));
    }
    Ok(())
}

/// Integrates in one direction from `ic` until an endpoint event fires.
pub fn integrate<F>(
    rhs: F,
    ic: (f64, &[f64]),
    direction: Direction,
    domain: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<SolutionTrace>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_ic(ic.0, domain, cfg)?;
    let target = guarded_target(domain, direction, cfg);
    let (leg, _) = run(rhs, ic.0, ic.1, target, cfg, true)?;
    let ic_owned = (ic.0, ic.1.to_vec());
    Ok(match direction {
        Direction::Forward => SolutionTrace::from_legs(ic.1.len(), ic_owned, None, Some(leg)),
        Direction::Backward => SolutionTrace::from_legs(ic.1.len(), ic_owned, Some(leg), None),
    })
}

/// Integrates forward and backward from `ic`, producing a maximal trace.
pub fn integrate_maximal<F>(mut rhs: F, ic: (f64, &[f64]), domain: (f64, f64), cfg: &IntegratorConfig) -> Result<SolutionTrace>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_ic(ic.0, domain, cfg)?;
    let back = run(&mut rhs, ic.0, ic.1, guarded_target(domain, Direction::Backward, cfg), cfg, true)?.0;
    let fwd = run(&mut rhs, ic.0, ic.1, guarded_target(domain, Direction::Forward, cfg), cfg, true)?.0;
    Ok(SolutionTrace::from_legs(ic.1.len(), (ic.0, ic.1.to_vec()), Some(back), Some(fwd)))
}

/// Advances to `t_end` without recording the path. Returns the final state
/// and the event that stopped integration (`BoundaryApproach` on success).
pub fn advance<F>(rhs: F, t0: f64, y0: &[f64], t_end: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, EndpointEvent)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if t_end == t0 {
        let ev = EndpointEvent {
            tag: EventTag::BoundaryApproach,
            location: t0,
            uncertainty: 0.0,
            value: y0.first().copied().unwrap_or(0.0),
            component: 0,
            last_t: t0,
        };
        return Ok((y0.to_vec(), ev));
    }
    let (leg, y) = run(rhs, t0, y0, t_end, cfg, false)?;
    Ok((y, leg.event.expect("run always sets an event")))
}

/// Fixed-step integration with the fifth-order member of the pair.
pub fn integrate_fixed<F>(rhs: F, t0: f64, y0: &[f64], t_end: f64, n_steps: usize) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut st = Stepper::new(rhs, y0.len());
    let h = (t_end - t0) / n_steps as f64;
    let mut y = y0.to_vec();
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        (st.rhs)(t, &y, &mut st.k[0]);
        st.trial(t, &y, h);
        y.copy_from_slice(&st.y1);
    }
    y
}
