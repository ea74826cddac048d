//! Isotropy-invariant translators over rank-one spaces.
//!
//! A translator `u = V ∘ r` is governed by the profile equation
//!
//! ```text
//! V''(s) = (1 + V'(s)²) (1 - h(s) V'(s)),   0 < s < α,
//! ```
//!
//! which is integrated for the slope `p = V'` alone; `V` is recovered by
//! exact quadrature of the dense slope, so vertical translates share
//! bit-identical slope samples. Each maximal solution ends on both sides in
//! either a vertical tangent (`V' → ±∞` at an interior point) or a smooth
//! approach to the origin or focal orbit, and the pair of end behaviors
//! determines one of five shapes.
//!
//! For `CP^n` the substitution `x = tan(s / 2√(n+1))`, `ψ(x) = V'(s)` gives a
//! phase-plane form with nullcline `η`; it is used to cross-check the
//! s-space solver and the blow-up and comparison arguments.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec::{self, Execution};
use crate::ode::{self, EndpointEvent, EventTag, IntegratorConfig, SolutionTrace};
use crate::spaces::{RankOneSpace, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EndBehavior {
    /// `V' → +∞` at an interior point.
    VTplus,
    /// `V' → -∞` at an interior point.
    VTminus,
    /// Reaches `s → 0` with `V' → 0`.
    SmoothOrigin,
    /// Reaches `s → α` with `V' → 0`.
    SmoothFocal,
    /// Any other ending (boundary reached with a steep slope, solver stall).
    Irregular(EventTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TypeLabel {
    I,
    II,
    III,
    IV,
    V,
}

impl TypeLabel {
    pub const ALL: [TypeLabel; 5] = [TypeLabel::I, TypeLabel::II, TypeLabel::III, TypeLabel::IV, TypeLabel::V];
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeLabel::I => "I",
            TypeLabel::II => "II",
            TypeLabel::III => "III",
            TypeLabel::IV => "IV",
            TypeLabel::V => "V",
        };
        write!(f, "Type {s}")
    }
}

/// The (left, right) end-behavior signature of each shape. Kept as data so
/// the labelling can be re-keyed without touching the classifier.
pub const TYPE_SIGNATURES: [(TypeLabel, EndBehavior, EndBehavior); 5] = [
    (TypeLabel::I, EndBehavior::VTminus, EndBehavior::VTplus),
    (TypeLabel::II, EndBehavior::VTplus, EndBehavior::VTplus),
    (TypeLabel::III, EndBehavior::VTminus, EndBehavior::VTminus),
    (TypeLabel::IV, EndBehavior::SmoothOrigin, EndBehavior::VTplus),
    (TypeLabel::V, EndBehavior::VTminus, EndBehavior::SmoothFocal),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TranslatorType {
    pub label: TypeLabel,
    pub left: EndBehavior,
    pub right: EndBehavior,
}

impl TranslatorType {
    pub fn from_pair(left: EndBehavior, right: EndBehavior) -> Result<Self> {
        TYPE_SIGNATURES
            .iter()
            .find(|(_, l, r)| *l == left && *r == right)
            .map(|&(label, left, right)| TranslatorType { label, left, right })
            .ok_or(LabError::Unclassified { left, right })
    }
}

/// Right-hand side of the profile equation.
pub fn v_rhs(space: &RankOneSpace, s: f64, v_prime: f64) -> Result<f64> {
    let h = space.mean_curvature(s)?;
    Ok((1.0 + v_prime * v_prime) * (1.0 - h * v_prime))
}

fn ensure_positive_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::Domain(format!("phase variable x must be positive, got {x}")))
    }
}

/// `dψ/dx` in the `CP^n` phase plane.
pub fn psi_rhs(n: u32, x: f64, psi: f64) -> Result<f64> {
    ensure_positive_x(x)?;
    Ok(psi_rhs_unchecked(n, x, psi))
}

fn psi_rhs_unchecked(n: u32, x: f64, psi: f64) -> f64 {
    let n = n as f64;
    let c = 2.0 * (n + 1.0).sqrt();
    c / (1.0 + x * x) * (1.0 + psi * psi) * (1.0 - (2.0 * n - 1.0 - x * x) / (c * x) * psi)
}

/// The critical abscissa `√(2n-1)` where the nullcline has its pole.
pub fn x_star(n: u32) -> f64 {
    (2.0 * n as f64 - 1.0).sqrt()
}

/// Nullcline `η(x) = 2√(n+1) x / (2n - 1 - x²)`.
pub fn eta(n: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(LabError::Domain(format!("eta requires x >= 0, got {x}")));
    }
    let nf = n as f64;
    let denom = 2.0 * nf - 1.0 - x * x;
    if denom == 0.0 {
        return Err(LabError::Domain(format!("eta has a pole at x = {x}")));
    }
    Ok(2.0 * (nf + 1.0).sqrt() * x / denom)
}

pub const TIE_GUARD: f64 = 1e-9;

/// Sign of `ψ'` predicted from the position relative to the nullcline.
pub fn region_sign(n: u32, x: f64, psi: f64) -> Result<i8> {
    ensure_positive_x(x)?;
    let xs = x_star(n);
    if x == xs {
        return Ok(1);
    }
    let e = eta(n, x)?;
    if (psi - e).abs() <= TIE_GUARD {
        return Err(LabError::Domain(format!("psi = {psi} within tie guard of the nullcline {e}")));
    }
    let above = psi > e;
    Ok(match (x < xs, above) {
        (true, true) => -1,
        (true, false) => 1,
        (false, true) => 1,
        (false, false) => -1,
    })
}

/// The comparison function `h₁` from the blow-up argument above the nullcline,
/// normalised so that `h₁(x₀) = 0`.
pub fn h1(n: u32, x: f64, x0: f64, psi0: f64) -> f64 {
    let nf = n as f64;
    let c = 2.0 * (nf + 1.0).sqrt();
    let k = 2.0 * nf - 1.0;
    let g = |x: f64| {
        c * x.atan() - k * psi0 * (x / (1.0 + x * x).sqrt()).ln() + 0.5 * psi0 * (1.0 + x * x).ln()
    };
    g(x0) - g(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundValue {
    Finite(f64),
    /// The argument left the principal branch: ψ must already have blown up.
    Exceeded,
}

/// Lower bound `tan(-h₁(x) + arctan ψ₀)` for solutions starting above the
/// nullcline left of `√(2n-1)`.
pub fn h1_bound(n: u32, x: f64, x0: f64, psi0: f64) -> Result<BoundValue> {
    let xs = x_star(n);
    if !(0.0 < x && x <= x0 && x0 < xs) {
        return Err(LabError::Domain(format!("h1 bound requires 0 < x <= x0 < {xs}, got x = {x}, x0 = {x0}")));
    }
    if !(psi0 > eta(n, x0)?) {
        return Err(LabError::Domain(format!("h1 bound requires psi0 above the nullcline at x0 = {x0}")));
    }
    if x == x0 {
        return Ok(BoundValue::Finite(psi0));
    }
    let arg = -h1(n, x, x0, psi0) + psi0.atan();
    if arg >= FRAC_PI_2 {
        Ok(BoundValue::Exceeded)
    } else {
        Ok(BoundValue::Finite(arg.tan()))
    }
}

/// Solver settings for rank-one translators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslatorConfig {
    pub integrator: IntegratorConfig,
    /// Largest `|V'|` at a boundary stop that still counts as a smooth end.
    pub smooth_threshold: f64,
    /// Allowed relative deviation from the asymptotic slope law at a smooth end.
    pub smooth_tolerance: f64,
    /// Shooting offset from a regular end, as a fraction of α.
    pub shoot_offset: f64,
}

impl Default for TranslatorConfig {
    fn default() -> Self {
        TranslatorConfig {
            integrator: IntegratorConfig {
                rtol: 1e-10,
                atol: 1e-12,
                h_init: 1e-3,
                h_min: 1e-15,
                y_max: 1e5,
                boundary_guard: 1e-6,
                max_steps: 200_000,
            },
            smooth_threshold: 0.1,
            smooth_tolerance: 0.2,
            shoot_offset: 1e-5,
        }
    }
}

impl TranslatorConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.integrator.rtol = rtol;
        self
    }
}

/// A maximal solution of the profile equation together with its end behaviors.
#[derive(Debug, Clone)]
pub struct MaximalSolution {
    /// Dense trace of the slope `V'`.
    pub trace: SolutionTrace,
    /// `V` at the initial abscissa.
    pub v0: f64,
    pub alpha: f64,
    pub left: EndBehavior,
    pub right: EndBehavior,
}

impl MaximalSolution {
    pub fn left_event(&self) -> &EndpointEvent {
        self.trace.left_event.as_ref().expect("maximal solutions carry both events")
    }

    pub fn right_event(&self) -> &EndpointEvent {
        self.trace.right_event.as_ref().expect("maximal solutions carry both events")
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.trace.t_min(), self.trace.t_max())
    }

    pub fn slope(&self, s: f64) -> Result<f64> {
        self.trace.dense_component(s, 0)
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(self.v0 + self.trace.quadrature(0, s)?)
    }

    /// `(s, V, V')` at every accepted step.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        self.trace
            .samples()
            .iter()
            .map(|smp| [smp.t, self.value(smp.t).unwrap_or(f64::NAN), smp.y[0]])
            .collect()
    }
}

fn end_behavior(space: &RankOneSpace, ev: &EndpointEvent, at_left: bool, cfg: &TranslatorConfig) -> EndBehavior {
    match ev.tag {
        EventTag::BlowUpPlus => EndBehavior::VTplus,
        EventTag::BlowUpMinus => EndBehavior::VTminus,
        EventTag::BoundaryApproach => {
            let b = &space.boundary;
            let (dist, expected, smooth) = if at_left {
                let d = ev.location;
                (d, d / (1.0 + b.residue_origin), EndBehavior::SmoothOrigin)
            } else {
                let d = b.alpha_numeric - ev.location;
                (d, -d / (1.0 + b.residue_focal), EndBehavior::SmoothFocal)
            };
            let slope = ev.value;
            if dist > 0.0
                && slope.abs() < cfg.smooth_threshold
                && (slope - expected).abs() <= cfg.smooth_tolerance * expected.abs()
            {
                smooth
            } else {
                EndBehavior::Irregular(ev.tag)
            }
        }
        tag => EndBehavior::Irregular(tag),
    }
}

fn slope_field(space: &RankOneSpace) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |s, p, dp| {
        let h = space.profile(s);
        dp[0] = (1.0 + p[0] * p[0]) * (1.0 - h * p[0]);
    }
}

/// Integrates both ways from `(s0, V0, V0')` until each side fires an event.
pub fn solve_maximal(space: &RankOneSpace, s0: f64, v0: f64, dv0: f64, cfg: &TranslatorConfig) -> Result<MaximalSolution> {
    let alpha = space.alpha();
    if !(s0 > 0.0 && s0 < alpha) {
        return Err(LabError::Domain(format!("s0 = {s0} outside (0, {alpha})")));
    }
    if !(v0.is_finite() && dv0.is_finite()) {
        return Err(LabError::Domain("initial values must be finite".into()));
    }
    space.mean_curvature(s0)?;
    let trace = ode::integrate_maximal(slope_field(space), (s0, &[dv0]), (0.0, alpha), &cfg.integrator)?;
    let left = end_behavior(space, trace.left_event.as_ref().unwrap(), true, cfg);
    let right = end_behavior(space, trace.right_event.as_ref().unwrap(), false, cfg);
    Ok(MaximalSolution { trace, v0, alpha, left, right })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegularEnd {
    Origin,
    Focal,
}

/// Starts on the asymptotic slope law next to a regular end and integrates
/// away from it. The near end is smooth by construction.
pub fn shoot_regular(space: &RankOneSpace, end: RegularEnd, cfg: &TranslatorConfig) -> Result<MaximalSolution> {
    let b = space.boundary;
    let alpha = b.alpha_numeric;
    let eps = cfg.shoot_offset * alpha;
    let (s0, slope_coeff, dir) = match end {
        RegularEnd::Origin => (eps, 1.0 / (1.0 + b.residue_origin), ode::Direction::Forward),
        RegularEnd::Focal => (alpha - eps, 1.0 / (1.0 + b.residue_focal), ode::Direction::Backward),
    };
    let dv0 = match end {
        RegularEnd::Origin => slope_coeff * eps,
        RegularEnd::Focal => -slope_coeff * eps,
    };
    // the law V'' → slope_coeff must already hold at the start
    let law_residual = (v_rhs(space, s0, dv0)? - slope_coeff).abs() / slope_coeff;
    if law_residual > 1e-3 {
        return Err(LabError::Domain(format!(
            "shooting offset {eps} too large: asymptotic law residual {law_residual:.3e}"
        )));
    }
    let v0 = 0.5 * slope_coeff * eps * eps;
    // the start sits inside the guard band of the integrator, so integrate on
    // the half-domain away from the near end
    let (domain, ic_guard) = match end {
        RegularEnd::Origin => ((0.0, alpha), eps),
        RegularEnd::Focal => ((0.0, alpha), eps),
    };
    let mut icfg = cfg.integrator;
    icfg.boundary_guard = icfg.boundary_guard.min(0.5 * ic_guard / alpha);
    let trace = ode::integrate(slope_field(space), (s0, &[dv0]), dir, domain, &icfg)?;
    let near = EndpointEvent {
        tag: EventTag::BoundaryApproach,
        location: s0,
        uncertainty: 0.0,
        value: dv0,
        component: 0,
        last_t: s0,
    };
    let mut trace = trace;
    match end {
        RegularEnd::Origin => trace.left_event = Some(near),
        RegularEnd::Focal => trace.right_event = Some(near),
    }
    let left = end_behavior(space, trace.left_event.as_ref().unwrap(), true, cfg);
    let right = end_behavior(space, trace.right_event.as_ref().unwrap(), false, cfg);
    Ok(MaximalSolution { trace, v0, alpha, left, right })
}

pub fn classify(sol: &MaximalSolution) -> Result<TranslatorType> {
    TranslatorType::from_pair(sol.left, sol.right)
}

/// Largest relative residual of the profile equation over interior dense
/// points: a centered difference of the dense slope against the right-hand
/// side, with relative error measured against `max(|V''|, 1)`.
pub fn residual_check(space: &RankOneSpace, sol: &MaximalSolution) -> f64 {
    let mut worst: f64 = 0.0;
    for (lo, w) in sol.trace.step_widths() {
        for frac in [0.25, 0.5, 0.75] {
            let s = lo + frac * w;
            let (sp, sm) = (s + 1e-3 * w, s - 1e-3 * w);
            let (Ok(a), Ok(b), Ok(p)) = (sol.slope(sp), sol.slope(sm), sol.slope(s)) else {
                continue;
            };
            // divide by the representable spacing, not the nominal one
            let fd = (a - b) / (sp - sm);
            let f = (1.0 + p * p) * (1.0 - space.profile(s) * p);
            worst = worst.max((fd - f).abs() / f.abs().max(1.0));
        }
    }
    worst
}

/// Limit of `V'(s)/(s - s_end)` at a smooth end, from a least-squares fit of
/// `a + b d²` to points `d = 2ᵏ ε` next to the end.
pub fn asymptotic_slope(sol: &MaximalSolution, end: RegularEnd) -> Result<f64> {
    let (lo, hi) = sol.s_range();
    let mut pts = Vec::new();
    for k in 1..=8 {
        let (s, d) = match end {
            RegularEnd::Origin => {
                let d = lo * f64::powi(2.0, k);
                (d, d)
            }
            RegularEnd::Focal => {
                let d = (sol.alpha - hi) * f64::powi(2.0, k);
                (sol.alpha - d, -d)
            }
        };
        pts.push((d * d, sol.slope(s)? / d));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x * x, b + x * y));
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((sy - slope * sx) / m)
}

/// Reflection `s ↦ α - s`, `V' ↦ -V'` of an initial condition.
pub fn reflect_ic(space: &RankOneSpace, s0: f64, dv0: f64) -> (f64, f64) {
    (space.alpha() - s0, -dv0)
}

/// Interior grid of `n_s` abscissae and `n_slopes` slopes with equally
/// spaced angles in `(-π/2, π/2)`.
pub fn standard_grids(space: &RankOneSpace, n_s: usize, n_slopes: usize) -> (Vec<f64>, Vec<f64>) {
    let alpha = space.alpha();
    let s = (1..=n_s).map(|i| alpha * i as f64 / (n_s + 1) as f64).collect();
    let p = (1..=n_slopes)
        .map(|j| (-FRAC_PI_2 + std::f64::consts::PI * j as f64 / (n_slopes + 1) as f64).tan())
        .collect();
    (s, p)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub s0: f64,
    pub dv0: f64,
    pub left_event: EndpointEvent,
    pub right_event: EndpointEvent,
    pub translator_type: TranslatorType,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub space: String,
    pub alpha_numeric: f64,
    pub entries: Vec<SweepEntry>,
    pub shooting: Vec<SweepEntry>,
    pub counts: BTreeMap<TypeLabel, usize>,
}

impl SweepReport {
    pub fn types_present(&self) -> Vec<TypeLabel> {
        self.counts.iter().filter(|(_, &c)| c > 0).map(|(&t, _)| t).collect()
    }

    /// First entry of each type, preferring grid solutions.
    pub fn representatives(&self) -> BTreeMap<TypeLabel, &SweepEntry> {
        let mut out = BTreeMap::new();
        for e in self.entries.iter().chain(self.shooting.iter()) {
            out.entry(e.translator_type.label).or_insert(e);
        }
        out
    }
}

fn entry_of(sol: &MaximalSolution, s0: f64, dv0: f64) -> Result<SweepEntry> {
    Ok(SweepEntry {
        s0,
        dv0,
        left_event: sol.left_event().clone(),
        right_event: sol.right_event().clone(),
        translator_type: classify(sol)?,
    })
}

/// Classifies every grid initial condition plus the two shooting solutions.
pub fn sweep(
    space: &RankOneSpace,
    s_grid: &[f64],
    slope_grid: &[f64],
    cfg: &TranslatorConfig,
    exec: Execution,
    include_shooting: bool,
) -> Result<SweepReport> {
    let ics: Vec<(f64, f64)> = s_grid.iter().flat_map(|&s| slope_grid.iter().map(move |&p| (s, p))).collect();
    let results = exec::map(&ics, exec, |&(s0, dv0)| {
        let sol = solve_maximal(space, s0, 0.0, dv0, cfg)?;
        entry_of(&sol, s0, dv0)
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut shooting = Vec::new();
    if include_shooting {
        for end in [RegularEnd::Origin, RegularEnd::Focal] {
            let sol = shoot_regular(space, end, cfg)?;
            let ic = &sol.trace.ic;
            shooting.push(entry_of(&sol, ic.0, ic.1[0])?);
        }
    }
    let mut counts: BTreeMap<TypeLabel, usize> = TypeLabel::ALL.iter().map(|&t| (t, 0)).collect();
    for e in entries.iter().chain(shooting.iter()) {
        *counts.get_mut(&e.translator_type.label).unwrap() += 1;
    }
    Ok(SweepReport { space: space.to_string(), alpha_numeric: space.alpha(), entries, shooting, counts })
}

/// Upper end of the phase-plane domain in `x`.
pub const PSI_X_MAX: f64 = 1e4;

/// Integrates the phase-plane equation both ways from `(x0, ψ0)`.
pub fn solve_psi(n: u32, x0: f64, psi0: f64, cfg: &TranslatorConfig) -> Result<SolutionTrace> {
    ensure_positive_x(x0)?;
    let mut icfg = cfg.integrator;
    // guard of 1e-6 in x at the left end
    icfg.boundary_guard = 1e-6 / PSI_X_MAX;
    ode::integrate_maximal(move |x, p, dp| dp[0] = psi_rhs_unchecked(n, x, p[0]), (x0, &[psi0]), (0.0, PSI_X_MAX), &icfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    /// Largest distance between the two solutions as curves in the
    /// `(s, arctan V')` plane, over all compared points.
    pub max_deviation: f64,
    /// Largest `|arctan ψ(x) - arctan V'(s(x))|`.
    pub max_angle_deviation: f64,
    /// Largest `|ψ - V'|` over points with `|ψ|, |V'| <= CONSISTENCY_SLOPE_CAP`.
    pub max_slope_deviation: f64,
    /// The same, divided by `max(|ψ|, 1)`.
    pub max_relative_slope_deviation: f64,
    pub compared_points: usize,
    /// `|s_event - 2√(n+1) arctan x_event|` where both sides blow up.
    pub left_location_gap: Option<f64>,
    pub right_location_gap: Option<f64>,
}

/// Cap on `|V'|` for the raw slope comparison. Near a vertical tangent the
/// slope difference grows like `V'²` times the error in the blow-up location.
pub const CONSISTENCY_SLOPE_CAP: f64 = 100.0;

/// Solves the same initial condition in `s` and in the `CP^n` phase variable
/// and compares them under `s = 2√(n+1) arctan x`.
///
/// Near a vertical tangent `V' ~ (s* - s)^(-1/2)`, so pointwise differences
/// amplify tiny shifts of the blow-up point. The main measure is therefore the
/// normal distance between the curves `(s, arctan V')`, whose slope is
/// `1 - h V'` along a solution.
pub fn psi_v_consistency(space: &RankOneSpace, s0: f64, dv0: f64, cfg: &TranslatorConfig) -> Result<ConsistencyReport> {
    if space.kind != SpaceKind::ComplexProjective {
        return Err(LabError::Domain("the phase-plane substitution is defined for CP^n only".into()));
    }
    let n = space.n;
    let c = 2.0 * (n as f64 + 1.0).sqrt();
    let sol = solve_maximal(space, s0, 0.0, dv0, cfg)?;
    let psi = solve_psi(n, (s0 / c).tan(), dv0, cfg)?;
    let (mut normal, mut angle, mut abs_dev, mut rel_dev): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for smp in psi.samples() {
        let s = c * smp.t.atan();
        if !sol.trace.covers(s) {
            continue;
        }
        let (p, v) = (smp.y[0], sol.slope(s)?);
        let da = (p.atan() - v.atan()).abs();
        let tilt = 1.0 - space.profile(s) * v;
        angle = angle.max(da);
        normal = normal.max(da / (1.0 + tilt * tilt).sqrt());
        if p.abs() <= CONSISTENCY_SLOPE_CAP && v.abs() <= CONSISTENCY_SLOPE_CAP {
            abs_dev = abs_dev.max((p - v).abs());
            rel_dev = rel_dev.max((p - v).abs() / p.abs().max(1.0));
        }
        count += 1;
    }
    let gap = |a: &EndpointEvent, b: &EndpointEvent| {
        (a.tag.is_blow_up() && a.tag == b.tag).then(|| (a.location - c * b.location.atan()).abs())
    };
    Ok(ConsistencyReport {
        max_deviation: normal,
        max_angle_deviation: angle,
        max_slope_deviation: abs_dev,
        max_relative_slope_deviation: rel_dev,
        compared_points: count,
        left_location_gap: gap(sol.left_event(), psi.left_event.as_ref().unwrap()),
        right_location_gap: gap(sol.right_event(), psi.right_event.as_ref().unwrap()),
    })
}
