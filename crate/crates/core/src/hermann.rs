//! Cohomogeneity-two translators: graphs over a Weyl chamber of a flat
//! section, invariant under a Hermann action.
//!
//! The chamber carries the gradient field
//!
//! ```text
//! X(x) = Σ m λ cot(λ⟨d, x⟩) d
//! ```
//!
//! summed over positive roots `(d, λ, m)`. With this sign a product of two
//! rank-one factors splits into two copies of the rank-one profile equation.
//! Translators of the form `∇V = F X` reduce, along an integral curve `c` of
//! `X`, to a scalar equation for `F̂ = F ∘ c`; `V ∘ c` follows by quadrature
//! of `F̂ |X|²`.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec::{self, Execution};
use crate::ode::{self, Direction, EndpointEvent, IntegratorConfig, SolutionTrace};
use crate::spaces::Diagnostic;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    /// Unit direction.
    pub direction: Vec2,
    pub scale: f64,
    pub multiplicity: u32,
}

impl Root {
    fn angle(&self, x: Vec2) -> f64 {
        self.scale * dot(self.direction, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Layout {
    A1xA1,
    A2,
    B2,
    G2,
}

impl Layout {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a1xa1" | "a1a1" => Ok(Layout::A1xA1),
            "a2" => Ok(Layout::A2),
            "b2" => Ok(Layout::B2),
            "g2" => Ok(Layout::G2),
            other => Err(LabError::Config(format!("unknown root layout '{other}'"))),
        }
    }

    /// Directions and default scales of the positive roots.
    fn roots(self) -> Vec<(Vec2, f64)> {
        let r3 = 3f64.sqrt();
        match self {
            Layout::A1xA1 => vec![([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0)],
            Layout::A2 => vec![([1.0, 0.0], 1.0), ([0.5, 0.5 * r3], 1.0), ([-0.5, 0.5 * r3], 1.0)],
            Layout::B2 => {
                let d = std::f64::consts::FRAC_1_SQRT_2;
                vec![([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0), ([d, d], 2f64.sqrt()), ([d, -d], 2f64.sqrt())]
            }
            Layout::G2 => vec![
                ([1.0, 0.0], 1.0),
                ([-0.5, 0.5 * r3], 1.0),
                ([0.5, 0.5 * r3], 1.0),
                ([-0.5 * r3, 0.5], r3),
                ([0.5 * r3, 0.5], r3),
                ([0.0, 1.0], r3),
            ],
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Layout::A1xA1 => "A1xA1",
            Layout::A2 => "A2",
            Layout::B2 => "B2",
            Layout::G2 => "G2",
        };
        f.write_str(s)
    }
}

/// Field sampled on a regular grid, evaluated by bilinear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableField {
    pub origin: Vec2,
    pub spacing: Vec2,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in `x` fastest; entries outside the chamber are NaN.
    pub values: Vec<Vec2>,
}

impl TableField {
    pub fn eval(&self, x: Vec2) -> Result<Vec2> {
        let fx = (x[0] - self.origin[0]) / self.spacing[0];
        let fy = (x[1] - self.origin[1]) / self.spacing[1];
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64) {
            return Err(LabError::Domain(format!("point {x:?} outside the table")));
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (1.0 - tx) * (1.0 - ty) * at(i, j)[k]
                + tx * (1.0 - ty) * at(i + 1, j)[k]
                + (1.0 - tx) * ty * at(i, j + 1)[k]
                + tx * ty * at(i + 1, j + 1)[k];
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(LabError::Domain(format!("table cell at {x:?} touches the chamber wall")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FieldSource {
    RootSum,
    Table(TableField),
}

/// Exponent of `F̂` in the first term of the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FVariant {
    Cubic,
    Quadratic,
}

impl FVariant {
    pub fn exponent(self) -> i32 {
        match self {
            FVariant::Cubic => 3,
            FVariant::Quadratic => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" | "3" => Ok(FVariant::Cubic),
            "quadratic" | "2" => Ok(FVariant::Quadratic),
            other => Err(LabError::Config(format!("unknown F variant '{other}'"))),
        }
    }
}

impl fmt::Display for FVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FVariant::Cubic => "cubic",
            FVariant::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rank2Model {
    pub layout: Option<Layout>,
    pub roots: Vec<Root>,
    pub field: FieldSource,
    /// Smallest admissible distance of every `λ⟨d, x⟩` from `0` and `π`.
    pub pole_guard: f64,
    /// A point well inside the chamber.
    pub interior: Vec2,
}

impl Rank2Model {
    pub fn new(roots: Vec<Root>) -> Result<Self> {
        if roots.is_empty() {
            return Err(LabError::Config("a rank-two model needs roots".into()));
        }
        let mut normed = Vec::with_capacity(roots.len());
        for r in roots {
            let len = dot(r.direction, r.direction).sqrt();
            if !(len > 0.0 && r.scale > 0.0 && r.scale.is_finite() && r.multiplicity > 0) {
                return Err(LabError::Config(format!("invalid root {r:?}")));
            }
            normed.push(Root { direction: [r.direction[0] / len, r.direction[1] / len], ..r });
        }
        let spans = normed.iter().enumerate().any(|(i, a)| {
            normed[i + 1..].iter().any(|b| (a.direction[0] * b.direction[1] - a.direction[1] * b.direction[0]).abs() > 1e-12)
        });
        if !spans {
            return Err(LabError::Config("root directions do not span the plane".into()));
        }
        let mut model = Rank2Model { layout: None, roots: normed, field: FieldSource::RootSum, pole_guard: 1e-8, interior: [0.0; 2] };
        model.interior = model.deepest_point()?;
        Ok(model)
    }

    /// Built-in layout with optional per-root multiplicities and scales.
    pub fn from_layout(layout: Layout, multiplicities: Option<&[u32]>, scales: Option<&[f64]>) -> Result<Self> {
        let base = layout.roots();
        let pick = |len: Option<usize>, what: &str| -> Result<()> {
            match len {
                Some(l) if l != base.len() => {
                    Err(LabError::Config(format!("{layout} has {} roots but {l} {what} were given", base.len())))
                }
                _ => Ok(()),
            }
        };
        pick(multiplicities.map(<[u32]>::len), "multiplicities")?;
        pick(scales.map(<[f64]>::len), "scales")?;
        let roots = base
            .iter()
            .enumerate()
            .map(|(i, &(direction, scale))| Root {
                direction,
                scale: scales.map_or(scale, |s| s[i]),
                multiplicity: multiplicities.map_or(1, |m| m[i]),
            })
            .collect();
        let mut model = Self::new(roots)?;
        model.layout = Some(layout);
        Ok(model)
    }

    pub fn name(&self) -> String {
        let base = self.layout.map_or_else(|| "custom".to_string(), |l| l.to_string());
        match self.field {
            FieldSource::RootSum => base,
            FieldSource::Table(_) => format!("{base} (table)"),
        }
    }

    /// Smallest distance of any root angle from the ends of `(0, π)`.
    pub fn margin(&self, x: Vec2) -> f64 {
        self.roots
            .iter()
            .map(|r| {
                let a = r.angle(x);
                a.min(PI - a)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn in_chamber(&self, x: Vec2) -> bool {
        self.margin(x) > self.pole_guard
    }

    fn check(&self, x: Vec2) -> Result<()> {
        if self.in_chamber(x) {
            Ok(())
        } else {
            Err(LabError::Domain(format!("point {x:?} outside the guarded chamber")))
        }
    }

    /// Box containing the chamber, from the parallelogram of two independent roots.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let (a, b) = self
            .roots
            .iter()
            .enumerate()
            .flat_map(|(i, a)| self.roots[i + 1..].iter().map(move |b| (a, b)))
            .max_by(|(a, b), (c, d)| {
                let det = |p: &Root, q: &Root| (p.direction[0] * q.direction[1] - p.direction[1] * q.direction[0]).abs();
                det(a, b).total_cmp(&det(c, d))
            })
            .expect("at least two roots span the plane");
        let m = [[a.scale * a.direction[0], a.scale * a.direction[1]], [b.scale * b.direction[0], b.scale * b.direction[1]]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let solve = |p: f64, q: f64| [(p * m[1][1] - q * m[0][1]) / det, (m[0][0] * q - m[1][0] * p) / det];
        let corners = [solve(0.0, 0.0), solve(PI, 0.0), solve(0.0, PI), solve(PI, PI)];
        let lo = [corners.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min), corners.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min)];
        let hi = [corners.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max), corners.iter().map(|c| c[1]).fold(f64::NEG_INFINITY, f64::max)];
        (lo, hi)
    }

    fn deepest_point(&self) -> Result<Vec2> {
        let (lo, hi) = self.bounding_box();
        let n = 200;
        let mut best = (f64::NEG_INFINITY, lo);
        for i in 1..n {
            for j in 1..n {
                let x = [lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64];
                let m = self.margin(x);
                if m > best.0 {
                    best = (m, x);
                }
            }
        }
        if best.0 > self.pole_guard {
            Ok(best.1)
        } else {
            Err(LabError::Config("the chamber is empty".into()))
        }
    }

    fn root_sum_field(&self, x: Vec2) -> Vec2 {
        let mut out = [0.0; 2];
        for r in &self.roots {
            let c = r.multiplicity as f64 * r.scale / r.angle(x).tan();
            out[0] += c * r.direction[0];
            out[1] += c * r.direction[1];
        }
        out
    }

    pub fn x_field(&self, x: Vec2) -> Result<Vec2> {
        self.check(x)?;
        match &self.field {
            FieldSource::RootSum => Ok(self.root_sum_field(x)),
            FieldSource::Table(t) => t.eval(x),
        }
    }

    fn fd_step(&self) -> f64 {
        match &self.field {
            FieldSource::RootSum => 1e-5,
            FieldSource::Table(t) => 1e-3 * t.spacing[0].min(t.spacing[1]),
        }
    }

    /// Jacobian of `X`, symmetric for the root-sum field.
    pub fn jacobian(&self, x: Vec2) -> Result<Mat2> {
        self.check(x)?;
        match &self.field {
            FieldSource::RootSum => {
                let mut j = [[0.0; 2]; 2];
                for r in &self.roots {
                    let s = r.angle(x).sin();
                    let c = -(r.multiplicity as f64) * r.scale * r.scale / (s * s);
                    for (a, row) in j.iter_mut().enumerate() {
                        for (b, v) in row.iter_mut().enumerate() {
                            *v += c * r.direction[a] * r.direction[b];
                        }
                    }
                }
                Ok(j)
            }
            FieldSource::Table(_) => {
                let h = self.fd_step();
                let mut j = [[0.0; 2]; 2];
                for b in 0..2 {
                    let (mut p, mut m) = (x, x);
                    p[b] += h;
                    m[b] -= h;
                    let (fp, fm) = (self.x_field(p)?, self.x_field(m)?);
                    for a in 0..2 {
                        j[a][b] = (fp[a] - fm[a]) / (2.0 * h);
                    }
                }
                Ok(j)
            }
        }
    }

    pub fn div_x(&self, x: Vec2) -> Result<f64> {
        match &self.field {
            FieldSource::RootSum => {
                self.check(x)?;
                Ok(self
                    .roots
                    .iter()
                    .map(|r| {
                        let s = r.angle(x).sin();
                        -(r.multiplicity as f64) * r.scale * r.scale / (s * s)
                    })
                    .sum())
            }
            FieldSource::Table(_) => {
                let j = self.jacobian(x)?;
                Ok(j[0][0] + j[1][1])
            }
        }
    }

    /// Centered finite-difference curl `∂X₂/∂x₁ - ∂X₁/∂x₂`.
    pub fn curl_fd(&self, x: Vec2, h: f64) -> Result<f64> {
        let f = |dx: f64, dy: f64| self.x_field([x[0] + dx, x[1] + dy]);
        let d2dx = (f(h, 0.0)?[1] - f(-h, 0.0)?[1]) / (2.0 * h);
        let d1dy = (f(0.0, h)?[0] - f(0.0, -h)?[0]) / (2.0 * h);
        Ok(d2dx - d1dy)
    }

    /// Potential `ρ = Σ m log sin(λ⟨d, x⟩)` with `∇ρ = X`.
    pub fn potential(&self, x: Vec2) -> Result<f64> {
        self.check(x)?;
        match self.field {
            FieldSource::RootSum => Ok(self.roots.iter().map(|r| r.multiplicity as f64 * r.angle(x).sin().ln()).sum()),
            FieldSource::Table(_) => Err(LabError::Domain("no closed-form potential for a tabulated field".into())),
        }
    }

    /// Copy of the model whose field is the root-sum field sampled on an
    /// `nx × ny` grid over the bounding box.
    pub fn tabulated(&self, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(LabError::Config("a table needs at least 2 x 2 nodes".into()));
        }
        let (lo, hi) = self.bounding_box();
        let spacing = [(hi[0] - lo[0]) / (nx - 1) as f64, (hi[1] - lo[1]) / (ny - 1) as f64];
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = [lo[0] + i as f64 * spacing[0], lo[1] + j as f64 * spacing[1]];
                values.push(if self.in_chamber(x) { self.root_sum_field(x) } else { [f64::NAN; 2] });
            }
        }
        let table = TableField { origin: lo, spacing, nx, ny, values };
        Ok(Rank2Model { field: FieldSource::Table(table), ..self.clone() })
    }

    /// Zero of `X` by damped Newton iteration from the interior point.
    pub fn find_stationary(&self) -> Result<Vec2> {
        let mut x = self.interior;
        let mut fx = self.x_field(x)?;
        for _ in 0..100 {
            let norm = dot(fx, fx).sqrt();
            if norm < 1e-13 {
                return Ok(x);
            }
            let j = self.jacobian(x)?;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(LabError::Convergence("singular Jacobian in stationary-point search".into()));
            }
            let step = [(j[1][1] * fx[0] - j[0][1] * fx[1]) / det, (j[0][0] * fx[1] - j[1][0] * fx[0]) / det];
            let mut t = 1.0;
            loop {
                let y = [x[0] - t * step[0], x[1] - t * step[1]];
                if let Ok(fy) = self.x_field(y) {
                    if dot(fy, fy).sqrt() < norm {
                        x = y;
                        fx = fy;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-12 {
                    // a stalled line search is fine once |X| is at round-off level
                    return if norm < 1e-10 {
                        Ok(x)
                    } else {
                        Err(LabError::Convergence(format!("line search stalled with |X| = {norm:e}")))
                    };
                }
            }
        }
        Err(LabError::Convergence("stationary-point search did not converge".into()))
    }

    /// Flags points where `J_X` is not positive semidefinite, i.e. where the
    /// potential fails to be convex.
    pub fn convexity_diagnostic(&self, samples_per_axis: usize) -> Result<Option<Diagnostic>> {
        let (lo, hi) = self.bounding_box();
        let n = samples_per_axis.max(2);
        let (mut checked, mut violations, mut largest_min) = (0usize, 0usize, f64::NEG_INFINITY);
        for i in 1..n {
            for j in 1..n {
                let x = [lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64];
                if self.margin(x) < 1e-3 {
                    continue;
                }
                let (emin, _) = sym_eigenvalues(&self.jacobian(x)?);
                checked += 1;
                largest_min = largest_min.max(emin);
                if emin < 0.0 {
                    violations += 1;
                }
            }
        }
        if violations == 0 {
            return Ok(None);
        }
        Ok(Some(Diagnostic {
            code: "potential_not_convex".into(),
            message: format!(
                "J_X has a negative eigenvalue at {violations} of {checked} sampled points: the potential of X is concave there"
            ),
            values: vec![
                ("points_checked".into(), checked as f64),
                ("violations".into(), violations as f64),
                ("largest_min_eigenvalue".into(), largest_min),
            ],
        }))
    }
}

/// Jet of a function at a point: value, gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

/// Translator equation for an invariant graph over the chamber:
/// `Σ H_ij V_i V_j - (1 + |∇V|²)(X·∇V + ΔV - 1)`.
pub fn pde_residual(model: &Rank2Model, jet: &Jet, x: Vec2) -> Result<f64> {
    let xf = model.x_field(x)?;
    let g = jet.grad;
    let h = &jet.hess;
    let quad = dot(g, mat_vec(h, g));
    let lap = h[0][0] + h[1][1];
    Ok(quad - (1.0 + dot(g, g)) * (dot(xf, g) + lap - 1.0))
}

/// Reduced equation for `F̂` along an integral curve with velocity `c1`,
/// acceleration `c2` and divergence `div`.
pub fn f_rhs_along_curve(c1: Vec2, c2: Vec2, div: f64, f: f64, variant: FVariant) -> f64 {
    let speed2 = dot(c1, c1);
    dot(c2, c1) * f.powi(variant.exponent()) - (1.0 + speed2 * f * f) * ((speed2 + div) * f - 1.0)
}

/// The value of `F` consistent with the reduced equation at a zero of `X`.
pub fn stationary_f(model: &Rank2Model, x_hat: Vec2) -> Result<f64> {
    let xf = model.x_field(x_hat)?;
    if dot(xf, xf).sqrt() >= 1e-10 {
        return Err(LabError::Domain(format!("|X| = {:e} at {x_hat:?} is not a zero of X", dot(xf, xf).sqrt())));
    }
    let div = model.div_x(x_hat)?;
    if div == 0.0 {
        return Err(LabError::Domain("div X vanishes at the stationary point".into()));
    }
    Ok(1.0 / div)
}

pub fn curve_config() -> IntegratorConfig {
    IntegratorConfig { rtol: 1e-12, atol: 1e-14, h_init: 1e-4, boundary_guard: 0.0, ..IntegratorConfig::default() }
}

fn span_domain(t_span: (f64, f64)) -> Result<(Direction, (f64, f64))> {
    let (t0, t1) = t_span;
    let len = (t1 - t0).abs();
    if !(len > 0.0 && len.is_finite()) {
        return Err(LabError::Domain(format!("empty time span {t_span:?}")));
    }
    Ok(if t1 > t0 { (Direction::Forward, (t0 - len, t1)) } else { (Direction::Backward, (t1, t0 + len)) })
}

/// Integral curve `c' = X(c)` (positions only).
#[derive(Debug, Clone)]
pub struct PositionCurve {
    pub trace: SolutionTrace,
    pub t_span: (f64, f64),
}

impl PositionCurve {
    pub fn start(&self) -> Vec2 {
        let y = &self.trace.ic.1;
        [y[0], y[1]]
    }

    /// Where the integration stopped; a wall hit shows as a step underflow.
    pub fn end_event(&self) -> &EndpointEvent {
        let ev = if self.t_span.1 > self.t_span.0 { &self.trace.right_event } else { &self.trace.left_event };
        ev.as_ref().expect("one-sided traces carry their event")
    }

    pub fn position(&self, t: f64) -> Result<Vec2> {
        let y = self.trace.dense_eval(t)?;
        Ok([y[0], y[1]])
    }
}

fn field_or_nan(model: &Rank2Model, x: Vec2) -> Vec2 {
    model.x_field(x).unwrap_or([f64::NAN; 2])
}

pub fn integral_curve(model: &Rank2Model, x0: Vec2, t_span: (f64, f64), cfg: &IntegratorConfig) -> Result<PositionCurve> {
    model.check(x0)?;
    let (dir, domain) = span_domain(t_span)?;
    let cfg = IntegratorConfig { boundary_guard: 0.0, ..*cfg };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let f = field_or_nan(model, [y[0], y[1]]);
        dy[0] = f[0];
        dy[1] = f[1];
    };
    let trace = ode::integrate(rhs, (t_span.0, &x0), dir, domain, &cfg)?;
    Ok(PositionCurve { trace, t_span })
}

/// Integral curve carrying `F̂` and `V ∘ c`; state `[x₁, x₂, F̂, V]`.
#[derive(Debug, Clone)]
pub struct CurveTrace {
    pub trace: SolutionTrace,
    pub t_span: (f64, f64),
    pub variant: FVariant,
}

impl CurveTrace {
    pub fn end_event(&self) -> &EndpointEvent {
        let ev = if self.t_span.1 > self.t_span.0 { &self.trace.right_event } else { &self.trace.left_event };
        ev.as_ref().expect("one-sided traces carry their event")
    }

    /// `(t, x₁, x₂, F̂, V)` at every accepted step.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        self.trace.samples().iter().map(|s| [s.t, s.y[0], s.y[1], s.y[2], s.y[3]]).collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("t,x1,x2,Fhat,V\n");
        for r in self.rows() {
            out.push_str(&format!("{},{},{},{},{}\n", r[0], r[1], r[2], r[3], r[4]));
        }
        out
    }
}

/// Co-integrates the curve through the start of `curve` with `F̂` and `V`.
pub fn solve_f_and_v(
    model: &Rank2Model,
    curve: &PositionCurve,
    f0: f64,
    v0: f64,
    variant: FVariant,
    cfg: &IntegratorConfig,
) -> Result<CurveTrace> {
    solve_f_and_v_from(model, curve.start(), curve.t_span, f0, v0, variant, cfg)
}

pub fn solve_f_and_v_from(
    model: &Rank2Model,
    x0: Vec2,
    t_span: (f64, f64),
    f0: f64,
    v0: f64,
    variant: FVariant,
    cfg: &IntegratorConfig,
) -> Result<CurveTrace> {
    model.check(x0)?;
    if !(f0.is_finite() && v0.is_finite()) {
        return Err(LabError::Domain("initial F and V must be finite".into()));
    }
    let (dir, domain) = span_domain(t_span)?;
    let cfg = IntegratorConfig { boundary_guard: 0.0, ..*cfg };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let x = [y[0], y[1]];
        let (Ok(xf), Ok(j), Ok(div)) = (model.x_field(x), model.jacobian(x), model.div_x(x)) else {
            dy.fill(f64::NAN);
            return;
        };
        let c2 = mat_vec(&j, xf);
        dy[0] = xf[0];
        dy[1] = xf[1];
        dy[2] = f_rhs_along_curve(xf, c2, div, y[2], variant);
        dy[3] = y[2] * dot(xf, xf);
    };
    let trace = ode::integrate(rhs, (t_span.0, &[x0[0], x0[1], f0, v0]), dir, domain, &cfg)?;
    Ok(CurveTrace { trace, t_span, variant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    pub variant: FVariant,
    /// Largest `|d/dt (V ∘ c) - F̂ |X|²|` over dense points.
    pub max_quadrature_gap: f64,
    /// Largest translator-equation residual of the reconstructed jet.
    pub max_pde_residual: f64,
    pub points: usize,
    /// Points left out because the reconstructed slope exceeded the cap.
    pub skipped_steep: usize,
}

/// Points with `|X|` below this are skipped when reconstructing the Hessian.
pub const ROUND_TRIP_MIN_SPEED: f64 = 1e-3;

/// Points with `|∇V| = |F̂| |X|` above this are left out; near a blow-up of
/// `F̂` the finite differences lose all relative accuracy.
pub const ROUND_TRIP_SLOPE_CAP: f64 = 10.0;

/// Rebuilds the jet of `V` along a curve from the trace alone (`F̂'` by finite
/// differences of the dense output) and evaluates the translator equation.
pub fn round_trip(model: &Rank2Model, curve: &CurveTrace) -> Result<RoundTrip> {
    let mut gap: f64 = 0.0;
    let mut res: f64 = 0.0;
    let mut points = 0;
    let mut skipped_steep = 0;
    let widths = curve.trace.step_widths();
    let n = widths.len();
    for &(lo, w) in widths.iter().skip(1).take(n.saturating_sub(2)) {
        for frac in [0.25, 0.5, 0.75] {
            let t = lo + frac * w;
            let (tp, tm) = (t + 1e-3 * w, t - 1e-3 * w);
            let y = curve.trace.dense_eval(t)?;
            let (yp, ym) = (curve.trace.dense_eval(tp)?, curve.trace.dense_eval(tm)?);
            let x = [y[0], y[1]];
            let xf = model.x_field(x)?;
            let speed2 = dot(xf, xf);
            let f = y[2];
            if f.abs() * speed2.sqrt() > ROUND_TRIP_SLOPE_CAP {
                skipped_steep += 1;
                continue;
            }
            let df = (yp[2] - ym[2]) / (tp - tm);
            let dv = (yp[3] - ym[3]) / (tp - tm);
            gap = gap.max((dv - f * speed2).abs());
            if speed2.sqrt() < ROUND_TRIP_MIN_SPEED {
                continue;
            }
            let j = model.jacobian(x)?;
            let k = df / speed2;
            let hess = [
                [k * xf[0] * xf[0] + f * j[0][0], k * xf[0] * xf[1] + f * j[0][1]],
                [k * xf[1] * xf[0] + f * j[1][0], k * xf[1] * xf[1] + f * j[1][1]],
            ];
            let jet = Jet { value: y[3], grad: [f * xf[0], f * xf[1]], hess };
            res = res.max(pde_residual(model, &jet, x)?.abs());
            points += 1;
        }
    }
    Ok(RoundTrip { variant: curve.variant, max_quadrature_gap: gap, max_pde_residual: res, points, skipped_steep })
}

/// Residual threshold separating a consistent exponent from an inconsistent one.
pub const VARIANT_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariantSelection {
    pub cubic: RoundTrip,
    pub quadratic: RoundTrip,
    /// The variant whose residual stays below the threshold (the smaller one if both do).
    pub selected: Option<FVariant>,
}

/// Runs the round trip with both exponents from the same start and picks the
/// one consistent with the translator equation.
pub fn select_variant(
    model: &Rank2Model,
    x0: Vec2,
    t_span: (f64, f64),
    f0: f64,
    cfg: &IntegratorConfig,
) -> Result<VariantSelection> {
    let run = |v| round_trip(model, &solve_f_and_v_from(model, x0, t_span, f0, 0.0, v, cfg)?);
    let cubic = run(FVariant::Cubic)?;
    let quadratic = run(FVariant::Quadratic)?;
    let ok: Vec<&RoundTrip> =
        [&cubic, &quadratic].into_iter().filter(|r| r.points > 0 && r.max_pde_residual < VARIANT_RESIDUAL_TOL).collect();
    let selected = ok.into_iter().min_by(|a, b| a.max_pde_residual.total_cmp(&b.max_pde_residual)).map(|r| r.variant);
    Ok(VariantSelection { cubic, quadratic, selected })
}

/// Points on the level set `ρ = ρ(x̂) - depth` along `n` equally spaced rays
/// from the stationary point `x̂`.
pub fn level_seeds(model: &Rank2Model, x_hat: Vec2, depth: f64, n: usize) -> Result<Vec<Vec2>> {
    if !(depth > 0.0) {
        return Err(LabError::Domain(format!("level depth must be positive, got {depth}")));
    }
    let level = model.potential(x_hat)? - depth;
    let mut seeds = Vec::with_capacity(n);
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let u = [th.cos(), th.sin()];
        let at = |r: f64| [x_hat[0] + r * u[0], x_hat[1] + r * u[1]];
        // outermost radius still inside the guarded chamber
        let mut r_out = 1e-3;
        while model.in_chamber(at(r_out)) {
            r_out *= 2.0;
        }
        let mut r_in = 0.5 * r_out;
        for _ in 0..200 {
            let mid = 0.5 * (r_in + r_out);
            if model.in_chamber(at(mid)) {
                r_in = mid;
            } else {
                r_out = mid;
            }
        }
        if model.potential(at(r_in))? > level {
            return Err(LabError::Domain(format!("level depth {depth} not reached along ray {k}")));
        }
        let (mut a, mut b) = (0.0, r_in);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if model.potential(at(mid))? > level {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        seeds.push(at(0.5 * (a + b)));
    }
    Ok(seeds)
}

/// Fan of curves seeded on one level set with equal `F̂₀` and `V₀`.
#[allow(clippy::too_many_arguments)]
pub fn fan(
    model: &Rank2Model,
    n_curves: usize,
    depth: f64,
    f0: f64,
    v0: f64,
    t_span: (f64, f64),
    variant: FVariant,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<Vec<CurveTrace>> {
    let x_hat = model.find_stationary()?;
    let seeds = level_seeds(model, x_hat, depth, n_curves)?;
    exec::map(&seeds, exec, |&x0| solve_f_and_v_from(model, x0, t_span, f0, v0, variant, cfg)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn a1a1() -> Rank2Model {
        Rank2Model::from_layout(Layout::A1xA1, None, None).unwrap()
    }

    #[test]
    fn field_examples() {
        let m = a1a1();
        let z = m.x_field([FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert!(z[0].abs() < 1e-15 && z[1].abs() < 1e-15);
        let v = m.x_field([FRAC_PI_4, FRAC_PI_2]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!(m.x_field([0.0, 1.0]).is_err());
        assert!((m.div_x([FRAC_PI_2, FRAC_PI_2]).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn layouts_have_interior_and_equilibrium() {
        for layout in [Layout::A1xA1, Layout::A2, Layout::B2, Layout::G2] {
            let m = Rank2Model::from_layout(layout, None, None).unwrap();
            let x = m.find_stationary().unwrap();
            let f = m.x_field(x).unwrap();
            assert!(dot(f, f).sqrt() < 1e-10, "{layout}");
            assert!(m.in_chamber(x));
        }
        let m = a1a1();
        let x = m.find_stationary().unwrap();
        assert!((x[0] - FRAC_PI_2).abs() < 1e-12 && (x[1] - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn bad_models_rejected() {
        assert!(Rank2Model::new(vec![Root { direction: [1.0, 0.0], scale: 1.0, multiplicity: 1 }]).is_err());
        assert!(Rank2Model::from_layout(Layout::B2, Some(&[1, 2]), None).is_err());
        assert!(Layout::parse("E8").is_err());
        let r = |d| Root { direction: d, scale: 1.0, multiplicity: 1 };
        assert!(Rank2Model::new(vec![r([1.0, 0.0]), r([-1.0, 0.0])]).is_err());
    }

    #[test]
    fn divergence_and_jacobian_match_differences() {
        let m = Rank2Model::from_layout(Layout::B2, Some(&[1, 2, 3, 1]), None).unwrap();
        let x = m.find_stationary().unwrap();
        for p in [[x[0] + 0.1, x[1] - 0.05], x, [x[0] - 0.2, x[1] + 0.02]] {
            let h = 1e-5;
            let fx = |dx: f64, dy: f64| m.x_field([p[0] + dx, p[1] + dy]).unwrap();
            let fd = (fx(h, 0.0)[0] - fx(-h, 0.0)[0] + fx(0.0, h)[1] - fx(0.0, -h)[1]) / (2.0 * h);
            assert!((fd - m.div_x(p).unwrap()).abs() < 1e-6);
            let j = m.jacobian(p).unwrap();
            assert_eq!(j[0][1], j[1][0]);
            assert!(m.curl_fd(p, 1e-5).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn doubled_multiplicities() {
        let m = a1a1();
        let m2 = Rank2Model::from_layout(Layout::A1xA1, Some(&[2, 2]), None).unwrap();
        let x = [1.0, 2.0];
        assert!((m2.div_x(x).unwrap() - 2.0 * m.div_x(x).unwrap()).abs() < 1e-14);
        let xh = [FRAC_PI_2, FRAC_PI_2];
        assert_eq!(stationary_f(&m, xh).unwrap(), -0.5);
        assert_eq!(stationary_f(&m2, xh).unwrap(), -0.25);
        assert!(stationary_f(&m, [1.0, 1.0]).is_err());
    }

    #[test]
    fn weyl_swap_symmetry() {
        let m = a1a1();
        for x in [[0.4, 1.9], [2.2, 0.7], [1.0, 1.0]] {
            let a = m.x_field(x).unwrap();
            let b = m.x_field([x[1], x[0]]).unwrap();
            assert_eq!(a, [b[1], b[0]]);
        }
    }

    #[test]
    fn pde_residual_examples() {
        let m = a1a1();
        let x = [0.7, 1.3];
        let constant = Jet { value: 3.0, grad: [0.0; 2], hess: [[0.0; 2]; 2] };
        assert_eq!(pde_residual(&m, &constant, x).unwrap(), 1.0);
        let linear = Jet { value: x[0], grad: [1.0, 0.0], hess: [[0.0; 2]; 2] };
        let x1 = m.x_field(x).unwrap()[0];
        assert!((pde_residual(&m, &linear, x).unwrap() + 2.0 * (x1 - 1.0)).abs() < 1e-14);
        assert!(pde_residual(&m, &linear, [FRAC_PI_4, 1.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn product_model_reduces_to_rank_one_equation() {
        // V(x) = W(x₁) solves the chamber equation iff W'' = (1+W'²)(1 - cot(x₁) W')
        let m = a1a1();
        let x: Vec2 = [0.9, 1.4];
        let (w1, w2) = (0.3, -0.2);
        let expected = (1.0 + w1 * w1) * (1.0 - x[0].cos() / x[0].sin() * w1);
        let jet = Jet { value: 0.0, grad: [w1, 0.0], hess: [[expected, 0.0], [0.0, 0.0]] };
        assert!(pde_residual(&m, &jet, x).unwrap().abs() < 1e-14);
        let off = Jet { hess: [[expected + w2, 0.0], [0.0, 0.0]], ..jet };
        assert!(pde_residual(&m, &off, x).unwrap().abs() > 1e-3);
    }

    #[test]
    fn f_rhs_examples() {
        let (c1, c2) = ([0.3, -0.4], [1.1, 0.2]);
        for v in [FVariant::Cubic, FVariant::Quadratic] {
            assert_eq!(f_rhs_along_curve(c1, c2, -3.0, 0.0, v), 1.0);
            assert_eq!(f_rhs_along_curve([0.0; 2], [0.0; 2], -3.0, 0.7, v), -(-3.0 * 0.7 - 1.0));
        }
        for f in [0.5, 1.0, 2.0] {
            let d = f_rhs_along_curve(c1, c2, -3.0, f, FVariant::Cubic) - f_rhs_along_curve(c1, c2, -3.0, f, FVariant::Quadratic);
            assert!((d - dot(c2, c1) * f * f * (f - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_curve_examples() {
        let m = a1a1();
        let cfg = curve_config();
        let c = integral_curve(&m, [FRAC_PI_2, FRAC_PI_2], (0.0, 1.0), &cfg).unwrap();
        let e = c.position(1.0).unwrap();
        assert!((e[0] - FRAC_PI_2).abs() < 1e-14 && (e[1] - FRAC_PI_2).abs() < 1e-14);
        let c = integral_curve(&m, [FRAC_PI_4, FRAC_PI_2], (0.0, 1.0), &cfg).unwrap();
        assert!(c.trace.samples().iter().all(|s| (s.y[1] - FRAC_PI_2).abs() < 1e-14));
        assert!(c.position(1.0).unwrap()[0] > FRAC_PI_4);
    }

    #[test]
    fn reversed_span_retraces() {
        let m = Rank2Model::from_layout(Layout::A2, None, None).unwrap();
        let cfg = curve_config();
        let x0 = [m.interior[0] + 0.2, m.interior[1] - 0.1];
        let fwd = integral_curve(&m, x0, (0.0, 0.5), &cfg).unwrap();
        let x1 = fwd.position(0.5).unwrap();
        let back = integral_curve(&m, x1, (0.5, 0.0), &cfg).unwrap();
        let x2 = back.position(0.0).unwrap();
        assert!((x2[0] - x0[0]).abs().max((x2[1] - x0[1]).abs()) < 100.0 * cfg.rtol);
    }

    #[test]
    fn backward_curve_stops_at_wall() {
        let m = a1a1();
        let c = integral_curve(&m, [1.0, 1.2], (0.0, -5.0), &curve_config()).unwrap();
        let ev = c.end_event();
        assert!(ev.location > -5.0);
        let x = c.position(c.trace.t_min()).unwrap();
        assert!(m.margin(x) < 1e-2);
    }

    #[test]
    fn f_and_v_from_zero() {
        let m = a1a1();
        let cfg = curve_config();
        let curve = integral_curve(&m, [0.6, 1.1], (0.0, 0.3), &cfg).unwrap();
        let tr = solve_f_and_v(&m, &curve, 0.0, 2.0, FVariant::Cubic, &cfg).unwrap();
        let s = tr.trace.samples();
        assert_eq!(s[0].y[3], 2.0);
        let h = s[1].t - s[0].t;
        assert!(((s[1].y[2] - s[0].y[2]) / h - 1.0).abs() < 1e-2);
    }

    #[test]
    fn stationary_f_is_equilibrium() {
        let m = Rank2Model::from_layout(Layout::B2, None, None).unwrap();
        let xh = m.find_stationary().unwrap();
        let f = stationary_f(&m, xh).unwrap();
        let tr = solve_f_and_v_from(&m, xh, (0.0, 2.0), f, 0.0, FVariant::Cubic, &curve_config()).unwrap();
        assert!(tr.trace.samples().iter().all(|s| (s.y[2] - f).abs() < 1e-8));
    }

    #[test]
    fn cubic_variant_closes_the_round_trip() {
        let m = a1a1();
        let sel = select_variant(&m, [0.6, 1.1], (0.0, 0.5), 0.3, &curve_config()).unwrap();
        assert_eq!(sel.selected, Some(FVariant::Cubic));
        assert!(sel.cubic.max_pde_residual < 1e-3);
        assert!(sel.quadratic.max_pde_residual > 1e-3);
        assert!(sel.cubic.max_quadrature_gap < 1e-6);
    }

    #[test]
    fn table_field_tracks_root_sum() {
        let m = Rank2Model::from_layout(Layout::B2, None, None).unwrap();
        let t = m.tabulated(401, 401).unwrap();
        let x = m.find_stationary().unwrap();
        let p = [x[0] + 0.1, x[1] + 0.05];
        let (a, b) = (m.x_field(p).unwrap(), t.x_field(p).unwrap());
        assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-3);
        assert!((m.div_x(p).unwrap() - t.div_x(p).unwrap()).abs() < 1e-1);
        assert!(t.potential(p).is_err());
    }

    #[test]
    fn potential_is_concave() {
        let m = Rank2Model::from_layout(Layout::G2, None, None).unwrap();
        let d = m.convexity_diagnostic(20).unwrap().expect("diagnostic present");
        assert_eq!(d.code, "potential_not_convex");
    }

    #[test]
    fn fan_seeds_share_a_level() {
        let m = Rank2Model::from_layout(Layout::A2, None, None).unwrap();
        let xh = m.find_stationary().unwrap();
        let seeds = level_seeds(&m, xh, 0.5, 8).unwrap();
        let lv = m.potential(xh).unwrap() - 0.5;
        assert!(seeds.iter().all(|&s| (m.potential(s).unwrap() - lv).abs() < 1e-10));
        let curves = fan(&m, 8, 0.5, 0.2, 1.0, (0.0, 0.4), FVariant::Cubic, &curve_config(), Execution::Parallel).unwrap();
        assert_eq!(curves.len(), 8);
    }
}
