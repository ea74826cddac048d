//! The four compact rank-one symmetric spaces and the mean curvature
//! profile `h(s)` of the principal isotropy orbit at distance `s` from the
//! base point.
//!
//! Two evaluators are provided: the closed form per space, and the restricted
//! root sum `m_λ λ cot(λ s) + m_2λ 2λ cot(2λ s)`. They agree identically for
//! the sphere and the complex and quaternionic projective spaces. For the
//! Cayley plane the closed form carries a leading coefficient of 16 where the
//! root sum gives 15; [`CoefficientVariant`] selects which one drives `h`.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpaceKind {
    /// `SO(n+1)/SO(n)`
    Sphere,
    /// `SU(n+1)/S(U(1)×U(n))`
    ComplexProjective,
    /// `Sp(n+1)/(Sp(1)×Sp(n))`
    QuaternionicProjective,
    /// `F4/Spin(9)`
    CayleyPlane,
}

impl SpaceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" | "s" => Ok(SpaceKind::Sphere),
            "cp" | "complex" | "complexprojective" => Ok(SpaceKind::ComplexProjective),
            "hp" | "quaternionic" | "quaternionicprojective" => Ok(SpaceKind::QuaternionicProjective),
            "op" | "cayley" | "cayleyplane" => Ok(SpaceKind::CayleyPlane),
            other => Err(LabError::Config(format!("unknown space kind '{other}'"))),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SpaceKind::Sphere => "sphere",
            SpaceKind::ComplexProjective => "cp",
            SpaceKind::QuaternionicProjective => "hp",
            SpaceKind::CayleyPlane => "cayley",
        }
    }
}

/// Leading coefficient used for the Cayley plane profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum CoefficientVariant {
    /// `(16 - 7 tan²(as)) a / tan(as)`
    #[default]
    Tabulated,
    /// `(15 - 7 tan²(as)) a / tan(as)`, the root sum with multiplicities (8, 7).
    RootSum,
}

impl CoefficientVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tabulated" => Ok(CoefficientVariant::Tabulated),
            "rootsum" => Ok(CoefficientVariant::RootSum),
            other => Err(LabError::Config(format!("unknown coefficient variant '{other}'"))),
        }
    }
}

/// Singular structure of `h` on its first fundamental interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryData {
    /// Tabulated value of α as printed for the space.
    pub alpha_formula: f64,
    /// First pole of `h` beyond `s = 0`.
    pub alpha_numeric: f64,
    /// `R₀` with `h(s) ≈ R₀ / s` as `s → 0⁺`.
    pub residue_origin: f64,
    /// `R_α` with `h(s) ≈ -R_α / (α - s)` as `s → α⁻`.
    pub residue_focal: f64,
    /// Unique zero of `h` in `(0, α)`.
    pub h_zero: f64,
}

/// Structured note about a disagreement that is reported, not reconciled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneSpace {
    pub kind: SpaceKind,
    pub n: u32,
    pub a: f64,
    pub lambda: f64,
    pub m_lambda: u32,
    pub m_2lambda: u32,
    pub dim: u32,
    pub variant: CoefficientVariant,
    /// Pole guard as a fraction of `alpha_numeric`.
    pub pole_guard: f64,
    pub boundary: BoundaryData,
}

pub const DEFAULT_POLE_GUARD: f64 = 1e-8;

impl RankOneSpace {
    pub fn new(kind: SpaceKind, n: u32, a: f64, variant: CoefficientVariant) -> Result<Self> {
        let (lambda, m_lambda, m_2lambda) = match kind {
            SpaceKind::Sphere => {
                if n < 2 {
                    return Err(LabError::Domain(format!("sphere requires n >= 2, got {n}")));
                }
                (1.0 / (2.0 * (n as f64 - 1.0)).sqrt(), n - 1, 0)
            }
            SpaceKind::ComplexProjective => {
                if n < 1 {
                    return Err(LabError::Domain("complex projective space requires n >= 1".into()));
                }
                (1.0 / (2.0 * (n as f64 + 1.0).sqrt()), 2 * n - 2, 1)
            }
            SpaceKind::QuaternionicProjective => {
                if n < 1 {
                    return Err(LabError::Domain("quaternionic projective space requires n >= 1".into()));
                }
                (1.0 / (2.0 * (2.0 * (n as f64 + 2.0)).sqrt()), 4 * n - 4, 3)
            }
            SpaceKind::CayleyPlane => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(LabError::Domain(format!("Cayley plane requires a > 0, got {a}")));
                }
                (a, 8, 7)
            }
        };
        let mut space = RankOneSpace {
            kind,
            n,
            a,
            lambda,
            m_lambda,
            m_2lambda,
            dim: m_lambda + m_2lambda + 1,
            variant,
            pole_guard: DEFAULT_POLE_GUARD,
            boundary: BoundaryData {
                alpha_formula: 0.0,
                alpha_numeric: 0.0,
                residue_origin: 0.0,
                residue_focal: 0.0,
                h_zero: 0.0,
            },
        };
        space.boundary = space.boundary_data(1e-15)?;
        Ok(space)
    }

    pub fn sphere(n: u32) -> Result<Self> {
        Self::new(SpaceKind::Sphere, n, 1.0, CoefficientVariant::Tabulated)
    }

    pub fn complex_projective(n: u32) -> Result<Self> {
        Self::new(SpaceKind::ComplexProjective, n, 1.0, CoefficientVariant::Tabulated)
    }

    pub fn quaternionic_projective(n: u32) -> Result<Self> {
        Self::new(SpaceKind::QuaternionicProjective, n, 1.0, CoefficientVariant::Tabulated)
    }

    pub fn cayley_plane(a: f64, variant: CoefficientVariant) -> Result<Self> {
        Self::new(SpaceKind::CayleyPlane, 1, a, variant)
    }

    pub fn alpha(&self) -> f64 {
        self.boundary.alpha_numeric
    }

    pub fn alpha_formula(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            SpaceKind::Sphere => ((n - 1.0) / 2.0).sqrt() * PI,
            SpaceKind::ComplexProjective => (n + 1.0).sqrt() * PI,
            SpaceKind::QuaternionicProjective => (2.0 * (n + 2.0)).sqrt() * PI,
            SpaceKind::CayleyPlane => self.a * PI / 4.0,
        }
    }

    /// Closed-form profile without domain checks.
    pub fn profile(&self, s: f64) -> f64 {
        let n = self.n as f64;
        match self.kind {
            SpaceKind::Sphere => ((n - 1.0) / 2.0).sqrt() / (s / (2.0 * (n - 1.0)).sqrt()).tan(),
            SpaceKind::ComplexProjective => {
                let l = 2.0 * (n + 1.0).sqrt();
                let t = (s / l).tan();
                (2.0 * n - 1.0 - t * t) / (l * t)
            }
            SpaceKind::QuaternionicProjective => {
                let l = 2.0 * (2.0 * (n + 2.0)).sqrt();
                let t = (s / l).tan();
                (4.0 * n - 1.0 - 3.0 * t * t) / (l * t)
            }
            SpaceKind::CayleyPlane => {
                let c = match self.variant {
                    CoefficientVariant::Tabulated => 16.0,
                    CoefficientVariant::RootSum => 15.0,
                };
                let t = (self.a * s).tan();
                (c - 7.0 * t * t) * self.a / t
            }
        }
    }

    /// Root-sum profile without domain checks.
    pub fn profile_rootsum(&self, s: f64) -> f64 {
        let l = self.lambda;
        let cot = |x: f64| x.cos() / x.sin();
        self.m_lambda as f64 * l * cot(l * s) + self.m_2lambda as f64 * 2.0 * l * cot(2.0 * l * s)
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let alpha = self.boundary.alpha_numeric;
        let eps = self.pole_guard * alpha;
        if !(s > eps && s < alpha - eps) {
            return Err(LabError::Domain(format!(
                "s = {s} outside guarded domain ({eps}, {})",
                alpha - eps
            )));
        }
        Ok(())
    }

    pub fn mean_curvature(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.profile(s))
    }

    pub fn mean_curvature_rootsum(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.profile_rootsum(s))
    }

    /// Locates the first zero and first pole of `h` by a sign scan refined
    /// with bisection, and extrapolates the residues at both ends.
    pub fn boundary_data(&self, pole_tol: f64) -> Result<BoundaryData> {
        if !(pole_tol > 0.0) {
            return Err(LabError::Config(format!("pole_tol must be positive, got {pole_tol}")));
        }
        let h = |s: f64| self.profile(s);
        // every first pole lies below π/λ
        let span = 1.5 * PI / self.lambda;
        const SCAN: usize = 6000;
        let mut zero_bracket = None;
        let mut pole_bracket = None;
        let mut prev_s = span * 1e-6;
        let mut prev_h = h(prev_s);
        for i in 1..=SCAN {
            let s = span * i as f64 / SCAN as f64;
            let cur = h(s);
            if zero_bracket.is_none() && prev_h > 0.0 && cur < 0.0 {
                zero_bracket = Some((prev_s, s));
            }
            if zero_bracket.is_some() && prev_h < 0.0 && cur > 0.0 {
                pole_bracket = Some((prev_s, s));
                break;
            }
            prev_s = s;
            prev_h = cur;
        }
        let (Some(zb), Some(pb)) = (zero_bracket, pole_bracket) else {
            return Err(LabError::Convergence(format!(
                "sign scan of h on (0, {span}) did not bracket a zero and a pole"
            )));
        };
        let h_zero = bisect_sign(&h, zb, pole_tol);
        let alpha = bisect_sign(&h, pb, pole_tol);

        let richardson = |g: &dyn Fn(f64) -> f64, d0: f64| -> f64 {
            // g(δ) = g₀ + c₂ δ² + c₄ δ⁴ + …
            let r1 = |d: f64| (4.0 * g(d / 2.0) - g(d)) / 3.0;
            (16.0 * r1(d0 / 2.0) - r1(d0)) / 15.0
        };
        let d0 = 1e-2 * alpha;
        let residue_origin = richardson(&|d| d * h(d), d0);
        let residue_focal = -richardson(&|d| d * h(alpha - d), d0);
        let bd = BoundaryData {
            alpha_formula: self.alpha_formula(),
            alpha_numeric: alpha,
            residue_origin,
            residue_focal,
            h_zero,
        };
        if !(bd.residue_origin > 0.0 && bd.residue_focal > 0.0 && 0.0 < h_zero && h_zero < alpha) {
            return Err(LabError::Numerical(format!("inconsistent boundary data {bd:?}")));
        }
        Ok(bd)
    }

    /// Disagreements between tabulated and computed quantities.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let b = &self.boundary;
        let ratio = b.alpha_numeric / b.alpha_formula;
        let mut out = Vec::new();
        match self.kind {
            SpaceKind::Sphere => out.push(Diagnostic {
                code: "alpha_sphere_factor".into(),
                message: "tabulated alpha is half the first pole of h; the pole is used as the domain end".into(),
                values: vec![
                    ("alpha_formula".into(), b.alpha_formula),
                    ("alpha_numeric".into(), b.alpha_numeric),
                    ("ratio".into(), ratio),
                ],
            }),
            SpaceKind::ComplexProjective | SpaceKind::QuaternionicProjective => {
                if (ratio - 1.0).abs() > 1e-9 {
                    out.push(Diagnostic {
                        code: "alpha_mismatch".into(),
                        message: "tabulated alpha differs from the first pole of h".into(),
                        values: vec![
                            ("alpha_formula".into(), b.alpha_formula),
                            ("alpha_numeric".into(), b.alpha_numeric),
                        ],
                    });
                }
            }
            SpaceKind::CayleyPlane => {
                out.push(Diagnostic {
                    code: "alpha_cayley_table".into(),
                    message: "three values of alpha are in circulation: a*pi/4, pi/(4a), and the pole of tan(as) at pi/(2a)"
                        .into(),
                    values: vec![
                        ("a_pi_over_4".into(), self.a * PI / 4.0),
                        ("pi_over_4a".into(), PI / (4.0 * self.a)),
                        ("alpha_numeric".into(), b.alpha_numeric),
                    ],
                });
                out.push(Diagnostic {
                    code: "cayley_coefficient".into(),
                    message: format!(
                        "closed-form leading coefficient 16 versus root-sum 15 for multiplicities (8, 7); active variant {:?}",
                        self.variant
                    ),
                    values: vec![
                        ("closed_form".into(), 16.0),
                        ("root_sum".into(), 15.0),
                        ("residue_origin".into(), b.residue_origin),
                    ],
                });
            }
        }
        out
    }
}

impl fmt::Display for RankOneSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Sphere => write!(f, "S^{}", self.n),
            SpaceKind::ComplexProjective => write!(f, "CP^{}", self.n),
            SpaceKind::QuaternionicProjective => write!(f, "HP^{}", self.n),
            SpaceKind::CayleyPlane => write!(f, "OP^2(a={})", self.a),
        }
    }
}

/// Bisection on the sign of `f` over a bracket with opposite end signs.
fn bisect_sign(f: &dyn Fn(f64) -> f64, (mut lo, mut hi): (f64, f64), tol: f64) -> f64 {
    let lo_sign = f(lo) > 0.0;
    while hi - lo > tol * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
