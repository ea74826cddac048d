//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p translator-lab --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translator_lab::exec::Execution;
use translator_lab::flow::{flow_config, refinement_study, translator_drift, Grid};
use translator_lab::hermann::{
    curve_config, f_rhs_along_curve, level_seeds, select_variant, solve_f_and_v_from, stationary_f, FVariant, Layout,
    Rank2Model,
};
use translator_lab::ode::EventTag;
use translator_lab::rank1::{
    asymptotic_slope, classify, eta, h1_bound, psi_rhs, psi_v_consistency, reflect_ic, region_sign, residual_check,
    shoot_regular, solve_maximal, solve_psi, standard_grids, sweep, x_star, BoundValue, RegularEnd, TranslatorConfig,
    TypeLabel, TIE_GUARD,
};
use translator_lab::spaces::{CoefficientVariant, RankOneSpace};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn test_spaces() -> Vec<RankOneSpace> {
    vec![
        RankOneSpace::sphere(2).unwrap(),
        RankOneSpace::sphere(3).unwrap(),
        RankOneSpace::complex_projective(2).unwrap(),
        RankOneSpace::complex_projective(3).unwrap(),
        RankOneSpace::quaternionic_projective(1).unwrap(),
        RankOneSpace::quaternionic_projective(2).unwrap(),
        RankOneSpace::cayley_plane(1.0, CoefficientVariant::Tabulated).unwrap(),
    ]
}

fn residual_suite() -> Outcome {
    let cfg = TranslatorConfig::default();
    let (mut worst, mut slowest, mut traces) = (0.0f64, 0.0f64, 0);
    for space in test_spaces() {
        let (s_grid, p_grid) = standard_grids(&space, 5, 5);
        let mut sols = Vec::new();
        for &s0 in &s_grid {
            for &p in &p_grid {
                let t = Instant::now();
                let sol = solve_maximal(&space, s0, 0.0, p, &cfg).map_err(err)?;
                slowest = slowest.max(t.elapsed().as_secs_f64());
                sols.push(sol);
            }
        }
        for end in [RegularEnd::Origin, RegularEnd::Focal] {
            let t = Instant::now();
            let sol = shoot_regular(&space, end, &cfg).map_err(err)?;
            slowest = slowest.max(t.elapsed().as_secs_f64());
            sols.push(sol);
        }
        for sol in &sols {
            worst = worst.max(residual_check(&space, sol));
            traces += 1;
        }
    }
    check(
        worst < 1e-4 && slowest < 1.0,
        format!("{traces} traces, max relative residual {worst:.2e}, slowest solve {slowest:.3} s"),
    )
}

fn classification_sweeps() -> Outcome {
    let cfg = TranslatorConfig::default();
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for space in [
        RankOneSpace::complex_projective(2).unwrap(),
        RankOneSpace::sphere(3).unwrap(),
        RankOneSpace::quaternionic_projective(1).unwrap(),
    ] {
        let (s_grid, p_grid) = standard_grids(&space, 41, 41);
        match sweep(&space, &s_grid, &p_grid, &cfg, Execution::Parallel, true) {
            Ok(rep) => {
                let present = rep.types_present();
                ok &= present == TypeLabel::ALL.to_vec();
                let counts: Vec<String> = rep.counts.iter().map(|(t, c)| format!("{t:?}={c}")).collect();
                parts.push(format!("{space}: {}", counts.join(" ")));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{space}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(ok && elapsed < 60.0, format!("{}; {elapsed:.1} s", parts.join("; ")))
}

fn region_rules() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut tested, mut mismatches) = (0, 0);
    while tested < 10_000 {
        let n: u32 = rng.random_range(1..=6);
        let x = 10f64.powf(rng.random_range(-3.0..2.0));
        let psi = rng.random_range(-1.55..1.55f64).tan();
        let xs = x_star(n);
        if (x - xs).abs() > 1e-12 && (psi - eta(n, x).map_err(err)?).abs() <= 10.0 * TIE_GUARD {
            continue;
        }
        let predicted = region_sign(n, x, psi).map_err(err)?;
        let actual = psi_rhs(n, x, psi).map_err(err)?;
        let sign = if actual > 0.0 {
            1
        } else if actual < 0.0 {
            -1
        } else {
            0
        };
        if sign != predicted {
            mismatches += 1;
        }
        tested += 1;
    }
    let mut exact = 0;
    for n in 1..=6 {
        for psi in [-100.0, -1.0, 0.0, 1.0, 100.0] {
            if region_sign(n, x_star(n), psi).map_err(err)? != 1 || psi_rhs(n, x_star(n), psi).map_err(err)? <= 0.0 {
                mismatches += 1;
            }
            exact += 1;
        }
    }
    check(mismatches == 0, format!("{tested} random points + {exact} points on x = x*, {mismatches} mismatches"))
}

/// Four families of phase-plane initial conditions and the blow-up they force.
fn blow_up_facts() -> Outcome {
    const N: u32 = 2;
    let xs = x_star(N);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_cauchy: f64 = 0.0;
    let mut failures = Vec::new();
    for fact in 1..=4 {
        for _ in 0..100 {
            let (x0, psi0) = match fact {
                1 => {
                    let x0 = rng.random_range(0.05..0.95) * xs;
                    let e = eta(N, x0).map_err(err)?;
                    (x0, e + rng.random_range(0.01f64..1.5).tan())
                }
                2 => (rng.random_range(0.05..0.95) * xs, -rng.random_range(0.01f64..1.5).tan()),
                3 => (rng.random_range(1.05..4.0) * xs, rng.random_range(0.01f64..1.5).tan()),
                _ => {
                    let x0 = rng.random_range(1.05..4.0) * xs;
                    let e = eta(N, x0).map_err(err)?;
                    (x0, e - rng.random_range(0.01f64..1.5).tan())
                }
            };
            let (want_tag, leftward) = match fact {
                1 => (EventTag::BlowUpPlus, true),
                2 => (EventTag::BlowUpMinus, true),
                3 => (EventTag::BlowUpPlus, false),
                _ => (EventTag::BlowUpMinus, false),
            };
            let mut locations = Vec::new();
            for rtol in [1e-6, 1e-7, 1e-8, 1e-9] {
                let tr = solve_psi(N, x0, psi0, &TranslatorConfig::default().with_rtol(rtol)).map_err(err)?;
                let ev = if leftward { &tr.left_event } else { &tr.right_event };
                let ev = ev.as_ref().ok_or("missing endpoint event")?;
                let side_ok = if leftward { ev.location > 0.0 && ev.location < x0 } else { ev.location > x0 };
                if ev.tag != want_tag || !side_ok {
                    failures.push(format!("fact {fact} at ({x0:.4}, {psi0:.4}): {:?} at {}", ev.tag, ev.location));
                }
                locations.push(ev.location);
            }
            for w in locations.windows(2) {
                worst_cauchy = worst_cauchy.max((w[1] - w[0]).abs());
            }
        }
    }
    check(
        failures.is_empty() && worst_cauchy < 1e-3,
        format!(
            "400 ICs x 4 tolerances, {} wrong events, largest location change between tolerances {worst_cauchy:.2e}{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn comparison_bound() -> Outcome {
    const N: u32 = 2;
    let xs = x_star(N);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TranslatorConfig::default();
    let (mut compared, mut violations, mut exceeded) = (0, 0, 0);
    let mut min_margin = f64::INFINITY;
    for _ in 0..20 {
        let x0 = rng.random_range(0.1..0.9) * xs;
        let psi0 = eta(N, x0).map_err(err)? + rng.random_range(0.05f64..1.4).tan();
        let tr = solve_psi(N, x0, psi0, &cfg).map_err(err)?;
        for smp in tr.samples() {
            let x = smp.t;
            if !(x < x0) {
                continue;
            }
            match h1_bound(N, x, x0, psi0).map_err(err)? {
                BoundValue::Finite(b) => {
                    let margin = smp.y[0] - b;
                    min_margin = min_margin.min(margin / b.abs().max(1.0));
                    if margin < -1e-9 * b.abs().max(1.0) {
                        violations += 1;
                    }
                    compared += 1;
                }
                BoundValue::Exceeded => exceeded += 1,
            }
        }
    }
    check(
        violations == 0 && compared > 0,
        format!(
            "20 ICs, {compared} samples with a finite bound ({exceeded} past the branch), {violations} violations, \
             smallest relative margin {min_margin:.2e}"
        ),
    )
}

fn change_of_variables() -> Outcome {
    let space = RankOneSpace::complex_projective(2).unwrap();
    let cfg = TranslatorConfig::default().with_rtol(1e-9);
    let c = 2.0 * 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut dev, mut angle, mut slope5, mut gap, mut points): (f64, f64, f64, f64, usize) = (0.0, 0.0, 0.0, 0.0, 0);
    for _ in 0..40 {
        let x0 = rng.random_range(0.1..4.0);
        let psi0 = rng.random_range(-1.4f64..1.4).tan();
        let rep = psi_v_consistency(&space, c * f64::atan(x0), psi0, &cfg).map_err(err)?;
        dev = dev.max(rep.max_deviation);
        angle = angle.max(rep.max_angle_deviation);
        slope5 = slope5.max(rep.max_relative_slope_deviation);
        for g in [rep.left_location_gap, rep.right_location_gap].into_iter().flatten() {
            gap = gap.max(g);
        }
        points += rep.compared_points;
    }
    check(
        dev < 1e-6 && gap < 1e-4,
        format!(
            "40 ICs, {points} points: curve distance {dev:.2e}, blow-up location gap {gap:.2e} \
             (pointwise: angle {angle:.2e}, relative slope for |V'| <= 100 {slope5:.2e})"
        ),
    )
}

fn regular_asymptotics() -> Outcome {
    let cfg = TranslatorConfig::default();
    let cases = [
        (RankOneSpace::sphere(2).unwrap(), RegularEnd::Origin, 0.5),
        (RankOneSpace::complex_projective(2).unwrap(), RegularEnd::Origin, 0.25),
        (RankOneSpace::complex_projective(2).unwrap(), RegularEnd::Focal, 0.5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (space, end, expected) in cases {
        let sol = shoot_regular(&space, end, &cfg).map_err(err)?;
        let fitted = asymptotic_slope(&sol, end).map_err(err)?;
        let b = &space.boundary;
        let residue = if end == RegularEnd::Origin { b.residue_origin } else { b.residue_focal };
        let from_residue = 1.0 / (1.0 + residue);
        ok &= (fitted - expected).abs() < 1e-3 && (fitted - from_residue).abs() < 1e-3;
        parts.push(format!("{space} {end:?}: {fitted:.7} (expected {expected}, 1/(1+R) = {from_residue:.7})"));
    }
    check(ok, parts.join("; "))
}

fn flow_verification() -> Outcome {
    let space = RankOneSpace::complex_projective(2).unwrap();
    let sol = shoot_regular(&space, RegularEnd::Origin, &TranslatorConfig::default()).map_err(err)?;
    let label = classify(&sol).map_err(err)?.label;
    let a = space.alpha();
    let grid = Grid::new(0.1 * a, 0.6 * a, 100).map_err(err)?;
    let drift = translator_drift(&space, &sol, &grid, 0.5, 0.0, &flow_config()).map_err(err)?;
    let refine = refinement_study(&space, &sol, (0.1 * a, 0.6 * a), &[50, 100, 200], 0.5, &flow_config()).map_err(err)?;
    let min_order = refine.orders.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        label == TypeLabel::IV && drift.sup_deviation < 1e-3 && min_order >= 1.9,
        format!(
            "{label:?} profile, sup deviation {:.2e} at N = 100; deviations {:?} at N = {:?}, orders {:?}",
            drift.sup_deviation, refine.deviations, refine.intervals, refine.orders
        ),
    )
}

fn alpha_cross_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        for space in [RankOneSpace::complex_projective(n).unwrap(), RankOneSpace::quaternionic_projective(n).unwrap()] {
            worst = worst.max((space.alpha() / space.alpha_formula() - 1.0).abs());
            if !space.diagnostics().is_empty() {
                return Err(format!("unexpected diagnostic for {space}"));
            }
        }
    }
    let has = |space: &RankOneSpace, code: &str| space.diagnostics().iter().any(|d| d.code == code);
    let sphere_ok = (2..=6).all(|n| has(&RankOneSpace::sphere(n).unwrap(), "alpha_sphere_factor"));
    let cayley_ok = [CoefficientVariant::Tabulated, CoefficientVariant::RootSum].iter().all(|&v| {
        let op = RankOneSpace::cayley_plane(1.3, v).unwrap();
        has(&op, "alpha_cayley_table") && has(&op, "cayley_coefficient")
    });
    check(
        worst < 1e-9 && sphere_ok && cayley_ok,
        format!(
            "CP^n, HP^n (n <= 6) worst relative alpha error {worst:.2e}; sphere factor diagnostic {}; Cayley diagnostics {}",
            if sphere_ok { "present" } else { "MISSING" },
            if cayley_ok { "present" } else { "MISSING" }
        ),
    )
}

fn hermann_round_trip() -> Outcome {
    let cfg = curve_config();
    let mut ok = true;
    let mut parts = Vec::new();
    for layout in [Layout::A1xA1, Layout::B2] {
        let model = Rank2Model::from_layout(layout, None, None).map_err(err)?;
        let x_hat = model.find_stationary().map_err(err)?;
        let seeds = level_seeds(&model, x_hat, 0.5, 6).map_err(err)?;
        let (mut gap, mut res, mut other): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
        let mut chosen = Vec::new();
        for &x0 in &seeds {
            for f0 in [-0.3, 0.0, 0.3] {
                let sel = select_variant(&model, x0, (0.0, 0.5), f0, &cfg).map_err(err)?;
                let Some(variant) = sel.selected else {
                    ok = false;
                    continue;
                };
                chosen.push(variant);
                let (win, lose) =
                    if variant == FVariant::Cubic { (&sel.cubic, &sel.quadratic) } else { (&sel.quadratic, &sel.cubic) };
                gap = gap.max(win.max_quadrature_gap);
                res = res.max(win.max_pde_residual);
                other = other.min(lose.max_pde_residual);
            }
        }
        chosen.dedup();
        let f_star = stationary_f(&model, x_hat).map_err(err)?;
        let xf = model.x_field(x_hat).map_err(err)?;
        let jac = model.jacobian(x_hat).map_err(err)?;
        let acc = [jac[0][0] * xf[0] + jac[0][1] * xf[1], jac[1][0] * xf[0] + jac[1][1] * xf[1]];
        let div = model.div_x(x_hat).map_err(err)?;
        let rate = f_rhs_along_curve(xf, acc, div, f_star, chosen.first().copied().unwrap_or(FVariant::Cubic)).abs();
        let held = solve_f_and_v_from(&model, x_hat, (0.0, 1.0), f_star, 0.0, FVariant::Cubic, &cfg).map_err(err)?;
        let drift = held.rows().iter().map(|r| (r[3] - f_star).abs()).fold(0.0, f64::max);
        let layout_ok = chosen.len() == 1 && gap < 1e-6 && res < 1e-3 && rate < 1e-8 && drift < 1e-8;
        ok &= layout_ok;
        parts.push(format!(
            "{layout}: selected {:?}, quadrature gap {gap:.2e}, residual {res:.2e} (rejected variant >= {other:.2e}), \
             stationary F {f_star:.6} rate {rate:.1e} drift {drift:.1e}",
            chosen
        ));
    }
    check(ok, parts.join("; "))
}

fn swapped(label: TypeLabel) -> TypeLabel {
    match label {
        TypeLabel::IV => TypeLabel::V,
        TypeLabel::V => TypeLabel::IV,
        TypeLabel::II => TypeLabel::III,
        TypeLabel::III => TypeLabel::II,
        TypeLabel::I => TypeLabel::I,
    }
}

fn invariance_suite() -> Outcome {
    let cfg = TranslatorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut translation_fail, mut reflection_fail) = (0, 0);
    let cp2 = RankOneSpace::complex_projective(2).unwrap();
    let spheres = [RankOneSpace::sphere(2).unwrap(), RankOneSpace::sphere(3).unwrap()];
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..50 {
        let space = if i % 2 == 0 { &cp2 } else { &spheres[i % 4 / 2] };
        let s0 = rng.random_range(0.02..0.98) * space.alpha();
        let p = rng.random_range(-1.5f64..1.5).tan();
        let c = rng.random_range(-100.0..100.0);
        let a = solve_maximal(space, s0, 0.0, p, &cfg).map_err(err)?;
        let b = solve_maximal(space, s0, c, p, &cfg).map_err(err)?;
        let same_slopes = a.trace.samples().len() == b.trace.samples().len()
            && a.trace.samples().iter().zip(b.trace.samples()).all(|(x, y)| x.t == y.t && x.y[0].to_bits() == y.y[0].to_bits());
        let same_type = classify(&a).map_err(err)?.label == classify(&b).map_err(err)?.label;
        if !(same_slopes && same_type) {
            translation_fail += 1;
        }

        let sphere = &spheres[i % 2];
        let s0 = rng.random_range(0.02..0.98) * sphere.alpha();
        let p = rng.random_range(-1.5f64..1.5).tan();
        let (rs, rp) = reflect_ic(sphere, s0, p);
        let t = classify(&solve_maximal(sphere, s0, 0.0, p, &cfg).map_err(err)?).map_err(err)?.label;
        let r = classify(&solve_maximal(sphere, rs, 0.0, rp, &cfg).map_err(err)?).map_err(err)?.label;
        seen.insert(t);
        if r != swapped(t) {
            reflection_fail += 1;
        }
    }
    for sphere in &spheres {
        for end in [RegularEnd::Origin, RegularEnd::Focal] {
            let sol = shoot_regular(sphere, end, &cfg).map_err(err)?;
            let ic = &sol.trace.ic;
            let t = classify(&sol).map_err(err)?.label;
            let (rs, rp) = reflect_ic(sphere, ic.0, ic.1[0]);
            let r = classify(&solve_maximal(sphere, rs, 0.0, rp, &cfg).map_err(err)?).map_err(err)?.label;
            seen.insert(t);
            if r != swapped(t) {
                reflection_fail += 1;
            }
        }
    }
    check(
        translation_fail == 0 && reflection_fail == 0,
        format!(
            "50 translated ICs ({translation_fail} failures), 50 reflected sphere ICs + 4 shooting solutions \
             ({reflection_fail} failures), types exercised {seen:?}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("residual suite", residual_suite),
        ("five-type classification sweeps", classification_sweeps),
        ("region rules", region_rules),
        ("blow-up facts", blow_up_facts),
        ("comparison bound", comparison_bound),
        ("change of variables", change_of_variables),
        ("regular-endpoint asymptotics", regular_asymptotics),
        ("flow verification", flow_verification),
        ("alpha cross-check", alpha_cross_check),
        ("Hermann round trip", hermann_round_trip),
        ("invariance suite", invariance_suite),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1} s]: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1} s]: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
