use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use translator_lab::exec::{self, Execution};
use translator_lab::flow::{self, Grid};
use translator_lab::hermann::{self, FVariant, Layout, Rank2Model, Root};
use translator_lab::rank1::{self, BoundValue, MaximalSolution, RegularEnd, TranslatorConfig};
use translator_lab::spaces::{CoefficientVariant, RankOneSpace, SpaceKind};
use translator_lab::LabError;

use crate::config::{parse_list, Settings};
use crate::manifest::Manifest;
use crate::{Cli, Command, SolverArgs, SpaceArgs};

type Result<T> = std::result::Result<T, LabError>;

pub fn run(cli: &Cli) -> Result<()> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    let threads = cli.threads.or_else(exec::threads_from_env);
    exec::with_threads(threads, move || dispatch(cli, &mut settings))
}

fn dispatch(cli: &Cli, st: &mut Settings) -> Result<()> {
    match &cli.command {
        Command::Spaces { space } => spaces(cli, st, space),
        Command::Solve { space, solver, s0, v0, dv0, out } => solve(cli, st, space, solver, (*s0, *v0, *dv0), out.as_deref()),
        Command::Shoot { space, solver, end, out } => shoot(cli, st, space, solver, end.clone(), out.as_deref()),
        Command::Classify { space, solver, s0, v0, dv0 } => classify(cli, st, space, solver, (*s0, *v0, *dv0)),
        Command::Sweep { space, solver, ns, nslopes, sequential, out } => {
            sweep(cli, st, space, solver, (*ns, *nslopes), *sequential, out.as_deref())
        }
        Command::Phase { n, solver, x0, psi0, out } => phase(cli, st, *n, solver, (*x0, *psi0), out.as_deref()),
        Command::Flowcheck { space, solver, from, to, intervals, horizon, refine, out } => {
            flowcheck(cli, st, space, solver, FlowArgs { from: *from, to: *to, intervals: *intervals, horizon: *horizon, refine: *refine }, out.as_deref())
        }
        Command::Hermann { .. } => hermann_cmd(cli, st),
    }
}

fn space_from(st: &mut Settings, a: &SpaceArgs) -> Result<RankOneSpace> {
    let kind = SpaceKind::parse(&st.get("kind", a.kind.clone(), "cp".to_string())?)?;
    let n = st.get("n", a.n, 2)?;
    let scale = if kind == SpaceKind::CayleyPlane { st.get("a", a.a, 1.0)? } else { 1.0 };
    let variant = if kind == SpaceKind::CayleyPlane {
        CoefficientVariant::parse(&st.get("coefficients", a.coefficients.clone(), "tabulated".to_string())?)?
    } else {
        CoefficientVariant::Tabulated
    };
    RankOneSpace::new(kind, n, scale, variant)
}

fn translator_config(st: &mut Settings, a: &SolverArgs) -> Result<TranslatorConfig> {
    let mut cfg = TranslatorConfig::default();
    let i = &mut cfg.integrator;
    i.rtol = st.get("rtol", a.rtol, i.rtol)?;
    i.atol = st.get("atol", a.atol, i.atol)?;
    i.max_steps = st.get("max-steps", a.max_steps, i.max_steps)?;
    i.y_max = st.get("y-max", a.y_max, i.y_max)?;
    i.validate()?;
    Ok(cfg)
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| LabError::Config(format!("missing required value '{key}' (flag or config)")))
}

fn manifest_path(cli: &Cli, out: Option<&Path>) -> Option<PathBuf> {
    cli.manifest.clone().or_else(|| {
        out.map(|o| {
            let mut name = o.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
            name.push(".manifest.toml");
            o.with_file_name(name)
        })
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| LabError::Config(format!("cannot write {}: {e}", path.display())))
}

fn finish(cli: &Cli, st: &Settings, mut m: Manifest, out: Option<&Path>) -> Result<()> {
    m.config(st.resolved());
    if let Some(path) = manifest_path(cli, out) {
        m.write(&path)?;
        println!("manifest: {}", path.display());
    }
    Ok(())
}

fn trace_csv(sol: &MaximalSolution) -> String {
    let mut out = String::from("s,V,dV\n");
    for [s, v, dv] in sol.rows() {
        let _ = writeln!(out, "{s},{v},{dv}");
    }
    out
}

#[derive(Serialize)]
struct Classification {
    translator_type: String,
    left: String,
    right: String,
}

fn classification_of(sol: &MaximalSolution) -> Classification {
    let translator_type = match rank1::classify(sol) {
        Ok(t) => t.label.to_string(),
        Err(_) => "unclassified".to_string(),
    };
    Classification { translator_type, left: format!("{:?}", sol.left), right: format!("{:?}", sol.right) }
}

fn record_solution(m: &mut Manifest, space: &RankOneSpace, sol: &MaximalSolution) -> Result<Classification> {
    m.section("parameters", space)?;
    m.push("events", sol.left_event())?;
    m.push("events", sol.right_event())?;
    let class = classification_of(sol);
    m.section("classification", &class)?;
    let residual = rank1::residual_check(space, sol);
    m.section("results", &BTreeMap::from([("max_relative_residual", residual), ("steps", sol.rows().len() as f64)]))?;
    m.diagnostics(&space.diagnostics())?;
    println!("space: {space}");
    println!("left: {:?} at s = {}", sol.left_event().tag, sol.left_event().location);
    println!("right: {:?} at s = {}", sol.right_event().tag, sol.right_event().location);
    println!("type: {}", class.translator_type);
    println!("max relative residual: {residual:e}");
    Ok(class)
}

fn spaces(cli: &Cli, st: &mut Settings, a: &SpaceArgs) -> Result<()> {
    let space = space_from(st, a)?;
    let b = space.boundary;
    println!("space: {space}");
    println!("lambda: {}  m_lambda: {}  m_2lambda: {}  dim: {}", space.lambda, space.m_lambda, space.m_2lambda, space.dim);
    println!("alpha (table): {}", b.alpha_formula);
    println!("alpha (numeric): {}", b.alpha_numeric);
    println!("zero of h: {}", b.h_zero);
    println!("residue at origin: {}", b.residue_origin);
    println!("residue at focal orbit: {}", b.residue_focal);
    let diags = space.diagnostics();
    for d in &diags {
        println!("diagnostic {}: {}", d.code, d.message);
    }
    let mut m = Manifest::new("spaces");
    m.section("parameters", &space)?;
    m.diagnostics(&diags)?;
    finish(cli, st, m, None)
}

type Ic = (Option<f64>, Option<f64>, Option<f64>);

fn read_ic(st: &mut Settings, ic: Ic) -> Result<(f64, f64, f64)> {
    let s0 = require(st.get_opt("s0", ic.0)?, "s0")?;
    Ok((s0, st.get("v0", ic.1, 0.0)?, st.get("dv0", ic.2, 0.0)?))
}

fn solve(cli: &Cli, st: &mut Settings, a: &SpaceArgs, s: &SolverArgs, ic: Ic, out: Option<&Path>) -> Result<()> {
    let space = space_from(st, a)?;
    let cfg = translator_config(st, s)?;
    let (s0, v0, dv0) = read_ic(st, ic)?;
    let sol = rank1::solve_maximal(&space, s0, v0, dv0, &cfg)?;
    let mut m = Manifest::new("solve");
    record_solution(&mut m, &space, &sol)?;
    if let Some(path) = out {
        write_file(path, &trace_csv(&sol))?;
    }
    finish(cli, st, m, out)?;
    // outputs are kept for inspection, but an unclassifiable trace is a failed run
    rank1::classify(&sol).map(|_| ())
}

fn classify(cli: &Cli, st: &mut Settings, a: &SpaceArgs, s: &SolverArgs, ic: Ic) -> Result<()> {
    let space = space_from(st, a)?;
    let cfg = translator_config(st, s)?;
    let (s0, v0, dv0) = read_ic(st, ic)?;
    let sol = rank1::solve_maximal(&space, s0, v0, dv0, &cfg)?;
    let mut m = Manifest::new("classify");
    record_solution(&mut m, &space, &sol)?;
    rank1::classify(&sol)?;
    finish(cli, st, m, None)
}

fn shoot(cli: &Cli, st: &mut Settings, a: &SpaceArgs, s: &SolverArgs, end: Option<String>, out: Option<&Path>) -> Result<()> {
    let space = space_from(st, a)?;
    let mut cfg = translator_config(st, s)?;
    cfg.shoot_offset = st.get("shoot-offset", None, cfg.shoot_offset)?;
    let end = match st.get("end", end, "origin".to_string())?.as_str() {
        "origin" => RegularEnd::Origin,
        "focal" => RegularEnd::Focal,
        other => return Err(LabError::Config(format!("end must be origin or focal, got '{other}'"))),
    };
    let sol = rank1::shoot_regular(&space, end, &cfg)?;
    let mut m = Manifest::new("shoot");
    record_solution(&mut m, &space, &sol)?;
    let slope = rank1::asymptotic_slope(&sol, end)?;
    let residue = match end {
        RegularEnd::Origin => space.boundary.residue_origin,
        RegularEnd::Focal => space.boundary.residue_focal,
    };
    println!("asymptotic slope: {slope} (law {})", 1.0 / (1.0 + residue));
    m.section("asymptotics", &BTreeMap::from([("fitted_slope", slope), ("law", 1.0 / (1.0 + residue))]))?;
    if let Some(path) = out {
        write_file(path, &trace_csv(&sol))?;
    }
    finish(cli, st, m, out)
}

fn sweep(
    cli: &Cli,
    st: &mut Settings,
    a: &SpaceArgs,
    s: &SolverArgs,
    grid: (Option<usize>, Option<usize>),
    sequential: Option<bool>,
    out: Option<&Path>,
) -> Result<()> {
    let space = space_from(st, a)?;
    let cfg = translator_config(st, s)?;
    let ns = st.get("ns", grid.0, 41)?;
    let nslopes = st.get("nslopes", grid.1, 41)?;
    let exec = if st.get("sequential", sequential, false)? { Execution::Sequential } else { Execution::Parallel };
    let (sg, pg) = rank1::standard_grids(&space, ns, nslopes);
    let report = rank1::sweep(&space, &sg, &pg, &cfg, exec, true)?;
    let mut m = Manifest::new("sweep");
    m.section("parameters", &space)?;
    let counts: BTreeMap<String, usize> = report.counts.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    m.section("classification", &counts)?;
    for e in &report.shooting {
        m.push("shooting", e)?;
    }
    m.diagnostics(&space.diagnostics())?;
    println!("space: {space}");
    for (t, c) in &counts {
        println!("{t}: {c}");
    }
    if let Some(path) = out {
        let mut body = String::from("s0,dV0,left,left_location,right,right_location,type\n");
        for e in report.entries.iter().chain(&report.shooting) {
            let _ = writeln!(
                body,
                "{},{},{:?},{},{:?},{},{}",
                e.s0,
                e.dv0,
                e.translator_type.left,
                e.left_event.location,
                e.translator_type.right,
                e.right_event.location,
                e.translator_type.label
            );
        }
        write_file(path, &body)?;
    }
    finish(cli, st, m, out)
}

fn phase(cli: &Cli, st: &mut Settings, n: Option<u32>, s: &SolverArgs, ic: (Option<f64>, Option<f64>), out: Option<&Path>) -> Result<()> {
    let n = st.get("n", n, 2)?;
    let space = RankOneSpace::complex_projective(n)?;
    let cfg = translator_config(st, s)?;
    let x0 = st.get("x0", ic.0, 1.0)?;
    let psi0 = st.get("psi0", ic.1, 0.0)?;
    let trace = rank1::solve_psi(n, x0, psi0, &cfg)?;
    let bound_applies = x0 < rank1::x_star(n) && rank1::eta(n, x0).is_ok_and(|e| psi0 > e);
    let mut body = String::from("x,psi,eta,h1_bound\n");
    for smp in trace.samples() {
        let x = smp.t;
        let eta = rank1::eta(n, x).map(|e| e.to_string()).unwrap_or_default();
        let bound = if bound_applies && x <= x0 {
            match rank1::h1_bound(n, x, x0, psi0)? {
                BoundValue::Finite(v) => v.to_string(),
                BoundValue::Exceeded => "inf".to_string(),
            }
        } else {
            String::new()
        };
        let _ = writeln!(body, "{x},{},{eta},{bound}", smp.y[0]);
    }
    let c = 2.0 * (n as f64 + 1.0).sqrt();
    let consistency = rank1::psi_v_consistency(&space, c * x0.atan(), psi0, &cfg)?;
    let mut m = Manifest::new("phase");
    m.section("parameters", &space)?;
    m.push("events", trace.left_event.as_ref().expect("maximal trace"))?;
    m.push("events", trace.right_event.as_ref().expect("maximal trace"))?;
    m.section("consistency", &consistency)?;
    println!("left: {:?} at x = {}", trace.left_event.as_ref().unwrap().tag, trace.left_event.as_ref().unwrap().location);
    println!("right: {:?} at x = {}", trace.right_event.as_ref().unwrap().tag, trace.right_event.as_ref().unwrap().location);
    println!("psi/V deviation: {:e} over {} points", consistency.max_deviation, consistency.compared_points);
    if let Some(path) = out {
        write_file(path, &body)?;
    }
    finish(cli, st, m, out)
}

pub struct FlowArgs {
    from: Option<f64>,
    to: Option<f64>,
    intervals: Option<usize>,
    horizon: Option<f64>,
    refine: Option<bool>,
}

fn flowcheck(cli: &Cli, st: &mut Settings, a: &SpaceArgs, s: &SolverArgs, f: FlowArgs, out: Option<&Path>) -> Result<()> {
    let space = space_from(st, a)?;
    let cfg = translator_config(st, s)?;
    let from = st.get("from", f.from, 0.1)?;
    let to = st.get("to", f.to, 0.6)?;
    let n = st.get("intervals", f.intervals, 100)?;
    let horizon = st.get("horizon", f.horizon, 0.5)?;
    let refine = st.get("refine", f.refine, false)?;
    let sol = rank1::shoot_regular(&space, RegularEnd::Origin, &cfg)?;
    let alpha = space.alpha();
    let grid = Grid::new(from * alpha, to * alpha, n)?;
    let fcfg = flow::flow_config();
    let report = flow::translator_drift(&space, &sol, &grid, horizon, 0.0, &fcfg)?;
    let mut m = Manifest::new("flowcheck");
    m.section("parameters", &space)?;
    m.section("classification", &classification_of(&sol))?;
    let mut results = BTreeMap::from([("sup_deviation", report.sup_deviation), ("spacing", grid.spacing())]);
    println!("space: {space}");
    println!("interval: [{}, {}]", grid.a, grid.b);
    println!("sup deviation: {:e}", report.sup_deviation);
    if refine {
        let study = flow::refinement_study(&space, &sol, (grid.a, grid.b), &[n / 2, n, 2 * n], horizon, &fcfg)?;
        let order = study.orders.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("observed order: {order}");
        results.insert("observed_order", order);
        m.section("refinement", &study)?;
    }
    m.section("results", &results)?;
    if let Some(path) = out {
        write_file(path, &report.csv())?;
    }
    finish(cli, st, m, out)
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    name: String,
    roots: &'a [Root],
    pole_guard: f64,
    table_nodes: Option<usize>,
}

fn parse_point(text: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = parse_list("x0", text)?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(LabError::Config(format!("x0 needs two coordinates, got '{text}'"))),
    }
}

fn hermann_cmd(cli: &Cli, st: &mut Settings) -> Result<()> {
    let Command::Hermann { layout, multiplicities, scales, table, variant, x0, f0, v0, t_end, fan, depth, rtol, sequential, out } =
        &cli.command
    else {
        unreachable!("dispatched on the hermann subcommand")
    };
    let out = out.as_deref();
    let layout = Layout::parse(&st.get("layout", layout.clone(), "A1xA1".to_string())?)?;
    let mults: Option<Vec<u32>> =
        st.get_opt::<String>("multiplicities", multiplicities.clone())?.map(|t| parse_list("multiplicities", &t)).transpose()?;
    let scales: Option<Vec<f64>> = st.get_opt::<String>("scales", scales.clone())?.map(|t| parse_list("scales", &t)).transpose()?;
    let base = Rank2Model::from_layout(layout, mults.as_deref(), scales.as_deref())?;
    let table = st.get_opt("table", *table)?;
    let model = match table {
        Some(nodes) => base.tabulated(nodes, nodes)?,
        None => base.clone(),
    };
    let variant_choice = st.get("variant", variant.clone(), "auto".to_string())?;
    let f0 = st.get("f0", *f0, 0.0)?;
    let v0 = st.get("v0", *v0, 0.0)?;
    let t_end = st.get("t-end", *t_end, 0.5)?;
    let n_fan = st.get("fan", *fan, 0)?;
    let depth = st.get("depth", *depth, 1.0)?;
    let mut cfg = hermann::curve_config();
    cfg.rtol = st.get("rtol", *rtol, cfg.rtol)?;
    cfg.atol = cfg.atol.min(1e-2 * cfg.rtol);
    let exec = if st.get("sequential", *sequential, false)? { Execution::Sequential } else { Execution::Parallel };

    let x_hat = base.find_stationary()?;
    let start = match st.get_opt::<String>("x0", x0.clone())? {
        Some(t) => parse_point(&t)?,
        None => hermann::level_seeds(&base, x_hat, depth, 1)?[0],
    };
    let f_star = hermann::stationary_f(&model, x_hat).or_else(|_| hermann::stationary_f(&base, x_hat))?;

    let mut m = Manifest::new("hermann");
    m.section(
        "parameters",
        &ModelSummary { name: model.name(), roots: &model.roots, pole_guard: model.pole_guard, table_nodes: table },
    )?;
    m.section("equilibrium", &BTreeMap::from([("x1", x_hat[0]), ("x2", x_hat[1]), ("stationary_f", f_star)]))?;
    println!("model: {}", model.name());
    println!("equilibrium: ({}, {})  stationary F: {f_star}", x_hat[0], x_hat[1]);

    let selection = hermann::select_variant(&model, start, (0.0, t_end), f0, &cfg)?;
    m.section("variant_selection", &selection)?;
    println!(
        "round trip residual: cubic {:e}, quadratic {:e}",
        selection.cubic.max_pde_residual, selection.quadratic.max_pde_residual
    );
    let variant = match variant_choice.as_str() {
        "auto" => selection
            .selected
            .ok_or_else(|| LabError::Numerical("neither exponent variant closes the round trip".into()))?,
        other => FVariant::parse(other)?,
    };
    println!("variant: {variant}");
    if let Some(d) = base.convexity_diagnostic(20)? {
        println!("diagnostic {}: {}", d.code, d.message);
        m.diagnostics(&[d])?;
    }

    let curves = if n_fan > 0 {
        let seeds = hermann::level_seeds(&base, x_hat, depth, n_fan)?;
        exec::map(&seeds, exec, |&x| hermann::solve_f_and_v_from(&model, x, (0.0, t_end), f0, v0, variant, &cfg))
            .into_iter()
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![hermann::solve_f_and_v_from(&model, start, (0.0, t_end), f0, v0, variant, &cfg)?]
    };
    for (k, c) in curves.iter().enumerate() {
        let rt = hermann::round_trip(&model, c)?;
        m.push("round_trips", &rt)?;
        m.push("events", c.end_event())?;
        if let Some(path) = out {
            let target = if curves.len() == 1 {
                path.to_path_buf()
            } else {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                path.with_file_name(format!("{stem}_{k}.csv"))
            };
            write_file(&target, &c.csv())?;
        }
    }
    m.section("classification", &BTreeMap::from([("variant", variant.to_string())]))?;
    finish(cli, st, m, out)
}
