use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use trace_lab::analysis::{average_series, dyadic_radii, hardy_functional, trace_verdict};
use trace_lab::capacity::{estimate_capacity, segment_cloud, CapacityProblem};
use trace_lab::experiments::{
    sweep_verdict, verify_example1, verify_example2, verify_sliced_rectangle, Example1Config,
    Example2Config, ExperimentReport, FunctionSpec, SliceConfig, SweepVerdict, Table,
};
use trace_lab::geometry::{
    build_fractal_domain, fractal_dirichlet_part, BoundarySet, FractalParams, Point, Rect,
    RectDomain, Segment,
};
use trace_lab::grid::{CellMask, GridFunction, GridSpec};
use trace_lab::membership::{membership_sweep, MembershipProblem};
use trace_lab::quadrature::{set_default_cell_budget, PlaneFunction, QuadOptions};

const BUDGET_VAR: &str = "TRACE_LAB_CELL_BUDGET";

#[derive(Parser)]
#[command(
    name = "trace-lab",
    version,
    about = "Interior-trace, capacity, Hardy and membership experiments on rectilinear domains"
)]
struct Cli {
    /// JSON configuration for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the main tolerance of the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a truncated fractal domain as a JSON domain file.
    Fractal {
        #[arg(long, value_enum)]
        example: Option<Example>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Ball averages of |u| at one point over a radius ladder.
    Trace {
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Point as `x1,x2`.
        #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Function as inline JSON, e.g. '{"kind":"constant","value":1}'.
        #[arg(long)]
        function: Option<String>,
    },
    /// The Hardy integral of u against the distance to D.
    Hardy {
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        function: Option<String>,
    },
    /// Bessel capacity of a finite point set.
    Capacity {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Distance from u to the test space over a sweep of deltas.
    Membership {
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        function: Option<String>,
    },
    /// Run a canned reproduction.
    Reproduce {
        #[arg(value_enum)]
        which: Which,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Example {
    Ex1,
    Ex2,
}

#[derive(Copy, Clone, ValueEnum)]
enum Which {
    Ex1,
    Ex2,
    Slice,
}

/// Domain file: open rectangles plus the closed boundary part `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DomainFile {
    rects: Vec<Rect>,
    #[serde(default, rename = "D")]
    dirichlet: Vec<Segment>,
}

impl DomainFile {
    fn load(path: &Path) -> anyhow::Result<(RectDomain, BoundarySet)> {
        let f: DomainFile = read_json(path)?;
        let dom = RectDomain::new(f.rects).with_context(|| format!("{}", path.display()))?;
        let d = BoundarySet::from_segments(&f.dirichlet)
            .with_context(|| format!("{}", path.display()))?;
        Ok((dom, d))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FractalConfig {
    example: Example,
    p: f64,
    depth: u32,
}

impl Default for FractalConfig {
    fn default() -> Self {
        FractalConfig {
            example: Example::Ex1,
            p: 2.0,
            depth: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TraceConfig {
    domain: Option<PathBuf>,
    function: FunctionSpec,
    x: Point,
    radii: Vec<f64>,
    tol: f64,
    /// Relative instead of absolute quadrature tolerance.
    relative: bool,
    slope_min: f64,
    /// Adds a clause requiring every average to be at least this.
    floor: Option<f64>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            domain: None,
            function: FunctionSpec::Constant { value: 1.0 },
            x: [0.5, 0.0],
            radii: dyadic_radii(3, 8),
            tol: 1e-3,
            relative: false,
            slope_min: 0.9,
            floor: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HardyConfig {
    domain: Option<PathBuf>,
    function: FunctionSpec,
    p: f64,
    /// Relative tolerance.
    tol: f64,
    /// Lipschitz constant of `u` when it vanishes on `D`.
    vanishing_lipschitz: Option<f64>,
    /// Declare divergence once the certified lower bound passes this.
    ceiling: Option<f64>,
}

impl Default for HardyConfig {
    fn default() -> Self {
        HardyConfig {
            domain: None,
            function: FunctionSpec::Constant { value: 1.0 },
            p: 2.0,
            tol: 1e-4,
            vanishing_lipschitz: None,
            ceiling: Some(1e12),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CapacityConfig {
    points: Vec<Point>,
    p: f64,
    h: f64,
    margin: f64,
    tol: f64,
    max_iter: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        let d = CapacityProblem::new(segment_cloud(33), 2.0, 1.0 / 16.0);
        CapacityConfig {
            points: d.points,
            p: d.p,
            h: d.h,
            margin: d.margin,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MembershipConfig {
    domain: Option<PathBuf>,
    function: FunctionSpec,
    p: f64,
    h: f64,
    deltas: Vec<f64>,
    tol: f64,
    max_iter: usize,
    /// Adds a clause requiring this verdict.
    expect: Option<SweepVerdict>,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            domain: None,
            function: FunctionSpec::Constant { value: 1.0 },
            p: 2.0,
            h: 1.0 / 64.0,
            deltas: dyadic_radii(2, 4),
            tol: 1e-6,
            max_iter: 100,
            expect: None,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> anyhow::Result<T> {
    path.as_deref().map_or_else(|| Ok(T::default()), read_json)
}

fn parse_function(s: &str) -> anyhow::Result<FunctionSpec> {
    serde_json::from_str(s).context("parsing --function")
}

/// The domain file if given, otherwise the Example 1 domain of depth 4.
fn domain_or_default(path: &Option<PathBuf>) -> anyhow::Result<(RectDomain, BoundarySet)> {
    match path {
        Some(p) => DomainFile::load(p),
        None => Ok((
            build_fractal_domain(&FractalParams::example1(2.0, 4)?)?,
            fractal_dirichlet_part(),
        )),
    }
}

fn positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(())
}

fn cmd_fractal(
    cli: &Cli,
    example: Option<Example>,
    p: Option<f64>,
    depth: Option<u32>,
) -> anyhow::Result<ExperimentReport> {
    let mut cfg: FractalConfig = load_config(&cli.config)?;
    cfg.example = example.unwrap_or(cfg.example);
    cfg.p = p.unwrap_or(cfg.p);
    cfg.depth = depth.unwrap_or(cfg.depth);
    let params = match cfg.example {
        Example::Ex1 => FractalParams::example1(cfg.p, cfg.depth)?,
        Example::Ex2 => FractalParams::example2(cfg.p, cfg.depth)?,
    };
    let dom = build_fractal_domain(&params)?;
    let file = DomainFile {
        rects: dom.rects().to_vec(),
        dirichlet: fractal_dirichlet_part().to_segments(),
    };
    std::fs::create_dir_all(&cli.out)?;
    let path = cli.out.join("domain.json");
    std::fs::write(&path, serde_json::to_string_pretty(&file)?)?;
    let mut rep = ExperimentReport::new("fractal", &cfg)?;
    rep.scalar("rects", file.rects.len() as f64, 0.0);
    Ok(rep)
}

fn cmd_trace(
    cli: &Cli,
    domain: Option<PathBuf>,
    x: Option<Vec<f64>>,
    function: Option<String>,
) -> anyhow::Result<ExperimentReport> {
    let mut cfg: TraceConfig = load_config(&cli.config)?;
    cfg.domain = domain.or(cfg.domain);
    if let Some(x) = x {
        cfg.x = [x[0], x[1]];
    }
    if let Some(f) = function {
        cfg.function = parse_function(&f)?;
    }
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    positive("tol", cfg.tol)?;
    let (dom, _) = domain_or_default(&cfg.domain)?;
    let opts = if cfg.relative {
        QuadOptions::relative(cfg.tol)
    } else {
        QuadOptions::absolute(cfg.tol)
    };
    let series = average_series(&dom, &cfg.function, cfg.x, &cfg.radii, &opts)?;
    let mut rep = ExperimentReport::new("trace", &cfg)?;
    let smallest = series.values().into_iter().fold(f64::INFINITY, f64::min);
    rep.scalar("smallest_average", smallest, cfg.tol);
    if series.entries.len() >= 4 {
        let v = trace_verdict(&series, cfg.tol, cfg.slope_min)?;
        rep.scalar("slope", v.slope, 0.0);
        std::fs::create_dir_all(&cli.out)?;
        std::fs::write(
            cli.out.join("trace_verdict.json"),
            serde_json::to_string_pretty(&v)?,
        )?;
    }
    if let Some(floor) = cfg.floor {
        rep.clause(
            "floor",
            smallest >= floor - cfg.tol,
            format!("smallest average {smallest} vs floor {floor}"),
        );
    }
    let mut t = Table::new("averages", &["r", "value", "err"]);
    t.rows = series
        .entries
        .iter()
        .map(|e| vec![e.r, e.value, e.err])
        .collect();
    rep.series.push(t);
    Ok(rep)
}

fn cmd_hardy(
    cli: &Cli,
    domain: Option<PathBuf>,
    p: Option<f64>,
    function: Option<String>,
) -> anyhow::Result<ExperimentReport> {
    let mut cfg: HardyConfig = load_config(&cli.config)?;
    cfg.domain = domain.or(cfg.domain);
    cfg.p = p.unwrap_or(cfg.p);
    if let Some(f) = function {
        cfg.function = parse_function(&f)?;
    }
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    positive("tol", cfg.tol)?;
    let (dom, d) = domain_or_default(&cfg.domain)?;
    let mut opts = QuadOptions::relative(cfg.tol);
    if let Some(c) = cfg.ceiling {
        opts = opts.with_ceiling(c);
    }
    let mut rep = ExperimentReport::new("hardy", &cfg)?;
    match hardy_functional(
        &dom,
        &d,
        &cfg.function,
        cfg.p,
        cfg.vanishing_lipschitz,
        &opts,
    ) {
        Ok(i) => {
            rep.scalar("hardy_integral", i.value, i.err);
            rep.clause("finite", true, format!("{} ± {}", i.value, i.err));
        }
        Err(e @ trace_lab::Error::Diverging { .. }) => rep.failed("finite", &e),
        Err(e) => return Err(e.into()),
    }
    Ok(rep)
}

fn cmd_capacity(cli: &Cli, p: Option<f64>, h: Option<f64>) -> anyhow::Result<ExperimentReport> {
    let mut cfg: CapacityConfig = load_config(&cli.config)?;
    cfg.p = p.unwrap_or(cfg.p);
    cfg.h = h.unwrap_or(cfg.h);
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    let mut prob = CapacityProblem::new(cfg.points.clone(), cfg.p, cfg.h);
    prob.margin = cfg.margin;
    prob.tol = cfg.tol;
    prob.max_iter = cfg.max_iter;
    let est = estimate_capacity(&prob)?;
    let mut rep = ExperimentReport::new("capacity", &cfg)?;
    rep.scalar("capacity", est.value, cfg.tol);
    rep.scalar("lower_bound", est.lower_bound, 0.0);
    rep.scalar("residual", est.residual, 0.0);
    rep.scalar("iterations", est.iterations as f64, 0.0);
    let gap = (est.value - est.lower_bound) / est.value;
    rep.clause(
        "duality_gap",
        gap <= cfg.tol,
        format!("relative gap {gap:.3e}"),
    );
    Ok(rep)
}

fn cmd_membership(
    cli: &Cli,
    domain: Option<PathBuf>,
    p: Option<f64>,
    h: Option<f64>,
    function: Option<String>,
) -> anyhow::Result<ExperimentReport> {
    let mut cfg: MembershipConfig = load_config(&cli.config)?;
    cfg.domain = domain.or(cfg.domain);
    cfg.p = p.unwrap_or(cfg.p);
    cfg.h = h.unwrap_or(cfg.h);
    if let Some(f) = function {
        cfg.function = parse_function(&f)?;
    }
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    if cfg.deltas.is_empty() {
        bail!("deltas must be nonempty");
    }
    let (dom, d) = domain_or_default(&cfg.domain)?;
    let spec = GridSpec::covering(&dom.bbox(), cfg.h, 0)?;
    let mask = Arc::new(CellMask::from_domain(&dom, spec));
    let u = GridFunction::from_fn(mask, |y| cfg.function.eval(y))?;
    let mut prob = MembershipProblem::new(dom, d, u, cfg.p, cfg.deltas[0]);
    prob.tol = cfg.tol;
    prob.max_iter = cfg.max_iter;
    let sweep = membership_sweep(&prob, &cfg.deltas)?;
    let verdict = sweep_verdict(&sweep, 0.2, 0.5);
    let mut rep = ExperimentReport::new("membership", &cfg)?;
    let (first, last) = (sweep[0].distance, sweep[sweep.len() - 1].distance);
    rep.scalar("final_distance", last, cfg.tol);
    rep.scalar("ratio", if first > 0.0 { last / first } else { 0.0 }, 0.0);
    if let Some(want) = cfg.expect {
        rep.clause(
            "expected_verdict",
            verdict == want,
            format!("verdict {verdict:?}, expected {want:?}"),
        );
    }
    let mut t = Table::new(
        "sweep",
        &["delta", "distance", "energy", "converged", "iterations"],
    );
    t.rows = sweep
        .iter()
        .map(|r| {
            vec![
                r.delta,
                r.distance,
                r.energy,
                r.converged as u8 as f64,
                r.iterations as f64,
            ]
        })
        .collect();
    rep.series.push(t);
    Ok(rep)
}

fn cmd_reproduce(cli: &Cli, which: Which) -> anyhow::Result<ExperimentReport> {
    Ok(match which {
        Which::Ex1 => {
            let mut cfg: Example1Config = load_config(&cli.config)?;
            cfg.tol = cli.tol.unwrap_or(cfg.tol);
            verify_example1(&cfg)?
        }
        Which::Ex2 => {
            let mut cfg: Example2Config = load_config(&cli.config)?;
            cfg.tol = cli.tol.unwrap_or(cfg.tol);
            verify_example2(&cfg)?
        }
        Which::Slice => {
            let mut cfg: SliceConfig = load_config(&cli.config)?;
            cfg.tol = cli.tol.unwrap_or(cfg.tol);
            verify_sliced_rectangle(&cfg)?
        }
    })
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Ok(v) = std::env::var(BUDGET_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{BUDGET_VAR}={v} is not a cell count"))?;
        set_default_cell_budget(n);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let rep = match &cli.cmd {
        Cmd::Fractal { example, p, depth } => cmd_fractal(cli, *example, *p, *depth)?,
        Cmd::Trace {
            domain,
            x,
            function,
        } => cmd_trace(cli, domain.clone(), x.clone(), function.clone())?,
        Cmd::Hardy {
            domain,
            p,
            function,
        } => cmd_hardy(cli, domain.clone(), *p, function.clone())?,
        Cmd::Capacity { p, h } => cmd_capacity(cli, *p, *h)?,
        Cmd::Membership {
            domain,
            p,
            h,
            function,
        } => cmd_membership(cli, domain.clone(), *p, *h, function.clone())?,
        Cmd::Reproduce { which } => cmd_reproduce(cli, *which)?,
    };
    let files = rep.save(&cli.out)?;
    for c in &rep.clauses {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
