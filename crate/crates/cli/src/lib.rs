//! `swe-ldp`: skeleton solves, inversion, rate functions and Monte Carlo
//! slopes from the command line.

pub mod files;
pub mod manifest;
pub mod parallel;
pub mod table;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swe_ldp_core::control::{BallSampler, Control};
use swe_ldp_core::green::{check_green_bounds, identity_errors, GreenSeries};
use swe_ldp_core::grid::Grid;
use swe_ldp_core::inverse::invert_upsilon_n;
use swe_ldp_core::mc::{default_mc_grid, Event};
use swe_ldp_core::problem::{validate_problem, Preset, ProblemSpec, DEFAULT_SIGMA_FLOOR};
use swe_ldp_core::rate::{OptimizerOptions, RateResult, StudyTable, HOLDER_PAIRS};
use swe_ldp_core::path::holder_half_ratio;
use swe_ldp_core::skeleton::upsilon_n;

use manifest::StudyManifest;
use table::{Cell, Table};

/// Half-width of the range on which `b` and `σ` are sampled before a run.
pub const VALIDATION_RANGE: f64 = 10.0;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments; exit 2.
    Usage(String),
    /// Invalid problem, infeasible request, numerical failure or IO; exit 1.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "swe-ldp", version, about = "Rate functions of a stochastic wave equation and its finite-difference discretization")]
pub struct Cli {
    /// Worker threads (default: $SWE_LDP_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// LINEAR, NONLIN-A or NONLIN-B.
    #[arg(long, default_value = "LINEAR", conflicts_with = "problem")]
    pub preset: String,
    /// `key = value` problem file.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

impl ProblemArgs {
    pub fn load(&self) -> Result<ProblemSpec, CliError> {
        match &self.problem {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                ProblemSpec::from_config(&text).map_err(|e| domain(format!("{}: {e}", p.display())))
            }
            None => Preset::from_name(&self.preset)
                .map(ProblemSpec::preset)
                .ok_or_else(|| CliError::Usage(format!("unknown preset {:?}", self.preset))),
        }
    }

    /// Loads and checks boundary compatibility and `|σ| ≥ floor` on the sampled range.
    pub fn load_checked(&self) -> Result<ProblemSpec, CliError> {
        let spec = self.load()?;
        let report = validate_problem(&spec, VALIDATION_RANGE, 20_001, DEFAULT_SIGMA_FLOOR);
        if !report.passed() {
            return Err(CliError::Domain(format!(
                "problem fails validation: boundary_ok={}, min |sigma| = {:e} (floor {:e}), {} evaluation failures",
                report.boundary_ok,
                report.sigma_min_abs,
                report.sigma_floor,
                report.eval_failures.len()
            )));
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SideArg {
    Ge,
    Le,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sampled bounds on the continuous and discrete Green functions.
    CheckGreen {
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        jmax: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the skeleton system for a control file (zero control if omitted).
    Skeleton {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        control: Option<PathBuf>,
        /// Draw a random control of this L² norm instead of reading one.
        #[arg(long, conflicts_with = "control")]
        random_radius: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the control from a path CSV written by `skeleton`.
    Invert {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete rate function Iⁿ(y).
    Rate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        multistart: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iⁿ(y) over a grid of y and n against a fine reference level.
    Converge {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        ys: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        nref: usize,
        #[arg(long, default_value_t = 0)]
        multistart: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crude Monte Carlo estimates of P(u(T, x0) ≥ y) or P(u(T, x0) ≤ y).
    Mc {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        mmc: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, value_enum, default_value = "ge")]
        side: SideArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact identities and a small inversion round trip.
    Selftest,
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("usage error: {m}\n\n{}", synopsis()),
                CliError::Domain(m) => eprintln!("error: {m}"),
            }
            e.code()
        }
    }
}

fn synopsis() -> &'static str {
    "swe-ldp [--threads N] <check-green|skeleton|invert|rate|converge|mc|selftest> [options]"
}

fn grid_for(n: usize, m: Option<usize>, horizon: f64) -> Result<Grid, CliError> {
    match m {
        Some(m) => Grid::new(n, m, horizon),
        None => Grid::with_default_steps(n, horizon),
    }
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(table: &Table, out: Option<&Path>, manifest: Option<StudyManifest>, start: Instant) -> Result<(), CliError> {
    let bytes = table::write_table(table, out).map_err(domain)?;
    if let (Some(out), Some(mut m)) = (out, manifest) {
        m.add_output(out, &bytes);
        m.seconds = start.elapsed().as_secs_f64();
        m.write(out).map_err(domain)?;
    }
    Ok(())
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub const RATE_COLUMNS: [&str; 8] = [
    "y",
    "n",
    "m",
    "value",
    "constraint_residual_prefix_modification",
    "iterations",
    "feasibility_method",
    "holder_seminorm",
];

pub fn rate_row(r: &RateResult) -> Vec<Cell> {
    vec![
        r.y.into(),
        r.n.into(),
        r.m.into(),
        r.value.into(),
        r.residual_before.into(),
        r.iterations.into(),
        r.feasibility.tag().into(),
        holder_half_ratio(&r.f_star, HOLDER_PAIRS, 17).into(),
    ]
}

pub fn study_table(s: &StudyTable) -> Table {
    let mut t = Table::new(&RATE_COLUMNS);
    for r in &s.rows {
        t.push(vec![
            r.y.into(),
            r.n.into(),
            r.m.into(),
            r.value.into(),
            r.residual_before.into(),
            r.iterations.into(),
            r.feasibility.tag().into(),
            r.holder_seminorm.into(),
        ]);
    }
    t
}

pub const MC_COLUMNS: [&str; 7] = ["eps", "samples", "hits", "phat", "lo", "hi", "eps_log"];

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let threads = cli.threads.unwrap_or_else(parallel::default_threads);
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let pool = parallel::pool(Some(threads));
    match cli.command {
        Command::CheckGreen {
            ns,
            samples,
            jmax,
            horizon,
            seed,
            out,
        } => {
            if samples < 100 || ns.iter().any(|&n| n < 2) || !(horizon > 0.0) || jmax == 0 {
                return Err(CliError::Usage("need samples >= 100, n >= 2, horizon > 0, jmax >= 1".into()));
            }
            let report = check_green_bounds(GreenSeries::new(jmax), &ns, horizon, samples, seed);
            let mut t = Table::new(&["bound_name", "n", "estimate", "samples"]);
            for e in &report.entries {
                t.push(vec![e.name.clone().into(), e.n.into(), e.estimate.into(), e.samples.into()]);
            }
            let m = StudyManifest::new(
                "check-green",
                vec![kv("ns", format!("{ns:?}")), kv("samples", samples), kv("jmax", jmax), kv("seed", seed)],
                threads,
            );
            emit(&t, out.as_deref(), Some(m), start)
        }
        Command::Skeleton {
            problem,
            n,
            m,
            control,
            random_radius,
            seed,
            out,
        } => {
            let spec = problem.load()?;
            let h = match (control, random_radius) {
                (Some(p), _) => {
                    let h = files::read_control(&p).map_err(CliError::Usage)?;
                    if h.grid().horizon != spec.horizon {
                        return Err(CliError::Usage("control file horizon differs from the problem's".into()));
                    }
                    h
                }
                (None, Some(r)) => BallSampler::new(r, spec.horizon, seed).sample(grid_for(n, m, spec.horizon)?),
                (None, None) => Control::zeros(grid_for(n, m, spec.horizon)?),
            };
            let path = upsilon_n(&spec, &h).map_err(domain)?;
            let mf = StudyManifest::new(
                "skeleton",
                vec![kv("n", h.grid().n), kv("m", h.grid().m), kv("seed", seed)],
                threads,
            );
            emit(&files::path_table(&path), out.as_deref(), Some(mf), start)
        }
        Command::Invert { problem, path, out } => {
            let spec = problem.load_checked()?;
            let f = files::read_path(&path).map_err(CliError::Usage)?;
            let h = invert_upsilon_n(&spec, &f, DEFAULT_SIGMA_FLOOR).map_err(domain)?;
            let text = files::format_control(&h);
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| domain(format!("{}: {e}", p.display())))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Rate {
            problem,
            y,
            n,
            m,
            multistart,
            seed,
            out,
        } => {
            let spec = problem.load_checked()?;
            let grid = grid_for(n, m, spec.horizon)?;
            let opts = OptimizerOptions {
                multistart,
                seed,
                ..Default::default()
            };
            let r = swe_ldp_core::rate::rate_discrete(&spec, grid, y, &opts).map_err(domain)?;
            let mut t = Table::new(&RATE_COLUMNS);
            t.push(rate_row(&r));
            let mf = StudyManifest::new(
                "rate",
                vec![kv("y", y), kv("n", grid.n), kv("m", grid.m), kv("multistart", multistart), kv("seed", seed)],
                threads,
            );
            emit(&t, out.as_deref(), Some(mf), start)
        }
        Command::Converge {
            problem,
            ys,
            ns,
            nref,
            multistart,
            seed,
            out,
        } => {
            let spec = problem.load_checked()?;
            let opts = OptimizerOptions {
                multistart,
                seed,
                ..Default::default()
            };
            let study = parallel::convergence_study(&pool, &spec, &ys, &ns, nref, &opts).map_err(domain)?;
            let mut mf = StudyManifest::new(
                "converge",
                vec![
                    kv("ys", format!("{ys:?}")),
                    kv("ns", format!("{ns:?}")),
                    kv("nref", nref),
                    kv("multistart", multistart),
                    kv("seed", seed),
                ],
                threads,
            );
            for r in &study.rows {
                mf.cells.push(manifest::CellRecord {
                    params: vec![kv("y", r.y), kv("n", r.n)],
                    seconds: 0.0,
                });
            }
            emit(&study_table(&study), out.as_deref(), Some(mf), start)
        }
        Command::Mc {
            problem,
            n,
            mmc,
            eps,
            y,
            side,
            samples,
            seed,
            out,
        } => {
            let spec = problem.load()?;
            let grid = match mmc {
                Some(m) => Grid::new(n, m, spec.horizon),
                None => default_mc_grid(n, spec.horizon),
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let event = match side {
                SideArg::Ge => Event::above(y),
                SideArg::Le => Event::below(y),
            };
            let mut t = Table::new(&MC_COLUMNS);
            let mut mf = StudyManifest::new(
                "mc",
                vec![
                    kv("n", n),
                    kv("mmc", grid.m),
                    kv("y", y),
                    kv("side", event.side.name()),
                    kv("samples", samples),
                    kv("seed", seed),
                ],
                threads,
            );
            for &e in &eps {
                let cell = Instant::now();
                let r = parallel::estimate_rare(&pool, &spec, grid, e, event, samples, seed).map_err(|err| match err {
                    swe_ldp_core::mc::McError::Samples { .. } | swe_ldp_core::mc::McError::Epsilon(_) => {
                        CliError::Usage(err.to_string())
                    }
                    other => domain(other),
                })?;
                t.push(vec![
                    r.eps.into(),
                    r.samples.into(),
                    r.hits.into(),
                    r.p_hat.into(),
                    r.lo.into(),
                    r.hi.into(),
                    r.eps_log.into(),
                ]);
                mf.cells.push(manifest::CellRecord {
                    params: vec![kv("eps", e)],
                    seconds: cell.elapsed().as_secs_f64(),
                });
            }
            emit(&t, out.as_deref(), Some(mf), start)
        }
        Command::Selftest => {
            if selftest(|line| println!("{line}")) {
                Ok(())
            } else {
                Err(CliError::Domain("selftest failed".into()))
            }
        }
    }
}

/// Identity errors ≤ 1e-10 for n ∈ {2, 4, 8, 16, 32} and same-grid inversion
/// of a random control on every preset. Reports one line per check.
pub fn selftest(mut report: impl FnMut(String)) -> bool {
    let mut ok = true;
    for n in [2, 4, 8, 16, 32] {
        for (name, err) in identity_errors(n, 1) {
            let pass = err <= 1e-10;
            ok &= pass;
            report(format!("{} {name} n={n} max_error={err:.3e}", if pass { "PASS" } else { "FAIL" }));
        }
    }
    for p in Preset::ALL {
        let spec = ProblemSpec::preset(p);
        let grid = Grid::with_default_steps(4, spec.horizon).expect("grid");
        let h = BallSampler::new(1.0, spec.horizon, 3).sample(grid);
        let err = upsilon_n(&spec, &h)
            .map_err(|e| e.to_string())
            .and_then(|f| invert_upsilon_n(&spec, &f, DEFAULT_SIGMA_FLOOR).map_err(|e| e.to_string()))
            .and_then(|back| back.distance(&h.without_first_cell()).map_err(|e| e.to_string()));
        let pass = matches!(err, Ok(e) if e <= 1e-8);
        ok &= pass;
        report(format!("{} round_trip {p} n=4 l2_error={err:?}", if pass { "PASS" } else { "FAIL" }));
    }
    ok
}
