use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sglasso::asym::{
    isserlis_lambda, limit_draws, mass_from_draws, scatter_csv, LimitFlavor, LimitProblem,
};
use sglasso::io::{matrix_from_csv, matrix_to_csv, sym_from_csv, sym_to_csv};
use sglasso::mat::{demean_columns, sample_covariance, Matrix, SymMatrix};
use sglasso::metrics::support_graph;
use sglasso::penalty::{degree_penalty_matrix, PenaltySpec};
use sglasso::pipeline::{
    estimate_graph, first_stage_ols, graph_to_dot, graph_to_edge_csv, graph_to_json, load_panel,
    parse_panel, PanelFormat, RunReport, GRUNFELD_CSV,
};
use sglasso::rng::RngStream;
use sglasso::sim::{
    default_lambda_grid, lambda_sweep_min_losses, log_spaced_grid, model_registry, monte_carlo,
    recovery_csv, recovery_probability, McSummary, SweepSummary,
};
use sglasso::solver::{solve, SolverConfig};
use sglasso::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sglasso",
    about = "Sparse precision-matrix estimation with column-structured penalties",
    version
)]
struct Cli {
    /// Optional key=value file supplying defaults for any long flag;
    /// explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one precision matrix from a covariance or data CSV.
    Estimate(EstimateArgs),
    /// Replicated synthetic-data study of one estimator on one model.
    Simulate(SimulateArgs),
    /// Oracle lambda-sweep minimum-loss comparison of two estimators.
    Sweep(SweepArgs),
    /// Non-edge recovery probability curves over the lambda grid.
    Recovery(RecoveryArgs),
    /// Limit-law draws: zero masses and a scatter sample.
    Asymptotic(AsymptoticArgs),
    /// The bundled firm-investment pipeline end to end.
    Grunfeld(GrunfeldArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Covariance matrix CSV (row-major, header-free).
    #[arg(long)]
    cov: Option<PathBuf>,
    /// Observation rows CSV (one row per sample), demeaned before fitting.
    #[arg(long)]
    data: Option<PathBuf>,
    /// glasso | sglasso | weighted | combined
    #[arg(long)]
    penalty: Option<String>,
    /// Truth precision CSV; required by --penalty weighted.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Fixed penalty level (exclusive with --cv).
    #[arg(long)]
    lambda: Option<f64>,
    /// Select the penalty level by two-fold cross-validation (needs --data).
    #[arg(long)]
    cv: bool,
    /// Grid as lo:hi:n (log-spaced) or a comma list of values.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "no-diag-penalty")]
    no_diag_penalty: bool,
    /// Shuffles the CV fold split when given.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, alias = "T")]
    t: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "no-diag-penalty")]
    no_diag_penalty: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, alias = "T")]
    t: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long = "penalty-a")]
    penalty_a: Option<String>,
    #[arg(long = "penalty-b")]
    penalty_b: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoveryArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long, alias = "T")]
    t: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    draws: Option<usize>,
    /// sglasso | glasso
    #[arg(long)]
    flavor: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "zero-tol")]
    zero_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GrunfeldArgs {
    /// Panel CSV path; the bundled dataset when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// long | wide
    #[arg(long)]
    format: Option<String>,
    /// glasso | sglasso | combined
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "no-diag-penalty")]
    no_diag_penalty: bool,
    /// Shuffles the CV fold split when given.
    #[arg(long)]
    seed: Option<u64>,
    /// residuals | invest: which series the graph is estimated on.
    #[arg(long)]
    variable: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => HashMap::new(),
    };
    match cli.command {
        Command::Estimate(a) => cmd_estimate(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Recovery(a) => cmd_recovery(a, &cfg),
        Command::Asymptotic(a) => cmd_asymptotic(a, &cfg),
        Command::Grunfeld(a) => cmd_grunfeld(a, &cfg),
    }
}

fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            location: format!("config line {}", lineno + 1),
            message: format!("expected key=value, found {line:?}"),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Config fills a slot only when the flag was absent.
fn take<T: FromStr>(cfg: &HashMap<String, String>, key: &str, cur: Option<T>) -> Result<Option<T>> {
    match (cur, cfg.get(key)) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(raw)) => raw.parse::<T>().map(Some).map_err(|_| Error::Parse {
            location: format!("config key {key}"),
            message: format!("cannot parse {raw:?}"),
        }),
        (None, None) => Ok(None),
    }
}

fn take_flag(cfg: &HashMap<String, String>, key: &str, cur: bool) -> Result<bool> {
    if cur {
        return Ok(true);
    }
    match cfg.get(key).map(String::as_str) {
        None => Ok(false),
        Some("true") | Some("1") => Ok(true),
        Some("false") | Some("0") => Ok(false),
        Some(other) => Err(Error::Parse {
            location: format!("config key {key}"),
            message: format!("expected a boolean, found {other:?}"),
        }),
    }
}

/// lo:hi:n for a log-spaced grid, else a comma list.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidArgument(format!("--grid {s:?}: {msg}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:n".into()));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad("bad lo".into()))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad("bad hi".into()))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad n".into()))?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(bad("need 0 < lo < hi and n ≥ 2".into()));
        }
        Ok(log_spaced_grid(lo, hi, n))
    } else {
        let mut grid = Vec::new();
        for part in s.split(',') {
            grid.push(
                part.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad value {part:?}")))?,
            );
        }
        Ok(grid)
    }
}

fn build_spec(
    name: &str,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    no_diag: bool,
    truth: Option<&SymMatrix>,
) -> Result<PenaltySpec> {
    let base = match name {
        "sglasso" => PenaltySpec::l12_sq(),
        "glasso" => PenaltySpec::l11(),
        "combined" => PenaltySpec::combined(lambda1.unwrap_or(0.5), lambda2.unwrap_or(0.5))?,
        "weighted" => {
            let omega0 = truth.ok_or_else(|| {
                Error::InvalidArgument("--penalty weighted needs a truth matrix".into())
            })?;
            PenaltySpec::weighted_l11(degree_penalty_matrix(omega0).scale(2.0))?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown penalty {other:?} (expected glasso, sglasso, weighted, or combined)"
            )));
        }
    };
    Ok(if no_diag {
        base.without_diagonal_penalty()
    } else {
        base
    })
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ReportJson {
    penalty: String,
    chosen_lambda: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
    kkt_residual: f64,
    /// 1-based endpoints, i < j.
    edges: Vec<(usize, usize)>,
    /// 1-based hub nodes (degree ≥ p/2).
    core_nodes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<String>>,
}

fn write_report(
    dir: &Path,
    penalty: &str,
    report: &RunReport,
    labels: Option<&[String]>,
) -> Result<()> {
    let json = ReportJson {
        penalty: penalty.to_string(),
        chosen_lambda: report.chosen_lambda,
        objective: report.estimate.objective,
        iterations: report.estimate.iterations,
        converged: report.estimate.converged,
        kkt_residual: report.estimate.kkt_residual,
        edges: report
            .graph
            .edges()
            .iter()
            .map(|&(i, j)| (i + 1, j + 1))
            .collect(),
        core_nodes: report.core_nodes.iter().map(|&n| n + 1).collect(),
        nodes: labels.map(|l| l.to_vec()),
    };
    write_out(
        dir,
        "report.json",
        &serde_json::to_string_pretty(&json).expect("report serialization cannot fail"),
    )?;
    write_out(dir, "omega.csv", &sym_to_csv(&report.estimate.omega))?;
    write_out(dir, "graph.dot", &graph_to_dot(&report.graph, labels))?;
    write_out(dir, "graph.json", &graph_to_json(&report.graph))?;
    write_out(dir, "edges.csv", &graph_to_edge_csv(&report.graph))?;
    Ok(())
}

fn finish(report: &RunReport, dir: &Path) -> u8 {
    println!(
        "lambda={} edges={} core={:?} converged={} (reports in {})",
        report.chosen_lambda,
        report.graph.edge_count(),
        report.core_nodes.iter().map(|&n| n + 1).collect::<Vec<_>>(),
        report.estimate.converged,
        dir.display()
    );
    if report.estimate.converged {
        0
    } else {
        eprintln!("warning: solver did not meet its tolerances; output is partial");
        3
    }
}

fn cmd_estimate(a: EstimateArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let cov = take(cfg, "cov", a.cov)?;
    let data = take(cfg, "data", a.data)?;
    let penalty = take(cfg, "penalty", a.penalty)?.unwrap_or_else(|| "sglasso".into());
    let truth_path = take(cfg, "truth", a.truth)?;
    let lambda1 = take(cfg, "lambda1", a.lambda1)?;
    let lambda2 = take(cfg, "lambda2", a.lambda2)?;
    let lambda = take(cfg, "lambda", a.lambda)?;
    let cv = take_flag(cfg, "cv", a.cv)?;
    let grid_raw = take(cfg, "grid", a.grid)?;
    let no_diag = take_flag(cfg, "no-diag-penalty", a.no_diag_penalty)?;
    let seed = take(cfg, "seed", a.seed)?;
    let rho = take(cfg, "rho", a.rho)?;
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let truth = match truth_path {
        Some(p) => Some(sym_from_csv(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let spec = build_spec(&penalty, lambda1, lambda2, no_diag, truth.as_ref())?;

    let rows: Option<Matrix> = match (&cov, &data) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either --cov or --data, not both".into(),
            ));
        }
        (None, None) => {
            return Err(Error::InvalidArgument("give --cov or --data".into()));
        }
        (None, Some(path)) => Some(matrix_from_csv(&std::fs::read_to_string(path)?)?),
        (Some(_), None) => None,
    };

    let mut solver_cfg = SolverConfig::default();
    let report = match (lambda, cv) {
        (Some(_), true) => {
            return Err(Error::InvalidArgument(
                "--lambda and --cv are exclusive".into(),
            ));
        }
        (None, false) => {
            return Err(Error::InvalidArgument(
                "choose --lambda <value> or --cv".into(),
            ));
        }
        (Some(lam), false) => {
            let sigma = match (&cov, rows) {
                (Some(path), _) => sym_from_csv(&std::fs::read_to_string(path)?)?,
                (None, Some(mut m)) => {
                    demean_columns(&mut m);
                    sample_covariance(&m)
                }
                (None, None) => unreachable!(),
            };
            solver_cfg.rho = rho.unwrap_or(sigma.trace() / sigma.dim() as f64);
            let estimate = solve(&sigma, lam, &spec, &solver_cfg)?;
            let graph = support_graph(&estimate);
            let p = graph.p;
            let core_nodes = (0..p).filter(|&i| 2 * graph.degree(i) >= p).collect();
            RunReport {
                chosen_lambda: lam,
                estimate,
                graph,
                core_nodes,
            }
        }
        (None, true) => {
            let m = rows.ok_or_else(|| {
                Error::InvalidArgument("--cv needs --data (observation rows)".into())
            })?;
            let grid = match grid_raw {
                Some(s) => parse_grid(&s)?,
                None => default_lambda_grid(),
            };
            let mut demeaned = m.clone();
            demean_columns(&mut demeaned);
            let sigma = sample_covariance(&demeaned);
            solver_cfg.rho = rho.unwrap_or(sigma.trace() / sigma.dim() as f64);
            let stream = seed.map(|s| RngStream::new(s, 0));
            estimate_graph(&m, &spec, &grid, &solver_cfg, stream.as_ref())?
        }
    };
    write_report(&dir, &penalty, &report, None)?;
    Ok(finish(&report, &dir))
}

fn cmd_simulate(a: SimulateArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let model_id = take(cfg, "model", a.model)?
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    let t = take(cfg, "t", a.t)?.unwrap_or(50);
    let reps = take(cfg, "reps", a.reps)?.unwrap_or(100);
    let penalty = take(cfg, "penalty", a.penalty)?.unwrap_or_else(|| "sglasso".into());
    let seed = take(cfg, "seed", a.seed)?.unwrap_or(0);
    let grid = match take(cfg, "grid", a.grid)? {
        Some(s) => parse_grid(&s)?,
        None => default_lambda_grid(),
    };
    let no_diag = take_flag(cfg, "no-diag-penalty", a.no_diag_penalty)?;
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let model = model_registry(&model_id)?;
    let spec = build_spec(&penalty, None, None, no_diag, Some(&model.omega0))?;
    let summary = monte_carlo(&model, t, reps, &spec, &grid, seed)?;
    let csv = format!("{}\n{}\n", McSummary::csv_header(), summary.csv_row());
    write_out(&dir, "mc_summary.csv", &csv)?;
    print!("{csv}");
    Ok(0)
}

fn cmd_sweep(a: SweepArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let model_id = take(cfg, "model", a.model)?
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    let t = take(cfg, "t", a.t)?.unwrap_or(50);
    let reps = take(cfg, "reps", a.reps)?.unwrap_or(100);
    let pa = take(cfg, "penalty-a", a.penalty_a)?.unwrap_or_else(|| "sglasso".into());
    let pb = take(cfg, "penalty-b", a.penalty_b)?.unwrap_or_else(|| "glasso".into());
    let seed = take(cfg, "seed", a.seed)?.unwrap_or(0);
    let grid = match take(cfg, "grid", a.grid)? {
        Some(s) => parse_grid(&s)?,
        None => default_lambda_grid(),
    };
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let model = model_registry(&model_id)?;
    let spec_a = build_spec(&pa, None, None, false, Some(&model.omega0))?;
    let spec_b = build_spec(&pb, None, None, false, Some(&model.omega0))?;
    let summary = lambda_sweep_min_losses(&model, t, reps, &spec_a, &spec_b, &grid, seed)?;
    let csv = format!("{}\n{}\n", SweepSummary::csv_header(), summary.csv_row());
    write_out(&dir, "sweep.csv", &csv)?;
    print!("{csv}");
    Ok(0)
}

fn cmd_recovery(a: RecoveryArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let model_id = take(cfg, "model", a.model)?
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    let t = take(cfg, "t", a.t)?.unwrap_or(20);
    let reps = take(cfg, "reps", a.reps)?.unwrap_or(200);
    let seed = take(cfg, "seed", a.seed)?.unwrap_or(0);
    let grid = match take(cfg, "grid", a.grid)? {
        Some(s) => parse_grid(&s)?,
        None => default_lambda_grid(),
    };
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let model = model_registry(&model_id)?;
    let sg = recovery_probability(&model, t, &grid, reps, &PenaltySpec::l12_sq(), seed)?;
    let gl = recovery_probability(&model, t, &grid, reps, &PenaltySpec::l11(), seed)?;
    let csv = recovery_csv(&grid, &sg, &gl);
    write_out(&dir, "recovery.csv", &csv)?;
    println!(
        "recovery curves over {} grid points written to {}",
        grid.len(),
        dir.display()
    );
    Ok(0)
}

fn cmd_asymptotic(a: AsymptoticArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let model_id = take(cfg, "model", a.model)?
        .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    let lambda0 = take(cfg, "lambda0", a.lambda0)?.unwrap_or(1.0);
    let draws = take(cfg, "draws", a.draws)?.unwrap_or(2000);
    let flavor_name = take(cfg, "flavor", a.flavor)?.unwrap_or_else(|| "sglasso".into());
    let seed = take(cfg, "seed", a.seed)?.unwrap_or(0);
    let zero_tol = take(cfg, "zero-tol", a.zero_tol)?.unwrap_or(1e-8);
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let flavor = match flavor_name.as_str() {
        "sglasso" => LimitFlavor::SglassoLimit,
        "glasso" => LimitFlavor::GlassoLimit,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown flavor {other:?} (expected sglasso or glasso)"
            )));
        }
    };
    let model = model_registry(&model_id)?;
    let problem = LimitProblem::new(model.omega0.clone(), lambda0)?;
    let draws_vec = limit_draws(&problem, flavor, draws, &RngStream::new(seed, 0))?;
    let mass = mass_from_draws(&problem, &draws_vec, zero_tol);
    write_out(&dir, "zero_mass.csv", &sym_to_csv(&mass))?;

    // Scatter sample at the extreme non-edges: the heaviest pair by degree
    // sum against the lightest, first hits in column-major order.
    let p = problem.dim();
    let mut heaviest: Option<(usize, usize)> = None;
    let mut lightest: Option<(usize, usize)> = None;
    for j in 0..p {
        for i in 0..j {
            if !problem.zero_pattern.get(i, j) {
                continue;
            }
            let d = problem.degrees.d[i] + problem.degrees.d[j];
            let key = |pair: (usize, usize)| problem.degrees.d[pair.0] + problem.degrees.d[pair.1];
            if heaviest.is_none_or(|h| d > key(h)) {
                heaviest = Some((i, j));
            }
            if lightest.is_none_or(|l| d < key(l)) {
                lightest = Some((i, j));
            }
        }
    }
    if let (Some(h), Some(l)) = (heaviest, lightest) {
        write_out(&dir, "scatter.csv", &scatter_csv(&draws_vec, h, l))?;
        println!(
            "zero mass at ({},{}) = {}, at ({},{}) = {} ({} draws, reports in {})",
            h.0 + 1,
            h.1 + 1,
            mass[h],
            l.0 + 1,
            l.1 + 1,
            mass[l],
            draws,
            dir.display()
        );
    } else {
        println!(
            "model has no non-edges; zero-mass matrix written to {}",
            dir.display()
        );
    }
    // The noise covariance is often useful alongside; cheap to emit.
    write_out(
        &dir,
        "isserlis_lambda.csv",
        &sym_to_csv(&isserlis_lambda(&problem.sigma0)),
    )?;
    Ok(0)
}

fn cmd_grunfeld(a: GrunfeldArgs, cfg: &HashMap<String, String>) -> Result<u8> {
    let data = take(cfg, "data", a.data)?;
    let format = take(cfg, "format", a.format)?.unwrap_or_else(|| "long".into());
    let penalty = take(cfg, "penalty", a.penalty)?.unwrap_or_else(|| "sglasso".into());
    let lambda1 = take(cfg, "lambda1", a.lambda1)?;
    let lambda2 = take(cfg, "lambda2", a.lambda2)?;
    let grid = match take(cfg, "grid", a.grid)? {
        Some(s) => parse_grid(&s)?,
        // Raw dollar units need far larger penalty levels than the
        // unit-scale default grid reaches.
        None => log_spaced_grid(0.01, 2000.0, 40),
    };
    let no_diag = take_flag(cfg, "no-diag-penalty", a.no_diag_penalty)?;
    let seed = take(cfg, "seed", a.seed)?;
    let variable = take(cfg, "variable", a.variable)?.unwrap_or_else(|| "residuals".into());
    let rho = take(cfg, "rho", a.rho)?;
    let dir = out_dir(take(cfg, "out", a.out)?)?;

    let panel_format = match format.as_str() {
        "long" => PanelFormat::LongCsv,
        "wide" => PanelFormat::WideCsv,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (expected long or wide)"
            )));
        }
    };
    let panel = match data {
        Some(path) => load_panel(&path, panel_format)?,
        None => parse_panel(GRUNFELD_CSV, PanelFormat::LongCsv)?,
    };
    if penalty == "weighted" {
        return Err(Error::InvalidArgument(
            "weighted penalty needs a known truth; not available empirically".into(),
        ));
    }
    let spec = build_spec(&penalty, lambda1, lambda2, no_diag, None)?;

    let first_stage = first_stage_ols(&panel)?;
    let series = match variable.as_str() {
        "residuals" => &first_stage.residuals,
        "invest" => &panel.invest,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown variable {other:?} (expected residuals or invest)"
            )));
        }
    };

    let mut demeaned = series.clone();
    demean_columns(&mut demeaned);
    let sigma = sample_covariance(&demeaned);
    let solver_cfg = SolverConfig {
        rho: rho.unwrap_or(sigma.trace() / sigma.dim() as f64),
        ..SolverConfig::default()
    };
    let stream = seed.map(|s| RngStream::new(s, 0));
    let report = estimate_graph(series, &spec, &grid, &solver_cfg, stream.as_ref())?;

    write_out(
        &dir,
        "residuals.csv",
        &matrix_to_csv(&first_stage.residuals),
    )?;
    write_out(&dir, "betas.csv", &matrix_to_csv(&first_stage.betas))?;
    write_report(&dir, &penalty, &report, Some(&panel.firms))?;
    Ok(finish(&report, &dir))
}
