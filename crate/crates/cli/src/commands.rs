use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use yardsale::agent::{self, SimConfig};
use yardsale::analysis::{
    self, compare_curves, pareto_fit_auto, pareto_fit_distribution, pareto_fit_samples, verify_condensation,
    verify_h_theorem, Curve, TolerancePolicy, CONDENSED_GINI,
};
use yardsale::boltzmann::{self, BoltzmannConfig, CollisionOperator, RunOptions};
use yardsale::fp::{self, FpConfig};
use yardsale::gini::{gini_via_lorenz, gini_via_survival, sample_gini};
use yardsale::io;
use yardsale::trace::GiniRecord;
use yardsale::{GiniTrace, WealthDistribution};

use crate::config::Config;
use crate::output::RunDir;
use crate::CliError;

/// Rounding slack for the deterministic solvers' own monotonicity check.
const DETERMINISTIC_TOL: f64 = 1e-12;

fn checkpoint_name(step: usize) -> String {
    format!("checkpoints/step-{step:08}.csv")
}

fn emit(summary: &str, dir: &RunDir) -> Result<(), CliError> {
    dir.write_text("report.txt", summary)?;
    print!("{summary}");
    println!("output: {}", dir.path().display());
    Ok(())
}

pub fn simulate_agents(config: &Config, out: &Path) -> Result<(), CliError> {
    let sim = SimConfig {
        n_agents: config.agents.n_agents,
        initial: config.initial,
        beta: config.eta.build()?,
        n_transactions: config.agents.transactions,
        record_every: config.agents.record_every,
        n_replicas: config.agents.replicas,
        seed: config.seed,
    };
    sim.validate().map_err(|e| CliError::Config(format!("[agents] {e}")))?;
    let result = agent::run(&sim)?;
    let dir = RunDir::create(out, &config.label)?;
    dir.write_manifest(config, "simulate-agents")?;
    io::write_aggregate(dir.file("aggregate.csv")?, &result.ensemble)?;
    for r in &result.replicas {
        io::write_trace(dir.file(&format!("traces/replica-{:04}.csv", r.replica))?, &r.trace)?;
        io::write_snapshot(dir.file(&format!("snapshots/replica-{:04}.csv", r.replica))?, &r.final_state.wealths())?;
    }
    let e = &result.ensemble;
    let mut s = String::new();
    writeln!(s, "agents: {} x {} replicas, {} transactions", sim.n_agents, sim.n_replicas, sim.n_transactions).ok();
    writeln!(s, "final mean G = {:.6} +- {:.6}", e.g_mean[e.g_mean.len() - 1], e.g_stderr[e.g_stderr.len() - 1]).ok();
    if e.t.len() >= 2 {
        let w = result.replicas[0].final_state.total_wealth();
        let mean = e.mean_trace(sim.n_agents as f64, w)?;
        let policy = TolerancePolicy::Stderr { stderr: e.increment_stderr.clone(), sigmas: 3.0 };
        write!(s, "{}", verify_h_theorem(&mean, &policy)?).ok();
    }
    emit(&s, &dir)
}

pub fn solve_boltzmann(config: &Config, out: &Path) -> Result<(), CliError> {
    let grid = config.grid.build()?;
    let beta = config.eta.build()?;
    let initial = analysis::initial_distribution(&config.initial, grid)
        .map_err(|e| CliError::Config(format!("[initial] {e}")))?;
    let section = &config.boltzmann;
    let dt = if section.dt > 0.0 {
        section.dt
    } else {
        CollisionOperator::new(beta, section.quadrature_points)
            .map_err(|e| CliError::Config(format!("[boltzmann] {e}")))?
            .suggested_dt(&initial)?
    };
    let bc = BoltzmannConfig {
        beta,
        beta_quadrature_points: section.quadrature_points,
        dt,
        t_end: dt * section.steps as f64,
        integrator: section.integrator,
    };
    bc.validate().map_err(|e| CliError::Config(format!("[boltzmann] {e}")))?;
    if section.record_every == 0 {
        return Err(CliError::Config("[boltzmann] record_every must be positive".into()));
    }
    let options = RunOptions {
        record_every: section.record_every,
        checkpoint_every: section.checkpoint_every,
        estimate_errors: section.estimate_errors,
    };
    let run = boltzmann::solve(&initial, &bc, options)?;
    let dir = RunDir::create(out, &config.label)?;
    dir.write_manifest(config, "solve-boltzmann")?;
    io::write_trace(dir.file("trace.csv")?, &run.trace)?;
    let mut rates = dir.file("rates.csv")?;
    writeln!(rates, "t,rate1,rate2,rate2_negative_beta,rate1_error,rate2_error")?;
    for r in &run.rates {
        let (e1, e2) = r.error.map_or((f64::NAN, f64::NAN), |e| (e.rate1, e.rate2));
        writeln!(rates, "{},{},{},{},{},{}", r.t, r.split.rate1, r.split.rate2, r.rate2_negative_beta, e1, e2)?;
    }
    rates.flush()?;
    for (step, state) in &run.checkpoints {
        io::write_distribution(dir.file(&checkpoint_name(*step))?, state)?;
    }
    io::write_distribution(dir.file("final.csv")?, &run.final_state)?;
    io::write_lorenz(dir.file("lorenz.csv")?, &run.final_state.lorenz_curve())?;

    let drift = run.relative_drift();
    let mut s = String::new();
    writeln!(s, "boltzmann: {} steps of dt = {dt:.6e}", bc.steps()).ok();
    writeln!(s, "relative drift: N {:.3e}, W {:.3e}; clipped {:.3e}, leaked {:.3e}", drift.n, drift.w, run.total_clipped, run.total_leaked).ok();
    let min1 = run.rates.iter().map(|r| r.split.rate1).fold(f64::INFINITY, f64::min);
    let min2 = run.rates.iter().map(|r| r.split.rate2).fold(f64::INFINITY, f64::min);
    writeln!(s, "min recorded rate1 = {min1:.6e}, rate2 = {min2:.6e}").ok();
    write!(s, "{}", verify_h_theorem(&run.trace, &TolerancePolicy::Absolute(DETERMINISTIC_TOL))?).ok();
    emit(&s, &dir)
}

pub fn solve_fp(config: &Config, out: &Path) -> Result<(), CliError> {
    let grid = config.grid.build()?;
    let gamma = config.gamma()?;
    let initial = analysis::initial_distribution(&config.initial, grid.clone())
        .map_err(|e| CliError::Config(format!("[initial] {e}")))?;
    let section = &config.fp;
    let dt = if section.dt > 0.0 {
        section.dt
    } else {
        fp::uniform_stability_bound(&grid, gamma).map_err(|e| CliError::Config(format!("[fp] {e}")))?
    };
    let fc = FpConfig { gamma, dt, t_end: section.t_end, closure: section.closure };
    fc.validate().map_err(|e| CliError::Config(format!("[fp] {e}")))?;
    if section.record_every == 0 {
        return Err(CliError::Config("[fp] record_every must be positive".into()));
    }
    let run = fp::solve(&initial, &fc, section.record_every, section.checkpoint_every)?;
    let dir = RunDir::create(out, &config.label)?;
    dir.write_manifest(config, "solve-fp")?;
    io::write_trace(dir.file("trace.csv")?, &run.trace)?;
    let mut diag = dir.file("diagnostics.csv")?;
    writeln!(diag, "t,poor_fraction,second_moment,boundary_agents,boundary_wealth")?;
    for r in &run.records {
        writeln!(diag, "{},{},{},{},{}", r.t, r.poor_fraction, r.second_moment, r.boundary.agents, r.boundary.wealth)?;
    }
    diag.flush()?;
    for (step, state) in &run.checkpoints {
        io::write_distribution(dir.file(&checkpoint_name(*step))?, state)?;
    }
    io::write_distribution(dir.file("final.csv")?, &run.final_state)?;
    io::write_lorenz(dir.file("lorenz.csv")?, &run.final_state.lorenz_curve())?;

    let drift = run.relative_drift();
    let mut s = String::new();
    writeln!(s, "fokker-planck: gamma = {gamma}, {} steps of dt = {dt:.6e}", fc.steps()).ok();
    writeln!(s, "relative drift: N {:.3e}, W {:.3e}", drift.n, drift.w).ok();
    if run.truncated {
        writeln!(s, "warning: boundary flux at w_max exceeded the truncation limit; enlarge the grid").ok();
    }
    write!(s, "{}", verify_h_theorem(&run.trace, &TolerancePolicy::Absolute(DETERMINISTIC_TOL))?).ok();
    emit(&s, &dir)
}

pub struct AnalyzeArgs {
    pub traces: Vec<PathBuf>,
    pub samples: Option<PathBuf>,
    pub distribution: Option<PathBuf>,
    pub w_min: Option<f64>,
    pub tol: f64,
    pub sigmas: f64,
    pub condensation: bool,
}

/// A trace file in either the per-run format or the aggregate format.
fn load_curve(path: &Path) -> Result<(Curve, GiniTrace, Option<Vec<f64>>), CliError> {
    let text = std::fs::read_to_string(path)?;
    let header = text.lines().next().unwrap_or("").trim();
    let label = path.display().to_string();
    if header == io::AGGREGATE_HEADER.join(",") {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let mut records = Vec::new();
        let mut stderr = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| CliError::Config(format!("{label}: row {}: {e}", i + 2)))?;
            let v = row
                .iter()
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| CliError::Config(format!("{label}: row {}: not a number", i + 2)))?;
            records.push(GiniRecord { t: v[0], g: v[1], n: 1.0, w: 1.0, dgdt: 0.0 });
            stderr.push(v[2]);
        }
        let trace = GiniTrace::from_records(records).map_err(|e| CliError::Config(format!("{label}: {e}")))?;
        let increments = stderr.windows(2).map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).collect();
        let curve = Curve { label, t: trace.times(), g: trace.ginis(), stderr: Some(stderr) };
        Ok((curve, trace, Some(increments)))
    } else {
        let trace = io::read_trace(text.as_bytes()).map_err(|e| CliError::Config(format!("{label}: {e}")))?;
        Ok((Curve::from_trace(label, &trace), trace, None))
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if args.traces.is_empty() && args.samples.is_none() && args.distribution.is_none() {
        return Err(CliError::Config("analyze needs --trace, --samples or --distribution".into()));
    }
    let mut failed = false;
    let mut curves = Vec::new();
    for path in &args.traces {
        let (curve, trace, increments) = load_curve(path)?;
        let policy = match increments {
            Some(stderr) => TolerancePolicy::Stderr { stderr, sigmas: args.sigmas },
            None => TolerancePolicy::Absolute(args.tol),
        };
        println!("== {}", path.display());
        if args.condensation {
            let r = verify_condensation(&trace, &policy, CONDENSED_GINI)?;
            print!("{}", r.h_theorem);
            println!("condensation (final G >= {}): {}", r.threshold, if r.passed { "pass" } else { "FAIL" });
            failed |= !r.passed;
        } else {
            let r = verify_h_theorem(&trace, &policy)?;
            print!("{r}");
            failed |= !r.passed;
        }
        curves.push(curve);
    }
    if curves.len() >= 2 {
        print!("{}", compare_curves(&curves)?);
    }
    if let Some(path) = &args.samples {
        let samples = io::load_samples(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let fit = match args.w_min {
            Some(w) => pareto_fit_samples(&samples, w)?,
            None => pareto_fit_auto(&samples, 200)?,
        };
        print_fit(&fit);
    }
    if let Some(path) = &args.distribution {
        let dist = io::load_distribution(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let w_min = args.w_min.ok_or_else(|| CliError::Config("--distribution needs --w-min".into()))?;
        print_fit(&pareto_fit_distribution(&dist, w_min)?);
    }
    if failed {
        return Err(CliError::Failed("H-theorem check failed".into()));
    }
    Ok(())
}

fn print_fit(fit: &analysis::ParetoFit) {
    match fit.stderr {
        Some(se) => println!("pareto alpha = {:.6} +- {:.6}", fit.alpha, se),
        None => println!("pareto alpha = {:.6}", fit.alpha),
    }
    println!(
        "w_min = {}, tail = {}, log-log slope = {:.4}, residual = {:.4}, KS = {:.4}",
        fit.w_min, fit.tail_count, fit.loglog_slope, fit.loglog_residual, fit.ks_distance
    );
}

fn is_distribution_file(path: &Path) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().next().map(str::trim) == Some("w,P"))
}

pub fn ingest(config: &Config, input: &Path, out: &Path) -> Result<(), CliError> {
    let samples = io::load_samples(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let mut grid_config = config.grid.clone();
    let max = samples.iter().copied().fold(0.0, f64::max);
    if grid_config.w_max < max {
        grid_config.w_max = max;
    }
    let grid = grid_config.build()?;
    let (dist, manifest) = io::bin_samples(&samples, grid)?;
    let dir = RunDir::create(out, &config.label)?;
    let mut resolved = config.clone();
    resolved.grid = grid_config;
    dir.write_manifest(&resolved, "ingest")?;
    io::write_snapshot(dir.file("snapshot.csv")?, &samples)?;
    io::write_distribution(dir.file("distribution.csv")?, &dist)?;
    io::write_lorenz(dir.file("lorenz.csv")?, &dist.lorenz_curve())?;
    let mut s = String::new();
    writeln!(s, "samples: {}", manifest.samples).ok();
    writeln!(s, "binned onto {} nodes up to w_max = {}", manifest.nodes, manifest.w_max).ok();
    writeln!(s, "mean wealth: samples {}, binned {}", manifest.sample_mean, manifest.binned_mean).ok();
    writeln!(s, "sample G = {}", sample_gini(&samples)?).ok();
    writeln!(s, "binned G = {}", gini_via_lorenz(&dist)?).ok();
    emit(&s, &dir)
}

pub fn metrics(input: &Path) -> Result<(), CliError> {
    if is_distribution_file(input)? {
        let dist: WealthDistribution =
            io::load_distribution(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let m = dist.moments();
        println!("N={}", m.n);
        println!("W={}", m.w);
        println!("G={}", gini_via_lorenz(&dist)?);
        println!("G_survival={}", gini_via_survival(&dist)?);
    } else {
        let samples = io::load_samples(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        println!("N={}", samples.len());
        println!("W={}", samples.iter().sum::<f64>());
        println!("G={}", sample_gini(&samples)?);
    }
    Ok(())
}
