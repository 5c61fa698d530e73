//! `erw`: exhaustive lemma checks, Monte Carlo estimators and walk traces for
//! one-dimensional excited random walks.
//!
//! Machine outputs go to `<out>/<subcommand>-<seed>/`; timestamps only ever
//! appear in the sidecar `run.log`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use erw_core::arrow_env::ArrowTable;
use erw_core::experiments::{
    delta_sweep, estimate_recurrence, estimate_speed, estimate_transience, run_replicas, summarize_recurrence,
    summarize_speed, summarize_transience, write_records_csv, zero_one_scan, ExperimentConfig, ResultRecord,
    DEFAULT_HORIZON, DEFAULT_REPLICAS, DEFAULT_RETURN_CUTOFF, DEFAULT_RIGHT_THRESHOLD,
};
use erw_core::oracle::{
    check_coupling_law, default_suite, survival_equivalence_on, tau_on, z_equals_w_on, CheckReport, Outcome, Sweep,
    DEFAULT_MAX_BITS,
};
use erw_core::walk::{hitting_time, run_walk, StopRule};
use erw_core::{build_environment, realize, ArrowEnvironment, EnvFamilySpec, Exec};
use serde::Serialize;
use serde_json::json;

use config::FileConfig;

const DEFAULT_SEED: u64 = 0;

#[derive(Parser, Debug)]
#[command(
    name = "erw",
    version,
    about = "Excited random walks: lemma checks, estimators, traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exhaustive lemma checks over every arrow table of a window.
    Verify(VerifyArgs),
    /// Run replicas and report transience, recurrence and speed together.
    Simulate(SimArgs),
    /// Speed estimate `X_H / H`.
    Speed(SimArgs),
    /// Directional transience frequencies.
    Transience(SimArgs),
    /// Return counts to the origin.
    Recurrence(SimArgs),
    /// Transience frequency checked against the zero-one band.
    ZeroOne(SimArgs),
    /// Transience and speed across iid_bounded environments, sorted by delta.
    DeltaSweep(DeltaArgs),
    /// Walk on a single arrow environment and print its path.
    Trace(TraceArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML config with [environment], [experiment], [verify], [delta_sweep] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed [default: config master_seed, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: machine parallelism].
    #[arg(long)]
    threads: Option<usize>,
    /// Output root.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Site window `lo:hi` [default: 0:3].
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Prefix depth per site [default: 4].
    #[arg(long)]
    depth: Option<u32>,
    /// Step budget per walk [default: 10000].
    #[arg(long)]
    horizon: Option<u64>,
    /// Column depth of the U-transform check [default: 8].
    #[arg(long)]
    u_depth: Option<u32>,
    /// Largest x, y, l in the subduality check [default: 4].
    #[arg(long)]
    max_xyl: Option<u64>,
    /// Check only this table (ArrowTable text format).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Also run the coupling-law check (10^5 samples of constant_profile([0.7,0.3]), 20 steps).
    #[arg(long)]
    coupling: bool,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Environment: single_cookie:P, iid_bounded:M:P or constant_profile:P1,P2,...
    #[arg(long)]
    env: Option<String>,
    /// Replicas [default: 200].
    #[arg(long)]
    replicas: Option<u64>,
    /// Steps per replica [default: 100000].
    #[arg(long)]
    horizon: Option<u64>,
    /// Transience threshold R [default: 1000].
    #[arg(long)]
    right_threshold: Option<u64>,
    /// Returns after this step count as late [default: 1000].
    #[arg(long)]
    return_cutoff: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct DeltaArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// iid_bounded spec `M:p`; repeatable [default: config specs, else 3:0.1 2:0.4 2:0.6 3:0.9].
    #[arg(long = "spec")]
    specs: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Arrow table file; tail arrows alternate 0,1,0,1 beyond each prefix.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Environment to realize when no table is given.
    #[arg(long)]
    env: Option<String>,
    /// Replica whose seeds realize the environment [default: 0].
    #[arg(long, default_value_t = 0)]
    replica: u64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    start: i64,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<i64>,
    /// Step budget [default: 1000].
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    /// Print the `t x k arrow` consumption log.
    #[arg(long)]
    dump: bool,
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` means an oracle violation.
fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a, "simulate"),
        Command::Speed(a) => simulate(a, "speed"),
        Command::Transience(a) => simulate(a, "transience"),
        Command::Recurrence(a) => simulate(a, "recurrence"),
        Command::ZeroOne(a) => simulate(a, "zero-one"),
        Command::DeltaSweep(a) => sweep(a),
        Command::Trace(a) => trace(a),
    }
}

fn load_config(common: &Common) -> Result<FileConfig, Failure> {
    match &common.config {
        Some(path) => config::load(path).map_err(Failure::Usage),
        None => Ok(FileConfig::default()),
    }
}

fn effective_seed(common: &Common, file: &FileConfig) -> u64 {
    common.seed.or(file.experiment.master_seed).unwrap_or(DEFAULT_SEED)
}

fn exec(common: &Common, file: &FileConfig) -> Exec {
    Exec::from_threads(common.threads.or(file.experiment.threads))
}

struct RunDir {
    path: PathBuf,
    started: Instant,
    log: Vec<String>,
}

impl RunDir {
    fn create(out: &Path, subcommand: &str, seed: u64) -> Result<Self, Failure> {
        let path = out.join(format!("{subcommand}-{seed}"));
        fs::create_dir_all(&path)?;
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let argv: Vec<String> = std::env::args().collect();
        Ok(RunDir {
            path,
            started: Instant::now(),
            log: vec![format!("started_unix={now}"), format!("argv={argv:?}")],
        })
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
        text.push('\n');
        fs::write(self.path.join(name), text)?;
        Ok(())
    }

    fn write_records(&self, name: &str, records: &[ResultRecord]) -> Result<(), Failure> {
        let file = fs::File::create(self.path.join(name))?;
        write_records_csv(records, std::io::BufWriter::new(file)).map_err(|e| Failure::Runtime(e.to_string()))
    }

    fn finish(mut self, exec: Exec) -> Result<(), Failure> {
        self.log.push(format!("exec={exec:?}"));
        self.log
            .push(format!("elapsed_seconds={:.3}", self.started.elapsed().as_secs_f64()));
        fs::write(self.path.join("run.log"), self.log.join("\n") + "\n")?;
        println!("outputs in {}", self.path.display());
        Ok(())
    }
}

fn verify(a: VerifyArgs) -> Result<bool, Failure> {
    let file = load_config(&a.common)?;
    let v = &file.verify;
    let window = a.window.as_deref().or(v.window.as_deref()).unwrap_or("0:3");
    let (lo, hi) = config::parse_window(window).map_err(Failure::Usage)?;
    let seed = effective_seed(&a.common, &file);
    let exec = exec(&a.common, &file);
    let sweep = Sweep {
        lo,
        hi,
        depth: a.depth.or(v.depth).unwrap_or(4),
        horizon: a.horizon.or(v.horizon).unwrap_or(10_000),
        max_bits: DEFAULT_MAX_BITS,
        exec,
    };
    let u_depth = a.u_depth.or(v.u_depth).unwrap_or(8);
    let max_xyl = a.max_xyl.or(v.max_xyl).unwrap_or(4);
    let dir = RunDir::create(&a.common.out, "verify", seed)?;

    let mut reports = match &a.table {
        Some(path) => check_single_table(path, sweep.horizon)?,
        None => default_suite(&sweep, u_depth, max_xyl).map_err(|e| Failure::Usage(e.to_string()))?,
    };
    if a.coupling || v.coupling.unwrap_or(false) {
        let profile = v.coupling_profile.clone().unwrap_or_else(|| vec![0.7, 0.3]);
        let samples = v.coupling_samples.unwrap_or(100_000);
        let steps = v.coupling_steps.unwrap_or(20);
        let report =
            check_coupling_law(&profile, samples, steps, seed, exec).map_err(|e| Failure::Usage(e.to_string()))?;
        reports.push(report);
    }

    for r in &reports {
        match r.statistic {
            Some(s) => println!("{r} statistic={s:.5}"),
            None => println!("{r}"),
        }
        if let Some(c) = &r.first_counterexample {
            let name = format!("counterexample-{}.txt", r.name);
            fs::write(dir.path.join(&name), format!("# {}: {}\n{}", r.name, c.inputs, c.table))?;
            println!("  counterexample written to {}", dir.path.join(name).display());
        }
    }
    let passed = reports.iter().all(CheckReport::passed);
    dir.write_json(
        "summary.json",
        &json!({
            "subcommand": "verify",
            "seed": seed,
            "config": {
                "window": [lo, hi],
                "depth": sweep.depth,
                "horizon": sweep.horizon,
                "u_depth": u_depth,
                "max_xyl": max_xyl,
                "table": a.table,
            },
            "passed": passed,
            "checks": reports,
        }),
    )?;
    dir.finish(exec)?;
    Ok(passed)
}

fn check_single_table(path: &Path, horizon: u64) -> Result<Vec<CheckReport>, Failure> {
    let table = read_table(path)?;
    let (_, hi) = table.window();
    let z_steps = (hi.max(0) + 2) as u64;
    let outcomes = [
        ("z_equals_w", z_equals_w_on(&table, horizon, z_steps)),
        (
            "survival_equivalence",
            survival_equivalence_on(&table, horizon, z_steps),
        ),
        ("tau_eq_m_plus_one", tau_on(&table, horizon)),
    ];
    Ok(outcomes
        .into_iter()
        .map(|(name, outcome)| {
            let mut r = CheckReport::new(name);
            r.examined = 1;
            match outcome {
                Outcome::NotApplicable => {}
                Outcome::Pass => r.applicable = 1,
                Outcome::Violation(inputs) => {
                    r.applicable = 1;
                    r.violations = 1;
                    r.first_counterexample = Some(erw_core::oracle::Counterexample {
                        code: table.code(),
                        table: table.to_text(),
                        inputs,
                    });
                }
            }
            r
        })
        .collect())
}

fn read_table(path: &Path) -> Result<ArrowTable, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read table {}: {e}", path.display())))?;
    text.parse::<ArrowTable>()
        .map_err(|e| Failure::Usage(format!("table {}: {e}", path.display())))
}

fn environment(env: Option<&str>, file: &FileConfig) -> Result<EnvFamilySpec, Failure> {
    match (env, &file.environment) {
        (Some(s), _) => config::parse_env(s).map_err(Failure::Usage),
        (None, Some(spec)) => {
            spec.validate()
                .map_err(|e| Failure::Usage(format!("[environment]: {e}")))?;
            Ok(spec.clone())
        }
        (None, None) => Err(Failure::Usage(
            "no environment: pass --env or an [environment] section in --config".into(),
        )),
    }
}

fn experiment_config(a: &SimArgs, file: &FileConfig, environment: EnvFamilySpec) -> Result<ExperimentConfig, Failure> {
    let e = &file.experiment;
    let cfg = ExperimentConfig {
        environment,
        replicas: a.replicas.or(e.replicas).unwrap_or(DEFAULT_REPLICAS),
        horizon: a.horizon.or(e.horizon).unwrap_or(DEFAULT_HORIZON),
        right_threshold: a
            .right_threshold
            .or(e.right_threshold)
            .unwrap_or(DEFAULT_RIGHT_THRESHOLD),
        return_cutoff: a.return_cutoff.or(e.return_cutoff).unwrap_or(DEFAULT_RETURN_CUTOFF),
        master_seed: effective_seed(&a.common, file),
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn simulate(a: SimArgs, subcommand: &str) -> Result<bool, Failure> {
    let file = load_config(&a.common)?;
    let env = environment(a.env.as_deref(), &file)?;
    let cfg = experiment_config(&a, &file, env)?;
    let exec = exec(&a.common, &file);
    let dir = RunDir::create(&a.common.out, subcommand, cfg.master_seed)?;
    let fail = |e: erw_core::experiments::ExperimentError| Failure::Runtime(e.to_string());

    let (estimates, records, human) = match subcommand {
        "speed" => {
            let run = estimate_speed(&cfg, exec).map_err(fail)?;
            let h = format!("v_hat = {:.6} (stderr {:.6})", run.estimate.v_hat, run.estimate.stderr);
            (json!(run.estimate), run.records, h)
        }
        "transience" => {
            let run = estimate_transience(&cfg, exec).map_err(fail)?;
            let t = &run.estimate;
            let h = format!(
                "p_hat_right = {:.4} ± {:.4}, p_hat_left = {:.4} ± {:.4}, undecided = {:.4}",
                t.p_hat_right, t.half_width_right, t.p_hat_left, t.half_width_left, t.p_hat_undecided
            );
            (json!(run.estimate), run.records, h)
        }
        "recurrence" => {
            let run = estimate_recurrence(&cfg, exec).map_err(fail)?;
            let r = &run.estimate;
            let h = format!(
                "median returns = {}, returning after {} = {:.4} ± {:.4}",
                r.median_returns, r.return_cutoff, r.fraction_returning_after_cutoff, r.half_width
            );
            (json!(run.estimate), run.records, h)
        }
        "zero-one" => {
            let run = zero_one_scan(&cfg, exec).map_err(fail)?;
            let z = &run.estimate;
            let h = format!(
                "p_hat_right = {:.4} at horizon {} ({} rerun): {}",
                z.p_hat_right,
                z.horizon,
                z.reruns,
                if z.inside_zero_one_band {
                    "inside zero-one band"
                } else {
                    "OUTSIDE zero-one band"
                }
            );
            (json!(run.estimate), run.records, h)
        }
        _ => {
            let records = run_replicas(&cfg, exec).map_err(fail)?;
            let t = summarize_transience(&records);
            let r = summarize_recurrence(&records, cfg.return_cutoff);
            let v = summarize_speed(&records);
            let h = format!(
                "p_hat_right = {:.4}, p_hat_left = {:.4}, median returns = {}, v_hat = {:.6} (stderr {:.6})",
                t.p_hat_right, t.p_hat_left, r.median_returns, v.v_hat, v.stderr
            );
            (json!({ "transience": t, "recurrence": r, "speed": v }), records, h)
        }
    };

    println!(
        "{subcommand}: {} replicas of {}, seed {}",
        cfg.replicas,
        cfg.environment.name(),
        cfg.master_seed
    );
    println!("{human}");
    dir.write_records("records.csv", &records)?;
    dir.write_json(
        "summary.json",
        &json!({
            "subcommand": subcommand,
            "estimator": subcommand.replace('-', "_"),
            "seed": cfg.master_seed,
            "config": cfg,
            "estimates": estimates,
        }),
    )?;
    dir.finish(exec)?;
    Ok(true)
}

fn sweep(a: DeltaArgs) -> Result<bool, Failure> {
    let file = load_config(&a.sim.common)?;
    let specs: Vec<EnvFamilySpec> = if !a.specs.is_empty() {
        a.specs
            .iter()
            .map(|s| config::parse_delta_spec(s))
            .collect::<Result<_, _>>()
            .map_err(Failure::Usage)?
    } else {
        let pairs = file
            .delta_sweep
            .specs
            .clone()
            .unwrap_or_else(|| vec![(3, 0.1), (2, 0.4), (2, 0.6), (3, 0.9)]);
        pairs
            .into_iter()
            .map(|(m, p)| {
                let spec = EnvFamilySpec::IidBounded { m, p };
                spec.validate()
                    .map(|_| spec)
                    .map_err(|e| Failure::Usage(format!("[delta_sweep] specs: {e}")))
            })
            .collect::<Result<_, _>>()?
    };
    if specs.is_empty() {
        return Err(Failure::Usage("[delta_sweep] specs is empty".into()));
    }
    let cfg = experiment_config(&a.sim, &file, specs[0].clone())?;
    let exec = exec(&a.sim.common, &file);
    let dir = RunDir::create(&a.sim.common.out, "delta-sweep", cfg.master_seed)?;
    let rows = delta_sweep(&specs, &cfg, exec).map_err(|e| Failure::Runtime(e.to_string()))?;

    println!(
        "delta-sweep: {} replicas per row, seed {}",
        cfg.replicas, cfg.master_seed
    );
    println!("{:>8} {:>10} {:>10} {:>12}", "delta", "p_right", "p_left", "v_hat");
    let mut summary_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let r = &row.estimate;
        let name = match r.environment {
            EnvFamilySpec::IidBounded { m, p } => format!("row-{i}-M{m}-p{p}.csv"),
            _ => format!("row-{i}.csv"),
        };
        dir.write_records(&name, &row.records)?;
        println!(
            "{:>8.3} {:>10.4} {:>10.4} {:>12.6}",
            r.delta, r.p_hat_right, r.p_hat_left, r.v_hat
        );
        summary_rows.push(json!({ "records": name, "row": r }));
    }
    let echo = ExperimentConfig {
        environment: specs[0].clone(),
        ..cfg.clone()
    };
    dir.write_json(
        "summary.json",
        &json!({
            "subcommand": "delta-sweep",
            "estimator": "delta_sweep",
            "seed": cfg.master_seed,
            "config": {
                "replicas": echo.replicas,
                "horizon": echo.horizon,
                "right_threshold": echo.right_threshold,
                "return_cutoff": echo.return_cutoff,
                "master_seed": echo.master_seed,
                "specs": specs,
            },
            "estimates": summary_rows,
        }),
    )?;
    dir.finish(exec)?;
    Ok(true)
}

fn trace(a: TraceArgs) -> Result<bool, Failure> {
    let file = load_config(&a.common)?;
    let seed = effective_seed(&a.common, &file);
    let dir = RunDir::create(&a.common.out, "trace", seed)?;
    let arrows: ArrowEnvironment = match &a.table {
        Some(path) => read_table(path)?.into(),
        None => {
            let spec = environment(a.env.as_deref(), &file)?;
            let cfg = ExperimentConfig::new(spec.with_min_window(a.horizon), seed);
            let (env_seed, u_seed) = cfg.seeds(a.replica);
            let env = build_environment(&cfg.environment, env_seed).map_err(|e| Failure::Usage(e.to_string()))?;
            realize(env, u_seed)
        }
    };
    let stop = match a.target {
        Some(t) => StopRule::target(t, a.horizon),
        None => StopRule::horizon(a.horizon),
    };
    let trace = run_walk(&arrows, a.start, &stop);
    let path: Vec<String> = trace.positions.iter().map(i64::to_string).collect();
    println!("{}", path.join(","));
    let hit = a.target.map(|t| hitting_time(&trace, t));
    if let (Some(t), Some(report)) = (a.target, &hit) {
        match report.time() {
            Some(time) => println!("T_{t}={time}"),
            None => println!("T_{t} not reached within {} steps", a.horizon),
        }
    }
    if a.dump {
        print!("{}", trace.dump());
    }

    fs::write(dir.path.join("trace.txt"), trace.dump())?;
    dir.write_json(
        "summary.json",
        &json!({
            "subcommand": "trace",
            "seed": seed,
            "config": {
                "table": a.table,
                "env": a.env,
                "replica": a.replica,
                "start": a.start,
                "target": a.target,
                "horizon": a.horizon,
            },
            "steps": trace.steps(),
            "final_position": trace.final_position(),
            "hitting_time": hit.and_then(|h| h.time()),
        }),
    )?;
    dir.finish(Exec::Sequential)?;
    Ok(true)
}
