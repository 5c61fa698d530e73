//! Reproducible Monte Carlo estimators.
//!
//! Each replica draws its own environment seed and uniform seed from
//! `(master_seed, replica)`, realizes the environment into arrows and walks
//! from 0 for `horizon` steps. Replicas share nothing, so records are
//! identical under any execution policy.
//!
//! Transience is judged by a finite-horizon proxy: a replica is right-transient
//! if it ends at or beyond `right_threshold` and made no visit to 0 after its
//! last up-crossing of `right_threshold / 2`; left-transient symmetrically;
//! otherwise undecided.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrow_env::realize;
use crate::cookie_env::{build_environment, delta_of, EnvError, EnvFamilySpec};
use crate::exec::Exec;
use crate::keyed::derive_seed;
use crate::walk::Walker;
use crate::zproc::{z_run, Direction, ZStatus, DEFAULT_U_BUDGET};

pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_RIGHT_THRESHOLD: u64 = 1_000;
pub const DEFAULT_RETURN_CUTOFF: u64 = 1_000;
pub const DEFAULT_REPLICAS: u64 = 200;
/// `p_hat_right` must fall in `[0, ZERO_ONE_BAND] ∪ [1 - ZERO_ONE_BAND, 1]`.
pub const ZERO_ONE_BAND: f64 = 0.05;

const STREAM_ENV: u64 = 0;
const STREAM_UNIFORM: u64 = 1;
const Z95: f64 = 1.96;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid environment: {0}")]
    Env(#[from] EnvError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("writing records: {0}")]
    Io(#[from] io::Error),
    #[error("writing records: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Transience,
    Recurrence,
    Speed,
    ZeroOneScan,
    DeltaSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvFamilySpec,
    pub replicas: u64,
    pub horizon: u64,
    pub right_threshold: u64,
    pub return_cutoff: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(environment: EnvFamilySpec, master_seed: u64) -> Self {
        ExperimentConfig {
            environment,
            replicas: DEFAULT_REPLICAS,
            horizon: DEFAULT_HORIZON,
            right_threshold: DEFAULT_RIGHT_THRESHOLD,
            return_cutoff: DEFAULT_RETURN_CUTOFF,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.environment.validate()?;
        if self.replicas == 0 {
            return Err(ExperimentError::Config("replicas must be >= 1".into()));
        }
        if self.right_threshold == 0 {
            return Err(ExperimentError::Config("right_threshold must be >= 1".into()));
        }
        if self.horizon < self.return_cutoff {
            return Err(ExperimentError::Config(format!(
                "horizon ({}) must be >= return_cutoff ({})",
                self.horizon, self.return_cutoff
            )));
        }
        if self.horizon == 0 {
            return Err(ExperimentError::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// `(environment seed, uniform seed)` of a replica.
    pub fn seeds(&self, replica: u64) -> (u64, u64) {
        (
            derive_seed(self.master_seed, replica, STREAM_ENV),
            derive_seed(self.master_seed, replica, STREAM_UNIFORM),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransienceClass {
    Right,
    Left,
    Undecided,
}

/// Outcome of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub replica: u64,
    pub env_seed: u64,
    pub u_seed: u64,
    pub final_x: i64,
    /// First hitting time of -1.
    pub t_minus1: Option<u64>,
    /// Last step `t >= 1` with `X_t = 0`.
    pub last_return: Option<u64>,
    /// Number of steps `t >= 1` with `X_t = 0`.
    pub returns: u64,
    /// `X_horizon / horizon`.
    pub speed: f64,
    #[serde(skip)]
    pub class: Option<TransienceClass>,
}

impl ResultRecord {
    pub fn class(&self) -> TransienceClass {
        self.class.unwrap_or(TransienceClass::Undecided)
    }
}

pub fn run_replica(cfg: &ExperimentConfig, replica: u64) -> Result<ResultRecord, ExperimentError> {
    let (env_seed, u_seed) = cfg.seeds(replica);
    let env = build_environment(&cfg.environment.with_min_window(cfg.horizon), env_seed)?;
    let arrows = realize(env, u_seed);
    let mut walker = Walker::new(&arrows, 0, cfg.horizon);

    let r = cfg.right_threshold as i64;
    let half = (r / 2).max(1);
    let mut t_minus1 = None;
    let mut last_return = None;
    let mut returns = 0u64;
    let mut last_up_half = None;
    let mut last_down_half = None;
    for t in 1..=cfg.horizon {
        let step = walker.step();
        let x = walker.position;
        match x {
            0 => {
                returns += 1;
                last_return = Some(t);
            }
            -1 if t_minus1.is_none() => t_minus1 = Some(t),
            _ => {}
        }
        if step.right && x == half {
            last_up_half = Some(t);
        } else if !step.right && x == -half {
            last_down_half = Some(t);
        }
    }
    let final_x = walker.position;
    let quiet_since = |crossing: Option<u64>| match (crossing, last_return) {
        (Some(c), Some(z)) => z < c,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let class = if final_x >= r && quiet_since(last_up_half) {
        TransienceClass::Right
    } else if final_x <= -r && quiet_since(last_down_half) {
        TransienceClass::Left
    } else {
        TransienceClass::Undecided
    };
    Ok(ResultRecord {
        replica,
        env_seed,
        u_seed,
        final_x,
        t_minus1,
        last_return,
        returns,
        speed: final_x as f64 / cfg.horizon as f64,
        class: Some(class),
    })
}

/// All replicas of `cfg`, ordered by replica id.
pub fn run_replicas(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<ResultRecord>, ExperimentError> {
    cfg.validate()?;
    exec.map_collect(0..cfg.replicas, |r| run_replica(cfg, r))
        .into_iter()
        .collect()
}

/// Normal-approximation 95% half-width with a floor of `1/n`.
pub fn half_width(p: f64, n: u64) -> f64 {
    let n = n as f64;
    (Z95 * (p * (1.0 - p) / n).sqrt()).max(1.0 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransienceEstimate {
    pub p_hat_right: f64,
    pub p_hat_left: f64,
    pub p_hat_undecided: f64,
    pub half_width_right: f64,
    pub half_width_left: f64,
    pub half_width_undecided: f64,
    pub replicas: u64,
}

pub fn summarize_transience(records: &[ResultRecord]) -> TransienceEstimate {
    let n = records.len() as u64;
    let freq = |c: TransienceClass| records.iter().filter(|r| r.class() == c).count() as f64 / n as f64;
    let (right, left, undecided) = (
        freq(TransienceClass::Right),
        freq(TransienceClass::Left),
        freq(TransienceClass::Undecided),
    );
    TransienceEstimate {
        p_hat_right: right,
        p_hat_left: left,
        p_hat_undecided: undecided,
        half_width_right: half_width(right, n),
        half_width_left: half_width(left, n),
        half_width_undecided: half_width(undecided, n),
        replicas: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEstimate {
    pub median_returns: f64,
    /// Fraction of replicas with a visit to 0 after `return_cutoff`.
    pub fraction_returning_after_cutoff: f64,
    pub half_width: f64,
    pub return_cutoff: u64,
    pub replicas: u64,
}

pub fn summarize_recurrence(records: &[ResultRecord], return_cutoff: u64) -> RecurrenceEstimate {
    let n = records.len() as u64;
    let mut returns: Vec<u64> = records.iter().map(|r| r.returns).collect();
    returns.sort_unstable();
    let mid = returns.len() / 2;
    let median_returns = if returns.is_empty() {
        0.0
    } else if returns.len() % 2 == 1 {
        returns[mid] as f64
    } else {
        (returns[mid - 1] + returns[mid]) as f64 / 2.0
    };
    let late = records
        .iter()
        .filter(|r| r.last_return.is_some_and(|t| t > return_cutoff))
        .count();
    let frac = late as f64 / n as f64;
    RecurrenceEstimate {
        median_returns,
        fraction_returning_after_cutoff: frac,
        half_width: half_width(frac, n),
        return_cutoff,
        replicas: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub v_hat: f64,
    pub stderr: f64,
    pub replicas: u64,
}

pub fn summarize_speed(records: &[ResultRecord]) -> SpeedEstimate {
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.speed).sum::<f64>() / n;
    let stderr = if records.len() > 1 {
        let var = records.iter().map(|r| (r.speed - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    SpeedEstimate {
        v_hat: mean,
        stderr,
        replicas: records.len() as u64,
    }
}

/// An estimate together with the records it was computed from.
#[derive(Debug, Clone)]
pub struct Run<T> {
    pub estimate: T,
    pub records: Vec<ResultRecord>,
}

pub fn estimate_transience(cfg: &ExperimentConfig, exec: Exec) -> Result<Run<TransienceEstimate>, ExperimentError> {
    let records = run_replicas(cfg, exec)?;
    Ok(Run {
        estimate: summarize_transience(&records),
        records,
    })
}

pub fn estimate_recurrence(cfg: &ExperimentConfig, exec: Exec) -> Result<Run<RecurrenceEstimate>, ExperimentError> {
    let records = run_replicas(cfg, exec)?;
    Ok(Run {
        estimate: summarize_recurrence(&records, cfg.return_cutoff),
        records,
    })
}

pub fn estimate_speed(cfg: &ExperimentConfig, exec: Exec) -> Result<Run<SpeedEstimate>, ExperimentError> {
    let records = run_replicas(cfg, exec)?;
    Ok(Run {
        estimate: summarize_speed(&records),
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroOneVerdict {
    pub p_hat_right: f64,
    pub inside_zero_one_band: bool,
    /// Horizon of the run the verdict is based on.
    pub horizon: u64,
    pub reruns: u32,
    pub transience: TransienceEstimate,
}

pub fn in_zero_one_band(p: f64) -> bool {
    p <= ZERO_ONE_BAND || p >= 1.0 - ZERO_ONE_BAND
}

/// Transience estimate checked against the zero-one band; an out-of-band
/// result is rerun once at twice the horizon before it is reported.
pub fn zero_one_scan(cfg: &ExperimentConfig, exec: Exec) -> Result<Run<ZeroOneVerdict>, ExperimentError> {
    let mut cfg = cfg.clone();
    let mut reruns = 0;
    loop {
        let run = estimate_transience(&cfg, exec)?;
        let p = run.estimate.p_hat_right;
        let inside = in_zero_one_band(p);
        if inside || reruns == 1 {
            let verdict = ZeroOneVerdict {
                p_hat_right: p,
                inside_zero_one_band: inside,
                horizon: cfg.horizon,
                reruns,
                transience: run.estimate,
            };
            return Ok(Run {
                estimate: verdict,
                records: run.records,
            });
        }
        cfg.horizon *= 2;
        reruns += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub environment: EnvFamilySpec,
    pub p_hat_right: f64,
    pub p_hat_left: f64,
    pub half_width_right: f64,
    pub half_width_left: f64,
    pub v_hat: f64,
    pub v_stderr: f64,
}

/// One row per `iid_bounded` spec, sorted by the exact delta. Every row uses
/// the master seed of `base`, so rows share their uniforms.
pub fn delta_sweep(
    specs: &[EnvFamilySpec],
    base: &ExperimentConfig,
    exec: Exec,
) -> Result<Vec<Run<DeltaRow>>, ExperimentError> {
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        if !matches!(spec, EnvFamilySpec::IidBounded { .. }) {
            return Err(ExperimentError::Config(format!(
                "delta sweep accepts only iid_bounded specs, got {}",
                spec.name()
            )));
        }
        let cfg = ExperimentConfig {
            environment: spec.clone(),
            ..base.clone()
        };
        let records = run_replicas(&cfg, exec)?;
        let t = summarize_transience(&records);
        let v = summarize_speed(&records);
        let row = DeltaRow {
            delta: delta_of(spec)?.value,
            environment: spec.clone(),
            p_hat_right: t.p_hat_right,
            p_hat_left: t.p_hat_left,
            half_width_right: t.half_width_right,
            half_width_left: t.half_width_left,
            v_hat: v.v_hat,
            v_stderr: v.stderr,
        };
        rows.push(Run { estimate: row, records });
    }
    rows.sort_by(|a, b| a.estimate.delta.total_cmp(&b.estimate.delta));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalCrossCheck {
    pub replicas: u64,
    /// Replicas where both the walk and `Z+` produced a definite verdict.
    pub both_decided: u64,
    pub agreements: u64,
    pub disagreements: u64,
}

/// Compares the walk's `T_{-1}` with the extinction of `Z+` (started at 1) on
/// the same realized arrows, replica by replica. When the walk hits -1 with
/// maximum `M`, `Z+` must die exactly at `M + 1`; when `Z+` dies at `tau`, the
/// walk may not pass `tau - 1` before hitting -1.
pub fn survival_cross_check(
    cfg: &ExperimentConfig,
    z_steps: u64,
    exec: Exec,
) -> Result<SurvivalCrossCheck, ExperimentError> {
    cfg.validate()?;
    let verdicts: Vec<Result<Option<bool>, ExperimentError>> = exec.map_collect(0..cfg.replicas, |replica| {
        let (env_seed, u_seed) = cfg.seeds(replica);
        let env = build_environment(&cfg.environment.with_min_window(cfg.horizon), env_seed)?;
        let arrows = realize(env, u_seed);
        let mut walker = Walker::new(&arrows, 0, cfg.horizon);
        let mut max = 0i64;
        let mut hit = false;
        for _ in 0..cfg.horizon {
            walker.step();
            if walker.position == -1 {
                hit = true;
                break;
            }
            max = max.max(walker.position);
        }
        // Steps past max + 1 cannot change the verdict.
        let steps = z_steps.min(max as u64 + 1);
        let z = z_run(&arrows, Direction::Plus, 1, steps, DEFAULT_U_BUDGET).expect("start value 1");
        Ok(match (hit, z.status) {
            (true, ZStatus::ExtinctAt(tau)) => Some(tau == (max + 1) as u64),
            (true, ZStatus::AliveAt(n)) if n > max as u64 => Some(false),
            (false, ZStatus::ExtinctAt(tau)) if max >= tau as i64 => Some(false),
            _ => None,
        })
    });
    let mut out = SurvivalCrossCheck {
        replicas: cfg.replicas,
        both_decided: 0,
        agreements: 0,
        disagreements: 0,
    };
    for v in verdicts {
        match v? {
            Some(true) => {
                out.both_decided += 1;
                out.agreements += 1;
            }
            Some(false) => {
                out.both_decided += 1;
                out.disagreements += 1;
            }
            None => {}
        }
    }
    Ok(out)
}

pub const RECORDS_HEADER: [&str; 8] = [
    "replica",
    "env_seed",
    "u_seed",
    "final_x",
    "t_minus1",
    "last_return",
    "returns",
    "speed",
];

/// Writes records as CSV with the fixed header; absent values are empty.
pub fn write_records_csv<W: io::Write>(records: &[ResultRecord], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER)?;
    let opt = |v: Option<u64>| v.map(|t| t.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.replica.to_string(),
            r.env_seed.to_string(),
            r.u_seed.to_string(),
            r.final_x.to_string(),
            opt(r.t_minus1),
            opt(r.last_return),
            r.returns.to_string(),
            r.speed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
