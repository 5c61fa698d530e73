//! Exhaustive checks of the deterministic walk / `Z` identities.
//!
//! Every arrow table on a window of sites with a fixed explicit depth is
//! enumerated (alternating tails attached) and each identity is asserted on the
//! tables where its hypothesis is established by finite computation. Reports
//! merge by adding counters; the kept counterexample is the one with the
//! smallest enumeration code, so reruns agree under any schedule.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::arrow_env::{realize, ArrowEnvironment, ArrowTable, TailedColumn};
use crate::cookie_env::{build_environment, EnvError, EnvFamilySpec};
use crate::exec::Exec;
use crate::keyed::derive_seed;
use crate::walk::{crossings, max_before_hit, run_walk, MaxBeforeHit, StopRule, Termination, VisitCounters, WalkTrace};
use crate::zproc::{
    check_subduality, extinction_time, u_minus, u_plus, z_run, Direction, Subduality, UResult, ZStatus,
    DEFAULT_U_BUDGET,
};

/// Largest table size enumerated without an explicit override.
pub const DEFAULT_MAX_BITS: u32 = 24;
/// Total-variation threshold of the coupling law check.
pub const COUPLING_TV_THRESHOLD: f64 = 0.02;
/// Minimum applicable fraction of the Z = W sweep on the default window.
pub const MIN_Z_EQUALS_W_APPLICABILITY: f64 = 0.60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration needs {bits} bits, above the limit of {limit}")]
    TooManyBits { bits: u64, limit: u32 },
    #[error("window [{lo},{hi}] with depth {depth} is empty")]
    Empty { lo: i64, hi: i64, depth: u32 },
    #[error("coupling check needs at least 10000 samples (got {0})")]
    TooFewSamples(u64),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub code: u64,
    /// The table in its plain-text form.
    pub table: String,
    pub inputs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub examined: u64,
    pub applicable: u64,
    pub violations: u64,
    pub first_counterexample: Option<Counterexample>,
    /// Test statistic, for statistical checks.
    pub statistic: Option<f64>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            examined: 0,
            applicable: 0,
            violations: 0,
            first_counterexample: None,
            statistic: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn applicability(&self) -> f64 {
        if self.examined == 0 {
            0.0
        } else {
            self.applicable as f64 / self.examined as f64
        }
    }

    /// Commutative merge of two partial reports of the same check.
    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.examined += other.examined;
        self.applicable += other.applicable;
        self.violations += other.violations;
        self.first_counterexample = match (self.first_counterexample, other.first_counterexample) {
            (Some(a), Some(b)) => Some(if b.code < a.code { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    fn record(&mut self, outcome: Outcome, table: &ArrowTable) {
        self.examined += 1;
        match outcome {
            Outcome::NotApplicable => {}
            Outcome::Pass => self.applicable += 1,
            Outcome::Violation(inputs) => {
                self.applicable += 1;
                self.violations += 1;
                let code = table.code();
                if self.first_counterexample.as_ref().is_none_or(|c| code < c.code) {
                    self.first_counterexample = Some(Counterexample {
                        code,
                        table: table.to_text(),
                        inputs,
                    });
                }
            }
        }
    }
}

/// `name examined applicable violations`
impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.name, self.examined, self.applicable, self.violations
        )
    }
}

/// Result of one check instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    NotApplicable,
    Pass,
    Violation(String),
}

/// All tables on `[lo, hi]` with explicit depth `depth`, in code order.
#[derive(Debug, Clone)]
pub struct TableEnumeration {
    lo: i64,
    hi: i64,
    depth: u32,
    next: u64,
    count: u64,
}

impl TableEnumeration {
    pub fn total(&self) -> u64 {
        self.count
    }

    pub fn table(&self, code: u64) -> ArrowTable {
        ArrowTable::from_code(self.lo, self.hi, self.depth, code).expect("validated at construction")
    }
}

impl Iterator for TableEnumeration {
    type Item = ArrowTable;

    fn next(&mut self) -> Option<ArrowTable> {
        (self.next < self.count).then(|| {
            self.next += 1;
            self.table(self.next - 1)
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for TableEnumeration {}

pub fn enumerate_tables(lo: i64, hi: i64, depth: u32, max_bits: u32) -> Result<TableEnumeration, OracleError> {
    if hi < lo || depth == 0 {
        return Err(OracleError::Empty { lo, hi, depth });
    }
    let bits = (hi - lo + 1) as u64 * depth as u64;
    if bits > max_bits.min(63) as u64 {
        return Err(OracleError::TooManyBits { bits, limit: max_bits });
    }
    Ok(TableEnumeration {
        lo,
        hi,
        depth,
        next: 0,
        count: 1u64 << bits,
    })
}

/// Parameters shared by the table sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub lo: i64,
    pub hi: i64,
    pub depth: u32,
    /// Step budget of each walk.
    pub horizon: u64,
    pub max_bits: u32,
    pub exec: Exec,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            lo: 0,
            hi: 3,
            depth: 4,
            horizon: 10_000,
            max_bits: DEFAULT_MAX_BITS,
            exec: Exec::Parallel,
        }
    }
}

impl Sweep {
    fn run(
        &self,
        name: &str,
        per_table: impl Fn(&ArrowTable, &mut CheckReport) + Sync + Send,
    ) -> Result<CheckReport, OracleError> {
        let tables = enumerate_tables(self.lo, self.hi, self.depth, self.max_bits)?;
        let count = tables.total();
        Ok(self.exec.fold_reduce(
            0..count,
            || CheckReport::new(name),
            |mut report, code| {
                per_table(&tables.table(code), &mut report);
                report
            },
            CheckReport::merge,
        ))
    }

    /// Number of `Z` steps that covers every column of the window.
    fn z_steps(&self) -> u64 {
        (self.hi.max(0) + 2) as u64
    }
}

/// What the walk from 0 does on a finite table, as far as the table decides it.
#[derive(Debug, Clone)]
pub enum Fate {
    /// Hit -1 without leaving the window.
    HitsMinusOne {
        trace: WalkTrace,
        hit: u64,
        max: i64,
    },
    /// Left the window to the right onto fresh sites whose first arrow points
    /// right, so it never comes back.
    TransientRight {
        trace: WalkTrace,
        exit: i64,
    },
    Undetermined,
}

pub fn classify(table: &ArrowTable, horizon: u64) -> Fate {
    let (lo, hi) = table.window();
    let a = ArrowEnvironment::from(table.clone());
    let trace = run_walk(&a, 0, &StopRule::target(-1, horizon).with_window(lo, hi));
    match trace.termination {
        Termination::HitTarget { step, .. } => match max_before_hit(&trace) {
            MaxBeforeHit::Finite(max) => Fate::HitsMinusOne { trace, hit: step, max },
            MaxBeforeHit::UnboundedWithinHorizon => Fate::Undetermined,
        },
        Termination::LeftWindow { .. } => {
            let exit = trace.final_position();
            if exit == hi + 1 && table.bit(exit, 1) {
                Fate::TransientRight { trace, exit }
            } else {
                Fate::Undetermined
            }
        }
        Termination::HorizonExhausted => Fate::Undetermined,
    }
}

/// `Z+_n = W_n` when the walk hits -1, `Z+_n >= W_n` along a deterministic
/// rightward escape.
pub fn z_equals_w_on(table: &ArrowTable, horizon: u64, z_steps: u64) -> Outcome {
    let a = ArrowEnvironment::from(table.clone());
    match classify(table, horizon) {
        Fate::HitsMinusOne { trace, hit, max } => {
            let w = crossings(&trace, hit);
            let n_max = (max + 1) as usize;
            let z = match z_run(&a, Direction::Plus, 1, n_max as u64, DEFAULT_U_BUDGET) {
                Ok(z) => z,
                Err(_) => return Outcome::NotApplicable,
            };
            for n in 0..=n_max {
                match z.value_at(n) {
                    Some(zn) if zn == w.get(n) => {}
                    Some(zn) => return Outcome::Violation(format!("n={n} Z={zn} W={}", w.get(n))),
                    None => return Outcome::NotApplicable,
                }
            }
            Outcome::Pass
        }
        Fate::TransientRight { trace, exit } => {
            let w = crossings(&trace, trace.steps());
            let z = match z_run(&a, Direction::Plus, 1, z_steps.max(exit as u64), DEFAULT_U_BUDGET) {
                Ok(z) => z,
                Err(_) => return Outcome::NotApplicable,
            };
            for n in 0..=exit as usize {
                match z.value_at(n) {
                    Some(zn) if zn >= w.get(n) => {}
                    Some(zn) => return Outcome::Violation(format!("n={n} Z={zn} < W={}", w.get(n))),
                    None => return Outcome::NotApplicable,
                }
            }
            Outcome::Pass
        }
        Fate::Undetermined => Outcome::NotApplicable,
    }
}

/// Walk hits -1 iff `Z+` from 1 dies within the window.
pub fn survival_equivalence_on(table: &ArrowTable, horizon: u64, z_steps: u64) -> Outcome {
    let a = ArrowEnvironment::from(table.clone());
    let fate = classify(table, horizon);
    if matches!(fate, Fate::Undetermined) {
        return Outcome::NotApplicable;
    }
    let z = match z_run(&a, Direction::Plus, 1, z_steps, DEFAULT_U_BUDGET) {
        Ok(z) => z,
        Err(_) => return Outcome::NotApplicable,
    };
    let extinct = match z.status {
        ZStatus::ExtinctAt(_) => true,
        ZStatus::AliveAt(_) => false,
        ZStatus::BudgetExhaustedInU => return Outcome::NotApplicable,
    };
    match (fate, extinct) {
        (Fate::HitsMinusOne { .. }, true) | (Fate::TransientRight { .. }, false) => Outcome::Pass,
        (Fate::HitsMinusOne { hit, .. }, false) => {
            Outcome::Violation(format!("T_-1={hit} but Z+ alive after {z_steps} steps"))
        }
        (Fate::TransientRight { exit, .. }, true) => Outcome::Violation(format!(
            "walk escaped at {exit} but Z+ extinct at {:?}",
            extinction_time(&z)
        )),
        (Fate::Undetermined, _) => Outcome::NotApplicable,
    }
}

/// `tau = M + 1` whenever -1 is hit.
pub fn tau_on(table: &ArrowTable, horizon: u64) -> Outcome {
    let Fate::HitsMinusOne { max, .. } = classify(table, horizon) else {
        return Outcome::NotApplicable;
    };
    let a = ArrowEnvironment::from(table.clone());
    let z = match z_run(&a, Direction::Plus, 1, (max + 2) as u64, DEFAULT_U_BUDGET) {
        Ok(z) => z,
        Err(_) => return Outcome::NotApplicable,
    };
    match extinction_time(&z) {
        Some(tau) if tau == (max + 1) as u64 => Outcome::Pass,
        other => Outcome::Violation(format!("tau={other:?} M={max}")),
    }
}

pub fn check_z_equals_w(sweep: &Sweep) -> Result<CheckReport, OracleError> {
    let z_steps = sweep.z_steps();
    sweep.run("z_equals_w", |t, r| {
        r.record(z_equals_w_on(t, sweep.horizon, z_steps), t)
    })
}

pub fn check_survival_equivalence(sweep: &Sweep) -> Result<CheckReport, OracleError> {
    let z_steps = sweep.z_steps();
    sweep.run("survival_equivalence", |t, r| {
        r.record(survival_equivalence_on(t, sweep.horizon, z_steps), t)
    })
}

pub fn check_tau_eq_m_plus_one(sweep: &Sweep) -> Result<CheckReport, OracleError> {
    sweep.run("tau_eq_m_plus_one", |t, r| r.record(tau_on(t, sweep.horizon), t))
}

pub fn check_subduality_sweep(sweep: &Sweep, max_xyl: u64) -> Result<CheckReport, OracleError> {
    sweep.run("subduality", |t, r| {
        let a = ArrowEnvironment::from(t.clone());
        for x in 1..=max_xyl {
            for y in 1..=max_xyl {
                for l in 1..=max_xyl {
                    let outcome = match check_subduality(&a, x, y, l, DEFAULT_U_BUDGET) {
                        Subduality::Holds => Outcome::Pass,
                        Subduality::NotApplicable => Outcome::NotApplicable,
                        Subduality::Violated { z_plus_l, z_minus_l } => {
                            Outcome::Violation(format!("x={x} y={y} l={l} Z+_l={z_plus_l} Z-_l={z_minus_l}"))
                        }
                    };
                    r.record(outcome, t);
                }
            }
        }
    })
}

/// `Z-` on `a` equals `Z+` on the reflection of `a`, step by step.
pub fn check_reflection_duality(sweep: &Sweep, max_y: u64) -> Result<CheckReport, OracleError> {
    let steps = sweep.z_steps();
    sweep.run("reflection_duality", |t, r| {
        let a = ArrowEnvironment::from(t.clone());
        let reflected = a.reflect();
        for y in 1..=max_y {
            let minus = z_run(&a, Direction::Minus, y, steps, DEFAULT_U_BUDGET).expect("y >= 1");
            let plus = z_run(&reflected, Direction::Plus, y, steps, DEFAULT_U_BUDGET).expect("y >= 1");
            let outcome = if minus.values == plus.values && minus.status == plus.status {
                Outcome::Pass
            } else {
                Outcome::Violation(format!("y={y} Z-={:?} Z+(reflected)={:?}", minus.values, plus.values))
            };
            r.record(outcome, t);
        }
    })
}

/// Monotonicity of `U+`/`U-` and both strict composition bounds over every
/// column of the given depth (alternating tails) and `0 <= x <= depth + 2`.
pub fn check_u_properties(depth: u32) -> Result<CheckReport, OracleError> {
    if depth > DEFAULT_MAX_BITS {
        return Err(OracleError::TooManyBits {
            bits: depth as u64,
            limit: DEFAULT_MAX_BITS,
        });
    }
    let x_max = depth as u64 + 2;
    let budget = DEFAULT_U_BUDGET;
    let mut report = CheckReport::new("u_properties");
    for code in 0..(1u64 << depth) {
        let table = ArrowTable::from_code(0, 0, depth, code).map_err(|_| OracleError::Empty { lo: 0, hi: 0, depth })?;
        let bits = table.prefix(0).to_vec();
        let col = TailedColumn(&bits);
        let plus: Vec<u64> = (0..=x_max).map(|x| finite(u_plus(&col, x, budget))).collect();
        let minus: Vec<u64> = (0..=x_max).map(|x| finite(u_minus(&col, x, budget))).collect();
        for x in 0..=x_max as usize {
            for (name, values) in [("U+", &plus), ("U-", &minus)] {
                let outcome = if x as u64 == x_max {
                    Outcome::NotApplicable
                } else {
                    match values[x + 1..].iter().find(|&&later| later < values[x]) {
                        None => Outcome::Pass,
                        Some(v) => Outcome::Violation(format!("{name} not monotone at x={x}: {} > {v}", values[x])),
                    }
                };
                report.record(outcome, &table);
            }
            let composed = [
                ("U+(U-(x))", finite(u_plus(&col, minus[x], budget))),
                ("U-(U+(x))", finite(u_minus(&col, plus[x], budget))),
            ];
            for (name, value) in composed {
                let outcome = if x == 0 {
                    Outcome::NotApplicable
                } else if value < x as u64 {
                    Outcome::Pass
                } else {
                    Outcome::Violation(format!("{name}={value} >= x={x}"))
                };
                report.record(outcome, &table);
            }
        }
    }
    Ok(report)
}

fn finite(u: UResult) -> u64 {
    u.finite().expect("alternating tails keep every transform finite")
}

/// Total-variation distance between the laws of `X_steps` under direct cookie
/// sampling and under the walk on realized arrows.
pub fn check_coupling_law(
    profile: &[f64],
    samples: u64,
    steps: u64,
    seed: u64,
    exec: Exec,
) -> Result<CheckReport, OracleError> {
    if samples < 10_000 {
        return Err(OracleError::TooFewSamples(samples));
    }
    let spec = EnvFamilySpec::ConstantProfile {
        profile: profile.to_vec(),
    };
    let env = std::sync::Arc::new(build_environment(&spec, seed)?);
    let width = 2 * steps as usize + 1;
    let histogram = |direct: bool| {
        exec.fold_reduce(
            0..samples,
            || vec![0u64; width],
            |mut h, s| {
                let x = if direct {
                    direct_walk(&env, steps, derive_seed(seed, s, 1))
                } else {
                    let a = realize(env.clone(), derive_seed(seed, s, 2));
                    run_walk(&a, 0, &StopRule::horizon(steps)).final_position()
                };
                h[(x + steps as i64) as usize] += 1;
                h
            },
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
    };
    let direct = histogram(true);
    let arrows = histogram(false);
    let tv = total_variation(&direct, &arrows, samples);
    let mut report = CheckReport::new("coupling_law");
    report.examined = samples;
    report.applicable = samples;
    report.violations = (tv > COUPLING_TV_THRESHOLD) as u64;
    report.statistic = Some(tv);
    Ok(report)
}

/// One cookie walk sampled step by step with a sequential generator.
fn direct_walk(env: &crate::cookie_env::CookieEnvironment, steps: u64, seed: u64) -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counters = VisitCounters::around(0, steps);
    let mut x = 0i64;
    for _ in 0..steps {
        let k = counters.bump(x);
        let p = env.cookie(x, k);
        x += if rng.random::<f64>() < p { 1 } else { -1 };
    }
    x
}

pub fn total_variation(a: &[u64], b: &[u64], samples: u64) -> f64 {
    let n = samples as f64;
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&p, &q)| (p as f64 / n - q as f64 / n).abs())
        .sum::<f64>()
}

/// The five default sweeps: Z = W, survival equivalence, `tau = M + 1`,
/// U-transform properties and subduality.
pub fn default_suite(sweep: &Sweep, u_depth: u32, max_xyl: u64) -> Result<Vec<CheckReport>, OracleError> {
    Ok(vec![
        check_z_equals_w(sweep)?,
        check_survival_equivalence(sweep)?,
        check_tau_eq_m_plus_one(sweep)?,
        check_u_properties(u_depth)?,
        check_subduality_sweep(sweep, max_xyl)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(lo: i64, hi: i64, depth: u32) -> Sweep {
        Sweep {
            lo,
            hi,
            depth,
            ..Sweep::default()
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_tables(0, 0, 2, 24).unwrap().len(), 4);
        assert_eq!(enumerate_tables(0, 1, 2, 24).unwrap().len(), 16);
        assert_eq!(enumerate_tables(0, 3, 4, 24).unwrap().total(), 65_536);
        assert_eq!(
            enumerate_tables(0, 4, 5, 24).unwrap_err(),
            OracleError::TooManyBits { bits: 25, limit: 24 }
        );
    }

    #[test]
    fn enumeration_is_exhaustive_without_duplicates() {
        let mut seen = std::collections::HashSet::new();
        for t in enumerate_tables(-1, 1, 3, 24).unwrap() {
            assert!(seen.insert(t.to_text()));
        }
        assert_eq!(seen.len(), 512);
    }

    #[test]
    fn hand_table_identities() {
        let t = ArrowTable::from_columns(0, &[&[1, 0], &[0, 1]]).unwrap();
        match classify(&t, 100) {
            Fate::HitsMinusOne { hit, max, .. } => assert_eq!((hit, max), (3, 1)),
            other => panic!("{other:?}"),
        }
        assert_eq!(z_equals_w_on(&t, 100, 3), Outcome::Pass);
        assert_eq!(survival_equivalence_on(&t, 100, 3), Outcome::Pass);
        assert_eq!(tau_on(&t, 100), Outcome::Pass);
    }

    #[test]
    fn immediate_left_table() {
        let t = ArrowTable::from_columns(0, &[&[0, 0]]).unwrap();
        assert!(matches!(classify(&t, 10), Fate::HitsMinusOne { hit: 1, max: 0, .. }));
        assert_eq!(z_equals_w_on(&t, 10, 2), Outcome::Pass);
        assert_eq!(tau_on(&t, 10), Outcome::Pass);
    }

    #[test]
    fn transient_branch() {
        let t = ArrowTable::uniform(&[1, 0]).unwrap();
        assert!(matches!(classify(&t, 100), Fate::TransientRight { exit: 1, .. }));
        assert_eq!(z_equals_w_on(&t, 100, 3), Outcome::Pass);
        assert_eq!(survival_equivalence_on(&t, 100, 3), Outcome::Pass);
        assert_eq!(tau_on(&t, 100), Outcome::NotApplicable);

        // wander inside the window first, then escape
        let t = ArrowTable::from_columns(0, &[&[1, 1], &[0, 1]])
            .unwrap()
            .with_outside(&[1]);
        assert!(matches!(classify(&t, 100), Fate::TransientRight { exit: 2, .. }));
        assert_eq!(z_equals_w_on(&t, 100, 3), Outcome::Pass);
        assert_eq!(survival_equivalence_on(&t, 100, 3), Outcome::Pass);
    }

    #[test]
    fn broken_identity_is_caught() {
        let mut r = CheckReport::new("x");
        let t = ArrowTable::from_columns(0, &[&[1]]).unwrap();
        r.record(Outcome::Violation("boom".into()), &t);
        r.record(Outcome::Pass, &t);
        r.record(Outcome::NotApplicable, &t);
        assert_eq!((r.examined, r.applicable, r.violations), (3, 2, 1));
        assert_eq!(r.to_string(), "x 3 2 1");
        assert_eq!(r.first_counterexample.unwrap().table, "0: 1\n");
    }

    #[test]
    fn merge_keeps_smallest_code() {
        let t1 = ArrowTable::from_code(0, 0, 3, 5).unwrap();
        let t2 = ArrowTable::from_code(0, 0, 3, 2).unwrap();
        let mut a = CheckReport::new("c");
        a.record(Outcome::Violation("a".into()), &t1);
        let mut b = CheckReport::new("c");
        b.record(Outcome::Violation("b".into()), &t2);
        let ab = a.clone().merge(b.clone());
        let ba = b.merge(a);
        assert_eq!(ab, ba);
        assert_eq!(ab.first_counterexample.unwrap().code, 2);
    }

    #[test]
    fn small_sweeps_are_clean_and_schedule_independent() {
        let s = small(0, 2, 3);
        let seq = Sweep {
            exec: Exec::Sequential,
            ..s
        };
        for (a, b) in [
            (check_z_equals_w(&s).unwrap(), check_z_equals_w(&seq).unwrap()),
            (
                check_survival_equivalence(&s).unwrap(),
                check_survival_equivalence(&seq).unwrap(),
            ),
            (
                check_tau_eq_m_plus_one(&s).unwrap(),
                check_tau_eq_m_plus_one(&seq).unwrap(),
            ),
            (
                check_subduality_sweep(&s, 3).unwrap(),
                check_subduality_sweep(&seq, 3).unwrap(),
            ),
            (
                check_reflection_duality(&small(-2, 0, 3), 3).unwrap(),
                check_reflection_duality(
                    &Sweep {
                        exec: Exec::Sequential,
                        ..small(-2, 0, 3)
                    },
                    3,
                )
                .unwrap(),
            ),
        ] {
            assert_eq!(a, b);
            assert!(a.passed(), "{a}");
            assert_eq!(a.examined % 512, 0);
            assert!(a.applicable > 0, "{a}");
        }
    }

    #[test]
    fn u_properties_small_depth() {
        let r = check_u_properties(4).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.examined, 16 * 7 * 4);
        // x = 0 composition and x = x_max monotonicity are vacuous
        assert_eq!(r.applicable, 16 * 7 * 4 - 16 * 4);
    }

    #[test]
    fn coupling_degenerate_profiles() {
        let r = check_coupling_law(&[0.999; 20], 10_000, 20, 1, Exec::Parallel).unwrap();
        assert!(r.statistic.unwrap() < 0.01, "{r:?}");
        // sampling noise of the TV distance at 1e4 samples is about 0.02
        let r = check_coupling_law(&[0.5], 10_000, 20, 2, Exec::Parallel).unwrap();
        assert!(r.statistic.unwrap() < 0.05, "{r:?}");
        assert!(check_coupling_law(&[0.5], 100, 20, 2, Exec::Parallel).is_err());
    }
}
