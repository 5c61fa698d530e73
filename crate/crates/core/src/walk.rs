//! The excited walk on an arrow environment.
//!
//! A walker at site `x` consuming its `k`-th visit there steps right iff
//! `a(x, k) = 1`. The environment is never mutated: visit counters live in the
//! walker, so independent runs on the same environment each start fresh.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use crate::arrow_env::ArrowEnvironment;

/// Per-site visit counters on a contiguous block that grows on demand.
#[derive(Debug, Clone)]
pub(crate) struct VisitCounters {
    lo: i64,
    counts: Vec<u32>,
}

impl VisitCounters {
    pub(crate) fn around(center: i64, radius: u64) -> Self {
        let r = radius.min(1 << 20) as i64;
        VisitCounters {
            lo: center - r,
            counts: vec![0; (2 * r + 1) as usize],
        }
    }

    #[inline]
    fn grow_to(&mut self, x: i64) {
        let len = self.counts.len() as i64;
        if x < self.lo {
            let extra = (self.lo - x).max(len) as usize;
            let mut grown = vec![0; extra + self.counts.len()];
            grown[extra..].copy_from_slice(&self.counts);
            self.counts = grown;
            self.lo -= extra as i64;
        } else if x >= self.lo + len {
            let extra = (x - self.lo - len + 1).max(len) as usize;
            self.counts.resize(self.counts.len() + extra, 0);
        }
    }

    /// Increments the counter at `x` and returns the new (1-based) count.
    #[inline]
    pub(crate) fn bump(&mut self, x: i64) -> u32 {
        let mut i = x - self.lo;
        if i < 0 || i >= self.counts.len() as i64 {
            self.grow_to(x);
            i = x - self.lo;
        }
        let c = &mut self.counts[i as usize];
        *c += 1;
        *c
    }

    pub(crate) fn nonzero(&self) -> BTreeMap<i64, u32> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.lo + i as i64, c))
            .collect()
    }
}

/// One step of bookkeeping: the walker left `from` using visit `visit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Step {
    pub from: i64,
    pub visit: u32,
    pub right: bool,
}

/// Streaming walker used by every simulation path.
pub(crate) struct Walker<'a> {
    env: &'a ArrowEnvironment,
    pub position: i64,
    counters: VisitCounters,
}

impl<'a> Walker<'a> {
    pub(crate) fn new(env: &'a ArrowEnvironment, start: i64, horizon: u64) -> Self {
        Walker {
            env,
            position: start,
            counters: VisitCounters::around(start, horizon),
        }
    }

    #[inline]
    pub(crate) fn step(&mut self) -> Step {
        let from = self.position;
        let visit = self.counters.bump(from);
        let right = self.env.arrow(from, visit);
        self.position += if right { 1 } else { -1 };
        Step { from, visit, right }
    }

    pub(crate) fn into_consumption(self) -> BTreeMap<i64, u32> {
        self.counters.nonzero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopRule {
    pub targets: Vec<i64>,
    pub horizon: u64,
    /// Stop as soon as the walker stands outside this interval.
    pub window: Option<(i64, i64)>,
}

impl StopRule {
    pub fn horizon(horizon: u64) -> Self {
        StopRule {
            targets: Vec::new(),
            horizon,
            window: None,
        }
    }

    pub fn target(target: i64, horizon: u64) -> Self {
        StopRule {
            targets: vec![target],
            horizon,
            window: None,
        }
    }

    pub fn with_window(mut self, lo: i64, hi: i64) -> Self {
        self.window = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    HitTarget { target: i64, step: u64 },
    HorizonExhausted,
    LeftWindow { step: u64 },
}

/// A realized trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub start: i64,
    /// `X_0, X_1, ...`
    pub positions: Vec<i64>,
    /// Visit index consumed at each step (`visits[t]` was used to leave
    /// `positions[t]`).
    pub visits: Vec<u32>,
    /// Visits consumed per site.
    pub consumption: BTreeMap<i64, u32>,
    pub termination: Termination,
    pub horizon: u64,
}

impl WalkTrace {
    /// Number of steps taken.
    pub fn steps(&self) -> u64 {
        self.positions.len() as u64 - 1
    }

    pub fn final_position(&self) -> i64 {
        *self.positions.last().expect("trace holds X_0")
    }

    /// Steps as `t x k arrow` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, (&x, &k)) in self.positions.iter().zip(&self.visits).enumerate() {
            let arrow = (self.positions[t + 1] > x) as u8;
            let _ = writeln!(out, "{t} {x} {k} {arrow}");
        }
        out
    }

    /// Checks every recorded step against the environment.
    pub fn replays_on(&self, a: &ArrowEnvironment) -> bool {
        let mut counters = VisitCounters::around(self.start, 16);
        self.positions.windows(2).zip(&self.visits).all(|(w, &k)| {
            let visit = counters.bump(w[0]);
            let expected = w[0] + if a.arrow(w[0], visit) { 1 } else { -1 };
            visit == k && w[1] == expected
        })
    }
}

/// Runs the walk from `start` until the first satisfied stop condition.
pub fn run_walk(a: &ArrowEnvironment, start: i64, stop: &StopRule) -> WalkTrace {
    let mut positions = vec![start];
    let mut visits = Vec::new();
    let mut walker = Walker::new(a, start, stop.horizon.min(4096));
    let outside = |x: i64| stop.window.is_some_and(|(lo, hi)| x < lo || x > hi);
    let hit = |x: i64| stop.targets.contains(&x);

    let mut termination = if hit(start) {
        Some(Termination::HitTarget { target: start, step: 0 })
    } else if outside(start) {
        Some(Termination::LeftWindow { step: 0 })
    } else {
        None
    };
    let mut t = 0u64;
    while termination.is_none() {
        if t == stop.horizon {
            termination = Some(Termination::HorizonExhausted);
            break;
        }
        let step = walker.step();
        t += 1;
        visits.push(step.visit);
        let x = walker.position;
        positions.push(x);
        if hit(x) {
            termination = Some(Termination::HitTarget { target: x, step: t });
        } else if outside(x) {
            termination = Some(Termination::LeftWindow { step: t });
        }
    }
    WalkTrace {
        start,
        positions,
        visits,
        consumption: walker.into_consumption(),
        termination: termination.expect("loop exits with a termination"),
        horizon: stop.horizon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitStatus {
    HitAt(u64),
    NotHitWithin(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HittingReport {
    pub target: i64,
    pub status: HitStatus,
}

impl HittingReport {
    pub fn time(&self) -> Option<u64> {
        match self.status {
            HitStatus::HitAt(t) => Some(t),
            HitStatus::NotHitWithin(_) => None,
        }
    }
}

/// First index `t` with `X_t = m`.
pub fn hitting_time(trace: &WalkTrace, m: i64) -> HittingReport {
    let status = match trace.positions.iter().position(|&x| x == m) {
        Some(t) => HitStatus::HitAt(t as u64),
        None => HitStatus::NotHitWithin(trace.steps()),
    };
    HittingReport { target: m, status }
}

/// Right-crossing counts `W_n` of the edges `{n-1, n}`, `n >= 1`, with the
/// convention `W_0 = 1`. Indices past the stored range read 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crossings(pub Vec<u64>);

impl Crossings {
    pub fn get(&self, n: usize) -> u64 {
        self.0.get(n).copied().unwrap_or(0)
    }
}

/// Counts right crossings made strictly before step `up_to` (clamped to the
/// trace length).
pub fn crossings(trace: &WalkTrace, up_to: u64) -> Crossings {
    let cut = (up_to.min(trace.steps())) as usize;
    let mut w = vec![1u64];
    for pair in trace.positions[..=cut].windows(2) {
        let to = pair[1];
        if to == pair[0] + 1 && to >= 1 {
            let n = to as usize;
            if w.len() <= n {
                w.resize(n + 1, 0);
            }
            w[n] += 1;
        }
    }
    w.push(0);
    Crossings(w)
}

/// Crossings cut at `T_{-1}` when it was hit, else over the whole trace.
pub fn crossings_before_minus_one(trace: &WalkTrace) -> Crossings {
    let cut = hitting_time(trace, -1).time().unwrap_or(trace.steps());
    crossings(trace, cut)
}

/// Crossings, in either direction, of the edge `{n-1, n}` before `up_to`.
pub fn edge_crossings(trace: &WalkTrace, n: i64, up_to: u64) -> u64 {
    let cut = (up_to.min(trace.steps())) as usize;
    trace.positions[..=cut]
        .windows(2)
        .filter(|p| p[0].min(p[1]) == n - 1)
        .count() as u64
}

/// Left crossings `n -> n-1` made strictly before step `up_to`; this is the
/// number of left arrows consumed at `n`.
pub fn left_crossings(trace: &WalkTrace, n: i64, up_to: u64) -> u64 {
    let cut = (up_to.min(trace.steps())) as usize;
    trace.positions[..=cut]
        .windows(2)
        .filter(|p| p[0] == n && p[1] == n - 1)
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxBeforeHit {
    Finite(i64),
    UnboundedWithinHorizon,
}

/// `max { X_t : t < T_{-1} }`.
pub fn max_before_hit(trace: &WalkTrace) -> MaxBeforeHit {
    match hitting_time(trace, -1).time() {
        Some(t) => MaxBeforeHit::Finite(
            trace.positions[..t as usize]
                .iter()
                .copied()
                .max()
                .unwrap_or(trace.start),
        ),
        None => MaxBeforeHit::UnboundedWithinHorizon,
    }
}

/// A right excursion from 0: `X = 0` at `start`, positive strictly between,
/// back at 0 at `end` (`None` if still open when the trace ends).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Excursion {
    pub start: usize,
    pub end: Option<usize>,
}

pub fn right_excursions(trace: &WalkTrace) -> Vec<Excursion> {
    let p = &trace.positions;
    let mut out = Vec::new();
    let mut t = 0;
    while t + 1 < p.len() {
        if p[t] == 0 && p[t + 1] == 1 {
            let end = (t + 1..p.len()).find(|&s| p[s] == 0);
            out.push(Excursion { start: t, end });
            match end {
                Some(e) => t = e,
                None => break,
            }
        } else {
            t += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regeneration {
    /// A fresh walk from `m` hit `m - 1` at this step.
    Refuted(u64),
    UnrefutedWithin(u64),
}

/// Probes each `m` in `range` with a fresh walk from `m` targeting `m - 1`.
pub fn optional_regeneration_positions(
    a: &ArrowEnvironment,
    range: RangeInclusive<i64>,
    horizon: u64,
) -> BTreeMap<i64, Regeneration> {
    range
        .map(|m| {
            let trace = run_walk(a, m, &StopRule::target(m - 1, horizon));
            let status = match trace.termination {
                Termination::HitTarget { step, .. } => Regeneration::Refuted(step),
                _ => Regeneration::UnrefutedWithin(horizon),
            };
            (m, status)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrow_env::ArrowTable;

    fn hand_table() -> ArrowEnvironment {
        // a(0,.) = (1,0,...), a(1,.) = (0,...)
        ArrowTable::from_columns(0, &[&[1, 0], &[0, 1]]).unwrap().into()
    }

    fn rightward() -> ArrowEnvironment {
        ArrowTable::uniform(&[1, 0]).unwrap().into()
    }

    fn trace_of(positions: &[i64]) -> WalkTrace {
        WalkTrace {
            start: positions[0],
            positions: positions.to_vec(),
            visits: vec![1; positions.len() - 1],
            consumption: BTreeMap::new(),
            termination: Termination::HorizonExhausted,
            horizon: positions.len() as u64 - 1,
        }
    }

    #[test]
    fn immediate_left() {
        let a: ArrowEnvironment = ArrowTable::from_columns(0, &[&[0]]).unwrap().into();
        let tr = run_walk(&a, 0, &StopRule::target(-1, 100));
        assert_eq!(tr.positions, vec![0, -1]);
        assert_eq!(tr.termination, Termination::HitTarget { target: -1, step: 1 });
    }

    #[test]
    fn rightward_never_returns() {
        let tr = run_walk(&rightward(), 0, &StopRule::horizon(10));
        assert_eq!(tr.positions, (0..=10).collect::<Vec<_>>());
        assert_eq!(tr.termination, Termination::HorizonExhausted);
        assert_eq!(hitting_time(&tr, -1).status, HitStatus::NotHitWithin(10));
        let w = crossings(&tr, 10);
        assert!((1..=10).all(|n| w.get(n) == 1));
        assert_eq!(max_before_hit(&tr), MaxBeforeHit::UnboundedWithinHorizon);
    }

    #[test]
    fn hand_simulated_table() {
        let a = hand_table();
        let tr = run_walk(&a, 0, &StopRule::target(-1, 100));
        assert_eq!(tr.positions, vec![0, 1, 0, -1]);
        assert_eq!(tr.visits, vec![1, 1, 2]);
        assert_eq!(tr.consumption, BTreeMap::from([(0, 2), (1, 1)]));
        assert_eq!(hitting_time(&tr, -1).status, HitStatus::HitAt(3));
        assert_eq!(hitting_time(&tr, 0).status, HitStatus::HitAt(0));
        let w = crossings(&tr, 3);
        assert_eq!((w.get(0), w.get(1), w.get(2)), (1, 1, 0));
        assert_eq!(max_before_hit(&tr), MaxBeforeHit::Finite(1));
        assert_eq!(right_excursions(&tr), vec![Excursion { start: 0, end: Some(2) }]);
        assert!(tr.replays_on(&a));
        assert_eq!(tr.dump(), "0 0 1 1\n1 1 1 0\n2 0 2 0\n");
    }

    #[test]
    fn left_only_trace() {
        let tr = trace_of(&[0, -1]);
        let w = crossings(&tr, 1);
        assert!((1..5).all(|n| w.get(n) == 0));
        assert_eq!(max_before_hit(&tr), MaxBeforeHit::Finite(0));
        assert!(right_excursions(&tr).is_empty());
    }

    #[test]
    fn excursions_split_at_zero() {
        let tr = trace_of(&[0, 1, 2, 1, 0, 1, 0]);
        assert_eq!(
            right_excursions(&tr),
            vec![
                Excursion { start: 0, end: Some(4) },
                Excursion { start: 4, end: Some(6) }
            ]
        );
        let open = trace_of(&[0, -1, 0, 1, 2]);
        assert_eq!(right_excursions(&open), vec![Excursion { start: 2, end: None }]);
    }

    #[test]
    fn window_stop_and_start_on_target() {
        let tr = run_walk(&rightward(), 0, &StopRule::target(-1, 100).with_window(0, 3));
        assert_eq!(tr.positions, vec![0, 1, 2, 3, 4]);
        assert_eq!(tr.termination, Termination::LeftWindow { step: 4 });
        let tr = run_walk(&rightward(), 5, &StopRule::target(5, 100));
        assert_eq!(tr.positions, vec![5]);
        assert_eq!(tr.termination, Termination::HitTarget { target: 5, step: 0 });
    }

    #[test]
    fn regeneration_probes() {
        let right = optional_regeneration_positions(&rightward(), 0..=5, 50);
        assert!(right.values().all(|r| *r == Regeneration::UnrefutedWithin(50)));
        let left: ArrowEnvironment = ArrowTable::uniform(&[0, 1]).unwrap().into();
        let left = optional_regeneration_positions(&left, -3..=3, 50);
        assert!(left.values().all(|r| *r == Regeneration::Refuted(1)));
        let hand = optional_regeneration_positions(&hand_table(), 0..=0, 50);
        assert_eq!(hand[&0], Regeneration::Refuted(3));
    }

    #[test]
    fn counters_grow_both_ways() {
        let mut c = VisitCounters::around(0, 1);
        assert_eq!(c.bump(-50), 1);
        assert_eq!(c.bump(70), 1);
        assert_eq!(c.bump(-50), 2);
        assert_eq!(c.bump(0), 1);
        assert_eq!(c.nonzero(), BTreeMap::from([(-50, 2), (0, 1), (70, 1)]));
    }
}
