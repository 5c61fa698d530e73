//! Cookie environments: lazily evaluated maps `(site, visit) -> probability`.
//!
//! Visit indices are 1-based. Every bounded family falls back to the fair
//! value 1/2 beyond its explicit profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyed;

/// Probability used for every visit beyond an explicit profile.
pub const FAIR: f64 = 0.5;

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_REL_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 10_000_000;
const STREAM_CHAIN: u64 = 0xC4A1_0000;
const DEFAULT_WINDOW: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("visit index must be >= 1 (got 0)")]
    ZeroVisitIndex,
    #[error("{field}: probability {value} is outside (0,1)")]
    ProbabilityOutOfRange { field: String, value: f64 },
    #[error("{0} must be a positive integer")]
    NotPositive(&'static str),
    #[error("markov_modulated: {0}")]
    EmptyStates(&'static str),
    #[error("markov_modulated: matrix must be {expected}x{expected}, row {row} has {got} entries")]
    MatrixShape { expected: usize, row: usize, got: usize },
    #[error("markov_modulated: matrix entry ({row},{col}) = {value} is negative or not finite")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("markov_modulated: matrix row {row} sums to {sum}, not 1 (tolerance 1e-12)")]
    NotStochastic { row: usize, sum: f64 },
    #[error("markov_modulated: chain is reducible (state {to} is not reachable from state {from})")]
    Reducible { from: usize, to: usize },
    #[error("markov_modulated: stationary distribution did not converge to relative tolerance 1e-12")]
    StationaryNotConverged,
    #[error("delta is not defined for this family: {0}")]
    UnsupportedFamily(&'static str),
}

/// Distribution family of a cookie environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EnvFamilySpec {
    /// `M` cookies of strength `p` at every site.
    IidBounded {
        #[serde(rename = "M")]
        m: u32,
        p: f64,
    },
    /// One cookie of strength `p` at every site (Benjamini-Wilson walk).
    SingleCookie { p: f64 },
    /// The column at each site is the profile of the state of a stationary
    /// Markov chain indexed by the site.
    MarkovModulated {
        states: Vec<Vec<f64>>,
        matrix: Vec<Vec<f64>>,
        /// Half-width of the precomputed state window `[-window, window]`.
        #[serde(default = "default_window")]
        window: u64,
    },
    /// The same finite profile at every site.
    ConstantProfile { profile: Vec<f64> },
}

fn default_window() -> u64 {
    DEFAULT_WINDOW
}

/// Expected total drift stored in one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaParameter {
    pub value: f64,
}

fn check_probability(field: &str, value: f64) -> Result<(), EnvError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(EnvError::ProbabilityOutOfRange {
            field: field.to_string(),
            value,
        })
    }
}

impl EnvFamilySpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        match self {
            EnvFamilySpec::IidBounded { m, p } => {
                if *m == 0 {
                    return Err(EnvError::NotPositive("iid_bounded.M"));
                }
                check_probability("iid_bounded.p", *p)
            }
            EnvFamilySpec::SingleCookie { p } => check_probability("single_cookie.p", *p),
            EnvFamilySpec::ConstantProfile { profile } => {
                for (i, v) in profile.iter().enumerate() {
                    check_probability(&format!("constant_profile.profile[{i}]"), *v)?;
                }
                Ok(())
            }
            EnvFamilySpec::MarkovModulated { states, matrix, window } => {
                if *window == 0 {
                    return Err(EnvError::NotPositive("markov_modulated.window"));
                }
                validate_chain(states, matrix)
            }
        }
    }

    /// Profile used at every site, for the site-independent families.
    fn fixed_profile(&self) -> Option<Vec<f64>> {
        match self {
            EnvFamilySpec::IidBounded { m, p } => Some(vec![*p; *m as usize]),
            EnvFamilySpec::SingleCookie { p } => Some(vec![*p]),
            EnvFamilySpec::ConstantProfile { profile } => Some(profile.clone()),
            EnvFamilySpec::MarkovModulated { .. } => None,
        }
    }

    /// The family of the site-reflected environment `1 - w(-x, n)`.
    ///
    /// For the Markov family this complements every profile and replaces the
    /// transition matrix by its time reversal, which is the law of the chain
    /// read from right to left.
    pub fn mirrored(&self) -> Result<EnvFamilySpec, EnvError> {
        self.validate()?;
        let flip = |v: &[f64]| v.iter().map(|p| 1.0 - p).collect::<Vec<_>>();
        Ok(match self {
            EnvFamilySpec::IidBounded { m, p } => EnvFamilySpec::IidBounded { m: *m, p: 1.0 - p },
            EnvFamilySpec::SingleCookie { p } => EnvFamilySpec::SingleCookie { p: 1.0 - p },
            EnvFamilySpec::ConstantProfile { profile } => EnvFamilySpec::ConstantProfile { profile: flip(profile) },
            EnvFamilySpec::MarkovModulated { states, matrix, window } => {
                let pi = stationary_distribution(matrix)?;
                EnvFamilySpec::MarkovModulated {
                    states: states.iter().map(|s| flip(s)).collect(),
                    matrix: reversed_matrix(matrix, &pi),
                    window: *window,
                }
            }
        })
    }

    /// Same family with the precomputed Markov window widened to at least
    /// `min_window`; other families are returned unchanged.
    pub fn with_min_window(&self, min_window: u64) -> EnvFamilySpec {
        match self {
            EnvFamilySpec::MarkovModulated { states, matrix, window } => EnvFamilySpec::MarkovModulated {
                states: states.clone(),
                matrix: matrix.clone(),
                window: (*window).max(min_window),
            },
            other => other.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvFamilySpec::IidBounded { .. } => "iid_bounded",
            EnvFamilySpec::SingleCookie { .. } => "single_cookie",
            EnvFamilySpec::MarkovModulated { .. } => "markov_modulated",
            EnvFamilySpec::ConstantProfile { .. } => "constant_profile",
        }
    }
}

fn validate_chain(states: &[Vec<f64>], matrix: &[Vec<f64>]) -> Result<(), EnvError> {
    if states.is_empty() {
        return Err(EnvError::EmptyStates("at least one state profile is required"));
    }
    for (s, profile) in states.iter().enumerate() {
        for (i, v) in profile.iter().enumerate() {
            check_probability(&format!("markov_modulated.states[{s}][{i}]"), *v)?;
        }
    }
    let k = states.len();
    if matrix.len() != k {
        return Err(EnvError::MatrixShape {
            expected: k,
            row: matrix.len(),
            got: 0,
        });
    }
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(EnvError::MatrixShape {
                expected: k,
                row: r,
                got: row.len(),
            });
        }
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(EnvError::NegativeEntry {
                    row: r,
                    col: c,
                    value: *v,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(EnvError::NotStochastic { row: r, sum });
        }
    }
    for from in 0..k {
        let mut seen = vec![false; k];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for (j, &p) in matrix[i].iter().enumerate() {
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(to) = seen.iter().position(|s| !s) {
            return Err(EnvError::Reducible { from, to });
        }
    }
    Ok(())
}

/// Stationary distribution by power iteration on the lazy chain `(P + I)/2`,
/// which has the same stationary law and is aperiodic.
pub fn stationary_distribution(matrix: &[Vec<f64>]) -> Result<Vec<f64>, EnvError> {
    let k = matrix.len();
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..STATIONARY_MAX_ITERS {
        next.iter_mut().zip(&pi).for_each(|(n, p)| *n = 0.5 * p);
        for (i, row) in matrix.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                next[j] += 0.5 * pi[i] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let converged = next
            .iter()
            .zip(&pi)
            .all(|(a, b)| (a - b).abs() <= STATIONARY_REL_TOL * b.abs().max(f64::MIN_POSITIVE));
        std::mem::swap(&mut pi, &mut next);
        if converged {
            return Ok(pi);
        }
    }
    Err(EnvError::StationaryNotConverged)
}

fn reversed_matrix(matrix: &[Vec<f64>], pi: &[f64]) -> Vec<Vec<f64>> {
    let k = matrix.len();
    (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| pi[j] * matrix[j][i] / pi[i]).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect()
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

#[inline]
fn sample_index(cum: &[f64], u: f64) -> u16 {
    let total = *cum.last().unwrap_or(&1.0);
    let target = u * total;
    cum.iter().position(|&c| target < c).unwrap_or(cum.len() - 1) as u16
}

#[derive(Debug, Clone)]
struct MarkovColumns {
    profiles: Vec<Vec<f64>>,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    seed: u64,
    window: i64,
    /// States of sites `-window..=window`.
    states: Vec<u16>,
}

impl MarkovColumns {
    fn build(states: &[Vec<f64>], matrix: &[Vec<f64>], window: u64, seed: u64) -> Result<Self, EnvError> {
        let pi = stationary_distribution(matrix)?;
        let forward: Vec<Vec<f64>> = matrix.iter().map(|r| cumulative(r)).collect();
        let backward: Vec<Vec<f64>> = reversed_matrix(matrix, &pi).iter().map(|r| cumulative(r)).collect();
        let w = window as i64;
        let mut cache = vec![0u16; (2 * w + 1) as usize];
        let origin = sample_index(&cumulative(&pi), keyed::uniform2(seed, 0, STREAM_CHAIN));
        cache[w as usize] = origin;
        for x in 1..=w {
            let prev = cache[(x - 1 + w) as usize];
            cache[(x + w) as usize] = sample_index(&forward[prev as usize], keyed::uniform2(seed, x, STREAM_CHAIN));
        }
        for x in (-w..0).rev() {
            let next = cache[(x + 1 + w) as usize];
            cache[(x + w) as usize] = sample_index(&backward[next as usize], keyed::uniform2(seed, x, STREAM_CHAIN));
        }
        Ok(MarkovColumns {
            profiles: states.to_vec(),
            forward,
            backward,
            seed,
            window: w,
            states: cache,
        })
    }

    /// State at site `x`. Sites outside the window continue the chain from the
    /// window edge, which costs time linear in the distance.
    fn state_at(&self, x: i64) -> u16 {
        let w = self.window;
        if (-w..=w).contains(&x) {
            return self.states[(x + w) as usize];
        }
        if x > w {
            let mut s = self.states[(2 * w) as usize];
            for site in (w + 1)..=x {
                s = sample_index(
                    &self.forward[s as usize],
                    keyed::uniform2(self.seed, site, STREAM_CHAIN),
                );
            }
            s
        } else {
            let mut s = self.states[0];
            for site in (x..-w).rev() {
                s = sample_index(
                    &self.backward[s as usize],
                    keyed::uniform2(self.seed, site, STREAM_CHAIN),
                );
            }
            s
        }
    }
}

#[derive(Debug, Clone)]
enum Columns {
    Fixed(Vec<f64>),
    Markov(MarkovColumns),
}

/// A realized cookie environment. Immutable; all accessors are pure.
#[derive(Debug, Clone)]
pub struct CookieEnvironment {
    spec: EnvFamilySpec,
    master_seed: u64,
    columns: Columns,
}

/// Builds the environment for `spec`, keyed by `seed`.
pub fn build_environment(spec: &EnvFamilySpec, seed: u64) -> Result<CookieEnvironment, EnvError> {
    spec.validate()?;
    let columns = match (spec.fixed_profile(), spec) {
        (Some(profile), _) => Columns::Fixed(profile),
        (None, EnvFamilySpec::MarkovModulated { states, matrix, window }) => {
            Columns::Markov(MarkovColumns::build(states, matrix, *window, seed)?)
        }
        (None, _) => unreachable!("only the markov family lacks a fixed profile"),
    };
    Ok(CookieEnvironment {
        spec: spec.clone(),
        master_seed: seed,
        columns,
    })
}

impl CookieEnvironment {
    pub fn spec(&self) -> &EnvFamilySpec {
        &self.spec
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The `n`-th cookie at site `x` (`n >= 1`).
    pub fn cookie_at(&self, x: i64, n: u32) -> Result<f64, EnvError> {
        if n == 0 {
            return Err(EnvError::ZeroVisitIndex);
        }
        Ok(self.cookie(x, n))
    }

    /// Unchecked accessor for hot loops; `n` must be at least 1.
    #[inline]
    pub(crate) fn cookie(&self, x: i64, n: u32) -> f64 {
        debug_assert!(n >= 1);
        let profile = match &self.columns {
            Columns::Fixed(p) => p.as_slice(),
            Columns::Markov(m) => m.profiles[m.state_at(x) as usize].as_slice(),
        };
        profile.get(n as usize - 1).copied().unwrap_or(FAIR)
    }

    /// Index of the modulating state at `x`, for the Markov family.
    pub fn state_at(&self, x: i64) -> Option<usize> {
        match &self.columns {
            Columns::Markov(m) => Some(m.state_at(x) as usize),
            Columns::Fixed(_) => None,
        }
    }

    /// Largest `eps` with every cookie in `[eps, 1 - eps]`.
    pub fn ellipticity_bound(&self) -> f64 {
        let profiles: Vec<&[f64]> = match &self.columns {
            Columns::Fixed(p) => vec![p.as_slice()],
            Columns::Markov(m) => m.profiles.iter().map(|p| p.as_slice()).collect(),
        };
        profiles
            .into_iter()
            .flatten()
            .fold(FAIR, |eps, p| eps.min(p.min(1.0 - p)))
    }
}

/// Expected column drift `sum_i E[2 w(0,i) - 1]`.
pub fn delta_of(spec: &EnvFamilySpec) -> Result<DeltaParameter, EnvError> {
    spec.validate()?;
    let drift = |profile: &[f64]| profile.iter().map(|p| 2.0 * p - 1.0).sum::<f64>();
    let value = match spec {
        EnvFamilySpec::IidBounded { m, p } => *m as f64 * (2.0 * p - 1.0),
        EnvFamilySpec::SingleCookie { p } => 2.0 * p - 1.0,
        EnvFamilySpec::ConstantProfile { profile } => drift(profile),
        EnvFamilySpec::MarkovModulated { states, matrix, .. } => {
            let pi = stationary_distribution(matrix)?;
            states.iter().zip(&pi).map(|(s, w)| w * drift(s)).sum()
        }
    };
    Ok(DeltaParameter { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> EnvFamilySpec {
        EnvFamilySpec::MarkovModulated {
            states: vec![vec![0.9, 0.8], vec![0.3]],
            matrix: vec![vec![0.7, 0.3], vec![0.6, 0.4]],
            window: 64,
        }
    }

    #[test]
    fn single_cookie_values() {
        let env = build_environment(&EnvFamilySpec::SingleCookie { p: 0.9 }, 3).unwrap();
        assert_eq!(env.cookie_at(5, 1).unwrap(), 0.9);
        assert_eq!(env.cookie_at(5, 2).unwrap(), 0.5);
    }

    #[test]
    fn iid_bounded_profile_exhausts() {
        let env = build_environment(&EnvFamilySpec::IidBounded { m: 3, p: 0.8 }, 1).unwrap();
        for x in -20..20 {
            assert_eq!(env.cookie_at(x, 3).unwrap(), 0.8);
            assert_eq!(env.cookie_at(x, 4).unwrap(), 0.5);
        }
    }

    #[test]
    fn constant_profile_values() {
        let env = build_environment(&EnvFamilySpec::ConstantProfile { profile: vec![0.7] }, 0).unwrap();
        assert_eq!(env.cookie_at(-4, 1).unwrap(), 0.7);
        assert_eq!(env.cookie_at(-4, 2).unwrap(), 0.5);
    }

    #[test]
    fn zero_visit_index_is_usage_error() {
        let env = build_environment(&EnvFamilySpec::SingleCookie { p: 0.9 }, 0).unwrap();
        assert_eq!(env.cookie_at(0, 0), Err(EnvError::ZeroVisitIndex));
    }

    #[test]
    fn markov_is_pure_including_outside_window() {
        let env = build_environment(&two_state(), 99).unwrap();
        for x in [-200, -65, -64, 0, 17, 64, 65, 300] {
            let first = env.cookie_at(x, 1).unwrap();
            for _ in 0..1000 {
                assert_eq!(env.cookie_at(x, 1).unwrap().to_bits(), first.to_bits());
            }
        }
    }

    #[test]
    fn window_does_not_change_values() {
        let small = build_environment(&two_state(), 5).unwrap();
        let big = build_environment(&two_state().with_min_window(500), 5).unwrap();
        for x in -400..400 {
            assert_eq!(small.state_at(x), big.state_at(x), "site {x}");
        }
    }

    #[test]
    fn invalid_specs_name_the_violation() {
        let e = EnvFamilySpec::SingleCookie { p: 1.0 }.validate().unwrap_err();
        assert!(matches!(e, EnvError::ProbabilityOutOfRange { .. }));
        let e = EnvFamilySpec::ConstantProfile {
            profile: vec![0.5, 0.0],
        }
        .validate()
        .unwrap_err();
        assert!(e.to_string().contains("profile[1]"));
        let reducible = EnvFamilySpec::MarkovModulated {
            states: vec![vec![0.6], vec![0.4]],
            matrix: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            window: 10,
        };
        assert_eq!(reducible.validate(), Err(EnvError::Reducible { from: 0, to: 1 }));
        let non_stochastic = EnvFamilySpec::MarkovModulated {
            states: vec![vec![0.6], vec![0.4]],
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5 + 1e-9]],
            window: 10,
        };
        assert!(matches!(
            non_stochastic.validate(),
            Err(EnvError::NotStochastic { row: 1, .. })
        ));
        assert!(matches!(
            EnvFamilySpec::IidBounded { m: 0, p: 0.6 }.validate(),
            Err(EnvError::NotPositive(_))
        ));
    }

    #[test]
    fn periodic_chain_has_stationary_law() {
        let pi = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
        let pi = stationary_distribution(&[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap();
        // pi_0 = 0.6 / 0.9
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn delta_values() {
        let d = |s: EnvFamilySpec| delta_of(&s).unwrap().value;
        assert!((d(EnvFamilySpec::IidBounded { m: 3, p: 0.9 }) - 2.4).abs() < 1e-12);
        assert!((d(EnvFamilySpec::SingleCookie { p: 0.7 }) - 0.4).abs() < 1e-12);
        assert_eq!(d(EnvFamilySpec::IidBounded { m: 2, p: 0.5 }), 0.0);
        // 2/3 * (0.8 + 0.6) + 1/3 * (-0.4)
        assert!((d(two_state()) - (2.0 / 3.0 * 1.4 - 0.4 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn mirrored_negates_delta() {
        for spec in [EnvFamilySpec::IidBounded { m: 3, p: 0.9 }, two_state()] {
            let a = delta_of(&spec).unwrap().value;
            let b = delta_of(&spec.mirrored().unwrap()).unwrap().value;
            assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipticity_holds_on_samples() {
        let env = build_environment(&two_state(), 11).unwrap();
        let eps = env.ellipticity_bound();
        assert!((eps - 0.1).abs() < 1e-12);
        for i in 0..10_000u64 {
            let x = (keyed::hash2(1, i, 0) % 2001) as i64 - 1000;
            let n = (keyed::hash2(1, i, 1) % 6) as u32 + 1;
            let c = env.cookie_at(x, n).unwrap();
            assert!(c > 0.0 && c < 1.0);
            assert!(c >= eps && c <= 1.0 - eps);
        }
    }
}
