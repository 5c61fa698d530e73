//! Arrow environments: `(site, visit) -> {left, right}` instruction tapes.
//!
//! An arrow environment is either realized from a cookie environment through
//! keyed uniforms (`right` iff `u(x,n) < w(x,n)`) or given as an explicit
//! finite [`ArrowTable`]. Shift and reflection are views and never copy.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::cookie_env::CookieEnvironment;
use crate::keyed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArrowError {
    #[error("visit index must be >= 1 (got 0)")]
    ZeroVisitIndex,
    #[error("table window [{lo},{hi}] is empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("table depth must be >= 1")]
    ZeroDepth,
    #[error("table needs {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },
    #[error("table text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Bit of the alternating tail `0,1,0,1,...` at 1-based offset `k`.
#[inline(always)]
fn tail_bit(k: u32) -> bool {
    k.is_multiple_of(2)
}

/// The realization map: arrow is `right` iff `u < cookie`, ties go left.
#[inline(always)]
pub fn threshold(u: f64, cookie: f64) -> bool {
    u < cookie
}

/// The keyed uniform consulted at `(x, n)` by an environment realized with
/// `uniform_seed`.
#[inline(always)]
pub fn uniform_at(uniform_seed: u64, x: i64, n: u32) -> f64 {
    keyed::uniform2(uniform_seed, x, n as u64)
}

/// Explicit finite arrow table on a window of sites.
///
/// Column `x` in the window reads its `depth` explicit bits and then continues
/// `0,1,0,1,...`. Sites outside the window read the `outside` prefix (empty by
/// default) followed by the same alternating tail, so every column is
/// non-degenerate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArrowTable {
    lo: i64,
    hi: i64,
    depth: u32,
    bits: Vec<bool>,
    outside: Vec<bool>,
}

impl ArrowTable {
    /// `bits` is site-major: bit `(x - lo) * depth + (n - 1)` is `a(x, n)`.
    pub fn new(lo: i64, hi: i64, depth: u32, bits: Vec<bool>) -> Result<Self, ArrowError> {
        if hi < lo {
            return Err(ArrowError::EmptyWindow { lo, hi });
        }
        if depth == 0 {
            return Err(ArrowError::ZeroDepth);
        }
        let expected = (hi - lo + 1) as usize * depth as usize;
        if bits.len() != expected {
            return Err(ArrowError::BitCount {
                expected,
                got: bits.len(),
            });
        }
        Ok(ArrowTable {
            lo,
            hi,
            depth,
            bits,
            outside: Vec::new(),
        })
    }

    /// Builds a table from explicit columns, one per site starting at `lo`.
    pub fn from_columns(lo: i64, columns: &[&[u8]]) -> Result<Self, ArrowError> {
        let depth = columns.first().map_or(0, |c| c.len()) as u32;
        let bits: Vec<bool> = columns.iter().flat_map(|c| c.iter().map(|&b| b != 0)).collect();
        let hi = lo + columns.len() as i64 - 1;
        Self::new(lo, hi, depth, bits)
    }

    /// Table number `code` in the enumeration order: bit `j` of `code` is the
    /// `j`-th site-major bit.
    pub fn from_code(lo: i64, hi: i64, depth: u32, code: u64) -> Result<Self, ArrowError> {
        let n = (hi - lo + 1).max(0) as usize * depth as usize;
        let bits = (0..n).map(|j| (code >> j) & 1 == 1).collect();
        Self::new(lo, hi, depth, bits)
    }

    /// Every site, inside the window or not, reads `prefix` then the tail.
    pub fn uniform(prefix: &[u8]) -> Result<Self, ArrowError> {
        Ok(Self::from_columns(0, &[prefix])?.with_outside(prefix))
    }

    /// Replaces the prefix used by sites outside the window.
    pub fn with_outside(mut self, prefix: &[u8]) -> Self {
        self.outside = prefix.iter().map(|&b| b != 0).collect();
        self
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn contains(&self, x: i64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// Explicit prefix of column `x`.
    pub fn prefix(&self, x: i64) -> &[bool] {
        if self.contains(x) {
            let start = (x - self.lo) as usize * self.depth as usize;
            &self.bits[start..start + self.depth as usize]
        } else {
            &self.outside
        }
    }

    #[inline]
    pub fn bit(&self, x: i64, n: u32) -> bool {
        let prefix = self.prefix(x);
        match prefix.get(n as usize - 1) {
            Some(&b) => b,
            None => tail_bit(n - prefix.len() as u32),
        }
    }

    /// Enumeration code of the explicit bits (tables of at most 64 bits).
    pub fn code(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
    }

    /// Plain-text form: one `x: b1 b2 ... bD` line per site, ascending.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ArrowTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in self.lo..=self.hi {
            write!(f, "{x}:")?;
            for &b in self.prefix(x) {
                write!(f, " {}", b as u8)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for ArrowTable {
    type Err = ArrowError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lo = None;
        let mut prev: Option<i64> = None;
        let mut depth = None;
        let mut bits = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| ArrowError::Parse { line: line_no, reason };
            let (site, rest) = line.split_once(':').ok_or_else(|| err("expected `x: bits`".into()))?;
            let x: i64 = site
                .trim()
                .parse()
                .map_err(|_| err(format!("bad site `{}`", site.trim())))?;
            if let Some(p) = prev {
                if x != p + 1 {
                    return Err(err(format!("site {x} does not follow {p}")));
                }
            }
            let row: Vec<bool> = rest
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(err(format!("bad bit `{other}`"))),
                })
                .collect::<Result<_, _>>()?;
            match depth {
                None => depth = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(err(format!("expected {d} bits, got {}", row.len())));
                }
                _ => {}
            }
            lo.get_or_insert(x);
            prev = Some(x);
            bits.extend(row);
        }
        let (lo, hi) = match (lo, prev) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                return Err(ArrowError::Parse {
                    line: 0,
                    reason: "no sites".into(),
                })
            }
        };
        ArrowTable::new(lo, hi, depth.unwrap_or(0) as u32, bits)
    }
}

#[derive(Debug, Clone)]
enum Source {
    Realized {
        env: Arc<CookieEnvironment>,
        uniform_seed: u64,
    },
    Table(Arc<ArrowTable>),
}

/// An immutable arrow environment with an optional reflection and shift.
///
/// `arrow_at(x, n)` is the source arrow at `x + shift`, where the reflected
/// source reads `1 - a(-y, n)` at `y`.
#[derive(Debug, Clone)]
pub struct ArrowEnvironment {
    source: Source,
    shift: i64,
    reflected: bool,
}

/// Realizes `env` into arrows using the keyed uniforms of `uniform_seed`.
pub fn realize(env: impl Into<Arc<CookieEnvironment>>, uniform_seed: u64) -> ArrowEnvironment {
    ArrowEnvironment {
        source: Source::Realized {
            env: env.into(),
            uniform_seed,
        },
        shift: 0,
        reflected: false,
    }
}

impl From<ArrowTable> for ArrowEnvironment {
    fn from(table: ArrowTable) -> Self {
        ArrowEnvironment {
            source: Source::Table(Arc::new(table)),
            shift: 0,
            reflected: false,
        }
    }
}

impl ArrowEnvironment {
    pub fn arrow_at(&self, x: i64, n: u32) -> Result<bool, ArrowError> {
        if n == 0 {
            return Err(ArrowError::ZeroVisitIndex);
        }
        Ok(self.arrow(x, n))
    }

    /// Unchecked accessor; `n` must be at least 1.
    #[inline]
    pub fn arrow(&self, x: i64, n: u32) -> bool {
        debug_assert!(n >= 1);
        let y = x + self.shift;
        if self.reflected {
            !self.base(-y, n)
        } else {
            self.base(y, n)
        }
    }

    #[inline]
    fn base(&self, x: i64, n: u32) -> bool {
        match &self.source {
            Source::Realized { env, uniform_seed } => threshold(uniform_at(*uniform_seed, x, n), env.cookie(x, n)),
            Source::Table(t) => t.bit(x, n),
        }
    }

    /// `b(x, i) = a(x + z, i)`.
    pub fn shift(&self, z: i64) -> ArrowEnvironment {
        ArrowEnvironment {
            shift: self.shift + z,
            ..self.clone()
        }
    }

    /// `b(x, i) = 1 - a(-x, i)`.
    pub fn reflect(&self) -> ArrowEnvironment {
        ArrowEnvironment {
            source: self.source.clone(),
            shift: -self.shift,
            reflected: !self.reflected,
        }
    }

    /// The underlying table, when this environment is an unshifted,
    /// unreflected table.
    pub fn as_table(&self) -> Option<&ArrowTable> {
        match &self.source {
            Source::Table(t) if self.shift == 0 && !self.reflected => Some(t),
            _ => None,
        }
    }

    pub fn column(&self, x: i64) -> ColumnView<'_> {
        ColumnView { env: self, x }
    }
}

/// Read access to one column `b(1), b(2), ...` (1-based).
pub trait ArrowColumn {
    fn bit(&self, i: u32) -> bool;
}

/// Column `x` of an arrow environment.
#[derive(Clone, Copy)]
pub struct ColumnView<'a> {
    env: &'a ArrowEnvironment,
    x: i64,
}

impl ArrowColumn for ColumnView<'_> {
    #[inline]
    fn bit(&self, i: u32) -> bool {
        self.env.arrow(self.x, i)
    }
}

/// A finite prefix followed by the alternating tail `0,1,0,1,...`.
#[derive(Clone, Copy, Debug)]
pub struct TailedColumn<'a>(pub &'a [bool]);

impl ArrowColumn for TailedColumn<'_> {
    #[inline]
    fn bit(&self, i: u32) -> bool {
        match self.0.get(i as usize - 1) {
            Some(&b) => b,
            None => tail_bit(i - self.0.len() as u32),
        }
    }
}

/// The complemented column `1 - b(i)`.
#[derive(Clone, Copy)]
pub struct Complement<'a, C>(pub &'a C);

impl<C: ArrowColumn> ArrowColumn for Complement<'_, C> {
    #[inline]
    fn bit(&self, i: u32) -> bool {
        !self.0.bit(i)
    }
}

impl<F: Fn(u32) -> bool> ArrowColumn for F {
    #[inline]
    fn bit(&self, i: u32) -> bool {
        self(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certification {
    Certified,
    /// No adjacent disagreement was found within the budget. This is a
    /// statement about the budget, not a proof of degeneracy.
    NotCertified,
}

/// Certifies that column `x` has an index `i <= budget - 1` with
/// `a(x, i) != a(x, i + 1)`.
pub fn nondegenerate_within(a: &ArrowEnvironment, x: i64, budget: u32) -> Certification {
    column_nondegenerate_within(&a.column(x), budget)
}

pub fn column_nondegenerate_within<C: ArrowColumn>(column: &C, budget: u32) -> Certification {
    if budget < 2 {
        return Certification::NotCertified;
    }
    let mut prev = column.bit(1);
    for i in 2..=budget {
        let b = column.bit(i);
        if b != prev {
            return Certification::Certified;
        }
        prev = b;
    }
    Certification::NotCertified
}
