//! The column transforms `U+`/`U-` and the site-indexed processes `Z+`/`Z-`.
//!
//! Columns are 1-based. `U+_b(x)` is the number of ones strictly before the
//! `x`-th zero of `b` (so `U+_b(0) = 0`), and `U-_b = U+` of the complemented
//! column.

use thiserror::Error;

use crate::arrow_env::{ArrowColumn, ArrowEnvironment, Complement};

/// Default number of column entries a single transform may scan.
pub const DEFAULT_U_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZError {
    #[error("initial value must be >= 1")]
    ZeroStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UResult {
    Finite(u64),
    /// The required zero was not found within this many entries.
    ExceedsBudget(u64),
}

impl UResult {
    pub fn finite(self) -> Option<u64> {
        match self {
            UResult::Finite(v) => Some(v),
            UResult::ExceedsBudget(_) => None,
        }
    }
}

pub fn u_plus<C: ArrowColumn>(b: &C, x: u64, budget: u64) -> UResult {
    if x == 0 {
        return UResult::Finite(0);
    }
    let mut zeros = 0u64;
    let limit = budget.min(u32::MAX as u64) as u32;
    for i in 1..=limit {
        if !b.bit(i) {
            zeros += 1;
            if zeros == x {
                return UResult::Finite(i as u64 - x);
            }
        }
    }
    UResult::ExceedsBudget(budget)
}

pub fn u_minus<C: ArrowColumn>(b: &C, x: u64, budget: u64) -> UResult {
    u_plus(&Complement(b), x, budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Reads columns `0, 1, 2, ...` with `U+`.
    Plus,
    /// Reads columns `0, -1, -2, ...` with `U-`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZStatus {
    ExtinctAt(u64),
    /// Still positive after this many steps.
    AliveAt(u64),
    BudgetExhaustedInU,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZRun {
    pub direction: Direction,
    pub start_value: u64,
    /// `Z_0, Z_1, ...`
    pub values: Vec<u64>,
    pub status: ZStatus,
}

impl ZRun {
    /// `Z_n`, reading 0 after extinction; `None` if the run stopped early for
    /// another reason.
    pub fn value_at(&self, n: usize) -> Option<u64> {
        match (self.values.get(n), self.status) {
            (Some(&v), _) => Some(v),
            (None, ZStatus::ExtinctAt(_)) => Some(0),
            _ => None,
        }
    }
}

/// Iterates `Z_n = U+_{a(n-1,.)}(Z_{n-1})` (plus) or
/// `Z_n = U-_{a(1-n,.)}(Z_{n-1})` (minus) from `Z_0 = y`.
pub fn z_run(a: &ArrowEnvironment, direction: Direction, y: u64, steps: u64, u_budget: u64) -> Result<ZRun, ZError> {
    if y == 0 {
        return Err(ZError::ZeroStart);
    }
    let mut values = vec![y];
    let mut z = y;
    for n in 1..=steps {
        let next = match direction {
            Direction::Plus => u_plus(&a.column(n as i64 - 1), z, u_budget),
            Direction::Minus => u_minus(&a.column(1 - n as i64), z, u_budget),
        };
        match next {
            UResult::Finite(v) => {
                values.push(v);
                z = v;
                if v == 0 {
                    return Ok(ZRun {
                        direction,
                        start_value: y,
                        values,
                        status: ZStatus::ExtinctAt(n),
                    });
                }
            }
            UResult::ExceedsBudget(_) => {
                return Ok(ZRun {
                    direction,
                    start_value: y,
                    values,
                    status: ZStatus::BudgetExhaustedInU,
                });
            }
        }
    }
    Ok(ZRun {
        direction,
        start_value: y,
        values,
        status: ZStatus::AliveAt(steps),
    })
}

/// `tau = inf { n : Z_n = 0 }` when the run observed it.
pub fn extinction_time(run: &ZRun) -> Option<u64> {
    match run.status {
        ZStatus::ExtinctAt(t) => Some(t),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subduality {
    Holds,
    Violated { z_plus_l: u64, z_minus_l: u64 },
    NotApplicable,
}

/// If `Z+` from `x` on `a` reaches at least `y` at step `l`, then `Z-` from
/// `y` on `a` shifted by `l - 1` is at most `x` at step `l`.
pub fn check_subduality(a: &ArrowEnvironment, x: u64, y: u64, l: u64, u_budget: u64) -> Subduality {
    if x == 0 || y == 0 || l == 0 {
        return Subduality::NotApplicable;
    }
    let Ok(plus) = z_run(a, Direction::Plus, x, l, u_budget) else {
        return Subduality::NotApplicable;
    };
    let Some(z_plus_l) = plus.value_at(l as usize) else {
        return Subduality::NotApplicable;
    };
    if z_plus_l < y {
        return Subduality::NotApplicable;
    }
    let shifted = a.shift(l as i64 - 1);
    let Ok(minus) = z_run(&shifted, Direction::Minus, y, l, u_budget) else {
        return Subduality::NotApplicable;
    };
    match minus.value_at(l as usize) {
        None => Subduality::NotApplicable,
        Some(z_minus_l) if z_minus_l <= x => Subduality::Holds,
        Some(z_minus_l) => Subduality::Violated { z_plus_l, z_minus_l },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrow_env::{ArrowTable, TailedColumn};

    fn col(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b != 0).collect()
    }

    #[test]
    fn u_plus_examples() {
        let b = col(&[1, 1, 0, 1, 0]);
        assert_eq!(u_plus(&TailedColumn(&b), 0, 10), UResult::Finite(0));
        assert_eq!(u_plus(&TailedColumn(&b), 1, 10), UResult::Finite(2));
        let alt = col(&[1, 0, 1, 0]);
        assert_eq!(u_plus(&TailedColumn(&alt), 2, 10), UResult::Finite(2));
    }

    #[test]
    fn u_minus_examples() {
        let b = col(&[1, 1, 0]);
        assert_eq!(u_minus(&TailedColumn(&b), 2, 10), UResult::Finite(0));
        let c = col(&[0, 0, 1]);
        assert_eq!(u_minus(&TailedColumn(&c), 1, 10), UResult::Finite(2));
        assert_eq!(u_minus(&TailedColumn(&c), 0, 10), UResult::Finite(0));
    }

    #[test]
    fn budget_is_reported() {
        let ones = |_: u32| true;
        assert_eq!(u_plus(&ones, 1, 50), UResult::ExceedsBudget(50));
        let b = col(&[1, 1, 0]);
        assert_eq!(u_plus(&TailedColumn(&b), 1, 2), UResult::ExceedsBudget(2));
        assert_eq!(u_plus(&TailedColumn(&b), 1, 3), UResult::Finite(2));
    }

    #[test]
    fn hand_table_goes_extinct() {
        let a: ArrowEnvironment = ArrowTable::from_columns(0, &[&[1, 0], &[0, 1]]).unwrap().into();
        let run = z_run(&a, Direction::Plus, 1, 10, 100).unwrap();
        assert_eq!(run.values, vec![1, 1, 0]);
        assert_eq!(run.status, ZStatus::ExtinctAt(2));
        assert_eq!(extinction_time(&run), Some(2));
    }

    #[test]
    fn rightward_table_survives() {
        let a: ArrowEnvironment = ArrowTable::uniform(&[1, 0]).unwrap().into();
        let run = z_run(&a, Direction::Plus, 1, 50, 100).unwrap();
        assert!(run.values.iter().all(|&v| v == 1));
        assert_eq!(run.values.len(), 51);
        assert_eq!(run.status, ZStatus::AliveAt(50));
        assert_eq!(extinction_time(&run), None);
    }

    #[test]
    fn immediate_extinction() {
        let a: ArrowEnvironment = ArrowTable::from_columns(0, &[&[0, 0, 0, 0]]).unwrap().into();
        let run = z_run(&a, Direction::Plus, 3, 10, 100).unwrap();
        assert_eq!(run.values, vec![3, 0]);
        assert_eq!(extinction_time(&run), Some(1));
        assert_eq!(z_run(&a, Direction::Plus, 0, 10, 100), Err(ZError::ZeroStart));
    }

    #[test]
    fn subduality_example() {
        let a: ArrowEnvironment = ArrowTable::from_columns(0, &[&[1, 1, 0]]).unwrap().into();
        assert_eq!(check_subduality(&a, 1, 2, 1, 100), Subduality::Holds);
        // Z+_1 = 2 < 3
        assert_eq!(check_subduality(&a, 1, 3, 1, 100), Subduality::NotApplicable);
    }

    #[test]
    fn minus_reads_left_columns() {
        let a: ArrowEnvironment = ArrowTable::from_columns(-2, &[&[0, 1], &[1, 0], &[0, 0]])
            .unwrap()
            .into();
        let run = z_run(&a, Direction::Minus, 1, 3, 100).unwrap();
        // a(0)=(0,0,0,1..): zeros before first one = 3
        // a(-1)=(1,0,..): U-(3) = zeros before third one in (1,0,0,1,0,1) = 3
        // a(-2)=(0,1,0,1..): U-(3) = zeros before third one = 3
        assert_eq!(run.values, vec![1, 3, 3, 3]);
    }
}
