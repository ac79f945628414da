//! Instruction accounting shared by table builders and host-side procedures.
//!
//! Host procedures do not run as VM bytecode. They call the methods of
//! [`Meter`] for every table read, addition, test and selection, and each call
//! charges what the equivalent RAM instructions would cost. Every produced
//! value and every table index is checked against the content bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker stored in table cells whose value is undefined (for example the
/// `y = 0` column of the digit-division tables). Reading it is an error.
pub const UNDEFINED: u64 = u64::MAX;

/// Default guard on atomic steps; overridable with `CSTPP_STEP_LIMIT`.
pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000_000;

/// Reads the step guard from the environment, falling back to the default.
pub fn step_limit_from_env() -> u64 {
    std::env::var("CSTPP_STEP_LIMIT")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_STEP_LIMIT)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostMeter {
    pub instruction_count: u64,
    pub atomic_step_count: u64,
}

impl CostMeter {
    /// Charges `n` instructions, each one atomic step.
    pub fn charge(&mut self, n: u64) {
        self.instruction_count += n;
        self.atomic_step_count += n;
    }

    /// Charges expression nodes that only count as atomic steps.
    pub fn charge_nodes(&mut self, n: u64) {
        self.atomic_step_count += n;
    }

    pub fn merge(&mut self, other: &CostMeter) {
        self.instruction_count += other.instruction_count;
        self.atomic_step_count += other.atomic_step_count;
    }

    pub fn since(&self, earlier: &CostMeter) -> CostMeter {
        CostMeter {
            instruction_count: self.instruction_count - earlier.instruction_count,
            atomic_step_count: self.atomic_step_count - earlier.atomic_step_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeterError {
    #[error("value {value} reaches the content bound {bound}")]
    BoundViolation { value: u64, bound: u64 },
    #[error("index {index} outside table {table} of length {len}")]
    TableIndex {
        table: &'static str,
        index: u64,
        len: usize,
    },
    #[error("read of undefined cell {table}[{index}]")]
    Undefined { table: &'static str, index: u64 },
    #[error("step limit {limit} exceeded")]
    StepLimit { limit: u64 },
}

/// A named flat array of precomputed values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub name: &'static str,
    pub data: Vec<u64>,
}

impl Table {
    pub fn new(name: &'static str, data: Vec<u64>) -> Self {
        Table { name, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Unmetered access for oracles and serialization.
    pub fn get(&self, i: usize) -> Option<u64> {
        self.data.get(i).copied().filter(|&v| v != UNDEFINED)
    }
}

/// Cost counter plus the content bound and step guard it enforces.
#[derive(Debug, Clone)]
pub struct Meter {
    pub counts: CostMeter,
    bound: u64,
    limit: u64,
}

impl Meter {
    pub fn new(bound: u64) -> Self {
        Meter {
            counts: CostMeter::default(),
            bound,
            limit: step_limit_from_env(),
        }
    }

    pub fn with_limit(bound: u64, limit: u64) -> Self {
        Meter {
            counts: CostMeter::default(),
            bound,
            limit,
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn set_bound(&mut self, bound: u64) {
        self.bound = bound;
    }

    pub fn steps(&self) -> u64 {
        self.counts.instruction_count
    }

    pub fn charge(&mut self, n: u64) -> Result<(), MeterError> {
        self.counts.charge(n);
        if self.counts.atomic_step_count > self.limit {
            return Err(MeterError::StepLimit { limit: self.limit });
        }
        Ok(())
    }

    pub fn check(&self, value: u64) -> Result<u64, MeterError> {
        if value >= self.bound {
            Err(MeterError::BoundViolation {
                value,
                bound: self.bound,
            })
        } else {
            Ok(value)
        }
    }

    /// `r <- a + b`.
    pub fn add(&mut self, a: u64, b: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        self.check(a.saturating_add(b))
    }

    /// Sum of several registers, one instruction per addition.
    pub fn sum(&mut self, terms: &[u64]) -> Result<u64, MeterError> {
        let mut acc = match terms.first() {
            Some(&t) => t,
            None => return Ok(0),
        };
        for &t in &terms[1..] {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    /// `r <- T[i]`.
    pub fn load(&mut self, table: &Table, index: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        self.check(index)?;
        let v = *table
            .data
            .get(index as usize)
            .ok_or(MeterError::TableIndex {
                table: table.name,
                index,
                len: table.data.len(),
            })?;
        if v == UNDEFINED {
            return Err(MeterError::Undefined {
                table: table.name,
                index,
            });
        }
        Ok(v)
    }

    /// Indirect read from a scratch vector held in registers.
    pub fn load_reg(&mut self, regs: &[u64], index: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        self.check(index)?;
        regs.get(index as usize)
            .copied()
            .ok_or(MeterError::TableIndex {
                table: "scratch",
                index,
                len: regs.len(),
            })
    }

    /// Register copy.
    pub fn mov(&mut self, v: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        Ok(v)
    }

    /// 1 if `a == 0`, else 0: a `jzero` and one constant assignment on
    /// either branch.
    pub fn is_zero(&mut self, a: u64) -> Result<u64, MeterError> {
        self.charge(2)?;
        Ok(u64::from(a == 0))
    }

    /// Branch-free choice `if flag == 0 { a } else { b }` realized as two
    /// scratch stores and one indirect load.
    pub fn select(&mut self, flag: u64, a: u64, b: u64) -> Result<u64, MeterError> {
        self.charge(3)?;
        Ok(if flag == 0 { a } else { b })
    }

    /// Unit-cost `div` primitive.
    pub fn div(&mut self, a: u64, b: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        Ok(a / b)
    }

    /// Unit-cost `mod` primitive.
    pub fn rem(&mut self, a: u64, b: u64) -> Result<u64, MeterError> {
        self.charge(1)?;
        Ok(a % b)
    }
}
