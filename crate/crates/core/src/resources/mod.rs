//! Analytical resource model: per-category estimates, budgets, before/after
//! comparison and replication headroom.

mod compare;
mod costs;
mod estimate;

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare, scaling_headroom, DiffReport, DiffRow};
pub use costs::{BufferCosts, CostTable, PlumbingCosts, BRAM_BLOCK_BITS};
pub use estimate::estimate;

use crate::ir::IrError;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("no cost entry for operation `{0}`")]
    UnknownOpCost(String),
    #[error("budget category `{0}` must be positive")]
    NonPositiveBudget(Category),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("{0}")]
    Build(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    LutLogic,
    LutMemory,
    Registers,
    Bram,
    Dsp,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::LutLogic,
        Category::LutMemory,
        Category::Registers,
        Category::Bram,
        Category::Dsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::LutLogic => "lut_logic",
            Category::LutMemory => "lut_memory",
            Category::Registers => "registers",
            Category::Bram => "bram",
            Category::Dsp => "dsp",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Usage in the five FPGA resource categories. BRAM is in 18 Kb blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceVector {
    #[serde(default)]
    pub lut_logic: u64,
    #[serde(default)]
    pub lut_memory: u64,
    #[serde(default)]
    pub registers: u64,
    #[serde(default)]
    pub bram: u64,
    #[serde(default)]
    pub dsp: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        lut_logic: 0,
        lut_memory: 0,
        registers: 0,
        bram: 0,
        dsp: 0,
    };

    pub fn get(&self, c: Category) -> u64 {
        match c {
            Category::LutLogic => self.lut_logic,
            Category::LutMemory => self.lut_memory,
            Category::Registers => self.registers,
            Category::Bram => self.bram,
            Category::Dsp => self.dsp,
        }
    }

    pub fn get_mut(&mut self, c: Category) -> &mut u64 {
        match c {
            Category::LutLogic => &mut self.lut_logic,
            Category::LutMemory => &mut self.lut_memory,
            Category::Registers => &mut self.registers,
            Category::Bram => &mut self.bram,
            Category::Dsp => &mut self.dsp,
        }
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &ResourceVector) -> bool {
        Category::ALL.iter().all(|c| self.get(*c) <= other.get(*c))
    }

    pub fn fits(&self, budget: &Budget) -> bool {
        self.le(&budget.0)
    }

    /// Percentage of the budget used, per category.
    pub fn percent_of(&self, budget: &Budget, c: Category) -> f64 {
        100.0 * self.get(c) as f64 / budget.0.get(c) as f64
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(mut self, rhs: ResourceVector) -> ResourceVector {
        self += rhs;
        self
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: ResourceVector) {
        for c in Category::ALL {
            *self.get_mut(c) += rhs.get(c);
        }
    }
}

impl Mul<u64> for ResourceVector {
    type Output = ResourceVector;

    fn mul(mut self, k: u64) -> ResourceVector {
        for c in Category::ALL {
            *self.get_mut(c) *= k;
        }
        self
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> ResourceVector {
        iter.fold(ResourceVector::ZERO, Add::add)
    }
}

/// Device capacity; every category is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ResourceVector", into = "ResourceVector")]
pub struct Budget(ResourceVector);

impl Budget {
    /// One super logic region of an Alveo U280.
    pub const U280_SLR0: ResourceVector = ResourceVector {
        lut_logic: 439_000,
        lut_memory: 205_000,
        registers: 879_000,
        bram: 672,
        dsp: 2880,
    };

    pub fn new(v: ResourceVector) -> Result<Budget, ResourceError> {
        match Category::ALL.into_iter().find(|c| v.get(*c) == 0) {
            Some(c) => Err(ResourceError::NonPositiveBudget(c)),
            None => Ok(Budget(v)),
        }
    }

    pub fn capacity(&self) -> &ResourceVector {
        &self.0
    }

    pub fn load(path: &Path) -> Result<Budget, ResourceError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget(Self::U280_SLR0)
    }
}

impl TryFrom<ResourceVector> for Budget {
    type Error = ResourceError;

    fn try_from(v: ResourceVector) -> Result<Self, Self::Error> {
        Budget::new(v)
    }
}

impl From<Budget> for ResourceVector {
    fn from(b: Budget) -> Self {
        b.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_rejects_zero_category() {
        let mut v = Budget::U280_SLR0;
        v.bram = 0;
        assert!(matches!(
            Budget::new(v),
            Err(ResourceError::NonPositiveBudget(Category::Bram))
        ));
    }

    #[test]
    fn budget_json_round_trip() {
        let b = Budget::default();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(
            s,
            r#"{"lut_logic":439000,"lut_memory":205000,"registers":879000,"bram":672,"dsp":2880}"#
        );
        assert_eq!(serde_json::from_str::<Budget>(&s).unwrap(), b);
        assert!(serde_json::from_str::<Budget>(r#"{"dsp":0}"#).is_err());
    }

    #[test]
    fn vector_arithmetic() {
        let a = ResourceVector {
            dsp: 2,
            registers: 5,
            ..Default::default()
        };
        let s = a + a * 3;
        assert_eq!(s.dsp, 8);
        assert_eq!(s.registers, 20);
        assert!(a.le(&s));
        assert!(!s.le(&a));
    }
}
