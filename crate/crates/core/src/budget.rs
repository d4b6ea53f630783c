use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Upper bound on the number of objects an enumeration may materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(100_000);

    pub fn unlimited() -> Self {
        Budget(u64::MAX)
    }

    /// Fails with the computed cardinality when it exceeds the budget.
    pub fn check(self, what: &'static str, count: &BigUint) -> Result<usize> {
        match u64::try_from(count) {
            Ok(c) if c <= self.0 => Ok(c as usize),
            _ => Err(Error::BudgetExceeded {
                what,
                count: count.to_string(),
                budget: self.0,
            }),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}
