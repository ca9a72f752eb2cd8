use crate::error::{Error, Result};

/// Upper bound on bytes a dense-matrix stage may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    bytes: u64,
}

impl MemoryBudget {
    pub const DEFAULT_MIB: u64 = 2048;

    pub fn from_mib(mib: u64) -> Self {
        Self {
            bytes: mib.saturating_mul(1 << 20),
        }
    }

    pub fn from_bytes(bytes: u64) -> Self {
        Self { bytes }
    }

    pub fn unlimited() -> Self {
        Self { bytes: u64::MAX }
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    /// Bytes for `copies` dense `n × n` f64 matrices.
    pub fn dense_bytes(n: usize, copies: u64) -> u64 {
        (n as u64)
            .saturating_mul(n as u64)
            .saturating_mul(8)
            .saturating_mul(copies)
    }

    pub fn check(&self, what: &'static str, required_bytes: u64) -> Result<()> {
        if required_bytes > self.bytes {
            return Err(Error::Capacity {
                what,
                required_bytes,
                budget_bytes: self.bytes,
            });
        }
        Ok(())
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::from_mib(Self::DEFAULT_MIB)
    }
}
