//! Conditional-independence tests behind one interface.
//!
//! Every discovery algorithm asks questions of the form `X ⊥ Y | Z` through
//! [`CondIndTest`]. Sample-based tests implement [`ArrayTest`] and receive the
//! aligned arrays; the separation oracle answers from a known graph instead.

pub mod cmi;
pub mod dcor;
pub mod gp;
pub mod gpdc;
pub mod nulltable;
pub mod oracle;
pub mod parcorr;

use serde::{Deserialize, Serialize};

use crate::dataset::{build_lagged_arrays, LaggedSampleArrays, LaggedVariable, TimeSeriesDataset};
use crate::error::Result;

pub use cmi::{Cmi, CmiTestConfig};
pub use gpdc::Gpdc;
pub use nulltable::GpdcNullTable;
pub use oracle::SeparationOracle;
pub use parcorr::ParCorr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiOutcome {
    /// ρ for ParCorr, dCor for GPDC, nats for CMI.
    pub statistic: f64,
    pub p_value: f64,
    /// t degrees of freedom for ParCorr, sample size otherwise.
    pub dof_or_n: usize,
}

/// One test `x ⊥ y | z` on the window `tau_max..T` of `ds`.
#[derive(Debug, Clone, Copy)]
pub struct CiQuery<'a> {
    pub ds: &'a TimeSeriesDataset,
    pub x: LaggedVariable,
    pub y: LaggedVariable,
    pub z: &'a [LaggedVariable],
    pub tau_max: usize,
    /// Seed for randomized tests; callers derive it from the query content.
    pub seed: u64,
}

impl CiQuery<'_> {
    pub fn arrays(&self) -> Result<LaggedSampleArrays> {
        build_lagged_arrays(self.ds, self.x, self.y, self.z, self.tau_max)
    }
}

pub trait CondIndTest: Send + Sync {
    fn name(&self) -> &'static str;
    fn test(&self, q: &CiQuery<'_>) -> Result<CiOutcome>;
}

/// A test computed purely from aligned sample arrays.
pub trait ArrayTest: Send + Sync {
    fn name(&self) -> &'static str;
    fn test_arrays(&self, arrays: &LaggedSampleArrays, seed: u64) -> Result<CiOutcome>;
}

impl<T: ArrayTest> CondIndTest for T {
    fn name(&self) -> &'static str {
        ArrayTest::name(self)
    }

    fn test(&self, q: &CiQuery<'_>) -> Result<CiOutcome> {
        self.test_arrays(&q.arrays()?, q.seed)
    }
}
