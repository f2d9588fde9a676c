//! Conditional-independence queries.
//!
//! [`CiProvider`] is implemented by the Fisher-z partial-correlation test
//! over sample data ([`FisherZProvider`]) and by the exact d-separation
//! oracle over a known graph ([`DSeparationOracle`]). Both count the queries
//! they answer.

mod data;
mod fisher;
mod oracle;
mod prefix;
mod stats;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::{Dataset, DatasetError};
pub use fisher::FisherZProvider;
pub use oracle::DSeparationOracle;
pub use stats::{
    correlation_matrix, fisher_z_test, partial_correlation, MAX_CONDITION_NUMBER, R_CLAMP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiError {
    #[error("variable index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("query endpoints must be distinct, got {0} twice")]
    SameEndpoint(usize),
    #[error("query endpoint {0} is also in the conditioning set")]
    EndpointConditioned(usize),
    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },
    #[error("need at least {needed} samples, have {have}")]
    TooFewSamples { needed: usize, have: usize },
    #[error("correlation submatrix over {variables:?} is near-singular (condition number {condition:e})")]
    NearSingular {
        variables: Vec<usize>,
        condition: f64,
    },
    #[error("significance level {0} is outside (0, 1)")]
    InvalidAlpha(f64),
}

/// One test `X_i ⫫ X_j | X_Z` over 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiQuery {
    pub i: usize,
    pub j: usize,
    /// Sorted, without duplicates.
    pub conditioning: Vec<usize>,
}

impl CiQuery {
    pub fn new<I>(i: usize, j: usize, conditioning: I) -> Result<Self, CiError>
    where
        I: IntoIterator<Item = usize>,
    {
        if i == j {
            return Err(CiError::SameEndpoint(i));
        }
        let mut conditioning: Vec<usize> = conditioning.into_iter().collect();
        conditioning.sort_unstable();
        conditioning.dedup();
        if let Some(&v) = conditioning.iter().find(|&&v| v == i || v == j) {
            return Err(CiError::EndpointConditioned(v));
        }
        Ok(Self { i, j, conditioning })
    }

    pub fn check_range(&self, n: usize) -> Result<(), CiError> {
        let bad = std::iter::once(self.i)
            .chain(std::iter::once(self.j))
            .chain(self.conditioning.iter().copied())
            .find(|&v| v == 0 || v > n);
        match bad {
            Some(index) => Err(CiError::IndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }
}

/// Outcome of one query. The statistics are absent for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub independent: bool,
    /// Absolute Fisher-z statistic.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub partial_correlation: Option<f64>,
}

impl CiTestResult {
    pub fn oracle(independent: bool) -> Self {
        Self {
            independent,
            statistic: None,
            p_value: None,
            partial_correlation: None,
        }
    }
}

pub trait CiProvider: Send + Sync {
    /// Number of observed variables the provider answers for.
    fn n_vars(&self) -> usize;

    /// Answers one query and bumps the query counter.
    fn is_independent(&self, query: &CiQuery) -> Result<CiTestResult, CiError>;

    /// Number of `is_independent` calls so far.
    fn query_count(&self) -> u64;
}

/// Exact, thread-safe invocation counter.
#[derive(Debug, Default)]
pub(crate) struct QueryCounter(AtomicU64);

impl QueryCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_normalizes_conditioning() {
        let q = CiQuery::new(1, 4, [3, 2, 3]).unwrap();
        assert_eq!(q.conditioning, vec![2, 3]);
    }

    #[test]
    fn query_rejects_endpoint_in_conditioning() {
        assert_eq!(
            CiQuery::new(1, 4, [4]),
            Err(CiError::EndpointConditioned(4))
        );
        assert_eq!(CiQuery::new(2, 2, []), Err(CiError::SameEndpoint(2)));
    }

    #[test]
    fn range_check() {
        let q = CiQuery::new(1, 4, [5]).unwrap();
        assert_eq!(
            q.check_range(4),
            Err(CiError::IndexOutOfRange { index: 5, n: 4 })
        );
        assert!(q.check_range(5).is_ok());
    }
}
