use super::prefix::PrefixPrecision;
use super::MAX_CONDITION_NUMBER;
use super::{
    correlation_matrix, fisher_z_test, partial_correlation, CiError, CiProvider, CiQuery,
    CiTestResult, Dataset, QueryCounter,
};
use crate::scalar::{Matrix, Scalar};

/// Fisher-z test over a correlation matrix computed once from the data.
///
/// When `N² κ₁(corr) <= MAX_CONDITION_NUMBER`, every principal submatrix is
/// within the near-singular guard, and partial correlations for prefix-shaped
/// conditioning sets are read from one triangular factor of the whole matrix
/// instead of inverting a submatrix per query.
#[derive(Debug)]
pub struct FisherZProvider<T> {
    corr: Matrix<T>,
    fast: Option<PrefixPrecision<T>>,
    n_samples: usize,
    alpha: f64,
    queries: QueryCounter,
}

impl<T: Scalar> FisherZProvider<T> {
    pub fn new(data: &Dataset<T>, alpha: f64) -> Result<Self, CiError> {
        Self::from_correlation(correlation_matrix(data)?, data.n_samples(), alpha)
    }

    pub fn from_correlation(
        corr: Matrix<T>,
        n_samples: usize,
        alpha: f64,
    ) -> Result<Self, CiError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CiError::InvalidAlpha(alpha));
        }
        assert_eq!(
            corr.rows(),
            corr.cols(),
            "correlation matrix must be square"
        );
        let n = corr.rows() as f64;
        let fast = PrefixPrecision::new(&corr)
            .filter(|p| n * n * p.condition_one() <= MAX_CONDITION_NUMBER);
        Ok(Self {
            corr,
            fast,
            n_samples,
            alpha,
            queries: QueryCounter::default(),
        })
    }

    pub fn correlation(&self) -> &Matrix<T> {
        &self.corr
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Whether the factored route is in use.
    pub fn is_factored(&self) -> bool {
        self.fast.is_some()
    }
}

impl<T: Scalar> CiProvider for FisherZProvider<T> {
    fn n_vars(&self) -> usize {
        self.corr.rows()
    }

    fn is_independent(&self, query: &CiQuery) -> Result<CiTestResult, CiError> {
        self.queries.bump();
        query.check_range(self.n_vars())?;
        // canonical endpoint order keeps (i, j) and (j, i) bit-identical
        let (a, b) = (query.i.min(query.j), query.i.max(query.j));
        let zero_based: Vec<usize> = query.conditioning.iter().map(|v| v - 1).collect();
        let fast = match &self.fast {
            Some(p) if !zero_based.is_empty() => p.partial_correlation(a - 1, b - 1, &zero_based),
            _ => None,
        };
        let r = match fast {
            Some(r) => r,
            None => partial_correlation(&self.corr, a, b, &query.conditioning)?,
        };
        fisher_z_test(r, self.n_samples, query.conditioning.len(), self.alpha)
    }

    fn query_count(&self) -> u64 {
        self.queries.get()
    }
}
