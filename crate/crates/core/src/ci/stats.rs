use statrs::distribution::{ContinuousCDF, Normal};

use super::{CiError, CiTestResult, Dataset};
use crate::scalar::{Matrix, Scalar};

/// Submatrices with a larger 1-norm condition number are rejected.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// |r| is clamped to this before the Fisher transform.
pub const R_CLAMP: f64 = 1.0 - 1e-12;

/// Pearson correlation matrix of the dataset's columns.
pub fn correlation_matrix<T: Scalar>(data: &Dataset<T>) -> Result<Matrix<T>, CiError> {
    let n = data.n_samples();
    let p = data.n_vars();
    if n < 2 {
        return Err(CiError::TooFewSamples { needed: 2, have: n });
    }
    let values = data.values();
    let count = T::of(n as f64);
    let means: Vec<T> = (0..p)
        .map(|c| values.column(c).fold(T::zero(), |a, v| a + v) / count)
        .collect();

    let mut cov = Matrix::<T>::zeros(p, p);
    let mut centered = vec![T::zero(); p];
    for r in 0..n {
        for (c, (dst, &v)) in centered.iter_mut().zip(values.row(r)).enumerate() {
            *dst = v - means[c];
        }
        for a in 0..p {
            let xa = centered[a];
            for b in a..p {
                cov[(a, b)] = cov[(a, b)] + xa * centered[b];
            }
        }
    }

    let var: Vec<T> = (0..p).map(|c| cov[(c, c)]).collect();
    if let Some(column) = var.iter().position(|s| *s <= T::zero() || !s.is_finite()) {
        return Err(CiError::ZeroVariance { column: column + 1 });
    }
    let mut corr = Matrix::identity(p);
    for a in 0..p {
        for b in a + 1..p {
            let r = (cov[(a, b)] / (var[a] * var[b]).sqrt())
                .max(-T::one())
                .min(T::one());
            corr[(a, b)] = r;
            corr[(b, a)] = r;
        }
    }
    Ok(corr)
}

/// Partial correlation of variables `i` and `j` (1-based) given
/// `conditioning`, read off the inverse of the correlation submatrix:
/// `-Ω_ij / sqrt(Ω_ii Ω_jj)`. With an empty conditioning set this is
/// `corr[i][j]` exactly.
pub fn partial_correlation<T: Scalar>(
    corr: &Matrix<T>,
    i: usize,
    j: usize,
    conditioning: &[usize],
) -> Result<T, CiError> {
    let n = corr.rows();
    for &v in [i, j].iter().chain(conditioning) {
        if v == 0 || v > n {
            return Err(CiError::IndexOutOfRange { index: v, n });
        }
    }
    if i == j {
        return Err(CiError::SameEndpoint(i));
    }
    if conditioning.is_empty() {
        return Ok(corr[(i - 1, j - 1)]);
    }
    let idx: Vec<usize> = [i, j].iter().chain(conditioning).map(|v| v - 1).collect();
    let sub = corr.principal_submatrix(&idx);
    let near_singular = |condition: f64| CiError::NearSingular {
        variables: [i, j].iter().chain(conditioning).copied().collect(),
        condition,
    };
    let inv = sub.inverse().ok_or_else(|| near_singular(f64::INFINITY))?;
    let condition = (sub.norm_one() * inv.norm_one()).as_f64();
    if !condition.is_finite() || condition > MAX_CONDITION_NUMBER {
        return Err(near_singular(condition));
    }
    let denom = (inv[(0, 0)] * inv[(1, 1)]).sqrt();
    let r = -inv[(0, 1)] / denom;
    Ok(r.max(-T::one()).min(T::one()))
}

/// Fisher's z test of zero partial correlation.
///
/// `statistic = sqrt(n - |Z| - 3) * |atanh(r)|`; independence is accepted
/// iff `statistic <= Φ⁻¹(1 - alpha/2)`, and `p = 2 (1 - Φ(statistic))`. A
/// correlation of exactly ±1 is reported as dependent with `p = 0`.
pub fn fisher_z_test<T: Scalar>(
    r: T,
    n_samples: usize,
    cond_size: usize,
    alpha: f64,
) -> Result<CiTestResult, CiError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CiError::InvalidAlpha(alpha));
    }
    let needed = cond_size + 4;
    if n_samples < needed {
        return Err(CiError::TooFewSamples {
            needed,
            have: n_samples,
        });
    }
    let r64 = r.as_f64();
    let normal = Normal::standard();
    let dof = ((n_samples - cond_size - 3) as f64).sqrt();
    let clamped = r64.clamp(-R_CLAMP, R_CLAMP);
    let z = 0.5 * ((1.0 + clamped) / (1.0 - clamped)).ln();
    let statistic = dof * z.abs();
    if r64.abs() >= 1.0 {
        return Ok(CiTestResult {
            independent: false,
            statistic: Some(statistic),
            p_value: Some(0.0),
            partial_correlation: Some(r64),
        });
    }
    let critical = normal.inverse_cdf(1.0 - alpha / 2.0);
    let p_value = (2.0 * normal.sf(statistic)).clamp(0.0, 1.0);
    Ok(CiTestResult {
        independent: statistic <= critical,
        statistic: Some(statistic),
        p_value: Some(p_value),
        partial_correlation: Some(r64),
    })
}
