//! Partial correlations for conditioning sets that are mostly a prefix
//! `{1, .., m}` of the variable order, which is what discovery issues.
//!
//! With `Σ = L Lᵀ` and `M = L⁻¹`, the precision matrix of any leading block
//! `P = {0..m}` is `M_Pᵀ M_P`, so a single entry costs `O(m)`. A few extra
//! variables `E` are added by a block update and a few holes `D` inside the
//! prefix are removed by a Schur complement on the precision matrix.

use crate::scalar::{Matrix, Scalar};

const MAX_HOLES: usize = 3;
const MAX_EXTRA: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct PrefixPrecision<T> {
    corr: Matrix<T>,
    /// Inverse of the lower Cholesky factor.
    m_inv: Matrix<T>,
}

impl<T: Scalar> PrefixPrecision<T> {
    /// `None` if the matrix is not numerically positive definite.
    pub fn new(corr: &Matrix<T>) -> Option<Self> {
        let n = corr.rows();
        let mut l = Matrix::<T>::zeros(n, n);
        for r in 0..n {
            for c in 0..=r {
                let mut s = corr[(r, c)];
                for k in 0..c {
                    s = s - l[(r, k)] * l[(c, k)];
                }
                if r == c {
                    if !s.is_finite() || s <= T::zero() {
                        return None;
                    }
                    l[(r, r)] = s.sqrt();
                } else {
                    l[(r, c)] = s / l[(c, c)];
                }
            }
        }
        let mut m_inv = Matrix::<T>::zeros(n, n);
        for c in 0..n {
            m_inv[(c, c)] = T::one() / l[(c, c)];
            for r in c + 1..n {
                let mut s = T::zero();
                for k in c..r {
                    s = s + l[(r, k)] * m_inv[(k, c)];
                }
                m_inv[(r, c)] = -s / l[(r, r)];
            }
        }
        Some(Self {
            corr: corr.clone(),
            m_inv,
        })
    }

    /// 1-norm condition number of the whole matrix.
    pub fn condition_one(&self) -> f64 {
        let n = self.corr.rows();
        let mut inv_norm = T::zero();
        for c in 0..n {
            let col = (0..n).fold(T::zero(), |acc, r| acc + self.prefix_entry(n, r, c).abs());
            inv_norm = inv_norm.max(col);
        }
        (self.corr.norm_one() * inv_norm).as_f64()
    }

    /// Entry `(a, b)` of the precision matrix of the leading `m` variables.
    fn prefix_entry(&self, m: usize, a: usize, b: usize) -> T {
        let mut s = T::zero();
        for c in a.max(b)..m {
            s = s + self.m_inv[(c, a)] * self.m_inv[(c, b)];
        }
        s
    }

    /// Partial correlation of `x` and `y` (0-based) given `cond`, or `None`
    /// when the set is not prefix-shaped enough for the fast route.
    pub fn partial_correlation(&self, x: usize, y: usize, cond: &[usize]) -> Option<T> {
        let mut set: Vec<usize> = cond.iter().copied().chain([x, y]).collect();
        set.sort_unstable();
        set.dedup();

        // largest prefix {0..m} missing at most MAX_HOLES members of the set
        let t = set
            .iter()
            .enumerate()
            .rev()
            .find(|(t, &a)| a - t <= MAX_HOLES)?
            .0;
        let m = set[t] + 1;
        let extra: Vec<usize> = set[t + 1..].to_vec();
        if extra.len() > MAX_EXTRA {
            return None;
        }
        let holes: Vec<usize> = (0..m).filter(|v| set.binary_search(v).is_err()).collect();

        // indices of the precision entries needed: endpoints then holes
        let mut q = vec![x, y];
        q.extend(&holes);
        let e = extra.len();

        // U = M_P B with B = Σ[P, E]; then Σ_EE - Uᵀ U is the Schur complement
        let mut u = vec![T::zero(); m * e];
        for (col, &v) in extra.iter().enumerate() {
            for r in 0..m {
                let mut s = T::zero();
                for k in 0..=r {
                    s = s + self.m_inv[(r, k)] * self.corr[(k, v)];
                }
                u[r * e + col] = s;
            }
        }
        let s_inv = if e > 0 {
            let mut s = Matrix::<T>::zeros(e, e);
            for a in 0..e {
                for b in 0..e {
                    let mut acc = self.corr[(extra[a], extra[b])];
                    for r in 0..m {
                        acc = acc - u[r * e + a] * u[r * e + b];
                    }
                    s[(a, b)] = acc;
                }
            }
            Some(s.inverse()?)
        } else {
            None
        };
        // W = Ω_P B restricted to the rows in q that lie in P
        let w_row = |p: usize| -> Vec<T> {
            (0..e)
                .map(|col| {
                    (p..m).fold(T::zero(), |acc, c| {
                        acc + self.m_inv[(c, p)] * u[c * e + col]
                    })
                })
                .collect()
        };
        let in_prefix = |v: usize| v < m;
        let w: Vec<Option<Vec<T>>> = q.iter().map(|&v| in_prefix(v).then(|| w_row(v))).collect();
        let extra_pos = |v: usize| extra.iter().position(|&x| x == v);

        let entry = |a: usize, b: usize| -> T {
            let (va, vb) = (q[a], q[b]);
            match (&w[a], &w[b], &s_inv) {
                (Some(wa), Some(wb), Some(si)) => {
                    let mut acc = self.prefix_entry(m, va, vb);
                    for r in 0..e {
                        for c in 0..e {
                            acc = acc + wa[r] * si[(r, c)] * wb[c];
                        }
                    }
                    acc
                }
                (Some(_), Some(_), None) => self.prefix_entry(m, va, vb),
                (Some(wa), None, Some(si)) => {
                    let cb = extra_pos(vb).unwrap_or(0);
                    -(0..e).fold(T::zero(), |acc, r| acc + wa[r] * si[(r, cb)])
                }
                (None, Some(wb), Some(si)) => {
                    let ca = extra_pos(va).unwrap_or(0);
                    -(0..e).fold(T::zero(), |acc, r| acc + si[(ca, r)] * wb[r])
                }
                (None, None, Some(si)) => {
                    si[(extra_pos(va).unwrap_or(0), extra_pos(vb).unwrap_or(0))]
                }
                _ => T::nan(),
            }
        };

        let k = q.len();
        let mut omega = Matrix::<T>::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = entry(a, b);
                omega[(a, b)] = v;
                omega[(b, a)] = v;
            }
        }
        let (mut oxx, mut oyy, mut oxy) = (omega[(0, 0)], omega[(1, 1)], omega[(0, 1)]);
        if k > 2 {
            let idx: Vec<usize> = (2..k).collect();
            let dd_inv = omega.principal_submatrix(&idx).inverse()?;
            let h = k - 2;
            let quad = |a: usize, b: usize| {
                let mut acc = T::zero();
                for r in 0..h {
                    for c in 0..h {
                        acc = acc + omega[(a, r + 2)] * dd_inv[(r, c)] * omega[(c + 2, b)];
                    }
                }
                acc
            };
            oxx = oxx - quad(0, 0);
            oyy = oyy - quad(1, 1);
            oxy = oxy - quad(0, 1);
        }
        let denom = (oxx * oyy).sqrt();
        if !denom.is_finite() || denom <= T::zero() {
            return None;
        }
        let r = -oxy / denom;
        r.is_finite().then(|| r.max(-T::one()).min(T::one()))
    }
}
