//! Exact rational probability arithmetic.
//!
//! Planner expectations and chance-constraint tests run on `BigRational`
//! values so that two algebraically equal routes produce identical results,
//! with no floating-point tie ambiguity at thresholds. Finite doubles convert
//! exactly (every `f64` is a dyadic rational).

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Prob = BigRational;

/// Exact conversion; errors on non-finite or out-of-range values.
pub fn prob_from_f64(x: f64) -> Result<Prob> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "probability {x} outside [0, 1]"
        )));
    }
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidArgument(format!("cannot represent {x} as a rational")))
}

pub fn ratio_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("{x} is not finite")));
    }
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidArgument(format!("cannot represent {x} as a rational")))
}

pub fn to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// Square row-stochastic matrix over exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    n: usize,
    rows: Vec<Vec<Prob>>,
}

impl ProbMatrix {
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Prob::one() } else { Prob::zero() })
                    .collect()
            })
            .collect();
        Self { n, rows }
    }

    /// Build from exact rows, normalizing each row by its exact sum. The
    /// caller is expected to have validated the row sums to its own
    /// tolerance; a zero row is rejected.
    pub fn from_rows(rows: Vec<Vec<Prob>>) -> Result<Self> {
        let n = rows.len();
        let mut out = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "kernel row {i} has length {} for a {n}-state chain",
                    row.len()
                )));
            }
            let sum: Prob = row.iter().cloned().sum();
            if sum.is_zero() {
                return Err(Error::InvalidArgument(format!("kernel row {i} sums to 0")));
            }
            if row.iter().any(|p| p < &Prob::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "kernel row {i} has a negative entry"
                )));
            }
            out.push(row.into_iter().map(|p| p / &sum).collect());
        }
        Ok(Self { n, rows: out })
    }

    /// Build from `f64` rows; each row must sum to 1 within `tol` before the
    /// exact renormalization.
    pub fn from_f64_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let mut exact = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "kernel row {i} sums to {sum}, expected 1 within {tol}"
                )));
            }
            exact.push(row.iter().map(|&p| prob_from_f64(p)).collect::<Result<_>>()?);
        }
        Self::from_rows(exact)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &Prob {
        &self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[Prob] {
        &self.rows[i]
    }

    pub fn mul(&self, other: &ProbMatrix) -> ProbMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut rows = vec![vec![Prob::zero(); n]; n];
        for (i, out) in rows.iter_mut().enumerate() {
            for (k, a) in self.rows[i].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (j, b) in other.rows[k].iter().enumerate() {
                    if b.is_zero() {
                        continue;
                    }
                    out[j] += a * b;
                }
            }
        }
        ProbMatrix { n, rows }
    }

    pub fn to_f64ptr(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(to_f64).collect())
            .collect()
    }
}

/// Normalize a non-negative weight vector to an exact distribution.
pub fn normalize(weights: &[Prob]) -> Result<Vec<Prob>> {
    let sum: Prob = weights.iter().cloned().sum();
    if sum.is_zero() {
        return Err(Error::NullConditioning(
            "distribution weights sum to zero".into(),
        ));
    }
    Ok(weights.iter().map(|w| w / &sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn f64_conversion_is_exact() {
        let p = prob_from_f64(0.9).unwrap();
        assert_eq!(to_f64(&p), 0.9);
        assert!(prob_from_f64(1.5).is_err());
        assert!(prob_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn matrix_power_of_symmetric_two_state_chain() {
        // Closed form for [[r, 1-r], [1-r, r]]^k: diag entries (1 + (2r-1)^k)/2.
        let r = 0.9;
        let k = ProbMatrix::from_f64_rows(&[vec![r, 1.0 - r], vec![1.0 - r, r]], 1e-12).unwrap();
        let k3 = k.mul(&k).mul(&k);
        let expect = (1.0 + (2.0 * r - 1.0f64).powi(3)) / 2.0;
        assert!((to_f64(k3.entry(0, 0)) - expect).abs() < 1e-15);
        assert!((to_f64(k3.entry(0, 1)) - (1.0 - expect)).abs() < 1e-15);
    }

    #[test]
    fn rows_renormalize_exactly() {
        let k = ProbMatrix::from_f64_rows(&[vec![0.3, 0.7], vec![0.5, 0.5]], 1e-12).unwrap();
        for i in 0..2 {
            let sum: Prob = k.row(i).iter().cloned().sum();
            assert!(sum.is_one());
        }
    }
}
