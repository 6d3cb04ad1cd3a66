use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{ArithError, Real};

/// Continued fraction of `alpha` in (0,1) with exact convergent errors.
#[derive(Clone, Debug, Serialize)]
pub struct ContinuedFraction {
    pub alpha: Real,
    /// `a_1 .. a_depth`.
    pub quotients: Vec<u64>,
    /// `q_0 .. q_depth`.
    pub denominators: Vec<u128>,
    /// `p_0 .. p_depth`.
    pub numerators: Vec<u128>,
    /// `beta_0 .. beta_depth` with `beta_k = |q_k alpha - p_k|`.
    pub errors: Vec<Real>,
}

impl ContinuedFraction {
    pub fn expand(alpha: &Real, depth: usize) -> Result<Self, ArithError> {
        Self::expand_inner(alpha, depth, false)
    }

    /// Expands as deep as precision and 128-bit denominators allow, up to `max_depth`.
    pub fn expand_safe(alpha: &Real, max_depth: usize) -> Result<Self, ArithError> {
        Self::expand_inner(alpha, max_depth, true)
    }

    fn expand_inner(alpha: &Real, depth: usize, truncate: bool) -> Result<Self, ArithError> {
        if depth == 0 {
            return Err(ArithError::Precondition("depth must be at least 1".into()));
        }
        let zero = Real::zero(alpha.bits());
        let one = Real::from_int(1, alpha.bits());
        if !(alpha > &zero && alpha < &one) {
            return Err(ArithError::Domain("alpha must lie in (0,1)".into()));
        }
        let floor_ln = alpha.floor_spec().ln();
        let safe = |beta: &Real, q: u128| beta.abs_ln() > floor_ln + (4.0 * q as f64).ln();
        if !safe(alpha, 1) {
            return Err(ArithError::PrecisionExhausted { requested: depth, safe_depth: 0 });
        }
        let mut quotients = Vec::with_capacity(depth);
        let mut denominators = vec![1u128];
        let mut numerators = vec![0u128];
        let mut errors = vec![alpha.clone()];
        let mut beta_prev = one.with_floor(alpha.floor_spec());
        let (mut q_prev, mut p_prev) = (0u128, 1u128);
        for k in 0..depth {
            let beta = errors[k].clone();
            let (a, _) = beta_prev.mantissa().div_mod_floor(beta.mantissa());
            let next = beta_prev.sub(&beta.mul_int(&a));
            let q = denominators[k];
            let p = numerators[k];
            let next_pair = a.to_u64().and_then(|a| {
                let step = |x: u128, prev: u128| (a as u128).checked_mul(x).and_then(|v| v.checked_add(prev));
                Some((a, step(q, q_prev)?, step(p, p_prev)?))
            });
            let Some((a, q_next, p_next)) = next_pair else {
                if truncate && k > 0 {
                    break;
                }
                return Err(ArithError::DenominatorOverflow(k + 1));
            };
            if next.mantissa().is_zero() || !safe(&next, q_next) {
                if truncate && k > 0 {
                    break;
                }
                return Err(ArithError::PrecisionExhausted { requested: depth, safe_depth: k });
            }
            quotients.push(a);
            denominators.push(q_next);
            numerators.push(p_next);
            errors.push(next);
            beta_prev = beta;
            q_prev = q;
            p_prev = p;
        }
        Ok(ContinuedFraction { alpha: alpha.clone(), quotients, denominators, numerators, errors })
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    pub fn q_last(&self) -> u128 {
        *self.denominators.last().unwrap()
    }

    /// Largest `k` with `q_k <= n`.
    pub fn index_at(&self, n: u128) -> Result<usize, ArithError> {
        if n < 1 {
            return Err(ArithError::Precondition("N must be at least 1".into()));
        }
        if n >= self.q_last() {
            return Err(ArithError::DepthInsufficient { n, q_last: self.q_last() });
        }
        Ok(self.denominators.partition_point(|&q| q <= n) - 1)
    }

    /// `alpha - p_k/q_k` rebuilt from the convergent, as a high-precision real.
    pub fn convergent_gap(&self, k: usize) -> Real {
        let bits = self.alpha.bits();
        let pq = Real::from_mantissa(BigInt::from(self.numerators[k]) << bits, bits)
            .div_int(&BigInt::from(self.denominators[k]));
        self.alpha.sub(&pq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_prefix() {
        let g = Real::from_quotients(&[], &[1], 256).unwrap();
        let cf = ContinuedFraction::expand(&g, 8).unwrap();
        assert!(cf.quotients.iter().all(|&a| a == 1));
        assert_eq!(&cf.denominators[..8], &[1, 1, 2, 3, 5, 8, 13, 21]);
    }

    #[test]
    fn inverse_pi() {
        let x = Real::from_decimal("0.31830988618379067153776752674502872406891929148091", 256).unwrap();
        let cf = ContinuedFraction::expand(&x, 3).unwrap();
        assert_eq!(cf.quotients, vec![3, 7, 15]);
    }

    #[test]
    fn low_precision_exhausts() {
        let x = Real::from_decimal("0.61803399", 256).unwrap();
        match ContinuedFraction::expand(&x, 40) {
            Err(ArithError::PrecisionExhausted { safe_depth, .. }) => assert!(safe_depth > 5 && safe_depth < 40),
            other => panic!("{other:?}"),
        }
    }
}
