use serde::Serialize;

use super::{worst_divisor, ArithError, ContinuedFraction};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BrjunoSums {
    /// Σ_{n ≤ n_max} log Γ_α(2^n) / 2^n
    pub dyadic: f64,
    /// Σ_{k ≥ 1, q_k ≤ 2^n_max} log q_{k+1} / q_k
    pub russmann: f64,
}

pub fn brjuno_partial(cf: &ContinuedFraction, n_max: u32) -> Result<BrjunoSums, ArithError> {
    let top = 1u128 << n_max;
    let k_top = cf.index_at(top)?;
    let mut dyadic = 0.0;
    for n in 0..=n_max {
        let g = worst_divisor(cf, 1u128 << n)?;
        dyadic += g.ln()? / (1u128 << n) as f64;
    }
    let mut russmann = 0.0;
    for k in 1..=k_top {
        russmann += (cf.denominators[k + 1] as f64).ln() / cf.denominators[k] as f64;
    }
    Ok(BrjunoSums { dyadic, russmann })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SandwichReport {
    pub n: u32,
    pub lower: f64,
    pub middle: f64,
    /// 2 log Γ(2^{n+1}) / 2^{n+1}
    pub upper: f64,
    /// 2 Γ(2^{n+1}) / 2^{n+1}, the form without the logarithm.
    pub upper_without_log: f64,
    pub holds: bool,
}

pub fn check_dyadic_sandwich(cf: &ContinuedFraction, n: u32) -> Result<SandwichReport, ArithError> {
    let a = 1u128 << n;
    let b = a << 1;
    cf.index_at(b)?;
    let ln_gamma = |i: u128| -> Result<f64, ArithError> { worst_divisor(cf, i)?.ln() };
    let lower = 0.5 * ln_gamma(a)? / a as f64;
    let mut middle = 0.0;
    for i in a..b {
        middle += ln_gamma(i)? / (i as f64 * i as f64);
    }
    let gb = worst_divisor(cf, b)?;
    let upper = 2.0 * gb.ln()? / b as f64;
    let upper_without_log = 2.0 * gb.to_f64() / b as f64;
    Ok(SandwichReport { n, lower, middle, upper, upper_without_log, holds: lower <= middle && middle <= upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Real;

    #[test]
    fn golden_first_terms() {
        let g = Real::from_quotients(&[], &[1], 256).unwrap();
        let cf = ContinuedFraction::expand(&g, 60).unwrap();
        let s = brjuno_partial(&cf, 0).unwrap();
        assert!((s.dyadic - 2.618_033_988_749_895f64.ln()).abs() < 1e-12);
        assert!((s.russmann - 2f64.ln()).abs() < 1e-12);
        for n in [0, 2, 5] {
            assert!(check_dyadic_sandwich(&cf, n).unwrap().holds);
        }
    }
}
