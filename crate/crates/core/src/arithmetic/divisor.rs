use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::modlin::min_affine_mod;
use super::{ArithError, ContinuedFraction, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivisorKind {
    Single,
    Pair,
}

/// Γ(N) = 1/‖q_k α‖ for the largest `q_k <= N`.
pub fn worst_divisor(cf: &ContinuedFraction, n: u128) -> Result<Real, ArithError> {
    worst_divisor_arg(cf, n).map(|(g, _)| g)
}

/// Γ_α(N) together with the attaining denominator `q_k`.
pub fn worst_divisor_arg(cf: &ContinuedFraction, n: u128) -> Result<(Real, u128), ArithError> {
    let k = cf.index_at(n)?;
    Ok((cf.errors[k].recip()?, cf.denominators[k]))
}

/// Worst pair divisor with the `n` realising it.
#[derive(Clone, Debug, Serialize)]
pub struct PairDivisor {
    pub value: Real,
    pub distance: Real,
    pub argmax: i64,
}

fn mantissa_mod(x: &Real) -> (BigInt, BigInt) {
    let m = BigInt::one() << x.bits();
    (x.mantissa().mod_floor(&m), m)
}

fn check_floor(dist: &Real, k: i64) -> Result<(), ArithError> {
    if dist.below_floor() {
        return Err(ArithError::RationalPair { k, dist: dist.to_f64() });
    }
    Ok(())
}

/// Γ_{α,β}(N) = max over 0 ≤ |n| ≤ N of 1/‖nα − β‖, computed exactly on the
/// fixed-point lattice by a Euclid-type search (no enumeration of `n`).
pub fn worst_divisor_pair(alpha: &Real, beta: &Real, n: u128) -> Result<PairDivisor, ArithError> {
    let (a, m) = mantissa_mod(alpha);
    let (b, _) = mantissa_mod(beta);
    let nn = BigInt::from(n);
    let x_max = &nn * 2;
    // n = x - N, x in [0, 2N]; value (nA - B) mod m and its mirror (B - nA) mod m.
    let b1 = (-(&nn * &a) - &b).mod_floor(&m);
    let (v1, x1) = min_affine_mod(&a, &b1, &m, &x_max);
    let b2 = (&nn * &a + &b).mod_floor(&m);
    let (v2, x2) = min_affine_mod(&(&m - &a), &b2, &m, &x_max);
    let n1 = (x1 - &nn).to_i64().unwrap_or(i64::MAX);
    let n2 = (x2 - &nn).to_i64().unwrap_or(i64::MAX);
    let (v, arg) = if v1 < v2 || (v1 == v2 && n1.unsigned_abs() <= n2.unsigned_abs()) { (v1, n1) } else { (v2, n2) };
    let floor = alpha.floor_spec();
    let beta_floor = beta.floor_spec();
    let dist =
        Real::from_mantissa(v, alpha.bits()).with_floor(if floor.ln() >= beta_floor.ln() { floor } else { beta_floor });
    check_floor(&dist, arg)?;
    Ok(PairDivisor { value: dist.recip()?, distance: dist, argmax: arg })
}

/// Enumerating reference for Γ_{α,β}(N).
pub fn worst_divisor_pair_brute(alpha: &Real, beta: &Real, n: u64) -> Result<PairDivisor, ArithError> {
    let table = WorstDivisorTable::pair(alpha, beta, n)?;
    table.pair_divisor(n)
}

/// Γ(N) for every N up to `n_max`, built by one incremental pass.
#[derive(Clone, Debug)]
pub struct WorstDivisorTable {
    pub kind: DivisorKind,
    bits: u32,
    floor: super::Floor,
    /// Minimal distance mantissa for each N (index N).
    dist: Vec<BigInt>,
    argmax: Vec<i64>,
}

impl WorstDivisorTable {
    pub fn single(alpha: &Real, n_max: u64) -> Result<Self, ArithError> {
        let (a, m) = mantissa_mod(alpha);
        let mut dist = vec![m.clone()];
        let mut argmax = vec![0i64];
        let mut x = BigInt::zero();
        let mut best: Option<(BigInt, i64)> = None;
        for n in 1..=n_max {
            x += &a;
            if x >= m {
                x -= &m;
            }
            let d = std::cmp::min(x.clone(), &m - &x);
            if best.as_ref().is_none_or(|(bd, _)| &d < bd) {
                let r = Real::from_mantissa(d.clone(), alpha.bits()).with_floor(alpha.floor_spec());
                check_floor(&r, n as i64)?;
                best = Some((d, n as i64));
            }
            let (bd, bn) = best.clone().unwrap();
            dist.push(bd);
            argmax.push(bn);
        }
        Ok(WorstDivisorTable { kind: DivisorKind::Single, bits: alpha.bits(), floor: alpha.floor_spec(), dist, argmax })
    }

    pub fn pair(alpha: &Real, beta: &Real, n_max: u64) -> Result<Self, ArithError> {
        let (a, m) = mantissa_mod(alpha);
        let (b, _) = mantissa_mod(beta);
        let floor =
            if alpha.floor_spec().ln() >= beta.floor_spec().ln() { alpha.floor_spec() } else { beta.floor_spec() };
        let dist_of = |r: &BigInt| std::cmp::min(r.clone(), &m - r);
        let mut up = (-&b).mod_floor(&m);
        let mut down = up.clone();
        let d0 = dist_of(&up);
        check_floor(&Real::from_mantissa(d0.clone(), alpha.bits()).with_floor(floor), 0)?;
        let mut best = (d0, 0i64);
        let mut dist = vec![best.0.clone()];
        let mut argmax = vec![0i64];
        for n in 1..=n_max {
            up += &a;
            if up >= m {
                up -= &m;
            }
            down -= &a;
            if down < BigInt::zero() {
                down += &m;
            }
            for (r, k) in [(&up, n as i64), (&down, -(n as i64))] {
                let d = dist_of(r);
                if d < best.0 {
                    check_floor(&Real::from_mantissa(d.clone(), alpha.bits()).with_floor(floor), k)?;
                    best = (d, k);
                }
            }
            dist.push(best.0.clone());
            argmax.push(best.1);
        }
        Ok(WorstDivisorTable { kind: DivisorKind::Pair, bits: alpha.bits(), floor, dist, argmax })
    }

    pub fn n_max(&self) -> u64 {
        (self.dist.len() - 1) as u64
    }

    fn check_n(&self, n: u64) -> Result<(), ArithError> {
        if self.kind == DivisorKind::Single && n < 1 {
            return Err(ArithError::Precondition("N must be at least 1".into()));
        }
        if n > self.n_max() {
            return Err(ArithError::DepthInsufficient { n: n as u128, q_last: self.n_max() as u128 + 1 });
        }
        Ok(())
    }

    pub fn distance(&self, n: u64) -> Result<Real, ArithError> {
        self.check_n(n)?;
        Ok(Real::from_mantissa(self.dist[n as usize].clone(), self.bits).with_floor(self.floor))
    }

    pub fn value(&self, n: u64) -> Result<Real, ArithError> {
        self.distance(n)?.recip()
    }

    pub fn argmax(&self, n: u64) -> Result<i64, ArithError> {
        self.check_n(n)?;
        Ok(self.argmax[n as usize])
    }

    fn pair_divisor(&self, n: u64) -> Result<PairDivisor, ArithError> {
        let distance = self.distance(n)?;
        Ok(PairDivisor { value: distance.recip()?, distance, argmax: self.argmax(n)? })
    }
}

/// Smallest |k| ≤ k_max with ‖kα − β‖ < tol (positive k tried first).
pub fn is_rational_pair(alpha: &Real, beta: &Real, k_max: u64, tol: f64) -> Option<i64> {
    let (a, m) = mantissa_mod(alpha);
    let (b, _) = mantissa_mod(beta);
    let ln_tol = tol.ln();
    let bits = alpha.bits();
    let small = |r: &BigInt| {
        let d = std::cmp::min(r.clone(), &m - r);
        Real::from_mantissa(d, bits).abs_ln() < ln_tol
    };
    let mut up = (-&b).mod_floor(&m);
    let mut down = up.clone();
    if small(&up) {
        return Some(0);
    }
    for k in 1..=k_max {
        up += &a;
        if up >= m {
            up -= &m;
        }
        down -= &a;
        if down < BigInt::zero() {
            down += &m;
        }
        if small(&up) {
            return Some(k as i64);
        }
        if small(&down) {
            return Some(-(k as i64));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Real {
        Real::from_quotients(&[], &[1], 256).unwrap()
    }

    #[test]
    fn golden_small_n() {
        let g = golden();
        let cf = ContinuedFraction::expand(&g, 40).unwrap();
        let one = worst_divisor(&cf, 1).unwrap().to_f64();
        assert!((one - 2.618_033_988_749_895).abs() < 1e-12);
        let (four, q) = worst_divisor_arg(&cf, 4).unwrap();
        assert_eq!(q, 3);
        let direct = g.mul_i64(3).nearest_int_dist().recip().unwrap();
        assert_eq!(four, direct);
        assert!(worst_divisor(&cf, 0).is_err());
    }

    #[test]
    fn pair_rational_cases() {
        let g = golden();
        assert!(matches!(worst_divisor_pair(&g, &g, 1), Err(ArithError::RationalPair { k: 1, .. })));
        let z = Real::zero(256);
        assert!(matches!(worst_divisor_pair(&g, &z, 1), Err(ArithError::RationalPair { k: 0, .. })));
        assert_eq!(is_rational_pair(&g, &g, 10, 1e-30), Some(1));
        let one = Real::from_int(1, 256);
        assert_eq!(is_rational_pair(&g, &one.sub(&g), 10, 1e-30), Some(-1));
    }

    #[test]
    fn pair_half_alpha() {
        let g = golden();
        let b = g.div_int(&BigInt::from(2));
        let fast = worst_divisor_pair(&g, &b, 1).unwrap();
        let want =
            [-1i64, 0, 1].iter().map(|&n| 1.0 / g.mul_i64(n).sub(&b).nearest_int_dist().to_f64()).fold(0.0, f64::max);
        assert!((fast.value.to_f64() - want).abs() < 1e-12 * want);
        for n in [1u64, 2, 7, 100, 1000] {
            let brute = worst_divisor_pair_brute(&g, &b, n).unwrap();
            let fast = worst_divisor_pair(&g, &b, n as u128).unwrap();
            assert_eq!(brute.distance, fast.distance);
        }
    }
}
