//! Exact minimisation of `(a x + b) mod m` over an integer range.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Smallest `x >= 0` with `lo <= (a x mod m) <= hi`, where `0 <= lo <= hi < m`.
pub fn first_in_window(a: &BigInt, m: &BigInt, lo: &BigInt, hi: &BigInt) -> Option<BigInt> {
    if lo.is_zero() {
        return Some(BigInt::zero());
    }
    let a = a.mod_floor(m);
    if a.is_zero() {
        return None;
    }
    let k = lo.div_ceil(&a);
    if &(&a * &k) <= hi {
        return Some(k);
    }
    let r = m.mod_floor(&a);
    let lo2 = &a - hi.mod_floor(&a);
    let hi2 = &a - lo.mod_floor(&a);
    let y = first_in_window(&r, &a, &lo2, &hi2)?;
    let x = (lo + m * &y).div_ceil(&a);
    let v = &a * &x - m * &y;
    if &v >= lo && &v <= hi {
        Some(x)
    } else {
        None
    }
}

/// Smallest `x >= 0` with `(a x + b) mod m <= t`.
fn first_at_most(a: &BigInt, b: &BigInt, m: &BigInt, t: &BigInt) -> Option<BigInt> {
    let lo = (m - b).mod_floor(m);
    let hi = &lo + t;
    if &hi < m {
        first_in_window(a, m, &lo, &hi)
    } else {
        let top = m - BigInt::one();
        let wrap = &hi - m;
        match (first_in_window(a, m, &lo, &top), first_in_window(a, m, &BigInt::zero(), &wrap)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }
}

/// Minimum of `(a x + b) mod m` over `0 <= x <= x_max`, with the smallest minimiser.
pub fn min_affine_mod(a: &BigInt, b: &BigInt, m: &BigInt, x_max: &BigInt) -> (BigInt, BigInt) {
    let a = a.mod_floor(m);
    let b = b.mod_floor(m);
    let val = |x: &BigInt| (&a * x + &b).mod_floor(m);
    let hits = |t: &BigInt| first_at_most(&a, &b, m, t).filter(|x| x <= x_max);
    if b.is_zero() || a.is_zero() {
        return (b, BigInt::zero());
    }
    // Exponential search for a threshold that is reached within range.
    let span_bits = x_max.bits() + 2;
    let mut t = (m >> (span_bits as usize)).max(BigInt::one());
    let mut below = BigInt::zero();
    while hits(&t).is_none() {
        below = t.clone();
        t = &t << 1;
        if t >= b {
            t = b.clone();
            break;
        }
    }
    // Narrow the bracket (below, t] to a small relative width.
    for _ in 0..10 {
        let mid = (&below + &t) >> 1;
        if mid <= below {
            break;
        }
        if hits(&mid).is_some() {
            t = mid;
        } else {
            below = mid;
        }
    }
    // Descend through successive records until none remain below.
    let mut x = hits(&t).unwrap_or_else(BigInt::zero);
    let mut v = val(&x);
    while v.is_positive() {
        match hits(&(&v - 1)) {
            Some(nx) => {
                x = nx;
                v = val(&x);
            }
            None => break,
        }
    }
    (v, x)
}
