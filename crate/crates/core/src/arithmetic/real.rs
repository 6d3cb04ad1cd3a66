use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::ArithError;

pub const DEFAULT_BITS: u32 = 256;

/// Fixed-point real `mant / 2^bits` with a known precision floor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Real {
    mant: BigInt,
    bits: u32,
    floor: Floor,
}

/// Smallest magnitude that is still meaningful for a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Floor {
    Binary(u32),
    Decimal(u32),
}

impl Floor {
    pub fn value(self) -> f64 {
        match self {
            Floor::Binary(b) => (-(b as f64) * std::f64::consts::LN_2).exp(),
            Floor::Decimal(d) => 10f64.powi(-(d as i32)),
        }
    }

    pub fn ln(self) -> f64 {
        match self {
            Floor::Binary(b) => -(b as f64) * std::f64::consts::LN_2,
            Floor::Decimal(d) => -(d as f64) * std::f64::consts::LN_10,
        }
    }

    fn coarser(self, other: Floor) -> Floor {
        if self.ln() >= other.ln() {
            self
        } else {
            other
        }
    }
}

impl Real {
    pub fn from_mantissa(mant: BigInt, bits: u32) -> Self {
        Real { mant, bits, floor: Floor::Binary(bits) }
    }

    pub fn zero(bits: u32) -> Self {
        Self::from_mantissa(BigInt::zero(), bits)
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        Self::from_mantissa(BigInt::from(n) << bits, bits)
    }

    pub fn from_f64(x: f64, bits: u32) -> Self {
        let (m, e) = decompose(x);
        let shift = e + bits as i64;
        let mant = if shift >= 0 {
            BigInt::from(m) << (shift as usize)
        } else {
            round_shr(&BigInt::from(m), (-shift) as usize)
        };
        let mut r = Self::from_mantissa(mant, bits);
        r.floor = Floor::Binary(bits.min(52));
        r
    }

    /// Parses a decimal literal such as `0.6180339887`. The floor is `10^-digits`.
    pub fn from_decimal(s: &str, bits: u32) -> Result<Self, ArithError> {
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let ok = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !ok(int_part) || !ok(frac_part) {
            return Err(ArithError::Parse(s.to_string()));
        }
        let digits = frac_part.len() as u32;
        let all = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
        let num: BigInt = all.parse().map_err(|_| ArithError::Parse(s.to_string()))?;
        let den = BigInt::from(10u32).pow(digits);
        let mut mant = round_div(&(num << bits), &den);
        if neg {
            mant = -mant;
        }
        let floor = if digits == 0 { Floor::Binary(bits) } else { Floor::Decimal(digits).coarser(Floor::Binary(bits)) };
        Ok(Real { mant, bits, floor })
    }

    /// Value of `[0; prefix..., period, period, ...]`, evaluated to full precision.
    pub fn from_quotients(prefix: &[u64], period: &[u64], bits: u32) -> Result<Self, ArithError> {
        if prefix.iter().chain(period).any(|&a| a == 0) || (prefix.is_empty() && period.is_empty()) {
            return Err(ArithError::BadQuotients);
        }
        let target = BigInt::one() << (bits as usize / 2 + 8);
        let mut quotients: Vec<u64> = prefix.to_vec();
        if !period.is_empty() {
            // Extend the tail until the convergent error is far below 2^-bits.
            let mut q_prev = BigInt::zero();
            let mut q = BigInt::one();
            for &a in &quotients {
                let next = BigInt::from(a) * &q + &q_prev;
                q_prev = std::mem::replace(&mut q, next);
            }
            let mut i = 0;
            while q < target {
                let a = period[i % period.len()];
                quotients.push(a);
                let next = BigInt::from(a) * &q + &q_prev;
                q_prev = std::mem::replace(&mut q, next);
                i += 1;
            }
            quotients.push(period[i % period.len()]);
        }
        let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero());
        let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
        for &a in &quotients {
            let a = BigInt::from(a);
            let np = &a * &p + &p_prev;
            let nq = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, np);
            q_prev = std::mem::replace(&mut q, nq);
        }
        let mant = round_div(&(p << bits), &q);
        Ok(Self::from_mantissa(mant, bits))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn floor_spec(&self) -> Floor {
        self.floor
    }

    pub fn precision_floor(&self) -> f64 {
        self.floor.value()
    }

    pub fn with_floor(mut self, floor: Floor) -> Self {
        self.floor = floor;
        self
    }

    fn lift(&self, other: &Real) -> Floor {
        assert_eq!(self.bits, other.bits, "mixed precision");
        self.floor.coarser(other.floor)
    }

    pub fn add(&self, other: &Real) -> Real {
        Real { mant: &self.mant + &other.mant, bits: self.bits, floor: self.lift(other) }
    }

    pub fn sub(&self, other: &Real) -> Real {
        Real { mant: &self.mant - &other.mant, bits: self.bits, floor: self.lift(other) }
    }

    pub fn neg(&self) -> Real {
        Real { mant: -&self.mant, bits: self.bits, floor: self.floor }
    }

    pub fn abs(&self) -> Real {
        Real { mant: self.mant.abs(), bits: self.bits, floor: self.floor }
    }

    pub fn mul_int(&self, k: &BigInt) -> Real {
        Real { mant: &self.mant * k, bits: self.bits, floor: self.floor }
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        self.mul_int(&BigInt::from(k))
    }

    /// Rounded division by a nonzero integer.
    pub fn div_int(&self, k: &BigInt) -> Real {
        Real { mant: round_div(&self.mant, k), bits: self.bits, floor: self.floor }
    }

    pub fn mul(&self, other: &Real) -> Real {
        let floor = self.lift(other);
        Real { mant: round_shr(&(&self.mant * &other.mant), self.bits as usize), bits: self.bits, floor }
    }

    pub fn div(&self, other: &Real) -> Result<Real, ArithError> {
        if other.mant.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let floor = self.lift(other);
        Ok(Real { mant: round_div(&(&self.mant << self.bits), &other.mant), bits: self.bits, floor })
    }

    pub fn recip(&self) -> Result<Real, ArithError> {
        Real::from_int(1, self.bits).with_floor(self.floor).div(self)
    }

    pub fn floor_int(&self) -> BigInt {
        self.mant.div_floor(&(BigInt::one() << self.bits))
    }

    pub fn frac(&self) -> Real {
        let one = BigInt::one() << self.bits;
        Real { mant: self.mant.mod_floor(&one), bits: self.bits, floor: self.floor }
    }

    /// Distance to the nearest integer, in `[0, 1/2]`.
    pub fn nearest_int_dist(&self) -> Real {
        let one = BigInt::one() << self.bits;
        let r = self.mant.mod_floor(&one);
        let other = &one - &r;
        Real { mant: if r <= other { r } else { other }, bits: self.bits, floor: self.floor }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    /// True when `|self|` is below the precision floor.
    pub fn below_floor(&self) -> bool {
        self.mant.is_zero() || self.abs_ln() < self.floor.ln()
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mant.magnitude();
        let sh = (m.bits() as i64 - 64).max(0) as usize;
        let top = (m >> sh).to_f64().unwrap_or(0.0);
        let v = top * 2f64.powi(sh as i32 - self.bits as i32);
        if self.mant.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Natural log of `|self|`; `-inf` at zero.
    pub fn abs_ln(&self) -> f64 {
        let m = self.mant.magnitude();
        if m.is_zero() {
            return f64::NEG_INFINITY;
        }
        let len = m.bits() as i64;
        let sh = (len - 60).max(0) as usize;
        let top: BigUint = m >> sh;
        top.to_f64().unwrap_or(1.0).ln() + (sh as f64 - self.bits as f64) * std::f64::consts::LN_2
    }

    pub fn ln(&self) -> Result<f64, ArithError> {
        if !self.is_positive() {
            return Err(ArithError::Domain("log of non-positive value".into()));
        }
        Ok(self.abs_ln())
    }

    /// Decimal rendering truncated to `digits` fractional places.
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.mant.is_negative();
        let m = self.mant.abs();
        let scaled = round_shr(&(m * BigInt::from(10u32).pow(digits as u32)), self.bits as usize);
        let s = scaled.to_string();
        let s = if s.len() <= digits { format!("{}{}", "0".repeat(digits + 1 - s.len()), s) } else { s };
        let (i, f) = s.split_at(s.len() - digits);
        let body = if digits == 0 { i.to_string() } else { format!("{i}.{f}") };
        if neg {
            format!("-{body}")
        } else {
            body
        }
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.bits != other.bits {
            return None;
        }
        Some(self.mant.cmp(&other.mant))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_decimal(digits))
    }
}

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let digits = ((self.bits as f64) * std::f64::consts::LOG10_2).ceil() as usize;
        s.serialize_str(&self.to_decimal(digits))
    }
}

fn decompose(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & 0xf_ffff_ffff_ffff) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1 << 52)), exp - 1075)
    }
}

pub(crate) fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = a.div_mod_floor(b);
    if (&r * &two).abs() >= b.abs() {
        if b.is_positive() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

pub(crate) fn round_shr(a: &BigInt, sh: usize) -> BigInt {
    if sh == 0 {
        return a.clone();
    }
    let half = BigInt::one() << (sh - 1);
    (a + half) >> sh
}
