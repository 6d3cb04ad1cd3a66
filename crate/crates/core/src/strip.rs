//! Finite Fourier series on the strip `|Im θ| < δ`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StripError {
    #[error("sample count {0} is not of the form 2N+1")]
    SizeMismatch(usize),
    #[error("tail bound needs delta' < delta, got {delta_prime} >= {delta}")]
    StripOrder { delta: f64, delta_prime: f64 },
    #[error("log branch violated: norm {0} >= 1")]
    BranchViolation(f64),
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// `Σ_{|n| ≤ N} c_n e^{2πinθ}` with nominal strip half-width and an
/// accumulated bound on discarded tail mass.
#[derive(Clone, Debug, PartialEq)]
pub struct StripFunction {
    order: usize,
    strip: f64,
    coeffs: Vec<Complex64>,
    slack: f64,
}

#[derive(Serialize, Deserialize)]
struct StripRepr {
    order: usize,
    strip: f64,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    slack: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Serialize for StripFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StripRepr {
            order: self.order,
            strip: self.strip,
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
            slack: self.slack,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StripFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = StripRepr::deserialize(d)?;
        let len = 2 * r.order + 1;
        if r.re.len() != len || r.im.len() != len {
            return Err(serde::de::Error::custom(format!("expected {len} coefficients for order {}", r.order)));
        }
        let coeffs = r.re.iter().zip(&r.im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        Ok(StripFunction { order: r.order, strip: r.strip, coeffs, slack: r.slack })
    }
}

impl StripFunction {
    pub fn zeros(order: usize, strip: f64) -> Self {
        StripFunction { order, strip, coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1], slack: 0.0 }
    }

    pub fn constant(c: Complex64, strip: f64) -> Self {
        let mut f = Self::zeros(0, strip);
        f.coeffs[0] = c;
        f
    }

    /// Single mode `c e^{2πikθ}`.
    pub fn mode(k: i64, c: Complex64, strip: f64) -> Self {
        let mut f = Self::zeros(k.unsigned_abs() as usize, strip);
        f.set(k, c);
        f
    }

    /// Coefficients listed from `-N` to `N`.
    pub fn from_coeffs(coeffs: Vec<Complex64>, strip: f64) -> Result<Self, StripError> {
        if coeffs.len() % 2 == 0 {
            return Err(StripError::SizeMismatch(coeffs.len()));
        }
        Ok(StripFunction { order: coeffs.len() / 2, strip, coeffs, slack: 0.0 })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(n + self.order as i64) as usize]
    }

    pub fn set(&mut self, n: i64, c: Complex64) {
        let i = (n + self.order as i64) as usize;
        self.coeffs[i] = c;
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n0 = self.order as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n0, c))
    }

    pub fn with_strip(mut self, strip: f64) -> Self {
        self.strip = strip;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn add_slack(&mut self, s: f64) {
        self.slack += s;
    }

    /// Same function, represented with `order` modes (truncating if smaller).
    pub fn resized(&self, order: usize) -> Self {
        let mut out = Self::zeros(order, self.strip);
        out.slack = self.slack;
        let m = order.min(self.order) as i64;
        for n in -m..=m {
            out.set(n, self.coeff(n));
        }
        out
    }

    /// Interpolates `2N+1` samples on the grid `j/(2N+1)`.
    pub fn from_samples(samples: &[Complex64], strip: f64) -> Result<Self, StripError> {
        let m = samples.len();
        if m % 2 == 0 {
            return Err(StripError::SizeMismatch(m));
        }
        let mut buf = samples.to_vec();
        plan(m, false).process(&mut buf);
        let order = m / 2;
        let inv = 1.0 / m as f64;
        let mut f = Self::zeros(order, strip);
        for n in -(order as i64)..=order as i64 {
            f.set(n, buf[n.rem_euclid(m as i64) as usize] * inv);
        }
        Ok(f)
    }

    /// Fourier coefficients up to `cap` of arbitrary grid samples; the modes
    /// beyond `cap` are added to the slack as a norm at the strip width.
    pub fn from_grid(samples: &[Complex64], cap: usize, strip: f64) -> Self {
        let m = samples.len();
        let mut buf = samples.to_vec();
        plan(m, false).process(&mut buf);
        let inv = 1.0 / m as f64;
        let half = (m as i64 - 1) / 2;
        let keep = (cap as i64).min(half);
        let floor = roundoff_floor(samples, m);
        let mut f = Self::zeros(keep as usize, strip);
        let mut dropped = 0.0;
        for n in -half..=half {
            let c = buf[n.rem_euclid(m as i64) as usize] * inv;
            if c.norm() <= floor {
                continue;
            }
            if n.abs() <= keep {
                f.set(n, c);
            } else {
                dropped += c.norm() * (2.0 * PI * n.abs() as f64 * strip).exp();
            }
        }
        f.slack = dropped;
        f
    }

    /// Values at `j/m`, `j = 0..m` (exact for any `m` by folding modes).
    pub fn to_samples(&self, m: usize) -> Vec<Complex64> {
        self.samples_on_line(m, 0.0)
    }

    /// Values at `j/m + i c`.
    pub fn samples_on_line(&self, m: usize, c: f64) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (n, v) in self.modes() {
            let w = if c == 0.0 { v } else { v * (-2.0 * PI * n as f64 * c).exp() };
            buf[n.rem_euclid(m as i64) as usize] += w;
        }
        plan(m, true).process(&mut buf);
        buf
    }

    pub fn eval(&self, theta: Complex64) -> Complex64 {
        let w = (Complex64::i() * 2.0 * PI * theta).exp();
        let winv = 1.0 / w;
        let mut acc = self.coeff(0);
        let (mut p, mut q) = (w, winv);
        for n in 1..=self.order as i64 {
            acc += self.coeff(n) * p + self.coeff(-n) * q;
            p *= w;
            q *= winv;
        }
        acc
    }

    pub fn eval_real(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::new(theta, 0.0))
    }

    pub fn truncate(&self, n: usize) -> Self {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            if (k as i64 - self.order as i64).unsigned_abs() as usize > n {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn tail(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.slack = 0.0;
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            if (k as i64 - self.order as i64).unsigned_abs() as usize <= n {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Σ |c_n| e^{2π|n|δ'}, an upper bound for the sup on `|Im θ| ≤ δ'`.
    pub fn norm_bound(&self, delta_prime: f64) -> f64 {
        let n0 = self.order as i64;
        let mut terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * (2.0 * PI * (i as i64 - n0).abs() as f64 * delta_prime).exp())
            .collect();
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        terms.iter().sum()
    }

    /// `norm_bound` at the nominal strip, plus slack.
    pub fn norm(&self) -> f64 {
        self.norm_bound(self.strip) + self.slack
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn derivative(&self) -> Self {
        let mut out = self.clone();
        for (n, c) in self.modes() {
            out.set(n, c * Complex64::new(0.0, 2.0 * PI * n as f64));
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out.slack *= s.norm();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.max(other.order);
        let mut out = Self::zeros(order, self.strip.min(other.strip));
        for n in -(order as i64)..=order as i64 {
            out.set(n, self.coeff(n) + other.coeff(n));
        }
        out.slack = self.slack + other.slack;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn add_const(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        let m = out.coeff(0);
        out.set(0, m + c);
        out
    }

    /// Coefficientwise map `c_n → c_n · phase(n)`.
    pub fn map_modes(&self, phase: impl Fn(i64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (n, c) in self.modes() {
            out.set(n, c * phase(n));
        }
        out
    }

    /// Product truncated at `cap`; the truncated modes go to slack.
    pub fn multiply(&self, other: &Self, cap: usize) -> Self {
        let full = self.order + other.order;
        let strip = self.strip.min(other.strip);
        let exact = if self.coeffs.len() * other.coeffs.len() <= DIRECT_CONVOLUTION_WORK {
            let mut out = Self::zeros(full, strip);
            for (i, a) in self.coeffs.iter().enumerate() {
                if *a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (j, b) in other.coeffs.iter().enumerate() {
                    out.coeffs[i + j] += a * b;
                }
            }
            out
        } else {
            let m = 2 * full + 1;
            let a = self.to_samples(m);
            let b = other.to_samples(m);
            let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            let mut exact = Self::from_samples(&prod, strip).expect("odd grid");
            exact.flush(roundoff_floor(&prod, m));
            exact
        };
        let mut out = exact.resized(cap.min(full));
        out.slack = exact.tail(cap).norm_bound(strip)
            + self.slack * (other.norm_bound(strip) + other.slack)
            + other.slack * self.norm_bound(strip);
        out
    }

    fn flush(&mut self, floor: f64) {
        for c in self.coeffs.iter_mut() {
            if c.norm() <= floor {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn pointwise_grid(&self, cap: usize) -> usize {
        let target = cap.max(self.order).max(8);
        (8 * target + 1).next_power_of_two()
    }

    /// `g(f(θ))` on an oversampled grid, re-truncated at `cap`.
    pub fn map_pointwise(&self, cap: usize, g: impl Fn(Complex64) -> Complex64) -> Self {
        let m = self.pointwise_grid(cap);
        let vals: Vec<Complex64> = self.to_samples(m).into_iter().map(g).collect();
        let mut out = Self::from_grid(&vals, cap, self.strip);
        out.slack += self.slack;
        out
    }

    /// Σ_{j≥1} c_j f^j by repeated convolution, for ‖f‖ ≤ 1/2 and |c_j| ≤ 1.
    fn power_series(&self, cap: usize, c: impl Fn(usize) -> f64) -> Option<Self> {
        let r = self.norm_bound(self.strip) + self.slack;
        if r > SERIES_RADIUS {
            return None;
        }
        let base = self.resized(self.order.min(cap));
        let mut power = base.clone();
        let mut sum = base.scale(Complex64::new(c(1), 0.0));
        let mut rj = r;
        let mut j = 1;
        while rj > 1e-18 * r.max(f64::MIN_POSITIVE) && rj > f64::MIN_POSITIVE {
            j += 1;
            power = power.multiply(&base, cap);
            sum = sum.add(&power.scale(Complex64::new(c(j), 0.0)));
            rj *= r;
        }
        sum.slack += self.slack + rj * r / (1.0 - r);
        Some(sum)
    }

    fn split_mean(&self) -> (Complex64, Self) {
        let m = self.mean();
        (m, self.add_const(-m))
    }

    pub fn exp_series(&self, cap: usize) -> Self {
        self.expm1_series(cap).add_const(Complex64::new(1.0, 0.0))
    }

    /// `exp(f) - 1` without cancellation for small `f`.
    pub fn expm1_series(&self, cap: usize) -> Self {
        let inv_fact = |j: usize| (1..=j).fold(1.0, |acc, i| acc / i as f64);
        if let Some(s) = self.power_series(cap, inv_fact) {
            return s;
        }
        let (m, g) = self.split_mean();
        match g.power_series(cap, inv_fact) {
            Some(s) => s.scale(m.exp()).add_const(cexpm1(m)),
            None => self.map_pointwise(cap, cexpm1),
        }
    }

    pub fn log1p_series(&self, cap: usize) -> Result<Self, StripError> {
        let nb = self.norm_bound(self.strip);
        if nb >= 1.0 {
            return Err(StripError::BranchViolation(nb));
        }
        let alt = |j: usize| if j % 2 == 1 { 1.0 / j as f64 } else { -1.0 / j as f64 };
        Ok(self.power_series(cap, alt).unwrap_or_else(|| self.map_pointwise(cap, clog1p)))
    }

    /// Max of |f| over `samples` points of the line `Im θ = c`.
    pub fn sup_on_line(&self, samples: usize, c: f64) -> f64 {
        self.samples_on_line(samples, c).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

const DIRECT_CONVOLUTION_WORK: usize = 1 << 20;
const SERIES_RADIUS: f64 = 0.5;

/// Coefficient size below which FFT output on an `m`-point grid is noise.
fn roundoff_floor(samples: &[Complex64], m: usize) -> f64 {
    let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    4.0 * f64::EPSILON * scale * (m.max(2) as f64).log2()
}

/// ‖f‖ e^{-2πN(δ-δ')}/(δ-δ'), the tail estimate with unit constant.
pub fn tail_bound(full_norm: f64, n: usize, delta: f64, delta_prime: f64) -> Result<f64, StripError> {
    if !(delta_prime < delta) || delta_prime < 0.0 {
        return Err(StripError::StripOrder { delta, delta_prime });
    }
    let gap = delta - delta_prime;
    Ok(full_norm * (-2.0 * PI * n as f64 * gap).exp() / gap)
}

/// log(1+z), accurate for small |z|.
pub fn clog1p(z: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(re, z.im.atan2(1.0 + z.re))
}

/// exp(z)-1, accurate for small |z|.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let s = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * s * s;
    Complex64::new(re, z.re.exp() * z.im.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transform_basics() {
        let f = StripFunction::from_samples(&vec![c(2.0, 1.0); 9], 0.1).unwrap();
        assert!((f.coeff(0) - c(2.0, 1.0)).norm() < 1e-15);
        assert!(f.modes().filter(|(n, _)| *n != 0).all(|(_, v)| v.norm() < 1e-15));
        let e1 = StripFunction::mode(1, c(1.0, 0.0), 0.1);
        let g = StripFunction::from_samples(&e1.resized(4).to_samples(9), 0.1).unwrap();
        assert!((g.coeff(1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!(StripFunction::from_samples(&[c(0.0, 0.0); 4], 0.1).is_err());
    }

    #[test]
    fn small_helpers() {
        for z in [c(1e-9, 2e-9), c(0.3, -0.2), c(-0.5, 0.4)] {
            assert!((clog1p(z) - (c(1.0, 0.0) + z).ln()).norm() < 1e-15);
            assert!((cexpm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
        }
        assert_eq!(clog1p(c(1e-20, 0.0)).re, 1e-20);
    }

    #[test]
    fn unit_mode_norm() {
        let e1 = StripFunction::mode(1, c(1.0, 0.0), 0.1);
        assert!((e1.norm_bound(0.1) - (2.0 * PI * 0.1).exp()).abs() < 1e-14);
        let d = e1.derivative();
        assert!((d.coeff(1) - c(0.0, 2.0 * PI)).norm() < 1e-15);
        let one = e1.multiply(&StripFunction::mode(-1, c(1.0, 0.0), 0.1), 4);
        assert!((one.coeff(0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(one.modes().filter(|(n, _)| *n != 0).all(|(_, v)| v.norm() < 1e-15));
    }
}
