//! Fibered jets `F(θ,z) = (θ+α, ρ₀ + (λ+ρ₁)z + Σ_{k≥2} ρ_k z^k)` and their
//! affine conjugations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{ArithError, Real};
use crate::cohomology::{solve_untwisted, CohomologyError, Rotation};
use crate::strip::{clog1p, StripError, StripFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("point outside the domain: |Im θ| = {im_theta} (strip {strip}), |z| = {z} (radius {radius})")]
    Domain { im_theta: f64, strip: f64, z: f64, radius: f64 },
    #[error("disc radius exhausted: {radius} - {shift} <= 0")]
    RadiusExhausted { radius: f64, shift: f64 },
    #[error("u1 too close to vanishing: norm of u1 - 1 is {0}")]
    U1NearVanishing(f64),
    #[error("phase unwrapping ambiguous: jump {jump} at sample {index}")]
    UnwrapAmbiguity { index: usize, jump: f64 },
    #[error("multiplier along the curve has nonzero degree {0}")]
    NonzeroDegree(i64),
    #[error("derivative along the curve vanishes at sample {0}")]
    VanishingDerivative(usize),
    #[error("normal form precondition failed: {0}")]
    NotInvariant(String),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Clone, Debug)]
pub struct FiberedJet {
    pub alpha: Real,
    pub beta: Real,
    /// λ = e^{2πiβ + shift}; the shift stays zero unless a conjugation retunes λ.
    pub lambda_shift: Complex64,
    pub rho0: StripFunction,
    pub rho1: StripFunction,
    /// ρ_k for k = 2..=K.
    pub rho_taylor: Vec<StripFunction>,
    pub strip: f64,
    pub radius: f64,
    pub fourier_cap: usize,
}

#[derive(Serialize, Deserialize)]
struct JetRepr {
    alpha: String,
    beta: String,
    #[serde(default, skip_serializing_if = "is_zero_c")]
    lambda_shift: [f64; 2],
    rho0: StripFunction,
    rho1: StripFunction,
    rho_taylor: Vec<StripFunction>,
    radius: f64,
    strip: f64,
    #[serde(default = "default_cap")]
    fourier_cap: usize,
    #[serde(default = "default_bits")]
    precision_bits: u32,
}

fn is_zero_c(c: &[f64; 2]) -> bool {
    c[0] == 0.0 && c[1] == 0.0
}

fn default_cap() -> usize {
    256
}

fn default_bits() -> u32 {
    crate::arithmetic::DEFAULT_BITS
}

impl Serialize for FiberedJet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let digits = ((self.alpha.bits() as f64) * std::f64::consts::LOG10_2).ceil() as usize;
        JetRepr {
            alpha: self.alpha.to_decimal(digits),
            beta: self.beta.to_decimal(digits),
            lambda_shift: [self.lambda_shift.re, self.lambda_shift.im],
            rho0: self.rho0.clone(),
            rho1: self.rho1.clone(),
            rho_taylor: self.rho_taylor.clone(),
            radius: self.radius,
            strip: self.strip,
            fourier_cap: self.fourier_cap,
            precision_bits: self.alpha.bits(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiberedJet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = JetRepr::deserialize(d)?;
        let bits = r.precision_bits;
        let alpha = Real::from_decimal(&r.alpha, bits).map_err(serde::de::Error::custom)?;
        let beta = Real::from_decimal(&r.beta, bits).map_err(serde::de::Error::custom)?;
        Ok(FiberedJet {
            alpha,
            beta,
            lambda_shift: Complex64::new(r.lambda_shift[0], r.lambda_shift[1]),
            rho0: r.rho0,
            rho1: r.rho1,
            rho_taylor: r.rho_taylor,
            strip: r.strip,
            radius: r.radius,
            fourier_cap: r.fourier_cap,
        })
    }
}

/// h(θ,z) = (θ, u₀(θ) + e^{v(θ)} z).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineConjugacy {
    pub u0: StripFunction,
    pub v: StripFunction,
}

impl AffineConjugacy {
    pub fn identity(strip: f64) -> Self {
        AffineConjugacy { u0: StripFunction::zeros(0, strip), v: StripFunction::zeros(0, strip) }
    }

    pub fn u1(&self, cap: usize) -> StripFunction {
        self.v.exp_series(cap)
    }

    /// H ∘ (θ, u₀ + z)
    pub fn then_translation(&mut self, u0: &StripFunction, cap: usize) {
        let u1 = self.u1(cap);
        self.u0 = self.u0.add(&u1.multiply(u0, cap));
    }

    /// H ∘ (θ, e^v z)
    pub fn then_linear(&mut self, v: &StripFunction) {
        self.v = self.v.add(v);
    }

    pub fn apply(&self, theta: Complex64, z: Complex64) -> (Complex64, Complex64) {
        (theta, self.u0.eval(theta) + self.v.eval(theta).exp() * z)
    }

    pub fn apply_inverse(&self, theta: Complex64, w: Complex64) -> (Complex64, Complex64) {
        (theta, (w - self.u0.eval(theta)) * (-self.v.eval(theta)).exp())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantCurve {
    pub curve: StripFunction,
    pub t_bar: [f64; 2],
    pub strip: f64,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FiberedJet {
    pub fn linear(alpha: Real, beta: Real, strip: f64, fourier_cap: usize, taylor_cap: usize) -> Self {
        let z = StripFunction::zeros(0, strip);
        FiberedJet {
            alpha,
            beta,
            lambda_shift: Complex64::new(0.0, 0.0),
            rho0: z.clone(),
            rho1: z.clone(),
            rho_taylor: vec![z; taylor_cap.saturating_sub(1)],
            strip,
            radius: 1.0,
            fourier_cap,
        }
    }

    pub fn lambda(&self) -> Complex64 {
        let b = self.beta.frac().to_f64();
        (Complex64::new(0.0, 2.0 * PI * b) + self.lambda_shift).exp()
    }

    pub fn taylor_cap(&self) -> usize {
        self.rho_taylor.len() + 1
    }

    pub fn max_order(&self) -> usize {
        std::iter::once(&self.rho0)
            .chain(std::iter::once(&self.rho1))
            .chain(self.rho_taylor.iter())
            .map(|f| f.order())
            .max()
            .unwrap_or(0)
    }

    fn check_domain(&self, theta: Complex64, z: Complex64) -> Result<(), JetError> {
        if theta.im.abs() >= self.strip || z.norm() >= self.radius {
            return Err(JetError::Domain {
                im_theta: theta.im.abs(),
                strip: self.strip,
                z: z.norm(),
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Second coordinate without domain checks.
    pub fn fiber_map(&self, theta: Complex64, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for rk in self.rho_taylor.iter().rev() {
            acc = (acc + rk.eval(theta)) * z;
        }
        acc *= z;
        self.rho0.eval(theta) + (self.lambda() + self.rho1.eval(theta)) * z + acc
    }

    pub fn evaluate(&self, theta: Complex64, z: Complex64) -> Result<(Complex64, Complex64), JetError> {
        self.check_domain(theta, z)?;
        Ok((theta + self.alpha.to_f64(), self.fiber_map(theta, z)))
    }

    /// ρ₁ u₀ + Σ ρ_k u₀^k
    pub fn eta_term(&self, u0: &StripFunction) -> Result<StripFunction, JetError> {
        let shift = u0.norm_bound(self.strip) + u0.slack();
        if shift >= self.radius {
            return Err(JetError::RadiusExhausted { radius: self.radius, shift });
        }
        let cap = self.fourier_cap;
        let powers = powers(u0, self.taylor_cap(), cap);
        let mut eta = self.rho1.multiply(u0, cap);
        for (i, rk) in self.rho_taylor.iter().enumerate() {
            eta = eta.add(&rk.multiply(&powers[i + 2], cap));
        }
        Ok(eta)
    }

    /// Jet of h⁻¹∘F∘h for h(θ,z) = (θ, u₀(θ) + z).
    pub fn conjugate_translation(&self, u0: &StripFunction, rot: &Rotation) -> Result<FiberedJet, JetError> {
        let shift = u0.norm_bound(self.strip) + u0.slack();
        if self.radius - shift <= 0.0 {
            return Err(JetError::RadiusExhausted { radius: self.radius, shift });
        }
        let cap = self.fourier_cap;
        let k_max = self.taylor_cap();
        let pw = powers(u0, k_max, cap);
        let lam = self.lambda();
        let u0c = u0.resized(u0.order().min(cap));
        // ρ₀ + λu₀ − u₀(·+α), coefficientwise
        let linear_part = u0c.scale(lam).sub(&rot.shift(&u0c));
        let mut rho0 = self.rho0.add(&linear_part).add(&self.rho1.multiply(u0, cap));
        let mut rho1 = self.rho1.clone();
        let mut taylor = vec![StripFunction::zeros(0, self.strip); k_max - 1];
        for (i, rk) in self.rho_taylor.iter().enumerate() {
            let k = i + 2;
            rho0 = rho0.add(&rk.multiply(&pw[k], cap));
            rho1 = rho1.add(&rk.multiply(&pw[k - 1], cap).scale(Complex64::new(k as f64, 0.0)));
            for j in 2..=k {
                let term = if j == k { rk.clone() } else { rk.multiply(&pw[k - j], cap) };
                taylor[j - 2] = taylor[j - 2].add(&term.scale(Complex64::new(binom(k, j), 0.0)));
            }
        }
        let strip = self.strip.min(u0.strip());
        Ok(FiberedJet {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            lambda_shift: self.lambda_shift,
            rho0: rho0.resized(rho0.order().min(cap)),
            rho1: rho1.resized(rho1.order().min(cap)),
            rho_taylor: taylor.into_iter().map(|f| f.resized(f.order().min(cap))).collect(),
            strip,
            radius: self.radius - shift,
            fourier_cap: cap,
        })
    }

    /// Jet of h⁻¹∘F∘h for h(θ,z) = (θ, e^{v(θ)} z), with λ replaced by
    /// λ·e^{lambda_shift}.
    pub fn conjugate_linear_exp(
        &self,
        v: &StripFunction,
        lambda_shift: Complex64,
        rot: &Rotation,
    ) -> Result<FiberedJet, JetError> {
        let cap = self.fourier_cap;
        let u1 = v.exp_series(cap);
        let dev = u1.add_const(Complex64::new(-1.0, 0.0)).norm_bound(self.strip) + u1.slack();
        if dev >= 1.0 {
            return Err(JetError::U1NearVanishing(dev));
        }
        let u1_norm = u1.norm_bound(self.strip) + u1.slack();
        let lam = self.lambda();
        let vs = rot.shift(&v.resized(v.order().min(cap)));
        let dv = v.sub(&vs);
        let rho0 = self.rho0.multiply(&vs.scale(Complex64::new(-1.0, 0.0)).exp_series(cap), cap);
        let ell = self.rho1.scale(1.0 / lam).log1p_series(cap)?;
        let arg = ell.add(&dv).add_const(-lambda_shift);
        let new_lambda = lam * lambda_shift.exp();
        let rho1 = arg.expm1_series(cap).scale(new_lambda);
        let mut taylor = Vec::with_capacity(self.rho_taylor.len());
        for (i, rk) in self.rho_taylor.iter().enumerate() {
            let k = (i + 2) as f64;
            let factor = v.scale(Complex64::new(k, 0.0)).sub(&vs).exp_series(cap);
            taylor.push(rk.multiply(&factor, cap));
        }
        Ok(FiberedJet {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            lambda_shift: self.lambda_shift + lambda_shift,
            rho0,
            rho1,
            rho_taylor: taylor,
            strip: self.strip.min(v.strip()),
            radius: self.radius / u1_norm,
            fourier_cap: cap,
        })
    }

    /// Same as [`conjugate_linear_exp`](Self::conjugate_linear_exp) with `u₁` given directly.
    pub fn conjugate_linear(
        &self,
        u1: &StripFunction,
        lambda_new: Complex64,
        rot: &Rotation,
    ) -> Result<FiberedJet, JetError> {
        let dev_f = u1.add_const(Complex64::new(-1.0, 0.0));
        let dev = dev_f.norm_bound(self.strip) + u1.slack();
        if dev >= 1.0 {
            return Err(JetError::U1NearVanishing(dev));
        }
        let v = dev_f.log1p_series(self.fourier_cap)?;
        let shift = clog1p(lambda_new / self.lambda() - 1.0);
        self.conjugate_linear_exp(&v, shift, rot)
    }

    /// Grid values of ∂_z f_θ(u(θ)).
    pub fn multiplier_samples(&self, u: &StripFunction, samples: usize) -> Vec<Complex64> {
        let uu = u.to_samples(samples);
        let r1 = self.rho1.to_samples(samples);
        let rk: Vec<Vec<Complex64>> = self.rho_taylor.iter().map(|f| f.to_samples(samples)).collect();
        let lam = self.lambda();
        (0..samples)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, r) in rk.iter().enumerate().rev() {
                    acc = acc * uu[j] + r[j] * (i + 2) as f64;
                }
                lam + r1[j] + acc * uu[j]
            })
            .collect()
    }

    /// (1/2π) · mean unwrapped arg of ∂_z f(u), reduced to [0,1).
    pub fn fibered_rotation_number(&self, u: &StripFunction, samples: usize) -> Result<f64, JetError> {
        let d = self.multiplier_samples(u, samples);
        let phase = unwrap_phase(&d)?;
        let mean = crate::par::pairwise_sum(&phase) / samples as f64;
        Ok((mean / (2.0 * PI)).rem_euclid(1.0))
    }

    /// |mean log |∂_z f(u)||
    pub fn indifference_defect(&self, u: &StripFunction, samples: usize) -> Result<f64, JetError> {
        let d = self.multiplier_samples(u, samples);
        let mut logs = Vec::with_capacity(samples);
        for (j, z) in d.iter().enumerate() {
            if z.norm() == 0.0 {
                return Err(JetError::VanishingDerivative(j));
            }
            logs.push(0.5 * (z.norm_sqr()).ln());
        }
        Ok((crate::par::pairwise_sum(&logs) / samples as f64).abs())
    }

    /// max_j |f_θ(u(θ_j)) − u(θ_j + α)|
    pub fn invariance_residual(&self, u: &StripFunction, rot: &Rotation, samples: usize) -> f64 {
        let uu = u.to_samples(samples);
        let us = rot.shift(u).to_samples(samples);
        let r0 = self.rho0.to_samples(samples);
        let r1 = self.rho1.to_samples(samples);
        let rk: Vec<Vec<Complex64>> = self.rho_taylor.iter().map(|f| f.to_samples(samples)).collect();
        let lam = self.lambda();
        (0..samples)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in rk.iter().rev() {
                    acc = (acc + r[j]) * uu[j];
                }
                acc *= uu[j];
                (r0[j] + (lam + r1[j]) * uu[j] + acc - us[j]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Conjugates an invariant indifferent curve to the normal form
    /// (θ+α, λz + O(z²)).
    pub fn normal_form_at_curve(
        &self,
        u: &StripFunction,
        rot: &Rotation,
        samples: usize,
    ) -> Result<(FiberedJet, AffineConjugacy), JetError> {
        let res = self.invariance_residual(u, rot, samples);
        if res > 1e-10 {
            return Err(JetError::NotInvariant(format!("invariance residual {res:e} > 1e-10")));
        }
        let defect = self.indifference_defect(u, samples)?;
        if defect > 1e-8 {
            return Err(JetError::NotInvariant(format!("indifference defect {defect:e} > 1e-8")));
        }
        let cap = self.fourier_cap;
        let moved = self.conjugate_translation(u, rot)?;
        let ell = moved.rho1.scale(1.0 / moved.lambda()).log1p_series(cap)?;
        let centred = ell.add_const(-ell.mean());
        let v = solve_untwisted(&centred.scale(Complex64::new(-1.0, 0.0)), rot)?;
        let out = moved.conjugate_linear_exp(&v, Complex64::new(0.0, 0.0), rot)?;
        Ok((out, AffineConjugacy { u0: u.clone(), v }))
    }

    pub fn retag_strip(&self, strip: f64) -> FiberedJet {
        let mut out = self.clone();
        out.strip = strip;
        out.rho0 = out.rho0.with_strip(strip);
        out.rho1 = out.rho1.with_strip(strip);
        out.rho_taylor = out.rho_taylor.into_iter().map(|f| f.with_strip(strip)).collect();
        out
    }
}

/// u, u², …, u^k_max (index = power; index 0 is the constant 1).
fn powers(u: &StripFunction, k_max: usize, cap: usize) -> Vec<StripFunction> {
    let mut out = vec![StripFunction::constant(Complex64::new(1.0, 0.0), u.strip())];
    if k_max == 0 {
        return out;
    }
    let base = u.resized(u.order().min(cap));
    out.push(base.clone());
    for _ in 2..=k_max {
        let next = out.last().unwrap().multiply(&base, cap);
        out.push(next);
    }
    out
}

/// Continuous argument along a closed sample loop, checked for degree zero.
pub fn unwrap_phase(d: &[Complex64]) -> Result<Vec<f64>, JetError> {
    let n = d.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    if let Some(j) = d.iter().position(|z| z.norm() == 0.0) {
        return Err(JetError::VanishingDerivative(j));
    }
    let mut cur = d[0].arg();
    out.push(cur);
    for j in 1..=n {
        let jump = (d[j % n] / d[j - 1]).arg();
        if jump.abs() > PI / 2.0 {
            return Err(JetError::UnwrapAmbiguity { index: j, jump });
        }
        cur += jump;
        if j < n {
            out.push(cur);
        }
    }
    let degree = ((cur - out[0]) / (2.0 * PI)).round() as i64;
    if degree != 0 {
        return Err(JetError::NonzeroDegree(degree));
    }
    Ok(out)
}
