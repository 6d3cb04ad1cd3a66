#![allow(dead_code)]

use fkam_core::arithmetic::Real;
use fkam_core::fibered::FiberedJet;
use fkam_core::strip::StripFunction;
use num_complex::Complex64;
use rand::Rng;

pub fn golden() -> Real {
    Real::from_quotients(&[], &[1], 256).unwrap()
}

pub fn sqrt2_minus_1() -> Real {
    Real::from_quotients(&[], &[2], 256).unwrap()
}

pub fn half(x: &Real) -> Real {
    x.div_int(&2.into())
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Coefficients decaying like `scale·e^{-decay|n|}` with random phases.
pub fn random_poly<R: Rng>(rng: &mut R, order: usize, scale: f64, decay: f64, strip: f64) -> StripFunction {
    let mut f = StripFunction::zeros(order, strip);
    for n in -(order as i64)..=order as i64 {
        let r = scale * rng.gen_range(0.2..1.0) * (-decay * n.abs() as f64).exp();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        f.set(n, Complex64::from_polar(r, phi));
    }
    f
}

pub fn random_jet<R: Rng>(
    rng: &mut R,
    alpha: &Real,
    beta: &Real,
    order: usize,
    taylor_cap: usize,
    strip: f64,
) -> FiberedJet {
    let mut jet = FiberedJet::linear(alpha.clone(), beta.clone(), strip, 4 * order, taylor_cap);
    jet.rho0 = random_poly(rng, order, 1e-2, 1.0, strip);
    jet.rho1 = random_poly(rng, order, 1e-2, 1.0, strip);
    for k in 0..jet.rho_taylor.len() {
        jet.rho_taylor[k] = random_poly(rng, order, 0.2 / (k + 1) as f64, 1.0, strip);
    }
    jet
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

use fkam_core::cohomology::Rotation;
use fkam_core::fibered::AffineConjugacy;

/// Second coordinate of h⁻¹∘F∘h for h(θ,z) = (θ, u₀(θ) + e^{v(θ)} z), by
/// direct evaluation of F.
pub fn conjugated_pointwise(f: &FiberedJet, h: &AffineConjugacy, theta: Complex64, z: Complex64) -> Complex64 {
    let (_, w) = h.apply(theta, z);
    let fw = f.fiber_map(theta, w);
    let next = theta + f.alpha.to_f64();
    h.apply_inverse(next, fw).1
}

/// Worst relative mismatch between `g` and h⁻¹∘F∘h at random interior points.
pub fn conjugation_mismatch<R: Rng>(
    rng: &mut R,
    f: &FiberedJet,
    g: &FiberedJet,
    h: &AffineConjugacy,
    points: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let theta = Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.9..0.9) * g.strip);
        let z = Complex64::from_polar(rng.gen_range(0.0..0.9) * g.radius, rng.gen_range(0.0..std::f64::consts::TAU));
        let want = conjugated_pointwise(f, h, theta, z);
        let got = g.fiber_map(theta, z);
        worst = worst.max((got - want).norm() / want.norm().max(1e-3));
    }
    worst
}

/// Random admissible pair (u₀, v) and the jet obtained by conjugating with it.
pub fn random_conjugation<R: Rng>(
    rng: &mut R,
    f: &FiberedJet,
    rot: &Rotation,
    order: usize,
) -> (FiberedJet, AffineConjugacy) {
    let strip = f.strip;
    let u0 = random_poly(rng, order, 2e-2, 1.0, strip);
    let v = random_poly(rng, order, 2e-2, 1.0, strip);
    let g = f.conjugate_translation(&u0, rot).unwrap();
    let g = g.conjugate_linear_exp(&v, Complex64::new(0.0, 0.0), rot).unwrap();
    let mut h = AffineConjugacy::identity(strip);
    h.then_translation(&u0, f.fourier_cap);
    h.then_linear(&v);
    (g, h)
}

use fkam_core::arithmetic::ContinuedFraction;
use fkam_core::engine::{Coupling, EngineConfig, Mode, ParamFamily};
use fkam_core::schedule::{build_schedule, choose_n_star};

/// Adaptive-mode cosine family with α golden and β = α/2.
pub fn cosine_case(eps: f64) -> (ParamFamily, EngineConfig) {
    let g = golden();
    let b = half(&g);
    let family = ParamFamily::cosine_example(g, b, eps, 0.1, 64);
    let cfg = EngineConfig { epsilon: eps, fourier_cap: 64, ..Default::default() };
    (family, cfg)
}

/// One-mode ρ₀ of size w_{n*}/10, ρ = 0, run at ε = 0.99·ε̄ in paper mode.
pub fn paper_toy(max_stages: usize) -> (ParamFamily, EngineConfig) {
    let g = golden();
    let b = half(&g);
    let cf = ContinuedFraction::expand_safe(&g, 400).unwrap();
    let mut s = build_schedule(&cf, &b, 1e6, 60).unwrap();
    let ns = choose_n_star(&mut s, 0.1).unwrap();
    let eps = 0.99 * s.log_epsilon_bar().unwrap().exp();
    let mut base = FiberedJet::linear(g, b, 0.1, 64, 1);
    base.rho0 = StripFunction::mode(1, Complex64::new(s.log_w[ns].exp() / 10.0, 0.0), 0.1);
    let family = ParamFamily { base, coupling: Coupling::LinearRho1 };
    let cfg = EngineConfig { mode: Mode::Paper, epsilon: eps, fourier_cap: 64, max_stages, ..Default::default() };
    (family, cfg)
}
