use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arithmetic::Real;
use crate::fibered::FiberedJet;
use crate::strip::StripFunction;

/// How the jet depends on the parameter `t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    /// ρ₁,t = ρ₁ + t
    LinearRho1,
    /// Each component gains Σ_j t^{j+1} c_j.
    Polynomial {
        #[serde(default)]
        rho0: Vec<StripFunction>,
        #[serde(default)]
        rho1: Vec<StripFunction>,
        #[serde(default)]
        rho_taylor: Vec<Vec<StripFunction>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamFamily {
    pub base: FiberedJet,
    pub coupling: Coupling,
}

fn poly(base: &StripFunction, coeffs: &[StripFunction], t: Complex64) -> StripFunction {
    let mut out = base.clone();
    let mut p = t;
    for c in coeffs {
        out = out.add(&c.scale(p)).with_strip(base.strip());
        p *= t;
    }
    out
}

fn poly_dt(coeffs: &[StripFunction], t: Complex64, order: u32, strip: f64) -> StripFunction {
    let mut out = StripFunction::zeros(0, strip);
    for (j, c) in coeffs.iter().enumerate() {
        let pow = j as u32 + 1;
        if pow < order {
            continue;
        }
        let falling: f64 = (0..order).map(|i| (pow - i) as f64).product();
        out = out.add(&c.scale(t.powu(pow - order) * falling)).with_strip(strip);
    }
    out
}

impl ParamFamily {
    pub fn at(&self, t: Complex64) -> FiberedJet {
        let mut jet = self.base.clone();
        match &self.coupling {
            Coupling::LinearRho1 => {
                jet.rho1 = jet.rho1.add_const(t);
            }
            Coupling::Polynomial { rho0, rho1, rho_taylor } => {
                jet.rho0 = poly(&jet.rho0, rho0, t);
                jet.rho1 = poly(&jet.rho1, rho1, t);
                for (k, cs) in rho_taylor.iter().enumerate() {
                    if k < jet.rho_taylor.len() {
                        jet.rho_taylor[k] = poly(&jet.rho_taylor[k], cs, t);
                    }
                }
            }
        }
        jet
    }

    /// ∂_t ∫ρ₁,t dθ in closed form.
    pub fn transversality(&self, t: Complex64) -> Complex64 {
        match &self.coupling {
            Coupling::LinearRho1 => Complex64::new(1.0, 0.0),
            Coupling::Polynomial { rho1, .. } => poly_dt(rho1, t, 1, self.base.strip).mean(),
        }
    }

    /// ‖∂_t∂_zρ_t‖ on the strip × unit disc plus ‖∂_t²ρ₁,t‖.
    pub fn t_bound(&self, t: Complex64) -> f64 {
        match &self.coupling {
            Coupling::LinearRho1 => 0.0,
            Coupling::Polynomial { rho1, rho_taylor, .. } => {
                let s = self.base.strip;
                let mut acc = poly_dt(rho1, t, 2, s).norm_bound(s);
                for (i, cs) in rho_taylor.iter().enumerate() {
                    acc += (i + 2) as f64 * poly_dt(cs, t, 1, s).norm_bound(s);
                }
                acc
            }
        }
    }

    /// α golden-type test family: ρ₀ = ε cos 2πθ, ρ₁,t = t + ε e^{2πiθ}, ρ = z².
    pub fn cosine_example(alpha: Real, beta: Real, epsilon: f64, strip: f64, fourier_cap: usize) -> Self {
        let mut base = FiberedJet::linear(alpha, beta, strip, fourier_cap, 2);
        let mut rho0 = StripFunction::zeros(1, strip);
        rho0.set(1, Complex64::new(epsilon / 2.0, 0.0));
        rho0.set(-1, Complex64::new(epsilon / 2.0, 0.0));
        base.rho0 = rho0;
        base.rho1 = StripFunction::mode(1, Complex64::new(epsilon, 0.0), strip);
        base.rho_taylor = vec![StripFunction::constant(Complex64::new(1.0, 0.0), strip)];
        ParamFamily { base, coupling: Coupling::LinearRho1 }
    }
}
