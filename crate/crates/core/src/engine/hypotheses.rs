use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EngineConfig, ParamFamily};
use crate::arithmetic::is_rational_pair;
use crate::cohomology::RESONANCE_FLOOR;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    /// ∂_t ∫ρ₁ at t₀
    pub delta0: [f64; 2],
    pub rational_pair: Option<i64>,
    pub all_pass: bool,
}

impl HypothesisReport {
    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn summary(&self) -> String {
        let mut parts: Vec<String> =
            self.failures().iter().map(|c| format!("{} = {:e} vs bound {:e}", c.name, c.value, c.bound)).collect();
        if let Some(k) = self.rational_pair {
            parts.push(format!("k alpha - beta integer for k = {k}"));
        }
        parts.join("; ")
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn upper(name: &str, value: f64, bound: f64) -> HypothesisCheck {
    HypothesisCheck { name: name.into(), value, bound, pass: value <= bound }
}

/// Norm bounds, transversality and the non-resonance of (α, β), all at the
/// disc center `t₀`.
pub fn verify_hypotheses(family: &ParamFamily, cfg: &EngineConfig) -> HypothesisReport {
    let t0 = cfg.t0();
    let jet = family.at(t0);
    let s = jet.strip;
    let eps = cfg.epsilon;
    let mut checks = vec![
        upper("rho0", jet.rho0.norm_bound(s) + jet.rho0.slack(), eps),
        upper("rho1", jet.rho1.norm_bound(s) + jet.rho1.slack(), eps),
    ];
    let m: f64 = jet
        .rho_taylor
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let k = (i + 2) as f64;
            k * (k - 1.0) * (f.norm_bound(s) + f.slack())
        })
        .sum();
    checks.push(upper("M", m, cfg.m_const));
    checks.push(upper("T", family.t_bound(t0), cfg.t_const));
    let delta0: Complex64 = family.transversality(t0);
    let d = delta0.norm();
    let l = cfg.l_const;
    checks.push(HypothesisCheck { name: "transversality_upper".into(), value: d, bound: l, pass: d < l });
    checks.push(HypothesisCheck { name: "transversality_lower".into(), value: d, bound: 1.0 / l, pass: d > 1.0 / l });
    let rational_pair = is_rational_pair(&jet.alpha, &jet.beta, cfg.fourier_cap as u64, RESONANCE_FLOOR);
    let all_pass = rational_pair.is_none() && checks.iter().all(|c| c.pass);
    HypothesisReport { checks, delta0: [delta0.re, delta0.im], rational_pair, all_pass }
}
