use serde::{Deserialize, Serialize};

use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Schedule-driven thresholds, strip losses and assertions.
    Paper,
    /// Same four-part skeleton with measured-norm targets.
    Adaptive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub mode: Mode,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub l_const: f64,
    #[serde(rename = "M")]
    pub m_const: f64,
    #[serde(rename = "T")]
    pub t_const: f64,
    pub delta: f64,
    pub aleph: f64,
    /// Last tabulated schedule index.
    pub n_max: usize,
    /// Main-algorithm stages to run before giving up (adaptive) or stopping (paper).
    pub max_stages: usize,
    pub fourier_cap: usize,
    pub target_residual: f64,
    pub quadrature: usize,
    pub residual_samples: usize,
    pub circle_samples: usize,
    pub step_cap: usize,
    pub c2: f64,
    pub adaptive_start_stage: usize,
    /// Initial parameter center [re, im].
    pub t0: [f64; 2],
    pub execution: Execution,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Adaptive,
            epsilon: 1e-4,
            l_const: 2.0,
            m_const: 2.0,
            t_const: 1.0,
            delta: 0.1,
            aleph: 1e6,
            n_max: 60,
            max_stages: 8,
            fourier_cap: 256,
            target_residual: 1e-11,
            quadrature: 4096,
            residual_samples: 2048,
            circle_samples: 256,
            step_cap: 60,
            c2: 1.0,
            adaptive_start_stage: 2,
            t0: [0.0, 0.0],
            execution: Execution::Parallel,
        }
    }
}

impl EngineConfig {
    pub fn t0(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.t0[0], self.t0[1])
    }
}
