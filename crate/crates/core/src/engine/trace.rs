use serde::{Deserialize, Serialize};

/// One Part-1 step.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StepRecord {
    pub i: usize,
    pub eta: f64,
    pub u0: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub d_theta_rho1: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StageTrace {
    pub n: usize,
    pub kind: String,
    pub order: usize,
    pub steps: usize,
    pub step_log: Vec<StepRecord>,
    pub rho0_start: f64,
    pub rho0_end: f64,
    pub rho1_end: f64,
    pub d_theta_rho1_end: f64,
    /// Measured stand-ins for M_n, N_{n,i}: Σ k(k-1)‖ρ_k‖ and Σ k‖∂_θρ_k‖.
    pub m_measured: f64,
    pub n_measured: f64,
    /// log λ_n − log λ
    pub lambda_log_shift: [f64; 2],
    pub v_norm: f64,
    pub strip: f64,
    pub radius: f64,
    pub t: [f64; 2],
    pub p: f64,
    pub t_next: [f64; 2],
    pub p_next: f64,
    pub search_radius: f64,
    pub g_center: f64,
    pub dg_dt: f64,
    pub linear_defect: f64,
    pub slack: f64,
    pub residual: Option<f64>,
    pub bound_rho0: Option<f64>,
    pub bound_d_theta_rho1: Option<f64>,
}
