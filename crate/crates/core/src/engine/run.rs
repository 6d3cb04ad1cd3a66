use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hypotheses::{verify_hypotheses, HypothesisReport};
use super::stage::{full_norm, replay, run_stage, stage_order, translation_loop, RunState, StageKind, StageRecord};
use super::trace::StageTrace;
use super::zero::find_parameter_zero;
use super::{EngineConfig, EngineError, Mode, ParamFamily};
use crate::arithmetic::{worst_divisor_pair, ArithError, ContinuedFraction};
use crate::cohomology::Rotation;
use crate::fibered::{AffineConjugacy, FiberedJet, InvariantCurve};
use crate::schedule::{build_schedule, choose_n_star, KamSchedule};
use crate::strip::StripFunction;

const CF_DEPTH: usize = 400;

/// Constants fixed before the main stages start.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Preparation {
    pub mode: Mode,
    pub n_star: Option<usize>,
    pub n_bar: usize,
    pub epsilon_bar: Option<f64>,
    pub log_epsilon_bar: Option<f64>,
    pub w_stage: usize,
    pub gamma_pair: f64,
    pub w_const: f64,
    pub discriminant: f64,
    pub r_eps: f64,
    pub k_r: f64,
    pub delta0: [f64; 2],
    pub t_star: [f64; 2],
    pub p_start: f64,
    pub preparative_stages: usize,
    /// ‖∂_θρ₁‖ at width 3δ/4 and the value 24ε/δ it is compared against.
    pub d_theta_rho1_start: f64,
    pub cauchy_bound: f64,
}

pub struct PreparedState {
    pub family: ParamFamily,
    pub config: EngineConfig,
    pub hypotheses: HypothesisReport,
    pub preparation: Preparation,
    pub schedule: Option<KamSchedule>,
    pub rotation: Rotation,
    pub state: RunState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: EngineConfig,
    pub hypotheses: HypothesisReport,
    pub preparation: Preparation,
    pub state: RunState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KamResult {
    pub mode: Mode,
    pub t_bar: [f64; 2],
    pub curve: InvariantCurve,
    pub conjugacy: AffineConjugacy,
    pub u1_product: StripFunction,
    /// mean log(1 + ρ₁/λ) of the final jet, i.e. log of the accumulated multiplier change.
    pub lambda_drift: [f64; 2],
    pub final_jet: FiberedJet,
    pub residual: f64,
    pub rotation_number: f64,
    pub rotation_error: f64,
    pub indifference_defect: f64,
    pub stages: Vec<StageTrace>,
    pub log: Vec<StageRecord>,
    pub hypotheses: HypothesisReport,
    pub preparation: Preparation,
}

fn validate(cfg: &EngineConfig) -> Result<(), EngineError> {
    let bad = |what: &str| Err(EngineError::HypothesisFailed(format!("invalid configuration: {what}")));
    if !(cfg.epsilon > 0.0) {
        return bad("epsilon must be positive");
    }
    if !(cfg.delta > 0.0) {
        return bad("delta must be positive");
    }
    if !(cfg.l_const > 1.0) {
        return bad("L must exceed 1");
    }
    if !(cfg.t_const > 0.0) || !(cfg.m_const > 0.0) {
        return bad("M and T must be positive");
    }
    if cfg.fourier_cap == 0 || cfg.circle_samples < 8 {
        return bad("fourier_cap and circle_samples too small");
    }
    Ok(())
}

fn context(family: &ParamFamily, cfg: &EngineConfig) -> Result<(Rotation, Option<KamSchedule>), EngineError> {
    let jet = &family.base;
    let rot = Rotation::new(&jet.alpha, Some(&jet.beta), cfg.fourier_cap);
    let schedule = if cfg.mode == Mode::Paper {
        let cf = ContinuedFraction::expand_safe(&jet.alpha, CF_DEPTH)?;
        let mut s = build_schedule(&cf, &jet.beta, cfg.aleph, cfg.n_max)?;
        choose_n_star(&mut s, cfg.delta)?;
        Some(s)
    } else {
        None
    };
    Ok((rot, schedule))
}

/// Checks hypotheses, fixes n*, n̄, R_ε and t*, and runs the preparative
/// stages.
pub fn prepare(family: &ParamFamily, cfg: &EngineConfig) -> Result<PreparedState, EngineError> {
    validate(cfg)?;
    let hyp = verify_hypotheses(family, cfg);
    let jet = &family.base;
    if let Some(k) = hyp.rational_pair {
        let dist = jet.alpha.mul_i64(k).sub(&jet.beta).nearest_int_dist().to_f64();
        return Err(ArithError::RationalPair { k, dist }.into());
    }
    for name in ["transversality_upper", "transversality_lower"] {
        let c = hyp.check(name).expect("transversality always checked");
        if !c.pass {
            return Err(EngineError::Transversality { value: c.value, lower: 1.0 / cfg.l_const, upper: cfg.l_const });
        }
    }
    if cfg.mode == Mode::Paper && !hyp.all_pass {
        return Err(EngineError::HypothesisFailed(hyp.summary()));
    }
    let (rotation, schedule) = context(family, cfg)?;
    let eps = cfg.epsilon;
    let t0 = cfg.t0();

    let (w_stage, epsilon_bar, log_epsilon_bar) = match &schedule {
        Some(s) => {
            let le = s.log_epsilon_bar()?;
            if eps.ln() > le {
                return Err(EngineError::EpsilonAboveBar { epsilon: eps, epsilon_bar: le.exp() });
            }
            (s.n_star.expect("n* chosen"), Some(le.exp()), Some(le))
        }
        None => (cfg.adaptive_start_stage, None, None),
    };
    let gamma_pair = match &schedule {
        Some(s) => s.log_a[w_stage].exp(),
        None => worst_divisor_pair(&jet.alpha, &jet.beta, 1u128 << w_stage)?.value.to_f64(),
    };
    let w_const = cfg.c2 * cfg.m_const * (w_stage as f64).exp2() * gamma_pair;
    let linv = 1.0 / cfg.l_const;
    let discriminant = linv * linv - 2.0 * cfg.t_const * eps * (1.0 + 4.0 * w_const);
    if discriminant < 0.0 {
        return Err(EngineError::NegativeDiscriminant { discriminant });
    }
    let r_eps = 2.0 * eps * (1.0 + 4.0 * w_const) / (linv + discriminant.sqrt());
    let mut k_r = 2.0 * cfg.l_const * (1.0 + 4.0 * w_const) + 96000.0 * cfg.l_const * w_const;

    let mut log: Vec<StageRecord> = Vec::new();
    let mut n_bar = w_stage;
    let mut p_bracket = None;
    if let Some(s) = &schedule {
        let ns = w_stage;
        let log_w_star = s.log_w[ns];
        k_r += 2400.0 * (-log_w_star).exp() / cfg.delta;
        let log_x = eps.ln() - log_w_star;
        let log_cut = |n: usize| (cfg.delta / 24.0).ln() + s.log_l[n];
        if log_x <= log_cut(ns) {
            while n_bar + 1 <= s.n_max && log_x <= log_cut(n_bar + 1) {
                n_bar += 1;
            }
            let mut jet = family.at(t0);
            let mut strip = cfg.delta;
            for n in ns..n_bar {
                let threshold = eps * (s.log_w[n + 1] - s.log_w[ns]).exp() / (2.0 * cfg.aleph);
                let order = stage_order(n, cfg.fourier_cap);
                let (steps, _) = translation_loop(&mut jet, order, threshold, cfg.step_cap, n, None, &rotation)?;
                strip -= s.d0[n];
                jet = jet.retag_strip(strip);
                log.push(StageRecord {
                    n,
                    kind: StageKind::Preparative,
                    order,
                    steps,
                    linear: false,
                    strip_after: Some(strip),
                });
            }
            p_bracket = Some(2400.0 * eps * (-log_w_star).exp() / cfg.delta);
        }
        let start_strip = s.delta_at(n_bar)?;
        log.push(StageRecord {
            n: n_bar,
            kind: StageKind::Preparative,
            order: 0,
            steps: 0,
            linear: false,
            strip_after: Some(start_strip),
        });
    }
    let preparative_stages = log.iter().filter(|r| r.steps > 0).count();

    let g = |t: Complex64| -> Result<Complex64, EngineError> {
        let (j, _) = replay(family, &log, t, &rotation, false)?;
        Ok(j.rho1.mean())
    };
    let zero = find_parameter_zero(&g, t0, r_eps, cfg.circle_samples, cfg.execution)?;
    let t_star = zero.zero();
    let p_start = match (&schedule, p_bracket) {
        (Some(_), Some(p)) => p,
        (Some(s), None) => 100.0 * s.log_l[n_bar].exp(),
        (None, _) => r_eps - (t_star - t0).norm(),
    };
    let delta0 = family.transversality(t0);
    let start_jet = family.at(t_star);
    let d_theta_rho1_start = start_jet.rho1.derivative().norm_bound(0.75 * cfg.delta) + start_jet.rho1.slack();
    let preparation = Preparation {
        mode: cfg.mode,
        n_star: schedule.as_ref().and_then(|s| s.n_star),
        n_bar,
        epsilon_bar,
        log_epsilon_bar,
        w_stage,
        gamma_pair,
        w_const,
        discriminant,
        r_eps,
        k_r,
        delta0: [delta0.re, delta0.im],
        t_star: [t_star.re, t_star.im],
        p_start,
        preparative_stages,
        d_theta_rho1_start,
        cauchy_bound: 24.0 * eps / cfg.delta,
    };
    let state = RunState {
        log,
        stage: n_bar,
        t: [t_star.re, t_star.im],
        p: p_start,
        traces: Vec::new(),
        stages_done: 0,
        finished: false,
    };
    Ok(PreparedState {
        family: family.clone(),
        config: cfg.clone(),
        hypotheses: hyp,
        preparation,
        schedule,
        rotation,
        state,
    })
}

fn with_trace(e: EngineError, traces: &[StageTrace]) -> EngineError {
    EngineError::WithTrace { source: Box::new(e), traces: traces.to_vec() }
}

impl PreparedState {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            hypotheses: self.hypotheses.clone(),
            preparation: self.preparation.clone(),
            state: self.state.clone(),
        }
    }

    fn drive(mut self, mut on_checkpoint: impl FnMut(&Checkpoint)) -> Result<KamResult, EngineError> {
        let cfg = self.config.clone();
        while !self.state.finished && self.state.stages_done < cfg.max_stages {
            if let Some(s) = &self.schedule {
                if self.state.stage + 1 > s.n_max {
                    break;
                }
            }
            let mut state = self.state.clone();
            let trace = run_stage(&self, &mut state).map_err(|e| with_trace(e, &self.state.traces))?;
            if cfg.mode == Mode::Adaptive {
                let res = trace.residual.unwrap_or(f64::INFINITY);
                if res <= cfg.target_residual && trace.rho0_end <= cfg.target_residual {
                    state.finished = true;
                }
            }
            self.state = state;
            on_checkpoint(&self.checkpoint());
        }
        if cfg.mode == Mode::Adaptive && !self.state.finished {
            let residual = self.state.traces.last().and_then(|t| t.residual).unwrap_or(f64::INFINITY);
            return Err(with_trace(
                EngineError::BudgetExhausted { residual, target: cfg.target_residual },
                &self.state.traces,
            ));
        }
        self.state.finished = true;
        self.finish().map_err(|e| with_trace(e, &self.state.traces))
    }

    fn finish(&self) -> Result<KamResult, EngineError> {
        let cfg = &self.config;
        let t_bar = self.state.t();
        let (final_jet, conjugacy) = replay(&self.family, &self.state.log, t_bar, &self.rotation, true)?;
        let f = self.family.at(t_bar);
        let u = &conjugacy.u0;
        let residual = f.invariance_residual(u, &self.rotation, cfg.residual_samples);
        let rotation_number = f.fibered_rotation_number(u, cfg.quadrature)?;
        let beta = f.beta.frac().to_f64();
        let diff = (rotation_number - beta).rem_euclid(1.0);
        let rotation_error = diff.min(1.0 - diff);
        let defect = f.indifference_defect(u, cfg.quadrature)?;
        let u1_product = conjugacy.u1(cfg.fourier_cap);
        crate::fibered::unwrap_phase(&u1_product.to_samples(cfg.quadrature))?;
        let drift = final_jet.rho1.scale(1.0 / final_jet.lambda()).log1p_series(cfg.fourier_cap)?.mean();
        let stage = self.state.stage;
        if cfg.mode == Mode::Adaptive {
            if residual > cfg.target_residual {
                return Err(EngineError::AssertionFailed {
                    stage,
                    what: "final invariance residual".into(),
                    value: residual,
                    bound: cfg.target_residual,
                });
            }
            if rotation_error > 1e-8 {
                return Err(EngineError::AssertionFailed {
                    stage,
                    what: "fibered rotation number".into(),
                    value: rotation_error,
                    bound: 1e-8,
                });
            }
            if defect > 1e-8 {
                return Err(EngineError::AssertionFailed {
                    stage,
                    what: "indifference defect".into(),
                    value: defect,
                    bound: 1e-8,
                });
            }
        }
        Ok(KamResult {
            mode: cfg.mode,
            t_bar: [t_bar.re, t_bar.im],
            curve: InvariantCurve { curve: u.clone(), t_bar: [t_bar.re, t_bar.im], strip: final_jet.strip },
            conjugacy: conjugacy.clone(),
            u1_product,
            lambda_drift: [drift.re, drift.im],
            final_jet,
            residual,
            rotation_number,
            rotation_error,
            indifference_defect: defect,
            stages: self.state.traces.clone(),
            log: self.state.log.clone(),
            hypotheses: self.hypotheses.clone(),
            preparation: self.preparation.clone(),
        })
    }
}

pub fn run(family: &ParamFamily, cfg: &EngineConfig) -> Result<KamResult, EngineError> {
    run_with_checkpoints(family, cfg, |_| {})
}

pub fn run_with_checkpoints(
    family: &ParamFamily,
    cfg: &EngineConfig,
    on_checkpoint: impl FnMut(&Checkpoint),
) -> Result<KamResult, EngineError> {
    prepare(family, cfg)?.drive(on_checkpoint)
}

/// Continues a run from a checkpoint; the jet at the current center is
/// rebuilt by replaying the stage log.
pub fn resume(
    family: &ParamFamily,
    checkpoint: &Checkpoint,
    on_checkpoint: impl FnMut(&Checkpoint),
) -> Result<KamResult, EngineError> {
    let cfg = checkpoint.config.clone();
    validate(&cfg)?;
    let (rotation, schedule) = context(family, &cfg)?;
    if checkpoint.state.log.iter().any(|r| r.order > cfg.fourier_cap) {
        return Err(EngineError::Checkpoint("stage order exceeds the configured Fourier cap".into()));
    }
    let prep = PreparedState {
        family: family.clone(),
        config: cfg,
        hypotheses: checkpoint.hypotheses.clone(),
        preparation: checkpoint.preparation.clone(),
        schedule,
        rotation,
        state: checkpoint.state.clone(),
    };
    prep.drive(on_checkpoint)
}

impl KamResult {
    /// Certified sup of ρ₀ of the final conjugated jet.
    pub fn final_rho0(&self) -> f64 {
        full_norm(&self.final_jet.rho0, self.final_jet.strip)
    }
}
