use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::run::PreparedState;
use super::trace::{StageTrace, StepRecord};
use super::zero::{find_parameter_zero, ZeroReport};
use super::{EngineError, Mode, ParamFamily};
use crate::cohomology::{solve_twisted, solve_untwisted, Rotation};
use crate::fibered::{AffineConjugacy, FiberedJet};
use crate::strip::StripFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Preparative,
    Main,
}

/// Enough to re-apply a stage to any member of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub kind: StageKind,
    pub order: usize,
    pub steps: usize,
    pub linear: bool,
    pub strip_after: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub log: Vec<StageRecord>,
    /// Index n of the next main stage.
    pub stage: usize,
    pub t: [f64; 2],
    pub p: f64,
    pub traces: Vec<StageTrace>,
    pub stages_done: usize,
    pub finished: bool,
}

impl RunState {
    pub fn t(&self) -> Complex64 {
        Complex64::new(self.t[0], self.t[1])
    }
}

fn clip(f: &StripFunction, order: usize) -> StripFunction {
    f.truncate(order).resized(order.min(f.order())).with_slack(0.0)
}

pub(crate) fn translation_step(
    jet: &FiberedJet,
    order: usize,
    rot: &Rotation,
) -> Result<(FiberedJet, StripFunction), EngineError> {
    let rhs = clip(&jet.rho0, order).scale(Complex64::new(-1.0, 0.0));
    let u0 = solve_twisted(&rhs, rot)?;
    let next = jet.conjugate_translation(&u0, rot)?;
    Ok((next, u0))
}

pub(crate) fn linear_step(
    jet: &FiberedJet,
    order: usize,
    rot: &Rotation,
) -> Result<(FiberedJet, StripFunction, Complex64), EngineError> {
    let ell = jet.rho1.scale(1.0 / jet.lambda()).log1p_series(jet.fourier_cap)?;
    let m = ell.mean();
    let rhs = clip(&ell, order).add_const(-m).scale(Complex64::new(-1.0, 0.0));
    let v = solve_untwisted(&rhs, rot)?;
    let next = jet.conjugate_linear_exp(&v, Complex64::new(0.0, 0.0), rot)?;
    Ok((next, v, m))
}

/// Re-applies the logged stages to the family member at `t`. The
/// accumulated conjugacy is tracked only when asked for.
pub fn replay(
    family: &ParamFamily,
    log: &[StageRecord],
    t: Complex64,
    rot: &Rotation,
    track: bool,
) -> Result<(FiberedJet, AffineConjugacy), EngineError> {
    let mut jet = family.at(t);
    let cap = jet.fourier_cap;
    let mut conj = AffineConjugacy::identity(jet.strip);
    for rec in log {
        for _ in 0..rec.steps {
            let (next, u0) = translation_step(&jet, rec.order, rot)?;
            if track {
                conj.then_translation(&u0, cap);
            }
            jet = next;
        }
        if rec.linear {
            let (next, v, _) = linear_step(&jet, rec.order, rot)?;
            if track {
                conj.then_linear(&v);
            }
            jet = next;
        }
        if let Some(s) = rec.strip_after {
            jet = jet.retag_strip(s);
        }
    }
    Ok((jet, conj))
}

/// Replays the first `upto` records of the log.
pub fn replay_to(
    family: &ParamFamily,
    log: &[StageRecord],
    upto: usize,
    t: Complex64,
    rot: &Rotation,
) -> Result<FiberedJet, EngineError> {
    if upto > log.len() {
        return Err(EngineError::LogEnd { requested: upto, available: log.len() });
    }
    Ok(replay(family, &log[..upto], t, rot, false)?.0)
}

pub(crate) fn full_norm(f: &StripFunction, strip: f64) -> f64 {
    f.norm_bound(strip) + f.slack()
}

fn taylor_measures(jet: &FiberedJet) -> (f64, f64) {
    let s = jet.strip;
    let mut m = 0.0;
    let mut n = 0.0;
    for (i, f) in jet.rho_taylor.iter().enumerate() {
        let k = (i + 2) as f64;
        m += k * (k - 1.0) * full_norm(f, s);
        n += k * full_norm(&f.derivative(), s);
    }
    (m, n)
}

pub(crate) fn stage_order(n: usize, cap: usize) -> usize {
    if n >= 60 {
        cap
    } else {
        (1usize << n).min(cap)
    }
}

fn step_record(i: usize, eta: f64, u0: f64, jet: &FiberedJet) -> StepRecord {
    let s = jet.strip;
    StepRecord {
        i,
        eta,
        u0,
        rho0: full_norm(&jet.rho0, s),
        rho1: full_norm(&jet.rho1, s),
        d_theta_rho1: full_norm(&jet.rho1.derivative(), s),
        radius: jet.radius,
    }
}

/// Part 1 with a given stop threshold; returns the number of steps.
pub(crate) fn translation_loop(
    jet: &mut FiberedJet,
    order: usize,
    threshold: f64,
    step_cap: usize,
    stage: usize,
    radius_floor: Option<f64>,
    rot: &Rotation,
) -> Result<(usize, Vec<StepRecord>), EngineError> {
    let mut eta = full_norm(&jet.rho0, jet.strip);
    let mut steps = 0;
    let mut log = Vec::new();
    while eta > threshold {
        if steps >= step_cap {
            return Err(EngineError::StopRuleNotReached { stage, steps, eta, threshold });
        }
        let (next, u0) = translation_step(jet, order, rot)?;
        let e = jet.eta_term(&u0)?;
        eta = full_norm(&e, jet.strip);
        *jet = next;
        steps += 1;
        if let Some(floor) = radius_floor {
            if jet.radius < floor {
                return Err(EngineError::RadiusFloor { stage, step: steps, radius: jet.radius });
            }
        }
        log.push(step_record(steps, eta, full_norm(&u0, jet.strip), jet));
    }
    Ok((steps, log))
}

/// One main stage: translation steps, linear step, strip bookkeeping and the
/// parameter correction. Advances `state` on success.
pub fn run_stage(prep: &PreparedState, state: &mut RunState) -> Result<StageTrace, EngineError> {
    let cfg = &prep.config;
    let rot = &prep.rotation;
    let family = &prep.family;
    let paper = cfg.mode == Mode::Paper;
    let n = state.stage;
    let t = state.t();
    let (start, _) = replay(family, &state.log, t, rot, false)?;
    let order = stage_order(n, cfg.fourier_cap);
    let rho0_start = full_norm(&start.rho0, start.strip);

    let threshold = if paper {
        let sched = prep.schedule.as_ref().expect("paper mode carries a schedule");
        sched.log_w_at(n + 1)?.exp() / 4.0
    } else {
        (rho0_start * 1e-2).max(cfg.target_residual / 10.0)
    };
    let mut jet = start;
    let (steps, step_log) = translation_loop(&mut jet, order, threshold, cfg.step_cap, n, paper.then_some(0.375), rot)?;

    let (mut jet, v, m) = linear_step(&jet, order, rot)?;
    let v_norm = full_norm(&v, jet.strip);

    let mut strip_after = None;
    let mut bound_rho0 = None;
    let mut bound_d1 = None;
    if paper {
        let sched = prep.schedule.as_ref().expect("paper mode carries a schedule");
        let s_next = sched.delta_at(n + 1)?;
        jet = jet.retag_strip(s_next);
        strip_after = Some(s_next);
        let w = sched.log_w_at(n + 1)?.exp();
        let l = sched.log_l_at(n + 1)?.exp();
        let r0 = full_norm(&jet.rho0, s_next);
        let d1 = full_norm(&jet.rho1.derivative(), s_next);
        if r0 > w {
            return Err(EngineError::AssertionFailed {
                stage: n,
                what: "|rho0| <= w_{n+1}".into(),
                value: r0,
                bound: w,
            });
        }
        if d1 > l {
            return Err(EngineError::AssertionFailed {
                stage: n,
                what: "|d_theta rho1| <= l_{n+1}".into(),
                value: d1,
                bound: l,
            });
        }
        bound_rho0 = Some(w);
        bound_d1 = Some(l);
    }
    let (m_measured, n_measured) = taylor_measures(&jet);

    let record = StageRecord { n, kind: StageKind::Main, order, steps, linear: true, strip_after };
    let mut log = state.log.clone();
    log.push(record);

    let g = |tt: Complex64| -> Result<Complex64, EngineError> {
        let (j, _) = replay(family, &log, tt, rot, false)?;
        Ok(j.rho1.mean())
    };
    let g_center = jet.rho1.mean();
    let delta0 = Complex64::new(prep.preparation.delta0[0], prep.preparation.delta0[1]);
    let (zero, search_radius): (Option<ZeroReport>, f64) = if paper {
        let sched = prep.schedule.as_ref().expect("paper mode carries a schedule");
        let radius = 100.0 / 99.0 * 3.0 * sched.log_l_at(n)?.exp();
        (Some(find_parameter_zero(&g, t, radius, cfg.circle_samples, cfg.execution)?), radius)
    } else if g_center.norm() < 1e-14 {
        (None, 0.0)
    } else {
        let mut radius = (4.0 * g_center.norm() / delta0.norm()).min(state.p);
        loop {
            match find_parameter_zero(&g, t, radius, cfg.circle_samples, cfg.execution) {
                Ok(z) => break (Some(z), radius),
                Err(EngineError::WindingZero { .. }) if radius < state.p => radius = (2.0 * radius).min(state.p),
                Err(e) => return Err(e),
            }
        }
    };
    let t_next = zero.as_ref().map(|z| z.zero()).unwrap_or(t);
    let moved = (t_next - t).norm();
    let p_next = if paper {
        let sched = prep.schedule.as_ref().expect("paper mode carries a schedule");
        let p_next = 100.0 * sched.log_l_at(n + 1)?.exp();
        if moved + p_next > state.p {
            return Err(EngineError::Containment { stage: n, reach: moved + p_next, p: state.p });
        }
        p_next
    } else {
        state.p - moved
    };

    let residual = if paper {
        None
    } else {
        let (_, conj) = replay(family, &log, t_next, rot, true)?;
        Some(family.at(t_next).invariance_residual(&conj.u0, rot, cfg.residual_samples))
    };

    let trace = StageTrace {
        n,
        kind: "main".into(),
        order,
        steps,
        step_log,
        rho0_start,
        rho0_end: full_norm(&jet.rho0, jet.strip),
        rho1_end: full_norm(&jet.rho1, jet.strip),
        d_theta_rho1_end: full_norm(&jet.rho1.derivative(), jet.strip),
        m_measured,
        n_measured,
        lambda_log_shift: [m.re, m.im],
        v_norm,
        strip: jet.strip,
        radius: jet.radius,
        t: state.t,
        p: state.p,
        t_next: [t_next.re, t_next.im],
        p_next,
        search_radius,
        g_center: g_center.norm(),
        dg_dt: zero.as_ref().map(|z| Complex64::new(z.derivative[0], z.derivative[1]).norm()).unwrap_or(0.0),
        linear_defect: zero.as_ref().map(|z| z.linear_defect).unwrap_or(0.0),
        slack: jet.rho0.slack() + jet.rho1.slack(),
        residual,
        bound_rho0,
        bound_d_theta_rho1: bound_d1,
    };
    state.log = log;
    state.stage = n + 1;
    state.t = [t_next.re, t_next.im];
    state.p = p_next;
    state.stages_done += 1;
    state.traces.push(trace.clone());
    Ok(trace)
}
