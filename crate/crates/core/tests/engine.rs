mod common;

use std::sync::OnceLock;

use common::*;
use fkam_core::arithmetic::ArithError;
use fkam_core::cohomology::Rotation;
use fkam_core::engine::*;
use fkam_core::fibered::FiberedJet;
use fkam_core::par::Execution;
use fkam_core::strip::StripFunction;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cosine_run() -> &'static (ParamFamily, EngineConfig, KamResult) {
    static RUN: OnceLock<(ParamFamily, EngineConfig, KamResult)> = OnceLock::new();
    RUN.get_or_init(|| {
        let (family, cfg) = cosine_case(1e-5);
        let result = run(&family, &cfg).unwrap();
        (family, cfg, result)
    })
}

fn rotation(family: &ParamFamily, cfg: &EngineConfig) -> Rotation {
    Rotation::new(&family.base.alpha, Some(&family.base.beta), cfg.fourier_cap)
}

#[test]
fn zero_finder_linear_root() {
    let c0 = c(0.013, -0.007);
    let z = find_parameter_zero(|t| Ok(t - c0), c(0.0, 0.0), 0.05, 64, Execution::Sequential).unwrap();
    assert_eq!(z.winding, 1);
    assert!((z.zero() - c0).norm() <= 1e-12 * c0.norm());
    assert!(z.linear_defect < 1e-12);
}

#[test]
fn zero_finder_nonlinear_root() {
    let c0 = c(0.01, 0.02);
    let z = find_parameter_zero(|t| Ok((t - c0) * (1.0 + 3.0 * t).exp()), c(0.0, 0.0), 0.1, 128, Execution::Parallel)
        .unwrap();
    assert!((z.zero() - c0).norm() < 1e-13);
    assert!(z.linear_defect > 1e-3);
}

#[test]
fn zero_finder_rejections() {
    let c0 = c(0.01, 0.0);
    let e = find_parameter_zero(|t| Ok((t - c0) * (t - c0)), c(0.0, 0.0), 0.05, 64, Execution::Sequential).unwrap_err();
    assert!(matches!(e, EngineError::WindingMany { winding: 2 }));
    let e = find_parameter_zero(|t| Ok(t - 1.0), c(0.0, 0.0), 0.05, 64, Execution::Sequential).unwrap_err();
    assert!(matches!(e, EngineError::WindingZero { .. }));
    let e = find_parameter_zero(|t| Ok(t.powu(7)), c(0.0, 0.0), 0.05, 16, Execution::Sequential).unwrap_err();
    assert!(matches!(e, EngineError::Undersampled { .. }));
}

#[test]
fn family_root_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = golden();
    let mut base = FiberedJet::linear(g.clone(), half(&g), 0.1, 16, 2);
    base.rho1 = random_poly(&mut rng, 6, 1e-3, 1.0, 0.1);
    let family = ParamFamily { base: base.clone(), coupling: Coupling::LinearRho1 };
    let z = find_parameter_zero(|t| Ok(family.at(t).rho1.mean()), c(0.0, 0.0), 0.01, 64, Execution::Parallel).unwrap();
    let root = -base.rho1.mean();
    assert!((z.zero() - root).norm() < 1e-10);
}

#[test]
fn adaptive_run_meets_targets() {
    let (_, cfg, r) = cosine_run();
    assert!(r.residual <= cfg.target_residual);
    assert!(r.rotation_error <= 1e-8);
    assert!(r.indifference_defect <= 1e-8);
    assert!(c(r.t_bar[0], r.t_bar[1]).norm() <= 10.0 * cfg.epsilon);
    assert!(r.curve.curve.sup_on_line(4096, 0.0) <= 10.0 * cfg.epsilon);
}

#[test]
fn adaptive_stages_shrink_rho0() {
    let (_, _, r) = cosine_run();
    for s in &r.stages {
        assert!(s.rho0_end <= s.rho0_start / 10.0, "stage {}: {} -> {}", s.n, s.rho0_start, s.rho0_end);
    }
    for w in r.stages.windows(2) {
        assert!(w[1].rho0_end <= w[0].rho0_end / 10.0);
    }
}

#[test]
fn lambda_drift_matches_rotation_number() {
    let (family, _, r) = cosine_run();
    let drift = c(r.lambda_drift[0], r.lambda_drift[1]);
    assert!(drift.re.abs() < 1e-8);
    let beta = family.base.beta.frac().to_f64();
    let predicted = (beta + drift.im / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);
    let d = (predicted - r.rotation_number).rem_euclid(1.0);
    assert!(d.min(1.0 - d) < 1e-8);
}

#[test]
fn replay_is_deterministic() {
    let (family, cfg, r) = cosine_run();
    let rot = rotation(family, cfg);
    let t = c(r.t_bar[0], r.t_bar[1]);
    let (a, ha) = replay(family, &r.log, t, &rot, true).unwrap();
    let (b, hb) = replay(family, &r.log, t, &rot, true).unwrap();
    assert_eq!(a.rho0, b.rho0);
    assert_eq!(a.rho1, b.rho1);
    assert_eq!(ha.u0, hb.u0);
    assert_eq!(a.rho0, r.final_jet.rho0);
    assert_eq!(ha.u0, r.curve.curve);
}

#[test]
fn sequential_and_parallel_agree() {
    let (family, cfg) = cosine_case(1e-5);
    let seq = run(&family, &EngineConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
    let par = run(&family, &EngineConfig { execution: Execution::Parallel, ..cfg }).unwrap();
    assert_eq!(seq.t_bar, par.t_bar);
    assert_eq!(seq.residual, par.residual);
    assert_eq!(seq.curve.curve, par.curve.curve);
}

#[test]
fn replay_to_past_end() {
    let (family, cfg, r) = cosine_run();
    let rot = rotation(family, cfg);
    let n = r.log.len();
    assert!(replay_to(family, &r.log, n, c(0.0, 0.0), &rot).is_ok());
    let e = replay_to(family, &r.log, n + 1, c(0.0, 0.0), &rot).unwrap_err();
    assert!(matches!(e, EngineError::LogEnd { requested, available } if requested == n + 1 && available == n));
}

#[test]
fn replay_telescopes_to_one_conjugacy() {
    let (family, cfg, r) = cosine_run();
    let rot = rotation(family, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let radius = r.preparation.r_eps;
    for _ in 0..5 {
        let t = Complex64::from_polar(rng.gen_range(0.0..radius), rng.gen_range(0.0..std::f64::consts::TAU));
        let (jet, h) = replay(family, &r.log, t, &rot, true).unwrap();
        let f = family.at(t);
        assert!(conjugation_mismatch(&mut rng, &f, &jet, &h, 50) < 1e-9);
    }
}

#[test]
fn linear_model_needs_no_translation() {
    let g = golden();
    let mut base = FiberedJet::linear(g.clone(), half(&g), 0.1, 32, 2);
    let c0 = c(2e-5, -1e-5);
    base.rho1 = StripFunction::mode(1, c(3e-5, 0.0), 0.1).add_const(c0);
    let family = ParamFamily { base, coupling: Coupling::LinearRho1 };
    let cfg = EngineConfig { epsilon: 1e-4, fourier_cap: 32, ..Default::default() };
    let r = run(&family, &cfg).unwrap();
    assert!((c(r.t_bar[0], r.t_bar[1]) + c0).norm() < 1e-10);
    assert_eq!(r.curve.curve.sup_on_line(256, 0.0), 0.0);
    assert!(r.stages.iter().all(|s| s.steps == 0));
}

#[test]
fn checkpoint_resume_matches_full_run() {
    let (family, cfg) = cosine_case(1e-4);
    let mut first = None;
    let full = run_with_checkpoints(&family, &cfg, |cp| {
        if first.is_none() {
            first = Some(cp.clone());
        }
    })
    .unwrap();
    let cp = first.unwrap();
    assert!(full.stages.len() > cp.state.traces.len());
    let json = serde_json::to_string(&cp).unwrap();
    let cp: Checkpoint = serde_json::from_str(&json).unwrap();
    let resumed = resume(&family, &cp, |_| {}).unwrap();
    assert_eq!(resumed.t_bar, full.t_bar);
    assert_eq!(resumed.residual, full.residual);
    assert_eq!(resumed.curve.curve, full.curve.curve);
}

#[test]
fn paper_toy_prepares_at_n_star() {
    let (family, cfg) = paper_toy(1);
    let prep = prepare(&family, &cfg).unwrap();
    assert!(prep.hypotheses.all_pass);
    assert_eq!(Some(prep.preparation.n_bar), prep.preparation.n_star);
    assert!(cfg.epsilon <= prep.preparation.epsilon_bar.unwrap());
}

#[test]
fn refuses_rational_pair() {
    let g = golden();
    let family = ParamFamily::cosine_example(g.clone(), g, 1e-4, 0.1, 64);
    let cfg = EngineConfig { epsilon: 1e-4, fourier_cap: 64, ..Default::default() };
    let e = run(&family, &cfg).unwrap_err();
    assert!(matches!(e, EngineError::Arith(ArithError::RationalPair { k: 1, .. })));
    assert_eq!(e.module(), "arithmetic");
}

#[test]
fn refuses_epsilon_above_bar() {
    let (family, cfg) = cosine_case(1e-4);
    let cfg = EngineConfig { mode: Mode::Paper, ..cfg };
    let e = prepare(&family, &cfg).err().unwrap();
    assert!(matches!(e, EngineError::HypothesisFailed(_) | EngineError::EpsilonAboveBar { .. }));
    let (family, cfg) = paper_toy(1);
    let e = prepare(&family, &EngineConfig { epsilon: cfg.epsilon * 1.1, ..cfg }).err().unwrap();
    assert!(matches!(e, EngineError::EpsilonAboveBar { .. }));
}

#[test]
fn refuses_negative_discriminant() {
    let (family, cfg) = cosine_case(1e-4);
    let e = prepare(&family, &EngineConfig { t_const: 1e4, ..cfg }).err().unwrap();
    assert!(matches!(e, EngineError::NegativeDiscriminant { discriminant } if discriminant < 0.0));
}

#[test]
fn refuses_weak_or_strong_transversality() {
    let (mut family, cfg) = cosine_case(1e-4);
    for slope in [3.0, 0.2] {
        family.coupling = Coupling::Polynomial {
            rho0: vec![],
            rho1: vec![StripFunction::constant(c(slope, 0.0), 0.1)],
            rho_taylor: vec![],
        };
        let e = prepare(&family, &cfg).err().unwrap();
        assert!(matches!(e, EngineError::Transversality { .. }));
    }
}

#[test]
fn step_cap_and_budget_errors_carry_traces() {
    let (family, cfg) = cosine_case(1e-4);
    let e = run(&family, &EngineConfig { step_cap: 0, ..cfg.clone() }).unwrap_err();
    assert!(matches!(e.root(), EngineError::StopRuleNotReached { .. }));
    let e = run(&family, &EngineConfig { max_stages: 1, target_residual: 1e-20, ..cfg }).unwrap_err();
    assert!(matches!(e.root(), EngineError::BudgetExhausted { .. }));
    match e {
        EngineError::WithTrace { traces, .. } => assert_eq!(traces.len(), 1),
        other => panic!("expected a trace, got {other}"),
    }
}

#[test]
fn config_rejects_unknown_fields() {
    let ok: EngineConfig = serde_json::from_str(r#"{"epsilon": 1e-5, "L": 3.0}"#).unwrap();
    assert_eq!(ok.l_const, 3.0);
    assert!(serde_json::from_str::<EngineConfig>(r#"{"epsilon": 1e-5, "eps": 1.0}"#).is_err());
}
