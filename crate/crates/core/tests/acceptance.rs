mod common;

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fkam_core::arithmetic::*;
use fkam_core::cohomology::*;
use fkam_core::engine::*;
use fkam_core::fibered::FiberedJet;
use fkam_core::par::Execution;
use fkam_core::schedule::*;
use fkam_core::strip::StripFunction;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = golden();
    let cf = ContinuedFraction::expand_safe(&a, 400).map_err(|e| e.to_string())?;
    let table = WorstDivisorTable::single(&a, 10_000).map_err(|e| e.to_string())?;
    for n in 1..=10_000u64 {
        let (v, q) = worst_divisor_arg(&cf, n as u128).map_err(|e| e.to_string())?;
        let bv = table.value(n).map_err(|e| e.to_string())?;
        let bq = table.argmax(n).map_err(|e| e.to_string())?;
        ensure(v == bv && q as i64 == bq, || {
            format!("N = {n}: shortcut ({:e}, {q}) vs brute ({:e}, {bq})", v.to_f64(), bv.to_f64())
        })?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("runtime {t:?}"))?;
    Ok(format!("N <= 10^4 exact, {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    for (name, a) in [("golden", golden()), ("sqrt2-1", sqrt2_minus_1())] {
        let cf = ContinuedFraction::expand_safe(&a, 400).map_err(|e| e.to_string())?;
        let mut n = 0u32;
        while (1u64 << (n + 1)) <= 10_000 {
            let r = check_dyadic_sandwich(&cf, n).map_err(|e| e.to_string())?;
            ensure(r.holds, || format!("{name} n = {n}: {} <= {} <= {}", r.lower, r.middle, r.upper))?;
            checked += 1;
            n += 1;
        }
    }
    Ok(format!("{checked} sandwiches hold"))
}

fn criterion_3() -> Outcome {
    let g = golden();
    let cf = ContinuedFraction::expand_safe(&g, 400).map_err(|e| e.to_string())?;
    let s = build_schedule(&cf, &half(&g), 1e6, 60).map_err(|e| e.to_string())?;
    let report = verify_lemma_properties(&s);
    for c in &report.checks {
        ensure(c.pass, || format!("{} fails: log value {} vs log bound {}", c.name, c.log_value, c.log_bound))?;
    }
    let la = s.aleph.ln();
    let mut worst: f64 = 0.0;
    for n in 0..=s.n_max {
        let k = TAU * (n as f64).exp2();
        let d0 = s.d0[n];
        let d1 = s.d1[n];
        let w_next = s.log_w[n] + la - k * d0 - d0.ln();
        let l_next = s.log_l[n] + la - k * d1 - d1.ln();
        let want_w = s.log_w[n + 1] - 4f64.ln();
        let e0 = (w_next - want_w).abs() / want_w.abs();
        let e1 = (l_next - s.log_l[n + 1]).abs() / s.log_l[n + 1].abs();
        worst = worst.max(e0).max(e1);
    }
    ensure(worst <= 1e-12, || format!("forward substitution error {worst:e}"))?;
    let margin = report.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    Ok(format!("4 inequalities (min log margin {margin:.2}), substitution error {worst:.1e}"))
}

fn exact_frac(x: &Real) -> f64 {
    x.frac().to_f64()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = golden();
    let b = half(&a);
    let rot = Rotation::new(&a, Some(&b), 64);
    let alpha = a.to_f64();
    let lam = Complex64::from_polar(1.0, TAU * b.to_f64());
    let mut worst_res: f64 = 0.0;
    let mut worst_mode: f64 = 0.0;
    for _ in 0..100 {
        let mut p = random_poly(&mut rng, 64, 1.0, 0.0, 0.0);
        let pt = p.clone();
        p.set(0, c(0.0, 0.0));
        let norm = p.norm_bound(0.0);
        let gu = solve_untwisted(&p, &rot).map_err(|e| e.to_string())?;
        let gt = solve_twisted(&pt, &rot).map_err(|e| e.to_string())?;
        for j in 0..2048 {
            let th = c(j as f64 / 2048.0, 0.0);
            let next = th + alpha;
            let ru = gu.eval(th) - gu.eval(next) - p.eval(th);
            let rt = lam * gt.eval(th) - gt.eval(next) - pt.eval(th);
            worst_res = worst_res.max(ru.norm() / norm).max(rt.norm() / pt.norm_bound(0.0));
        }
        for n in -64i64..=64 {
            let na = a.mul_i64(n);
            let phase = Complex64::from_polar(1.0, TAU * exact_frac(&na));
            let pair = Complex64::from_polar(1.0, TAU * exact_frac(&b.sub(&na))) - 1.0;
            if n != 0 {
                let du = c(1.0, 0.0) - phase;
                worst_mode = worst_mode.max((gu.coeff(n) * du - p.coeff(n)).norm() / p.coeff(n).norm());
            }
            let dt = phase * pair;
            worst_mode = worst_mode.max((gt.coeff(n) * dt - pt.coeff(n)).norm() / pt.coeff(n).norm());
        }
    }
    ensure(worst_res <= 1e-12, || format!("residual {worst_res:e} ||p||"))?;
    ensure(worst_mode <= 1e-14, || format!("modewise error {worst_mode:e}"))?;
    Ok(format!("residual {worst_res:.1e}·||p||, modewise {worst_mode:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = golden();
    let b = half(&a);
    let mut worst: f64 = 0.0;
    let mut worst_rot: f64 = 0.0;
    for _ in 0..25 {
        let jet = random_jet(&mut rng, &a, &b, 32, 6, 0.1);
        let rot = Rotation::new(&a, Some(&b), jet.fourier_cap);
        let (g, h) = random_conjugation(&mut rng, &jet, &rot, 32);
        worst = worst.max(conjugation_mismatch(&mut rng, &jet, &g, &h, 100));

        let mut on_curve = jet.clone();
        on_curve.rho0 = StripFunction::zeros(0, jet.strip);
        let zero = StripFunction::zeros(0, jet.strip);
        let v = random_poly(&mut rng, 32, 5e-2, 1.0, jet.strip);
        let moved = on_curve.conjugate_linear_exp(&v, c(0.0, 0.0), &rot).map_err(|e| e.to_string())?;
        let before = on_curve.fibered_rotation_number(&zero, 4096).map_err(|e| e.to_string())?;
        let after = moved.fibered_rotation_number(&zero, 4096).map_err(|e| e.to_string())?;
        let d = (after - before).rem_euclid(1.0);
        worst_rot = worst_rot.max(d.min(1.0 - d));
    }
    ensure(worst <= 1e-9, || format!("pointwise mismatch {worst:e}"))?;
    ensure(worst_rot <= 1e-9, || format!("rotation number moved by {worst_rot:e}"))?;
    Ok(format!("pointwise {worst:.1e}, rotation number {worst_rot:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut sups = Vec::new();
    let mut parts = Vec::new();
    for eps in [1e-4, 1e-5, 1e-6] {
        let start = Instant::now();
        let (family, cfg) = cosine_case(eps);
        let r = run(&family, &cfg).map_err(|e| format!("eps {eps:e}: {e}"))?;
        let t = start.elapsed();
        let t_bar = c(r.t_bar[0], r.t_bar[1]).norm();
        let sup = r.curve.curve.sup_on_line(4096, 0.0);
        ensure(t_bar <= 10.0 * eps, || format!("eps {eps:e}: |t_bar| = {t_bar:e}"))?;
        ensure(r.residual <= 1e-10, || format!("eps {eps:e}: residual {:e}", r.residual))?;
        ensure(r.rotation_error <= 1e-8, || format!("eps {eps:e}: rotation error {:e}", r.rotation_error))?;
        ensure(r.indifference_defect <= 1e-8, || format!("eps {eps:e}: defect {:e}", r.indifference_defect))?;
        ensure(t < Duration::from_secs(300), || format!("eps {eps:e}: runtime {t:?}"))?;
        ensure(sup <= 10.0 * eps, || format!("eps {eps:e}: sup|u| = {sup:e}"))?;
        if eps == 1e-4 {
            parts.push(format!("eps 1e-4: |t_bar| {t_bar:.1e}, residual {:.1e}, {t:.2?}", r.residual));
        }
        sups.push(sup);
    }
    ensure(sups.windows(2).all(|w| w[1] < w[0]), || format!("sup|u| not decreasing: {sups:?}"))?;
    parts.push(format!("sup|u| {:.2e} > {:.2e} > {:.2e}", sups[0], sups[1], sups[2]));
    Ok(parts.join("; "))
}

fn criterion_7() -> Outcome {
    let (family, cfg) = paper_toy(3);
    let r = run(&family, &cfg).map_err(|e| e.to_string())?;
    ensure(r.stages.len() == 3, || format!("{} stages ran", r.stages.len()))?;
    for s in &r.stages {
        let (w, l) = (s.bound_rho0.unwrap_or(0.0), s.bound_d_theta_rho1.unwrap_or(0.0));
        ensure(s.rho0_end <= w, || format!("stage {}: |rho0| {:e} > w {:e}", s.n, s.rho0_end, w))?;
        ensure(s.d_theta_rho1_end <= l, || format!("stage {}: |d rho1| {:e} > l {:e}", s.n, s.d_theta_rho1_end, l))?;
        for step in &s.step_log {
            ensure(step.radius >= 0.375, || format!("stage {} step {}: radius {}", s.n, step.i, step.radius))?;
        }
        let moved = (c(s.t_next[0], s.t_next[1]) - c(s.t[0], s.t[1])).norm();
        ensure(moved + s.p_next <= s.p, || format!("stage {}: disc not nested", s.n))?;
    }
    Ok(format!("stages n = {}..{} from n* = {:?}", r.stages[0].n, r.stages[2].n, r.preparation.n_star))
}

fn criterion_8() -> Outcome {
    let c0 = c(0.013, -0.007);
    let z =
        find_parameter_zero(|t| Ok(t - c0), c(0.0, 0.0), 0.05, 64, Execution::Parallel).map_err(|e| e.to_string())?;
    let rel = (z.zero() - c0).norm() / c0.norm();
    ensure(rel <= 1e-12, || format!("t - c recovered to {rel:e}"))?;
    let sq = find_parameter_zero(|t| Ok((t - c0) * (t - c0)), c(0.0, 0.0), 0.05, 64, Execution::Parallel);
    ensure(matches!(sq, Err(EngineError::WindingMany { winding: 2 })), || format!("(t - c)^2 gave {sq:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = golden();
    let mut base = FiberedJet::linear(g.clone(), half(&g), 0.1, 16, 2);
    base.rho1 = random_poly(&mut rng, 6, 1e-3, 1.0, 0.1);
    let root = -base.rho1.mean();
    let family = ParamFamily { base, coupling: Coupling::LinearRho1 };
    let z = find_parameter_zero(|t| Ok(family.at(t).rho1.mean()), c(0.0, 0.0), 0.01, 64, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let err = (z.zero() - root).norm();
    ensure(err <= 1e-10, || format!("family root off by {err:e}"))?;
    Ok(format!("t - c to {rel:.1e}, (t - c)^2 rejected, family root to {err:.1e}"))
}

fn criterion_9() -> Outcome {
    let g = golden();
    let family = ParamFamily::cosine_example(g.clone(), g.clone(), 1e-4, 0.1, 64);
    let cfg = EngineConfig { epsilon: 1e-4, fourier_cap: 64, ..Default::default() };
    let e = prepare(&family, &cfg).err();
    ensure(matches!(e, Some(EngineError::Arith(ArithError::RationalPair { .. }))), || {
        format!("beta = alpha gave {e:?}")
    })?;

    let (family, cfg) = paper_toy(1);
    let e = prepare(&family, &EngineConfig { epsilon: 2.0 * cfg.epsilon, ..cfg }).err();
    ensure(matches!(e, Some(EngineError::EpsilonAboveBar { .. })), || format!("eps > eps_bar gave {e:?}"))?;

    let (family, cfg) = cosine_case(1e-4);
    let e = prepare(&family, &EngineConfig { t_const: 1e4, ..cfg }).err();
    ensure(matches!(e, Some(EngineError::NegativeDiscriminant { .. })), || format!("large T gave {e:?}"))?;
    Ok("rational pair, eps above bar, negative discriminant".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("arithmetic oracle equivalence", criterion_1),
        ("dyadic sandwich", criterion_2),
        ("schedule integrity", criterion_3),
        ("cohomological residuals", criterion_4),
        ("conjugation oracle", criterion_5),
        ("end-to-end adaptive run", criterion_6),
        ("strict-mode smoke test", criterion_7),
        ("parameter zero finder", criterion_8),
        ("degenerate-input refusals", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
