use std::fs;
use std::path::{Path, PathBuf};

use fkam_core::arithmetic::*;
use fkam_core::cohomology::*;
use fkam_core::engine::{resume, run_with_checkpoints, Checkpoint, EngineError, KamResult, StageTrace};
use fkam_core::fibered::{FiberedJet, InvariantCurve};
use fkam_core::schedule::{build_schedule, choose_n_star, verify_lemma_properties, KamSchedule, LemmaReport};
use fkam_core::strip::StripFunction;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_json, write_csv, write_json, Envelope};
use crate::config::{parse_json, ExperimentConfig};
use crate::error::CliError;

/// What a subcommand produced: whether its assertions held and a one-line summary.
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

#[derive(Serialize)]
pub struct DyadicRow {
    pub n: u32,
    pub big_n: u64,
    pub log_gamma_alpha: f64,
    pub attained_at: u128,
    pub log_gamma_pair: Option<f64>,
    pub pair_argmax: Option<i64>,
}

#[derive(Serialize)]
pub struct BruteForceCheck {
    pub up_to: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<u64>,
}

#[derive(Serialize)]
pub struct ArithReport {
    pub alpha: String,
    pub beta: String,
    pub precision_bits: u32,
    pub quotients: Vec<u64>,
    pub denominators: Vec<u128>,
    pub rational_pair: Option<i64>,
    pub dyadic: Vec<DyadicRow>,
    pub brjuno: BrjunoSums,
    pub sandwich: Vec<SandwichReport>,
    pub brute_force: BruteForceCheck,
}

fn digits(bits: u32) -> usize {
    ((bits as f64) * std::f64::consts::LOG10_2).ceil() as usize
}

pub fn arith(cfg: &ExperimentConfig, warnings: &[String]) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let beta = cfg.beta()?;
    let bits = cfg.arithmetic.precision_bits;
    let cf = ContinuedFraction::expand_safe(&alpha, 400)?;
    let n_max = cfg.arith.n_max.max(1);
    let rational_pair = is_rational_pair(&alpha, &beta, n_max, RESONANCE_FLOOR);
    let mut dyadic = Vec::new();
    let mut n = 0u32;
    while (1u64 << n) <= n_max {
        let big_n = 1u64 << n;
        let (g, q) = worst_divisor_arg(&cf, big_n as u128)?;
        let pair = match rational_pair {
            None => Some(worst_divisor_pair(&alpha, &beta, big_n as u128)?),
            Some(_) => None,
        };
        dyadic.push(DyadicRow {
            n,
            big_n,
            log_gamma_alpha: g.ln()?,
            attained_at: q,
            log_gamma_pair: pair.as_ref().map(|p| p.value.ln()).transpose()?,
            pair_argmax: pair.map(|p| p.argmax),
        });
        n += 1;
    }
    let top = n.saturating_sub(1);
    let brjuno = brjuno_partial(&cf, top)?;
    let mut sandwich = Vec::new();
    let mut k = 0u32;
    while (1u64 << (k + 1)) <= n_max {
        sandwich.push(check_dyadic_sandwich(&cf, k)?);
        k += 1;
    }
    let up_to = cfg.arith.brute_force_up_to.min(n_max);
    let mut mismatches = 0;
    let mut first_mismatch = None;
    if up_to > 0 {
        let table = WorstDivisorTable::single(&alpha, up_to)?;
        for n in 1..=up_to {
            let (v, q) = worst_divisor_arg(&cf, n as u128)?;
            if v != table.value(n)? || q as i64 != table.argmax(n)? {
                mismatches += 1;
                first_mismatch.get_or_insert(n);
            }
        }
    }
    let passed = mismatches == 0 && sandwich.iter().all(|s| s.holds);
    let report = ArithReport {
        alpha: alpha.to_decimal(digits(bits)),
        beta: beta.to_decimal(digits(bits)),
        precision_bits: bits,
        quotients: cf.quotients.clone(),
        denominators: cf.denominators.clone(),
        rational_pair,
        dyadic,
        brjuno,
        sandwich,
        brute_force: BruteForceCheck { up_to, mismatches, first_mismatch },
    };
    let dir = &cfg.output.dir;
    write_json(&dir.join("arith.json"), &Envelope::new("arith", cfg, warnings, passed, &report))?;
    Ok(Outcome {
        passed,
        summary: format!(
            "depth {} (q = {}), {} sandwiches, {mismatches} brute-force mismatches up to N = {up_to}",
            cf.depth(),
            cf.q_last(),
            report.sandwich.len()
        ),
    })
}

#[derive(Serialize)]
pub struct ScheduleRow {
    pub n: usize,
    pub log10_a: f64,
    pub log10_b: f64,
    pub log10_l: f64,
    pub log10_w: f64,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Serialize)]
pub struct ScheduleReport {
    pub schedule: KamSchedule,
    pub lemma: LemmaReport,
    pub n_star: usize,
    pub log10_epsilon_bar: f64,
}

pub fn schedule(cfg: &ExperimentConfig, warnings: &[String]) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let beta = cfg.beta()?;
    let e = &cfg.engine;
    let cf = ContinuedFraction::expand_safe(&alpha, 400)?;
    let mut s = build_schedule(&cf, &beta, e.aleph, e.n_max)?;
    let n_star = choose_n_star(&mut s, e.delta)?;
    let lemma = verify_lemma_properties(&s);
    let log10_epsilon_bar = s.log_epsilon_bar()? / std::f64::consts::LN_10;
    let l10 = |x: f64| x / std::f64::consts::LN_10;
    let rows: Vec<ScheduleRow> = (0..=s.n_max + 1)
        .map(|n| ScheduleRow {
            n,
            log10_a: l10(s.log_a[n]),
            log10_b: l10(s.log_b[n]),
            log10_l: l10(s.log_l[n]),
            log10_w: l10(s.log_w[n]),
            d0: s.d0.get(n).copied(),
            d1: s.d1.get(n).copied(),
            delta: s.delta_at(n).ok(),
        })
        .collect();
    let dir = &cfg.output.dir;
    write_csv(&dir.join("stages.csv"), &rows)?;
    let passed = lemma.all_pass;
    let summary = format!("n* = {n_star}, log10 eps_bar = {log10_epsilon_bar:.2}, inequalities pass: {passed}");
    let report = ScheduleReport { schedule: s, lemma, n_star, log10_epsilon_bar };
    write_json(&dir.join("schedule.json"), &Envelope::new("schedule", cfg, warnings, passed, &report))?;
    Ok(Outcome { passed, summary })
}

#[derive(Serialize)]
pub struct CohomologyReport {
    pub count: usize,
    pub order: usize,
    pub samples: usize,
    pub tolerance: f64,
    /// max over cases of residual / ‖p‖
    pub worst_untwisted: f64,
    pub worst_twisted: f64,
    pub max_solution_norm: f64,
}

fn random_poly(rng: &mut ChaCha8Rng, order: usize) -> StripFunction {
    let mut p = StripFunction::zeros(order, 0.0);
    for n in -(order as i64)..=order as i64 {
        p.set(n, Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    p
}

pub fn cohomology_test(cfg: &ExperimentConfig, warnings: &[String]) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let beta = cfg.beta()?;
    let c = &cfg.cohomology;
    let rot = Rotation::new(&alpha, Some(&beta), c.order);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut wu, mut wt, mut gmax): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..c.count {
        let p = random_poly(&mut rng, c.order);
        let mut p0 = p.clone();
        p0.set(0, Complex64::new(0.0, 0.0));
        let gu = solve_untwisted(&p0, &rot)?;
        let gt = solve_twisted(&p, &rot)?;
        wu = wu.max(untwisted_residual(&gu, &p0, &rot, c.samples) / p0.norm_bound(0.0));
        wt = wt.max(twisted_residual(&gt, &p, &rot, c.samples) / p.norm_bound(0.0));
        gmax = gmax.max(gu.norm_bound(0.0)).max(gt.norm_bound(0.0));
    }
    let passed = wu <= c.tolerance && wt <= c.tolerance;
    let report = CohomologyReport {
        count: c.count,
        order: c.order,
        samples: c.samples,
        tolerance: c.tolerance,
        worst_untwisted: wu,
        worst_twisted: wt,
        max_solution_norm: gmax,
    };
    write_json(
        &cfg.output.dir.join("cohomology.json"),
        &Envelope::new("cohomology-test", cfg, warnings, passed, &report),
    )?;
    Ok(Outcome { passed, summary: format!("{} cases, worst residual {wu:.2e} / {wt:.2e} of |p|", c.count) })
}

/// One row of stages.csv: a translation step or the closing linear step of a stage.
#[derive(Serialize)]
pub struct StepRow {
    pub n: usize,
    pub part: &'static str,
    pub i: usize,
    pub order: usize,
    pub log10_eta: Option<f64>,
    pub log10_u0: Option<f64>,
    pub log10_rho0: f64,
    pub log10_rho1: f64,
    pub log10_d_theta_rho1: f64,
    pub radius: f64,
    pub strip: f64,
    pub log10_residual: Option<f64>,
}

pub fn step_rows(traces: &[StageTrace]) -> Vec<StepRow> {
    let l = |x: f64| x.log10();
    let mut rows = Vec::new();
    for s in traces {
        for st in &s.step_log {
            rows.push(StepRow {
                n: s.n,
                part: "translation",
                i: st.i,
                order: s.order,
                log10_eta: Some(l(st.eta)),
                log10_u0: Some(l(st.u0)),
                log10_rho0: l(st.rho0),
                log10_rho1: l(st.rho1),
                log10_d_theta_rho1: l(st.d_theta_rho1),
                radius: st.radius,
                strip: s.strip,
                log10_residual: None,
            });
        }
        rows.push(StepRow {
            n: s.n,
            part: "linear",
            i: s.steps + 1,
            order: s.order,
            log10_eta: None,
            log10_u0: None,
            log10_rho0: l(s.rho0_end),
            log10_rho1: l(s.rho1_end),
            log10_d_theta_rho1: l(s.d_theta_rho1_end),
            radius: s.radius,
            strip: s.strip,
            log10_residual: s.residual.map(l),
        });
    }
    rows
}

#[derive(Serialize, Deserialize)]
pub struct CheckpointFile {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub checkpoint: Checkpoint,
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub sup_u: f64,
    pub final_rho0: f64,
    #[serde(flatten)]
    pub result: &'a KamResult,
}

fn checkpoint_path(dir: &Path, stage: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("stage-{stage:03}.json"))
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointFile, CliError> {
    read_json(path, "checkpoint")
}

/// Runs the engine, or resumes it from `from`; on engine failure the partial
/// stage table is still written.
pub fn run_kam(cfg: &ExperimentConfig, warnings: &[String], from: Option<Checkpoint>) -> Result<Outcome, CliError> {
    let (family, notes) = cfg.family()?;
    let mut warnings = warnings.to_vec();
    warnings.extend(notes);
    let dir = cfg.output.dir.clone();
    let mut write_err = None;
    let on_checkpoint = |cp: &Checkpoint| {
        if !cfg.output.checkpoints || write_err.is_some() {
            return;
        }
        let file = CheckpointFile {
            tool: "fkam".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            checkpoint: cp.clone(),
        };
        let stage = cp.state.stage.saturating_sub(1);
        if let Err(e) = write_json(&checkpoint_path(&dir, stage), &file) {
            write_err = Some(e);
        }
    };
    let result = match from {
        Some(cp) => resume(&family, &cp, on_checkpoint),
        None => run_with_checkpoints(&family, &cfg.engine, on_checkpoint),
    };
    if let Some(e) = write_err {
        return Err(e);
    }
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            if let EngineError::WithTrace { traces, .. } = &e {
                write_csv(&dir.join("stages.csv"), &step_rows(traces))?;
            }
            return Err(e.into());
        }
    };
    write_csv(&dir.join("stages.csv"), &step_rows(&result.stages))?;
    let t_bar = Complex64::new(result.t_bar[0], result.t_bar[1]);
    write_json(&dir.join("jet.json"), &family.at(t_bar))?;
    write_json(&dir.join("curve.json"), &result.curve)?;
    let report = RunReport {
        sup_u: result.curve.curve.sup_on_line(cfg.engine.quadrature, 0.0),
        final_rho0: result.final_rho0(),
        result: &result,
    };
    write_json(&dir.join("result.json"), &Envelope::new("run-kam", cfg, &warnings, true, &report))?;
    Ok(Outcome {
        passed: true,
        summary: format!(
            "{} stages, t_bar = ({:e}, {:e}), residual {:.2e}, rotation error {:.2e}",
            result.stages.len(),
            result.t_bar[0],
            result.t_bar[1],
            result.residual,
            result.rotation_error
        ),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CurveInput {
    Curve(InvariantCurve),
    Bare(StripFunction),
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub jet: PathBuf,
    pub curve: PathBuf,
    pub samples: usize,
    pub threshold: f64,
    pub residual: f64,
    pub rotation_number: Option<f64>,
    pub rotation_error: Option<f64>,
    pub indifference_defect: Option<f64>,
    pub notes: Vec<String>,
}

pub fn verify_curve(
    cfg: &ExperimentConfig,
    warnings: &[String],
    jet: &Path,
    curve: &Path,
) -> Result<Outcome, CliError> {
    let f: FiberedJet = read_json(jet, "jet")?;
    let text = fs::read_to_string(curve).map_err(|source| CliError::Read { path: curve.to_path_buf(), source })?;
    let u = match parse_json::<CurveInput>(&text, "curve")? {
        CurveInput::Curve(c) => c.curve,
        CurveInput::Bare(s) => s,
    };
    let samples = cfg.verify.samples;
    let order = u.order().max(f.max_order()).max(1);
    let rot = Rotation::new(&f.alpha, Some(&f.beta), order);
    let residual = f.invariance_residual(&u, &rot, samples);
    let mut notes = Vec::new();
    let rotation_number = f.fibered_rotation_number(&u, samples).map_err(|e| notes.push(e.to_string())).ok();
    let beta = f.beta.frac().to_f64();
    let rotation_error = rotation_number.map(|r| {
        let d = (r - beta).rem_euclid(1.0);
        d.min(1.0 - d)
    });
    let indifference_defect = f.indifference_defect(&u, samples).map_err(|e| notes.push(e.to_string())).ok();
    let passed = residual <= cfg.verify.threshold;
    let report = VerifyReport {
        jet: jet.to_path_buf(),
        curve: curve.to_path_buf(),
        samples,
        threshold: cfg.verify.threshold,
        residual,
        rotation_number,
        rotation_error,
        indifference_defect,
        notes,
    };
    write_json(&cfg.output.dir.join("verify.json"), &Envelope::new("verify-curve", cfg, warnings, passed, &report))?;
    Ok(Outcome { passed, summary: format!("residual {residual:.3e} (threshold {:.1e})", cfg.verify.threshold) })
}
