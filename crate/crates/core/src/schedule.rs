//! Convergence-control sequences `l_n`, `w_n`, strip losses `d_n^0`, `d_n^1`
//! and the stage bookkeeping `n*`, `δ^n`. Everything lives in log space.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{worst_divisor, worst_divisor_pair, ArithError, ContinuedFraction, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("aleph must exceed 2, got {0}")]
    BadAleph(f64),
    #[error("width-loss root solver failed for log_ratio {log_ratio} at n = {n}")]
    RootSolver { log_ratio: f64, n: usize },
    #[error("n_max too small: tail sum {tail:e} exceeds delta/4 = {quarter:e}")]
    NMaxTooSmall { tail: f64, quarter: f64 },
    #[error("stage {0} is outside the tabulated schedule")]
    OutOfRange(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KamSchedule {
    pub aleph: f64,
    pub n_max: usize,
    /// log Γ_{α,β}(2^n), n = 0..=n_max+1
    pub log_a: Vec<f64>,
    /// log Γ_α(2^n), n = 0..=n_max+1
    pub log_b: Vec<f64>,
    pub log_l: Vec<f64>,
    pub log_w: Vec<f64>,
    /// n = 0..=n_max
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub n_star: Option<usize>,
    pub delta: Option<f64>,
    /// δ^n for n = n*..=n_max+1
    pub delta_n: Vec<f64>,
}

pub fn log_l_formula(n: usize, log_aleph: f64, log_a: f64, log_b: f64) -> f64 {
    let nf = n as f64;
    -nf * nf - (16f64.ln() + log_aleph) - log_a - log_b - nf * LN_2
}

pub fn log_w_formula(n: usize, log_l: f64, log_aleph: f64, log_a: f64) -> f64 {
    log_l - log_aleph - n as f64 * 4f64.ln() - log_a
}

/// Unique `d > 0` with `-2π 2^n d - log d = log_ratio`.
pub fn solve_width_loss(log_ratio: f64, n: usize) -> f64 {
    let k = 2.0 * PI * 2f64.powi(n as i32);
    let f = |d: f64| -k * d - d.ln() - log_ratio;
    let (mut lo, mut hi);
    if f(1.0) > 0.0 {
        lo = 1.0;
        hi = 2.0;
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while f(lo) <= 0.0 {
            if lo == 0.0 {
                return f64::NAN;
            }
            hi = lo;
            lo *= 0.5;
        }
        if f(hi) == 0.0 {
            return hi;
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn build_schedule(
    alpha_cf: &ContinuedFraction,
    beta: &Real,
    aleph: f64,
    n_max: usize,
) -> Result<KamSchedule, ScheduleError> {
    if !(aleph > 2.0) {
        return Err(ScheduleError::BadAleph(aleph));
    }
    let mut log_a = Vec::with_capacity(n_max + 2);
    let mut log_b = Vec::with_capacity(n_max + 2);
    for n in 0..=n_max + 1 {
        let big_n = 1u128 << n;
        log_b.push(worst_divisor(alpha_cf, big_n)?.ln()?);
        log_a.push(worst_divisor_pair(&alpha_cf.alpha, beta, big_n)?.value.ln()?);
    }
    build_from_logs(log_a, log_b, aleph, n_max)
}

/// Builds the schedule from precomputed `log A_n`, `log B_n` (length `n_max + 2`).
pub fn build_from_logs(
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    aleph: f64,
    n_max: usize,
) -> Result<KamSchedule, ScheduleError> {
    if !(aleph > 2.0) {
        return Err(ScheduleError::BadAleph(aleph));
    }
    assert!(log_a.len() >= n_max + 2 && log_b.len() >= n_max + 2);
    let log_aleph = aleph.ln();
    let log_l: Vec<f64> = (0..=n_max + 1).map(|n| log_l_formula(n, log_aleph, log_a[n], log_b[n])).collect();
    let log_w: Vec<f64> = (0..=n_max + 1).map(|n| log_w_formula(n, log_l[n], log_aleph, log_a[n])).collect();
    let mut d0 = Vec::with_capacity(n_max + 1);
    let mut d1 = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let r1 = log_l[n + 1] - log_aleph - log_l[n];
        let r0 = log_w[n + 1] - 4f64.ln() - log_aleph - log_w[n];
        let (x0, x1) = (solve_width_loss(r0, n), solve_width_loss(r1, n));
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(ScheduleError::RootSolver { log_ratio: r0, n });
        }
        if !(x1.is_finite() && x1 > 0.0) {
            return Err(ScheduleError::RootSolver { log_ratio: r1, n });
        }
        d0.push(x0);
        d1.push(x1);
    }
    Ok(KamSchedule {
        aleph,
        n_max,
        log_a: log_a[..n_max + 2].to_vec(),
        log_b: log_b[..n_max + 2].to_vec(),
        log_l,
        log_w,
        d0,
        d1,
        n_star: None,
        delta: None,
        delta_n: Vec::new(),
    })
}

impl KamSchedule {
    pub fn d_max(&self, n: usize) -> f64 {
        self.d0[n].max(self.d1[n])
    }

    /// Suffix sums Σ_{m ≥ n} max(d0_m, d1_m) over the tabulated range.
    pub fn suffix_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_max + 2];
        for n in (0..=self.n_max).rev() {
            out[n] = out[n + 1] + self.d_max(n);
        }
        out
    }

    pub fn delta_at(&self, n: usize) -> Result<f64, ScheduleError> {
        let ns = self.n_star.ok_or(ScheduleError::OutOfRange(n))?;
        if n < ns || n - ns >= self.delta_n.len() {
            return Err(ScheduleError::OutOfRange(n));
        }
        Ok(self.delta_n[n - ns])
    }

    pub fn log_l_at(&self, n: usize) -> Result<f64, ScheduleError> {
        self.log_l.get(n).copied().ok_or(ScheduleError::OutOfRange(n))
    }

    pub fn log_w_at(&self, n: usize) -> Result<f64, ScheduleError> {
        self.log_w.get(n).copied().ok_or(ScheduleError::OutOfRange(n))
    }

    /// log of the admissible perturbation size δ l_{n*} / 24.
    pub fn log_epsilon_bar(&self) -> Result<f64, ScheduleError> {
        let ns = self.n_star.ok_or(ScheduleError::OutOfRange(0))?;
        Ok(self.delta.unwrap().ln() + self.log_l[ns] - 24f64.ln())
    }
}

/// Smallest `n*` whose tail sum of strip losses is at most `δ/4`; fills `δ^n`.
pub fn choose_n_star(schedule: &mut KamSchedule, delta: f64) -> Result<usize, ScheduleError> {
    let sums = schedule.suffix_sums();
    let quarter = delta / 4.0;
    let n_star = (0..=schedule.n_max)
        .find(|&n| sums[n] <= quarter)
        .ok_or(ScheduleError::NMaxTooSmall { tail: sums[schedule.n_max], quarter })?;
    let mut widths = vec![0.75 * delta];
    for n in n_star..=schedule.n_max {
        let next = widths.last().unwrap() - schedule.d_max(n);
        widths.push(next);
    }
    schedule.n_star = Some(n_star);
    schedule.delta = Some(delta);
    schedule.delta_n = widths;
    Ok(n_star)
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    /// log of the evaluated left-hand side (sum or max over n).
    pub log_value: f64,
    pub log_bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<InequalityCheck>,
    pub sum_d0: f64,
    pub sum_d1: f64,
    pub one_plus_log_aleph: f64,
    pub l_monotone_from: Option<usize>,
    pub all_pass: bool,
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check(name: &str, log_value: f64, bound: f64) -> InequalityCheck {
    let log_bound = bound.ln();
    InequalityCheck {
        name: name.into(),
        log_value,
        log_bound,
        margin: log_bound - log_value,
        pass: log_value < log_bound,
    }
}

pub fn verify_lemma_properties(s: &KamSchedule) -> LemmaReport {
    let la = s.aleph.ln();
    let ns = 0..=s.n_max;
    let nl = |n: usize| n as f64 * LN_2;
    let t1 = log_sum_exp(ns.clone().map(|n| la + nl(n) + s.log_b[n] + s.log_l[n]));
    let t2 = ns.clone().map(|n| la + nl(n) + s.log_a[n] + s.log_l[n]).fold(f64::NEG_INFINITY, f64::max);
    let t3 = ns.clone().map(|n| la + s.log_w[n] + 2.0 * (nl(n) + s.log_a[n])).fold(f64::NEG_INFINITY, f64::max);
    let t4 = log_sum_exp(ns.clone().map(|n| la + s.log_w[n] + nl(n) + s.log_a[n]));
    let checks = vec![
        check("sum aleph 2^n B_n l_n < 1/8", t1, 1.0 / 8.0),
        check("aleph 2^n A_n l_n < 1/16", t2, 1.0 / 16.0),
        check("aleph w_n (2^n A_n)^2 < 1/32", t3, 1.0 / 32.0),
        check("sum aleph w_n 2^n A_n < 1/16", t4, 1.0 / 16.0),
    ];
    let l_monotone_from = (0..=s.n_max).find(|&m| (m..=s.n_max).all(|n| s.log_l[n + 1] < s.log_l[n]));
    let all_pass = checks.iter().all(|c| c.pass);
    LemmaReport {
        checks,
        sum_d0: s.d0.iter().sum(),
        sum_d1: s.d1.iter().sum(),
        one_plus_log_aleph: 1.0 + la,
        l_monotone_from,
        all_pass,
    }
}
