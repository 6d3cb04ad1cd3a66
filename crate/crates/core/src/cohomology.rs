//! Truncated cohomological equations `g - g(·+α) = p` and `λg - g(·+α) = p`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::arithmetic::Real;
use crate::strip::StripFunction;

pub const RESONANCE_FLOOR: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error("right-hand side has mean {mean:e} (norm {norm:e}); zero mean required")]
    NonzeroMean { mean: f64, norm: f64 },
    #[error("resonant mode n = {n}: small divisor {dist:e}")]
    Resonance { n: i64, dist: f64 },
    #[error("order {order} exceeds the rotation table ({table})")]
    OrderExceeded { order: usize, table: usize },
    #[error("twisted equation needs beta")]
    NoBeta,
}

/// Phases `e^{2πinα}` and small divisors for `|n| ≤ order`, all derived from
/// exact fractional parts of `nα` and `β - nα`.
#[derive(Clone, Debug, Serialize)]
pub struct Rotation {
    pub order: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub lambda: Option<Complex64>,
    /// frac(nα) for n = -order..=order
    frac_alpha: Vec<f64>,
    /// ‖nα‖ below the resonance floor?
    resonant_alpha: Vec<bool>,
    /// frac(β - nα)
    frac_beta: Vec<f64>,
    resonant_beta: Vec<bool>,
}

/// frac(x0 + n·step) for n = -order..=order.
fn frac_table(x0: &Real, step: &Real, order: usize) -> (Vec<f64>, Vec<bool>) {
    let mut frac = Vec::with_capacity(2 * order + 1);
    let mut res = Vec::with_capacity(2 * order + 1);
    let floor_ln = RESONANCE_FLOOR.ln().max(x0.floor_spec().ln()).max(step.floor_spec().ln());
    let start = x0.sub(&step.mul_int(&BigInt::from(order as i64)));
    let mut x = start;
    for _ in 0..=2 * order {
        let f = x.frac();
        frac.push(f.to_f64());
        let d = f.nearest_int_dist();
        res.push(d.is_zero() || d.abs_ln() < floor_ln);
        x = x.add(step);
    }
    (frac, res)
}

impl Rotation {
    pub fn new(alpha: &Real, beta: Option<&Real>, order: usize) -> Self {
        let zero = Real::zero(alpha.bits());
        let (frac_alpha, resonant_alpha) = frac_table(&zero, alpha, order);
        let (frac_beta, resonant_beta, lambda) = match beta {
            Some(b) => {
                let (f, r) = frac_table(b, &alpha.neg(), order);
                let fb = b.frac().to_f64();
                (f, r, Some(Complex64::from_polar(1.0, 2.0 * PI * fb)))
            }
            None => (Vec::new(), Vec::new(), None),
        };
        Rotation {
            order,
            alpha: alpha.to_f64(),
            beta: beta.map(|b| b.to_f64()),
            lambda,
            frac_alpha,
            resonant_alpha,
            frac_beta,
            resonant_beta,
        }
    }

    fn idx(&self, n: i64) -> usize {
        (n + self.order as i64) as usize
    }

    pub fn check(&self, order: usize) -> Result<(), CohomologyError> {
        if order > self.order {
            return Err(CohomologyError::OrderExceeded { order, table: self.order });
        }
        Ok(())
    }

    /// e^{2πinα}
    pub fn phase(&self, n: i64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.frac_alpha[self.idx(n)])
    }

    /// ‖nα‖ as a double.
    pub fn dist_alpha(&self, n: i64) -> f64 {
        let f = self.frac_alpha[self.idx(n)];
        f.min(1.0 - f)
    }

    /// ‖nα - β‖ as a double.
    pub fn dist_pair(&self, n: i64) -> f64 {
        let f = self.frac_beta[self.idx(n)];
        f.min(1.0 - f)
    }

    /// 1 - e^{2πinα}
    pub fn untwisted_den(&self, n: i64) -> Complex64 {
        let x = self.frac_alpha[self.idx(n)];
        Complex64::new(0.0, -2.0 * (PI * x).sin()) * Complex64::from_polar(1.0, PI * x)
    }

    /// λ - e^{2πinα}
    pub fn twisted_den(&self, n: i64) -> Complex64 {
        let y = self.frac_beta[self.idx(n)];
        self.phase(n) * Complex64::new(0.0, 2.0 * (PI * y).sin()) * Complex64::from_polar(1.0, PI * y)
    }

    /// f(θ+α), coefficientwise.
    pub fn shift(&self, f: &StripFunction) -> StripFunction {
        assert!(f.order() <= self.order, "rotation table too small: {} > {}", f.order(), self.order);
        f.map_modes(|n| self.phase(n))
    }
}

pub fn solve_untwisted(p: &StripFunction, rot: &Rotation) -> Result<StripFunction, CohomologyError> {
    rot.check(p.order())?;
    let norm = p.norm_bound(0.0);
    let mean = p.mean().norm();
    if mean > 1e-14 * norm {
        return Err(CohomologyError::NonzeroMean { mean, norm });
    }
    let mut g = StripFunction::zeros(p.order(), p.strip());
    for (n, c) in p.modes() {
        if n == 0 || c == Complex64::new(0.0, 0.0) {
            continue;
        }
        if rot.resonant_alpha[rot.idx(n)] {
            return Err(CohomologyError::Resonance { n, dist: rot.dist_alpha(n) });
        }
        g.set(n, c / rot.untwisted_den(n));
    }
    Ok(g)
}

pub fn solve_twisted(p: &StripFunction, rot: &Rotation) -> Result<StripFunction, CohomologyError> {
    rot.check(p.order())?;
    if rot.lambda.is_none() {
        return Err(CohomologyError::NoBeta);
    }
    let mut g = StripFunction::zeros(p.order(), p.strip());
    for (n, c) in p.modes() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        if rot.resonant_beta[rot.idx(n)] {
            return Err(CohomologyError::Resonance { n, dist: rot.dist_pair(n) });
        }
        g.set(n, c / rot.twisted_den(n));
    }
    Ok(g)
}

/// max over samples of |g(θ) - g(θ+α) - p(θ)|.
pub fn untwisted_residual(g: &StripFunction, p: &StripFunction, rot: &Rotation, samples: usize) -> f64 {
    let lhs = g.sub(&rot.shift(g)).sub(p);
    lhs.sup_on_line(samples, 0.0)
}

/// max over samples of |λg(θ) - g(θ+α) - p(θ)|.
pub fn twisted_residual(g: &StripFunction, p: &StripFunction, rot: &Rotation, samples: usize) -> f64 {
    let lam = rot.lambda.expect("beta");
    let lhs = g.scale(lam).sub(&rot.shift(g)).sub(p);
    lhs.sup_on_line(samples, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let g = Real::from_quotients(&[], &[1], 256).unwrap();
        let b = g.div_int(&BigInt::from(2));
        let rot = Rotation::new(&g, Some(&b), 8);
        let e1 = StripFunction::mode(1, Complex64::new(1.0, 0.0), 0.1);
        let u = solve_untwisted(&e1, &rot).unwrap();
        let a = rot.alpha;
        let want = 1.0 / (1.0 - Complex64::from_polar(1.0, 2.0 * PI * a));
        assert!((u.coeff(1) - want).norm() < 1e-13 * want.norm());
        let lam = rot.lambda.unwrap();
        let c = StripFunction::constant(Complex64::new(0.3, 0.1), 0.1);
        let t = solve_twisted(&c, &rot).unwrap();
        let want = Complex64::new(0.3, 0.1) / (lam - 1.0);
        assert!((t.coeff(0) - want).norm() < 1e-13 * want.norm());
        assert!(matches!(solve_untwisted(&c, &rot), Err(CohomologyError::NonzeroMean { .. })));
        let z = solve_untwisted(&StripFunction::zeros(4, 0.1), &rot).unwrap();
        assert_eq!(z.norm_bound(0.0), 0.0);
    }

    #[test]
    fn resonant_pair_is_refused() {
        let g = Real::from_quotients(&[], &[1], 256).unwrap();
        let rot = Rotation::new(&g, Some(&g), 4);
        let e1 = StripFunction::mode(1, Complex64::new(1.0, 0.0), 0.1);
        assert!(matches!(solve_twisted(&e1, &rot), Err(CohomologyError::Resonance { n: 1, .. })));
    }
}
