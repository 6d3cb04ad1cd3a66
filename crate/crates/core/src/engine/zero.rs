use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::par::{map_indexed, Execution};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ZeroReport {
    pub zero: [f64; 2],
    pub winding: i64,
    pub residue_estimate: [f64; 2],
    pub newton_steps: usize,
    pub g_at_zero: f64,
    pub derivative: [f64; 2],
    pub min_abs_on_circle: f64,
    /// max |g − g'(t*)(t − t*)| / max |g| on the circle
    pub linear_defect: f64,
}

impl ZeroReport {
    pub fn zero(&self) -> Complex64 {
        Complex64::new(self.zero[0], self.zero[1])
    }
}

const NEWTON_MAX: usize = 30;

/// Locates the simple zero of `g` inside |t − center| < radius: winding
/// number from the sampled phase, a residue estimate, then Newton steps with
/// the derivative taken from the Cauchy–Taylor coefficients on the circle.
pub fn find_parameter_zero<G>(
    g: G,
    center: Complex64,
    radius: f64,
    samples: usize,
    exec: Execution,
) -> Result<ZeroReport, EngineError>
where
    G: Fn(Complex64) -> Result<Complex64, EngineError> + Sync,
{
    let s = samples.max(8);
    let nodes: Vec<Complex64> = (0..s).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / s as f64)).collect();
    let vals: Vec<Complex64> =
        map_indexed(exec, s, |j| g(center + nodes[j] * radius)).into_iter().collect::<Result<_, _>>()?;
    let min_abs = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min_abs == 0.0 || !min_abs.is_finite() {
        return Err(EngineError::Undersampled { jump: PI });
    }
    let mut total = 0.0;
    for j in 0..s {
        let jump = (vals[(j + 1) % s] / vals[j]).arg();
        if jump.abs() > 0.75 * PI {
            return Err(EngineError::Undersampled { jump });
        }
        total += jump;
    }
    let winding = (total / (2.0 * PI)).round() as i64;
    if winding == 0 {
        return Err(EngineError::WindingZero { center, radius });
    }
    if winding != 1 {
        return Err(EngineError::WindingMany { winding });
    }
    let kmax = s / 2;
    let b: Vec<Complex64> = (0..=kmax)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..s {
                acc += vals[j] * nodes[(j * k) % s].conj();
            }
            acc / s as f64
        })
        .collect();
    let deriv = |t: Complex64| {
        let x = (t - center) / radius;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=kmax).rev() {
            acc = acc * x + b[k] * k as f64;
        }
        acc / radius
    };
    let mut residue = Complex64::new(0.0, 0.0);
    for j in 0..s {
        let mut rg = Complex64::new(0.0, 0.0);
        for k in (1..=kmax).rev() {
            rg = rg * nodes[j] + b[k] * k as f64;
        }
        rg *= nodes[j];
        residue += (center + nodes[j] * radius) * rg / vals[j];
    }
    residue /= s as f64;

    let mut t = residue;
    let mut steps = 0;
    let mut gt = g(t)?;
    while steps < NEWTON_MAX {
        let d = deriv(t);
        if d.norm() == 0.0 {
            break;
        }
        let step = gt / d;
        t -= step;
        steps += 1;
        gt = g(t)?;
        if step.norm() <= 1e-12 * radius {
            break;
        }
    }
    let d = deriv(t);
    let gmax = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let linear_defect =
        (0..s).map(|j| (vals[j] - d * (center + nodes[j] * radius - t)).norm()).fold(0.0, f64::max) / gmax;
    Ok(ZeroReport {
        zero: [t.re, t.im],
        winding,
        residue_estimate: [residue.re, residue.im],
        newton_steps: steps,
        g_at_zero: gt.norm(),
        derivative: [d.re, d.im],
        min_abs_on_circle: min_abs,
        linear_defect,
    })
}
