use std::path::PathBuf;

use fkam_core::arithmetic::{ContinuedFraction, Real, DEFAULT_BITS};
use fkam_core::engine::{EngineConfig, Mode, ParamFamily};
use fkam_core::fibered::FiberedJet;
use fkam_core::schedule::{build_schedule, choose_n_star};
use fkam_core::strip::StripFunction;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A real number in (0,1) given exactly enough to reach the working precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NumberSource {
    /// (√5 − 1)/2
    Golden,
    Decimal(String),
    /// [0; prefix, period, period, ...]
    Quotients {
        #[serde(default)]
        prefix: Vec<u64>,
        period: Vec<u64>,
    },
    /// (num/den)·α; only meaningful for β.
    AlphaMultiple {
        num: i64,
        den: i64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArithmeticSource {
    pub alpha: NumberSource,
    pub beta: NumberSource,
    pub precision_bits: u32,
}

impl Default for ArithmeticSource {
    fn default() -> Self {
        ArithmeticSource {
            alpha: NumberSource::Golden,
            beta: NumberSource::AlphaMultiple { num: 1, den: 2 },
            precision_bits: DEFAULT_BITS,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// ρ₀ = ε cos 2πθ, ρ₁,t = t + ε e^{2πiθ}, ρ = z².
    Cosine {
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default = "default_strip")]
        strip: f64,
    },
    /// ρ₀ = a·e^{2πiθ}, ρ₁,t = t, no higher Taylor terms. Without an
    /// amplitude, paper mode uses w_{n*}/10 and adaptive mode ε/2.
    OneMode {
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default = "default_strip")]
        strip: f64,
    },
    /// A [`ParamFamily`] JSON file; α and β are taken from the arithmetic section.
    File {
        path: PathBuf,
    },
    Inline {
        family: Box<ParamFamily>,
    },
}

fn default_strip() -> f64 {
    0.1
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec::Cosine { epsilon: None, strip: default_strip() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArithSettings {
    /// Largest N for the worst-divisor table.
    pub n_max: u64,
    /// Cross-check the continued-fraction shortcut against brute force up to this N.
    pub brute_force_up_to: u64,
}

impl Default for ArithSettings {
    fn default() -> Self {
        ArithSettings { n_max: 10_000, brute_force_up_to: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohomologySettings {
    pub count: usize,
    pub order: usize,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for CohomologySettings {
    fn default() -> Self {
        CohomologySettings { count: 100, order: 64, samples: 2048, tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub threshold: f64,
    pub samples: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings { threshold: 1e-10, samples: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub checkpoints: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: PathBuf::from("fkam-out"), checkpoints: true }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub arithmetic: ArithmeticSource,
    pub family: FamilySpec,
    pub engine: EngineConfig,
    pub arith: ArithSettings,
    pub cohomology: CohomologySettings,
    pub verify: VerifySettings,
    pub output: OutputSettings,
    pub seed: u64,
}

/// Parses and validates a JSON config; errors carry the path of the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config { path: e.path().to_string(), message: e.inner().to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

fn bad(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.arithmetic.precision_bits < 64 {
            return Err(bad("arithmetic.precision_bits", "at least 64 bits are required"));
        }
        if matches!(self.arithmetic.alpha, NumberSource::AlphaMultiple { .. }) {
            return Err(bad("arithmetic.alpha", "alpha cannot be defined in terms of itself"));
        }
        if let NumberSource::AlphaMultiple { den: 0, .. } = self.arithmetic.beta {
            return Err(bad("arithmetic.beta.alpha_multiple.den", "zero denominator"));
        }
        if self.cohomology.samples == 0 || self.cohomology.order == 0 {
            return Err(bad("cohomology", "order and samples must be positive"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<Real, CliError> {
        resolve(&self.arithmetic.alpha, None, self.arithmetic.precision_bits, "arithmetic.alpha")
    }

    pub fn beta(&self) -> Result<Real, CliError> {
        let alpha = self.alpha()?;
        resolve(&self.arithmetic.beta, Some(&alpha), self.arithmetic.precision_bits, "arithmetic.beta")
    }

    /// The largest divisor index N any enabled computation will touch.
    pub fn divisor_reach(&self, command: &str) -> u128 {
        match command {
            "arith" => self.arith.n_max.max(self.arith.brute_force_up_to) as u128,
            "cohomology-test" => self.cohomology.order as u128,
            _ if self.engine.mode == Mode::Paper => 1u128 << (self.engine.n_max + 1).min(126),
            _ => (1u128 << self.engine.adaptive_start_stage.min(126)).max(self.engine.fourier_cap as u128),
        }
    }

    /// Warnings about results that may be limited by the working precision.
    ///
    /// ‖q_kα‖ comes from the recurrence β_{k+1} = β_{k−1} − a_{k+1}β_k, which
    /// amplifies the initial rounding 2^{-bits} by about q_k, while the smallest
    /// divisor below N is about 1/N. The relative error N²·2^{-bits} is compared
    /// with double-precision resolution.
    pub fn precision_warnings(&self, command: &str) -> Vec<String> {
        let bits = self.arithmetic.precision_bits as f64;
        let n = self.divisor_reach(command) as f64;
        let mut out = Vec::new();
        let log2_rel = 2.0 * n.log2() - bits;
        if log2_rel > -53.0 {
            out.push(format!(
                "precision floor reachable: divisors up to N = {n:e} carry relative error ~2^{log2_rel:.1} at {bits} bits"
            ));
        }
        if let Ok(alpha) = self.alpha() {
            if let Ok(cf) = ContinuedFraction::expand_safe(&alpha, 400) {
                if cf.q_last() < self.divisor_reach(command) && cf.depth() < 400 {
                    out.push(format!(
                        "precision floor reachable: continued fraction resolved only to q = {} at {bits} bits",
                        cf.q_last()
                    ));
                }
            }
        }
        out
    }

    pub fn family(&self) -> Result<(ParamFamily, Vec<String>), CliError> {
        let alpha = self.alpha()?;
        let beta = self.beta()?;
        let cap = self.engine.fourier_cap;
        let mut notes = Vec::new();
        let family = match &self.family {
            FamilySpec::Cosine { epsilon, strip } => {
                ParamFamily::cosine_example(alpha, beta, epsilon.unwrap_or(self.engine.epsilon), *strip, cap)
            }
            FamilySpec::OneMode { amplitude, strip } => {
                let a = match amplitude {
                    Some(a) => *a,
                    None if self.engine.mode == Mode::Paper => {
                        let cf = ContinuedFraction::expand_safe(&alpha, 400)?;
                        let mut s = build_schedule(&cf, &beta, self.engine.aleph, self.engine.n_max)?;
                        let ns = choose_n_star(&mut s, self.engine.delta)?;
                        s.log_w[ns].exp() / 10.0
                    }
                    None => self.engine.epsilon / 2.0,
                };
                let mut base = FiberedJet::linear(alpha, beta, *strip, cap, 1);
                base.rho0 = StripFunction::mode(1, Complex64::new(a, 0.0), *strip);
                ParamFamily { base, coupling: fkam_core::engine::Coupling::LinearRho1 }
            }
            FamilySpec::File { path } => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
                let fam: ParamFamily = parse_json(&text, &path.display().to_string())?;
                adopt_arithmetic(fam, alpha, beta, &mut notes)
            }
            FamilySpec::Inline { family } => adopt_arithmetic((**family).clone(), alpha, beta, &mut notes),
        };
        Ok((family, notes))
    }
}

fn adopt_arithmetic(mut fam: ParamFamily, alpha: Real, beta: Real, notes: &mut Vec<String>) -> ParamFamily {
    let gap = |a: &Real, b: &Real| a.sub(b).abs().to_f64();
    if gap(&fam.base.alpha, &alpha) > 1e-15 || gap(&fam.base.beta, &beta) > 1e-15 {
        notes.push("family file alpha/beta differ from the arithmetic section; the arithmetic section is used".into());
    }
    fam.base.alpha = alpha;
    fam.base.beta = beta;
    fam
}

fn resolve(src: &NumberSource, alpha: Option<&Real>, bits: u32, path: &str) -> Result<Real, CliError> {
    let x = match src {
        NumberSource::Golden => Real::from_quotients(&[], &[1], bits)?,
        NumberSource::Decimal(s) => Real::from_decimal(s, bits)?,
        NumberSource::Quotients { prefix, period } => Real::from_quotients(prefix, period, bits)?,
        NumberSource::AlphaMultiple { num, den } => {
            let a = alpha.ok_or_else(|| bad(path, "alpha_multiple needs alpha"))?;
            a.mul_i64(*num).div_int(&(*den).into()).frac()
        }
    };
    let zero = Real::zero(bits);
    let one = Real::from_int(1, bits);
    if !(x > zero && x < one) {
        return Err(bad(path, "value must lie strictly between 0 and 1"));
    }
    Ok(x)
}

/// JSON with the path of the first offending key in the error.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Input {
        what: what.to_string(),
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
