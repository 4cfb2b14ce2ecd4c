//! Target populations, seeded sampling, calibrated censoring and biased
//! thinning for the Monte Carlo harness.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetDist {
    Normal { mu: f64, sigma: f64 },
    /// Parameterized by its mean.
    Exponential { mean: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl TargetDist {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
        }
        Ok(TargetDist::Normal { mu, sigma })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        positive("mean", mean)?;
        Ok(TargetDist::Exponential { mean })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(TargetDist::Weibull { shape, scale })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            TargetDist::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            TargetDist::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / mean).exp() / mean
                }
            }
            TargetDist::Weibull { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                        _ => 0.0,
                    }
                } else {
                    let z = x / scale;
                    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            TargetDist::Normal { mu, sigma } => 0.5 * erfc(-(x - mu) / (sigma * SQRT_2)),
            TargetDist::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            TargetDist::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
        }
    }

    /// Inverse CDF for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            TargetDist::Normal { mu, sigma } => mu - sigma * SQRT_2 * erfc_inv(2.0 * u),
            TargetDist::Exponential { mean } => -mean * (-u).ln_1p(),
            TargetDist::Weibull { shape, scale } => scale * (-(-u).ln_1p()).powf(1.0 / shape),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TargetDist::Normal { mu, .. } => mu,
            TargetDist::Exponential { mean } => mean,
            TargetDist::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            TargetDist::Normal { sigma, .. } => sigma,
            TargetDist::Exponential { mean } => mean,
            TargetDist::Weibull { shape, scale } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                let g2 = gamma(1.0 + 2.0 / shape);
                scale * (g2 - g1 * g1).sqrt()
            }
        }
    }

    /// The distribution of `factor · X`.
    pub fn rescaled(&self, factor: f64) -> TargetDist {
        match *self {
            TargetDist::Normal { mu, sigma } => TargetDist::Normal { mu: mu * factor, sigma: sigma * factor },
            TargetDist::Exponential { mean } => TargetDist::Exponential { mean: mean * factor },
            TargetDist::Weibull { shape, scale } => TargetDist::Weibull { shape, scale: scale * factor },
        }
    }

    /// Draws `n` values by inverse-CDF transformation of open-interval uniforms.
    pub fn sample(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.uniform())).collect()
    }
}

impl fmt::Display for TargetDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetDist::Normal { mu, sigma } => write!(f, "normal:{mu},{sigma}"),
            TargetDist::Exponential { mean } => write!(f, "exp:{mean}"),
            TargetDist::Weibull { shape, scale } => write!(f, "weibull:{shape},{scale}"),
        }
    }
}

/// Parses `normal:MU,SIGMA`, `exp:MEAN` or `weibull:SHAPE,SCALE`.
impl FromStr for TargetDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(msg);
        let (family, params) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad(format!("distribution '{s}' must look like family:params")))?;
        let values = params
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("bad number '{p}' in '{s}'"))))
            .collect::<Result<Vec<f64>>>()?;
        match (family.trim().to_ascii_lowercase().as_str(), values.as_slice()) {
            ("normal", [mu, sigma]) => TargetDist::normal(*mu, *sigma),
            ("exp" | "exponential", [mean]) => TargetDist::exponential(*mean),
            ("weibull", [shape, scale]) => TargetDist::weibull(*shape, *scale),
            (fam, _) => Err(bad(format!("unknown distribution or wrong arity: '{fam}'"))),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Seeded generator: ChaCha8 keyed by `seed_from_u64(seed)`.
///
/// Independent streams for replicates come from [`RngState::stream`], which
/// mixes the master seed with the stream index through SplitMix64.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(master: u64, index: u64) -> Self {
        Self::new(mix_seed(master, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on the open interval `(0, 1)` with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master) ^ index)`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Censoring with `C = θ · C0`, where `θ` is tuned so that `P(C < T)` hits
/// a target rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoringModel {
    pub target: TargetDist,
    pub censor: TargetDist,
    pub rate: f64,
}

/// `P(C < T) = ∫ F_C(t) f_T(t) dt`, integrated between the `1e-15` and
/// `1 - 1e-15` quantiles of the target.
pub fn censoring_probability(target: &TargetDist, censor: &TargetDist) -> f64 {
    let (a, b) = (target.quantile(1e-15), target.quantile(1.0 - 1e-15));
    adaptive_simpson(&|t| censor.cdf(t) * target.pdf(t), a, b, 1e-13)
}

impl CensoringModel {
    /// Finds the scale factor of `template` by bisection on `log θ`.
    pub fn calibrate(target: TargetDist, template: TargetDist, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidParameter(format!("censoring rate {rate} outside (0, 1)")));
        }
        let prob = |log_theta: f64| censoring_probability(&target, &template.rescaled(log_theta.exp()));
        // probability decreases as the censoring scale grows
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut tries = 0;
        while prob(lo) < rate {
            lo -= 1.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::CalibrationFailed(rate));
            }
        }
        tries = 0;
        while prob(hi) > rate {
            hi += 1.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::CalibrationFailed(rate));
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if prob(mid) > rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let censor = template.rescaled((0.5 * (lo + hi)).exp());
        Ok(CensoringModel { target, censor, rate })
    }

    /// `x_i = min(t_i, c_i)`, `delta_i = t_i <= c_i`.
    pub fn apply(&self, t: &[f64], rng: &mut RngState) -> (Vec<f64>, Vec<bool>) {
        t.iter()
            .map(|&ti| {
                let ci = self.censor.quantile(rng.uniform());
                if ti <= ci {
                    (ti, true)
                } else {
                    (ci, false)
                }
            })
            .unzip()
    }
}

pub fn apply_censoring(
    t: &[f64],
    target: TargetDist,
    target_rate: f64,
    template: TargetDist,
    rng: &mut RngState,
) -> Result<(Vec<f64>, Vec<bool>)> {
    Ok(CensoringModel::calibrate(target, template, target_rate)?.apply(t, rng))
}

/// Selection probability `b(x)` for biased sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Biasing {
    Constant(f64),
    /// `clamp(x / ceiling, 0, 1)`.
    Linear { ceiling: f64 },
    /// Five-level step function centred on `mu` with breaks at ±0.4σ, ±1.2σ.
    Step { mu: f64, sigma: f64 },
}

impl Biasing {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Biasing::Constant(c) => c,
            Biasing::Linear { ceiling } => (x / ceiling).clamp(0.0, 1.0),
            Biasing::Step { mu, sigma } => {
                if x <= mu - 1.2 * sigma {
                    0.2
                } else if x <= mu - 0.4 * sigma {
                    0.4
                } else if x <= mu + 0.4 * sigma {
                    0.6
                } else if x <= mu + 1.2 * sigma {
                    0.8
                } else {
                    1.0
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Biasing::Constant(_) => "b0",
            Biasing::Linear { .. } => "b1",
            Biasing::Step { .. } => "b2",
        }
    }
}

/// Parses `const:c`, `linear:ceiling` or `step:mu,sigma`. The shorthands
/// `b1` and `b2` need the population and are resolved with `dist`.
pub fn parse_biasing(spec: &str, dist: Option<&TargetDist>) -> Result<Biasing> {
    let bad = |msg: String| Error::InvalidParameter(msg);
    let spec = spec.trim();
    match (spec, dist) {
        ("b1", Some(d)) => return Ok(biasing_b1(d)),
        ("b2", Some(d)) => return Ok(biasing_b2(d)),
        ("b1" | "b2", None) => return Err(bad(format!("biasing '{spec}' needs a population (--dist)"))),
        _ => {}
    }
    let (kind, params) = spec
        .split_once(':')
        .ok_or_else(|| bad(format!("biasing '{spec}' must look like kind:params")))?;
    let values = params
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("bad number '{p}' in '{spec}'"))))
        .collect::<Result<Vec<f64>>>()?;
    match (kind.trim(), values.as_slice()) {
        ("const", [c]) if *c > 0.0 && *c <= 1.0 => Ok(Biasing::Constant(*c)),
        ("linear", [c]) if *c > 0.0 && c.is_finite() => Ok(Biasing::Linear { ceiling: *c }),
        ("step", [mu, sigma]) if mu.is_finite() && *sigma > 0.0 && sigma.is_finite() => {
            Ok(Biasing::Step { mu: *mu, sigma: *sigma })
        }
        _ => Err(bad(format!("invalid biasing '{spec}'"))),
    }
}

/// `b1(x) ∝ x`, realized as `clamp(x / (μ + 4σ), 0, 1)`.
pub fn biasing_b1(dist: &TargetDist) -> Biasing {
    Biasing::Linear { ceiling: dist.mean() + 4.0 * dist.sd() }
}

pub fn biasing_b2(dist: &TargetDist) -> Biasing {
    Biasing::Step { mu: dist.mean(), sigma: dist.sd() }
}

/// Keeps each `x_i` independently with probability `b(x_i)`.
pub fn biased_thin(x: &[f64], b: impl Fn(f64) -> f64, rng: &mut RngState) -> Result<Vec<f64>> {
    let mut kept = Vec::with_capacity(x.len());
    for &xi in x {
        let p = b(xi);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BiasOutOfRange(p));
        }
        if rng.uniform() < p {
            kept.push(xi);
        }
    }
    Ok(kept)
}
