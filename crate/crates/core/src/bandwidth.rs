//! Bandwidth selectors.
//!
//! * [`h_normal_ref`]: `0.9 min(s_w, IQR_w/1.34) n^{-1/5}` from weighted moments.
//! * [`h_exp_ref`]: the same form with the exponential-reference scale `λ̂`.
//! * [`h_plugin`]: two-stage Sheather-Jones direct plug-in on the unweighted data.
//! * [`lscv_search`]: minimizes the weighted least-squares cross-validation
//!   objective with an expanding grid search seeded by a rough bandwidth.
//! * [`h_kp_local`]: the Kuhn-Padgett local bandwidth for censored data.
//!
//! `n` in every `n^{-1/5}` factor counts all observations, censored included.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, Kernel, GAUSSIAN_CUTOFF, INV_SQRT_2PI};
use crate::sample::WeightedSample;
use crate::weights::CensoringSurvival;

/// Leading constant of the Kuhn-Padgett exponential-reference bandwidth.
pub const KP_COEFFICIENT: f64 = 0.764_417_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    NormalRef,
    ExpRef,
    PlugIn,
    Lscv,
    KpLocal,
}

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::NormalRef => "h_n",
            Selector::ExpRef => "h_e",
            Selector::PlugIn => "h_p",
            Selector::Lscv => "h_lscv",
            Selector::KpLocal => "h_kp",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// CLI spellings: `nrd`, `exp`, `dpi`, `lscv`, `kp`.
impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nrd" => Ok(Selector::NormalRef),
            "exp" => Ok(Selector::ExpRef),
            "dpi" => Ok(Selector::PlugIn),
            "lscv" => Ok(Selector::Lscv),
            "kp" => Ok(Selector::KpLocal),
            other => Err(Error::InvalidParameter(format!("unknown bandwidth selector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthResult {
    pub h: f64,
    pub selector: Selector,
    pub trace: Option<LscvTrace>,
}

impl BandwidthResult {
    fn plain(h: f64, selector: Selector) -> Self {
        BandwidthResult { h, selector, trace: None }
    }
}

/// `min(a, b)`, falling back to whichever is positive.
fn guarded_min(a: f64, b: f64) -> Result<f64> {
    match (a > 0.0, b > 0.0) {
        (true, true) => Ok(a.min(b)),
        (true, false) => Ok(a),
        (false, true) => Ok(b),
        (false, false) => Err(Error::DegenerateScale),
    }
}

fn rough_rule(scale: f64, iqr: f64, n: usize) -> Result<f64> {
    let a = guarded_min(scale, iqr / 1.34)?;
    Ok(0.9 * a * (n as f64).powf(-0.2))
}

pub fn h_normal_ref(s: &WeightedSample) -> Result<BandwidthResult> {
    if s.len() < 2 {
        return Err(Error::DegenerateScale);
    }
    let h = rough_rule(s.weighted_sd(), s.weighted_iqr(), s.len())?;
    Ok(BandwidthResult::plain(h, Selector::NormalRef))
}

/// Exponential-reference scale: `Σx / ΣΔ` for censored samples, the plain
/// mean otherwise.
pub fn exp_scale(s: &WeightedSample) -> Result<f64> {
    let total: f64 = s.x().iter().sum();
    match s.delta() {
        Some(d) => {
            let events = d.iter().filter(|e| **e).count();
            if events == 0 {
                return Err(Error::NoEvents);
            }
            Ok(total / events as f64)
        }
        None => Ok(total / s.len() as f64),
    }
}

pub fn h_exp_ref(s: &WeightedSample) -> Result<BandwidthResult> {
    if s.len() < 2 {
        return Err(Error::DegenerateScale);
    }
    let lambda = exp_scale(s)?;
    let h = rough_rule(lambda, s.weighted_iqr(), s.len())?;
    Ok(BandwidthResult::plain(h, Selector::ExpRef))
}

/// `ψ_r(g) = n^{-2} g^{-r-1} Σ_i Σ_j φ^{(r)}((X_i - X_j)/g)` for r = 4 or 6.
fn kernel_functional(sorted: &[f64], g: f64, order: u32) -> f64 {
    let n = sorted.len();
    let deriv = |t: f64| -> f64 {
        let t2 = t * t;
        let phi = INV_SQRT_2PI * (-0.5 * t2).exp();
        match order {
            4 => (t2 * t2 - 6.0 * t2 + 3.0) * phi,
            6 => (t2 * t2 * t2 - 15.0 * t2 * t2 + 45.0 * t2 - 15.0) * phi,
            _ => unreachable!("only orders 4 and 6 are used"),
        }
    };
    let cutoff = GAUSSIAN_CUTOFF * g;
    let mut sum = n as f64 * deriv(0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = sorted[j] - sorted[i];
            if d > cutoff {
                break;
            }
            sum += 2.0 * deriv(d / g);
        }
    }
    sum / ((n * n) as f64 * g.powi(order as i32 + 1))
}

/// Two-stage direct plug-in bandwidth for the Gaussian kernel. Weights and
/// censoring are not used.
///
/// `ψ_8` comes from a normal reference with the sample standard deviation;
/// `ψ_6` and then `ψ_4` are kernel estimates at their asymptotically optimal
/// pilot bandwidths, and `h = [R(K) / (n k2² ψ_4)]^{1/5}`.
pub fn h_plugin(x: &[f64]) -> Result<BandwidthResult> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InvalidParameter(format!("plug-in needs at least 4 points, got {n}")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = sorted.iter().sum::<f64>() / nf;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateScale);
    }
    let psi8 = 105.0 / (32.0 * PI.sqrt() * sd.powi(9));
    // -2 φ^{(6)}(0) = 30/√(2π); -2 φ^{(4)}(0) = -6/√(2π)
    let g1 = (30.0 * INV_SQRT_2PI / (psi8 * nf)).powf(1.0 / 9.0);
    let psi6 = kernel_functional(&sorted, g1, 6);
    let g2 = (-6.0 * INV_SQRT_2PI / (psi6 * nf)).powf(1.0 / 7.0);
    let psi4 = kernel_functional(&sorted, g2, 4);
    let k = Kernel::Gaussian;
    let h = (k.roughness() / (nf * k.k2().powi(2) * psi4)).powf(0.2);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::DegenerateScale);
    }
    Ok(BandwidthResult::plain(h, Selector::PlugIn))
}

/// Form of the leave-one-out term in the cross-validation objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LscvVariant {
    /// Subtract `w_i K_h(0)` and divide by `Σ_{j≠i} w_j`.
    #[default]
    Corrected,
    /// Subtract `w_i / √(2π)` and divide by `1 - w_i`, as printed.
    Strict,
}

/// `Σ_i Σ_j w_i w_j K_{√2h}(X_i - X_j) - (2/n) Σ_i (f(X_i) - w_i K_h(0)) / Σ_{j≠i} w_j`
/// for the Gaussian kernel.
///
/// Rows whose leave-one-out denominator is zero contribute nothing.
pub fn lscv_objective(s: &WeightedSample, h: f64, variant: LscvVariant) -> Result<f64> {
    check_bandwidth(h)?;
    let x = s.x();
    let w = s.w();
    let n = x.len();
    let hc = SQRT_2 * h;
    let conv0 = INV_SQRT_2PI / hc;
    let k0 = INV_SQRT_2PI / h;
    let cut_c = GAUSSIAN_CUTOFF * hc;
    let cut_h = GAUSSIAN_CUTOFF * h;
    let inv_4h2 = 0.25 / (h * h);

    let mut double = 0.0;
    let mut fhat: Vec<f64> = w.iter().map(|wi| wi * k0).collect();
    for i in 0..n {
        double += w[i] * w[i] * conv0;
        for j in i + 1..n {
            let d = x[j] - x[i];
            if d > cut_c {
                break;
            }
            // exp(-d²/4h²) squared is exp(-d²/2h²)
            let e = (-d * d * inv_4h2).exp();
            double += 2.0 * w[i] * w[j] * conv0 * e;
            if d <= cut_h {
                let kh = k0 * e * e;
                fhat[i] += w[j] * kh;
                fhat[j] += w[i] * kh;
            }
        }
    }

    let total = s.total_weight();
    let mut loo = 0.0;
    for i in 0..n {
        let (num, den) = match variant {
            LscvVariant::Corrected => (fhat[i] - w[i] * k0, total - w[i]),
            LscvVariant::Strict => (fhat[i] - w[i] * INV_SQRT_2PI, 1.0 - w[i]),
        };
        if den > 0.0 {
            loo += num / den;
        }
    }
    Ok(double - 2.0 / n as f64 * loo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LscvConfig {
    /// Number of grid searches.
    pub rounds: usize,
    /// Points per grid, endpoints included.
    pub grid_n: usize,
    pub variant: LscvVariant,
}

impl Default for LscvConfig {
    fn default() -> Self {
        LscvConfig { rounds: 5, grid_n: 21, variant: LscvVariant::Corrected }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    LeftEdge,
    RightEdge,
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LscvRound {
    pub lower: f64,
    pub upper: f64,
    pub h: Vec<f64>,
    pub objective: Vec<f64>,
    pub argmin: usize,
    pub outcome: RoundOutcome,
}

impl LscvRound {
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.h.len() - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LscvTrace {
    pub rounds: Vec<LscvRound>,
    /// The last round's minimum sat on an edge of its interval.
    pub saturated: bool,
}

impl LscvTrace {
    pub fn final_spacing(&self) -> f64 {
        self.rounds.last().map_or(0.0, LscvRound::spacing)
    }
}

/// Expanding grid search for the cross-validation bandwidth.
///
/// The first grid spans `[0.25 h0, 1.5 h0]`. After each grid, with
/// `δ = (upper - lower)/20`:
/// a minimum on the left edge moves to `[0.2 (lower + δ), lower + δ]`;
/// a minimum on the right edge moves to `[upper - δ, 5 (upper - δ)]`;
/// an interior minimum `h*` moves to `[(lower + h*)/2, (upper + h*)/2]`.
/// The best bandwidth seen over all rounds is returned.
pub fn lscv_search(s: &WeightedSample, h0: f64, cfg: &LscvConfig) -> Result<BandwidthResult> {
    check_bandwidth(h0)?;
    if cfg.rounds < 1 {
        return Err(Error::InvalidParameter("LSCV needs at least one round".into()));
    }
    if cfg.grid_n < 5 {
        return Err(Error::InvalidParameter(format!("LSCV grid needs at least 5 points, got {}", cfg.grid_n)));
    }
    let mut lower = 0.25 * h0;
    let mut upper = 1.5 * h0;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    let mut best = (f64::INFINITY, h0);
    for _ in 0..cfg.rounds {
        let step = (upper - lower) / (cfg.grid_n - 1) as f64;
        let hs: Vec<f64> = (0..cfg.grid_n).map(|k| lower + k as f64 * step).collect();
        let objective = hs
            .iter()
            .map(|&h| lscv_objective(s, h, cfg.variant))
            .collect::<Result<Vec<f64>>>()?;
        let argmin = objective
            .iter()
            .enumerate()
            .fold(0, |m, (k, v)| if *v < objective[m] { k } else { m });
        if objective[argmin] < best.0 {
            best = (objective[argmin], hs[argmin]);
        }
        let delta = (upper - lower) / 20.0;
        let outcome = if argmin == 0 {
            RoundOutcome::LeftEdge
        } else if argmin == cfg.grid_n - 1 {
            RoundOutcome::RightEdge
        } else {
            RoundOutcome::Interior
        };
        let (next_lower, next_upper) = match outcome {
            RoundOutcome::LeftEdge => {
                let u = lower + delta;
                (0.2 * u, u)
            }
            RoundOutcome::RightEdge => {
                let l = upper - delta;
                (l, 5.0 * l)
            }
            RoundOutcome::Interior => {
                let hm = hs[argmin];
                (0.5 * (lower + hm), 0.5 * (upper + hm))
            }
        };
        rounds.push(LscvRound { lower, upper, h: hs, objective, argmin, outcome });
        lower = next_lower;
        upper = next_upper;
    }
    let saturated = rounds.last().is_some_and(|r| r.outcome != RoundOutcome::Interior);
    Ok(BandwidthResult { h: best.1, selector: Selector::Lscv, trace: Some(LscvTrace { rounds, saturated }) })
}

/// `0.7644174 λ̂ H*(x)^{-1/5} exp(x / (5 λ̂)) n^{-1/5}`.
pub fn h_kp_local(x: f64, lambda_hat: f64, survival: &CensoringSurvival, n: usize) -> Result<f64> {
    if !(lambda_hat > 0.0) {
        return Err(Error::InvalidParameter(format!("λ̂ must be positive, got {lambda_hat}")));
    }
    let hs = survival.eval(x);
    if !(hs > 0.0) {
        return Err(Error::ZeroSurvival(x));
    }
    Ok(KP_COEFFICIENT * lambda_hat * hs.powf(-0.2) * (x / (5.0 * lambda_hat)).exp() * (n as f64).powf(-0.2))
}
