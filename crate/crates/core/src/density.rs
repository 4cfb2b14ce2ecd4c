//! Density evaluation on a grid: fixed and adaptive weighted estimators,
//! boundary reflection, the Kuhn-Padgett estimator, the two biased-sampling
//! estimators and survival curves derived from an estimate.

use crate::bandwidth::{exp_scale, h_kp_local};
use crate::distributions::Biasing;
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, Kernel};
use crate::quad::{cumulative_trapezoid, trapezoid};
use crate::sample::WeightedSample;
use crate::weights::{biased_weights, censoring_survival};

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || !points.iter().all(|p| p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid);
        }
        Ok(Grid(points))
    }

    /// `m` equally spaced points from `a` to `b` inclusive.
    pub fn linspace(a: f64, b: f64, m: usize) -> Result<Self> {
        if m < 2 || !(b > a) {
            return Err(Error::InvalidGrid);
        }
        let step = (b - a) / (m - 1) as f64;
        let mut pts: Vec<f64> = (0..m).map(|k| a + k as f64 * step).collect();
        pts[m - 1] = b;
        Grid::new(pts)
    }

    /// `m` points over `[min(x) - 4h, max(x) + 4h]`, or `[0, max(x) + 4h]`
    /// when the support is bounded below at zero.
    pub fn around(x: &[f64], h: f64, m: usize, bounded_at_zero: bool) -> Result<Self> {
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Err(Error::EmptySample);
        }
        let start = if bounded_at_zero { 0.0 } else { lo - 4.0 * h };
        Grid::linspace(start, hi + 4.0 * h, m)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthRecord {
    Scalar(f64),
    /// One bandwidth per sorted observation.
    PerPoint(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Wkde,
    Awkde,
    Reflected,
    Kp,
    BiasedFb,
    BiasedFwu,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Wkde => "wkde",
            EstimatorKind::Awkde => "awkde",
            EstimatorKind::Reflected => "reflect",
            EstimatorKind::Kp => "kp",
            EstimatorKind::BiasedFb => "fb",
            EstimatorKind::BiasedFwu => "fwu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub bandwidth: BandwidthRecord,
    pub estimator: EstimatorKind,
}

impl DensityEstimate {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.f)
    }
}

/// `Σ_i w_i K_h(g - x_i)` for sorted `x`, visiting only points within the
/// kernel's support.
#[inline]
fn fixed_sum(x: &[f64], w: &[f64], h: f64, kernel: Kernel, g: f64) -> f64 {
    let reach = kernel.support() * h;
    let lo = x.partition_point(|v| *v < g - reach);
    let hi = x.partition_point(|v| *v <= g + reach);
    let mut acc = 0.0;
    for i in lo..hi {
        acc += w[i] * kernel.scaled_unchecked(h, g - x[i]);
    }
    acc
}

/// `Σ_i w_i K_{h_i}(g - x_i)` with per-point bandwidths.
#[inline]
fn variable_sum(x: &[f64], w: &[f64], hs: &[f64], h_max: f64, kernel: Kernel, g: f64) -> f64 {
    let reach = kernel.support() * h_max;
    let lo = x.partition_point(|v| *v < g - reach);
    let hi = x.partition_point(|v| *v <= g + reach);
    let mut acc = 0.0;
    for i in lo..hi {
        if w[i] != 0.0 {
            acc += w[i] * kernel.scaled_unchecked(hs[i], g - x[i]);
        }
    }
    acc
}

/// `f(g) = Σ_i w_i K_h(g - x_i)` with raw weights; integrates to `Σ w_i`.
pub fn wkde_eval(s: &WeightedSample, h: f64, grid: &Grid, kernel: Kernel) -> Result<DensityEstimate> {
    check_bandwidth(h)?;
    let f = grid.points().iter().map(|&g| fixed_sum(s.x(), s.w(), h, kernel, g)).collect();
    Ok(DensityEstimate {
        grid: grid.points().to_vec(),
        f,
        bandwidth: BandwidthRecord::Scalar(h),
        estimator: EstimatorKind::Wkde,
    })
}

/// Pilot estimate `Σ_j w_j K_h(X_i - X_j)` at every sorted observation.
pub fn pilot_at_points(s: &WeightedSample, h: f64, kernel: Kernel) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    let x = s.x();
    let pilot: Vec<f64> = x.iter().map(|&xi| fixed_sum(x, s.w(), h, kernel, xi)).collect();
    if let Some(k) = pilot.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::ZeroPilot { index: s.order()[k] });
    }
    Ok(pilot)
}

/// `λ_i = (pilot_i/g)^{-α}` where `log g` is the mean of `log pilot_i` over
/// every observation (zero-weight ones included).
pub fn factors_from_pilot(pilot: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("sensitivity {alpha} outside [0, 1]")));
    }
    let log_g = pilot.iter().map(|p| p.ln()).sum::<f64>() / pilot.len() as f64;
    Ok(pilot.iter().map(|p| (-alpha * (p.ln() - log_g)).exp()).collect())
}

/// Local bandwidth factors from a pilot estimate at bandwidth `h`.
pub fn adaptive_factors(s: &WeightedSample, h: f64, alpha: f64, kernel: Kernel) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("sensitivity {alpha} outside [0, 1]")));
    }
    factors_from_pilot(&pilot_at_points(s, h, kernel)?, alpha)
}

/// Adaptive estimator `Σ_i w_i K_{h λ_i}(t - X_i)`.
pub fn awkde_eval(s: &WeightedSample, h: f64, alpha: f64, grid: &Grid, kernel: Kernel) -> Result<DensityEstimate> {
    let lambda = adaptive_factors(s, h, alpha, kernel)?;
    awkde_with_factors(s, h, &lambda, grid, kernel)
}

/// Adaptive estimator with precomputed factors, one per sorted observation.
pub fn awkde_with_factors(
    s: &WeightedSample,
    h: f64,
    lambda: &[f64],
    grid: &Grid,
    kernel: Kernel,
) -> Result<DensityEstimate> {
    check_bandwidth(h)?;
    if lambda.len() != s.len() {
        return Err(Error::LengthMismatch { expected: s.len(), got: lambda.len() });
    }
    let hs: Vec<f64> = lambda.iter().map(|l| h * l).collect();
    let h_max = hs.iter().cloned().fold(0.0, f64::max);
    let f = grid
        .points()
        .iter()
        .map(|&g| variable_sum(s.x(), s.w(), &hs, h_max, kernel, g))
        .collect();
    Ok(DensityEstimate {
        grid: grid.points().to_vec(),
        f,
        bandwidth: BandwidthRecord::PerPoint(hs),
        estimator: EstimatorKind::Awkde,
    })
}

/// Reflection at zero: `Σ_i w_i [K_h(g - x_i) + K_h(g + x_i) 1{x_i < 4h}]`
/// for `g >= 0`, zero for negative `g`.
pub fn reflect_boundary(s: &WeightedSample, h: f64, grid: &Grid, kernel: Kernel) -> Result<DensityEstimate> {
    check_bandwidth(h)?;
    if let Some(k) = s.x().iter().position(|v| *v < 0.0) {
        return Err(Error::NegativeData { index: s.order()[k] });
    }
    let near = s.x().partition_point(|v| *v < 4.0 * h);
    let (xr, wr) = (&s.x()[..near], &s.w()[..near]);
    let f = grid
        .points()
        .iter()
        .map(|&g| {
            if g < 0.0 {
                return 0.0;
            }
            // reflected points -x_i are handled as K_h(g + x_i)
            let reflected: f64 = xr.iter().zip(wr).map(|(xi, wi)| wi * kernel.scaled_unchecked(h, g + xi)).sum();
            fixed_sum(s.x(), s.w(), h, kernel, g) + reflected
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.points().to_vec(),
        f,
        bandwidth: BandwidthRecord::Scalar(h),
        estimator: EstimatorKind::Reflected,
    })
}

/// Per-point Kuhn-Padgett bandwidths and weights `Δ_i / (n H*(X_i))`, in
/// sorted order.
pub fn kp_components(s: &WeightedSample) -> Result<(Vec<f64>, Vec<f64>)> {
    let events = s.events();
    let lambda = exp_scale(s)?;
    let survival = censoring_survival(s.x(), &events)?;
    let n = s.len();
    let mut hs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for (&xi, &event) in s.x().iter().zip(&events) {
        hs.push(h_kp_local(xi, lambda, &survival, n)?);
        ws.push(if event { 1.0 / (n as f64 * survival.eval(xi)) } else { 0.0 });
    }
    Ok((hs, ws))
}

/// Kuhn-Padgett estimate `Σ_i Δ_i/(n H*(X_i)) K_{h_kp(X_i)}(x - X_i)` with the
/// Gaussian kernel. A sample without indicators is treated as uncensored.
pub fn kp_estimate(s: &WeightedSample, grid: &Grid) -> Result<DensityEstimate> {
    let (hs, ws) = kp_components(s)?;
    let h_max = hs.iter().cloned().fold(0.0, f64::max);
    let f = grid
        .points()
        .iter()
        .map(|&g| variable_sum(s.x(), &ws, &hs, h_max, Kernel::Gaussian, g))
        .collect();
    Ok(DensityEstimate {
        grid: grid.points().to_vec(),
        f,
        bandwidth: BandwidthRecord::PerPoint(hs),
        estimator: EstimatorKind::Kp,
    })
}

/// `f_s(g) / b(g)` with `f_s` the plain estimate of the biased sample,
/// rescaled so its trapezoid integral over the grid is one.
pub fn biased_fb(x: &[f64], b: &Biasing, h: f64, grid: &Grid, kernel: Kernel) -> Result<DensityEstimate> {
    check_bandwidth(h)?;
    let s = WeightedSample::uniform(x.to_vec())?;
    let mut f = Vec::with_capacity(grid.len());
    for &g in grid.points() {
        let bg = b.eval(g);
        if !(bg > 0.0) {
            return Err(Error::ZeroBias(g));
        }
        f.push(fixed_sum(s.x(), s.w(), h, kernel, g) / bg);
    }
    let total = trapezoid(grid.points(), &f);
    if total > 0.0 {
        f.iter_mut().for_each(|v| *v /= total);
    }
    Ok(DensityEstimate {
        grid: grid.points().to_vec(),
        f,
        bandwidth: BandwidthRecord::Scalar(h),
        estimator: EstimatorKind::BiasedFb,
    })
}

/// Normalizing constant of the inverse-bias estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FwuNormalization {
    /// `1 / Σ b(X_i)^{-1}`, so the weights sum to one.
    #[default]
    InverseSum,
    /// `1 / Σ b(X_i)`, as printed.
    Strict,
}

/// `κ' Σ_i b(X_i)^{-1} K_h(x - X_i)`.
pub fn biased_fwu(
    x: &[f64],
    b: &Biasing,
    h: f64,
    grid: &Grid,
    kernel: Kernel,
    norm: FwuNormalization,
) -> Result<DensityEstimate> {
    check_bandwidth(h)?;
    let w = match norm {
        FwuNormalization::InverseSum => biased_weights(x, |v| b.eval(v))?,
        FwuNormalization::Strict => {
            let raw = biased_weights(x, |v| b.eval(v))?;
            let inv_total: f64 = x.iter().map(|v| 1.0 / b.eval(*v)).sum();
            let b_total: f64 = x.iter().map(|v| b.eval(*v)).sum();
            raw.iter().map(|w| w * inv_total / b_total).collect()
        }
    };
    let s = WeightedSample::new(x.to_vec(), w)?;
    let mut d = wkde_eval(&s, h, grid, kernel)?;
    d.estimator = EstimatorKind::BiasedFwu;
    Ok(d)
}

/// `S(t) = 1 - ∫ f` up to `t`, tabulated on the estimate's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl SurvivalCurve {
    /// One before the grid, linear between grid points, flat after it.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return 1.0;
        }
        if t >= self.t[n - 1] {
            return self.s[n - 1];
        }
        let k = self.t.partition_point(|v| *v <= t);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let frac = (t - t0) / (t1 - t0);
        self.s[k - 1] + frac * (self.s[k] - self.s[k - 1])
    }
}

/// Clamped to `[0, 1]` and forced non-increasing.
pub fn survival_from_density(d: &DensityEstimate) -> SurvivalCurve {
    let cum = cumulative_trapezoid(&d.grid, &d.f);
    let mut s = Vec::with_capacity(cum.len());
    let mut prev = 1.0f64;
    for c in cum {
        let v = (1.0 - c).clamp(0.0, 1.0).min(prev);
        s.push(v);
        prev = v;
    }
    SurvivalCurve { t: d.grid.clone(), s }
}
