//! L1 distance between an estimate and a reference density.

use crate::density::{DensityEstimate, Grid};
use crate::distributions::TargetDist;
use crate::error::{Error, Result};

/// A reference density that can be evaluated pointwise.
pub trait TrueDensity {
    fn pdf(&self, x: f64) -> f64;

    /// Probability below `x`, when known; used to report truncated mass.
    fn cdf(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl TrueDensity for TargetDist {
    fn pdf(&self, x: f64) -> f64 {
        TargetDist::pdf(self, x)
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        Some(TargetDist::cdf(self, x))
    }
}

impl<F: Fn(f64) -> f64> TrueDensity for F {
    fn pdf(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Report {
    pub l1: f64,
    pub grid_m: usize,
    /// True-density mass outside the grid, `NaN` when the reference has no CDF.
    pub truncation_mass: f64,
}

/// Quadrature weights `d_1 = y_2 - y_1`, `d_m = y_m - y_{m-1}` and
/// `d_i = (y_{i+1} - y_{i-1})/2` in between.
pub fn l1_weights(y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    if m < 3 {
        return Err(Error::GridTooSmall(m));
    }
    let mut d = Vec::with_capacity(m);
    d.push(y[1] - y[0]);
    for i in 1..m - 1 {
        d.push(0.5 * (y[i + 1] - y[i - 1]));
    }
    d.push(y[m - 1] - y[m - 2]);
    Ok(d)
}

/// `Σ |a_i - b_i| d_i` over tabulated values.
pub fn l1_values(y: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != y.len() || b.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), got: a.len().min(b.len()) });
    }
    let d = l1_weights(y)?;
    Ok(a.iter().zip(b).zip(&d).map(|((p, q), di)| (p - q).abs() * di).sum())
}

pub fn l1_distance(fhat: &DensityEstimate, truth: &dyn TrueDensity) -> Result<L1Report> {
    let truth_vals: Vec<f64> = fhat.grid.iter().map(|&y| truth.pdf(y)).collect();
    let l1 = l1_values(&fhat.grid, &fhat.f, &truth_vals)?;
    let m = fhat.grid.len();
    let truncation_mass = match (truth.cdf(fhat.grid[0]), truth.cdf(fhat.grid[m - 1])) {
        (Some(lo), Some(hi)) => lo + (1.0 - hi),
        _ => f64::NAN,
    };
    Ok(L1Report { l1, grid_m: m, truncation_mass })
}

pub const DEFAULT_COMPARISON_POINTS: usize = 1024;

/// `m` points spanning the 0.0001 to 0.9999 quantiles of `dist`.
pub fn comparison_grid(dist: &TargetDist, m: usize) -> Result<Grid> {
    Grid::linspace(dist.quantile(1e-4), dist.quantile(1.0 - 1e-4), m)
}
