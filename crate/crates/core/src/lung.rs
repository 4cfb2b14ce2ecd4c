//! Lung-cancer survival data with informative censoring.
//!
//! Censored patients were later seen to die at an "ultimate" time, after
//! other therapies. A linear model of residual lifetime on censoring time
//! bounds how far each censored point's weight may travel, and the weights
//! are redistributed inside that window before smoothing.

use std::fmt;
use std::str::FromStr;

use crate::bandwidth::h_plugin;
use crate::density::{reflect_boundary, survival_from_density, DensityEstimate, Grid, SurvivalCurve, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::sample::WeightedSample;
use crate::weights::{km_weights, redistribute_windowed, uniform_weights};

const BUNDLED: &str = include_str!("../data/lung.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct LungRecord {
    pub time: f64,
    /// True for a death observed on study.
    pub delta: bool,
    pub ultimate: Option<f64>,
    pub outlier: bool,
}

/// The 61-patient dataset shipped with the crate.
pub fn bundled() -> Vec<LungRecord> {
    crate::io::parse_lung_csv(BUNDLED).expect("bundled lung data parses")
}

/// Residual lifetimes for the censored points.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualModel {
    /// One value per censored point, in increasing order of censoring time.
    PerPoint(Vec<f64>),
    /// `r = beta0 + beta1 * t`, floored at zero.
    Linear { beta0: f64, beta1: f64 },
}

impl ResidualModel {
    pub fn residuals(&self, censored_times: &[f64]) -> Result<Vec<f64>> {
        match self {
            ResidualModel::PerPoint(r) => {
                if r.len() != censored_times.len() {
                    return Err(Error::LengthMismatch { expected: censored_times.len(), got: r.len() });
                }
                Ok(r.clone())
            }
            ResidualModel::Linear { beta0, beta1 } => {
                Ok(censored_times.iter().map(|t| (beta0 + beta1 * t).max(0.0)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub beta0: f64,
    pub beta1: f64,
    /// Records (by input index) left out of the fit.
    pub excluded: Vec<usize>,
    pub n_used: usize,
}

impl LinearFit {
    pub fn model(&self) -> ResidualModel {
        ResidualModel::Linear { beta0: self.beta0, beta1: self.beta1 }
    }
}

fn ols(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateScale);
    }
    let b1 = sxy / sxx;
    Ok((my - b1 * mx, b1))
}

/// Least-squares fit of `ultimate - time` on `time` over censored records
/// with an ultimate time. Flagged outliers are left out; when nothing is
/// flagged, the two largest absolute residuals of a preliminary fit are.
pub fn fit_residual_model(records: &[LungRecord]) -> Result<LinearFit> {
    let cand: Vec<(usize, f64, f64)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.delta)
        .filter_map(|(i, r)| r.ultimate.map(|u| (i, r.time, u - r.time)))
        .collect();
    let flagged: Vec<usize> = cand.iter().filter(|c| records[c.0].outlier).map(|c| c.0).collect();
    let excluded = if !flagged.is_empty() {
        flagged
    } else {
        let pts: Vec<(f64, f64)> = cand.iter().map(|c| (c.1, c.2)).collect();
        if pts.len() < 5 {
            return Err(Error::InvalidParameter("need at least 5 censored records with ultimate times".into()));
        }
        let (b0, b1) = ols(&pts)?;
        let mut by_resid: Vec<(usize, f64)> = cand.iter().map(|c| (c.0, (c.2 - b0 - b1 * c.1).abs())).collect();
        by_resid.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut ex: Vec<usize> = by_resid[..2].iter().map(|p| p.0).collect();
        ex.sort_unstable();
        ex
    };
    let kept: Vec<(f64, f64)> = cand.iter().filter(|c| !excluded.contains(&c.0)).map(|c| (c.1, c.2)).collect();
    if kept.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 censored records with ultimate times".into()));
    }
    let (beta0, beta1) = ols(&kept)?;
    Ok(LinearFit { beta0, beta1, excluded, n_used: kept.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LungMode {
    /// Kaplan-Meier weights under independent censoring.
    Mp,
    /// Censored patients treated as dying at their censoring time.
    ZeroResidual,
    /// Censored times replaced by the ultimate death times.
    Ultimate,
    /// Censored weight redistributed within the predicted residual window.
    Windowed,
}

impl LungMode {
    pub const ALL: [LungMode; 4] = [LungMode::Mp, LungMode::ZeroResidual, LungMode::Ultimate, LungMode::Windowed];

    pub fn name(self) -> &'static str {
        match self {
            LungMode::Mp => "mp",
            LungMode::ZeroResidual => "zero",
            LungMode::Ultimate => "ultimate",
            LungMode::Windowed => "windowed",
        }
    }
}

impl fmt::Display for LungMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LungMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LungMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown lung mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LungOptions {
    pub grid_n: usize,
    /// Overrides the fitted linear model in windowed mode.
    pub residual_model: Option<ResidualModel>,
    /// Overrides the plug-in bandwidth.
    pub bandwidth: Option<f64>,
}

impl Default for LungOptions {
    fn default() -> Self {
        LungOptions { grid_n: DEFAULT_GRID_POINTS, residual_model: None, bandwidth: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LungResult {
    pub mode: LungMode,
    pub h: f64,
    pub density: DensityEstimate,
    pub survival: SurvivalCurve,
    /// Present in windowed mode when the model was fitted from the data.
    pub fit: Option<LinearFit>,
}

/// Plug-in bandwidth on the observed times, shared by every mode so the
/// curves differ only through their weights.
pub fn shared_bandwidth(records: &[LungRecord]) -> Result<f64> {
    let t: Vec<f64> = records.iter().map(|r| r.time).collect();
    Ok(h_plugin(&t)?.h)
}

/// Grid on `[0, max + 4h]` covering the ultimate times too.
pub fn shared_grid(records: &[LungRecord], h: f64, m: usize) -> Result<Grid> {
    let all: Vec<f64> = records.iter().flat_map(|r| std::iter::once(r.time).chain(r.ultimate)).collect();
    Grid::around(&all, h, m, true)
}

pub fn run_lung_pipeline(records: &[LungRecord], mode: LungMode, opts: &LungOptions) -> Result<LungResult> {
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    let h = match opts.bandwidth {
        Some(h) => h,
        None => shared_bandwidth(records)?,
    };
    let grid = shared_grid(records, h, opts.grid_n)?;
    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let deltas: Vec<bool> = records.iter().map(|r| r.delta).collect();
    let mut fit = None;

    let sample = match mode {
        LungMode::ZeroResidual => WeightedSample::uniform(times)?,
        LungMode::Ultimate => {
            let mut t = Vec::with_capacity(records.len());
            for (i, r) in records.iter().enumerate() {
                t.push(match (r.delta, r.ultimate) {
                    (true, _) => r.time,
                    (false, Some(u)) => u,
                    (false, None) => {
                        return Err(Error::InvalidParameter(format!("record {i} is censored without an ultimate time")))
                    }
                });
            }
            WeightedSample::uniform(t)?
        }
        LungMode::Mp => {
            let s = WeightedSample::censored_uniform(times, deltas)?;
            let w = km_weights(s.x(), &s.events())?;
            s.reweighted(w)?
        }
        LungMode::Windowed => {
            let s = WeightedSample::censored_uniform(times, deltas)?;
            let events = s.events();
            let model = match &opts.residual_model {
                Some(m) => m.clone(),
                None => {
                    let f = fit_residual_model(records)?;
                    let m = f.model();
                    fit = Some(f);
                    m
                }
            };
            let censored: Vec<f64> = s.x().iter().zip(&events).filter(|(_, e)| !**e).map(|(x, _)| *x).collect();
            let r = model.residuals(&censored)?;
            let w = if censored.is_empty() { uniform_weights(s.len()) } else { redistribute_windowed(s.x(), &events, &r)? };
            s.reweighted(w)?
        }
    };
    let density = reflect_boundary(&sample, h, &grid, Kernel::Gaussian)?;
    let survival = survival_from_density(&density);
    Ok(LungResult { mode, h, density, survival, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_counts() {
        let r = bundled();
        assert_eq!(r.len(), 61);
        assert_eq!(r.iter().filter(|x| x.delta).count(), 33);
        assert!(r.iter().filter(|x| !x.delta).all(|x| x.ultimate.is_some()));
        assert_eq!(r.iter().filter(|x| x.outlier).count(), 2);
    }

    #[test]
    fn slope_matches_published_fit() {
        let fit = fit_residual_model(&bundled()).unwrap();
        assert_eq!(fit.n_used, 26);
        assert!((fit.beta1 - 0.4662).abs() < 5e-4, "{}", fit.beta1);
    }

    #[test]
    fn unflagged_outliers_are_found_by_residual_size() {
        let mut r = bundled();
        let flagged: Vec<usize> = (0..r.len()).filter(|&i| r[i].outlier).collect();
        for x in &mut r {
            x.outlier = false;
        }
        let fit = fit_residual_model(&r).unwrap();
        assert_eq!(fit.excluded, flagged);
        assert!((fit.beta1 - 0.4662).abs() < 5e-4);
    }

    #[test]
    fn ols_recovers_an_exact_line() {
        let (b0, b1) = ols(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((b0 - 1.0).abs() < 1e-12 && (b1 - 2.0).abs() < 1e-12);
        assert_eq!(ols(&[(1.0, 1.0), (1.0, 2.0)]), Err(Error::DegenerateScale));
    }

    #[test]
    fn residual_model_floors_at_zero() {
        let m = ResidualModel::Linear { beta0: -1.0, beta1: 0.5 };
        assert_eq!(m.residuals(&[0.0, 4.0]).unwrap(), vec![0.0, 1.0]);
        assert!(ResidualModel::PerPoint(vec![1.0]).residuals(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn modes_parse_and_print() {
        for m in LungMode::ALL {
            assert_eq!(m.name().parse::<LungMode>().unwrap(), m);
        }
        assert!("gam".parse::<LungMode>().is_err());
    }

    #[test]
    fn every_mode_produces_a_proper_curve() {
        let r = bundled();
        for mode in LungMode::ALL {
            let out = run_lung_pipeline(&r, mode, &LungOptions::default()).unwrap();
            assert_eq!(out.density.grid.len(), DEFAULT_GRID_POINTS);
            assert!((out.density.integral() - 1.0).abs() < 1e-3, "{mode}: {}", out.density.integral());
            assert!(out.survival.s.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(out.fit.is_some(), mode == LungMode::Windowed);
        }
    }

    #[test]
    fn ultimate_mode_has_uniform_weights_and_no_censoring() {
        // compare against a direct reflected KDE on the substituted times
        let r = bundled();
        let out = run_lung_pipeline(&r, LungMode::Ultimate, &LungOptions::default()).unwrap();
        let t: Vec<f64> = r.iter().map(|x| x.ultimate.unwrap_or(x.time)).collect();
        let s = WeightedSample::uniform(t).unwrap();
        let grid = Grid::new(out.density.grid.clone()).unwrap();
        let direct = reflect_boundary(&s, out.h, &grid, Kernel::Gaussian).unwrap();
        assert_eq!(direct.f, out.density.f);
    }

    #[test]
    fn ultimate_mode_requires_ultimate_times() {
        let r = vec![
            LungRecord { time: 1.0, delta: true, ultimate: None, outlier: false },
            LungRecord { time: 2.0, delta: false, ultimate: None, outlier: false },
        ];
        let opts = LungOptions { bandwidth: Some(1.0), ..LungOptions::default() };
        assert!(run_lung_pipeline(&r, LungMode::Ultimate, &opts).is_err());
    }
}
