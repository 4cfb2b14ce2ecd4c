//! Monte Carlo experiments measuring mean L1 error.
//!
//! Each replicate draws its own sample from a random stream derived from the
//! master seed, the sample size and the replicate index, so results do not
//! depend on how replicates are spread over threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bandwidth::{h_exp_ref, h_normal_ref, h_plugin, lscv_search, LscvConfig};
use crate::density::{
    awkde_with_factors, biased_fb, biased_fwu, factors_from_pilot, kp_estimate, pilot_at_points, wkde_eval,
    DensityEstimate, FwuNormalization, Grid,
};
use crate::distributions::{biased_thin, biasing_b1, biasing_b2, mix_seed, Biasing, CensoringModel, RngState, TargetDist};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metrics::{comparison_grid, l1_distance, DEFAULT_COMPARISON_POINTS};
use crate::sample::WeightedSample;
use crate::weights::km_weights;

pub const DEFAULT_REPS: usize = 2000;
pub const DEFAULT_ALPHAS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
pub const DEFAULT_CENSORING_RATE: f64 = 0.3;
pub const BIASED_SAMPLE_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    CompleteNormal,
    CensoredNormal,
    CensoredWeibull,
    KpNormal,
    KpExponential,
    KpWeibull,
    Biased,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::CompleteNormal,
        Scenario::CensoredNormal,
        Scenario::CensoredWeibull,
        Scenario::KpNormal,
        Scenario::KpExponential,
        Scenario::KpWeibull,
        Scenario::Biased,
    ];

    /// Table identifier accepted on the command line.
    pub fn table(self) -> &'static str {
        match self {
            Scenario::CompleteNormal => "1",
            Scenario::CensoredNormal => "2",
            Scenario::CensoredWeibull => "3",
            Scenario::KpNormal => "5",
            Scenario::KpExponential => "6",
            Scenario::KpWeibull => "7",
            Scenario::Biased => "bias",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::CompleteNormal => "complete-normal",
            Scenario::CensoredNormal => "censored-normal",
            Scenario::CensoredWeibull => "censored-weibull",
            Scenario::KpNormal => "kp-normal",
            Scenario::KpExponential => "kp-exponential",
            Scenario::KpWeibull => "kp-weibull",
            Scenario::Biased => "biased",
        }
    }

    pub fn from_table(id: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.table() == id)
    }

    /// Population sampled by the scenario; the biased scenario has two and
    /// reports the first.
    pub fn target(self) -> TargetDist {
        match self {
            Scenario::CompleteNormal | Scenario::CensoredNormal | Scenario::KpNormal => {
                TargetDist::Normal { mu: 13.0, sigma: 3.0 }
            }
            Scenario::KpExponential => TargetDist::Exponential { mean: 1.0 },
            Scenario::CensoredWeibull | Scenario::KpWeibull => TargetDist::Weibull { shape: 2.0, scale: 1.0 },
            Scenario::Biased => TargetDist::Normal { mu: 10.0, sigma: 2.0 },
        }
    }

    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Scenario::CompleteNormal => vec![20, 30, 50, 100, 300],
            Scenario::CensoredNormal | Scenario::CensoredWeibull => vec![30, 40, 70, 140, 300],
            Scenario::KpNormal | Scenario::KpExponential | Scenario::KpWeibull => vec![30, 50, 100, 200],
            Scenario::Biased => vec![BIASED_SAMPLE_SIZE],
        }
    }

    fn censored(self) -> bool {
        !matches!(self, Scenario::CompleteNormal | Scenario::Biased)
    }

    fn part(self) -> Part {
        match self {
            Scenario::CompleteNormal | Scenario::CensoredNormal | Scenario::CensoredWeibull => Part::One,
            Scenario::KpNormal | Scenario::KpExponential | Scenario::KpWeibull => Part::Two,
            Scenario::Biased => Part::Biased,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::from_table(s)
            .or_else(|| Scenario::ALL.into_iter().find(|c| c.name() == s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown table `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    One,
    Two,
    Biased,
}

/// Selection functions compared in the biased-sampling scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasKind {
    /// `b ≡ 1`: both estimators reduce to the plain estimate.
    Uniform,
    Linear,
    Step,
}

impl BiasKind {
    pub fn build(self, dist: &TargetDist) -> Biasing {
        match self {
            BiasKind::Uniform => Biasing::Constant(1.0),
            BiasKind::Linear => biasing_b1(dist),
            BiasKind::Step => biasing_b2(dist),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub censoring_rate: f64,
    /// Scale family of the censoring times.
    pub censoring_template: TargetDist,
    pub grid_points: usize,
    pub lscv: LscvConfig,
    /// Populations for the biased scenario.
    pub biased_targets: Vec<TargetDist>,
    pub biasings: Vec<BiasKind>,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            scenario,
            sizes: scenario.default_sizes(),
            reps,
            seed,
            alphas: DEFAULT_ALPHAS.to_vec(),
            censoring_rate: DEFAULT_CENSORING_RATE,
            censoring_template: TargetDist::Exponential { mean: 1.0 },
            grid_points: DEFAULT_COMPARISON_POINTS,
            lscv: LscvConfig::default(),
            biased_targets: vec![TargetDist::Normal { mu: 10.0, sigma: 2.0 }, TargetDist::Weibull { shape: 2.0, scale: 1.0 }],
            biasings: vec![BiasKind::Linear, BiasKind::Step],
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|n| *n < 5) {
            return Err(Error::InvalidParameter("sample sizes must be at least 5".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("sensitivity {a} outside [0, 1]")));
        }
        if self.scenario == Scenario::Biased && (self.biased_targets.is_empty() || self.biasings.is_empty()) {
            return Err(Error::InvalidParameter("biased scenario needs targets and biasing functions".into()));
        }
        Ok(())
    }
}

/// One table entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: String,
    pub n: usize,
    pub selector: String,
    pub variant: String,
    pub mean_l1: f64,
    pub se: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub cells: Vec<Cell>,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub fn find(&self, scenario: &str, n: usize, selector: &str, variant: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.n == n && c.selector == selector && c.variant == variant)
    }
}

/// Column labels and per-replicate L1 values of one sample size.
struct Columns {
    labels: Vec<(String, String)>,
    values: Vec<Vec<f64>>,
}

fn l1(est: &DensityEstimate, truth: &TargetDist) -> Result<f64> {
    Ok(l1_distance(est, truth)?.l1)
}

fn part1_labels(alphas: &[f64]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for sel in ["h_p", "h_n", "h_lscv"] {
        out.push((sel.to_string(), "wkde".to_string()));
        for a in alphas {
            out.push((sel.to_string(), format!("awkde-{a}")));
        }
    }
    out
}

/// Draws a sample of `n`, censored and Kaplan-Meier weighted when the
/// scenario calls for it.
fn draw(dist: &TargetDist, n: usize, censoring: Option<&CensoringModel>, rng: &mut RngState) -> Result<WeightedSample> {
    let t = dist.sample(n, rng);
    match censoring {
        None => WeightedSample::uniform(t),
        Some(model) => {
            let (x, d) = model.apply(&t, rng);
            let s = WeightedSample::censored_uniform(x, d)?;
            let w = km_weights(s.x(), &s.events())?;
            s.reweighted(w)
        }
    }
}

fn part1_replicate(
    cfg: &ExperimentConfig,
    dist: &TargetDist,
    grid: &Grid,
    censoring: Option<&CensoringModel>,
    n: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let s = draw(dist, n, censoring, rng)?;
    let h_n = h_normal_ref(&s)?.h;
    let h_p = h_plugin(s.x())?.h;
    let h_lscv = lscv_search(&s, h_n, &cfg.lscv)?.h;
    let mut out = Vec::with_capacity(3 * (1 + cfg.alphas.len()));
    for h in [h_p, h_n, h_lscv] {
        out.push(l1(&wkde_eval(&s, h, grid, Kernel::Gaussian)?, dist)?);
        let pilot = pilot_at_points(&s, h, Kernel::Gaussian)?;
        for &a in &cfg.alphas {
            let lambda = factors_from_pilot(&pilot, a)?;
            out.push(l1(&awkde_with_factors(&s, h, &lambda, grid, Kernel::Gaussian)?, dist)?);
        }
    }
    Ok(out)
}

fn part2_labels() -> Vec<(String, String)> {
    [("h_kp", "kp"), ("h_n", "wkde"), ("h_e", "wkde"), ("h_p", "wkde")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn part2_replicate(
    dist: &TargetDist,
    grid: &Grid,
    censoring: &CensoringModel,
    n: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let s = draw(dist, n, Some(censoring), rng)?;
    let mut out = vec![l1(&kp_estimate(&s, grid)?, dist)?];
    for h in [h_normal_ref(&s)?.h, h_exp_ref(&s)?.h, h_plugin(s.x())?.h] {
        out.push(l1(&wkde_eval(&s, h, grid, Kernel::Gaussian)?, dist)?);
    }
    Ok(out)
}

fn biased_replicate(dist: &TargetDist, b: &Biasing, grid: &Grid, n: usize, rng: &mut RngState) -> Result<Vec<f64>> {
    let t = dist.sample(n, rng);
    let kept = biased_thin(&t, |x| b.eval(x), rng)?;
    let h = h_plugin(&kept)?.h;
    Ok(vec![
        l1(&biased_fb(&kept, b, h, grid, Kernel::Gaussian)?, dist)?,
        l1(&biased_fwu(&kept, b, h, grid, Kernel::Gaussian, FwuNormalization::InverseSum)?, dist)?,
    ])
}

fn run_replicates<F>(pool: &rayon::ThreadPool, stream_seed: u64, reps: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut RngState) -> Result<Vec<f64>> + Sync,
{
    pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| f(&mut RngState::stream(stream_seed, r)))
            .collect()
    })
}

fn transpose(rows: Vec<Vec<f64>>, width: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(rows.len()); width];
    for row in rows {
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    cols
}

/// Mean, and standard error `sd/√reps` with the `reps - 1` divisor; zero for
/// a single replicate.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Distinguishes the random streams of different cells.
fn cell_seed(master: u64, tag: u64, n: usize) -> u64 {
    mix_seed(mix_seed(master, tag), n as u64)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_progress(cfg, &mut |_, _| {})
}

/// As [`run_experiment`], calling `progress(label, n)` after each sample size
/// finishes.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&str, usize),
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    run_in_pool(cfg, &pool, progress)
}

fn run_in_pool(cfg: &ExperimentConfig, pool: &rayon::ThreadPool, progress: &mut dyn FnMut(&str, usize)) -> Result<ExperimentResult> {
    let mut result = ExperimentResult { cells: Vec::new(), warnings: Vec::new() };
    if cfg.reps == 1 {
        result.warnings.push("only one replicate: standard errors are reported as 0".into());
    }
    let push = |result: &mut ExperimentResult, scenario: &str, n: usize, cols: Columns| {
        for ((selector, variant), v) in cols.labels.into_iter().zip(cols.values) {
            let (mean_l1, se) = mean_and_se(&v);
            result.cells.push(Cell {
                scenario: scenario.to_string(),
                n,
                selector,
                variant,
                mean_l1,
                se,
                reps: cfg.reps,
                seed: cfg.seed,
            });
        }
    };

    let scenario = cfg.scenario;
    match scenario.part() {
        Part::One | Part::Two => {
            let dist = scenario.target();
            let grid = comparison_grid(&dist, cfg.grid_points)?;
            let censoring = if scenario.censored() {
                Some(CensoringModel::calibrate(dist, cfg.censoring_template, cfg.censoring_rate)?)
            } else {
                None
            };
            for &n in &cfg.sizes {
                let seed = cell_seed(cfg.seed, 0, n);
                let (labels, rows) = if scenario.part() == Part::One {
                    let rows = run_replicates(pool, seed, cfg.reps, |rng| {
                        part1_replicate(cfg, &dist, &grid, censoring.as_ref(), n, rng)
                    })?;
                    (part1_labels(&cfg.alphas), rows)
                } else {
                    let model = censoring.as_ref().expect("part 2 is censored");
                    let rows = run_replicates(pool, seed, cfg.reps, |rng| part2_replicate(&dist, &grid, model, n, rng))?;
                    (part2_labels(), rows)
                };
                let width = labels.len();
                let values = transpose(rows, width);
                let mut cols = Columns { labels, values };
                if scenario.part() == Part::One {
                    add_best_alpha(&mut cols, &cfg.alphas);
                }
                push(&mut result, scenario.name(), n, cols);
                progress(scenario.name(), n);
            }
        }
        Part::Biased => {
            for (ti, dist) in cfg.biased_targets.iter().enumerate() {
                let grid = comparison_grid(dist, cfg.grid_points)?;
                for &kind in &cfg.biasings {
                    let b = kind.build(dist);
                    let label = format!("biased-{}-{}", family_name(dist), b.name());
                    for &n in &cfg.sizes {
                        let tag = 1 + (ti as u64) * 16 + kind as u64;
                        let rows = run_replicates(pool, cell_seed(cfg.seed, tag, n), cfg.reps, |rng| {
                            biased_replicate(dist, &b, &grid, n, rng)
                        })?;
                        let labels = vec![("h_p".to_string(), "fb".to_string()), ("h_p".to_string(), "fwu".to_string())];
                        let values = transpose(rows, 2);
                        push(&mut result, &label, n, Columns { labels, values });
                        progress(&label, n);
                    }
                }
            }
        }
    }
    Ok(result)
}

/// Appends, per selector, the alpha with the lowest mean as `awkde-best`
/// whose replicate values are those of the winning alpha.
fn add_best_alpha(cols: &mut Columns, alphas: &[f64]) {
    if alphas.is_empty() {
        return;
    }
    let stride = 1 + alphas.len();
    let selectors = cols.labels.len() / stride;
    for k in 0..selectors {
        let base = k * stride + 1;
        let best = (0..alphas.len())
            .min_by(|&a, &b| {
                let ma = mean_and_se(&cols.values[base + a]).0;
                let mb = mean_and_se(&cols.values[base + b]).0;
                ma.total_cmp(&mb)
            })
            .expect("non-empty alphas");
        let selector = cols.labels[k * stride].0.clone();
        cols.labels.push((selector, format!("awkde-best@{}", alphas[best])));
        cols.values.push(cols.values[base + best].clone());
    }
}

fn family_name(d: &TargetDist) -> &'static str {
    match d {
        TargetDist::Normal { .. } => "normal",
        TargetDist::Exponential { .. } => "exponential",
        TargetDist::Weibull { .. } => "weibull",
    }
}

/// `scenario,n,selector,variant,mean_l1,se,reps,seed` rows.
pub fn write_results_csv<W: Write>(mut out: W, result: &ExperimentResult) -> std::io::Result<()> {
    writeln!(out, "scenario,n,selector,variant,mean_l1,se,reps,seed")?;
    for c in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6e},{},{}",
            c.scenario, c.n, c.selector, c.variant, c.mean_l1, c.se, c.reps, c.seed
        )?;
    }
    out.flush()
}
