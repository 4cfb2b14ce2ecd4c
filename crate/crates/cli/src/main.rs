//! `wkde`: weighted kernel density estimates, Monte Carlo tables and the
//! lung-data pipeline from the command line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wkde::bandwidth::{h_exp_ref, h_normal_ref, h_plugin, lscv_search, LscvConfig, LscvVariant, Selector};
use wkde::density::{
    awkde_eval, biased_fb, biased_fwu, kp_estimate, reflect_boundary, survival_from_density, wkde_eval,
    DensityEstimate, FwuNormalization, Grid, DEFAULT_GRID_POINTS,
};
use wkde::distributions::{parse_biasing, Biasing, TargetDist};
use wkde::io::{parse_lung_csv, parse_residual_model, parse_sample_csv, write_density_csv};
use wkde::lung::{self, run_lung_pipeline, LungMode, LungOptions, ResidualModel};
use wkde::simulate::{run_experiment_with_progress, write_results_csv, ExperimentConfig, Scenario, DEFAULT_REPS};
use wkde::weights::{biased_weights, km_weights, redistribute_windowed};
use wkde::{Error, Kernel, WeightedSample};

#[derive(Parser)]
#[command(name = "wkde", version, about = "Weighted kernel density estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a density from a CSV sample with header x[,delta][,w].
    Estimate(EstimateArgs),
    /// Run a Monte Carlo table and write mean L1 errors as CSV.
    Simulate(SimulateArgs),
    /// Density and survival estimates for the bundled lung data.
    Lung(LungArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightsArg {
    Uniform,
    Km,
    Biased,
    Windowed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Wkde,
    Awkde,
    Kp,
    Fb,
    Fwu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    None,
    Reflect,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV.
    input: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Weight scheme; defaults to the file's `w` column, else Kaplan-Meier
    /// when `delta` is present, else uniform.
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
    /// Selection probability for biased samples: b1, b2, const:c,
    /// linear:ceiling or step:mu,sigma.
    #[arg(long)]
    bias_fn: Option<String>,
    /// Population used to resolve b1/b2, e.g. normal:10,2.
    #[arg(long)]
    dist: Option<String>,
    /// CSV with an r_hat column or one beta0,beta1 row.
    #[arg(long)]
    residual_model: Option<PathBuf>,
    /// nrd, exp, dpi, lscv, kp, or a positive number.
    #[arg(long, default_value = "nrd")]
    bandwidth: String,
    #[arg(long, default_value_t = 5)]
    lscv_rounds: usize,
    #[arg(long, default_value_t = 21)]
    lscv_grid: usize,
    /// Selector that seeds the LSCV search.
    #[arg(long, default_value = "nrd")]
    lscv_seed_selector: String,
    /// Use the objective's literal diagonal and denominator terms.
    #[arg(long)]
    lscv_strict: bool,
    /// Sensitivity for the adaptive estimator; implies --estimator awkde.
    #[arg(long)]
    adaptive: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    boundary: BoundaryArg,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Normalize the inverse-bias estimator by 1/Σb instead of 1/Σ(1/b).
    #[arg(long)]
    fwu_strict: bool,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_n: usize,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    /// Add the survival column S.
    #[arg(long)]
    survival: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// 1, 2, 3, 5, 6, 7 or bias.
    #[arg(long)]
    table: String,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// Master seed; a random one is drawn and logged when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, env = "WKDE_THREADS")]
    threads: Option<usize>,
    /// Comma-separated sample sizes replacing the table's defaults.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.3)]
    cens_rate: f64,
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Args)]
struct LungArgs {
    /// CSV with header time,delta[,ultimate][,outlier]; the bundled data
    /// when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// mp, zero, ultimate, windowed or all.
    #[arg(long, default_value = "windowed")]
    mode: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    residual_model: Option<PathBuf>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_n: usize,
}

/// Failures before any computation (exit 2) versus numerical ones (exit 3).
enum Failure {
    Usage(String, String),
    Numeric(Error),
    Io(io::Error),
}

impl Failure {
    fn usage(e: Error) -> Failure {
        Failure::Usage(e.name().to_string(), e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Lung(a) => cmd_lung(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(name, msg)) => {
            eprintln!("error: {name}: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: Io: {e}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage("Io".into(), format!("{}: {e}", path.display())))
}

/// Writes through `f` to a temporary file next to `path` and renames it into
/// place only when everything succeeded; standard output otherwise.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CmdResult {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            Ok(())
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            {
                let mut w = io::BufWriter::new(tmp.as_file_mut());
                f(&mut w)?;
                w.flush()?;
            }
            tmp.persist(p).map_err(|e| Failure::Io(e.error))?;
            Ok(())
        }
    }
}

enum BandwidthChoice {
    Fixed(f64),
    Select(Selector),
}

fn parse_bandwidth(s: &str) -> Result<BandwidthChoice, Failure> {
    if let Ok(h) = s.parse::<f64>() {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::usage(Error::NonPositiveBandwidth(h)));
        }
        return Ok(BandwidthChoice::Fixed(h));
    }
    s.parse::<Selector>().map(BandwidthChoice::Select).map_err(Failure::usage)
}

fn selector_bandwidth(sel: Selector, s: &WeightedSample, cfg: &LscvConfig, seed: Selector) -> Result<f64, Error> {
    let r = match sel {
        Selector::NormalRef => h_normal_ref(s)?,
        Selector::ExpRef => h_exp_ref(s)?,
        Selector::PlugIn => h_plugin(s.x())?,
        Selector::Lscv => {
            let h0 = selector_bandwidth(seed, s, cfg, Selector::NormalRef)?;
            let r = lscv_search(s, h0, cfg)?;
            if let Some(t) = &r.trace {
                eprintln!(
                    "lscv: seed h0={h0}, {} rounds, final spacing {}{}",
                    t.rounds.len(),
                    t.final_spacing(),
                    if t.saturated { ", minimum on an interval edge" } else { "" }
                );
            }
            r
        }
        Selector::KpLocal => unreachable!("per-point bandwidths are handled by the kp estimator"),
    };
    Ok(r.h)
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    // validation, all before any numerical work
    let kernel: Kernel = a.kernel.parse().map_err(Failure::usage)?;
    let bandwidth = parse_bandwidth(&a.bandwidth)?;
    let seed_selector: Selector = a.lscv_seed_selector.parse().map_err(Failure::usage)?;
    if matches!(seed_selector, Selector::Lscv | Selector::KpLocal) {
        return Err(Failure::usage(Error::InvalidParameter("LSCV seed must be nrd, exp or dpi".into())));
    }
    let mut estimator = a.estimator.unwrap_or(if a.adaptive.is_some() { EstimatorArg::Awkde } else { EstimatorArg::Wkde });
    if matches!(bandwidth, BandwidthChoice::Select(Selector::KpLocal)) {
        match a.estimator {
            None | Some(EstimatorArg::Kp) => estimator = EstimatorArg::Kp,
            Some(_) => {
                return Err(Failure::usage(Error::InvalidParameter(
                    "the kp bandwidth is only available with --estimator kp".into(),
                )))
            }
        }
    }
    let alpha = match (estimator, a.adaptive) {
        (EstimatorArg::Awkde, alpha) => alpha.unwrap_or(0.3),
        (_, Some(_)) => {
            return Err(Failure::usage(Error::InvalidParameter("--adaptive requires the awkde estimator".into())))
        }
        (_, None) => 0.0,
    };
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Failure::usage(Error::InvalidParameter(format!("sensitivity {alpha} outside [0, 1]"))));
    }
    let uses_lscv = matches!(bandwidth, BandwidthChoice::Select(Selector::Lscv));
    if uses_lscv && kernel != Kernel::Gaussian {
        return Err(Failure::usage(Error::UnsupportedKernel));
    }
    if estimator == EstimatorArg::Kp && kernel != Kernel::Gaussian {
        return Err(Failure::usage(Error::UnsupportedKernel));
    }
    let dist: Option<TargetDist> = a.dist.as_deref().map(str::parse).transpose().map_err(Failure::usage)?;
    let biasing: Option<Biasing> =
        a.bias_fn.as_deref().map(|b| parse_biasing(b, dist.as_ref())).transpose().map_err(Failure::usage)?;
    let needs_bias = matches!(estimator, EstimatorArg::Fb | EstimatorArg::Fwu) || a.weights == Some(WeightsArg::Biased);
    if needs_bias && biasing.is_none() {
        return Err(Failure::usage(Error::InvalidParameter("biased estimation needs --bias-fn".into())));
    }

    let text = read_input(&a.input)?;
    let csv = parse_sample_csv(&text).map_err(Failure::usage)?;
    let has_delta = csv.delta.is_some();
    if estimator == EstimatorArg::Kp && !has_delta {
        return Err(Failure::usage(Error::InvalidParameter("the kp estimator needs a delta column".into())));
    }
    let weights = a.weights.unwrap_or(if csv.w.is_some() {
        WeightsArg::Uniform
    } else if has_delta {
        WeightsArg::Km
    } else {
        WeightsArg::Uniform
    });
    if matches!(weights, WeightsArg::Km | WeightsArg::Windowed) && !has_delta {
        return Err(Failure::usage(Error::InvalidParameter("censoring weights need a delta column".into())));
    }
    let residuals: Option<ResidualModel> = match (&a.residual_model, weights) {
        (Some(p), _) => Some(parse_residual_model(&read_input(p)?).map_err(Failure::usage)?),
        (None, WeightsArg::Windowed) => {
            return Err(Failure::usage(Error::InvalidParameter("windowed weights need --residual-model".into())))
        }
        (None, _) => None,
    };
    let explicit_w = csv.w.is_some() && a.weights.is_none();
    let base = csv.into_sample().map_err(Failure::usage)?;

    // numerical work
    let run = || -> Result<DensityEstimate, Error> {
        let s = if explicit_w {
            base.clone()
        } else {
            match weights {
                WeightsArg::Uniform => base.reweighted(vec![1.0 / base.len() as f64; base.len()])?,
                WeightsArg::Km => base.reweighted(km_weights(base.x(), &base.events())?)?,
                WeightsArg::Biased => {
                    let b = biasing.expect("checked above");
                    base.reweighted(biased_weights(base.x(), |v| b.eval(v))?)?
                }
                WeightsArg::Windowed => {
                    let events = base.events();
                    let censored: Vec<f64> =
                        base.x().iter().zip(&events).filter(|(_, e)| !**e).map(|(x, _)| *x).collect();
                    let r = residuals.as_ref().expect("checked above").residuals(&censored)?;
                    base.reweighted(redistribute_windowed(base.x(), &events, &r)?)?
                }
            }
        };
        let lscv_cfg = LscvConfig {
            rounds: a.lscv_rounds,
            grid_n: a.lscv_grid,
            variant: if a.lscv_strict { LscvVariant::Strict } else { LscvVariant::Corrected },
        };
        let h = match bandwidth {
            BandwidthChoice::Fixed(h) => h,
            BandwidthChoice::Select(Selector::KpLocal) => f64::NAN,
            BandwidthChoice::Select(sel) => selector_bandwidth(sel, &s, &lscv_cfg, seed_selector)?,
        };
        let reach = if h.is_finite() { h } else { s.weighted_sd().max(f64::MIN_POSITIVE) };
        let bounded = a.boundary == BoundaryArg::Reflect;
        let lo = a.grid_min.unwrap_or(if bounded { 0.0 } else { s.x()[0] - 4.0 * reach });
        let hi = a.grid_max.unwrap_or(s.x()[s.len() - 1] + 4.0 * reach);
        let grid = Grid::linspace(lo, hi, a.grid_n)?;
        eprintln!("n={} total_weight={} grid=[{lo}, {hi}] x {}", s.len(), s.total_weight(), a.grid_n);
        if h.is_finite() {
            eprintln!("bandwidth: {} ({})", h, a.bandwidth);
        }
        let est = match estimator {
            EstimatorArg::Wkde if bounded => reflect_boundary(&s, h, &grid, kernel)?,
            EstimatorArg::Wkde => wkde_eval(&s, h, &grid, kernel)?,
            EstimatorArg::Awkde => awkde_eval(&s, h, alpha, &grid, kernel)?,
            EstimatorArg::Kp => kp_estimate(&s, &grid)?,
            EstimatorArg::Fb => biased_fb(s.x(), &biasing.expect("checked"), h, &grid, kernel)?,
            EstimatorArg::Fwu => {
                let norm = if a.fwu_strict { FwuNormalization::Strict } else { FwuNormalization::InverseSum };
                biased_fwu(s.x(), &biasing.expect("checked"), h, &grid, kernel, norm)?
            }
        };
        if bounded && estimator != EstimatorArg::Wkde {
            eprintln!("warning: --boundary reflect applies to the wkde estimator only");
        }
        Ok(est)
    };
    let est = run().map_err(Failure::Numeric)?;
    eprintln!("estimator: {} integral={:.6}", est.estimator.name(), est.integral());
    let survival = a.survival.then(|| survival_from_density(&est));
    emit(a.out.as_deref(), |w| write_density_csv(w, &est, survival.as_ref()))
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let scenario = Scenario::from_table(&a.table)
        .ok_or_else(|| Failure::Usage("UnknownTable".into(), format!("no table `{}`", a.table)))?;
    let seed = a.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s} (drawn from entropy)");
        s
    });
    let mut cfg = ExperimentConfig::new(scenario, a.reps, seed);
    if let Some(sizes) = a.sizes {
        cfg.sizes = sizes;
    }
    if let Some(m) = a.grid_n {
        cfg.grid_points = m;
    }
    cfg.censoring_rate = a.cens_rate;
    cfg.threads = a.threads;
    if cfg.reps < 1 || cfg.threads == Some(0) || cfg.sizes.iter().any(|n| *n < 5) || !(cfg.censoring_rate > 0.0 && cfg.censoring_rate < 1.0) {
        return Err(Failure::usage(Error::InvalidParameter(
            "need reps >= 1, threads >= 1, sizes >= 5 and 0 < cens-rate < 1".into(),
        )));
    }
    eprintln!("table {} ({}), reps={}, seed={seed}", scenario.table(), scenario.name(), cfg.reps);
    let result = run_experiment_with_progress(&cfg, &mut |label, n| eprintln!("done: {label} n={n}"))
        .map_err(Failure::Numeric)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    emit(a.out.as_deref(), |w| write_results_csv(w, &result))
}

fn cmd_lung(a: LungArgs) -> CmdResult {
    let modes: Vec<LungMode> = if a.mode == "all" {
        LungMode::ALL.to_vec()
    } else {
        vec![a.mode.parse().map_err(Failure::usage)?]
    };
    if let Some(h) = a.bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::usage(Error::NonPositiveBandwidth(h)));
        }
    }
    let records = match &a.input {
        Some(p) => parse_lung_csv(&read_input(p)?).map_err(Failure::usage)?,
        None => lung::bundled(),
    };
    let residual_model = match &a.residual_model {
        Some(p) => Some(parse_residual_model(&read_input(p)?).map_err(Failure::usage)?),
        None => None,
    };
    let opts = LungOptions { grid_n: a.grid_n, residual_model, bandwidth: a.bandwidth };
    let mut results = Vec::new();
    for m in modes {
        let r = run_lung_pipeline(&records, m, &opts).map_err(Failure::Numeric)?;
        if let Some(f) = &r.fit {
            eprintln!("residual model: beta0={:.5} beta1={:.5} ({} points, excluded {:?})", f.beta0, f.beta1, f.n_used, f.excluded);
        }
        eprintln!("{}: h={:.5} integral={:.6}", m, r.h, r.density.integral());
        results.push(r);
    }
    if let [single] = results.as_slice() {
        return emit(a.out.as_deref(), |w| write_density_csv(w, &single.density, Some(&single.survival)));
    }
    emit(a.out.as_deref(), |w| {
        write!(w, "grid")?;
        for r in &results {
            write!(w, ",f_{0},S_{0}", r.mode)?;
        }
        writeln!(w)?;
        for (k, g) in results[0].density.grid.iter().enumerate() {
            write!(w, "{g}")?;
            for r in &results {
                write!(w, ",{},{}", r.density.f[k], r.survival.s[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}
