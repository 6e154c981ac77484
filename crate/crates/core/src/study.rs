//! Rate-study driver: a seeded grid over sample sizes with replicated
//! train/evaluate cells, slope fitting against the minimax exponent, and
//! CSV/SVG report emission.
//!
//! Cells are independent jobs; the driver may run them on a worker pool and
//! aggregates after a deterministic sort, so thread count never changes any
//! record. Per-cell seeds are a pure function of `(base_seed, n, replicate)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::bounds::{architecture_for, tuning_lambda, ProblemSpec};
use crate::data::{
    make_target, mc_l2_error, sample_dataset, NoiseKind, NoiseModel, TargetFamily,
};
use crate::net::{augment_input, Architecture, NetKind};
use crate::seeds::{cell_seed, stream_seed, tag};
use crate::train::{mse, train, PenaltyKind, PenaltySpec, TrainConfig};
use crate::{Error, Result};

/// How the per-cell penalty coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// `log2^6(n) / n`, the theoretical coefficient.
    Theoretical,
    /// `factor * log2^6(n) / n`.
    Scaled(f64),
    /// A fixed value for every n.
    Fixed(f64),
}

impl LambdaMode {
    pub fn resolve(&self, n: u64) -> f64 {
        match self {
            LambdaMode::Theoretical => tuning_lambda(n),
            LambdaMode::Scaled(factor) => factor * tuning_lambda(n),
            LambdaMode::Fixed(value) => *value,
        }
    }
}

/// How the per-cell architecture is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchitectureMode {
    /// The theoretical schedule (depth and width grow with n).
    Theoretical,
    /// A fixed practical architecture.
    Fixed { depth: usize, width: usize },
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub d: usize,
    pub beta: f64,
    /// Smoothness-ball radius F; trained models are clipped to `[-F, F]`.
    pub radius: f64,
    pub sigma: f64,
    pub family: TargetFamily,
    pub noise: NoiseKind,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub penalty: PenaltyKind,
    pub lambda_mode: LambdaMode,
    pub architecture: ArchitectureMode,
    /// Append a constant-one input coordinate (bias capacity).
    pub augment: bool,
    pub step_size: f64,
    pub max_epochs: usize,
    /// `None` = full batch.
    pub batch_size: Option<usize>,
    pub init_scale: f64,
    /// Monte-Carlo test points per cell.
    pub test_m: usize,
    pub base_seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter("f must be positive".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n_grid must be nonempty".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "n_grid must be strictly increasing".into(),
            ));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::InvalidParameter("n_grid entries must be >= 2".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.test_m == 0 {
            return Err(Error::InvalidParameter("test_m must be >= 1".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter("batch must be >= 1 or full".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::InvalidParameter("init_scale must be positive".into()));
        }
        if let LambdaMode::Scaled(v) | LambdaMode::Fixed(v) = self.lambda_mode {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(
                    "lambda factor/value must be nonnegative".into(),
                ));
            }
        }
        if let ArchitectureMode::Fixed { depth, width } = self.architecture {
            if depth == 0 || width == 0 {
                return Err(Error::InvalidParameter(
                    "fixed architecture needs depth >= 1 and width >= 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Theoretical minimax exponent `-2 beta / (2 beta + d)`.
    pub fn theoretical_exponent(&self) -> f64 {
        -2.0 * self.beta / (2.0 * self.beta + self.d as f64)
    }

    fn resolve_architecture(&self, n: u64) -> Result<Architecture> {
        let input_dim = self.d + usize::from(self.augment);
        match self.architecture {
            ArchitectureMode::Fixed { depth, width } => {
                Architecture::uniform(input_dim, depth, width)
            }
            ArchitectureMode::Theoretical => {
                let spec = ProblemSpec::new(n, self.d as u32, self.beta, self.radius, self.sigma)?;
                let arch = architecture_for(&spec)?;
                let mut widths = arch.widths().to_vec();
                widths[0] = input_dim;
                Architecture::new(widths)
            }
        }
    }
}

/// One (n, replicate) outcome. Diverged cells carry NaN metrics.
#[derive(Debug, Clone, Copy)]
pub struct CellRecord {
    pub n: u64,
    pub replicate: usize,
    pub seed: u64,
    pub lambda: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    pub std_error: f64,
    pub effective_nonzeros: usize,
    pub l1: f64,
    pub l2sq: f64,
    pub wall_seconds: f64,
    pub diverged: bool,
}

/// Per-n summary over replicates (diverged cells excluded).
#[derive(Debug, Clone, Copy)]
pub struct NSummary {
    pub n: u64,
    pub median_test_mse: f64,
    pub iqr_test_mse: f64,
    pub valid: usize,
}

#[derive(Debug, Clone)]
pub struct RateStudyResult {
    pub records: Vec<CellRecord>,
    pub summaries: Vec<NSummary>,
    /// `None` when fewer than two sample sizes had valid cells.
    pub fitted_slope: Option<f64>,
    pub theoretical_exponent: f64,
    pub diverged_cells: usize,
}

fn run_cell(config: &StudyConfig, target: &crate::data::TargetFunction, n: u64, replicate: usize) -> Result<CellRecord> {
    let seed = cell_seed(config.base_seed, n, replicate as u64);
    let noise = NoiseModel::new(config.noise, config.sigma)?;
    let dataset = sample_dataset(target, &noise, n as usize, config.d, seed)?;
    let lambda = self_lambda(config, n);
    let arch = config.resolve_architecture(n)?;
    let train_config = TrainConfig {
        kind: NetKind::Modified,
        arch,
        penalty: PenaltySpec::new(config.penalty, lambda)?,
        step_size: config.step_size,
        max_epochs: config.max_epochs,
        batch_size: config.batch_size,
        seed: stream_seed(seed, tag::TRAIN),
        init_scale: config.init_scale,
        clip_bound: Some(config.radius),
        keep_best_iterate: true,
    };

    let start = Instant::now();
    let trained = train(&train_config, &dataset);
    let wall_seconds = start.elapsed().as_secs_f64();

    match trained {
        Ok((model, _trace)) => {
            let train_mse = mse(&model, &dataset)?;
            let needs_augment = model.input_dim() == config.d + 1;
            let estimate = mc_l2_error(
                |x| {
                    let y = if needs_augment {
                        model.forward(&augment_input(x))
                    } else {
                        model.forward(x)
                    };
                    y.expect("trained model evaluation")
                },
                target,
                config.test_m,
                config.d,
                stream_seed(seed, tag::TEST),
            );
            Ok(CellRecord {
                n,
                replicate,
                seed,
                lambda,
                train_mse,
                test_mse: estimate.mean,
                std_error: estimate.std_error,
                effective_nonzeros: model.effective_nonzeros()?,
                l1: model.l1_norm(),
                l2sq: model.l2sq_norm(),
                wall_seconds,
                diverged: false,
            })
        }
        Err(Error::Divergence { .. }) => Ok(CellRecord {
            n,
            replicate,
            seed,
            lambda,
            train_mse: f64::NAN,
            test_mse: f64::NAN,
            std_error: f64::NAN,
            effective_nonzeros: 0,
            l1: f64::NAN,
            l2sq: f64::NAN,
            wall_seconds,
            diverged: true,
        }),
        Err(e) => Err(e),
    }
}

fn self_lambda(config: &StudyConfig, n: u64) -> f64 {
    if config.penalty == PenaltyKind::None {
        0.0
    } else {
        config.lambda_mode.resolve(n)
    }
}

/// Runs every (n, replicate) cell, aggregates medians, and fits the log-log
/// slope of median test MSE against n. Deterministic given the config;
/// cells run in parallel but aggregation is order-independent.
pub fn run_rate_study(config: &StudyConfig) -> Result<RateStudyResult> {
    config.validate()?;
    let target = make_target(
        config.family,
        config.beta,
        config.radius,
        config.d,
        stream_seed(config.base_seed, tag::TARGET),
    )?;

    let cells: Vec<(u64, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();

    let mut records = cells
        .par_iter()
        .map(|&(n, r)| run_cell(config, &target, n, r))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.n, r.replicate));

    let diverged_cells = records.iter().filter(|r| r.diverged).count();
    if diverged_cells * 2 > records.len() {
        return Err(Error::Study(format!(
            "{diverged_cells} of {} cells diverged",
            records.len()
        )));
    }

    let mut summaries = Vec::new();
    for &n in &config.n_grid {
        let mut vals: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n && !r.diverged)
            .map(|r| r.test_mse)
            .collect();
        vals.sort_by(f64::total_cmp);
        if vals.is_empty() {
            continue;
        }
        summaries.push(NSummary {
            n,
            median_test_mse: median_sorted(&vals),
            iqr_test_mse: quantile_sorted(&vals, 0.75) - quantile_sorted(&vals, 0.25),
            valid: vals.len(),
        });
    }

    let points: Vec<(f64, f64)> = summaries
        .iter()
        .filter(|s| s.median_test_mse > 0.0)
        .map(|s| ((s.n as f64).log2(), s.median_test_mse.log2()))
        .collect();
    let fitted_slope = if points.len() >= 2 {
        Some(fit_slope(&points)?)
    } else {
        None
    };

    Ok(RateStudyResult {
        records,
        summaries,
        fitted_slope,
        theoretical_exponent: config.theoretical_exponent(),
        diverged_cells,
    })
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Type-7 (linear interpolation) quantile on a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let k = sorted.len();
    if k == 1 {
        return sorted[0];
    }
    let idx = p * (k - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    Ok(sxy / sxx)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Records CSV, one row per cell, fixed column order.
pub fn records_csv(result: &RateStudyResult) -> String {
    let mut out = String::from(
        "n,replicate,seed,lambda,train_mse,test_mse,stderr,effective_nonzeros,l1,l2sq,wall_seconds\n",
    );
    for r in &result.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.replicate,
            r.seed,
            fmt_f64(r.lambda),
            fmt_f64(r.train_mse),
            fmt_f64(r.test_mse),
            fmt_f64(r.std_error),
            r.effective_nonzeros,
            fmt_f64(r.l1),
            fmt_f64(r.l2sq),
            fmt_f64(r.wall_seconds)
        )
        .expect("string write");
    }
    out
}

/// Summary CSV: per-n median and IQR of test MSE.
pub fn summary_csv(result: &RateStudyResult) -> String {
    let mut out = String::from("n,median_test_mse,iqr_test_mse\n");
    for s in &result.summaries {
        writeln!(
            out,
            "{},{},{}",
            s.n,
            fmt_f64(s.median_test_mse),
            fmt_f64(s.iqr_test_mse)
        )
        .expect("string write");
    }
    out
}

/// Static SVG log-log plot of median test MSE vs n, with a reference line of
/// the theoretical slope anchored at the first point. The reference slope is
/// recorded in the `data-reference-slope` root attribute.
pub fn plot_svg(result: &RateStudyResult) -> String {
    let pts: Vec<(f64, f64)> = result
        .summaries
        .iter()
        .map(|s| ((s.n as f64).log10(), s.median_test_mse.max(1e-300).log10()))
        .collect();
    let (width, height) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);

    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ref_line: Vec<(f64, f64)> = if pts.is_empty() {
        Vec::new()
    } else {
        let (x0, y0) = pts[0];
        vec![
            (x0, y0),
            (max_x, y0 + result.theoretical_exponent * (max_x - x0)),
        ]
    };
    let min_y = pts
        .iter()
        .chain(&ref_line)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let max_y = pts
        .iter()
        .chain(&ref_line)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let sx = (width - ml - mr) / span(min_x, max_x);
    let sy = (height - mt - mb) / span(min_y, max_y);
    let to_px = |p: (f64, f64)| -> (f64, f64) {
        (ml + (p.0 - min_x) * sx, height - mb - (p.1 - min_y) * sy)
    };

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" data-reference-slope=\"{}\" data-fitted-slope=\"{}\">",
        result.theoretical_exponent,
        result
            .fitted_slope
            .map_or_else(|| "none".to_string(), |s| s.to_string())
    )
    .expect("string write");
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">\
         median test MSE vs n (log-log); fitted slope {}, reference slope {:.4}</text>",
        ml,
        result
            .fitted_slope
            .map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}")),
        result.theoretical_exponent
    )
    .expect("string write");

    // axes
    writeln!(
        svg,
        "<path d=\"M {ml} {mt} L {ml} {} L {} {}\" stroke=\"black\" fill=\"none\"/>",
        height - mb,
        width - mr,
        height - mb
    )
    .expect("string write");
    for s in &result.summaries {
        let (px, _) = to_px(((s.n as f64).log10(), 0.0));
        writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>",
            height - mb + 18.0,
            s.n
        )
        .expect("string write");
    }
    let mut ytick = min_y.ceil();
    while ytick <= max_y {
        let (_, py) = to_px((min_x, ytick));
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{py}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">1e{ytick:.0}</text>",
            ml - 6.0
        )
        .expect("string write");
        ytick += 1.0;
    }

    if ref_line.len() == 2 {
        let (a, b) = (to_px(ref_line[0]), to_px(ref_line[1]));
        writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" \
             stroke-dasharray=\"6 3\"/>",
            a.0, a.1, b.0, b.1
        )
        .expect("string write");
    }
    if pts.len() > 1 {
        let path: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = to_px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            svg,
            "<polyline points=\"{}\" stroke=\"steelblue\" fill=\"none\" stroke-width=\"1.5\"/>",
            path.join(" ")
        )
        .expect("string write");
    }
    for &p in &pts {
        let (x, y) = to_px(p);
        writeln!(
            svg,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" fill=\"steelblue\"/>"
        )
        .expect("string write");
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">n</text>",
        ml + (width - ml - mr) / 2.0,
        height - 12.0
    )
    .expect("string write");
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub records_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub plot_svg: PathBuf,
}

/// Writes `records.csv`, `summary.csv` and `plot.svg` under `out_dir`.
pub fn write_report(result: &RateStudyResult, out_dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles {
        records_csv: dir.join("records.csv"),
        summary_csv: dir.join("summary.csv"),
        plot_svg: dir.join("plot.svg"),
    };
    std::fs::write(&files.records_csv, records_csv(result))?;
    std::fs::write(&files.summary_csv, summary_csv(result))?;
    std::fs::write(&files.plot_svg, plot_svg(result))?;
    Ok(files)
}

/// Documented config-file keys for `--help` and error messages.
pub const CONFIG_KEYS_HELP: &str = "\
rate-study config file: `key = value` lines under [section] headers,
`#` starts a comment, unknown keys are errors.

[problem]
  d         input dimension (integer >= 1)
  beta      smoothness exponent (> 0)
  f         smoothness-ball radius F (> 0); models are clipped to [-F, F]
  sigma     noise scale (>= 0)
  family    holder_abs | cosine_mix | teacher_network
  noise     gaussian | bounded_uniform        (default gaussian)

[study]
  n_grid      comma-separated, strictly increasing sample sizes
  replicates  replicates per n (integer >= 1)
  test_m      Monte-Carlo test points         (default 100000)
  base_seed   master seed                     (default 0)

[model]
  penalty      none | l1 | l2sq
  lambda_mode  theoretical | scaled:<factor> | fixed:<value>
  architecture theoretical | fixed:<depth>,<width>
  augment      true | false                   (default true)

[optimizer]
  step        gradient step size (> 0)
  epochs      epochs (integer >= 1)
  batch       full | <integer>                (default full)
  init_scale  initialization scale            (default 1.0)
";

/// Parses the flat `key = value` config format described by
/// [`CONFIG_KEYS_HELP`]. Unknown sections or keys are errors.
pub fn parse_study_config(text: &str) -> Result<StudyConfig> {
    let mut section = String::new();

    let mut d: Option<usize> = None;
    let mut beta: Option<f64> = None;
    let mut radius: Option<f64> = None;
    let mut sigma: Option<f64> = None;
    let mut family: Option<TargetFamily> = None;
    let mut noise = NoiseKind::Gaussian;
    let mut n_grid: Option<Vec<u64>> = None;
    let mut replicates: Option<usize> = None;
    let mut test_m: usize = 100_000;
    let mut base_seed: u64 = 0;
    let mut penalty: Option<PenaltyKind> = None;
    let mut lambda_mode: Option<LambdaMode> = None;
    let mut architecture: Option<ArchitectureMode> = None;
    let mut augment = true;
    let mut step_size: Option<f64> = None;
    let mut max_epochs: Option<usize> = None;
    let mut batch_size: Option<usize> = None;
    let mut init_scale: f64 = 1.0;

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if !["problem", "study", "model", "optimizer"].contains(&section.as_str()) {
                return Err(Error::Parse(format!(
                    "line {}: unknown section [{section}]",
                    line_no + 1
                )));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`", line_no + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad_key = || {
            Error::Parse(format!(
                "line {}: unknown key '{key}' in section [{section}]\n\n{CONFIG_KEYS_HELP}",
                line_no + 1
            ))
        };
        let parse_err =
            |what: &str| Error::Parse(format!("line {}: bad {what} '{value}'", line_no + 1));

        match (section.as_str(), key) {
            ("problem", "d") => d = Some(value.parse().map_err(|_| parse_err("d"))?),
            ("problem", "beta") => beta = Some(value.parse().map_err(|_| parse_err("beta"))?),
            ("problem", "f") => radius = Some(value.parse().map_err(|_| parse_err("f"))?),
            ("problem", "sigma") => sigma = Some(value.parse().map_err(|_| parse_err("sigma"))?),
            ("problem", "family") => family = Some(value.parse()?),
            ("problem", "noise") => noise = value.parse()?,
            ("study", "n_grid") => {
                let grid = value
                    .split(',')
                    .map(|v| v.trim().parse::<u64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_err("n_grid"))?;
                n_grid = Some(grid);
            }
            ("study", "replicates") => {
                replicates = Some(value.parse().map_err(|_| parse_err("replicates"))?)
            }
            ("study", "test_m") => test_m = value.parse().map_err(|_| parse_err("test_m"))?,
            ("study", "base_seed") => {
                base_seed = value.parse().map_err(|_| parse_err("base_seed"))?
            }
            ("model", "penalty") => penalty = Some(value.parse()?),
            ("model", "lambda_mode") => {
                lambda_mode = Some(parse_lambda_mode(value, line_no + 1)?)
            }
            ("model", "architecture") => {
                architecture = Some(parse_architecture_mode(value, line_no + 1)?)
            }
            ("model", "augment") => {
                augment = value.parse().map_err(|_| parse_err("augment"))?
            }
            ("optimizer", "step") => {
                step_size = Some(value.parse().map_err(|_| parse_err("step"))?)
            }
            ("optimizer", "epochs") => {
                max_epochs = Some(value.parse().map_err(|_| parse_err("epochs"))?)
            }
            ("optimizer", "batch") => {
                batch_size = if value == "full" {
                    None
                } else {
                    Some(value.parse().map_err(|_| parse_err("batch"))?)
                }
            }
            ("optimizer", "init_scale") => {
                init_scale = value.parse().map_err(|_| parse_err("init_scale"))?
            }
            _ => return Err(bad_key()),
        }
    }

    let require = |name: &str| Error::Parse(format!("missing required key '{name}'"));
    let config = StudyConfig {
        d: d.ok_or_else(|| require("problem.d"))?,
        beta: beta.ok_or_else(|| require("problem.beta"))?,
        radius: radius.ok_or_else(|| require("problem.f"))?,
        sigma: sigma.ok_or_else(|| require("problem.sigma"))?,
        family: family.ok_or_else(|| require("problem.family"))?,
        noise,
        n_grid: n_grid.ok_or_else(|| require("study.n_grid"))?,
        replicates: replicates.ok_or_else(|| require("study.replicates"))?,
        penalty: penalty.ok_or_else(|| require("model.penalty"))?,
        lambda_mode: lambda_mode.ok_or_else(|| require("model.lambda_mode"))?,
        architecture: architecture.ok_or_else(|| require("model.architecture"))?,
        augment,
        step_size: step_size.ok_or_else(|| require("optimizer.step"))?,
        max_epochs: max_epochs.ok_or_else(|| require("optimizer.epochs"))?,
        batch_size,
        init_scale,
        test_m,
        base_seed,
    };
    config.validate()?;
    Ok(config)
}

fn parse_lambda_mode(value: &str, line: usize) -> Result<LambdaMode> {
    if value == "theoretical" {
        return Ok(LambdaMode::Theoretical);
    }
    if let Some(v) = value.strip_prefix("scaled:") {
        return v
            .trim()
            .parse()
            .map(LambdaMode::Scaled)
            .map_err(|_| Error::Parse(format!("line {line}: bad scaled factor '{v}'")));
    }
    if let Some(v) = value.strip_prefix("fixed:") {
        return v
            .trim()
            .parse()
            .map(LambdaMode::Fixed)
            .map_err(|_| Error::Parse(format!("line {line}: bad fixed lambda '{v}'")));
    }
    Err(Error::Parse(format!(
        "line {line}: lambda_mode must be theoretical, scaled:<x> or fixed:<x>, got '{value}'"
    )))
}

fn parse_architecture_mode(value: &str, line: usize) -> Result<ArchitectureMode> {
    if value == "theoretical" {
        return Ok(ArchitectureMode::Theoretical);
    }
    if let Some(v) = value.strip_prefix("fixed:") {
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() == 2 {
            if let (Ok(depth), Ok(width)) = (parts[0].parse(), parts[1].parse()) {
                return Ok(ArchitectureMode::Fixed { depth, width });
            }
        }
        return Err(Error::Parse(format!(
            "line {line}: fixed architecture must be fixed:<depth>,<width>, got '{v}'"
        )));
    }
    Err(Error::Parse(format!(
        "line {line}: architecture must be theoretical or fixed:<depth>,<width>, got '{value}'"
    )))
}
