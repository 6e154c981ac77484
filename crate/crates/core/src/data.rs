//! Synthetic regression data: certified smooth targets, sub-Gaussian noise,
//! seeded sampling, Monte-Carlo L2 error estimation, and the dataset file
//! format.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::net::{augment_input, nu, Architecture, Matrix, NetKind, NetworkParams};
use crate::seeds::{stream_seed, tag};
use crate::{Error, Result};

/// Target families the generator knows how to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetFamily {
    HolderAbs,
    CosineMix,
    TeacherNetwork,
}

impl std::fmt::Display for TargetFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TargetFamily::HolderAbs => "holder_abs",
            TargetFamily::CosineMix => "cosine_mix",
            TargetFamily::TeacherNetwork => "teacher_network",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for TargetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holder_abs" => Ok(TargetFamily::HolderAbs),
            "cosine_mix" => Ok(TargetFamily::CosineMix),
            "teacher_network" => Ok(TargetFamily::TeacherNetwork),
            other => Err(Error::Parse(format!("unknown target family '{other}'"))),
        }
    }
}

/// A regression target with a certified smoothness class membership.
#[derive(Debug, Clone)]
pub enum TargetFunction {
    /// `g0(x) = c |x_1 - 1/2|^beta`, `beta` in (0, 1]. Its Holder seminorm
    /// equals `c` and its sup norm is `c 2^{-beta}`, so `c = F / (1 + 2^{-beta})`
    /// puts it in the radius-F ball.
    HolderAbs { beta: f64, amplitude: f64, radius: f64 },
    /// `g0(x) = a cos(2 pi x_1)` with
    /// `a = F / sum_{k=0}^{floor(beta)+1} (2 pi)^k`; every derivative of
    /// order `k <= floor(beta)` is bounded by `a (2 pi)^k` and the seminorm
    /// term is covered by the extra `(2 pi)^{floor(beta)+1}` summand.
    CosineMix { beta: f64, amplitude: f64, radius: f64 },
    /// A fixed small modified network, output-scaled to `|g0| <= F`.
    /// Evaluated with an appended constant-one input coordinate.
    Teacher {
        params: NetworkParams,
        beta: f64,
        radius: f64,
    },
}

impl TargetFunction {
    pub fn family(&self) -> TargetFamily {
        match self {
            TargetFunction::HolderAbs { .. } => TargetFamily::HolderAbs,
            TargetFunction::CosineMix { .. } => TargetFamily::CosineMix,
            TargetFunction::Teacher { .. } => TargetFamily::TeacherNetwork,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            TargetFunction::HolderAbs { beta, .. }
            | TargetFunction::CosineMix { beta, .. }
            | TargetFunction::Teacher { beta, .. } => *beta,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            TargetFunction::HolderAbs { radius, .. }
            | TargetFunction::CosineMix { radius, .. }
            | TargetFunction::Teacher { radius, .. } => *radius,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TargetFunction::HolderAbs { beta, amplitude, .. } => {
                amplitude * (x[0] - 0.5).abs().powf(*beta)
            }
            TargetFunction::CosineMix { amplitude, .. } => {
                amplitude * (2.0 * std::f64::consts::PI * x[0]).cos()
            }
            TargetFunction::Teacher { params, .. } => {
                let z = augment_input(x);
                params.forward(&z).expect("teacher evaluation")
            }
        }
    }
}

/// Builds a certified member of the radius-`f` smoothness ball.
pub fn make_target(
    family: TargetFamily,
    beta: f64,
    f: f64,
    d: usize,
    seed: u64,
) -> Result<TargetFunction> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius F must be positive, got {f}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    match family {
        TargetFamily::HolderAbs => {
            if beta > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "holder_abs requires beta in (0, 1], got {beta}"
                )));
            }
            let amplitude = f / (1.0 + 2f64.powf(-beta));
            Ok(TargetFunction::HolderAbs {
                beta,
                amplitude,
                radius: f,
            })
        }
        TargetFamily::CosineMix => {
            let two_pi = 2.0 * std::f64::consts::PI;
            let terms = beta.floor() as i32 + 2; // k = 0..=floor(beta)+1
            let sum: f64 = (0..terms).map(|k| two_pi.powi(k)).sum();
            Ok(TargetFunction::CosineMix {
                beta,
                amplitude: f / sum,
                radius: f,
            })
        }
        TargetFamily::TeacherNetwork => {
            let params = random_teacher(d, f, stream_seed(seed, tag::TARGET))?;
            Ok(TargetFunction::Teacher {
                params,
                beta,
                radius: f,
            })
        }
    }
}

/// Depth-1, width-4 modified network over the augmented input `(x, 1)`.
/// Each hidden unit gets an effective slope in `+-[0.6, 1.6]` along a random
/// coordinate with its kink placed inside the cube (so every unit is active
/// on a proper sub-region and the function has genuine shape variation);
/// the output is scaled so that `|g| <= f`, checked on a 1e5-point scan.
fn random_teacher(d: usize, f: f64, seed: u64) -> Result<NetworkParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 4;
    let arch = Architecture::uniform(d + 1, 1, width)?;
    let mut hidden = Matrix::zeros(width, d + 1);
    for r in 0..width {
        let coord = (rng.random::<u64>() % d as u64) as usize;
        let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
        let slope = sign * (0.6 + rng.random::<f64>());
        let kink = 0.15 + 0.7 * rng.random::<f64>();
        hidden.set(r, coord, nu(slope));
        hidden.set(r, d, nu(-slope * kink));
    }
    let mut output = Matrix::zeros(1, width);
    for v in output.data_mut() {
        let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
        *v = sign * (0.6 + 0.8 * rng.random::<f64>());
    }
    let mut params = NetworkParams::new(NetKind::Modified, arch, vec![hidden, output], None)?;

    let mut max_abs = 0.0f64;
    let mut x = vec![0.0; d];
    for _ in 0..100_000 {
        for xi in x.iter_mut() {
            *xi = rng.random::<f64>();
        }
        let y = params.forward(&augment_input(&x))?;
        max_abs = max_abs.max(y.abs());
    }
    // aim for the middle of the ball rather than its boundary
    if max_abs > 0.0 {
        let scale = 0.6 * f / max_abs;
        let depth = params.depth();
        let out = params.layers()[depth].map(|v| v * scale);
        let mut layers = params.layers().to_vec();
        layers[depth] = out;
        params = NetworkParams::new(NetKind::Modified, params.arch().clone(), layers, None)?;
    }
    Ok(params)
}

/// Noise distribution; both kinds satisfy the sub-Gaussian moment bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    BoundedUniform,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseKind::Gaussian => write!(f, "gaussian"),
            NoiseKind::BoundedUniform => write!(f, "bounded_uniform"),
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "bounded_uniform" => Ok(NoiseKind::BoundedUniform),
            other => Err(Error::Parse(format!("unknown noise kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self { kind, sigma })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::Gaussian => {
                Normal::new(0.0, self.sigma).expect("valid sigma").sample(rng)
            }
            NoiseKind::BoundedUniform => {
                // uniform on [-sigma sqrt(3), sigma sqrt(3)]: variance sigma^2
                let a = self.sigma * 3f64.sqrt();
                rng.random::<f64>() * 2.0 * a - a
            }
        }
    }

    /// Sub-Gaussian proxy variance: `sigma^2` for the Gaussian (equality in
    /// the moment bound), Hoeffding's `a^2 = 3 sigma^2` for the bounded
    /// uniform on `[-a, a]`. Reported, not assumed equal to `sigma^2`.
    pub fn sub_gaussian_proxy(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => self.sigma * self.sigma,
            NoiseKind::BoundedUniform => 3.0 * self.sigma * self.sigma,
        }
    }
}

/// Generation metadata, mirrored in the dataset file header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub family: TargetFamily,
    pub beta: f64,
    pub radius: f64,
    pub sigma: f64,
}

/// `n` input points in the unit cube with scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    inputs: Vec<f64>,
    responses: Vec<f64>,
    n: usize,
    d: usize,
    pub provenance: Provenance,
}

impl RegressionDataset {
    pub fn from_raw(
        inputs: Vec<f64>,
        responses: Vec<f64>,
        d: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if d == 0 || !inputs.len().is_multiple_of(d) {
            return Err(Error::ShapeMismatch(format!(
                "inputs length {} is not a multiple of d = {d}",
                inputs.len()
            )));
        }
        let n = inputs.len() / d;
        if responses.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} inputs but {} responses",
                responses.len()
            )));
        }
        if !inputs.iter().chain(&responses).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset entry".into()));
        }
        Ok(Self {
            inputs,
            responses,
            n,
            d,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

/// Draws `(X_i, Y_i)` with `X_i` iid uniform on the unit cube and
/// `Y_i = g0(X_i) + eps_i`. Inputs and noise use split streams, so changing
/// `sigma` (or the noise kind) never changes the X draw for a fixed seed.
pub fn sample_dataset(
    target: &TargetFunction,
    noise: &NoiseModel,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<RegressionDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng_x = ChaCha8Rng::seed_from_u64(stream_seed(seed, tag::INPUTS));
    let mut rng_e = ChaCha8Rng::seed_from_u64(stream_seed(seed, tag::NOISE));
    let mut inputs = Vec::with_capacity(n * d);
    let mut responses = Vec::with_capacity(n);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for xi in x.iter_mut() {
            *xi = rng_x.random::<f64>();
        }
        inputs.extend_from_slice(&x);
        responses.push(target.eval(&x) + noise.sample(&mut rng_e));
    }
    RegressionDataset::from_raw(
        inputs,
        responses,
        d,
        Provenance {
            n,
            d,
            seed,
            family: target.family(),
            beta: target.beta(),
            radius: target.radius(),
            sigma: noise.sigma,
        },
    )
}

/// Monte-Carlo estimate with a standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// `(1/m) sum (g_hat(X'_j) - g0(X'_j))^2` over `m` fresh draws from the
/// uniform design, plus a standard-error estimate.
pub fn mc_l2_error(
    g_hat: impl Fn(&[f64]) -> f64,
    target: &TargetFunction,
    m: usize,
    d: usize,
    seed: u64,
) -> McEstimate {
    mc_l2_error_with_sampler(g_hat, target, m, seed, |rng, x| {
        for xi in x.iter_mut() {
            *xi = rng.random::<f64>();
        }
    }, d)
}

/// As [`mc_l2_error`] but with a caller-supplied design sampler filling each
/// point in place (the theory holds for an arbitrary design on the cube).
pub fn mc_l2_error_with_sampler(
    g_hat: impl Fn(&[f64]) -> f64,
    target: &TargetFunction,
    m: usize,
    seed: u64,
    mut sampler: impl FnMut(&mut ChaCha8Rng, &mut [f64]),
    d: usize,
) -> McEstimate {
    assert!(m >= 1, "mc_l2_error needs m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, tag::TEST));
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..m {
        sampler(&mut rng, &mut x);
        let e = g_hat(&x) - target.eval(&x);
        let sq = e * e;
        sum += sq;
        sum_sq += sq * sq;
    }
    let mean = sum / m as f64;
    let variance = (sum_sq / m as f64 - mean * mean).max(0.0);
    McEstimate {
        mean,
        std_error: (variance / m as f64).sqrt(),
    }
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits round-trip any f64
    format!("{v:.16e}")
}

/// Writes the dataset file: a header line `n d seed family beta F sigma`,
/// then one line `x_1 ... x_d y` per observation, 17 significant digits.
pub fn write_dataset(dataset: &RegressionDataset, path: impl AsRef<Path>) -> Result<()> {
    let p = &dataset.provenance;
    let mut out = String::new();
    writeln!(
        out,
        "{} {} {} {} {} {} {}",
        p.n,
        p.d,
        p.seed,
        p.family,
        fmt_f64(p.beta),
        fmt_f64(p.radius),
        fmt_f64(p.sigma)
    )
    .expect("string write");
    for i in 0..dataset.len() {
        for xi in dataset.input(i) {
            out.push_str(&fmt_f64(*xi));
            out.push(' ');
        }
        out.push_str(&fmt_f64(dataset.response(i)));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<RegressionDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<RegressionDataset> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(Error::Parse(format!(
            "dataset header needs 7 fields (n d seed family beta F sigma), got {}",
            fields.len()
        )));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad n '{}'", fields[0])))?;
    let d: usize = fields[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad d '{}'", fields[1])))?;
    let seed: u64 = fields[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad seed '{}'", fields[2])))?;
    let family: TargetFamily = fields[3].parse()?;
    let parse_f = |s: &str, name: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("bad {name} '{s}'")))
    };
    let beta = parse_f(fields[4], "beta")?;
    let radius = parse_f(fields[5], "F")?;
    let sigma = parse_f(fields[6], "sigma")?;

    let mut inputs = Vec::with_capacity(n * d);
    let mut responses = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != d + 1 {
            return Err(Error::Parse(format!(
                "row {idx}: expected {} values, got {}",
                d + 1,
                vals.len()
            )));
        }
        for v in &vals[..d] {
            inputs.push(parse_f(v, "x")?);
        }
        responses.push(parse_f(vals[d], "y")?);
    }
    if responses.len() != n {
        return Err(Error::Parse(format!(
            "header claims n = {n} but file has {} rows",
            responses.len()
        )));
    }
    RegressionDataset::from_raw(
        inputs,
        responses,
        d,
        Provenance {
            n,
            d,
            seed,
            family,
            beta,
            radius,
            sigma,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_abs_values() {
        // beta = 1, F = 1.5 gives amplitude exactly 1
        let g = make_target(TargetFamily::HolderAbs, 1.0, 1.5, 1, 0).unwrap();
        match g {
            TargetFunction::HolderAbs { amplitude, .. } => assert_eq!(amplitude, 1.0),
            _ => unreachable!(),
        }
        assert_eq!(g.eval(&[0.0]), 0.5);
        assert_eq!(g.eval(&[0.5]), 0.0);
        assert_eq!(g.eval(&[1.0]), 0.5);

        assert!(make_target(TargetFamily::HolderAbs, 2.0, 1.0, 1, 0).is_err());
    }

    #[test]
    fn holder_abs_holder_inequality() {
        let beta = 0.7;
        let g = make_target(TargetFamily::HolderAbs, beta, 1.0, 2, 0).unwrap();
        let c = match g {
            TargetFunction::HolderAbs { amplitude, .. } => amplitude,
            _ => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let y = [rng.random::<f64>(), rng.random::<f64>()];
            let lhs = (g.eval(&x) - g.eval(&y)).abs();
            let dist = (x[0] - y[0]).abs().max((x[1] - y[1]).abs());
            assert!(lhs <= c * dist.powf(beta));
        }
    }

    #[test]
    fn cosine_amplitude_golden() {
        let g = make_target(TargetFamily::CosineMix, 2.0, 10.0, 1, 0).unwrap();
        let a = match g {
            TargetFunction::CosineMix { amplitude, .. } => amplitude,
            _ => unreachable!(),
        };
        // 10 / (1 + 2pi + (2pi)^2 + (2pi)^3)
        assert!((a - 0.033920).abs() < 1e-5, "{a}");
    }

    #[test]
    fn cosine_derivative_bounds() {
        let beta = 2.0;
        let g = make_target(TargetFamily::CosineMix, beta, 10.0, 1, 0).unwrap();
        let a = match g {
            TargetFunction::CosineMix { amplitude, .. } => amplitude,
            _ => unreachable!(),
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let h = 1e-5;
        let eval = |x: f64| g.eval(&[x]);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let d1 = (eval(x + h) - eval(x - h)) / (2.0 * h);
            assert!(d1.abs() <= a * two_pi + 1e-6);
            let d2 = (eval(x + h) - 2.0 * eval(x) + eval(x - h)) / (h * h);
            assert!(d2.abs() <= a * two_pi * two_pi + 1e-4);
        }
    }

    #[test]
    fn teacher_bounded_by_radius() {
        let g = make_target(TargetFamily::TeacherNetwork, 1.0, 1.0, 2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut max_abs = 0.0f64;
        for _ in 0..100_000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            max_abs = max_abs.max(g.eval(&x).abs());
        }
        assert!(max_abs <= 1.0, "{max_abs}");
        assert!(max_abs > 0.0);
    }

    #[test]
    fn noiseless_and_deterministic_sampling() {
        let g = make_target(TargetFamily::HolderAbs, 1.0, 1.5, 2, 0).unwrap();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 0.0).unwrap();
        let a = sample_dataset(&g, &noise, 50, 2, 11).unwrap();
        let b = sample_dataset(&g, &noise, 50, 2, 11).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            assert_eq!(a.response(i), g.eval(a.input(i)));
            assert!(a.input(i).iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn sigma_does_not_move_the_design() {
        let g = make_target(TargetFamily::HolderAbs, 1.0, 1.5, 1, 0).unwrap();
        let quiet = NoiseModel::new(NoiseKind::Gaussian, 0.1).unwrap();
        let loud = NoiseModel::new(NoiseKind::Gaussian, 2.0).unwrap();
        let a = sample_dataset(&g, &quiet, 30, 1, 5).unwrap();
        let b = sample_dataset(&g, &loud, 30, 1, 5).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.input(i), b.input(i));
        }
        assert_ne!(a.responses(), b.responses());
    }

    #[test]
    fn gaussian_noise_moments() {
        let g = make_target(TargetFamily::HolderAbs, 1.0, 1.5, 1, 0).unwrap();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 1.0).unwrap();
        let n = 1_000_000;
        let data = sample_dataset(&g, &noise, n, 1, 123).unwrap();
        let eps: Vec<f64> = (0..n)
            .map(|i| data.response(i) - g.eval(data.input(i)))
            .collect();
        let mean = eps.iter().sum::<f64>() / n as f64;
        let var = eps.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.004, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn bounded_uniform_proxy() {
        let noise = NoiseModel::new(NoiseKind::BoundedUniform, 0.5).unwrap();
        assert_eq!(noise.sub_gaussian_proxy(), 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bound = 0.5 * 3f64.sqrt();
        for _ in 0..10_000 {
            let e = noise.sample(&mut rng);
            assert!(e.abs() <= bound);
        }
    }

    #[test]
    fn mc_l2_examples() {
        let g = make_target(TargetFamily::HolderAbs, 1.0, 1.5, 1, 0).unwrap();
        let same = mc_l2_error(|x| g.eval(x), &g, 1000, 1, 3);
        assert_eq!(same.mean, 0.0);

        let shifted = mc_l2_error(|x| g.eval(x) + 1.0, &g, 1000, 1, 3);
        assert_eq!(shifted.mean, 1.0);
        assert_eq!(shifted.std_error, 0.0);

        // E[x^2] = 1/3 under the uniform design
        let zero = make_target(TargetFamily::CosineMix, 1.0, 1e-300, 1, 0).unwrap();
        let est = mc_l2_error(|x| x[0], &zero, 100_000, 1, 3);
        assert!((est.mean - 1.0 / 3.0).abs() < 0.01, "{}", est.mean);
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn dataset_roundtrip() {
        let dir = std::env::temp_dir().join(format!("modrelu-data-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.txt");

        let g = make_target(TargetFamily::HolderAbs, 0.5, 1.0, 3, 0).unwrap();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 0.3).unwrap();
        let data = sample_dataset(&g, &noise, 40, 3, 77).unwrap();
        write_dataset(&data, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(data, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dataset_parse_errors() {
        assert!(parse_dataset("").is_err());
        assert!(parse_dataset("1 2 3\n").is_err());
        assert!(parse_dataset("2 1 0 holder_abs 1 1 0\n0.5 1.0\n").is_err());
        assert!(parse_dataset("1 1 0 nonsense 1 1 0\n0.5 1.0\n").is_err());
        assert!(parse_dataset("1 2 0 holder_abs 1 1 0\n0.5 1.0\n").is_err());
    }
}
