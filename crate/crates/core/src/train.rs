//! Penalized empirical risk minimization over modified (and plain) networks:
//! objective, exact reverse-mode gradients, proximal / weight-decay steps,
//! the descent loop, and a finite-difference gradient check.
//!
//! The optimizer is plain (prox-)gradient descent with a constant step; runs
//! are sequential and bit-reproducible for a fixed seed. The l1 penalty is
//! handled by a soft-threshold prox after each gradient step and is excluded
//! from the returned gradient unless subgradient mode is requested; the
//! squared-l2 penalty contributes `2 lambda V_i` to the gradient.
//!
//! Architectures whose input width is `d + 1` for a `d`-dimensional dataset
//! are fed the augmented input `(x, 1)` automatically.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RegressionDataset;
use crate::net::{nu, relu_prime, Architecture, Matrix, NetKind, NetworkParams};
use crate::seeds::{stream_seed, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    None,
    L1,
    L2Sq,
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PenaltyKind::None => write!(f, "none"),
            PenaltyKind::L1 => write!(f, "l1"),
            PenaltyKind::L2Sq => write!(f, "l2sq"),
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PenaltyKind::None),
            "l1" => Ok(PenaltyKind::L1),
            "l2sq" | "l2" => Ok(PenaltyKind::L2Sq),
            other => Err(Error::Parse(format!("unknown penalty '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn none() -> Self {
        Self {
            kind: PenaltyKind::None,
            lambda: 0.0,
        }
    }

    pub fn new(kind: PenaltyKind, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    /// Penalty value at `params`: `lambda |g|_1`, `lambda |g|_2^2`, or 0.
    pub fn value(&self, params: &NetworkParams) -> f64 {
        match self.kind {
            PenaltyKind::None => 0.0,
            PenaltyKind::L1 => self.lambda * params.l1_norm(),
            PenaltyKind::L2Sq => self.lambda * params.l2sq_norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub kind: NetKind,
    pub arch: Architecture,
    pub penalty: PenaltySpec,
    pub step_size: f64,
    pub max_epochs: usize,
    /// `None` = full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub init_scale: f64,
    /// Attached to the returned model; training itself is unclipped.
    pub clip_bound: Option<f64>,
    pub keep_best_iterate: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step_size must be positive".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidParameter("max_epochs must be >= 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::InvalidParameter("init_scale must be positive".into()));
        }
        PenaltySpec::new(self.penalty.kind, self.penalty.lambda)?;
        if let Some(f) = self.clip_bound {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidParameter("clip_bound must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub mse: f64,
    pub penalty: f64,
    pub effective_nonzeros: usize,
}

/// Per-epoch objective history. `best_epoch = None` means no epoch improved
/// on the initial iterate.
#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub initial_objective: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

impl TrainTrace {
    pub fn best_objective(&self) -> f64 {
        match self.best_epoch {
            None => self.initial_objective,
            Some(e) => self.epochs[e - 1].objective,
        }
    }

    /// CSV rows with columns `epoch,objective,mse,penalty,effective_nonzeros`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,objective,mse,penalty,effective_nonzeros\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{}\n",
                r.epoch, r.objective, r.mse, r.penalty, r.effective_nonzeros
            ));
        }
        out
    }
}

/// Scratch buffers reused across samples.
struct Workspace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    err: Vec<f64>,
    err_next: Vec<f64>,
    augment: bool,
    data_dim: usize,
}

impl Workspace {
    fn new(arch: &Architecture, data_dim: usize) -> Result<Self> {
        let input_dim = arch.input_dim();
        let augment = if input_dim == data_dim {
            false
        } else if input_dim == data_dim + 1 {
            true
        } else {
            return Err(Error::ShapeMismatch(format!(
                "architecture input width {input_dim} fits neither d = {data_dim} \
                 nor the augmented d + 1"
            )));
        };
        let depth = arch.depth();
        let pre = (0..depth).map(|i| vec![0.0; arch.widths()[i + 1]]).collect();
        let act = (0..depth).map(|i| vec![0.0; arch.widths()[i + 1]]).collect();
        let max_w = arch.max_width();
        Ok(Self {
            input: vec![0.0; input_dim],
            pre,
            act,
            err: vec![0.0; max_w],
            err_next: vec![0.0; max_w],
            augment,
            data_dim,
        })
    }

    fn load_input(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.data_dim);
        self.input[..x.len()].copy_from_slice(x);
        if self.augment {
            self.input[x.len()] = 1.0;
        }
    }
}

/// Unclipped forward pass into preallocated buffers; returns the output.
fn forward_into(
    params: &NetworkParams,
    input: &[f64],
    pre: &mut [Vec<f64>],
    act: &mut [Vec<f64>],
) -> f64 {
    let depth = params.depth();
    let modified = params.kind() == NetKind::Modified;
    for i in 0..depth {
        let layer = &params.layers()[i];
        {
            let h_prev: &[f64] = if i == 0 { input } else { &act[i - 1] };
            if modified {
                layer.matvec_alpha_into(h_prev, &mut pre[i]);
            } else {
                layer.matvec_into(h_prev, &mut pre[i]);
            }
        }
        for (a, &p) in act[i].iter_mut().zip(pre[i].iter()) {
            *a = if p < 0.0 { 0.0 } else { p };
        }
    }
    let h_last = &act[depth - 1];
    params.layers()[depth]
        .data()
        .iter()
        .zip(h_last)
        .map(|(w, h)| w * h)
        .sum()
}

/// Accumulates `dout * d(output)/d(V)` into `grads`. Must be called right
/// after [`forward_into`] on the same sample.
#[allow(clippy::too_many_arguments)]
fn backward_into(
    params: &NetworkParams,
    input: &[f64],
    pre: &[Vec<f64>],
    act: &[Vec<f64>],
    dout: f64,
    grads: &mut [Matrix],
    err: &mut Vec<f64>,
    err_next: &mut Vec<f64>,
) {
    let depth = params.depth();
    let modified = params.kind() == NetKind::Modified;

    let h_last = &act[depth - 1];
    let out_weights = params.layers()[depth].data();
    for (g, h) in grads[depth].data_mut().iter_mut().zip(h_last) {
        *g += dout * h;
    }
    for (e, w) in err.iter_mut().zip(out_weights) {
        *e = w * dout;
    }

    for i in (0..depth).rev() {
        let layer = &params.layers()[i];
        let rows = layer.rows();
        let cols = layer.cols();
        let h_prev: &[f64] = if i == 0 { input } else { &act[i - 1] };
        let weights = layer.data();
        let grad = grads[i].data_mut();
        let pre_i = &pre[i];

        for e in err_next[..cols].iter_mut() {
            *e = 0.0;
        }
        for r in 0..rows {
            let e = err[r] * relu_prime(pre_i[r]);
            if e == 0.0 {
                continue;
            }
            let row = &weights[r * cols..(r + 1) * cols];
            let grad_row = &mut grad[r * cols..(r + 1) * cols];
            if modified {
                // dead-zone entries get exactly zero gradient and pass
                // nothing back (alpha' = 0, alpha = 0)
                for c in 0..cols {
                    let w = row[c];
                    if w > 1.0 {
                        grad_row[c] += e * h_prev[c];
                        err_next[c] += (w - 1.0) * e;
                    } else if w < -1.0 {
                        grad_row[c] += e * h_prev[c];
                        err_next[c] += (w + 1.0) * e;
                    }
                }
            } else {
                for c in 0..cols {
                    grad_row[c] += e * h_prev[c];
                    err_next[c] += row[c] * e;
                }
            }
        }
        std::mem::swap(err, err_next);
    }
}

fn zero_grads(arch: &Architecture) -> Vec<Matrix> {
    (0..=arch.depth())
        .map(|i| {
            let (r, c) = arch.layer_shape(i);
            Matrix::zeros(r, c)
        })
        .collect()
}

/// Mean squared residual of `params` on `dataset` plus the penalty value.
/// Uses the raw (unclipped) forward pass unless `params` carries a clip
/// bound, in which case outputs are clamped first.
pub fn objective(
    params: &NetworkParams,
    dataset: &RegressionDataset,
    penalty: &PenaltySpec,
) -> Result<f64> {
    Ok(mse(params, dataset)? + penalty.value(params))
}

/// Mean squared residual on `dataset` (no penalty).
pub fn mse(params: &NetworkParams, dataset: &RegressionDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    let mut ws = Workspace::new(params.arch(), dataset.dim())?;
    let clip = params.clip_bound();
    let mut sum = 0.0;
    for i in 0..dataset.len() {
        ws.load_input(dataset.input(i));
        let mut y = forward_into(params, &ws.input, &mut ws.pre, &mut ws.act);
        if let Some(f) = clip {
            y = y.clamp(-f, f);
        }
        let r = y - dataset.response(i);
        sum += r * r;
    }
    Ok(sum / dataset.len() as f64)
}

/// Exact reverse-mode gradient of the objective with respect to every raw
/// entry of every layer. The l1 penalty is excluded (prox territory); pass
/// `l1_subgradient = true` to include `lambda sign(V)` instead.
pub fn gradient_with_mode(
    params: &NetworkParams,
    dataset: &RegressionDataset,
    penalty: &PenaltySpec,
    l1_subgradient: bool,
) -> Result<Vec<Matrix>> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    let mut ws = Workspace::new(params.arch(), dataset.dim())?;
    let mut grads = zero_grads(params.arch());
    accumulate_batch(
        params,
        dataset,
        &(0..dataset.len()).collect::<Vec<_>>(),
        &mut ws,
        &mut grads,
    );
    apply_penalty_gradient(params, penalty, l1_subgradient, &mut grads);
    Ok(grads)
}

/// [`gradient_with_mode`] with the default prox convention (l1 excluded).
pub fn gradient(
    params: &NetworkParams,
    dataset: &RegressionDataset,
    penalty: &PenaltySpec,
) -> Result<Vec<Matrix>> {
    gradient_with_mode(params, dataset, penalty, false)
}

fn accumulate_batch(
    params: &NetworkParams,
    dataset: &RegressionDataset,
    batch: &[usize],
    ws: &mut Workspace,
    grads: &mut [Matrix],
) {
    let scale = 2.0 / batch.len() as f64;
    for &i in batch {
        ws.load_input(dataset.input(i));
        let out = forward_into(params, &ws.input, &mut ws.pre, &mut ws.act);
        let dout = scale * (out - dataset.response(i));
        backward_into(
            params,
            &ws.input,
            &ws.pre,
            &ws.act,
            dout,
            grads,
            &mut ws.err,
            &mut ws.err_next,
        );
    }
}

fn apply_penalty_gradient(
    params: &NetworkParams,
    penalty: &PenaltySpec,
    l1_subgradient: bool,
    grads: &mut [Matrix],
) {
    match penalty.kind {
        PenaltyKind::None => {}
        PenaltyKind::L2Sq => {
            let two_lambda = 2.0 * penalty.lambda;
            for (g, layer) in grads.iter_mut().zip(params.layers()) {
                for (gv, v) in g.data_mut().iter_mut().zip(layer.data()) {
                    *gv += two_lambda * v;
                }
            }
        }
        PenaltyKind::L1 => {
            if l1_subgradient {
                for (g, layer) in grads.iter_mut().zip(params.layers()) {
                    for (gv, v) in g.data_mut().iter_mut().zip(layer.data()) {
                        // sign subgradient, 0 at 0
                        *gv += if *v > 0.0 {
                            penalty.lambda
                        } else if *v < 0.0 {
                            -penalty.lambda
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }
}

/// Soft-thresholds every raw entry: `sign(v) max(|v| - threshold, 0)`.
pub fn prox_l1_step(params: &NetworkParams, threshold: f64) -> Result<NetworkParams> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    let mut out = params.clone();
    prox_l1_inplace(out.layers_mut(), threshold);
    Ok(out)
}

fn prox_l1_inplace(layers: &mut [Matrix], threshold: f64) {
    if threshold == 0.0 {
        return;
    }
    for layer in layers {
        for v in layer.data_mut() {
            let shrunk = v.abs() - threshold;
            *v = if shrunk > 0.0 { v.signum() * shrunk } else { 0.0 };
        }
    }
}

/// Draws initial parameters. Hidden layers of a modified network store
/// `nu(w)` for `w ~ U(-init_scale/sqrt(fan_in), +init_scale/sqrt(fan_in))`,
/// so the effective weights start at `w` instead of inside the dead zone
/// (where the data gradient is identically zero). The output layer, and all
/// layers of a plain network, store `w` raw.
///
/// The first layer's last input column gets `|w|`: inputs live in the
/// nonnegative cube, so a unit whose first-layer row is entirely
/// nonpositive never activates and its gradient stays zero forever. One
/// positively oriented coordinate keeps every unit reachable (with an
/// appended constant-one coordinate this is exactly a nonnegative bias).
pub fn init_params(config: &TrainConfig, rng: &mut ChaCha8Rng) -> NetworkParams {
    let mut params = NetworkParams::zeros(config.kind, config.arch.clone());
    let depth = params.depth();
    let modified = config.kind == NetKind::Modified;
    for (i, layer) in params.layers_mut().iter_mut().enumerate() {
        let cols = layer.cols();
        let bound = config.init_scale / (cols as f64).sqrt();
        let shift = modified && i < depth;
        for (idx, v) in layer.data_mut().iter_mut().enumerate() {
            let mut w = rng.random::<f64>() * 2.0 * bound - bound;
            if i == 0 && idx % cols == cols - 1 {
                w = w.abs();
            }
            *v = if shift { nu(w) } else { w };
        }
    }
    params
}

const DIVERGENCE_GUARD: f64 = 1e12;

/// Runs (prox-)gradient descent and returns the trained model (best iterate
/// when configured, final otherwise) with the configured clip bound
/// attached, plus the per-epoch trace.
pub fn train(
    config: &TrainConfig,
    dataset: &RegressionDataset,
) -> Result<(NetworkParams, TrainTrace)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    let mut ws = Workspace::new(&config.arch, dataset.dim())?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, tag::INIT));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, tag::SHUFFLE));

    let mut params = init_params(config, &mut init_rng);
    let n = dataset.len();
    let batch = config.batch_size.unwrap_or(n).min(n);
    let l1_threshold = if config.penalty.kind == PenaltyKind::L1 {
        config.step_size * config.penalty.lambda
    } else {
        0.0
    };

    let mut trace = TrainTrace {
        initial_objective: objective(&params, dataset, &config.penalty)?,
        epochs: Vec::with_capacity(config.max_epochs),
        best_epoch: None,
    };
    let mut best_objective = trace.initial_objective;
    let mut best_params = params.clone();

    let mut indices: Vec<usize> = (0..n).collect();
    let mut grads = zero_grads(&config.arch);

    for epoch in 1..=config.max_epochs {
        if batch < n {
            shuffle(&mut indices, &mut shuffle_rng);
        }
        for chunk in indices.chunks(batch) {
            for g in grads.iter_mut() {
                for v in g.data_mut() {
                    *v = 0.0;
                }
            }
            accumulate_batch(&params, dataset, chunk, &mut ws, &mut grads);
            apply_penalty_gradient(&params, &config.penalty, false, &mut grads);
            for (layer, g) in params.layers_mut().iter_mut().zip(&grads) {
                for (v, gv) in layer.data_mut().iter_mut().zip(g.data()) {
                    *v -= config.step_size * gv;
                }
            }
            prox_l1_inplace(params.layers_mut(), l1_threshold);
        }

        let pen = config.penalty.value(&params);
        let mse_val = mse(&params, dataset)?;
        let obj = mse_val + pen;
        let nonzeros = match config.kind {
            NetKind::Modified => params.effective_nonzeros()?,
            NetKind::Plain => params.layers().iter().map(Matrix::count_nonzero).sum(),
        };
        trace.epochs.push(EpochRecord {
            epoch,
            objective: obj,
            mse: mse_val,
            penalty: pen,
            effective_nonzeros: nonzeros,
        });
        if !obj.is_finite() || obj > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                epoch,
                objective: obj,
                trace: Box::new(trace),
            });
        }
        if obj < best_objective {
            best_objective = obj;
            best_params = params.clone();
            trace.best_epoch = Some(epoch);
        }
    }

    let mut result = if config.keep_best_iterate {
        best_params
    } else {
        params
    };
    result.set_clip_bound(config.clip_bound)?;
    Ok((result, trace))
}

fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    // Fisher-Yates on a fixed stream; rand's shuffle is not stability-promised
    for i in (1..indices.len()).rev() {
        let j = (rng.random::<u64>() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

/// Worst relative discrepancy between the reverse-mode gradient and central
/// finite differences (`h = 1e-6`) at `trials` random parameter points
/// sampled away from the kinks of `alpha`, `rho` and (in subgradient mode)
/// `|.|`. Deterministic per seed.
pub fn gradient_check(
    config: &TrainConfig,
    dataset: &RegressionDataset,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    config.validate()?;
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, tag::INIT));
    let h = 1e-6;
    let margin = 1e-3;
    let l1_mode = config.penalty.kind == PenaltyKind::L1;
    let mut worst = 0.0f64;

    for _ in 0..trials {
        let params = sample_smooth_point(config, dataset, margin, &mut rng)?;
        let analytic = gradient_with_mode(&params, dataset, &config.penalty, l1_mode)?;
        for (layer_idx, layer_grad) in analytic.iter().enumerate() {
            for entry in 0..layer_grad.data().len() {
                let mut plus = params.clone();
                plus.layers_mut()[layer_idx].data_mut()[entry] += h;
                let mut minus = params.clone();
                minus.layers_mut()[layer_idx].data_mut()[entry] -= h;
                let fd = (objective(&plus, dataset, &config.penalty)?
                    - objective(&minus, dataset, &config.penalty)?)
                    / (2.0 * h);
                let an = layer_grad.data()[entry];
                let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

/// Samples init-style parameters whose hidden entries keep `margin` distance
/// from the dead-zone boundary, whose entries stay `margin` away from zero
/// in l1 mode, and whose preactivations over the whole dataset stay `margin`
/// away from the ReLU kink.
fn sample_smooth_point(
    config: &TrainConfig,
    dataset: &RegressionDataset,
    margin: f64,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkParams> {
    let l1_mode = config.penalty.kind == PenaltyKind::L1;
    let mut ws = Workspace::new(&config.arch, dataset.dim())?;
    'attempt: for _ in 0..500 {
        let mut params = init_params(config, rng);
        let depth = params.depth();
        let modified = config.kind == NetKind::Modified;
        for (i, layer) in params.layers_mut().iter_mut().enumerate() {
            for v in layer.data_mut() {
                if modified && i < depth {
                    // |v| = 1 + |w| at init; push entries off the boundary
                    if (v.abs() - 1.0).abs() < 2.0 * margin {
                        *v = v.signum() * (1.0 + 2.0 * margin + v.abs().fract());
                    }
                } else if l1_mode && v.abs() < 2.0 * margin {
                    let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                    *v = sign * (2.0 * margin + rng.random::<f64>() * margin);
                }
            }
        }
        for i in 0..dataset.len() {
            ws.load_input(dataset.input(i));
            forward_into(&params, &ws.input, &mut ws.pre, &mut ws.act);
            for pre_i in &ws.pre {
                if pre_i.iter().any(|p| p.abs() < margin) {
                    continue 'attempt;
                }
            }
        }
        return Ok(params);
    }
    Err(Error::InvalidParameter(
        "could not sample a kink-free parameter point; shrink the dataset or margin".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_target, sample_dataset, NoiseKind, NoiseModel, TargetFamily};

    fn tiny_dataset(n: usize, d: usize, seed: u64) -> RegressionDataset {
        let target = make_target(TargetFamily::HolderAbs, 1.0, 1.5, d, 0).unwrap();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 0.1).unwrap();
        sample_dataset(&target, &noise, n, d, seed).unwrap()
    }

    fn modified_net(widths: Vec<usize>, layers: Vec<Vec<f64>>) -> NetworkParams {
        let arch = Architecture::new(widths).unwrap();
        let mats = layers
            .into_iter()
            .enumerate()
            .map(|(i, data)| {
                let (r, c) = arch.layer_shape(i);
                Matrix::new(r, c, data).unwrap()
            })
            .collect();
        NetworkParams::new(NetKind::Modified, arch, mats, None).unwrap()
    }

    #[test]
    fn objective_examples() {
        let data = tiny_dataset(20, 1, 3);
        let zero = NetworkParams::zeros(NetKind::Modified, Architecture::uniform(1, 1, 2).unwrap());
        let mean_y_sq =
            data.responses().iter().map(|y| y * y).sum::<f64>() / data.len() as f64;
        let obj = objective(&zero, &data, &PenaltySpec::none()).unwrap();
        assert!((obj - mean_y_sq).abs() < 1e-15);

        // perfect fit with an l1 penalty: objective = lambda * |g|_1
        let g = modified_net(vec![1, 1, 1], vec![vec![2.0], vec![3.0]]);
        let mut perfect_inputs = Vec::new();
        let mut perfect_responses = Vec::new();
        for i in 0..10 {
            let x = i as f64 / 10.0;
            perfect_inputs.push(x);
            perfect_responses.push(g.forward(&[x]).unwrap());
        }
        let perfect = RegressionDataset::from_raw(
            perfect_inputs,
            perfect_responses,
            1,
            data.provenance,
        )
        .unwrap();
        let none = objective(&g, &perfect, &PenaltySpec::none()).unwrap();
        assert_eq!(none, 0.0);
        let l1 = objective(
            &g,
            &perfect,
            &PenaltySpec::new(PenaltyKind::L1, 0.1).unwrap(),
        )
        .unwrap();
        assert!((l1 - 0.5).abs() < 1e-15, "{l1}"); // 0.1 * (2 + 3)
    }

    #[test]
    fn gradient_hand_example() {
        // single datum (x, y) = (0.5, 0), V0 = [[2]], V1 = [[1]]
        let g = modified_net(vec![1, 1, 1], vec![vec![2.0], vec![1.0]]);
        let data = RegressionDataset::from_raw(
            vec![0.5],
            vec![0.0],
            1,
            tiny_dataset(1, 1, 0).provenance,
        )
        .unwrap();
        let grads = gradient(&g, &data, &PenaltySpec::none()).unwrap();
        assert_eq!(grads[0].data(), &[0.5]);
        assert_eq!(grads[1].data(), &[0.5]);
    }

    #[test]
    fn dead_zone_gradient_is_exactly_zero() {
        let g = modified_net(
            vec![1, 2, 1],
            vec![vec![0.7, 2.0], vec![1.0, 1.0]],
        );
        let data = tiny_dataset(20, 1, 3);
        let grads = gradient(&g, &data, &PenaltySpec::none()).unwrap();
        assert_eq!(grads[0].data()[0], 0.0);
        assert_ne!(grads[0].data()[1], 0.0);
    }

    #[test]
    fn l2sq_gradient_adds_weight_decay_exactly() {
        let g = modified_net(vec![1, 1, 1], vec![vec![2.0], vec![1.5]]);
        let data = tiny_dataset(10, 1, 3);
        let lambda = 0.3;
        let plain = gradient(&g, &data, &PenaltySpec::none()).unwrap();
        let decayed = gradient(
            &g,
            &data,
            &PenaltySpec::new(PenaltyKind::L2Sq, lambda).unwrap(),
        )
        .unwrap();
        // layer-wise: decayed = plain + 2 lambda V
        for (i, (p, d)) in plain.iter().zip(&decayed).enumerate() {
            for ((pv, dv), v) in p.data().iter().zip(d.data()).zip(g.layers()[i].data()) {
                assert!((dv - (pv + 2.0 * lambda * v)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn prox_soft_threshold() {
        let g = modified_net(vec![1, 2, 1], vec![vec![1.5, 0.1], vec![-2.0, 0.0]]);
        let p = prox_l1_step(&g, 0.2).unwrap();
        assert_eq!(p.layers()[0].data(), &[1.3, 0.0]);
        assert_eq!(p.layers()[1].data(), &[-1.8, 0.0]);

        let id = prox_l1_step(&g, 0.0).unwrap();
        assert_eq!(id.layers(), g.layers());
        assert!(prox_l1_step(&g, -0.1).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = tiny_dataset(15, 2, 9);
        for (kind, penalty) in [
            (NetKind::Modified, PenaltySpec::none()),
            (
                NetKind::Modified,
                PenaltySpec::new(PenaltyKind::L2Sq, 0.05).unwrap(),
            ),
            (NetKind::Plain, PenaltySpec::none()),
            (
                NetKind::Modified,
                PenaltySpec::new(PenaltyKind::L1, 0.05).unwrap(),
            ),
        ] {
            let config = TrainConfig {
                kind,
                arch: Architecture::uniform(2, 2, 4).unwrap(),
                penalty,
                step_size: 0.05,
                max_epochs: 1,
                batch_size: None,
                seed: 5,
                init_scale: 1.0,
                clip_bound: None,
                keep_best_iterate: true,
            };
            let worst = gradient_check(&config, &data, 10, 17).unwrap();
            assert!(worst <= 1e-5, "kind {kind:?} penalty {penalty:?}: {worst}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = tiny_dataset(30, 1, 21);
        let config = TrainConfig {
            kind: NetKind::Modified,
            arch: Architecture::uniform(2, 2, 4).unwrap(),
            penalty: PenaltySpec::new(PenaltyKind::L1, 1e-3).unwrap(),
            step_size: 0.05,
            max_epochs: 50,
            batch_size: Some(8),
            seed: 33,
            init_scale: 1.0,
            clip_bound: Some(1.5),
            keep_best_iterate: true,
        };
        let (m1, t1) = train(&config, &data).unwrap();
        let (m2, t2) = train(&config, &data).unwrap();
        assert_eq!(m1.layers(), m2.layers());
        assert_eq!(t1.epochs.len(), t2.epochs.len());
        for (a, b) in t1.epochs.iter().zip(&t2.epochs) {
            assert_eq!(a.objective, b.objective);
        }
        assert_eq!(m1.clip_bound(), Some(1.5));
    }

    #[test]
    fn best_iterate_never_worse_than_initial() {
        let data = tiny_dataset(30, 1, 2);
        for seed in 0..5 {
            let config = TrainConfig {
                kind: NetKind::Modified,
                arch: Architecture::uniform(2, 1, 4).unwrap(),
                penalty: PenaltySpec::none(),
                step_size: 0.05,
                max_epochs: 40,
                batch_size: None,
                seed,
                init_scale: 1.0,
                clip_bound: None,
                keep_best_iterate: true,
            };
            let (best, trace) = train(&config, &data).unwrap();
            let final_obj = objective(&best, &data, &config.penalty).unwrap();
            assert!(final_obj <= trace.initial_objective + 1e-12);
            for rec in &trace.epochs {
                assert!(trace.best_objective() <= rec.objective + 1e-15);
            }
        }
    }

    #[test]
    fn huge_l1_lambda_zeroes_everything() {
        let data = tiny_dataset(30, 1, 4);
        let config = TrainConfig {
            kind: NetKind::Modified,
            arch: Architecture::uniform(2, 2, 4).unwrap(),
            penalty: PenaltySpec::new(PenaltyKind::L1, 1e6).unwrap(),
            step_size: 0.05,
            max_epochs: 100,
            batch_size: None,
            seed: 11,
            init_scale: 1.0,
            clip_bound: None,
            keep_best_iterate: false,
        };
        let (model, trace) = train(&config, &data).unwrap();
        for layer in model.layers() {
            for &v in layer.data() {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(trace.epochs.last().unwrap().effective_nonzeros, 0);
    }

    #[test]
    fn dead_zone_entry_slides_to_zero_under_prox() {
        // an entry strictly inside the dead zone has zero data gradient, so
        // the prox shrinks it by exactly threshold per (full-batch) epoch
        let data = tiny_dataset(10, 1, 8);
        let lambda = 0.5;
        let step = 0.05;
        let threshold = step * lambda;
        let mut params = modified_net(
            vec![1, 2, 1],
            vec![vec![0.8, 2.0], vec![1.0, -1.0]],
        );
        let penalty = PenaltySpec::new(PenaltyKind::L1, lambda).unwrap();
        let mut expected = 0.8;
        // 0.8 / 0.025 = 32 prox steps reach exactly zero
        for _ in 0..40 {
            let grads = gradient(&params, &data, &penalty).unwrap();
            assert_eq!(grads[0].data()[0], 0.0);
            for (layer, g) in params.layers_mut().iter_mut().zip(&grads) {
                for (v, gv) in layer.data_mut().iter_mut().zip(g.data()) {
                    *v -= step * gv;
                }
            }
            prox_l1_inplace(params.layers_mut(), threshold);
            expected = if expected - threshold > 0.0 {
                expected - threshold
            } else {
                0.0
            };
            assert_eq!(params.layers()[0].data()[0], expected);
        }
        assert_eq!(params.layers()[0].data()[0], 0.0);
    }

    #[test]
    fn l2sq_step_equals_weight_decay() {
        let data = tiny_dataset(12, 1, 14);
        let lambda = 0.01;
        let step = 0.05;
        let params = modified_net(vec![1, 2, 1], vec![vec![1.7, -2.3], vec![0.4, 1.1]]);
        let penalty = PenaltySpec::new(PenaltyKind::L2Sq, lambda).unwrap();

        let grads = gradient(&params, &data, &penalty).unwrap();
        let data_grads = gradient(&params, &data, &PenaltySpec::none()).unwrap();
        for (i, layer) in params.layers().iter().enumerate() {
            for (j, &v) in layer.data().iter().enumerate() {
                let via_penalty = v - step * grads[i].data()[j];
                let via_decay = v * (1.0 - 2.0 * step * lambda) - step * data_grads[i].data()[j];
                assert!(
                    (via_penalty - via_decay).abs() <= 1e-12 * via_decay.abs().max(1.0),
                    "{via_penalty} vs {via_decay}"
                );
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let data = tiny_dataset(30, 1, 4);
        // step * 2 lambda > 2 makes the weight-decay factor |1 - 2 step lambda|
        // exceed 1, so the penalty term grows geometrically past the guard
        let config = TrainConfig {
            kind: NetKind::Modified,
            arch: Architecture::uniform(2, 2, 6).unwrap(),
            penalty: PenaltySpec::new(PenaltyKind::L2Sq, 40.0).unwrap(),
            step_size: 1.0,
            max_epochs: 200,
            batch_size: None,
            seed: 11,
            init_scale: 2.0,
            clip_bound: None,
            keep_best_iterate: true,
        };
        match train(&config, &data) {
            Err(Error::Divergence { trace, .. }) => {
                assert!(!trace.epochs.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn teacher_recovery_noiseless() {
        // d = 1, L = 1, width-4 teacher over the augmented input; full batch,
        // step 0.05, train MSE <= 1e-3 within 5000 epochs for >= 4/5 seeds
        let teacher_target = make_target(TargetFamily::TeacherNetwork, 1.0, 1.0, 1, 42).unwrap();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 0.0).unwrap();
        let data = sample_dataset(&teacher_target, &noise, 256, 1, 7).unwrap();
        let mut successes = 0;
        for seed in 0..5 {
            let config = TrainConfig {
                kind: NetKind::Modified,
                arch: Architecture::uniform(2, 1, 4).unwrap(),
                penalty: PenaltySpec::none(),
                step_size: 0.05,
                max_epochs: 5000,
                batch_size: None,
                seed,
                init_scale: 1.0,
                clip_bound: None,
                keep_best_iterate: true,
            };
            let (model, _) = train(&config, &data).unwrap();
            let train_mse = mse(&model, &data).unwrap();
            if train_mse <= 1e-3 {
                successes += 1;
            }
        }
        assert!(successes >= 4, "only {successes}/5 seeds recovered");
    }
}
