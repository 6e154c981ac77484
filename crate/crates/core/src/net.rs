//! Network primitives: the weight sparsifier `alpha` and its companions,
//! dense weight matrices, plain and modified ReLU forward passes, weight
//! norms, sparsity accounting, and the on-disk model format.
//!
//! A *modified* network stores raw weight matrices `V_0..V_L` and applies
//! `alpha` entry-wise to the hidden matrices `V_0..V_{L-1}` on the fly during
//! evaluation; the output matrix `V_L` is used raw. A *plain* network uses
//! every stored matrix raw. Networks carry no bias vectors; callers that need
//! bias capacity append a constant-one input coordinate instead (see
//! [`augment_input`]).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The weight sparsifier: annihilates `[-1, 1]` and shifts everything else
/// toward zero by one. Continuous and piecewise linear.
#[inline]
pub fn alpha(x: f64) -> f64 {
    assert!(x.is_finite(), "alpha: non-finite input");
    if x < -1.0 {
        x + 1.0
    } else if x > 1.0 {
        x - 1.0
    } else {
        0.0
    }
}

/// Right inverse of [`alpha`]: shifts nonzero values away from zero by one,
/// fixing zero. Satisfies `alpha(nu(x)) == x` for every real `x`.
#[inline]
pub fn nu(x: f64) -> f64 {
    assert!(x.is_finite(), "nu: non-finite input");
    if x < 0.0 {
        x - 1.0
    } else if x > 0.0 {
        x + 1.0
    } else {
        0.0
    }
}

/// ReLU activation.
#[inline]
pub fn relu(x: f64) -> f64 {
    assert!(!x.is_nan(), "relu: NaN input");
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

/// Derivative of [`relu`] almost everywhere: 1 for `x > 0`, 0 for `x <= 0`.
#[inline]
pub(crate) fn relu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Appends a constant-one coordinate to `x`. The augmented point still lies
/// in the unit cube, so augmented networks stay inside the class over
/// `[0,1]^{d+1}` while gaining bias capacity.
pub fn augment_input(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    out.extend_from_slice(x);
    out.push(1.0);
    out
}

/// Dense row-major matrix of finite `f64` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "matrix {rows}x{cols} expects {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the raw entries. Callers must keep entries finite.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Standard matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "matvec: matrix has {} columns, vector has length {}",
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(v) {
                acc += w * x;
            }
            *o = acc;
        }
    }

    /// Matrix-vector product with `alpha` applied to each entry on the fly.
    #[inline]
    pub(crate) fn matvec_alpha_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(v) {
                let a = if *w < -1.0 {
                    *w + 1.0
                } else if *w > 1.0 {
                    *w - 1.0
                } else {
                    0.0
                };
                acc += a * x;
            }
            *o = acc;
        }
    }

    /// Entry-wise image under `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn count_nonzero(&self) -> usize {
        // alpha and nu produce exact binary zeros; no epsilon thresholding.
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Network kind: whether hidden matrices pass through the sparsifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Modified,
    Plain,
}

impl std::fmt::Display for NetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NetKind::Modified => write!(f, "modified"),
            NetKind::Plain => write!(f, "plain"),
        }
    }
}

/// Width vector `(p_0, ..., p_{L+1})` of a depth-`L` network.
///
/// `p_0` is the input dimension, `p_{L+1} = 1` the scalar output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    widths: Vec<usize>,
}

impl Architecture {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "architecture needs at least 3 widths (depth >= 1), got {}",
                widths.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidParameter("zero width".into()));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::InvalidParameter(format!(
                "output width must be 1, got {}",
                widths.last().unwrap()
            )));
        }
        Ok(Self { widths })
    }

    /// Constant-width architecture `(input_dim, width, ..., width, 1)` with
    /// `depth` hidden transitions.
    pub fn uniform(input_dim: usize, depth: usize, width: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        let mut widths = Vec::with_capacity(depth + 2);
        widths.push(input_dim);
        widths.extend(std::iter::repeat_n(width, depth));
        widths.push(1);
        Self::new(widths)
    }

    /// Number of hidden transitions `L`; the network has `L + 1` matrices.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// `|p|_inf = max{p_0, ..., p_L}` (the output width is excluded).
    pub fn max_width(&self) -> usize {
        let l = self.widths.len() - 1;
        *self.widths[..l].iter().max().unwrap()
    }

    /// Shape `(rows, cols)` of layer matrix `i`, `i = 0..=L`.
    pub fn layer_shape(&self, i: usize) -> (usize, usize) {
        (self.widths[i + 1], self.widths[i])
    }

    /// Total number of weight entries.
    pub fn parameter_count(&self) -> usize {
        (0..=self.depth())
            .map(|i| {
                let (r, c) = self.layer_shape(i);
                r * c
            })
            .sum()
    }
}

/// A full network: kind, architecture, raw layer matrices, and an optional
/// output clip bound realizing the sup-norm constraint of the bounded class.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    kind: NetKind,
    arch: Architecture,
    layers: Vec<Matrix>,
    clip_bound: Option<f64>,
}

impl NetworkParams {
    pub fn new(
        kind: NetKind,
        arch: Architecture,
        layers: Vec<Matrix>,
        clip_bound: Option<f64>,
    ) -> Result<Self> {
        if layers.len() != arch.depth() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "depth {} needs {} layer matrices, got {}",
                arch.depth(),
                arch.depth() + 1,
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            let (rows, cols) = arch.layer_shape(i);
            if layer.rows() != rows || layer.cols() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}: expected {rows}x{cols}, got {}x{}",
                    layer.rows(),
                    layer.cols()
                )));
            }
        }
        if let Some(f) = clip_bound {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "clip bound must be a positive finite number, got {f}"
                )));
            }
        }
        Ok(Self {
            kind,
            arch,
            layers,
            clip_bound,
        })
    }

    pub fn zeros(kind: NetKind, arch: Architecture) -> Self {
        let layers = (0..=arch.depth())
            .map(|i| {
                let (r, c) = arch.layer_shape(i);
                Matrix::zeros(r, c)
            })
            .collect();
        Self {
            kind,
            arch,
            layers,
            clip_bound: None,
        }
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn depth(&self) -> usize {
        self.arch.depth()
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim()
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn clip_bound(&self) -> Option<f64> {
        self.clip_bound
    }

    pub fn set_clip_bound(&mut self, clip: Option<f64>) -> Result<()> {
        if let Some(f) = clip {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "clip bound must be a positive finite number, got {f}"
                )));
            }
        }
        self.clip_bound = clip;
        Ok(())
    }

    /// Evaluates the network at `x` (length must equal `p_0`).
    ///
    /// Modified kind: `h <- rho(alpha(V_i) h)` through the hidden layers,
    /// then `V_L h`; plain kind uses the raw matrices. The output is clamped
    /// to `[-F, F]` when a clip bound is set.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "forward: input length {} but p_0 = {}",
                x.len(),
                self.input_dim()
            )));
        }
        let depth = self.depth();
        let mut h = x.to_vec();
        let mut next = Vec::new();
        for i in 0..depth {
            let layer = &self.layers[i];
            next.clear();
            next.resize(layer.rows(), 0.0);
            match self.kind {
                NetKind::Modified => layer.matvec_alpha_into(&h, &mut next),
                NetKind::Plain => layer.matvec_into(&h, &mut next),
            }
            for v in next.iter_mut() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("layer {i} preactivation")));
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            std::mem::swap(&mut h, &mut next);
        }
        let out_layer = &self.layers[depth];
        let mut out = [0.0];
        out_layer.matvec_into(&h, &mut out);
        let mut y = out[0];
        if let Some(f) = self.clip_bound {
            y = y.clamp(-f, f);
        }
        if !y.is_finite() {
            return Err(Error::NonFinite("forward output".into()));
        }
        Ok(y)
    }

    /// Sum of absolute values of all raw entries, output layer included.
    /// The sparsifier is *not* applied.
    pub fn l1_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|m| m.data())
            .map(|v| v.abs())
            .sum()
    }

    /// Sum of squared raw entries across all layers.
    pub fn l2sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|m| m.data())
            .map(|v| v * v)
            .sum()
    }

    /// Number of weights the forward pass actually uses: nonzero entries of
    /// `alpha(V_i)` over the hidden layers plus nonzero raw entries of `V_L`.
    /// Only meaningful for modified networks.
    pub fn effective_nonzeros(&self) -> Result<usize> {
        if self.kind != NetKind::Modified {
            return Err(Error::WrongKind(
                "effective_nonzeros requires a modified network".into(),
            ));
        }
        let depth = self.depth();
        let hidden: usize = self.layers[..depth]
            .iter()
            .map(|m| m.data().iter().filter(|&&v| alpha(v) != 0.0).count())
            .sum();
        Ok(hidden + self.layers[depth].count_nonzero())
    }

    /// Scales every layer of a plain network by `a > 0`. By positive
    /// homogeneity of ReLU the output scales by `a^{L+1}`. Not defined for
    /// modified networks (the sparsifier breaks homogeneity) or clipped ones.
    pub fn scale_plain(&self, a: f64) -> Result<NetworkParams> {
        if self.kind != NetKind::Plain {
            return Err(Error::WrongKind(
                "scale_plain requires a plain network".into(),
            ));
        }
        if self.clip_bound.is_some() {
            return Err(Error::InvalidParameter(
                "scale_plain is not defined for clipped networks".into(),
            ));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive and finite, got {a}"
            )));
        }
        let layers = self.layers.iter().map(|m| m.map(|v| a * v)).collect();
        NetworkParams::new(self.kind, self.arch.clone(), layers, None)
    }
}

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    kind: NetKind,
    widths: Vec<usize>,
    clip_bound: Option<f64>,
    layers: Vec<MatrixDoc>,
}

/// Serializes a network to the version-1 model document (UTF-8 JSON).
/// Weights round-trip bit-exactly.
pub fn serialize_model(params: &NetworkParams) -> String {
    let doc = ModelDoc {
        format_version: FORMAT_VERSION,
        kind: params.kind,
        widths: params.arch.widths().to_vec(),
        clip_bound: params.clip_bound,
        layers: params
            .layers
            .iter()
            .map(|m| MatrixDoc {
                rows: m.rows(),
                cols: m.cols(),
                data: m.data().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
}

/// Parses and validates a version-1 model document.
pub fn deserialize_model(text: &str) -> Result<NetworkParams> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported model format_version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let arch = Architecture::new(doc.widths)?;
    let layers = doc
        .layers
        .into_iter()
        .map(|m| Matrix::new(m.rows, m.cols, m.data))
        .collect::<Result<Vec<_>>>()?;
    NetworkParams::new(doc.kind, arch, layers, doc.clip_bound)
}

pub fn save_model(params: &NetworkParams, path: impl AsRef<std::path::Path>) -> Result<()> {
    std::fs::write(path, serialize_model(params))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<std::path::Path>) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path)?;
    deserialize_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(kind: NetKind, widths: Vec<usize>, layers: Vec<Vec<f64>>) -> NetworkParams {
        let arch = Architecture::new(widths).unwrap();
        let mats = layers
            .into_iter()
            .enumerate()
            .map(|(i, data)| {
                let (r, c) = arch.layer_shape(i);
                Matrix::new(r, c, data).unwrap()
            })
            .collect();
        NetworkParams::new(kind, arch, mats, None).unwrap()
    }

    #[test]
    fn alpha_piecewise() {
        assert_eq!(alpha(-2.0), -1.0);
        assert_eq!(alpha(0.5), 0.0);
        assert_eq!(alpha(3.0), 2.0);
        // closed dead zone: kinks map to zero
        assert_eq!(alpha(1.0), 0.0);
        assert_eq!(alpha(-1.0), 0.0);
    }

    #[test]
    fn nu_piecewise() {
        assert_eq!(nu(0.0), 0.0);
        assert_eq!(nu(0.5), 1.5);
        assert_eq!(nu(-2.0), -3.0);
    }

    #[test]
    fn relu_piecewise() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(relu(0.0), 0.0);
    }

    #[test]
    fn alpha_nu_identity_on_grid() {
        // dyadic grid keeps x + 1 exactly representable
        for i in -20_000..=20_000 {
            let x = i as f64 / 1024.0;
            assert_eq!(alpha(nu(x)), x, "x = {x}");
        }
        for x in [0.0, 1.0, -1.0, f64::EPSILON, -f64::EPSILON, 1e12, -1e12] {
            assert_eq!(alpha(nu(x)), x);
        }
    }

    #[test]
    fn alpha_odd_and_lipschitz() {
        for i in -4000..=4000 {
            let x = i as f64 / 512.0;
            assert_eq!(alpha(-x), -alpha(x));
            assert_eq!(nu(-x), -nu(x));
        }
        for i in -4000..4000 {
            let x = i as f64 / 512.0;
            let y = x + 1.0 / 512.0;
            assert!((alpha(y) - alpha(x)).abs() <= (y - x).abs() + 1e-15);
        }
    }

    #[test]
    fn matvec_examples() {
        let m = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);

        let id = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(id.matvec(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);

        let row = Matrix::new(1, 2, vec![2.0, -2.0]).unwrap();
        assert_eq!(row.matvec(&[0.5, 0.5]).unwrap(), vec![0.0]);

        assert!(m.matvec(&[1.0]).is_err());
    }

    #[test]
    fn matrix_rejects_bad_input() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Matrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn forward_dead_zone_annihilates() {
        // every hidden entry in [-1, 1] -> alpha zeroes the hidden matrices
        let g = net(
            NetKind::Modified,
            vec![2, 3, 1],
            vec![vec![0.5, -1.0, 0.9, 0.2, -0.3, 1.0], vec![4.0, -2.0, 7.0]],
        );
        for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]] {
            assert_eq!(g.forward(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn forward_hand_examples() {
        let g = net(
            NetKind::Modified,
            vec![1, 1, 1],
            vec![vec![2.0], vec![-3.0]],
        );
        let y = g.forward(&[0.4]).unwrap();
        assert!((y - (-1.2)).abs() < 1e-15, "{y} != -1.2");

        let f = net(
            NetKind::Plain,
            vec![2, 1, 1],
            vec![vec![1.0, -1.0], vec![1.0]],
        );
        let y = f.forward(&[0.7, 0.2]).unwrap();
        assert!((y - 0.5).abs() < 1e-15, "{y} != 0.5");
    }

    #[test]
    fn forward_matches_alpha_image_plain_network() {
        let g = net(
            NetKind::Modified,
            vec![2, 3, 1],
            vec![
                vec![2.0, -0.5, 1.5, -3.0, 0.0, 1.1],
                vec![1.0, -2.0, 0.5],
            ],
        );
        let mut plain_layers: Vec<Matrix> = g.layers()[..g.depth()]
            .iter()
            .map(|m| m.map(alpha))
            .collect();
        plain_layers.push(g.layers()[g.depth()].clone());
        let f = NetworkParams::new(NetKind::Plain, g.arch().clone(), plain_layers, None).unwrap();
        for i in 0..50 {
            let x = [i as f64 / 50.0, 1.0 - i as f64 / 50.0];
            assert_eq!(g.forward(&x).unwrap(), f.forward(&x).unwrap());
        }
    }

    #[test]
    fn norms_and_nonzeros() {
        let g = net(
            NetKind::Modified,
            vec![1, 2, 1],
            vec![vec![2.0, -2.0], vec![1.0, 0.0]],
        );
        assert_eq!(g.l1_norm(), 5.0);
        assert_eq!(g.l2sq_norm(), 9.0);
        // alpha maps (2, -2) to (1, -1); output layer has one nonzero
        assert_eq!(g.effective_nonzeros().unwrap(), 3);

        let zero = NetworkParams::zeros(NetKind::Modified, Architecture::uniform(1, 1, 2).unwrap());
        assert_eq!(zero.l1_norm(), 0.0);
        assert_eq!(zero.l2sq_norm(), 0.0);
        assert_eq!(zero.effective_nonzeros().unwrap(), 0);

        let dead = net(
            NetKind::Modified,
            vec![1, 1, 1],
            vec![vec![0.7], vec![1.0]],
        );
        assert_eq!(dead.effective_nonzeros().unwrap(), 1);

        let plain = NetworkParams::zeros(NetKind::Plain, Architecture::uniform(1, 1, 2).unwrap());
        assert!(plain.effective_nonzeros().is_err());
    }

    #[test]
    fn scale_plain_homogeneity() {
        let f = net(
            NetKind::Plain,
            vec![1, 2, 1],
            vec![vec![1.0, -0.5], vec![2.0, 1.0]],
        );
        let x = [0.25];
        let base = f.forward(&x).unwrap();

        let same = f.scale_plain(1.0).unwrap();
        assert_eq!(same.forward(&x).unwrap(), base);

        let doubled = f.scale_plain(2.0).unwrap();
        let rel = (doubled.forward(&x).unwrap() - 4.0 * base).abs() / 4.0 / base.abs().max(1e-300);
        assert!(rel < 1e-12);

        let modified = net(NetKind::Modified, vec![1, 1, 1], vec![vec![2.0], vec![1.0]]);
        assert!(modified.scale_plain(2.0).is_err());
        assert!(f.scale_plain(0.0).is_err());
        assert!(f.scale_plain(-1.0).is_err());
    }

    #[test]
    fn forward_rejects_overflowing_intermediates() {
        let g = net(
            NetKind::Plain,
            vec![1, 1, 1, 1],
            vec![vec![1e200], vec![1e200], vec![-1.0]],
        );
        match g.forward(&[1.0]) {
            Err(Error::NonFinite(_)) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn clip_bound_clamps_output() {
        let mut g = net(
            NetKind::Modified,
            vec![1, 1, 1],
            vec![vec![3.0], vec![10.0]],
        );
        assert_eq!(g.forward(&[1.0]).unwrap(), 20.0);
        g.set_clip_bound(Some(1.5)).unwrap();
        assert_eq!(g.forward(&[1.0]).unwrap(), 1.5);
        assert!(g.set_clip_bound(Some(0.0)).is_err());
    }

    #[test]
    fn model_roundtrip() {
        let g = net(
            NetKind::Modified,
            vec![2, 3, 1],
            vec![
                vec![2.0, -0.5, 1.5, -3.0, 0.1234567890123456, 1.1],
                vec![1.0, -2.0, 0.5],
            ],
        );
        let text = serialize_model(&g);
        let back = deserialize_model(&text).unwrap();
        assert_eq!(g, back);

        // shape mismatch between widths and layers
        let bad = text.replace("\"rows\": 3", "\"rows\": 2");
        assert!(deserialize_model(&bad).is_err());

        // wrong version
        let bad = text.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(deserialize_model(&bad).is_err());
    }

    #[test]
    fn architecture_accessors() {
        let a = Architecture::new(vec![3, 7, 5, 1]).unwrap();
        assert_eq!(a.depth(), 2);
        assert_eq!(a.input_dim(), 3);
        assert_eq!(a.max_width(), 7);
        assert_eq!(a.layer_shape(0), (7, 3));
        assert_eq!(a.layer_shape(2), (1, 5));
        assert!(Architecture::new(vec![3, 1]).is_err());
        assert!(Architecture::new(vec![3, 4, 2]).is_err());
        assert!(Architecture::new(vec![3, 0, 1]).is_err());
    }
}
