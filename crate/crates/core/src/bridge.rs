//! Constructive two-way bridge between sparse plain ReLU networks and
//! modified networks.
//!
//! A plain network with at most `s` nonzero weights in `[-M, M]` embeds into
//! a modified network via `V_i = nu(W_i)` on the hidden layers and
//! `V_L = W_L`; since `alpha(nu(x)) = x` the two networks compute the same
//! function, with `l1 <= s(M+1)` and `l2sq <= s(M+1)^2`. Conversely any
//! modified network reads back as the plain network with hidden matrices
//! `alpha(V_i)`, and an `l1` budget of `r` caps the hidden nonzero count at
//! `floor(r)` plus the output-row length.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::net::{alpha, nu, Architecture, Matrix, NetKind, NetworkParams};
use crate::{Error, Result};

/// Measured sparsity of a plain network: nonzero count `s` and magnitude
/// bound `M` (max absolute entry; a tiny positive stand-in for the all-zero
/// network so that `M > 0` always holds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityCertificate {
    pub nonzeros: usize,
    pub magnitude: f64,
}

impl SparsityCertificate {
    /// `s(M+1)`, the l1 budget of the canonical embedding.
    pub fn l1_budget(&self) -> f64 {
        self.nonzeros as f64 * (self.magnitude + 1.0)
    }

    /// `s(M+1)^2`, the squared-l2 budget of the canonical embedding.
    pub fn l2sq_budget(&self) -> f64 {
        self.nonzeros as f64 * (self.magnitude + 1.0) * (self.magnitude + 1.0)
    }
}

/// Exact nonzero count and magnitude bound of a plain network.
pub fn certify_sparse(params: &NetworkParams) -> Result<SparsityCertificate> {
    if params.kind() != NetKind::Plain {
        return Err(Error::WrongKind("certify_sparse expects a plain network".into()));
    }
    let nonzeros = params.layers().iter().map(Matrix::count_nonzero).sum();
    let max_abs = params
        .layers()
        .iter()
        .map(Matrix::max_abs)
        .fold(0.0, f64::max);
    Ok(SparsityCertificate {
        nonzeros,
        magnitude: if max_abs > 0.0 { max_abs } else { f64::MIN_POSITIVE },
    })
}

/// Canonical embedding of a plain network into the modified class:
/// `V_i = nu(W_i)` for the hidden layers, `V_L = W_L`. Output-identical to
/// the input network at every point.
pub fn embed_sparse_to_modified(params: &NetworkParams) -> Result<NetworkParams> {
    if params.kind() != NetKind::Plain {
        return Err(Error::WrongKind(
            "embed_sparse_to_modified expects a plain network".into(),
        ));
    }
    let depth = params.depth();
    let mut layers: Vec<Matrix> = params.layers()[..depth]
        .iter()
        .map(|m| m.map(nu))
        .collect();
    layers.push(params.layers()[depth].clone());
    NetworkParams::new(
        NetKind::Modified,
        params.arch().clone(),
        layers,
        params.clip_bound(),
    )
}

/// Reads a modified network as the plain network that the forward pass
/// effectively evaluates: hidden matrices `alpha(V_i)`, output `V_L`.
pub fn extract_plain_from_modified(params: &NetworkParams) -> Result<NetworkParams> {
    if params.kind() != NetKind::Modified {
        return Err(Error::WrongKind(
            "extract_plain_from_modified expects a modified network".into(),
        ));
    }
    let depth = params.depth();
    let mut layers: Vec<Matrix> = params.layers()[..depth]
        .iter()
        .map(|m| m.map(alpha))
        .collect();
    layers.push(params.layers()[depth].clone());
    NetworkParams::new(
        NetKind::Plain,
        params.arch().clone(),
        layers,
        params.clip_bound(),
    )
}

/// Outcome of running a plain network through embed -> extract and checking
/// every budget of the inclusion chain.
#[derive(Debug, Clone)]
pub struct InclusionReport {
    pub certificate: SparsityCertificate,
    /// Max |f(x) - g(x)| over the random probes, f the input network and g
    /// its embedding (expected exactly zero).
    pub max_embed_discrepancy: f64,
    /// Max |f(x) - h(x)| with h the re-extracted plain network.
    pub max_extract_discrepancy: f64,
    pub l1_embedded: f64,
    pub l1_budget: f64,
    pub l2sq_embedded: f64,
    pub l2sq_budget: f64,
    pub extracted_nonzeros: usize,
    /// `floor(s(M+1)) + |p|_inf`.
    pub nonzero_budget: usize,
    pub trials: usize,
}

impl InclusionReport {
    pub fn l1_ok(&self) -> bool {
        self.l1_embedded <= self.l1_budget
    }

    pub fn l2sq_ok(&self) -> bool {
        self.l2sq_embedded <= self.l2sq_budget
    }

    pub fn nonzeros_ok(&self) -> bool {
        self.extracted_nonzeros <= self.nonzero_budget
    }

    pub fn exact_match(&self) -> bool {
        self.max_embed_discrepancy == 0.0 && self.max_extract_discrepancy == 0.0
    }

    pub fn all_hold(&self) -> bool {
        self.l1_ok() && self.l2sq_ok() && self.nonzeros_ok() && self.exact_match()
    }
}

impl std::fmt::Display for InclusionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        writeln!(
            f,
            "certificate            s = {}, M = {:.6e}",
            self.certificate.nonzeros, self.certificate.magnitude
        )?;
        writeln!(
            f,
            "embed discrepancy      {:.3e} over {} inputs [{}]",
            self.max_embed_discrepancy,
            self.trials,
            mark(self.max_embed_discrepancy == 0.0)
        )?;
        writeln!(
            f,
            "extract discrepancy    {:.3e} over {} inputs [{}]",
            self.max_extract_discrepancy,
            self.trials,
            mark(self.max_extract_discrepancy == 0.0)
        )?;
        writeln!(
            f,
            "l1(embedding)          {:.6} <= s(M+1) = {:.6} [{}]",
            self.l1_embedded,
            self.l1_budget,
            mark(self.l1_ok())
        )?;
        writeln!(
            f,
            "l2sq(embedding)        {:.6} <= s(M+1)^2 = {:.6} [{}]",
            self.l2sq_embedded,
            self.l2sq_budget,
            mark(self.l2sq_ok())
        )?;
        write!(
            f,
            "extracted nonzeros     {} <= floor(s(M+1)) + |p|_inf = {} [{}]",
            self.extracted_nonzeros,
            self.nonzero_budget,
            mark(self.nonzeros_ok())
        )
    }
}

/// Embeds `params`, re-extracts, and measures every bound of the inclusion
/// chain on `trials` random inputs from the unit cube.
pub fn verify_inclusion_chain(
    params: &NetworkParams,
    trials: usize,
    seed: u64,
) -> Result<InclusionReport> {
    let certificate = certify_sparse(params)?;
    let embedded = embed_sparse_to_modified(params)?;
    let extracted = extract_plain_from_modified(&embedded)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = params.input_dim();
    let mut x = vec![0.0; d];
    let mut max_embed = 0.0f64;
    let mut max_extract = 0.0f64;
    for _ in 0..trials {
        for xi in x.iter_mut() {
            *xi = rng.random::<f64>();
        }
        let f = params.forward(&x)?;
        let g = embedded.forward(&x)?;
        let h = extracted.forward(&x)?;
        max_embed = max_embed.max((f - g).abs());
        max_extract = max_extract.max((f - h).abs());
    }

    let l1_budget = certificate.l1_budget();
    Ok(InclusionReport {
        certificate,
        max_embed_discrepancy: max_embed,
        max_extract_discrepancy: max_extract,
        l1_embedded: embedded.l1_norm(),
        l1_budget,
        l2sq_embedded: embedded.l2sq_norm(),
        l2sq_budget: certificate.l2sq_budget(),
        extracted_nonzeros: extracted
            .layers()
            .iter()
            .map(Matrix::count_nonzero)
            .sum(),
        nonzero_budget: l1_budget.floor() as usize + params.arch().max_width(),
        trials,
    })
}

/// Random sparse plain network: each entry is nonzero with probability
/// `s / parameter_count` and nonzero values are uniform on `[-m, m]`.
pub fn random_sparse_network(
    arch: &Architecture,
    s: usize,
    m: f64,
    rng: &mut impl Rng,
) -> NetworkParams {
    let total = arch.parameter_count() as f64;
    let p = (s as f64 / total).min(1.0);
    let mut net = NetworkParams::zeros(NetKind::Plain, arch.clone());
    for layer in net.layers_mut() {
        for v in layer.data_mut() {
            if rng.random::<f64>() < p {
                *v = rng.random::<f64>() * 2.0 * m - m;
            }
        }
    }
    net
}
