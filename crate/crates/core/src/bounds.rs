//! Closed-form calculators and condition checkers: the theoretical
//! architecture schedule and tuning parameter, approximation/sparsity
//! budgets, covering-entropy bounds for the sparse and modified classes, the
//! entropy integral of the oracle-inequality condition, and the
//! concentration-theorem conditions.
//!
//! All logarithms are base 2. Every function here is a deterministic pure
//! function of its arguments.

use crate::net::Architecture;
use crate::quadrature::{adaptive_simpson, QuadTol};
use crate::{Error, Result};

/// Regression problem parameters shared by the calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    /// Sample size, at least 2.
    pub n: u64,
    /// Input dimension.
    pub d: u32,
    /// Smoothness exponent, positive.
    pub beta: f64,
    /// Smoothness-ball radius, at least 1.
    pub f: f64,
    /// Sub-Gaussian noise scale, positive.
    pub sigma: f64,
}

impl ProblemSpec {
    pub fn new(n: u64, d: u32, beta: f64, f: f64, sigma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(f.is_finite() && f >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "radius F must be >= 1, got {f}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { n, d, beta, f, sigma })
    }

    pub fn log2_n(&self) -> f64 {
        (self.n as f64).log2()
    }
}

/// Exact `ceil(log2 n)` for integers `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1);
    if n == 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// `ceil(x)` robust to floating-point dust: values within `1e-9` (relative)
/// of an integer are snapped to it before rounding up. Used on `n^{d/(2b+d)}`
/// where exact dyadic cases like `1024^{1/5} = 4` must not drift upward.
fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Interior width of the theoretical architecture:
/// `6 (d + ceil(beta)) ceil(n^{d/(2 beta + d)})`.
pub fn interior_width(spec: &ProblemSpec) -> Result<usize> {
    let exponent = spec.d as f64 / (2.0 * spec.beta + spec.d as f64);
    let scale = ceil_snapped((spec.n as f64).powf(exponent));
    let base = 6.0 * (spec.d as f64 + spec.beta.ceil());
    let w = base * scale;
    if !(w.is_finite() && w >= 1.0 && w <= usize::MAX as f64 / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "interior width overflows for n = {}",
            spec.n
        )));
    }
    Ok(w as usize)
}

/// Depth of the theoretical architecture:
/// `8 + (ceil(log2 n) + 5)(1 + ceil(log2(d v beta)))`.
pub fn theoretical_depth(spec: &ProblemSpec) -> Result<usize> {
    let m = (spec.d as f64).max(spec.beta);
    let inner = if m <= 1.0 { 0.0 } else { m.log2().ceil() };
    let depth = 8.0 + (ceil_log2(spec.n) as f64 + 5.0) * (1.0 + inner);
    if !(depth.is_finite() && depth <= 1e9) {
        return Err(Error::InvalidParameter(format!(
            "depth overflows for n = {}",
            spec.n
        )));
    }
    Ok(depth as usize)
}

/// The architecture schedule `(d, w, ..., w, 1)` with the theoretical depth
/// and interior width.
pub fn architecture_for(spec: &ProblemSpec) -> Result<Architecture> {
    let depth = theoretical_depth(spec)?;
    let width = interior_width(spec)?;
    Architecture::uniform(spec.d as usize, depth, width)
}

/// Penalty coefficient `log2(n)^6 / n`.
pub fn tuning_lambda(n: u64) -> f64 {
    assert!(n >= 2, "tuning_lambda needs n >= 2");
    (n as f64).log2().powi(6) / n as f64
}

/// Accuracy/width parameters of the approximation guarantee.
#[derive(Debug, Clone, Copy)]
pub struct ApproxBudget {
    /// Dyadic accuracy parameter, `m >= 1`.
    pub m: u32,
    /// Width-scaling parameter `N`.
    pub width_factor: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxReport {
    /// `(2F+1)(1 + d^2 + beta^2) 6^d N 2^{-m} + F 3^beta N^{-beta/d}`.
    pub error_bound: f64,
    /// `141 (d + beta + 1)^{3+d} N (m + 6)`.
    pub sparsity_bound: f64,
    /// Whether `N >= (beta+1)^d v (F+1) e^d`, i.e. the guarantee is in force.
    pub guarantee_in_force: bool,
    /// The threshold `(beta+1)^d v (F+1) e^d` itself.
    pub width_factor_threshold: f64,
}

/// Approximation-error and sparsity budgets of the sparse-network
/// construction, as closed forms in `(d, beta, F, m, N)`.
pub fn approx_budget_report(spec: &ProblemSpec, budget: &ApproxBudget) -> Result<ApproxReport> {
    if budget.m < 1 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if budget.width_factor < 1 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let d = spec.d as f64;
    let beta = spec.beta;
    let f = spec.f;
    let n_factor = budget.width_factor as f64;
    let error_bound = (2.0 * f + 1.0)
        * (1.0 + d * d + beta * beta)
        * 6f64.powi(spec.d as i32)
        * n_factor
        * 2f64.powi(-(budget.m as i32))
        + f * 3f64.powf(beta) * n_factor.powf(-beta / d);
    let sparsity_bound =
        141.0 * (d + beta + 1.0).powi(3 + spec.d as i32) * n_factor * (budget.m as f64 + 6.0);
    let threshold = (beta + 1.0)
        .powi(spec.d as i32)
        .max((f + 1.0) * std::f64::consts::E.powi(spec.d as i32));
    Ok(ApproxReport {
        error_bound,
        sparsity_bound,
        guarantee_in_force: n_factor >= threshold,
        width_factor_threshold: threshold,
    })
}

/// Which class the entropy bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    /// Sparse plain networks, weights in `[-1, 1]`:
    /// `4 s L log2(8 L |p|inf / delta)`.
    SparseUnit,
    /// Sparse plain networks, weights in `[-M, M]`:
    /// `8 s L^2 log2(8 L M |p|inf / delta)`.
    SparseBoxM,
    /// Modified networks with l1 budget `2s` (the query's `sparsity` is half
    /// the budget): `16 (s + |p|inf) L^2 log2(16 L s |p|inf / delta)`.
    ModifiedL1,
    /// Modified networks with squared-l2 budget `4s` (the query's `sparsity`
    /// is a quarter of the budget): `32 (s + |p|inf) L^2 log2(16 L s |p|inf / delta)`.
    ModifiedL2,
}

/// Parameters of one entropy-bound evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EntropyQuery {
    pub kind: EntropyKind,
    pub depth: u32,
    pub max_width: u64,
    /// Sparsity `s`, or the budget surrogate for the modified classes.
    pub sparsity: f64,
    /// Magnitude bound `M` (used by `SparseBoxM` only).
    pub magnitude: f64,
    /// Covering radius `delta`, positive.
    pub delta: f64,
}

impl EntropyQuery {
    fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        if self.max_width < 1 {
            return Err(Error::InvalidParameter("|p|inf must be >= 1".into()));
        }
        if !(self.sparsity.is_finite() && self.sparsity >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity must be >= 1, got {}",
                self.sparsity
            )));
        }
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "magnitude must be positive, got {}",
                self.magnitude
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// An entropy bound value; `degenerate` marks queries whose log argument was
/// at most 1, clamped to 0 (a covering number is at least 1).
#[derive(Debug, Clone, Copy)]
pub struct EntropyValue {
    pub value: f64,
    pub degenerate: bool,
}

fn raw_entropy(
    kind: EntropyKind,
    depth: f64,
    max_width: f64,
    sparsity: f64,
    magnitude: f64,
    delta: f64,
) -> (f64, bool) {
    let (coefficient, log_arg) = match kind {
        EntropyKind::SparseUnit => (
            4.0 * sparsity * depth,
            8.0 * depth * max_width / delta,
        ),
        EntropyKind::SparseBoxM => (
            8.0 * sparsity * depth * depth,
            8.0 * depth * magnitude * max_width / delta,
        ),
        EntropyKind::ModifiedL1 => (
            16.0 * (sparsity + max_width) * depth * depth,
            16.0 * depth * sparsity * max_width / delta,
        ),
        EntropyKind::ModifiedL2 => (
            32.0 * (sparsity + max_width) * depth * depth,
            16.0 * depth * sparsity * max_width / delta,
        ),
    };
    if log_arg <= 1.0 {
        (0.0, true)
    } else {
        (coefficient * log_arg.log2(), false)
    }
}

/// Evaluates the closed-form entropy bound selected by `query.kind`.
pub fn entropy_bound(query: &EntropyQuery) -> Result<EntropyValue> {
    query.validate()?;
    let (value, degenerate) = raw_entropy(
        query.kind,
        query.depth as f64,
        query.max_width as f64,
        query.sparsity,
        query.magnitude,
        query.delta,
    );
    Ok(EntropyValue { value, degenerate })
}

/// An entropy query minus its covering radius; the entropy-integral
/// machinery supplies the radius.
#[derive(Debug, Clone, Copy)]
pub struct EntropyFamily {
    pub kind: EntropyKind,
    pub depth: u32,
    pub max_width: u64,
    pub sparsity: f64,
    pub magnitude: f64,
}

impl EntropyFamily {
    pub fn at(&self, delta: f64) -> EntropyQuery {
        EntropyQuery {
            kind: self.kind,
            depth: self.depth,
            max_width: self.max_width,
            sparsity: self.sparsity,
            magnitude: self.magnitude,
            delta,
        }
    }

    fn validate(&self) -> Result<()> {
        self.at(1.0).validate()
    }

    fn sqrt_entropy_at(&self, delta: f64) -> f64 {
        raw_entropy(
            self.kind,
            self.depth as f64,
            self.max_width as f64,
            self.sparsity,
            self.magnitude,
            delta,
        )
        .0
        .max(0.0)
        .sqrt()
    }
}

/// The truncation envelope `K_n = sqrt(32 sigma^2) log2^{1/2}(n) v F`.
pub fn envelope_kn(spec: &ProblemSpec) -> f64 {
    ((32.0 * spec.sigma * spec.sigma).sqrt() * spec.log2_n().sqrt()).max(spec.f)
}

/// Complexity term of the prediction-error bound over the theoretical
/// architecture: `t_n = 8 |p_n|inf log2^6(n) / n`.
pub fn theorem_tn(spec: &ProblemSpec) -> Result<f64> {
    let arch = architecture_for(spec)?;
    let p_inf = arch.max_width() as f64;
    Ok(8.0 * p_inf * spec.log2_n().powi(6) / spec.n as f64)
}

/// Right side of the oracle-inequality condition on `t_n`:
/// `2^38 sigma^4 (F^2 + 1)^2 log2^2(n) / n`.
pub fn t_condition_threshold(spec: &ProblemSpec) -> f64 {
    let s2 = spec.sigma * spec.sigma;
    let f2 = spec.f * spec.f + 1.0;
    2f64.powi(38) * s2 * s2 * f2 * f2 * spec.log2_n().powi(2) / spec.n as f64
}

/// Ceiling for the constant `c_{sigma,F}`: `1 / (2^20 sigma^2 (F^2 + 1))`.
pub fn c_sigma_f_ceiling(spec: &ProblemSpec) -> f64 {
    1.0 / (2f64.powi(20) * spec.sigma * spec.sigma * (spec.f * spec.f + 1.0))
}

/// Left side of the oracle-inequality entropy condition: the integral of
/// `log2^{1/2} N(u / (4 K_n), ., ||.||_inf)` over `u` from
/// `delta / (2^11 K_n^2)` to `sqrt(delta)`, with the covering number replaced
/// by the closed-form bound of `family`. Returns 0 when the limits cross.
pub fn dudley_lhs(spec: &ProblemSpec, family: &EntropyFamily, delta: f64) -> Result<f64> {
    family.validate()?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let kn = envelope_kn(spec);
    let lower = delta / (2f64.powi(11) * kn * kn);
    let upper = delta.sqrt();
    if lower >= upper {
        return Ok(0.0);
    }
    let fam = *family;
    adaptive_simpson(
        move |u| fam.sqrt_entropy_at(u / (4.0 * kn)),
        lower,
        upper,
        QuadTol::default(),
    )
}

/// Integration limits used by [`dudley_lhs`], exposed for oracle tests.
pub fn dudley_limits(spec: &ProblemSpec, delta: f64) -> (f64, f64) {
    let kn = envelope_kn(spec);
    (delta / (2f64.powi(11) * kn * kn), delta.sqrt())
}

/// Inputs to the oracle-inequality and concentration condition checkers.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheckParams {
    pub spec: ProblemSpec,
    /// Dyadic shell index `j >= 0`.
    pub shell_index: u32,
    /// Shell threshold `t > 0` (the theorem instantiates `t = t_n`).
    pub shell_threshold: f64,
    /// Radius `delta` (the theorem requires the condition for all
    /// `delta >= 2^j t / 8`; the checker evaluates at this one).
    pub delta: f64,
    /// Constant `c_{sigma,F}`; defaults to its ceiling when `None`.
    pub c_sigma_f: Option<f64>,
    /// Concentration parameter `omega`, in (0, 1).
    pub omega: f64,
    /// Concentration threshold `t* > 0`.
    pub t_star: f64,
    /// Envelope constant `K_1`; defaults to `8 K_n^2`.
    pub k1: Option<f64>,
    /// Second-moment constant `K_2`; defaults to `16 K_n^2`.
    pub k2: Option<f64>,
}

impl OracleCheckParams {
    fn validate(&self) -> Result<()> {
        if !(self.shell_threshold.is_finite() && self.shell_threshold > 0.0) {
            return Err(Error::InvalidParameter("t must be positive".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in (0, 1), got {}",
                self.omega
            )));
        }
        if !(self.t_star.is_finite() && self.t_star > 0.0) {
            return Err(Error::InvalidParameter("t_star must be positive".into()));
        }
        let ceiling = c_sigma_f_ceiling(&self.spec);
        if let Some(c) = self.c_sigma_f {
            if !(c > 0.0 && c <= ceiling) {
                return Err(Error::InvalidParameter(format!(
                    "c_sigma_f = {c} exceeds its ceiling {ceiling:e}"
                )));
            }
        }
        for (name, k) in [("K1", self.k1), ("K2", self.k2)] {
            if let Some(v) = k {
                if !(v.is_finite() && v >= 1.0) {
                    return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
                }
            }
        }
        Ok(())
    }
}

/// The l1-budget shell class of the penalized problem at `(j, t)`:
/// budget `r = 2^j n t / log2^6 n`, modified-l1 entropy family with
/// `sparsity = r / 2` over the theoretical architecture.
pub fn shell_entropy_family(
    spec: &ProblemSpec,
    shell_index: u32,
    shell_threshold: f64,
) -> Result<(EntropyFamily, f64)> {
    let arch = architecture_for(spec)?;
    let budget = 2f64.powi(shell_index as i32) * spec.n as f64 * shell_threshold
        / spec.log2_n().powi(6);
    let family = EntropyFamily {
        kind: EntropyKind::ModifiedL1,
        depth: arch.depth() as u32,
        max_width: arch.max_width() as u64,
        // the bound is nondecreasing in s, so clamping tiny budgets up to
        // the smallest admissible query keeps it an upper bound
        sparsity: (budget / 2.0).max(1.0),
        magnitude: 1.0,
    };
    Ok((family, budget))
}

/// One row of the dyadic-n scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub k: u32,
    pub n: u64,
    pub t_n: f64,
    pub t_threshold: f64,
    pub condition_t_holds: bool,
    pub dudley: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub condition_i_holds: bool,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    /// Smallest dyadic n where conditions (t) and (i) both hold, if any
    /// within the scanned range.
    pub smallest_n: Option<u64>,
    pub max_k_scanned: u32,
    pub rows: Vec<ScanRow>,
}

/// Full oracle-inequality condition report at one parameter point.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub spec: ProblemSpec,
    pub shell_index: u32,
    pub shell_threshold: f64,
    pub delta: f64,
    pub k_n: f64,
    pub depth: usize,
    pub max_width: usize,
    pub l1_budget: f64,
    pub dudley: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub condition_i_holds: bool,
    pub t_threshold: f64,
    pub condition_t_holds: bool,
    pub c_sigma_f: f64,
    pub c_ceiling: f64,
    pub scan: Option<ScanReport>,
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |ok: bool| if ok { "holds" } else { "fails" };
        writeln!(
            f,
            "problem                n = {}, d = {}, beta = {}, F = {}, sigma = {}",
            self.spec.n, self.spec.d, self.spec.beta, self.spec.f, self.spec.sigma
        )?;
        writeln!(
            f,
            "architecture           L_n = {}, |p_n|inf = {}",
            self.depth, self.max_width
        )?;
        writeln!(f, "K_n                    {:.6}", self.k_n)?;
        writeln!(
            f,
            "shell                  j = {}, t = {:.6e}, delta = {:.6e}, l1 budget = {:.6e}",
            self.shell_index, self.shell_threshold, self.delta, self.l1_budget
        )?;
        writeln!(
            f,
            "c_sigma_F              {:.6e} (ceiling {:.6e})",
            self.c_sigma_f, self.c_ceiling
        )?;
        writeln!(
            f,
            "condition (t)          t = {:.6e} >= {:.6e} ... {}",
            self.shell_threshold,
            self.t_threshold,
            verdict(self.condition_t_holds)
        )?;
        writeln!(
            f,
            "condition (i) LHS      {:.6e} (entropy integral)",
            self.dudley
        )?;
        writeln!(
            f,
            "condition (i) RHS      {:.6e} (c delta sqrt(n) / log2 n)",
            self.rhs
        )?;
        write!(
            f,
            "condition (i)          ratio LHS/RHS = {:.6e} ... {}",
            self.ratio,
            verdict(self.condition_i_holds)
        )?;
        if let Some(scan) = &self.scan {
            write!(f, "\nscan                   ")?;
            match scan.smallest_n {
                Some(n) => write!(f, "both conditions first hold at n = {n}")?,
                None => write!(
                    f,
                    "no n <= 2^{} satisfies both conditions (beyond scan range)",
                    scan.max_k_scanned
                )?,
            }
        }
        Ok(())
    }
}

fn condition_point(
    spec: &ProblemSpec,
    shell_index: u32,
    t: f64,
    delta: f64,
    c: f64,
) -> Result<(f64, f64, f64)> {
    let (family, _) = shell_entropy_family(spec, shell_index, t)?;
    let lhs = dudley_lhs(spec, &family, delta)?;
    let rhs = c * delta * (spec.n as f64).sqrt() / spec.log2_n();
    Ok((lhs, rhs, lhs / rhs))
}

/// Evaluates conditions (t) and (i) at the given parameters and optionally
/// scans dyadic `n` for the smallest sample size where both hold.
pub fn oracle_condition_report(params: &OracleCheckParams, scan: bool) -> Result<OracleReport> {
    params.validate()?;
    let spec = params.spec;
    let ceiling = c_sigma_f_ceiling(&spec);
    let c = params.c_sigma_f.unwrap_or(ceiling);
    let arch = architecture_for(&spec)?;
    let (family, budget) = shell_entropy_family(&spec, params.shell_index, params.shell_threshold)?;
    let lhs = dudley_lhs(&spec, &family, params.delta)?;
    let rhs = c * params.delta * (spec.n as f64).sqrt() / spec.log2_n();
    let ratio = lhs / rhs;
    let t_threshold = t_condition_threshold(&spec);

    let scan_report = if scan {
        let mut rows = Vec::new();
        let mut smallest = None;
        let mut max_k = 0;
        for k in 1..=63u32 {
            let n = 1u64 << k;
            let spec_k = ProblemSpec { n, ..spec };
            let t_n = match theorem_tn(&spec_k) {
                Ok(v) => v,
                Err(_) => break,
            };
            let delta_k = 2f64.powi(params.shell_index as i32) * t_n / 8.0;
            let thr = t_condition_threshold(&spec_k);
            let cond_t = t_n >= thr;
            let (l, r, q) = condition_point(&spec_k, params.shell_index, t_n, delta_k, c)?;
            let cond_i = l <= r;
            if cond_t && cond_i && smallest.is_none() {
                smallest = Some(n);
            }
            rows.push(ScanRow {
                k,
                n,
                t_n,
                t_threshold: thr,
                condition_t_holds: cond_t,
                dudley: l,
                rhs: r,
                ratio: q,
                condition_i_holds: cond_i,
            });
            max_k = k;
        }
        Some(ScanReport {
            smallest_n: smallest,
            max_k_scanned: max_k,
            rows,
        })
    } else {
        None
    };

    Ok(OracleReport {
        spec,
        shell_index: params.shell_index,
        shell_threshold: params.shell_threshold,
        delta: params.delta,
        k_n: envelope_kn(&spec),
        depth: arch.depth(),
        max_width: arch.max_width(),
        l1_budget: budget,
        dudley: lhs,
        rhs,
        ratio,
        condition_i_holds: lhs <= rhs,
        t_threshold,
        condition_t_holds: params.shell_threshold >= t_threshold,
        c_sigma_f: c,
        c_ceiling: ceiling,
        scan: scan_report,
    })
}

/// Margins of the concentration-theorem conditions.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationReport {
    pub k_n: f64,
    pub k1: f64,
    pub k2: f64,
    pub cond1_lhs: f64,
    pub cond1_rhs: f64,
    pub cond1_holds: bool,
    pub cond2_lower_limit: f64,
    pub cond2_upper_limit: f64,
    pub cond2_lhs: f64,
    pub cond2_rhs: f64,
    pub cond2_holds: bool,
}

impl std::fmt::Display for ConcentrationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |ok: bool| if ok { "holds" } else { "fails" };
        writeln!(
            f,
            "envelopes              K_n = {:.6}, K1 = {:.6}, K2 = {:.6}",
            self.k_n, self.k1, self.k2
        )?;
        writeln!(
            f,
            "condition (1)          {:.6e} >= {:.6e} ... {}",
            self.cond1_lhs,
            self.cond1_rhs,
            verdict(self.cond1_holds)
        )?;
        writeln!(
            f,
            "condition (2) limits   [{:.6e}, {:.6e}]",
            self.cond2_lower_limit, self.cond2_upper_limit
        )?;
        write!(
            f,
            "condition (2)          {:.6e} >= {:.6e} ... {}",
            self.cond2_lhs,
            self.cond2_rhs,
            verdict(self.cond2_holds)
        )
    }
}

/// Checks the two concentration conditions with `K1 = 8 K_n^2` and
/// `K2 = 16 K_n^2` unless overridden:
///
/// 1. `sqrt(n) omega sqrt(1-omega) sqrt(t*) >= 288 max{2 K1, sqrt(2 K2)}`;
/// 2. `sqrt(n) omega (1-omega) delta / (96 sqrt(2) max{K1, 2 K2})` at least
///    the entropy integral from `omega (1-omega) delta / (16 max{K1, 2 K2})`
///    to `sqrt(delta)`.
///
/// The integrand is the same closed-form entropy surrogate used by
/// [`dudley_lhs`] (radius `u / (4 K_n)` for the shell class at `(j, t)`).
pub fn concentration_condition_check(params: &OracleCheckParams) -> Result<ConcentrationReport> {
    params.validate()?;
    let spec = params.spec;
    let n = spec.n as f64;
    let kn = envelope_kn(&spec);
    let k1 = params.k1.unwrap_or(8.0 * kn * kn);
    let k2 = params.k2.unwrap_or(16.0 * kn * kn);
    let omega = params.omega;

    let cond1_lhs = n.sqrt() * omega * (1.0 - omega).sqrt() * params.t_star.sqrt();
    let cond1_rhs = 288.0 * (2.0 * k1).max((2.0 * k2).sqrt());

    let max_k = k1.max(2.0 * k2);
    let lower = omega * (1.0 - omega) * params.delta / (16.0 * max_k);
    let upper = params.delta.sqrt();
    let cond2_lhs = n.sqrt() * omega * (1.0 - omega) * params.delta
        / (96.0 * 2f64.sqrt() * max_k);
    let (family, _) = shell_entropy_family(&spec, params.shell_index, params.shell_threshold)?;
    let cond2_rhs = if lower >= upper {
        0.0
    } else {
        adaptive_simpson(
            move |u| family.sqrt_entropy_at(u / (4.0 * kn)),
            lower,
            upper,
            QuadTol::default(),
        )?
    };

    Ok(ConcentrationReport {
        k_n: kn,
        k1,
        k2,
        cond1_lhs,
        cond1_rhs,
        cond1_holds: cond1_lhs >= cond1_rhs,
        cond2_lower_limit: lower,
        cond2_upper_limit: upper,
        cond2_lhs,
        cond2_rhs,
        cond2_holds: cond2_lhs >= cond2_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u64, beta: f64, d: u32) -> ProblemSpec {
        ProblemSpec::new(n, d, beta, 1.0, 1.0).unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn architecture_golden_values() {
        let a = architecture_for(&spec(1024, 2.0, 1)).unwrap();
        assert_eq!(a.depth(), 38);
        assert_eq!(a.widths()[1], 72);
        assert_eq!(a.widths()[0], 1);
        assert_eq!(*a.widths().last().unwrap(), 1);
        assert!(a.widths()[1..=a.depth()].iter().all(|&w| w == 72));

        let a = architecture_for(&spec(512, 1.0, 1)).unwrap();
        assert_eq!(a.depth(), 22);
        assert_eq!(a.widths()[1], 96);

        let a = architecture_for(&spec(2, 1.0, 1)).unwrap();
        assert_eq!(a.depth(), 14);
        assert_eq!(a.widths()[1], 24);
    }

    #[test]
    fn tuning_lambda_golden_values() {
        assert_eq!(tuning_lambda(2), 0.5);
        assert_eq!(tuning_lambda(1024), 976.5625);
        assert_eq!(tuning_lambda(1 << 20), 61.03515625);
    }

    #[test]
    fn approx_budget_golden() {
        let s = ProblemSpec::new(1024, 1, 1.0, 1.0, 1.0).unwrap();
        let r = approx_budget_report(
            &s,
            &ApproxBudget {
                m: 10,
                width_factor: 4,
            },
        )
        .unwrap();
        assert!(rel_close(r.error_bound, 0.9609375, 1e-12), "{}", r.error_bound);
        assert_eq!(r.sparsity_bound, 730944.0);
        // N = 4 < (F+1) e = 5.44: guarantee not in force
        assert!(!r.guarantee_in_force);

        // m -> infinity: only the F 3^beta N^{-beta/d} term survives
        let tail = approx_budget_report(
            &s,
            &ApproxBudget {
                m: 200,
                width_factor: 4,
            },
        )
        .unwrap();
        assert!(rel_close(tail.error_bound, 3.0 * 0.25, 1e-9));

        // doubling N doubles the sparsity bound
        let doubled = approx_budget_report(&s, &ApproxBudget { m: 10, width_factor: 8 }).unwrap();
        assert_eq!(doubled.sparsity_bound, 2.0 * r.sparsity_bound);
        assert_eq!(doubled.sparsity_bound, 2.0 * 730944.0);
    }

    #[test]
    fn entropy_golden_values() {
        let q = EntropyQuery {
            kind: EntropyKind::SparseUnit,
            depth: 5,
            max_width: 20,
            sparsity: 10.0,
            magnitude: 1.0,
            delta: 0.1,
        };
        let v = entropy_bound(&q).unwrap();
        assert!(rel_close(v.value, 200.0 * 8000f64.log2(), 1e-12));
        assert!(rel_close(v.value, 2593.157, 1e-5), "{}", v.value);

        let v = entropy_bound(&EntropyQuery {
            kind: EntropyKind::SparseBoxM,
            magnitude: 2.0,
            ..q
        })
        .unwrap();
        assert!(rel_close(v.value, 2000.0 * 16000f64.log2(), 1e-12));
        assert!(rel_close(v.value, 27931.569, 1e-5), "{}", v.value);

        let v1 = entropy_bound(&EntropyQuery {
            kind: EntropyKind::ModifiedL1,
            ..q
        })
        .unwrap();
        assert!(rel_close(v1.value, 12000.0 * 160000f64.log2(), 1e-12));
        assert!(rel_close(v1.value, 207452.549, 1e-5), "{}", v1.value);

        let v2 = entropy_bound(&EntropyQuery {
            kind: EntropyKind::ModifiedL2,
            ..q
        })
        .unwrap();
        // exactly twice the l1 bound
        assert_eq!(v2.value, 2.0 * v1.value);
    }

    #[test]
    fn entropy_degenerate_clamps_to_zero() {
        let q = EntropyQuery {
            kind: EntropyKind::SparseUnit,
            depth: 1,
            max_width: 1,
            sparsity: 1.0,
            magnitude: 1.0,
            delta: 1e9,
        };
        let v = entropy_bound(&q).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.degenerate);

        assert!(entropy_bound(&EntropyQuery { delta: 0.0, ..q }).is_err());
        assert!(entropy_bound(&EntropyQuery { delta: -1.0, ..q }).is_err());
    }

    #[test]
    fn entropy_monotonicity() {
        let base = EntropyQuery {
            kind: EntropyKind::SparseBoxM,
            depth: 5,
            max_width: 20,
            sparsity: 10.0,
            magnitude: 2.0,
            delta: 0.1,
        };
        let v = entropy_bound(&base).unwrap().value;
        assert!(entropy_bound(&EntropyQuery { delta: 0.01, ..base }).unwrap().value > v);
        assert!(entropy_bound(&EntropyQuery { sparsity: 20.0, ..base }).unwrap().value > v);
        assert!(entropy_bound(&EntropyQuery { depth: 6, ..base }).unwrap().value > v);
        assert!(entropy_bound(&EntropyQuery { max_width: 40, ..base }).unwrap().value > v);
        assert!(entropy_bound(&EntropyQuery { magnitude: 4.0, ..base }).unwrap().value > v);
    }

    #[test]
    fn envelope_kn_values() {
        let v = envelope_kn(&spec(1024, 2.0, 1));
        assert!(rel_close(v, 32f64.sqrt() * 10f64.sqrt(), 1e-15));
        assert!((v - 17.8885).abs() < 1e-3);

        // F dominates
        let v = envelope_kn(&ProblemSpec::new(2, 1, 1.0, 5.0, 0.1).unwrap());
        assert_eq!(v, 5.0);

        // sigma -> 0 limit
        let v = envelope_kn(&ProblemSpec::new(1024, 1, 1.0, 1.0, 5e-324).unwrap());
        assert_eq!(v, 1.0);
    }

    #[test]
    fn theorem_tn_golden() {
        assert_eq!(theorem_tn(&spec(1024, 2.0, 1)).unwrap(), 562500.0);
        let v = theorem_tn(&spec(512, 1.0, 1)).unwrap();
        assert_eq!(v, 8.0 * 96.0 * 531441.0 / 512.0);
        assert!(rel_close(v, 797161.5, 1e-12));
    }

    #[test]
    fn t_condition_threshold_golden() {
        let v = t_condition_threshold(&spec(1024, 1.0, 1));
        assert_eq!(v, 1.073741824e11);

        // decays like log2^2(n)/n along a dyadic grid (eventually monotone)
        let mut prev = f64::INFINITY;
        for k in 4..40 {
            let v = t_condition_threshold(&spec(1u64 << k, 1.0, 1));
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn c_ceiling_value() {
        let c = c_sigma_f_ceiling(&spec(1024, 2.0, 1));
        assert!(rel_close(c, 4.76837e-7, 1e-4), "{c:e}");
        assert_eq!(c, 1.0 / (2f64.powi(20) * 2.0));
    }

    #[test]
    fn dudley_empty_interval() {
        let s = spec(1024, 2.0, 1);
        let kn = envelope_kn(&s);
        let family = EntropyFamily {
            kind: EntropyKind::ModifiedL1,
            depth: 38,
            max_width: 72,
            sparsity: 288.0,
            magnitude: 1.0,
        };
        // delta >= 2^22 K_n^4 makes the limits cross
        let delta = 2f64.powi(22) * kn.powi(4) * 1.001;
        assert_eq!(dudley_lhs(&s, &family, delta).unwrap(), 0.0);
        let (lo, hi) = dudley_limits(&s, delta);
        assert!(lo >= hi);
    }

    #[test]
    fn dudley_against_midpoint_oracle() {
        let s = spec(1024, 2.0, 1);
        let t = theorem_tn(&s).unwrap();
        let delta = t / 8.0;
        let (family, budget) = shell_entropy_family(&s, 0, t).unwrap();
        assert!(rel_close(budget, 576.0, 1e-12));
        let v = dudley_lhs(&s, &family, delta).unwrap();

        let kn = envelope_kn(&s);
        let (a, b) = dudley_limits(&s, delta);
        let k = 400_000usize;
        let h = (b - a) / k as f64;
        let oracle: f64 = (0..k)
            .map(|i| {
                let u = a + (i as f64 + 0.5) * h;
                entropy_bound(&family.at(u / (4.0 * kn)))
                    .unwrap()
                    .value
                    .max(0.0)
                    .sqrt()
            })
            .sum::<f64>()
            * h;
        assert!(rel_close(v, oracle, 1e-5), "{v} vs {oracle}");
        assert!(v > 0.0);
    }

    #[test]
    fn oracle_report_fields_and_monotonicity() {
        let s = spec(1024, 2.0, 1);
        let t = theorem_tn(&s).unwrap();
        let params = OracleCheckParams {
            spec: s,
            shell_index: 0,
            shell_threshold: t,
            delta: t / 8.0,
            c_sigma_f: None,
            omega: 0.5,
            t_star: t,
            k1: None,
            k2: None,
        };
        let report = oracle_condition_report(&params, false).unwrap();
        assert_eq!(report.depth, 38);
        assert_eq!(report.max_width, 72);
        assert!(rel_close(report.c_ceiling, 4.76837e-7, 1e-4));
        assert!(report.dudley > 0.0);
        // at desk scale the tiny c makes condition (i) fail
        assert!(!report.condition_i_holds);

        // enlarging c (here: from half the ceiling up to it) cannot flip
        // condition (i) from holding to failing
        let half = OracleCheckParams {
            c_sigma_f: Some(report.c_ceiling / 2.0),
            ..params
        };
        let r_half = oracle_condition_report(&half, false).unwrap();
        assert!(r_half.rhs < report.rhs);
        assert!(u8::from(r_half.condition_i_holds) <= u8::from(report.condition_i_holds));
    }

    #[test]
    fn oracle_empty_interval_vacuous() {
        let s = spec(1024, 2.0, 1);
        let kn = envelope_kn(&s);
        let t = theorem_tn(&s).unwrap();
        let params = OracleCheckParams {
            spec: s,
            shell_index: 0,
            shell_threshold: t,
            delta: 2f64.powi(22) * kn.powi(4) * 2.0,
            c_sigma_f: None,
            omega: 0.5,
            t_star: 1.0,
            k1: None,
            k2: None,
        };
        let report = oracle_condition_report(&params, false).unwrap();
        assert_eq!(report.dudley, 0.0);
        assert!(report.condition_i_holds);
    }

    #[test]
    fn concentration_golden_and_limits() {
        let s = spec(1024, 2.0, 1);
        let t = theorem_tn(&s).unwrap();
        let base = OracleCheckParams {
            spec: s,
            shell_index: 0,
            shell_threshold: t,
            delta: t / 8.0,
            c_sigma_f: None,
            omega: 0.5,
            t_star: t,
            k1: None,
            k2: None,
        };
        let r = concentration_condition_check(&base).unwrap();
        // K_n^2 = 32 * 10 = 320 exactly at sigma = 1, n = 1024, F = 1
        assert!(rel_close(r.k1, 2560.0, 1e-12), "{}", r.k1);
        assert!(rel_close(r.k2, 5120.0, 1e-12), "{}", r.k2);
        assert!(rel_close(r.cond1_rhs, 288.0 * 5120.0, 1e-12), "{}", r.cond1_rhs);
        assert!(rel_close(r.cond1_rhs, 1474560.0, 1e-12));

        // t* huge: condition (1) holds
        let r = concentration_condition_check(&OracleCheckParams {
            t_star: 1e30,
            ..base
        })
        .unwrap();
        assert!(r.cond1_holds);

        // omega near the edges: condition (1) fails for fixed t*
        for omega in [1e-9, 1.0 - 1e-9] {
            let r = concentration_condition_check(&OracleCheckParams { omega, ..base }).unwrap();
            assert!(!r.cond1_holds);
        }
    }

    #[test]
    fn params_validation() {
        let s = spec(1024, 2.0, 1);
        let ok = OracleCheckParams {
            spec: s,
            shell_index: 0,
            shell_threshold: 1.0,
            delta: 1.0,
            c_sigma_f: None,
            omega: 0.5,
            t_star: 1.0,
            k1: None,
            k2: None,
        };
        assert!(oracle_condition_report(&ok, false).is_ok());
        assert!(oracle_condition_report(
            &OracleCheckParams { omega: 1.0, ..ok },
            false
        )
        .is_err());
        assert!(oracle_condition_report(
            &OracleCheckParams {
                c_sigma_f: Some(1.0),
                ..ok
            },
            false
        )
        .is_err());
        assert!(ProblemSpec::new(1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemSpec::new(16, 1, 0.0, 1.0, 1.0).is_err());
        assert!(ProblemSpec::new(16, 1, 1.0, 0.5, 1.0).is_err());
        assert!(ProblemSpec::new(16, 1, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ceil_log2_exact() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
        assert_eq!(ceil_log2(u64::MAX), 64);
    }
}
