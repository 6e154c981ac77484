//! Command-line interface: dataset generation, penalized training, model
//! evaluation, the sparse-to-modified embedding, closed-form bound
//! calculators, oracle-condition reports, rate studies, and gradient checks.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments, malformed
//! files), 2 runtime failure (I/O, divergence, non-convergence).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modrelu_core::bounds::{
    approx_budget_report, architecture_for, c_sigma_f_ceiling, entropy_bound, envelope_kn,
    oracle_condition_report, concentration_condition_check, t_condition_threshold, theorem_tn,
    tuning_lambda, ApproxBudget, EntropyKind, EntropyQuery, OracleCheckParams, ProblemSpec,
};
use modrelu_core::bridge::{embed_sparse_to_modified, verify_inclusion_chain};
use modrelu_core::data::{
    make_target, read_dataset, sample_dataset, write_dataset, NoiseKind, NoiseModel, TargetFamily,
};
use modrelu_core::net::{load_model, save_model, Architecture, NetKind};
use modrelu_core::study::{parse_study_config, run_rate_study, write_report, CONFIG_KEYS_HELP};
use modrelu_core::train::{
    gradient_check, mse, train, PenaltyKind, PenaltySpec, TrainConfig,
};
use modrelu_core::Error;

#[derive(Parser)]
#[command(
    name = "modrelu",
    version,
    about = "Modified ReLU networks: training, embeddings, bound calculators, rate studies",
    after_help = CONFIG_KEYS_HELP
)]
struct Cli {
    /// Override the subcommand's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Rate-study config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for cell-parallel commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic regression dataset.
    GenData(GenDataArgs),
    /// Train a penalized network on a dataset file.
    Train(TrainArgs),
    /// Evaluate a model file on a dataset file.
    Eval(EvalArgs),
    /// Embed a sparse plain model into the modified class and report the
    /// inclusion-chain budgets.
    Embed(EmbedArgs),
    /// Closed-form bound calculators.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Oracle-inequality and concentration condition report.
    OracleCheck(OracleArgs),
    /// Run a seeded rate study from a config file.
    RateStudy,
    /// Compare reverse-mode gradients against finite differences.
    GradCheck(GradCheckArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// holder_abs | cosine_mix | teacher_network
    #[arg(long)]
    family: String,
    #[arg(long)]
    beta: f64,
    /// Smoothness-ball radius F.
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// gaussian | bounded_uniform
    #[arg(long, default_value = "gaussian")]
    noise: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Output file (default <out>/dataset.txt).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file from gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Hidden transitions (fixed architecture).
    #[arg(long, conflicts_with = "theoretical_arch")]
    depth: Option<usize>,
    /// Hidden width (fixed architecture).
    #[arg(long, conflicts_with = "theoretical_arch")]
    width: Option<usize>,
    /// Use the theoretical architecture schedule for the dataset's (n, beta,
    /// F, sigma, d) header.
    #[arg(long)]
    theoretical_arch: bool,
    /// Append a constant-one input coordinate.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    augment: bool,
    /// none | l1 | l2sq
    #[arg(long, default_value = "none")]
    penalty: String,
    /// Fixed penalty coefficient.
    #[arg(long, conflicts_with_all = ["lambda_theoretical", "lambda_scale"])]
    lambda: Option<f64>,
    /// Use log2^6(n)/n.
    #[arg(long)]
    lambda_theoretical: bool,
    /// Multiply log2^6(n)/n by this factor.
    #[arg(long)]
    lambda_scale: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Mini-batch size or "full".
    #[arg(long, default_value = "full")]
    batch: String,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Output clip bound F attached to the trained model.
    #[arg(long)]
    clip: Option<f64>,
    /// Keep the best iterate instead of the final one.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    keep_best: bool,
    /// Model output (default <out>/model.json).
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Per-epoch trace CSV output.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    /// Plain model file.
    #[arg(long)]
    model: PathBuf,
    /// Random probe inputs for the discrepancy check.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Modified-model output (default <out>/embedded.json).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Theoretical depth and width schedule.
    Architecture(SpecArgs),
    /// Penalty coefficient log2^6(n)/n.
    Lambda {
        #[arg(long)]
        n: u64,
    },
    /// Complexity term 8 |p_n|inf log2^6(n) / n.
    Tn(SpecArgs),
    /// Threshold of the oracle condition on t_n.
    TThreshold(SpecArgs),
    /// Truncation envelope K_n.
    Kn(SpecArgs),
    /// Covering-entropy bounds.
    Entropy(EntropyArgs),
    /// Approximation-error and sparsity budgets.
    Approx(ApproxArgs),
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

impl SpecArgs {
    fn spec(&self) -> Result<ProblemSpec, Error> {
        ProblemSpec::new(self.n, self.d, self.beta, self.f, self.sigma)
    }
}

#[derive(Args)]
struct EntropyArgs {
    /// sparse_unit | sparse_box | modified_l1 | modified_l2
    #[arg(long)]
    kind: String,
    /// Depth L.
    #[arg(long)]
    depth: u32,
    /// Max width |p|inf.
    #[arg(long)]
    p_inf: u64,
    /// Sparsity s (budget surrogate for the modified classes).
    #[arg(long)]
    s: f64,
    /// Magnitude bound M (sparse_box only).
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Covering radius.
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    /// Dyadic accuracy parameter m.
    #[arg(long)]
    m: u32,
    /// Width-scaling parameter N.
    #[arg(long)]
    n_factor: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Dyadic shell index j.
    #[arg(long, default_value_t = 0)]
    j: u32,
    /// Shell threshold t (default: theoretical t_n).
    #[arg(long)]
    t: Option<f64>,
    /// Radius delta (default: 2^j t / 8).
    #[arg(long)]
    delta: Option<f64>,
    /// Constant c_{sigma,F} (default: its ceiling).
    #[arg(long)]
    c_sigma_f: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// Concentration threshold t* (default: t).
    #[arg(long)]
    t_star: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    /// Scan dyadic n for the smallest sample size satisfying both conditions.
    #[arg(long)]
    scan: bool,
    /// Write the scan rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GradCheckArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Synthetic probe-dataset size.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value = "none")]
    penalty: String,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here with a zero exit
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: could not configure {k} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::Parse(_)
        | Error::ShapeMismatch(_)
        | Error::WrongKind(_)
        | Error::NonFinite(_)
        | Error::DegenerateFit(_) => 1,
        Error::Io(_)
        | Error::Json(_)
        | Error::QuadratureNonConvergence { .. }
        | Error::Divergence { .. }
        | Error::Study(_) => 2,
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::GenData(args) => gen_data(&cli, args),
        Command::Train(args) => train_cmd(&cli, args),
        Command::Eval(args) => eval_cmd(args),
        Command::Embed(args) => embed_cmd(&cli, args),
        Command::Bounds(args) => bounds_cmd(args),
        Command::OracleCheck(args) => oracle_cmd(&cli, args),
        Command::RateStudy => rate_study_cmd(&cli),
        Command::GradCheck(args) => grad_check_cmd(&cli, args),
    }
}

fn gen_data(cli: &Cli, args: &GenDataArgs) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(0);
    let family: TargetFamily = args.family.parse()?;
    let noise_kind: NoiseKind = args.noise.parse()?;
    let target = make_target(family, args.beta, args.f, args.d, seed)?;
    let noise = NoiseModel::new(noise_kind, args.sigma)?;
    let dataset = sample_dataset(&target, &noise, args.n, args.d, seed)?;
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir(cli).join("dataset.txt"));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_dataset(&dataset, &path)?;
    println!("seed: {seed}");
    println!(
        "wrote {} observations (d = {}, family = {family}, sigma = {}) to {}",
        args.n,
        args.d,
        args.sigma,
        path.display()
    );
    Ok(())
}

fn train_cmd(cli: &Cli, args: &TrainArgs) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(0);
    let dataset = read_dataset(&args.data)?;
    let p = dataset.provenance;
    let input_dim = dataset.dim() + usize::from(args.augment);

    let arch = if args.theoretical_arch {
        let spec = ProblemSpec::new(p.n as u64, p.d as u32, p.beta, p.radius, p.sigma)?;
        let theoretical = architecture_for(&spec)?;
        let mut widths = theoretical.widths().to_vec();
        widths[0] = input_dim;
        Architecture::new(widths)?
    } else {
        let (Some(depth), Some(width)) = (args.depth, args.width) else {
            return Err(Error::InvalidParameter(
                "pass --depth and --width, or --theoretical-arch".into(),
            ));
        };
        Architecture::uniform(input_dim, depth, width)?
    };

    let penalty_kind: PenaltyKind = args.penalty.parse()?;
    let lambda = if let Some(v) = args.lambda {
        v
    } else if args.lambda_theoretical {
        tuning_lambda(p.n as u64)
    } else if let Some(s) = args.lambda_scale {
        s * tuning_lambda(p.n as u64)
    } else {
        0.0
    };
    let batch_size = if args.batch == "full" {
        None
    } else {
        Some(args.batch.parse::<usize>().map_err(|_| {
            Error::InvalidParameter(format!("batch must be \"full\" or an integer, got '{}'", args.batch))
        })?)
    };

    let config = TrainConfig {
        kind: NetKind::Modified,
        arch,
        penalty: PenaltySpec::new(penalty_kind, lambda)?,
        step_size: args.step,
        max_epochs: args.epochs,
        batch_size,
        seed,
        init_scale: args.init_scale,
        clip_bound: args.clip,
        keep_best_iterate: args.keep_best,
    };
    println!("seed: {seed}");
    println!(
        "training modified network {:?} on n = {}, penalty = {} (lambda = {lambda:.6e})",
        config.arch.widths(),
        dataset.len(),
        penalty_kind
    );
    let (model, trace) = train(&config, &dataset)?;
    let final_mse = mse(&model, &dataset)?;
    println!(
        "initial objective {:.6e} -> best {:.6e} (epoch {})",
        trace.initial_objective,
        trace.best_objective(),
        trace.best_epoch.map_or(0, |e| e)
    );
    println!(
        "final: mse {:.6e}, l1 {:.6}, l2sq {:.6}, effective nonzeros {}",
        final_mse,
        model.l1_norm(),
        model.l2sq_norm(),
        model.effective_nonzeros()?
    );

    let model_path = args
        .model_out
        .clone()
        .unwrap_or_else(|| out_dir(cli).join("model.json"));
    if let Some(parent) = model_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&model, &model_path)?;
    println!("model written to {}", model_path.display());
    if let Some(trace_path) = &args.trace_out {
        if let Some(parent) = trace_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(trace_path, trace.to_csv())?;
        println!("trace written to {}", trace_path.display());
    }
    Ok(())
}

fn eval_cmd(args: &EvalArgs) -> Result<(), Error> {
    let model = load_model(&args.model)?;
    let dataset = read_dataset(&args.data)?;
    let value = mse(&model, &dataset)?;
    println!("n: {}", dataset.len());
    println!("d: {} (model input width {})", dataset.dim(), model.input_dim());
    println!("mse: {value:.6e}");
    println!("l1: {:.6}", model.l1_norm());
    println!("l2sq: {:.6}", model.l2sq_norm());
    if model.kind() == NetKind::Modified {
        println!("effective nonzeros: {}", model.effective_nonzeros()?);
    }
    if let Some(f) = model.clip_bound() {
        println!("clip bound: {f}");
    }
    Ok(())
}

fn embed_cmd(cli: &Cli, args: &EmbedArgs) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(0);
    let plain = load_model(&args.model)?;
    let report = verify_inclusion_chain(&plain, args.trials, seed)?;
    println!("seed: {seed}");
    println!("{report}");
    let embedded = embed_sparse_to_modified(&plain)?;
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir(cli).join("embedded.json"));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&embedded, &path)?;
    println!("embedded model written to {}", path.display());
    if !report.all_hold() {
        return Err(Error::Study("inclusion-chain budget violated".into()));
    }
    Ok(())
}

fn bounds_cmd(cmd: &BoundsCommand) -> Result<(), Error> {
    match cmd {
        BoundsCommand::Architecture(args) => {
            let arch = architecture_for(&args.spec()?)?;
            println!("depth L_n: {}", arch.depth());
            println!("interior width: {}", arch.widths()[1]);
            println!("|p_n|inf: {}", arch.max_width());
        }
        BoundsCommand::Lambda { n } => {
            if *n < 2 {
                return Err(Error::InvalidParameter("n must be >= 2".into()));
            }
            println!("lambda: {}", tuning_lambda(*n));
        }
        BoundsCommand::Tn(args) => {
            println!("t_n: {}", theorem_tn(&args.spec()?)?);
        }
        BoundsCommand::TThreshold(args) => {
            println!("t threshold: {}", t_condition_threshold(&args.spec()?));
        }
        BoundsCommand::Kn(args) => {
            println!("K_n: {}", envelope_kn(&args.spec()?));
        }
        BoundsCommand::Entropy(args) => {
            let kind = match args.kind.as_str() {
                "sparse_unit" => EntropyKind::SparseUnit,
                "sparse_box" => EntropyKind::SparseBoxM,
                "modified_l1" => EntropyKind::ModifiedL1,
                "modified_l2" => EntropyKind::ModifiedL2,
                other => {
                    return Err(Error::Parse(format!("unknown entropy kind '{other}'")));
                }
            };
            let value = entropy_bound(&EntropyQuery {
                kind,
                depth: args.depth,
                max_width: args.p_inf,
                sparsity: args.s,
                magnitude: args.m,
                delta: args.delta,
            })?;
            println!("entropy bound: {}", value.value);
            if value.degenerate {
                println!("(degenerate query: log argument <= 1, clamped to 0)");
            }
        }
        BoundsCommand::Approx(args) => {
            let spec = ProblemSpec::new(4, args.d, args.beta, args.f, 1.0)?;
            let report = approx_budget_report(
                &spec,
                &ApproxBudget {
                    m: args.m,
                    width_factor: args.n_factor,
                },
            )?;
            println!("error bound: {}", report.error_bound);
            println!("sparsity bound: {}", report.sparsity_bound);
            println!(
                "guarantee in force: {} (N >= {:.6} required)",
                report.guarantee_in_force, report.width_factor_threshold
            );
        }
    }
    Ok(())
}

fn oracle_cmd(cli: &Cli, args: &OracleArgs) -> Result<(), Error> {
    let spec = args.spec.spec()?;
    let t = match args.t {
        Some(t) => t,
        None => theorem_tn(&spec)?,
    };
    let delta = args
        .delta
        .unwrap_or_else(|| 2f64.powi(args.j as i32) * t / 8.0);
    let params = OracleCheckParams {
        spec,
        shell_index: args.j,
        shell_threshold: t,
        delta,
        c_sigma_f: args.c_sigma_f,
        omega: args.omega,
        t_star: args.t_star.unwrap_or(t),
        k1: args.k1,
        k2: args.k2,
    };
    let report = oracle_condition_report(&params, args.scan)?;
    println!("{report}");
    println!();
    let conc = concentration_condition_check(&params)?;
    println!("{conc}");
    println!();
    println!(
        "ceiling for c_sigma_F: {:.6e}",
        c_sigma_f_ceiling(&spec)
    );
    if let (Some(path), Some(scan)) = (&args.csv, &report.scan) {
        let mut csv = String::from("k,n,t_n,t_threshold,condition_t,dudley,rhs,ratio,condition_i\n");
        for row in &scan.rows {
            csv.push_str(&format!(
                "{},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{}\n",
                row.k,
                row.n,
                row.t_n,
                row.t_threshold,
                row.condition_t_holds,
                row.dudley,
                row.rhs,
                row.ratio,
                row.condition_i_holds
            ));
        }
        std::fs::write(path, csv)?;
        println!("scan rows written to {}", path.display());
    }
    let _ = cli;
    Ok(())
}

fn rate_study_cmd(cli: &Cli) -> Result<(), Error> {
    let Some(config_path) = &cli.config else {
        return Err(Error::InvalidParameter(
            "rate-study needs --config <path>".into(),
        ));
    };
    let text = std::fs::read_to_string(config_path)?;
    let mut config = parse_study_config(&text)?;
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    println!("base seed: {}", config.base_seed);
    println!(
        "grid: {:?} x {} replicates, penalty {}, target {} (beta = {}, F = {}, sigma = {})",
        config.n_grid,
        config.replicates,
        config.penalty,
        config.family,
        config.beta,
        config.radius,
        config.sigma
    );
    let result = run_rate_study(&config)?;
    let dir = out_dir(cli);
    let files = write_report(&result, &dir)?;
    println!();
    println!("{:>8} {:>14} {:>14} {:>6}", "n", "median_mse", "iqr", "valid");
    for s in &result.summaries {
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>6}",
            s.n, s.median_test_mse, s.iqr_test_mse, s.valid
        );
    }
    println!();
    match result.fitted_slope {
        Some(slope) => println!(
            "fitted slope: {slope:.4}   theoretical exponent -2beta/(2beta+d): {:.4}",
            result.theoretical_exponent
        ),
        None => println!(
            "fitted slope: n/a (single n)   theoretical exponent: {:.4}",
            result.theoretical_exponent
        ),
    }
    if result.diverged_cells > 0 {
        println!("diverged cells: {}", result.diverged_cells);
    }
    println!(
        "report: {} {} {}",
        files.records_csv.display(),
        files.summary_csv.display(),
        files.plot_svg.display()
    );
    Ok(())
}

fn grad_check_cmd(cli: &Cli, args: &GradCheckArgs) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(0);
    let penalty_kind: PenaltyKind = args.penalty.parse()?;
    let target = make_target(TargetFamily::HolderAbs, 1.0, 1.5, args.d, seed)?;
    let noise = NoiseModel::new(NoiseKind::Gaussian, 0.1)?;
    let dataset = sample_dataset(&target, &noise, args.n, args.d, seed)?;
    let config = TrainConfig {
        kind: NetKind::Modified,
        arch: Architecture::uniform(args.d + 1, args.depth, args.width)?,
        penalty: PenaltySpec::new(penalty_kind, args.lambda)?,
        step_size: 0.05,
        max_epochs: 1,
        batch_size: None,
        seed,
        init_scale: 1.0,
        clip_bound: None,
        keep_best_iterate: true,
    };
    println!("seed: {seed}");
    let worst = gradient_check(&config, &dataset, args.trials, seed)?;
    println!(
        "max relative gradient error over {} trials: {worst:.3e}",
        args.trials
    );
    Ok(())
}
