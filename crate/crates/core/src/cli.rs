//! The command layer behind the `nnfir` binary.
//!
//! Every command reads its inputs, writes its outputs under `--out-dir` and
//! returns a process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | `kkt`: the residual exceeds `--kkt-tol` |
//! | 2 | usage error (bad flags, shapes, `N < q`) |
//! | 3 | domain, parse or i/o error |
//! | 4 | ill-posed data or infeasible point |

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{
    file_digest, fmt_f64, format_trace, read_impulse_response, read_matrix, write_json, write_matrix, write_text,
    FitSummary,
};
use crate::linop::ImpulseResponse;
use crate::solver::{
    fit, kkt_report, FitConfig, FitStatus, DEFAULT_DIVERGENCE_TOL, DEFAULT_KKT_TOL, DEFAULT_MAX_ITERATIONS,
    DEFAULT_PARAM_TOL,
};
use crate::stats::{
    gen_inputs, gen_noisy_outputs, run_misspecified, run_regime, Execution, ExperimentReport, Generator, InputLaw,
    MisspecifiedSpec, NoiseModel, Purpose, Regime, RegimeSpec, Scale, StreamId,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_KKT_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_ILL_POSED: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        Error::Domain(_) | Error::Parse(_) | Error::Io(_) => EXIT_DOMAIN,
        Error::Infeasible { .. } | Error::Degenerate(_) => EXIT_ILL_POSED,
    }
}

#[derive(Debug, Parser)]
#[command(name = "nnfir", version, about = "Nonnegative FIR identification by I-divergence minimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an order-q impulse response to input/output matrix files.
    Fit(FitArgs),
    /// Write a synthetic input/output pair.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment over a ladder of (N, m) scales.
    Experiment(ExperimentArgs),
    /// Check the Kuhn-Tucker conditions at a given impulse response.
    Kkt(KktArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverFlags {
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
    #[arg(long = "div-tol", default_value_t = DEFAULT_DIVERGENCE_TOL)]
    pub div_tol: f64,
    #[arg(long = "param-tol", default_value_t = DEFAULT_PARAM_TOL)]
    pub param_tol: f64,
    #[arg(long = "kkt-tol", default_value_t = DEFAULT_KKT_TOL)]
    pub kkt_tol: f64,
    /// Record every iterate in trace.csv (default).
    #[arg(long, overrides_with = "no_trace")]
    #[serde(skip)]
    pub trace: bool,
    /// Record only the divergence in trace.csv.
    #[arg(long = "no-trace", overrides_with = "trace")]
    pub no_trace: bool,
}

impl SolverFlags {
    pub fn fit_config(&self, initial_h: Option<ImpulseResponse>) -> FitConfig {
        FitConfig {
            max_iterations: self.max_iter,
            divergence_tol: self.div_tol,
            param_tol: self.param_tol,
            kkt_tol: self.kkt_tol,
            initial_h,
            trace: !self.no_trace,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Input matrix file, (N+1) rows by m columns.
    pub u_file: PathBuf,
    /// Output matrix file, same shape as the input.
    pub y_file: PathBuf,
    #[arg(long)]
    pub q: usize,
    /// Strictly positive starting point, comma separated (default: uniform).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub init: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Order of h*; checked against its length when given.
    #[arg(long)]
    pub q: Option<usize>,
    /// Horizon N (the files have N+1 rows).
    #[arg(long = "n")]
    pub n: usize,
    /// Number of experiments (columns).
    #[arg(long = "m")]
    pub m: usize,
    /// True impulse response, comma separated.
    #[arg(long = "h-star", value_delimiter = ',', num_args = 1.., conflicts_with = "h_star_file")]
    pub h_star: Option<Vec<f64>>,
    /// True impulse response as a JSON array, an h_hat.json file or CSV.
    #[arg(long = "h-star-file")]
    pub h_star_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "input-lower", default_value_t = 0.1)]
    pub input_lower: f64,
    #[arg(long = "input-upper", default_value_t = 10.0)]
    pub input_upper: f64,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Iir,
    Power,
    Convolution,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(clap::ArgGroup::new("kind").required(true).args(["regime", "misspecified"])))]
pub struct ExperimentArgs {
    /// columns_iid, rows_iid or array_iid.
    #[arg(long)]
    pub regime: Option<String>,
    /// Fit data from a system outside the model class.
    #[arg(long, value_enum)]
    pub misspecified: Option<GeneratorKind>,
    /// Ladder of scales, e.g. "(10,5),(20,10),(40,20)".
    #[arg(long)]
    pub scales: String,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    /// Model order (default: from --h-star, or 5).
    #[arg(long)]
    pub q: Option<usize>,
    /// True impulse response (default: linear decay (q+1-k)/(q+1)).
    #[arg(long = "h-star", value_delimiter = ',', num_args = 1..)]
    pub h_star: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "input-lower", default_value_t = 0.1)]
    pub input_lower: f64,
    #[arg(long = "input-upper", default_value_t = 10.0)]
    pub input_upper: f64,
    /// Pole of the IIR generator.
    #[arg(long = "iir-a", default_value_t = 0.5)]
    pub iir_a: f64,
    /// Numerator of the IIR generator, comma separated.
    #[arg(long = "iir-b", value_delimiter = ',', num_args = 1.., default_values_t = vec![1.0, 0.5])]
    pub iir_b: Vec<f64>,
    /// Exponent of the power generator.
    #[arg(long = "power-exponent", default_value_t = 1.5)]
    pub power_exponent: f64,
    /// Run replications on one thread.
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KktArgs {
    pub u_file: PathBuf,
    pub y_file: PathBuf,
    /// Impulse response: JSON array, h_hat.json or CSV.
    pub h_file: PathBuf,
    /// Expected order; checked against the length of h.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "kkt-tol", default_value_t = DEFAULT_KKT_TOL)]
    pub kkt_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub q: usize,
    pub seed: Option<u64>,
    pub args: serde_json::Value,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub tool_version: &'static str,
}

impl RunManifest {
    fn new<A: Serialize, C: Serialize>(command: &'static str, q: usize, seed: Option<u64>, args: &A, config: &C) -> Result<Self> {
        Ok(Self {
            command,
            q,
            seed,
            args: serde_json::to_value(args)?,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
        })
    }

    fn with_input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: file_digest(path)? });
        Ok(self)
    }
}

/// Parse and run; returns the exit code. `args` includes the program name.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Kkt(a) => cmd_kkt(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

pub fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let u = read_matrix(&args.u_file)?;
    let y = read_matrix(&args.y_file)?;
    let init = args.init.clone().map(ImpulseResponse::new).transpose()?;
    let config = args.solver.fit_config(init);
    let result = fit(&u, &y, args.q, &config)?;
    if !result.condition.holds {
        eprintln!(
            "warning: well-posedness condition fails at rows {:?}; the minimizer may not be unique",
            result.condition.failing_rows
        );
    }

    ensure_out_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("h_hat.json"), &FitSummary::from(&result))?;
    write_text(&args.out_dir.join("trace.csv"), &format_trace(&result))?;
    let manifest = RunManifest::new("fit", args.q, None, args, &config)?
        .with_input(&args.u_file)?
        .with_input(&args.y_file)?;
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;

    println!(
        "status {}  iterations {}  divergence {}  kkt_residual {:.3e}",
        result.status.as_str(),
        result.iterations_used,
        result.final_divergence(),
        result.kkt_residual
    );
    Ok(if result.status == FitStatus::IllPosed { EXIT_ILL_POSED } else { EXIT_OK })
}

fn impulse_from_flags(list: &Option<Vec<f64>>, file: Option<&Path>) -> Result<Option<ImpulseResponse>> {
    let h = match (list, file) {
        (Some(v), _) => Some(ImpulseResponse::new(v.clone())),
        (None, Some(p)) => Some(read_impulse_response(p)),
        (None, None) => None,
    };
    // A bad h* is a bad argument, whatever the underlying complaint.
    h.transpose().map_err(|e| match e {
        Error::Domain(m) | Error::Parse(m) => Error::Usage(format!("h*: {m}")),
        other => other,
    })
}

fn check_q(q: Option<usize>, h: &ImpulseResponse) -> Result<()> {
    match q {
        Some(q) if q != h.order() => Err(Error::Usage(format!(
            "--q {q} does not match h* of length {} (order {})",
            h.len(),
            h.order()
        ))),
        _ => Ok(()),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let h_star = impulse_from_flags(&args.h_star, args.h_star_file.as_deref())?
        .ok_or_else(|| Error::Usage("one of --h-star or --h-star-file is required".into()))?;
    check_q(args.q, &h_star)?;
    if args.n < h_star.order() {
        return Err(Error::Usage(format!("N = {} is smaller than q = {}", args.n, h_star.order())));
    }
    if args.m == 0 {
        return Err(Error::Usage("m must be at least 1".into()));
    }
    let noise = NoiseModel::new(args.sigma)?;
    let law = InputLaw::new(args.input_lower, args.input_upper)?;

    let u = gen_inputs(args.n, args.m, &law, &mut StreamId::new(args.seed, 0, 0, Purpose::Inputs).rng())?;
    let y = gen_noisy_outputs(&h_star, &u, &noise, &mut StreamId::new(args.seed, 0, 0, Purpose::Noise).rng())?;

    ensure_out_dir(&args.out_dir)?;
    let shape = format!("rows = time 0..{}, columns = experiments 1..{}", args.n, args.m);
    write_matrix(&args.out_dir.join("U.csv"), &u, Some(&format!("inputs; {shape}")))?;
    write_matrix(&args.out_dir.join("Y.csv"), &y, Some(&format!("outputs; {shape}")))?;

    #[derive(Serialize)]
    struct SimConfig<'a> {
        h_star: &'a ImpulseResponse,
        noise: NoiseModel,
        inputs: InputLaw,
        n: usize,
        m: usize,
    }
    let config = SimConfig { h_star: &h_star, noise, inputs: law, n: args.n, m: args.m };
    let mut manifest = RunManifest::new("simulate", h_star.order(), Some(args.seed), args, &config)?;
    if let Some(p) = &args.h_star_file {
        manifest = manifest.with_input(p)?;
    }
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;
    Ok(EXIT_OK)
}

/// Parse `"(10,5),(20,10)"` into scales.
pub fn parse_scales(text: &str) -> Result<Vec<Scale>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Usage(format!("scales must look like \"(10,5),(20,10)\" (got \"{text}\")"));
    let inner = compact.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(bad)?;
    inner
        .split("),(")
        .map(|pair| {
            let (n, m) = pair.split_once(',').ok_or_else(bad)?;
            Ok(Scale::new(n.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?))
        })
        .collect()
}

/// `h*_k = (q + 1 − k) / (q + 1)`.
pub fn default_h_star(q: usize) -> ImpulseResponse {
    let len = (q + 1) as f64;
    ImpulseResponse::from_raw((0..=q).map(|k| (len - k as f64) / len).collect())
}

/// `scale_N,scale_m,replication,h_hat_0,…`; ill-posed replications are omitted.
pub fn format_estimates(report: &ExperimentReport) -> String {
    let mut out = String::from("scale_N,scale_m,replication");
    for k in 0..=report.q {
        out.push_str(&format!(",h_hat_{k}"));
    }
    out.push('\n');
    for e in &report.estimates {
        let Some(h) = &e.h_hat else { continue };
        out.push_str(&format!("{},{},{}", e.n, e.m, e.replication));
        for &v in h {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<i32> {
    let scales = parse_scales(&args.scales)?;
    let noise = NoiseModel::new(args.sigma)?;
    let inputs = InputLaw::new(args.input_lower, args.input_upper)?;
    let fit_config = FitConfig { trace: false, ..args.solver.fit_config(None) };
    let exec = if args.serial { Execution::Serial } else { Execution::Parallel };
    let h_star = match impulse_from_flags(&args.h_star, None)? {
        Some(h) => {
            check_q(args.q, &h)?;
            h
        }
        None => default_h_star(args.q.unwrap_or(5)),
    };

    let (report, config) = if let Some(name) = &args.regime {
        let spec = RegimeSpec {
            regime: name.parse::<Regime>()?,
            scales,
            replications: args.replications,
            h_star,
            noise,
            inputs,
            seed: args.seed,
        };
        let report = run_regime(&spec, &fit_config, exec)?;
        (report, serde_json::json!({ "spec": spec, "fit": fit_config }))
    } else {
        let generator = match args.misspecified.expect("clap requires one of the two") {
            GeneratorKind::Iir => Generator::Iir { a: args.iir_a, b: args.iir_b.clone() },
            GeneratorKind::Power => Generator::Power { h: h_star.clone(), exponent: args.power_exponent },
            GeneratorKind::Convolution => Generator::Convolution { h: h_star.clone() },
        };
        generator.validate()?;
        let spec = MisspecifiedSpec {
            q: args.q.unwrap_or(h_star.order()),
            scales,
            replications: args.replications,
            noise,
            inputs,
            seed: args.seed,
        };
        let report = run_misspecified(&generator, &spec, &fit_config, exec)?;
        (report, serde_json::json!({ "spec": spec, "generator": generator, "fit": fit_config }))
    };

    ensure_out_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("report.json"), &report)?;
    write_text(&args.out_dir.join("estimates.csv"), &format_estimates(&report))?;
    let manifest = RunManifest::new("experiment", report.q, Some(args.seed), args, &config)?;
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;

    for s in &report.scales {
        let rmse = s.truth.as_ref().map_or(String::new(), |t| format!("  rmse {:.4e}", t.rmse_norm));
        let boundary: usize = s.boundary_counts.iter().sum();
        println!(
            "N={:<4} m={:<4} used {:<4} spread {:.4e}  half_gap {:.4e}{rmse}  boundary {boundary}",
            s.n, s.m, s.replications_used, s.spread, s.half_gap
        );
    }
    Ok(EXIT_OK)
}

pub fn cmd_kkt(args: &KktArgs) -> Result<i32> {
    if args.kkt_tol.is_nan() || args.kkt_tol < 0.0 {
        return Err(Error::Usage(format!("kkt-tol must be nonnegative (got {})", args.kkt_tol)));
    }
    let u = read_matrix(&args.u_file)?;
    let y = read_matrix(&args.y_file)?;
    let h = read_impulse_response(&args.h_file)?;
    check_q(args.q, &h)?;
    let report = kkt_report(&h, &u, &y)?;
    print!("{}", format_kkt(&h, &report, args.kkt_tol));
    Ok(if report.residual <= args.kkt_tol { EXIT_OK } else { EXIT_KKT_VIOLATED })
}

pub fn format_kkt(h: &ImpulseResponse, report: &crate::solver::KktReport, tol: f64) -> String {
    let mut out = format!("{:>4}  {:>24}  {:>24}  {:>8}  {:>10}\n", "k", "h_k", "gradient", "class", "residual");
    for k in 0..h.len() {
        let class = if report.on_boundary[k] { "boundary" } else { "interior" };
        let flag = if report.residuals[k] > tol { "  VIOLATED" } else { "" };
        out.push_str(&format!(
            "{k:>4}  {:>24}  {:>24}  {class:>8}  {:>10.3e}{flag}\n",
            fmt_f64(h[k]),
            fmt_f64(report.gradient[k]),
            report.residuals[k]
        ));
    }
    out.push_str(&format!(
        "residual {:.6e}  tol {:.1e}  boundary_eps {:.3e}  {}\n",
        report.residual,
        tol,
        report.boundary_eps,
        if report.residual <= tol { "OK" } else { "NOT OPTIMAL" }
    ));
    out
}
