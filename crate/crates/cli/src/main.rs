use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sgof_core::experiments::{
    default_grid, parse_grid, run_sweep, run_verification, with_threads, SweepSpec, VerificationTarget, DEFAULT_REPS,
};
use sgof_core::inference::{gof, mle_fit, GofOptions, Statistic};
use sgof_core::io::{format_complex, read_complex};
use sgof_core::models::{
    calibrate_edge_threshold, sample_multiparameter, sample_soft_geometric, GeometricModel, ModelParams, Seed,
    EDGE_DISTANCE_THRESHOLD, TETRA_VOLUME_THRESHOLD, TRI_AREA_THRESHOLD,
};
use sgof_core::moments::moment_report;
use sgof_core::morse::critical_counts;
use sgof_core::subcomplex::{count_subcomplexes, exact_covariance, expected_count, PatternComplex};

/// Exit status when more than this fraction of replicates is inconclusive.
const INCONCLUSIVE_LIMIT: f64 = 0.1;
const CALIBRATION_SAMPLES: usize = 1_000_000;

#[derive(Parser)]
#[command(name = "sgof", version, about = "Random simplicial complexes and goodness-of-fit tests")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, env = "SGOF_THREADS")]
    threads: Option<usize>,
    /// Output format; sweeps default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Xnp,
    Tetra,
    Tri,
    Edge,
}

impl ModelArg {
    fn geometric(self) -> Option<GeometricModel> {
        match self {
            ModelArg::Xnp => None,
            ModelArg::Tetra => Some(GeometricModel::Tetra),
            ModelArg::Tri => Some(GeometricModel::Tri),
            ModelArg::Edge => Some(GeometricModel::Edge),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatisticArg {
    Critical,
    Triangle,
}

impl From<StatisticArg> for Statistic {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Critical => Statistic::Critical,
            StatisticArg::Triangle => Statistic::Triangle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a complex and print it in the text format.
    Sample(SampleArgs),
    /// Maximum-likelihood estimate of p.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        d: usize,
    },
    /// Goodness-of-fit test of X(n, p) with fitted p.
    Gof {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = StatisticArg::Critical)]
        statistic: StatisticArg,
        #[command(flatten)]
        opts: GofArgs,
    },
    /// Critical simplices of the lexicographic matching, per size.
    Critical {
        #[arg(long = "in")]
        input: PathBuf,
        /// Largest simplex size reported; defaults to the largest present.
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Count copies of a connected pattern complex.
    Count {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        /// Also report mean and variance under X(n, p) with these p.
        #[arg(long, value_delimiter = ',')]
        params: Option<Vec<f64>>,
    },
    /// Closed-form moments of the critical count with k + 1 vertices.
    Moments {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        k: usize,
    },
    /// Replicated goodness-of-fit tests over a threshold grid.
    Sweep(SweepArgs),
    /// Monte-Carlo checks of closed-form quantities.
    Verify {
        /// JSON list of verification targets.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
    },
}

#[derive(Args)]
struct GofArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long)]
    diagonal_sigma: bool,
}

impl GofArgs {
    fn options(&self) -> GofOptions {
        GofOptions { alpha: self.alpha, k_prime: self.k_prime, diagonal_sigma: self.diagonal_sigma }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Xnp)]
    model: ModelArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    ambient_dim: Option<usize>,
    /// Edge model only: use the distance quantile with this edge density as
    /// both thresholds.
    #[arg(long)]
    calibrate_density: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Grid file; the bundled grid of the model is used otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StatisticArg::Critical, StatisticArg::Triangle])]
    statistic: Vec<StatisticArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ambient_dim: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    opts: GofArgs,
}

enum Failure {
    Config(anyhow::Error),
    Inconclusive(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Inconclusive(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

impl Cli {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn emit_value(cli: &Cli, value: &Value) -> Result<(), Failure> {
    let text = match cli.format_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Csv => to_key_value_csv(value),
    };
    emit(cli, &text)
}

/// Flat `key,value` rows; arrays are joined with `;`.
fn to_key_value_csv(value: &Value) -> String {
    fn cell(v: &Value) -> String {
        match v {
            Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(";"),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    let mut out = String::from("key,value\n");
    if let Value::Object(map) = value {
        for (k, v) in map {
            out.push_str(&format!("{k},\"{}\"\n", cell(v)));
        }
    }
    out
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Sample(args) => sample(cli, args),
        Command::Fit { input, d } => {
            let k = read_complex(input)?;
            let fit = mle_fit(&k, *d);
            emit_value(
                cli,
                &json!({"p_hat": fit.p_hat, "s": fit.counts.s, "h": fit.counts.h, "i_max": fit.counts.i_max}),
            )
        }
        Command::Gof { input, d, statistic, opts } => {
            let k = read_complex(input)?;
            let res = with_threads(cli.threads, || gof((*statistic).into(), &k, *d, &opts.options()))??;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            emit_value(
                cli,
                &json!({
                    "p_hat": res.p_hat, "t": res.t, "w": res.w, "sigma": res.sigma,
                    "statistic": res.statistic, "df": res.df, "threshold": res.threshold,
                    "reject": res.reject, "warnings": res.warnings,
                }),
            )?;
            if res.inconclusive {
                return Err(Failure::Inconclusive("test is inconclusive".into()));
            }
            Ok(())
        }
        Command::Critical { input, max_size } => {
            let k = read_complex(input)?;
            let max_size = max_size.unwrap_or(k.max_size());
            let c = with_threads(cli.threads, || critical_counts(&k, max_size))?;
            emit_value(
                cli,
                &json!({"c": c.counts, "euler": k.euler_characteristic(), "total_simplices": (1..=max_size).map(|i| k.count(i)).collect::<Vec<_>>()}),
            )
        }
        Command::Count { input, pattern, params } => {
            let k = read_complex(input)?;
            let l = PatternComplex::new(read_complex(pattern)?)?;
            let count = with_threads(cli.threads, || count_subcomplexes(&k, &l))?;
            let mut v = json!({"count": count});
            if let Some(p) = params {
                let params = ModelParams::new(k.n(), p.clone())?;
                v["expected"] = json!(expected_count(&l, &params));
                v["variance"] = json!(exact_covariance(&l, &l, &params)?);
            }
            emit_value(cli, &v)
        }
        Command::Moments { n, p, k } => {
            let params = ModelParams::new(*n, p.clone())?;
            let r = with_threads(cli.threads, || moment_report(&params, *k))??;
            emit_value(
                cli,
                &json!({
                    "mean": r.mean, "mean_lower": r.mean_lower, "mean_upper": r.mean_upper,
                    "variance": r.variance, "V": r.v, "sigma_inf": r.sigma_inf,
                }),
            )
        }
        Command::Sweep(args) => sweep(cli, args),
        Command::Verify { targets, reps } => {
            let text = std::fs::read_to_string(targets).with_context(|| format!("reading {}", targets.display()))?;
            let targets: Vec<VerificationTarget> =
                serde_json::from_str(&text).context("parsing verification targets")?;
            let entries = run_verification(&targets, *reps, cli.seed, cli.threads)?;
            match cli.format_or(Format::Json) {
                Format::Json => emit(cli, &(serde_json::to_string_pretty(&entries)? + "\n")),
                Format::Csv => {
                    let mut out = String::from("target,formula,estimate,stderr,z,reps\n");
                    for e in &entries {
                        let target = serde_json::to_string(&e.target)?.replace('"', "\"\"");
                        out.push_str(&format!(
                            "\"{target}\",{},{},{},{},{}\n",
                            e.formula, e.estimate, e.stderr, e.z, e.reps
                        ));
                    }
                    emit(cli, &out)
                }
            }
        }
    }
}

fn sample(cli: &Cli, args: &SampleArgs) -> Result<(), Failure> {
    let seed = Seed::new(cli.seed, 0);
    let k = match args.model.geometric() {
        None => {
            let n = args.n.ok_or_else(|| anyhow::anyhow!("--n is required for the xnp model"))?;
            let p = args.p.clone().ok_or_else(|| anyhow::anyhow!("--p is required for the xnp model"))?;
            sample_multiparameter(&ModelParams::new(n, p)?, seed)
        }
        Some(model) => {
            let n = args.n.unwrap_or(model.default_n());
            let ambient = args.ambient_dim.unwrap_or(model.default_ambient_dim());
            let default_eps = match model {
                GeometricModel::Tetra => TETRA_VOLUME_THRESHOLD,
                GeometricModel::Tri => TRI_AREA_THRESHOLD,
                GeometricModel::Edge => EDGE_DISTANCE_THRESHOLD,
            };
            let (mut eps1, mut eps2) = (args.eps1.unwrap_or(default_eps), args.eps2.unwrap_or(default_eps));
            if let Some(density) = args.calibrate_density {
                if model != GeometricModel::Edge {
                    return Err(anyhow::anyhow!("--calibrate-density applies to the edge model only").into());
                }
                let r = calibrate_edge_threshold(ambient, density, CALIBRATION_SAMPLES, Seed::new(cli.seed, u64::MAX))?;
                eprintln!("calibrated edge threshold: {r}");
                (eps1, eps2) = (r, r);
            }
            let kernel = model.kernel(eps1, eps2, n)?;
            sample_soft_geometric(n, ambient, &kernel, seed)?.1
        }
    };
    // The text format is the default so that samples feed straight into the other subcommands.
    match cli.format {
        Some(Format::Json) => {
            let facets: Vec<Vec<u32>> = k.facets().into_iter().map(Vec::from).collect();
            emit_value(cli, &json!({"n": k.n(), "facets": facets}))
        }
        _ => emit(cli, &format_complex(&k)),
    }
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<(), Failure> {
    let model = args.model.geometric().ok_or_else(|| anyhow::anyhow!("sweeps need a geometric model"))?;
    let statistics = args.statistic.iter().map(|&s| s.into()).collect();
    let mut spec = SweepSpec::for_model(model, statistics, cli.seed);
    spec.grid = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_grid(&text, model)?
        }
        None => default_grid(model),
    };
    spec.reps = args.reps;
    spec.n = args.n.unwrap_or(spec.n);
    spec.ambient_dim = args.ambient_dim.unwrap_or(spec.ambient_dim);
    spec.d = args.d.unwrap_or(spec.d);
    spec.gof = args.opts.options();
    let table = run_sweep(&spec, cli.threads)?;
    match cli.format_or(Format::Csv) {
        Format::Csv => emit(cli, &table.to_csv())?,
        Format::Json => emit(cli, &(serde_json::to_string_pretty(&table)? + "\n"))?,
    }
    let frac = table.inconclusive_fraction();
    if frac > INCONCLUSIVE_LIMIT {
        return Err(Failure::Inconclusive(format!("{:.1}% of replicate tests were inconclusive", 100.0 * frac)));
    }
    Ok(())
}
