//! `tensorkit`: inspect TNSR files, run decompositions, robust PCA and kernel compression.

mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::Value;

use report::RunReport;
use tensorkit::convfact::{conv2d_direct, decompose_kernel, direct_multiply_count, ConvForm, ConvKernel4};
use tensorkit::decomp::{cp_als, mpca, tt_svd, tucker_hooi, DecompOptions, TtTruncation};
use tensorkit::io::{read_tensor, save_model, write_tensor, Model};
use tensorkit::robust::{default_alpha, default_lambda, trpca, RpcaOptions};
use tensorkit::tensor::norm_l0;
use tensorkit::{seeded_rng, DenseTensor, Error};

#[derive(Parser)]
#[command(name = "tensorkit", version, about = "Tensor decompositions and tensor methods")]
struct Cli {
    /// Print the report as a single JSON object.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order, shape, Frobenius norm and density of a TNSR file.
    Info { path: PathBuf },
    /// Decompose a tensor and write the factors as a manifest directory.
    Decompose {
        path: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// CP rank.
        #[arg(long)]
        rank: Option<usize>,
        /// Comma-separated ranks: multilinear (tucker), inner TT-ranks (tt) or per-mode (mpca).
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        /// Relative error budget for tt.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a tensor into low-rank and sparse parts; writes L.tnsr and S.tnsr.
    Rpca {
        path: PathBuf,
        /// `auto` or a positive number.
        #[arg(long, default_value = "auto")]
        lambda: String,
        #[arg(long)]
        out: PathBuf,
        /// Known low-rank part, used to report the recovery error.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Factorize an order-4 convolution kernel (T×C×H×W).
    ConvCompress {
        path: PathBuf,
        #[arg(long, value_enum)]
        form: Form,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cp,
    Tucker,
    Tt,
    Mpca,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Cp,
    Tucker,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::Io(_) => 3,
                Error::Format { .. } | Error::Manifest(_) | Error::Json(_) => 4,
                Error::NoConvergence { .. } => 6,
                Error::ModeOutOfRange { .. }
                | Error::ShapeMismatch(_)
                | Error::InvalidArgument(_)
                | Error::InvalidRank(_) => 5,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli.command) {
        Ok(mut report) => {
            report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            print!("{}", report.render(cli.json));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> CliResult<RunReport> {
    match command {
        Command::Info { path } => info(&path),
        Command::Decompose {
            path,
            method,
            rank,
            ranks,
            tol,
            seed,
            out,
        } => decompose(&path, method, rank, ranks, tol, seed, &out),
        Command::Rpca {
            path,
            lambda,
            out,
            truth,
        } => rpca(&path, &lambda, &out, truth.as_deref()),
        Command::ConvCompress {
            path,
            form,
            rank,
            ranks,
            seed,
            out,
        } => conv_compress(&path, form, rank, ranks, seed, &out),
    }
}

fn shape_string(shape: &[usize]) -> String {
    shape.iter().map(usize::to_string).collect::<Vec<_>>().join("×")
}

fn path_value(p: &Path) -> Value {
    p.display().to_string().into()
}

fn info(path: &Path) -> CliResult<RunReport> {
    let t = read_tensor(path)?;
    let mut r = RunReport::new("info");
    r.input("path", path_value(path))
        .metric("order", t.order())
        .metric("shape", shape_string(t.shape()))
        .metric("frobenius", t.frobenius())
        .metric("density", norm_l0(&t) as f64 / t.len() as f64)
        .count("entries", t.len())
        .count("nonzeros", norm_l0(&t));
    Ok(r)
}

fn compression(r: &mut RunReport, before: usize, after: usize) {
    let ratio = after as f64 / before as f64;
    r.count("params_before", before)
        .count("params_after", after)
        .metric("compression_ratio", ratio);
    if ratio >= 1.0 {
        r.flags.push("no compression".into());
    }
}

fn require_rank(rank: Option<usize>, what: &str) -> CliResult<usize> {
    rank.ok_or_else(|| CliError::Usage(format!("{what} needs --rank")))
}

fn require_ranks(ranks: Option<Vec<usize>>, what: &str) -> CliResult<Vec<usize>> {
    ranks.ok_or_else(|| CliError::Usage(format!("{what} needs --ranks")))
}

#[allow(clippy::too_many_arguments)]
fn decompose(
    path: &Path,
    method: Method,
    rank: Option<usize>,
    ranks: Option<Vec<usize>>,
    tol: Option<f64>,
    seed: u64,
    out: &Path,
) -> CliResult<RunReport> {
    let x = read_tensor(path)?;
    let opts = DecompOptions {
        seed,
        ..DecompOptions::default()
    };
    let mut r = RunReport::new("decompose");
    r.seed = Some(seed);
    r.input("path", path_value(path)).param("out", path_value(out));
    let (name, model, approx) = match method {
        Method::Cp => {
            let rank = require_rank(rank, "cp")?;
            let res = cp_als(&x, rank, &opts)?;
            r.param("rank", rank)
                .metric("iterations", res.iterations)
                .metric("converged", res.converged);
            r.flags.extend(res.warning.clone());
            let approx = res.kruskal.to_tensor();
            ("cp", Model::Kruskal(res.kruskal), approx)
        }
        Method::Tucker => {
            let ranks = require_ranks(ranks, "tucker")?;
            let res = tucker_hooi(&x, &ranks, &opts)?;
            r.param("ranks", ranks)
                .metric("sweeps", res.sweeps)
                .metric("converged", res.converged);
            let approx = res.tucker.to_tensor();
            ("tucker", Model::Tucker(res.tucker), approx)
        }
        Method::Tt => {
            let truncation = match (ranks, tol) {
                (Some(ranks), None) => TtTruncation::MaxRanks(ranks),
                (None, Some(eps)) => TtTruncation::Tolerance(eps),
                _ => return Err(CliError::Usage("tt needs exactly one of --ranks and --tol".into())),
            };
            match &truncation {
                TtTruncation::MaxRanks(ranks) => r.param("ranks", ranks.clone()),
                TtTruncation::Tolerance(eps) => r.param("tol", *eps),
            };
            let tt = tt_svd(&x, &truncation)?;
            r.metric("tt_ranks", tt.ranks());
            let approx = tt.to_tensor();
            ("tt", Model::Tt(tt), approx)
        }
        Method::Mpca => {
            let ranks = require_ranks(ranks, "mpca")?;
            let res = mpca(&x, &ranks, &opts)?;
            r.param("ranks", ranks)
                .metric("captured_scatter", res.captured_scatter())
                .metric("sweeps", res.sweeps)
                .metric("converged", res.converged);
            let approx = res.reconstruct();
            ("mpca", Model::Mpca(res), approx)
        }
    };
    r.param("method", name);
    let error = approx.relative_error(&x);
    r.metric("relative_error", error);
    let after = match &model {
        Model::Kruskal(k) => k.param_count(),
        Model::Tucker(t) => t.param_count(),
        Model::Tt(t) => t.param_count(),
        Model::Mpca(m) => m.projections.iter().map(|p| p.rows() * p.cols()).sum::<usize>() + m.cores.len(),
        _ => unreachable!("decompose builds decompositions only"),
    };
    compression(&mut r, x.len(), after);
    let meta = BTreeMap::from([
        ("method".to_string(), Value::from(name)),
        ("relative_error".to_string(), Value::from(error)),
        ("seed".to_string(), Value::from(seed)),
    ]);
    save_model(out, &model, meta)?;
    Ok(r)
}

fn parse_lambda(s: &str, shape: &[usize]) -> CliResult<f64> {
    if s == "auto" {
        return Ok(default_lambda(shape));
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(CliError::Usage(format!("--lambda must be `auto` or a positive number, got {s:?}"))),
    }
}

fn rpca(path: &Path, lambda: &str, out: &Path, truth: Option<&Path>) -> CliResult<RunReport> {
    let x = read_tensor(path)?;
    let truth = match truth {
        Some(p) => Some((p, read_tensor(p)?)),
        None => None,
    };
    let lambda = parse_lambda(lambda, x.shape())?;
    let alpha = default_alpha(x.order());
    let res = trpca(&x, lambda, &alpha, &RpcaOptions::default())?;
    let mut r = RunReport::new("rpca");
    r.input("path", path_value(path))
        .param("out", path_value(out))
        .param("lambda", lambda)
        .param("alpha", alpha)
        .metric("iterations", res.iterations)
        .metric("converged", res.converged)
        .metric("feasibility", res.feasibility(&x))
        .metric("primal_residual", res.primal_residual)
        .metric("dual_residual", res.dual_residual)
        .metric("sparse_ratio", ratio(res.sparse.frobenius(), x.frobenius()))
        .count("sparse_nonzeros", norm_l0(&res.sparse));
    if let Some((truth_path, t)) = &truth {
        if t.shape() != x.shape() {
            return Err(Error::ShapeMismatch(format!(
                "truth has shape {:?}, input {:?}",
                t.shape(),
                x.shape()
            ))
            .into());
        }
        r.input("truth", path_value(truth_path))
            .metric("recovery_error", res.low_rank.relative_error(t));
    }
    std::fs::create_dir_all(out).map_err(Error::from)?;
    write_tensor(out.join("L.tnsr"), &res.low_rank)?;
    write_tensor(out.join("S.tnsr"), &res.sparse)?;
    Ok(r)
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Spatial padding of the probe input beyond the kernel footprint.
const PROBE_MARGIN: usize = 5;

fn conv_compress(
    path: &Path,
    form: Form,
    rank: Option<usize>,
    ranks: Option<Vec<usize>>,
    seed: u64,
    out: &Path,
) -> CliResult<RunReport> {
    let w = ConvKernel4::new(read_tensor(path)?)?;
    let opts = DecompOptions {
        seed,
        ..DecompOptions::default()
    };
    let mut r = RunReport::new("conv-compress");
    r.seed = Some(seed);
    r.input("path", path_value(path)).param("out", path_value(out));
    let (conv_form, ranks) = match form {
        Form::Cp => (ConvForm::Kruskal, vec![require_rank(rank, "cp")?]),
        Form::Tucker => (ConvForm::Tucker, require_ranks(ranks, "tucker")?),
    };
    r.param("form", conv_form.name()).param("ranks", ranks.clone());
    let d = decompose_kernel(&w, conv_form, &ranks, &opts)?;
    r.flags.extend(d.warning.clone());
    r.metric("relative_error", d.relative_error);
    compression(&mut r, d.params_before, d.params_after);

    let (_, c, h, wd) = w.dims();
    let probe_shape = [c, h + PROBE_MARGIN, wd + PROBE_MARGIN];
    let mut rng = seeded_rng(seed);
    let probe = DenseTensor::from_fn(&probe_shape, |_| rng.random_range(-1.0..1.0));
    let direct = conv2d_direct(&probe, &ConvKernel4::new(d.kernel.reconstruct())?)?;
    let piped = d.kernel.apply(&probe)?;
    r.metric("probe_shape", shape_string(&probe_shape))
        .metric("max_abs_deviation", piped.max_abs_diff(&direct))
        .count("multiplies_direct", direct_multiply_count(&d.kernel.kernel_shape(), &probe_shape)?)
        .count("multiplies_factorized", d.kernel.multiply_count(&probe_shape)?);
    let meta = BTreeMap::from([
        ("relative_error".to_string(), Value::from(d.relative_error)),
        ("seed".to_string(), Value::from(seed)),
    ]);
    save_model(out, &Model::ConvKernel(d.kernel), meta)?;
    Ok(r)
}
