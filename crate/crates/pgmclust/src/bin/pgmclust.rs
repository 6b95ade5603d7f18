//! Command-line front end for the clustering pipeline.
//!
//! Stages are split so that λ/β sweeps can reuse the expensive kernel
//! computation: `embed` turns a dataset into Gram/Laplacian artifacts once,
//! `cluster` and `sweep` then solve and cluster from those artifacts.
//!
//! Exit codes: 0 success, 1 runtime or numerical failure, 2 usage error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use pgmclust::clustering::{clustering_accuracy, ncut_cluster, symmetrize_affinity, ClusteringResult};
use pgmclust::data_io::{
    load_clustering, load_dataset, load_gram, load_laplacian, read_manifest, save_clustering,
    save_coefficient, save_gram, save_laplacian, synth_generate, SynthSpec, ViewSpec,
};
use pgmclust::gram::{build_gram_stack, spectral_decompose, GramStack};
use pgmclust::solvers::{
    build_laplacian, lappglrr_solve, pglrr_closed_form, CoefficientMatrix, LaplacianPair,
    SolverConfig,
};
use pgmclust::Error;

#[derive(Parser)]
#[command(name = "pgmclust", version, about = "Multi-view subspace clustering on the Product Grassmann Manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset with known cluster labels.
    Synth(SynthArgs),
    /// Build Gram and Laplacian artifacts from a dataset manifest.
    Embed(EmbedArgs),
    /// Solve for the coefficient matrix and cluster it.
    Cluster(ClusterArgs),
    /// Score a clustering result against manifest labels.
    Eval(EvalArgs),
    /// Run a λ/β grid and report accuracy per cell as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the dataset.
    #[arg(long)]
    out: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// View dimensions as d:p, repeat per view.
    #[arg(long = "view", required = true)]
    views: Vec<String>,
    #[arg(long, default_value_t = 10)]
    samples_per_cluster: usize,
    /// Frames (columns) per sample and view.
    #[arg(long, default_value_t = 20)]
    frames: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmbedArgs {
    /// Dataset manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; receives gram/ and laplacian/ artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the manifest's subspace dimensions: one value applies to all
    /// views, otherwise repeat once per view.
    #[arg(long = "subspace-dim")]
    subspace_dims: Vec<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    /// Spectral closed form for the plain model (ignores β).
    ClosedForm,
    /// ALM for the Laplacian-regularized model.
    Alm,
}

#[derive(Args)]
struct ClusterArgs {
    /// Directory produced by `embed`.
    #[arg(long)]
    embedded: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Solver::Alm)]
    solver: Solver,
    /// Output directory; receives coefficient/ and result/ artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Clustering result artifact directory.
    #[arg(long)]
    result: PathBuf,
    /// Manifest holding the ground-truth labels.
    #[arg(long)]
    manifest: PathBuf,
    /// Optional directory for the config echo and accuracy report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory produced by `embed`.
    #[arg(long)]
    embedded: PathBuf,
    /// Comma-separated λ values.
    #[arg(long)]
    lambda_grid: String,
    /// Comma-separated β values.
    #[arg(long, default_value = "0")]
    beta_grid: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives sweep.csv.
    #[arg(long)]
    out: PathBuf,
}

/// Errors that indicate bad flags rather than a runtime failure.
struct UsageError(String);

enum CmdError {
    Usage(String),
    Runtime(Error),
}

impl From<UsageError> for CmdError {
    fn from(e: UsageError) -> Self {
        CmdError::Usage(e.0)
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Runtime(e)
    }
}

type CmdResult = Result<(), CmdError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_view(spec: &str) -> Result<ViewSpec, UsageError> {
    let (d, p) = spec
        .split_once(':')
        .ok_or_else(|| UsageError(format!("--view must be d:p, got '{spec}'")))?;
    let ambient_dim = d
        .parse()
        .map_err(|_| UsageError(format!("bad ambient dim in '{spec}'")))?;
    let subspace_dim = p
        .parse()
        .map_err(|_| UsageError(format!("bad subspace dim in '{spec}'")))?;
    Ok(ViewSpec {
        ambient_dim,
        subspace_dim,
    })
}

fn parse_grid(s: &str, name: &str) -> Result<Vec<f64>, UsageError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| UsageError(format!("bad {name} grid '{s}': {e}")))?;
    if values.is_empty() {
        return Err(UsageError(format!("{name} grid is empty")));
    }
    Ok(values)
}

/// Writes the effective parameters of a run so results are self-describing.
fn write_config_echo(dir: &Path, lines: &[(&str, String)]) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut text = String::new();
    for (key, value) in lines {
        let _ = writeln!(text, "{key} = {value}");
    }
    let path = dir.join("run_config.toml");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn toml_str(s: &str) -> String {
    format!("{s:?}")
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let views: Result<Vec<ViewSpec>, UsageError> =
        args.views.iter().map(|v| parse_view(v)).collect();
    let spec = SynthSpec {
        k: args.k,
        views: views?,
        samples_per_cluster: args.samples_per_cluster,
        frames_per_sample: args.frames,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
    };
    spec.validate().map_err(|e| CmdError::Usage(e.to_string()))?;

    let manifest = synth_generate(&spec, &args.out)?;
    write_config_echo(
        &args.out,
        &[
            ("command", toml_str("synth")),
            ("k", spec.k.to_string()),
            (
                "views",
                format!(
                    "[{}]",
                    spec.views
                        .iter()
                        .map(|v| format!("\"{}:{}\"", v.ambient_dim, v.subspace_dim))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ),
            ("samples_per_cluster", spec.samples_per_cluster.to_string()),
            ("frames_per_sample", spec.frames_per_sample.to_string()),
            ("noise_sigma", spec.noise_sigma.to_string()),
            ("seed", spec.seed.to_string()),
        ],
    )?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> CmdResult {
    let mut manifest = read_manifest(&args.manifest)?;
    match args.subspace_dims.len() {
        0 => {}
        1 => {
            for v in &mut manifest.views {
                v.subspace_dim = args.subspace_dims[0];
            }
        }
        n if n == manifest.views.len() => {
            for (v, &p) in manifest.views.iter_mut().zip(&args.subspace_dims) {
                v.subspace_dim = p;
            }
        }
        n => {
            return Err(CmdError::Usage(format!(
                "--subspace-dim given {n} times for {} views",
                manifest.views.len()
            )))
        }
    }
    // re-load through a patched manifest copy so overrides apply uniformly
    let tmp_manifest = if args.subspace_dims.is_empty() {
        args.manifest.clone()
    } else {
        fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
        let p = args.out.join("effective_manifest.toml");
        pgmclust::data_io::write_manifest(&p, &manifest)?;
        // manifest paths are relative to the original location
        let base = args
            .manifest
            .parent()
            .unwrap_or(Path::new("."))
            .to_path_buf();
        let mut patched = manifest.clone();
        for s in &mut patched.samples {
            for vp in &mut s.view_paths {
                *vp = base.join(&vp).to_string_lossy().into_owned();
            }
        }
        pgmclust::data_io::write_manifest(&p, &patched)?;
        p
    };

    let (dataset, labels) = load_dataset(&tmp_manifest)?;
    let gram = build_gram_stack(&dataset)?;
    let lap = build_laplacian(&dataset)?;
    save_gram(&args.out.join("gram"), &gram, labels.as_deref())?;
    save_laplacian(&args.out.join("laplacian"), &lap)?;
    write_config_echo(
        &args.out,
        &[
            ("command", toml_str("embed")),
            ("manifest", toml_str(&args.manifest.to_string_lossy())),
            (
                "subspace_dims",
                format!(
                    "[{}]",
                    manifest
                        .views
                        .iter()
                        .map(|v| v.subspace_dim.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ),
        ],
    )?;
    println!(
        "embedded {} samples, {} views -> {}",
        gram.n_samples,
        gram.view_dims.len(),
        args.out.display()
    );
    Ok(())
}

fn solve_coefficient(
    gram: &GramStack,
    lap: &LaplacianPair,
    solver: Solver,
    cfg: &SolverConfig,
) -> Result<CoefficientMatrix, Error> {
    match solver {
        Solver::ClosedForm => {
            let dec = spectral_decompose(gram)?;
            Ok(pglrr_closed_form(&dec, 1.0 / cfg.lambda))
        }
        Solver::Alm => lappglrr_solve(gram, lap, cfg),
    }
}

fn cluster_once(
    gram: &GramStack,
    lap: &LaplacianPair,
    labels: Option<&[usize]>,
    solver: Solver,
    cfg: &SolverConfig,
    k: usize,
    seed: u64,
) -> Result<(CoefficientMatrix, ClusteringResult), Error> {
    let coeff = solve_coefficient(gram, lap, solver, cfg)?;
    let affinity = symmetrize_affinity(&coeff.z);
    let pred = ncut_cluster(&affinity, k, seed)?;
    let accuracy = match labels {
        Some(truth) => Some(clustering_accuracy(&pred, truth)?),
        None => None,
    };
    Ok((
        coeff,
        ClusteringResult {
            labels: pred,
            affinity,
            k,
            accuracy,
        },
    ))
}

fn cmd_cluster(args: ClusterArgs) -> CmdResult {
    if args.lambda <= 0.0 {
        return Err(CmdError::Usage(format!(
            "--lambda must be positive, got {}",
            args.lambda
        )));
    }
    let (gram, labels) = load_gram(&args.embedded.join("gram"))?;
    if args.k < 2 || args.k > gram.n_samples {
        return Err(CmdError::Usage(format!(
            "--k must satisfy 2 <= k <= {} samples, got {}",
            gram.n_samples, args.k
        )));
    }
    let lap = load_laplacian(&args.embedded.join("laplacian"))?;
    if args.solver == Solver::ClosedForm && args.beta != 0.0 {
        eprintln!("warning: closed-form solver ignores --beta");
    }
    let cfg = SolverConfig::new(args.lambda, args.beta);

    let (coeff, result) = cluster_once(
        &gram,
        &lap,
        labels.as_deref(),
        args.solver,
        &cfg,
        args.k,
        args.seed,
    )?;

    if args.solver == Solver::Alm && !coeff.converged {
        eprintln!(
            "warning: solver hit the iteration cap ({}), final gap {:.3e}",
            coeff.iterations, coeff.final_gap
        );
    }

    save_coefficient(&args.out.join("coefficient"), &coeff)?;
    save_clustering(&args.out.join("result"), &result)?;
    write_config_echo(
        &args.out,
        &[
            ("command", toml_str("cluster")),
            ("embedded", toml_str(&args.embedded.to_string_lossy())),
            ("lambda", args.lambda.to_string()),
            ("beta", args.beta.to_string()),
            ("k", args.k.to_string()),
            ("seed", args.seed.to_string()),
            (
                "solver",
                toml_str(match args.solver {
                    Solver::ClosedForm => "closed-form",
                    Solver::Alm => "alm",
                }),
            ),
        ],
    )?;

    println!("iterations = {}", coeff.iterations);
    println!("final_gap = {:.3e}", coeff.final_gap);
    if let Some(acc) = result.accuracy {
        println!("accuracy = {acc:.4}");
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let result = load_clustering(&args.result)?;
    let manifest = read_manifest(&args.manifest)?;
    let truth = manifest
        .labels()
        .ok_or_else(|| Error::Manifest("manifest has no labels to evaluate against".into()))?;
    let accuracy = clustering_accuracy(&result.labels, &truth)?;
    println!("{accuracy:.4}");
    if let Some(out) = args.out {
        write_config_echo(
            &out,
            &[
                ("command", toml_str("eval")),
                ("result", toml_str(&args.result.to_string_lossy())),
                ("manifest", toml_str(&args.manifest.to_string_lossy())),
                ("accuracy", format!("{accuracy}")),
            ],
        )?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let lambdas = parse_grid(&args.lambda_grid, "lambda")?;
    let betas = parse_grid(&args.beta_grid, "beta")?;
    if lambdas.iter().any(|&l| l <= 0.0) {
        return Err(CmdError::Usage("lambda grid values must be positive".into()));
    }
    let (gram, labels) = load_gram(&args.embedded.join("gram"))?;
    if args.k < 2 || args.k > gram.n_samples {
        return Err(CmdError::Usage(format!(
            "--k must satisfy 2 <= k <= {} samples, got {}",
            gram.n_samples, args.k
        )));
    }
    let lap = load_laplacian(&args.embedded.join("laplacian"))?;

    // grid order fixed (λ outer, β inner) regardless of execution order
    let grid: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| betas.iter().map(move |&b| (l, b)))
        .collect();

    let rows: Result<Vec<String>, Error> = grid
        .par_iter()
        .map(|&(lambda, beta)| {
            let cfg = SolverConfig::new(lambda, beta);
            let (coeff, result) = cluster_once(
                &gram,
                &lap,
                labels.as_deref(),
                Solver::Alm,
                &cfg,
                args.k,
                args.seed,
            )?;
            let acc = result
                .accuracy
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "NA".into());
            Ok(format!(
                "{lambda},{beta},{acc},{},{}",
                coeff.iterations, coeff.converged
            ))
        })
        .collect();

    let mut csv = String::from("lambda,beta,accuracy,iterations,converged\n");
    for row in rows? {
        csv.push_str(&row);
        csv.push('\n');
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("sweep.csv");
    fs::write(&csv_path, &csv).map_err(|e| Error::io(&csv_path, e))?;
    write_config_echo(
        &args.out,
        &[
            ("command", toml_str("sweep")),
            ("embedded", toml_str(&args.embedded.to_string_lossy())),
            ("lambda_grid", toml_str(&args.lambda_grid)),
            ("beta_grid", toml_str(&args.beta_grid)),
            ("k", args.k.to_string()),
            ("seed", args.seed.to_string()),
        ],
    )?;
    print!("{csv}");
    Ok(())
}
