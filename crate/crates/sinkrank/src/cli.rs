//! Command-line surface.
//!
//! Subcommands: `transform` (rewrite a matrix file through a
//! transform), `eval` (full-matrix metrics), `single-query` (the
//! pseudo-test-set protocol), `synth` (planted-hub benchmark
//! generator), `compare` (paired significance between two rank dumps),
//! and `convert` (SMX ↔ CSV).
//!
//! Exit codes: 0 success, 1 usage error (bad flags or flag values),
//! 2 data error (unreadable or inconsistent files).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::io::{csvio, gtfile, report, smx};
use crate::io::gtfile::IdSpace;
use crate::matrix::SimilarityMatrix;
use crate::metrics::{paired_significance, GroundTruth};
use crate::protocols::{
    self, PseudoTestConfig, DEFAULT_POOL_SIZE, DEFAULT_RESAMPLES, DEFAULT_SAMPLE_SIZE,
};
use crate::rng::{self, tag};
use crate::synth::{self, SynthConfig};
use crate::transforms::{
    Method, TransformConfig, DEFAULT_DSL_TEMPERATURE, DEFAULT_SINKHORN_STEPS,
    DEFAULT_SINKHORN_TEMPERATURE,
};

#[derive(Parser)]
#[command(
    name = "sinkrank",
    version,
    about = "Postprocess retrieval similarity matrices (dual-softmax, Sinkhorn) and evaluate Recall@K",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a transform to a matrix file and write the result.
    Transform(TransformArgs),
    /// Evaluate a scores matrix against ground truth.
    Eval(EvalArgs),
    /// Evaluate with the single-query pseudo-test-set protocol.
    SingleQuery(SingleQueryArgs),
    /// Generate a synthetic planted-hub benchmark instance.
    Synth(SynthArgs),
    /// Paired randomization test between two per-query rank dumps.
    Compare(CompareArgs),
    /// Convert a matrix file between SMX and CSV.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Leave scores unchanged.
    Identity,
    /// Dual softmax (softmax-over-queries prior, then row softmax).
    #[value(alias = "dual-softmax")]
    Dsl,
    /// Iterated log-domain Sinkhorn normalization.
    Sinkhorn,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::Identity => Method::Identity,
            MethodArg::Dsl => Method::DualSoftmax,
            MethodArg::Sinkhorn => Method::Sinkhorn,
        }
    }

    /// Per-method default temperature, used when --temperature is
    /// omitted.
    fn default_temperature(self) -> f64 {
        match self {
            MethodArg::Sinkhorn => DEFAULT_SINKHORN_TEMPERATURE,
            _ => DEFAULT_DSL_TEMPERATURE,
        }
    }

    fn config(self, temperature: Option<f64>, steps: usize) -> TransformConfig {
        TransformConfig {
            method: self.method(),
            temperature: temperature.unwrap_or_else(|| self.default_temperature()),
            sinkhorn_steps: steps,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    /// Rows are queries, as stored (e.g. text-to-video retrieval).
    T2v,
    /// Transpose the matrix and invert the ground truth.
    V2t,
}

#[derive(clap::Args)]
struct TransformArgs {
    /// Input SMX matrix.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output SMX matrix.
    #[arg(long = "out")]
    output: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Temperature T (defaults: 100 for dsl/identity, 0.05 for sinkhorn).
    #[arg(long)]
    temperature: Option<f64>,
    /// Sinkhorn step count k.
    #[arg(long, default_value_t = DEFAULT_SINKHORN_STEPS)]
    steps: usize,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Scores matrix (SMX).
    #[arg(long)]
    scores: PathBuf,
    /// Ground-truth file (`query<TAB>item,item,...`).
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated recall cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    ks: Vec<usize>,
    /// Retrieval direction.
    #[arg(long, value_enum, default_value_t = DirectionArg::T2v)]
    direction: DirectionArg,
    /// Also write per-query ranks to this file (for `compare`).
    #[arg(long)]
    dump_ranks: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SingleQueryArgs {
    /// Test-query scores matrix (SMX), rows = test queries.
    #[arg(long)]
    test_scores: PathBuf,
    /// Training-query scores matrix (SMX) over the same gallery.
    #[arg(long)]
    train_scores: PathBuf,
    /// Ground truth for the test queries.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Temperature T (defaults: 100 for dsl/identity, 0.05 for sinkhorn).
    #[arg(long)]
    temperature: Option<f64>,
    /// Sinkhorn step count k.
    #[arg(long, default_value_t = DEFAULT_SINKHORN_STEPS)]
    steps: usize,
    /// Training rows staged into the sampling pool. Default 5000,
    /// clamped to the training matrix size when omitted.
    #[arg(long)]
    pool: Option<usize>,
    /// Pseudo-test size m (test query + m-1 sampled rows). Default
    /// 1000, clamped to pool+1 when omitted.
    #[arg(long)]
    m: Option<usize>,
    /// Pseudo-test resamples to average over.
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated recall cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    ks: Vec<usize>,
    /// Also write resample-0 per-query ranks to this file.
    #[arg(long)]
    dump_ranks: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 200)]
    items: usize,
    #[arg(long, default_value_t = 20)]
    hubs: usize,
    #[arg(long, default_value_t = 1.0)]
    match_strength: f64,
    #[arg(long, default_value_t = 1.2)]
    hub_strength: f64,
    /// Gaussian noise sigma.
    #[arg(long = "noise", default_value_t = 0.3)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Writes `<prefix>.smx` and `<prefix>.gt`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// First rank dump (from --dump-ranks).
    #[arg(long)]
    report_a: PathBuf,
    /// Second rank dump over the same queries.
    #[arg(long)]
    report_b: PathBuf,
    /// Rank cutoff defining a hit.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomization iterations.
    #[arg(long, default_value_t = 100_000)]
    iterations: u64,
}

#[derive(clap::Args)]
struct ConvertArgs {
    /// Input matrix (.smx or .csv, by extension).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output matrix (.smx or .csv, by extension).
    #[arg(long = "out")]
    output: PathBuf,
}

/// Parse `argv` and run. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Transform(args) => run_transform(args),
        Cmd::Eval(args) => run_eval(args),
        Cmd::SingleQuery(args) => run_single_query(args),
        Cmd::Synth(args) => run_synth(args),
        Cmd::Compare(args) => run_compare(args),
        Cmd::Convert(args) => run_convert(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn header(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn transform_header(cfg: &TransformConfig) -> Vec<(&'static str, String)> {
    let mut h = vec![
        ("method", cfg.method.to_string()),
        ("temperature", format!("{}", cfg.temperature)),
    ];
    if cfg.method == Method::Sinkhorn {
        h.push(("steps", cfg.sinkhorn_steps.to_string()));
    }
    h
}

fn run_transform(args: TransformArgs) -> Result<()> {
    let tcfg = args.method.config(args.temperature, args.steps);
    tcfg.validate()?;
    let (matrix, row_ids, col_ids) = smx::read_matrix_with_ids(&args.input)?;
    let out = crate::transforms::apply(&tcfg, &matrix)?;
    smx::write_matrix(&out, &args.output)?;
    if let Some(ids) = &row_ids {
        smx::write_sidecar(&smx::rows_sidecar_path(&args.output), ids)?;
    }
    if let Some(ids) = &col_ids {
        smx::write_sidecar(&smx::cols_sidecar_path(&args.output), ids)?;
    }
    println!("# sinkrank transform");
    println!("# in = {}", args.input.display());
    println!("# out = {}", args.output.display());
    for (k, v) in transform_header(&tcfg) {
        println!("# {k} = {v}");
    }
    println!("rows={}", out.n_rows());
    println!("cols={}", out.n_cols());
    Ok(())
}

fn read_gt_for(
    gt_path: &Path,
    matrix: &SimilarityMatrix,
    row_ids: Option<&[String]>,
    col_ids: Option<&[String]>,
) -> Result<GroundTruth> {
    let rows = match row_ids {
        Some(ids) => IdSpace::Named(ids),
        None => IdSpace::Indexed(matrix.n_rows()),
    };
    let cols = match col_ids {
        Some(ids) => IdSpace::Named(ids),
        None => IdSpace::Indexed(matrix.n_cols()),
    };
    gtfile::read_ground_truth(gt_path, rows, cols)
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let (matrix, row_ids, col_ids) = smx::read_matrix_with_ids(&args.scores)?;
    let gt = read_gt_for(&args.gt, &matrix, row_ids.as_deref(), col_ids.as_deref())?;
    let (matrix, gt) = match args.direction {
        DirectionArg::T2v => (matrix, gt),
        DirectionArg::V2t => protocols::transpose_direction(&matrix, &gt)?,
    };
    let report = crate::metrics::compute_metrics(&matrix, &gt, &args.ks)?;
    let head = header(&[
        ("scores", args.scores.display().to_string()),
        ("gt", args.gt.display().to_string()),
        (
            "direction",
            match args.direction {
                DirectionArg::T2v => "t2v".to_string(),
                DirectionArg::V2t => "v2t".to_string(),
            },
        ),
        ("queries", matrix.n_rows().to_string()),
        ("items", matrix.n_cols().to_string()),
    ]);
    print!("{}", report::render_report("eval", &head, &report));
    if let Some(path) = &args.dump_ranks {
        let queries: Vec<usize> = gt.queries().collect();
        report::dump_ranks(path, &head, &queries, &report.per_query_rank)?;
    }
    Ok(())
}

fn run_single_query(args: SingleQueryArgs) -> Result<()> {
    let tcfg = args.method.config(args.temperature, args.steps);
    tcfg.validate()?;
    let (test, row_ids, col_ids) = smx::read_matrix_with_ids(&args.test_scores)?;
    let train = smx::read_matrix(&args.train_scores)?;
    let gt = read_gt_for(&args.gt, &test, row_ids.as_deref(), col_ids.as_deref())?;

    // Stage the sampling pool. An explicit --pool larger than the
    // training matrix is an error; the default silently clamps.
    let train_rows = train.n_rows();
    let pool_size = match args.pool {
        Some(p) => {
            if p == 0 {
                return Err(Error::Config("--pool must be positive".to_string()));
            }
            if p > train_rows {
                return Err(Error::Config(format!(
                    "--pool {p} exceeds the {train_rows} rows of {}",
                    args.train_scores.display()
                )));
            }
            p
        }
        None => DEFAULT_POOL_SIZE.min(train_rows),
    };
    let pool = if pool_size == train_rows {
        train
    } else {
        let mut rng = rng::stream(args.seed, &[tag::POOL_STAGE]);
        let picks = rng::sample_without_replacement(&mut rng, train_rows, pool_size);
        train.select_rows(&picks)?
    };

    let sample_size = match args.m {
        Some(m) => m,
        None => DEFAULT_SAMPLE_SIZE.min(pool_size + 1),
    };
    let pcfg = PseudoTestConfig {
        pool_size,
        sample_size,
        resamples: args.resamples,
        seed: args.seed,
    };

    let report_data =
        protocols::single_query_eval(&test, &gt, &pool, &tcfg, &pcfg, &args.ks)?;

    let mut head_pairs = vec![
        ("test-scores", args.test_scores.display().to_string()),
        ("train-scores", args.train_scores.display().to_string()),
        ("gt", args.gt.display().to_string()),
    ];
    head_pairs.extend(transform_header(&tcfg));
    head_pairs.extend([
        ("pool", pool_size.to_string()),
        ("m", sample_size.to_string()),
        ("resamples", args.resamples.to_string()),
        ("seed", args.seed.to_string()),
    ]);
    let head = header(&head_pairs);
    print!("{}", report::render_report("single-query", &head, &report_data));
    if let Some(path) = &args.dump_ranks {
        let queries: Vec<usize> = gt.queries().collect();
        report::dump_ranks(path, &head, &queries, &report_data.per_query_rank)?;
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_queries: args.queries,
        n_items: args.items,
        n_hubs: args.hubs,
        match_strength: args.match_strength,
        hub_strength: args.hub_strength,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
    };
    let (matrix, gt) = synth::generate(&cfg)?;
    let matrix_path = append_suffix(&args.out_prefix, ".smx");
    let gt_path = append_suffix(&args.out_prefix, ".gt");
    smx::write_matrix(&matrix, &matrix_path)?;
    gtfile::write_ground_truth(&gt_path, &gt, None, None)?;
    println!("# sinkrank synth");
    println!("# queries = {}", cfg.n_queries);
    println!("# items = {}", cfg.n_items);
    println!("# hubs = {}", cfg.n_hubs);
    println!("# match-strength = {}", cfg.match_strength);
    println!("# hub-strength = {}", cfg.hub_strength);
    println!("# noise = {}", cfg.noise_sigma);
    println!("# seed = {}", cfg.seed);
    println!("matrix={}", matrix_path.display());
    println!("gt={}", gt_path.display());
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let a = report::load_ranks(&args.report_a)?;
    let b = report::load_ranks(&args.report_b)?;
    if a.len() != b.len() || a.iter().zip(&b).any(|((qa, _), (qb, _))| qa != qb) {
        return Err(Error::Input(format!(
            "rank dumps cover different queries: {} vs {}",
            args.report_a.display(),
            args.report_b.display()
        )));
    }
    let ranks_a: Vec<usize> = a.iter().map(|&(_, r)| r).collect();
    let ranks_b: Vec<usize> = b.iter().map(|&(_, r)| r).collect();
    let p = paired_significance(&ranks_a, &ranks_b, args.k, args.iterations, args.seed)?;
    let hits_a = ranks_a.iter().filter(|&&r| r <= args.k).count();
    let hits_b = ranks_b.iter().filter(|&&r| r <= args.k).count();
    let n = ranks_a.len();
    println!("# sinkrank compare");
    println!("# report-a = {}", args.report_a.display());
    println!("# report-b = {}", args.report_b.display());
    println!("# k = {}", args.k);
    println!("# iterations = {}", args.iterations);
    println!("# seed = {}", args.seed);
    println!("judged_queries={n}");
    println!("recall_a@{}={:.6}", args.k, hits_a as f64 / n as f64);
    println!("recall_b@{}={:.6}", args.k, hits_b as f64 / n as f64);
    println!("p_value={p:.6}");
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MatrixFormat {
    Smx,
    Csv,
}

fn format_of(path: &Path) -> Result<MatrixFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("smx") => Ok(MatrixFormat::Smx),
        Some("csv") => Ok(MatrixFormat::Csv),
        _ => Err(Error::Config(format!(
            "{}: cannot infer matrix format; use a .smx or .csv extension",
            path.display()
        ))),
    }
}

fn run_convert(args: ConvertArgs) -> Result<()> {
    let matrix = match format_of(&args.input)? {
        MatrixFormat::Smx => smx::read_matrix(&args.input)?,
        MatrixFormat::Csv => csvio::read_matrix_csv(&args.input)?,
    };
    match format_of(&args.output)? {
        MatrixFormat::Smx => smx::write_matrix(&matrix, &args.output)?,
        MatrixFormat::Csv => csvio::write_matrix_csv(&matrix, &args.output)?,
    }
    println!("# sinkrank convert");
    println!("# in = {}", args.input.display());
    println!("# out = {}", args.output.display());
    println!("rows={}", matrix.n_rows());
    println!("cols={}", matrix.n_cols());
    Ok(())
}

fn append_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut os = prefix.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn method_arg_defaults() {
        assert_eq!(
            MethodArg::Sinkhorn.config(None, 20).temperature,
            DEFAULT_SINKHORN_TEMPERATURE
        );
        assert_eq!(
            MethodArg::Dsl.config(None, 20).temperature,
            DEFAULT_DSL_TEMPERATURE
        );
        assert_eq!(MethodArg::Dsl.config(Some(3.5), 20).temperature, 3.5);
        assert_eq!(MethodArg::Identity.method(), Method::Identity);
    }

    #[test]
    fn format_detection() {
        assert!(matches!(
            format_of(Path::new("a.smx")),
            Ok(MatrixFormat::Smx)
        ));
        assert!(matches!(
            format_of(Path::new("b.csv")),
            Ok(MatrixFormat::Csv)
        ));
        assert!(matches!(format_of(Path::new("c.txt")), Err(Error::Config(_))));
        assert!(matches!(format_of(Path::new("noext")), Err(Error::Config(_))));
    }
}
