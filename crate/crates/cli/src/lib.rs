//! Command-line front end. `run` is the whole program minus process exit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use xray_cluster::clustering::{valid_algorithm_names, Algorithm, ClusterConfig, ClusterError, CovarianceMode, KMeansInit};
use xray_cluster::cnn::{init_weights, load_weights, save_weights, CnnSpec, Network};
use xray_cluster::imaging::{load_pgm, preprocess, save_pgm, ImageGray};
use xray_cluster::metrics::{silhouette, MetricsError};
use xray_cluster::pipeline::{
    align_labels, extract_features, id_from_path, parse_algorithms, parse_k_range, preprocess_all, read_features,
    read_labels, read_manifest, render_chart_svg, render_report_csv, sweep, synth_blobs, synth_images, write_features,
    write_labels, write_manifest, ManifestEntry, PipelineError, Sex, SweepConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "xray-cluster", version, about = "Cluster grayscale radiographs by CNN features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic blobs (feature CSV) or images (PGM files plus manifest).
    Synth(SynthArgs),
    /// Crop and resize the images listed in a manifest.
    Preprocess(PreprocessArgs),
    /// Run the CNN over a manifest and write a feature CSV.
    Extract(ExtractArgs),
    /// Cluster a feature CSV with one algorithm and write labels.
    Cluster(ClusterArgs),
    /// Silhouette score of a labelling.
    Evaluate(EvaluateArgs),
    /// Run the algorithm x k grid and write the report and chart.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Blobs,
    Images,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "blobs")]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature CSV for blobs, output directory for images.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth labels CSV (blobs only).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    n_per_blob: usize,
    #[arg(long, default_value_t = 2)]
    blobs: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Number of images.
    #[arg(long, default_value_t = 60)]
    count: usize,
    /// Image side length in pixels.
    #[arg(long, default_value_t = 128)]
    size: usize,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; receives the resized images and a manifest without crops.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    size: usize,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Weight file; seeded initialization from `--seed` when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Also write the weights that were used.
    #[arg(long)]
    save_weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Knobs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    birch_threshold: Option<f64>,
    #[arg(long, value_parser = parse_cov_mode)]
    cov_mode: Option<CovarianceMode>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// K-Means seeding: first-k rows or k-means++.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// K-Means restarts (with `--init plus-plus`).
    #[arg(long)]
    n_init: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    FirstK,
    PlusPlus,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[command(flatten)]
    knobs: Knobs,
    /// Labels CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    features: PathBuf,
    /// Inclusive range `a..b`.
    #[arg(long, default_value = "2..6", value_parser = parse_k_range)]
    k: KRange,
    /// `all` or a comma list of algorithm names.
    #[arg(long, default_value = "all", value_parser = parse_algorithms)]
    algos: AlgoList,
    #[command(flatten)]
    knobs: Knobs,
    /// Report CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Fill the runtime_ms column (makes the report run-dependent).
    #[arg(long)]
    timing: bool,
}

type KRange = Vec<usize>;
type AlgoList = Vec<Algorithm>;

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|_| format!("unknown algorithm {s:?}; valid names: {}", valid_algorithm_names()))
}

fn parse_cov_mode(s: &str) -> Result<CovarianceMode, String> {
    s.parse::<CovarianceMode>().map_err(|_| format!("unknown covariance mode {s:?}; expected tied, diag or full"))
}

impl Knobs {
    fn config(&self, k: usize) -> ClusterConfig {
        let mut cfg = ClusterConfig {
            k,
            seed: self.seed,
            ..ClusterConfig::default()
        };
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        cfg.rbf_sigma = self.sigma.or(cfg.rbf_sigma);
        cfg.birch_threshold = self.birch_threshold.or(cfg.birch_threshold);
        if let Some(v) = self.cov_mode {
            cfg.covariance_mode = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.init {
            cfg.init = match v {
                InitArg::FirstK => KMeansInit::FirstK,
                InitArg::PlusPlus => KMeansInit::PlusPlus,
            };
        }
        if let Some(v) = self.n_init {
            cfg.n_init = v;
        }
        cfg
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn data(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: message.into(),
    }
}

fn from_cluster(e: ClusterError) -> Failure {
    Failure {
        code: if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DATA },
        message: e.to_string(),
    }
}

fn from_pipeline(e: PipelineError) -> Failure {
    data(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn load_features(path: &Path) -> Result<xray_cluster::clustering::FeatureMatrix, Failure> {
    read_features(&read(path)?).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Manifest entries with image paths resolved against the manifest's directory.
fn load_manifest(path: &Path) -> Result<Vec<(ManifestEntry, PathBuf)>, Failure> {
    let entries = read_manifest(&read(path)?).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(entries
        .into_iter()
        .map(|e| {
            let p = base.join(&e.path);
            (e, p)
        })
        .collect())
}

fn load_image(path: &Path) -> Result<ImageGray, Failure> {
    load_pgm(&read(path)?).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, bytes),
        None => stdout.write_all(bytes).map_err(|e| data(format!("standard output: {e}"))),
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Failure> {
    match a.kind {
        SynthKind::Blobs => {
            let (fm, truth) =
                synth_blobs(a.n_per_blob, a.blobs, a.dim, a.separation, a.noise, a.seed).map_err(from_pipeline)?;
            write(&a.out, &write_features(&fm))?;
            if let Some(l) = &a.labels {
                write(l, &write_labels(fm.ids(), &truth))?;
            }
        }
        SynthKind::Images => {
            let imgs = synth_images(a.count, a.size, a.seed).map_err(from_pipeline)?;
            let mut entries = Vec::with_capacity(imgs.len());
            for im in &imgs {
                let name = format!("{}.pgm", im.id);
                write(&a.out.join(&name), &save_pgm(&im.image))?;
                entries.push(ManifestEntry {
                    path: name,
                    crop: None,
                    age: None,
                    sex: Sex::Unknown,
                });
            }
            write(&a.out.join("manifest.csv"), &write_manifest(&entries))?;
        }
    }
    Ok(())
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<(), Failure> {
    if a.size == 0 {
        return Err(data("--size must be at least 1"));
    }
    let mut out_entries = Vec::new();
    for (entry, path) in load_manifest(&a.manifest)? {
        let img = load_image(&path)?;
        let (resized, _) =
            preprocess(&img, entry.crop.as_ref(), a.size).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let name = format!("{}.pgm", id_from_path(&entry.path));
        write(&a.out.join(&name), &save_pgm(&resized))?;
        out_entries.push(ManifestEntry {
            path: name,
            crop: None,
            ..entry
        });
    }
    write(&a.out.join("manifest.csv"), &write_manifest(&out_entries))
}

fn cmd_extract(a: &ExtractArgs) -> Result<(), Failure> {
    let spec = CnnSpec {
        input_size: a.size,
        ..CnnSpec::default()
    };
    let weights = match &a.weights {
        Some(p) => load_weights(&read(p)?, &spec).map_err(|e| data(format!("{}: {e}", p.display())))?,
        None => init_weights(&spec, a.seed),
    };
    if let Some(p) = &a.save_weights {
        write(p, &save_weights(&weights))?;
    }
    let net = Network::new(&spec, &weights).map_err(|e| data(e.to_string()))?;
    let mut images = Vec::new();
    for (entry, path) in load_manifest(&a.manifest)? {
        images.push((id_from_path(&entry.path), load_image(&path)?, entry.crop));
    }
    let tensors = preprocess_all(&images, a.size).map_err(from_pipeline)?;
    let fm = extract_features(&net, &tensors).map_err(from_pipeline)?;
    write(&a.out, &write_features(&fm))
}

fn cmd_cluster(a: &ClusterArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let fm = load_features(&a.features)?;
    let cfg = a.knobs.config(a.k);
    let r = a.algo.run(&fm, &cfg).map_err(from_cluster)?;
    emit(a.out.as_deref(), &write_labels(fm.ids(), &r.labels), stdout)
}

fn cmd_evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let fm = load_features(&a.features)?;
    let pairs = read_labels(&read(&a.labels)?).map_err(|e| data(format!("{}: {e}", a.labels.display())))?;
    let labels = align_labels(&fm, &pairs).map_err(|e| data(format!("{}: {e}", a.labels.display())))?;
    let report = silhouette(&fm, &labels).map_err(|e| match e {
        MetricsError::SingleCluster => Failure {
            code: EXIT_NUMERIC,
            message: e.to_string(),
        },
        other => data(other.to_string()),
    })?;
    let mut text = format!("silhouette,{:.4}\n", report.mean);
    for (c, m) in report.per_cluster_mean.iter().enumerate() {
        text.push_str(&format!("cluster_{c},{m:.4}\n"));
    }
    emit(None, text.as_bytes(), stdout)
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let fm = load_features(&a.features)?;
    let cfg = SweepConfig {
        algorithms: a.algos.clone(),
        ks: a.k.clone(),
        seed: a.knobs.seed,
        base: a.knobs.config(2),
        timing: a.timing,
    };
    let report = sweep(&fm, &cfg).map_err(from_pipeline)?;
    emit(a.out.as_deref(), &render_report_csv(&report), stdout)?;
    if let Some(p) = &a.svg {
        write(p, &render_chart_svg(&report))?;
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to `stderr`; the returned value is the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Cluster(a) => cmd_cluster(a, stdout),
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
