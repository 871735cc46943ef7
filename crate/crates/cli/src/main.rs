use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, ValueEnum};
use svmcert::perturb::PerturbationSpec;
use svmcert::svm::SvmModel;
use svmcert::verify::{self, load_csv, load_idx, DatasetFormat, VerifyConfig};
use svmcert::{BilinearMode, Domain};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Idx,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Interval,
    Raf,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BilinearArg {
    Exact,
    Vertex,
}

/// Certify robustness of an SVM classifier on a labeled test set.
#[derive(Debug, Parser)]
#[command(name = "svmcert", version)]
#[command(group(ArgGroup::new("perturbation").required(true).args(["linf", "frame"])))]
struct Args {
    /// Model file in libsvm text format.
    #[arg(long)]
    model: PathBuf,
    /// Test set (CSV file or IDX images file).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// IDX labels file; guessed from the images file name when omitted.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// L∞ perturbation of size DELTA.
    #[arg(long, value_name = "DELTA")]
    linf: Option<f64>,
    /// Border frame of thickness T (needs --height and --width).
    #[arg(long, value_name = "T", requires_all = ["height", "width"])]
    frame: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, value_enum, default_value = "hybrid")]
    domain: DomainArg,
    #[arg(long, value_enum, default_value = "exact")]
    bilinear: BilinearArg,
    /// Clip range `lo,hi` for L∞ regions and CSV features, or `off`.
    #[arg(long, default_value = "0,1")]
    clip: String,
    /// Only verify samples the model classifies correctly.
    #[arg(long)]
    only_correct: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature count; defaults to the dataset's.
    #[arg(long)]
    dim: Option<usize>,
}

fn parse_clip(s: &str) -> Result<Option<(f64, f64)>> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    let (lo, hi) = s
        .split_once(',')
        .with_context(|| format!("--clip expects `lo,hi` or `off`, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad clip bound `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad clip bound `{hi}`"))?;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        bail!("invalid clip range [{lo}, {hi}]");
    }
    Ok(Some((lo, hi)))
}

fn run(args: Args) -> Result<()> {
    let clip = parse_clip(&args.clip)?;
    let format = match args.format {
        FormatArg::Csv => DatasetFormat::Csv,
        FormatArg::Idx => DatasetFormat::Idx,
    };
    let samples = match format {
        DatasetFormat::Csv => load_csv(&args.data, clip)
            .with_context(|| format!("loading {}", args.data.display()))?,
        DatasetFormat::Idx => {
            let labels = match &args.labels {
                Some(p) => p.clone(),
                None => verify::idx_labels_path(&args.data)
                    .context("cannot guess the IDX labels file, pass --labels")?,
            };
            load_idx(&args.data, &labels).with_context(|| {
                format!("loading {} and {}", args.data.display(), labels.display())
            })?
        }
    };
    let dim = args
        .dim
        .or_else(|| samples.first().map(|s| s.features.len()));
    let model = SvmModel::load(&args.model, dim)
        .with_context(|| format!("loading {}", args.model.display()))?;

    let perturbation = match (args.linf, args.frame) {
        (Some(delta), None) => PerturbationSpec::Linf { delta, clip },
        (None, Some(thickness)) => PerturbationSpec::Frame {
            thickness,
            height: args.height.unwrap_or_default(),
            width: args.width.unwrap_or_default(),
        },
        _ => bail!("exactly one of --linf and --frame is required"),
    };
    let config = VerifyConfig {
        perturbation,
        domain: match args.domain {
            DomainArg::Interval => Domain::Interval,
            DomainArg::Raf => Domain::Raf,
            DomainArg::Hybrid => Domain::Hybrid,
        },
        mode: match args.bilinear {
            BilinearArg::Exact => BilinearMode::Exact,
            BilinearArg::Vertex => BilinearMode::Vertex,
        },
        only_correct: args.only_correct,
        jobs: args.jobs,
    };
    let report = verify::run(&model, &samples, &config)?;

    let lines = report.to_json_lines();
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            w.write_all(lines.as_bytes())?;
            w.flush()?;
        }
        None => std::io::stdout().lock().write_all(lines.as_bytes())?,
    }
    eprint!("{}", report.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
