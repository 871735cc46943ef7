//! Batch verification of labeled samples and the resulting report.

mod dataset;

pub use dataset::{
    idx_labels_path, load_csv, load_idx, parse_csv, parse_idx, DatasetError, DatasetFormat, Sample,
};

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abstract_svm::{extreme_corners, AbstractError, Domain, ModelEvaluator};
use crate::multiclass::{verify_multiclass, MulticlassError};
use crate::perturb::{region_to_raf, PerturbError, PerturbationSpec};
use crate::raf::{BilinearMode, RafError};
use crate::svm::{Kernel, SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("sample {id}: {source}")]
    Sample {
        id: usize,
        #[source]
        source: Box<VerifyError>,
    },
    #[error("sample has {found} features, model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("no samples to verify")]
    Empty,
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Raf(#[from] RafError),
    #[error(transparent)]
    Abstract(#[from] AbstractError),
    #[error(transparent)]
    Multiclass(#[from] MulticlassError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    ProvedRobust,
    /// Two points of the region classified differently (linear binary models).
    ProvedVulnerable {
        y: Vec<f64>,
        z: Vec<f64>,
    },
    ProvedConsistentlyMisclassified,
    Unknown,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::ProvedRobust => "proved_robust",
            Status::ProvedVulnerable { .. } => "proved_vulnerable",
            Status::ProvedConsistentlyMisclassified => "proved_consistently_misclassified",
            Status::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleVerdict {
    pub id: usize,
    pub label: i64,
    pub prediction: i64,
    pub correct: bool,
    #[serde(flatten)]
    pub status: Status,
    /// Labels the classifier may output somewhere in the region.
    pub possible: Vec<i64>,
    #[serde(serialize_with = "as_millis")]
    pub elapsed_ms: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub perturbation: PerturbationSpec,
    pub domain: Domain,
    pub mode: BilinearMode,
    /// Skip samples the model misclassifies.
    pub only_correct: bool,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

/// Verifies one sample: concrete prediction, abstract label set, status.
pub fn verify_sample(
    eval: &ModelEvaluator<'_>,
    sample: &Sample,
    spec: &PerturbationSpec,
    domain: Domain,
) -> Result<SampleVerdict, VerifyError> {
    let start = Instant::now();
    let model = eval.model();
    if sample.features.len() != model.dim() {
        return Err(VerifyError::Dimension {
            expected: model.dim(),
            found: sample.features.len(),
        });
    }
    let pred = model.predict_ovo(&sample.features)?;
    let prediction = model.labels[pred.winner];
    let correct = prediction == sample.label;
    let b = spec.region(&sample.features)?;
    let region = region_to_raf(&b)?;
    let set = verify_multiclass(eval, &b, &region, domain)?;
    let status = if set == [pred.winner] {
        if correct {
            Status::ProvedRobust
        } else {
            Status::ProvedConsistentlyMisclassified
        }
    } else if let (Kernel::Linear, 2) = (model.kernel, model.num_classes()) {
        let w = eval
            .primal_weights(0)
            .expect("linear model has primal weights");
        let (y, z) = extreme_corners(w, &b);
        if model.predict_ovo(&y)?.winner != model.predict_ovo(&z)?.winner {
            Status::ProvedVulnerable { y, z }
        } else {
            Status::Unknown
        }
    } else {
        Status::Unknown
    };
    Ok(SampleVerdict {
        id: sample.id,
        label: sample.label,
        prediction,
        correct,
        status,
        possible: set.into_iter().map(|c| model.labels[c]).collect(),
        elapsed_ms: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub perturbation: String,
    pub domain: Domain,
    pub bilinear: &'static str,
    pub only_correct: bool,
    pub kernel: String,
    pub classes: usize,
    pub support_vectors: usize,
    pub features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub samples: usize,
    pub correct: usize,
    pub misclassified: usize,
    pub accuracy: f64,
    pub proved_robust: usize,
    pub proved_vulnerable: usize,
    pub proved_consistently_misclassified: usize,
    pub unknown: usize,
    /// `proved_robust / correct`, in percent.
    pub robustness_pct: f64,
    pub robustness_denominator: usize,
    /// `proved_consistently_misclassified / misclassified`, in percent.
    pub vulnerability_pct: f64,
    pub vulnerability_denominator: usize,
    pub time_mean_ms: f64,
    pub time_p95_ms: f64,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub verdicts: Vec<SampleVerdict>,
    pub summary: Summary,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn describe(p: &PerturbationSpec) -> String {
    match *p {
        PerturbationSpec::Linf {
            delta,
            clip: Some((lo, hi)),
        } => format!("linf delta={delta} clip=[{lo},{hi}]"),
        PerturbationSpec::Linf { delta, clip: None } => format!("linf delta={delta} clip=off"),
        PerturbationSpec::Frame {
            thickness,
            height,
            width,
        } => format!("frame t={thickness} {height}x{width}"),
    }
}

fn kernel_name(k: &Kernel) -> String {
    match *k {
        Kernel::Linear => "linear".into(),
        Kernel::Polynomial {
            degree,
            gamma,
            coef0,
        } => format!("polynomial degree={degree} gamma={gamma} coef0={coef0}"),
        Kernel::Rbf { gamma } => format!("rbf gamma={gamma}"),
    }
}

impl Summary {
    pub fn from_verdicts(verdicts: &[SampleVerdict], config: ConfigEcho) -> Summary {
        let count = |f: fn(&Status) -> bool| verdicts.iter().filter(|v| f(&v.status)).count();
        let samples = verdicts.len();
        let correct = verdicts.iter().filter(|v| v.correct).count();
        let proved_robust = count(|s| matches!(s, Status::ProvedRobust));
        let pcm = count(|s| matches!(s, Status::ProvedConsistentlyMisclassified));
        let mut times: Vec<f64> = verdicts
            .iter()
            .map(|v| v.elapsed_ms.as_secs_f64() * 1e3)
            .collect();
        times.sort_by(f64::total_cmp);
        let time_mean_ms = if samples == 0 {
            0.0
        } else {
            times.iter().sum::<f64>() / samples as f64
        };
        // nearest-rank percentile
        let time_p95_ms = if samples == 0 {
            0.0
        } else {
            times[((0.95 * samples as f64).ceil() as usize).clamp(1, samples) - 1]
        };
        Summary {
            samples,
            correct,
            misclassified: samples - correct,
            accuracy: pct(correct, samples),
            proved_robust,
            proved_vulnerable: count(|s| matches!(s, Status::ProvedVulnerable { .. })),
            proved_consistently_misclassified: pcm,
            unknown: count(|s| matches!(s, Status::Unknown)),
            robustness_pct: pct(proved_robust, correct),
            robustness_denominator: correct,
            vulnerability_pct: pct(pcm, samples - correct),
            vulnerability_denominator: samples - correct,
            time_mean_ms,
            time_p95_ms,
            config,
        }
    }
}

/// Verifies every sample (in parallel) and aggregates the report. Verdicts
/// are returned in dataset order.
pub fn run(
    model: &SvmModel,
    samples: &[Sample],
    config: &VerifyConfig,
) -> Result<Report, VerifyError> {
    if samples.is_empty() {
        return Err(VerifyError::Empty);
    }
    let eval = ModelEvaluator::new(model, config.mode)?;
    let work = |s: &Sample| -> Option<Result<SampleVerdict, VerifyError>> {
        if config.only_correct {
            match model.predict(&s.features) {
                Ok(p) if p != s.label => return None,
                Err(e) => return Some(Err(wrap(s.id, e.into()))),
                Ok(_) => {}
            }
        }
        Some(
            verify_sample(&eval, s, &config.perturbation, config.domain).map_err(|e| wrap(s.id, e)),
        )
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| VerifyError::Pool(e.to_string()))?;
    let results: Vec<Option<Result<SampleVerdict, VerifyError>>> =
        pool.install(|| samples.par_iter().map(work).collect());
    let verdicts = results
        .into_iter()
        .flatten()
        .collect::<Result<Vec<_>, _>>()?;
    let echo = ConfigEcho {
        perturbation: describe(&config.perturbation),
        domain: config.domain,
        bilinear: match config.mode {
            BilinearMode::Exact => "exact",
            BilinearMode::Vertex => "vertex",
        },
        only_correct: config.only_correct,
        kernel: kernel_name(&model.kernel),
        classes: model.num_classes(),
        support_vectors: model.support_vectors.len(),
        features: model.dim(),
    };
    let summary = Summary::from_verdicts(&verdicts, echo);
    Ok(Report { verdicts, summary })
}

fn wrap(id: usize, e: VerifyError) -> VerifyError {
    VerifyError::Sample {
        id,
        source: Box::new(e),
    }
}

impl Report {
    /// One JSON object per sample, then a final line `{"summary": …}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&serde_json::to_string(v).expect("serializable"));
            out.push('\n');
        }
        let s = serde_json::json!({ "summary": &self.summary });
        out.push_str(&s.to_string());
        out.push('\n');
        out
    }

    /// Short human-readable summary.
    pub fn to_text(&self) -> String {
        let s = &self.summary;
        format!(
            "samples             {}\n\
             accuracy            {:.2}% ({} correct)\n\
             provably robust     {:.2}% ({} of {} correct)\n\
             provably vulnerable {} (counterexample pairs)\n\
             consistently wrong  {:.2}% ({} of {} misclassified)\n\
             unknown             {}\n\
             time per sample     mean {:.3} ms, p95 {:.3} ms\n",
            s.samples,
            s.accuracy,
            s.correct,
            s.robustness_pct,
            s.proved_robust,
            s.robustness_denominator,
            s.proved_vulnerable,
            s.vulnerability_pct,
            s.proved_consistently_misclassified,
            s.vulnerability_denominator,
            s.unknown,
            s.time_mean_ms,
            s.time_p95_ms,
        )
    }
}
