//! Abstract evaluation of binary SVM classifiers over intervals and affine
//! forms.
//!
//! Decision functions returned here already include the bias, so the sign
//! test is always against zero.

use crate::interval::{Interval, IntervalBox};
use crate::perturb::RafVec;
use crate::raf::{BilinearMode, Raf, RafError};
use crate::svm::{BinaryProblem, Kernel, SvmError, SvmModel};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractError {
    #[error("region has dimension {found}, classifier expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("region contains an empty component")]
    EmptyRegion,
    #[error("counterexample synthesis needs an undecided verdict")]
    Decided,
    #[error(transparent)]
    Raf(#[from] RafError),
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// Outcome of an abstract binary classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
    #[serde(rename = "top")]
    Top,
}

/// Abstract domain used for binary decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Interval,
    Raf,
    #[default]
    Hybrid,
}

/// `+1` if every value is `>= b`, `−1` if every value is `< b`, else `⊤`.
pub fn sign_sharp(iv: &Interval, b: f64) -> Verdict {
    match iv.bounds() {
        Some((lo, _)) if lo >= b => Verdict::Pos,
        Some((_, hi)) if hi < b => Verdict::Neg,
        _ => Verdict::Top,
    }
}

fn check_box(b: &IntervalBox, n: usize) -> Result<(), AbstractError> {
    if b.dim() != n {
        return Err(AbstractError::DimensionMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    if b.has_empty() {
        return Err(AbstractError::EmptyRegion);
    }
    Ok(())
}

fn check_region(r: &RafVec, n: usize) -> Result<(), AbstractError> {
    if r.dim() != n {
        return Err(AbstractError::DimensionMismatch {
            expected: n,
            found: r.dim(),
        });
    }
    Ok(())
}

/// `{k(sv, x) | x ∈ box}` enclosed in an interval.
pub fn kernel_interval(k: &Kernel, sv: &[f64], b: &IntervalBox) -> Interval {
    match *k {
        Kernel::Linear => interval_dot(sv, b),
        Kernel::Polynomial {
            degree,
            gamma,
            coef0,
        } => interval_dot(sv, b)
            .scale(gamma)
            .add_scalar(coef0)
            .pow(degree),
        Kernel::Rbf { gamma } => {
            let mut s = Interval::point(0.0);
            for (x, &y) in b.components().iter().zip(sv) {
                s = s.add(&x.add_scalar(-y).pow(2));
            }
            s.scale(-gamma).exp()
        }
    }
}

fn interval_dot(z: &[f64], b: &IntervalBox) -> Interval {
    let mut s = Interval::point(0.0);
    for (x, &zj) in b.components().iter().zip(z) {
        s = s.add(&x.scale(zj));
    }
    s
}

fn enclosed_dot(w: &[Interval], b: &IntervalBox) -> Interval {
    let mut s = Interval::point(0.0);
    for (x, wj) in b.components().iter().zip(w) {
        s = s.add(&wj.mul(x));
    }
    s
}

/// `{k(sv, x) | x ∈ γ(region)}` enclosed in an affine form.
pub fn kernel_raf(
    k: &Kernel,
    sv: &[f64],
    region: &RafVec,
    mode: BilinearMode,
) -> Result<Raf, RafError> {
    match *k {
        Kernel::Linear => region.dot(sv),
        Kernel::Polynomial {
            degree,
            gamma,
            coef0,
        } => region
            .dot(sv)?
            .scale(gamma)?
            .add_scalar(coef0)?
            .pow(degree, mode),
        Kernel::Rbf { gamma } => region.squared_distance(sv, mode)?.scale(-gamma)?.exp(),
    }
}

/// Interval enclosure of `D(x) − b` over the box. Linear classifiers are
/// evaluated in primal form, where every feature occurs once; the primal
/// weights are themselves enclosed, so the result covers the real dual form.
pub fn abstract_decision_interval(
    bp: &BinaryProblem,
    k: &Kernel,
    b: &IntervalBox,
) -> Result<Interval, AbstractError> {
    let n = b.dim();
    if let Some(d) = bp.dim() {
        check_box(b, d)?;
    } else if b.has_empty() {
        return Err(AbstractError::EmptyRegion);
    }
    if *k == Kernel::Linear {
        let w = bp.primal_enclosure(k, n)?;
        return Ok(enclosed_dot(&w, b).add_scalar(-bp.bias));
    }
    let mut acc = Interval::point(0.0);
    for (sv, &w) in bp.support_vectors.iter().zip(&bp.weights) {
        acc = acc.add(&kernel_interval(k, sv, b).scale(w));
    }
    Ok(acc.add_scalar(-bp.bias))
}

/// Affine-form enclosure of `D(x) − b` over the region.
pub fn abstract_decision_raf(
    bp: &BinaryProblem,
    k: &Kernel,
    region: &RafVec,
    mode: BilinearMode,
) -> Result<Raf, AbstractError> {
    let n = region.dim();
    if let Some(d) = bp.dim() {
        check_region(region, d)?;
    }
    if *k == Kernel::Linear {
        let w = bp.primal_enclosure(k, n)?;
        return Ok(region.dot_enclosed(&w)?.add_scalar(-bp.bias)?);
    }
    let mut acc = Raf::zero(n);
    for (sv, &w) in bp.support_vectors.iter().zip(&bp.weights) {
        acc.add_scaled_assign(w, &kernel_raf(k, sv, region, mode)?)?;
    }
    Ok(acc.add_scalar(-bp.bias)?)
}

/// Both enclosures of one decision function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridValue {
    pub iv: Interval,
    pub raf_iv: Interval,
}

impl HybridValue {
    pub fn combined(&self) -> Interval {
        self.iv.meet(&self.raf_iv)
    }

    pub fn verdict(&self) -> Verdict {
        let m = self.combined();
        if m.is_empty() {
            Verdict::Top
        } else {
            sign_sharp(&m, 0.0)
        }
    }
}

/// Verdict of the product domain: the two enclosures are intersected before
/// the sign test. Linear classifiers use the interval path alone.
pub fn classify_hybrid(
    bp: &BinaryProblem,
    k: &Kernel,
    b: &IntervalBox,
    region: &RafVec,
    mode: BilinearMode,
) -> Result<Verdict, AbstractError> {
    let iv = abstract_decision_interval(bp, k, b)?;
    if *k == Kernel::Linear {
        return Ok(sign_sharp(&iv, 0.0));
    }
    let raf_iv = abstract_decision_raf(bp, k, region, mode)?.to_interval();
    Ok(HybridValue { iv, raf_iv }.verdict())
}

/// For an undecided linear classifier, the box corners maximizing and
/// minimizing `w·x − b`: `(y, z)` with `y` on the `+1` side and `z` on the
/// `−1` side.
pub fn counterexample_linear(
    bp: &BinaryProblem,
    k: &Kernel,
    b: &IntervalBox,
) -> Result<(Vec<f64>, Vec<f64>), AbstractError> {
    if sign_sharp(&abstract_decision_interval(bp, k, b)?, 0.0) != Verdict::Top {
        return Err(AbstractError::Decided);
    }
    let (w, _) = bp.primal_weights(k, b.dim())?;
    Ok(extreme_corners(&w, b))
}

pub(crate) fn extreme_corners(w: &[f64], b: &IntervalBox) -> (Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(w.len());
    let mut z = Vec::with_capacity(w.len());
    for (c, &wj) in b.components().iter().zip(w) {
        let (l, u) = c.bounds().expect("nonempty box");
        if wj >= 0.0 {
            y.push(u);
            z.push(l);
        } else {
            y.push(l);
            z.push(u);
        }
    }
    (y, z)
}

/// Evaluates all pair classifiers of a model, sharing per-support-vector
/// kernel enclosures between pairs.
#[derive(Debug, Clone)]
struct Primal {
    nearest: Vec<f64>,
    enclosure: Vec<Interval>,
}

#[derive(Debug, Clone)]
pub struct ModelEvaluator<'a> {
    model: &'a SvmModel,
    /// Per pair: nonzero `(sv position, weight)` terms in model order.
    terms: Vec<Vec<(usize, f64)>>,
    /// Per pair primal weights for linear kernels.
    primal: Option<Vec<Primal>>,
    mode: BilinearMode,
}

impl<'a> ModelEvaluator<'a> {
    pub fn new(model: &'a SvmModel, mode: BilinearMode) -> Result<Self, AbstractError> {
        let mut terms = Vec::new();
        let mut primal = Vec::new();
        for (i, j) in model.pairs() {
            let bp = model.binary_problem(i, j)?;
            if model.kernel == Kernel::Linear {
                primal.push(Primal {
                    nearest: bp.primal_weights(&model.kernel, model.dim())?.0,
                    enclosure: bp.primal_enclosure(&model.kernel, model.dim())?,
                });
            }
            terms.push(bp.sv_index.into_iter().zip(bp.weights).collect());
        }
        Ok(Self {
            model,
            terms,
            primal: (model.kernel == Kernel::Linear).then_some(primal),
            mode,
        })
    }

    pub fn model(&self) -> &SvmModel {
        self.model
    }

    pub fn mode(&self) -> BilinearMode {
        self.mode
    }

    pub fn primal_weights(&self, pair: usize) -> Option<&[f64]> {
        self.primal.as_ref().map(|p| p[pair].nearest.as_slice())
    }

    /// Interval decision enclosures of every pair, in bias order.
    pub fn pair_intervals(&self, b: &IntervalBox) -> Result<Vec<Interval>, AbstractError> {
        check_box(b, self.model.dim())?;
        let rho = &self.model.rho;
        if let Some(primal) = &self.primal {
            return Ok(primal
                .iter()
                .zip(rho)
                .map(|(w, &r)| enclosed_dot(&w.enclosure, b).add_scalar(-r))
                .collect());
        }
        let kernels: Vec<Interval> = self
            .model
            .support_vectors
            .iter()
            .map(|sv| kernel_interval(&self.model.kernel, sv, b))
            .collect();
        Ok(self
            .terms
            .iter()
            .zip(rho)
            .map(|(t, &r)| {
                let mut acc = Interval::point(0.0);
                for &(k, w) in t {
                    acc = acc.add(&kernels[k].scale(w));
                }
                acc.add_scalar(-r)
            })
            .collect())
    }

    /// Affine-form decision enclosures of every pair, in bias order.
    pub fn pair_rafs(&self, region: &RafVec) -> Result<Vec<Raf>, AbstractError> {
        let n = self.model.dim();
        check_region(region, n)?;
        let rho = &self.model.rho;
        if let Some(primal) = &self.primal {
            return primal
                .iter()
                .zip(rho)
                .map(|(w, &r)| Ok(region.dot_enclosed(&w.enclosure)?.add_scalar(-r)?))
                .collect();
        }
        let kernels = self
            .model
            .support_vectors
            .iter()
            .map(|sv| kernel_raf(&self.model.kernel, sv, region, self.mode))
            .collect::<Result<Vec<_>, _>>()?;
        self.terms
            .iter()
            .zip(rho)
            .map(|(t, &r)| {
                let mut acc = Raf::zero(n);
                for &(k, w) in t {
                    acc.add_scaled_assign(w, &kernels[k])?;
                }
                Ok(acc.add_scalar(-r)?)
            })
            .collect()
    }

    /// Verdict of every pair classifier in the chosen domain.
    pub fn pair_verdicts(
        &self,
        b: &IntervalBox,
        region: &RafVec,
        domain: Domain,
    ) -> Result<Vec<Verdict>, AbstractError> {
        let linear = self.primal.is_some();
        match domain {
            Domain::Interval => Ok(self
                .pair_intervals(b)?
                .iter()
                .map(|iv| sign_sharp(iv, 0.0))
                .collect()),
            Domain::Raf => Ok(self
                .pair_rafs(region)?
                .iter()
                .map(|r| sign_sharp(&r.to_interval(), 0.0))
                .collect()),
            Domain::Hybrid if linear => self.pair_verdicts(b, region, Domain::Interval),
            Domain::Hybrid => {
                let ivs = self.pair_intervals(b)?;
                let rafs = self.pair_rafs(region)?;
                Ok(ivs
                    .into_iter()
                    .zip(rafs)
                    .map(|(iv, r)| {
                        HybridValue {
                            iv,
                            raf_iv: r.to_interval(),
                        }
                        .verdict()
                    })
                    .collect())
            }
        }
    }
}
