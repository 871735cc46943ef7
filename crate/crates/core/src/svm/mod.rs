//! Concrete SVM classifiers: kernels, one-versus-one models and prediction.

mod format;

pub use format::{parse_model, ParseError};

use std::fmt;

use crate::interval::Interval;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation requires a linear kernel")]
    NotLinear,
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("class pair ({0}, {1}) does not exist")]
    NoSuchPair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `(γ·x·y + c)ᵈ`
    Polynomial {
        degree: u32,
        gamma: f64,
        coef0: f64,
    },
    /// `exp(−γ‖x − y‖²)`
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => {
                if degree == 0 {
                    Err(SvmError::Invalid(
                        "polynomial degree must be at least 1".into(),
                    ))
                } else if !gamma.is_finite() || !coef0.is_finite() {
                    Err(SvmError::Invalid("non-finite kernel parameter".into()))
                } else {
                    Ok(())
                }
            }
            Kernel::Rbf { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(SvmError::Invalid("rbf gamma must be positive".into()))
                }
            }
        }
    }

    /// Kernel value; sums run in feature-index order.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => {
                let t = gamma * dot(x, y) + coef0;
                let mut r = t;
                for _ in 1..degree {
                    r *= t;
                }
                r
            }
            Kernel::Rbf { gamma } => {
                let mut s = 0.0;
                for (a, b) in x.iter().zip(y) {
                    let d = a - b;
                    s += d * d;
                }
                (-gamma * s).exp()
            }
        }
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        s += a * b;
    }
    s
}

/// Kernel sign convention: `sign(v) = +1` iff `v >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvmType {
    CSvc,
    NuSvc,
}

impl fmt::Display for SvmType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvmType::CSvc => "c_svc",
            SvmType::NuSvc => "nu_svc",
        })
    }
}

/// One-versus-one multiclass SVM in the usual dual layout.
///
/// Support vectors are grouped by class (in `labels` order, `nr_sv[i]` of
/// them for class `i`). For the pair `(i, j)` with `i < j` the coefficient of
/// a class-`i` vector is in row `j − 1` and that of a class-`j` vector in row
/// `i`. The pair decision is `Σ coef·k(sv, x) − rho`, and a nonnegative value
/// votes for class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub svm_type: SvmType,
    pub kernel: Kernel,
    pub labels: Vec<i64>,
    pub nr_sv: Vec<usize>,
    pub support_vectors: Vec<Vec<f64>>,
    /// `(m − 1) × N`
    pub dual_coeffs: Vec<Vec<f64>>,
    /// One bias per pair, pairs enumerated `(0,1), (0,2), …, (1,2), …`.
    pub rho: Vec<f64>,
    pub prob_a: Option<Vec<f64>>,
    pub prob_b: Option<Vec<f64>>,
    dim: usize,
}

/// The binary classifier of one class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProblem {
    pub pair: (usize, usize),
    /// Support vectors with nonzero weight, in model order.
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed weights `αy`.
    pub weights: Vec<f64>,
    /// Positions of the vectors in the model.
    pub sv_index: Vec<usize>,
    pub bias: f64,
}

impl BinaryProblem {
    /// Standalone binary classifier `Σ wₗ·k(svₗ, x) − bias`. Zero weights are
    /// dropped.
    pub fn new(
        support_vectors: Vec<Vec<f64>>,
        weights: Vec<f64>,
        bias: f64,
    ) -> Result<Self, SvmError> {
        if support_vectors.len() != weights.len() {
            return Err(SvmError::Invalid(
                "one weight per support vector is required".into(),
            ));
        }
        if let Some(first) = support_vectors.first() {
            if let Some(v) = support_vectors.iter().find(|v| v.len() != first.len()) {
                return Err(SvmError::DimensionMismatch {
                    expected: first.len(),
                    found: v.len(),
                });
            }
        }
        let mut svs = Vec::new();
        let mut ws = Vec::new();
        let mut idx = Vec::new();
        for (k, (sv, w)) in support_vectors.into_iter().zip(weights).enumerate() {
            if w != 0.0 {
                svs.push(sv);
                ws.push(w);
                idx.push(k);
            }
        }
        Ok(Self {
            pair: (0, 1),
            support_vectors: svs,
            weights: ws,
            sv_index: idx,
            bias,
        })
    }

    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision_value(&self, kernel: &Kernel, x: &[f64]) -> Result<f64, SvmError> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(SvmError::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
        }
        let mut s = 0.0;
        for (sv, w) in self.support_vectors.iter().zip(&self.weights) {
            s += w * kernel.eval_unchecked(sv, x);
        }
        Ok(s - self.bias)
    }

    /// Hyperplane normal `w = Σ αy·sv` of a linear classifier; returns
    /// `(w, bias)` so that the decision is `w·x − bias`.
    pub fn primal_weights(&self, kernel: &Kernel, dim: usize) -> Result<(Vec<f64>, f64), SvmError> {
        if *kernel != Kernel::Linear {
            return Err(SvmError::NotLinear);
        }
        let mut w = vec![0.0; dim];
        for (sv, &a) in self.support_vectors.iter().zip(&self.weights) {
            if sv.len() != dim {
                return Err(SvmError::DimensionMismatch {
                    expected: dim,
                    found: sv.len(),
                });
            }
            for (wj, &s) in w.iter_mut().zip(sv) {
                *wj += a * s;
            }
        }
        Ok((w, self.bias))
    }

    /// Outward-rounded enclosure of the real primal weights, of which
    /// [`primal_weights`](Self::primal_weights) holds the nearest-rounded sums.
    pub fn primal_enclosure(&self, kernel: &Kernel, dim: usize) -> Result<Vec<Interval>, SvmError> {
        if *kernel != Kernel::Linear {
            return Err(SvmError::NotLinear);
        }
        let mut w = vec![Interval::point(0.0); dim];
        for (sv, &a) in self.support_vectors.iter().zip(&self.weights) {
            if sv.len() != dim {
                return Err(SvmError::DimensionMismatch {
                    expected: dim,
                    found: sv.len(),
                });
            }
            for (wj, &s) in w.iter_mut().zip(sv) {
                if s != 0.0 {
                    *wj = wj.add(&Interval::point(s).scale(a));
                }
            }
        }
        Ok(w)
    }
}

/// Result of concrete one-versus-one voting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvoPrediction {
    /// Class index of the winner: the first of the tied classes.
    pub winner: usize,
    /// All class indices with the maximal vote count.
    pub tied: Vec<usize>,
    pub votes: Vec<usize>,
}

impl SvmModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        svm_type: SvmType,
        kernel: Kernel,
        labels: Vec<i64>,
        nr_sv: Vec<usize>,
        support_vectors: Vec<Vec<f64>>,
        dual_coeffs: Vec<Vec<f64>>,
        rho: Vec<f64>,
    ) -> Result<Self, SvmError> {
        let dim = support_vectors.first().map_or(0, Vec::len);
        let m = Self {
            svm_type,
            kernel,
            labels,
            nr_sv,
            support_vectors,
            dual_coeffs,
            rho,
            prob_a: None,
            prob_b: None,
            dim,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        self.kernel.validate()?;
        let m = self.labels.len();
        if m < 2 {
            return Err(SvmError::Invalid(
                "at least two classes are required".into(),
            ));
        }
        let mut seen = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != m {
            return Err(SvmError::Invalid("duplicate class label".into()));
        }
        if self.nr_sv.len() != m {
            return Err(SvmError::Invalid(format!(
                "{} support vector counts for {m} classes",
                self.nr_sv.len()
            )));
        }
        let n_sv: usize = self.nr_sv.iter().sum();
        if n_sv != self.support_vectors.len() {
            return Err(SvmError::Invalid(format!(
                "class counts sum to {n_sv} but there are {} support vectors",
                self.support_vectors.len()
            )));
        }
        if self.rho.len() != m * (m - 1) / 2 {
            return Err(SvmError::Invalid(format!(
                "{} biases for {} class pairs",
                self.rho.len(),
                m * (m - 1) / 2
            )));
        }
        if self.dual_coeffs.len() != m - 1 || self.dual_coeffs.iter().any(|r| r.len() != n_sv) {
            return Err(SvmError::Invalid(
                "dual coefficient matrix must be (m-1) x N".into(),
            ));
        }
        if let Some(v) = self.support_vectors.iter().find(|v| v.len() != self.dim) {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let finite = self.rho.iter().all(|v| v.is_finite())
            && self.dual_coeffs.iter().flatten().all(|v| v.is_finite())
            && self.support_vectors.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(SvmError::Invalid("non-finite number in model".into()));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pads every support vector with zeros to dimension `n`.
    pub fn set_dim(&mut self, n: usize) -> Result<(), SvmError> {
        if n < self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        for v in &mut self.support_vectors {
            v.resize(n, 0.0);
        }
        self.dim = n;
        Ok(())
    }

    /// Class pairs in bias order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.num_classes();
        (0..m).flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
    }

    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let m = self.num_classes();
        debug_assert!(i < j && j < m);
        i * (2 * m - i - 1) / 2 + (j - i - 1)
    }

    /// First support-vector position of each class, plus the total at the end.
    pub fn class_starts(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.nr_sv.len() + 1);
        let mut acc = 0;
        s.push(0);
        for &c in &self.nr_sv {
            acc += c;
            s.push(acc);
        }
        s
    }

    /// `(sv position, weight)` terms of pair `(i, j)` in model order, zero
    /// weights included.
    pub fn pair_terms(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        let starts = self.class_starts();
        let mut t = Vec::with_capacity(self.nr_sv[i] + self.nr_sv[j]);
        for k in starts[i]..starts[i + 1] {
            t.push((k, self.dual_coeffs[j - 1][k]));
        }
        for k in starts[j]..starts[j + 1] {
            t.push((k, self.dual_coeffs[i][k]));
        }
        t
    }

    pub fn binary_problem(&self, i: usize, j: usize) -> Result<BinaryProblem, SvmError> {
        if !(i < j && j < self.num_classes()) {
            return Err(SvmError::NoSuchPair(i, j));
        }
        let mut svs = Vec::new();
        let mut ws = Vec::new();
        let mut idx = Vec::new();
        for (k, w) in self.pair_terms(i, j) {
            if w != 0.0 {
                svs.push(self.support_vectors[k].clone());
                ws.push(w);
                idx.push(k);
            }
        }
        Ok(BinaryProblem {
            pair: (i, j),
            support_vectors: svs,
            weights: ws,
            sv_index: idx,
            bias: self.rho[self.pair_index(i, j)],
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SvmError> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(SvmError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            })
        }
    }

    /// Decision values of all pairs, in bias order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        self.check_dim(x)?;
        let kv: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| self.kernel.eval_unchecked(sv, x))
            .collect();
        Ok(self
            .pairs()
            .map(|(i, j)| {
                let mut s = 0.0;
                for (k, w) in self.pair_terms(i, j) {
                    if w != 0.0 {
                        s += w * kv[k];
                    }
                }
                s - self.rho[self.pair_index(i, j)]
            })
            .collect())
    }

    pub fn predict_ovo(&self, x: &[f64]) -> Result<OvoPrediction, SvmError> {
        let dec = self.decision_values(x)?;
        let mut votes = vec![0usize; self.num_classes()];
        for ((i, j), d) in self.pairs().zip(dec) {
            match Sign::of(d) {
                Sign::Pos => votes[i] += 1,
                Sign::Neg => votes[j] += 1,
            }
        }
        Ok(winner_of(votes))
    }

    /// Label of the concrete winner.
    pub fn predict(&self, x: &[f64]) -> Result<i64, SvmError> {
        Ok(self.labels[self.predict_ovo(x)?.winner])
    }

    pub fn label_index(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

pub(crate) fn winner_of(votes: Vec<usize>) -> OvoPrediction {
    let best = votes.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..votes.len()).filter(|&c| votes[c] == best).collect();
    OvoPrediction {
        winner: tied[0],
        tied,
        votes,
    }
}
