//! Adversarial regions: clipped L∞ balls and image border frames, as interval
//! boxes and as vectors of affine forms.

use crate::interval::{Interval, IntervalBox};
use crate::raf::{AxisRaf, BilinearMode, Raf, RafError};
use crate::rounding::{add_up, mul_up, prod_err, sub_down, sum_err};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("feature {index} = {value} lies outside the clip range [{lo}, {hi}]")]
    OutOfRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("perturbation size must be finite and nonnegative, got {0}")]
    BadDelta(f64),
    #[error("invalid clip range [{0}, {1}]")]
    BadClip(f64, f64),
    #[error("invalid frame: {0}")]
    BadFrame(String),
    #[error("non-finite feature at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Raf(#[from] RafError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSpec {
    /// `{x' : ‖x' − x‖∞ ≤ delta}`, intersected with `[lo, hi]ⁿ` when clipped.
    Linf {
        delta: f64,
        clip: Option<(f64, f64)>,
    },
    /// Every pixel within `thickness` of the image border may take any value
    /// in `[0, 1]`; images are row-major `height × width`.
    Frame {
        thickness: usize,
        height: usize,
        width: usize,
    },
}

impl PerturbationSpec {
    pub fn region(&self, x: &[f64]) -> Result<IntervalBox, PerturbError> {
        match *self {
            PerturbationSpec::Linf { delta, clip } => linf_region(x, delta, clip),
            PerturbationSpec::Frame {
                thickness,
                height,
                width,
            } => frame_region(x, thickness, height, width),
        }
    }
}

pub fn linf_region(
    x: &[f64],
    delta: f64,
    clip: Option<(f64, f64)>,
) -> Result<IntervalBox, PerturbError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(PerturbError::BadDelta(delta));
    }
    if let Some((lo, hi)) = clip {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(PerturbError::BadClip(lo, hi));
        }
    }
    let mut comps = Vec::with_capacity(x.len());
    for (index, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(PerturbError::NonFinite(index));
        }
        let mut l = sub_down(v, delta);
        let mut h = add_up(v, delta);
        if let Some((lo, hi)) = clip {
            if v < lo || v > hi {
                return Err(PerturbError::OutOfRange {
                    index,
                    value: v,
                    lo,
                    hi,
                });
            }
            l = l.max(lo);
            h = h.min(hi);
        }
        comps.push(Interval::range(l, h));
    }
    Ok(IntervalBox::new(comps))
}

pub fn frame_region(x: &[f64], t: usize, h: usize, w: usize) -> Result<IntervalBox, PerturbError> {
    if h == 0 || w == 0 || h * w != x.len() {
        return Err(PerturbError::BadFrame(format!(
            "{h}x{w} image does not match {} features",
            x.len()
        )));
    }
    if t == 0 || 2 * t > h.min(w) {
        return Err(PerturbError::BadFrame(format!(
            "thickness {t} must lie in [1, {}]",
            h.min(w) / 2
        )));
    }
    let mut comps = Vec::with_capacity(x.len());
    for r in 0..h {
        for c in 0..w {
            let v = x[r * w + c];
            if !v.is_finite() {
                return Err(PerturbError::NonFinite(r * w + c));
            }
            let interior = r >= t && r < h - t && c >= t && c < w - t;
            comps.push(if interior {
                Interval::point(v)
            } else {
                Interval::range(0.0, 1.0)
            });
        }
    }
    Ok(IntervalBox::new(comps))
}

/// A vector of `n` affine forms of length `n`.
///
/// Regions built from boxes have one noise symbol per component; they are
/// stored in that compact shape, and evaluation code takes linear-time paths
/// for it.
#[derive(Clone, Debug, PartialEq)]
pub struct RafVec {
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Axis(Vec<AxisRaf>),
    Dense(Vec<Raf>),
}

impl RafVec {
    pub fn from_rafs(components: Vec<Raf>) -> Result<Self, RafError> {
        let n = components.len();
        if let Some(r) = components.iter().find(|r| r.len() != n) {
            return Err(RafError::LengthMismatch {
                left: n,
                right: r.len(),
            });
        }
        Ok(Self {
            repr: Repr::Dense(components),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Axis(v) => v.len(),
            Repr::Dense(v) => v.len(),
        }
    }

    pub fn is_axis_aligned(&self) -> bool {
        matches!(self.repr, Repr::Axis(_))
    }

    pub fn axis_components(&self) -> Option<&[AxisRaf]> {
        match &self.repr {
            Repr::Axis(v) => Some(v),
            Repr::Dense(_) => None,
        }
    }

    pub fn component(&self, j: usize) -> Raf {
        match &self.repr {
            Repr::Axis(v) => v[j].to_raf(v.len()),
            Repr::Dense(v) => v[j].clone(),
        }
    }

    /// Interval concretization of component `j`.
    pub fn component_interval(&self, j: usize) -> Interval {
        match &self.repr {
            Repr::Axis(v) => v[j].to_interval(),
            Repr::Dense(v) => v[j].to_interval(),
        }
    }

    pub fn to_rafs(&self) -> Vec<Raf> {
        (0..self.dim()).map(|j| self.component(j)).collect()
    }

    pub fn to_box(&self) -> IntervalBox {
        IntervalBox::new(
            (0..self.dim())
                .map(|j| self.component_interval(j))
                .collect(),
        )
    }

    /// `Σⱼ zⱼ·xⱼ` in index order.
    pub fn dot(&self, z: &[f64]) -> Result<Raf, RafError> {
        let n = self.dim();
        if z.len() != n {
            return Err(RafError::LengthMismatch {
                left: n,
                right: z.len(),
            });
        }
        match &self.repr {
            Repr::Axis(v) => {
                let mut center = 0.0;
                let mut coeffs = vec![0.0; n];
                let mut slack = 0.0;
                for (a, &zj) in v.iter().zip(z) {
                    if zj == 0.0 {
                        continue;
                    }
                    let (p, e1) = prod_err(zj, a.center);
                    let (s, e2) = sum_err(center, p);
                    center = s;
                    let (k, e3) = prod_err(zj, a.coeff);
                    coeffs[a.index] = k;
                    slack = add_up(slack, add_up(add_up(e1, e2), e3));
                    if a.radius != 0.0 {
                        slack = add_up(slack, mul_up(zj.abs(), a.radius));
                    }
                }
                Raf::from_parts(center, coeffs, slack)
                    .map_err(|_| RafError::Overflow("dot product"))
            }
            Repr::Dense(v) => {
                let mut acc = Raf::zero(n);
                for (x, &zj) in v.iter().zip(z) {
                    if zj != 0.0 {
                        acc.add_scaled_assign(zj, x)?;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `Σⱼ wⱼ·xⱼ` for weights known only up to intervals: the form is built
    /// from the weight midpoints and the leftover uncertainty goes into the
    /// noise radius.
    pub fn dot_enclosed(&self, w: &[Interval]) -> Result<Raf, RafError> {
        let n = self.dim();
        if w.len() != n {
            return Err(RafError::LengthMismatch {
                left: n,
                right: w.len(),
            });
        }
        let mut mids = Vec::with_capacity(n);
        let mut extra = 0.0;
        for (j, wj) in w.iter().enumerate() {
            let (m, r) = wj.mid_rad().ok_or(RafError::Unbounded)?;
            mids.push(m);
            if r != 0.0 {
                let (lo, hi) = self
                    .component_interval(j)
                    .bounds()
                    .ok_or(RafError::Unbounded)?;
                extra = add_up(extra, mul_up(r, lo.abs().max(hi.abs())));
            }
        }
        self.dot(&mids)?.widen(extra)
    }

    /// `Σⱼ (xⱼ − yⱼ)²` in index order.
    pub fn squared_distance(&self, y: &[f64], mode: BilinearMode) -> Result<Raf, RafError> {
        let n = self.dim();
        if y.len() != n {
            return Err(RafError::LengthMismatch {
                left: n,
                right: y.len(),
            });
        }
        let mut acc = Raf::zero(n);
        match &self.repr {
            Repr::Axis(v) => {
                for (a, &yj) in v.iter().zip(y) {
                    let sq = a.add_scalar(-yj)?.square(mode)?;
                    acc.add_axis_assign(&sq)?;
                }
            }
            Repr::Dense(v) => {
                for (x, &yj) in v.iter().zip(y) {
                    let d = x.add_scalar(-yj)?;
                    acc.add_scaled_assign(1.0, &d.mul(&d, mode)?)?;
                }
            }
        }
        Ok(acc)
    }
}

/// Converts a bounded box to affine forms, component `j` bound to `εⱼ`.
pub fn region_to_raf(b: &IntervalBox) -> Result<RafVec, RafError> {
    let mut comps = Vec::with_capacity(b.dim());
    for (j, iv) in b.components().iter().enumerate() {
        comps.push(AxisRaf::from_interval(iv, j)?);
    }
    Ok(RafVec {
        repr: Repr::Axis(comps),
    })
}
