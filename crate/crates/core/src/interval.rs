//! The interval domain: closed real intervals with possibly infinite endpoints
//! and a distinct empty element.
//!
//! All endpoint arithmetic is rounded outward, so on floating-point inputs
//! every operation returns an enclosure of the exact real result. Whenever the
//! exact endpoints are representable, no widening happens at all.

use std::fmt;

use crate::rounding::{
    add_down, add_up, exp_down, exp_up, mul_down, mul_up, powi_down_nonneg, powi_up_nonneg,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// A closed interval `[lo, hi]` or the empty interval ⊥.
///
/// `lo` may be `−∞` and `hi` may be `+∞`; `lo <= hi` always holds and NaN is
/// never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Interval {
    Empty,
    Range { lo: f64, hi: f64 },
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(IntervalError::InvalidBounds { lo, hi });
        }
        Ok(Interval::Range { lo, hi })
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        assert!(x.is_finite(), "point interval needs a finite value");
        Interval::Range { lo: x, hi: x }
    }

    pub fn entire() -> Self {
        Interval::Range {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    // Internal constructor for results that are known to be well formed.
    #[inline]
    pub(crate) fn range(lo: f64, hi: f64) -> Self {
        debug_assert!(
            !lo.is_nan() && !hi.is_nan() && lo <= hi,
            "bad range [{lo}, {hi}]"
        );
        Interval::Range { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Interval::Empty)
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Interval::Empty => None,
            Interval::Range { lo, hi } => Some((lo, hi)),
        }
    }

    pub fn lo(&self) -> Option<f64> {
        self.bounds().map(|b| b.0)
    }

    pub fn hi(&self) -> Option<f64> {
        self.bounds().map(|b| b.1)
    }

    pub fn is_bounded(&self) -> bool {
        self.bounds()
            .is_some_and(|(l, h)| l.is_finite() && h.is_finite())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.bounds().is_some_and(|(l, h)| l <= x && x <= h)
    }

    /// `self ⊆ other`
    pub fn is_subset(&self, other: &Interval) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((l1, h1)), Some((l2, h2))) => l2 <= l1 && h1 <= h2,
        }
    }

    pub fn width(&self) -> Option<f64> {
        self.bounds().map(|(l, h)| crate::rounding::sub_up(h, l))
    }

    pub fn add(&self, other: &Interval) -> Interval {
        match (self.bounds(), other.bounds()) {
            (Some((l1, h1)), Some((l2, h2))) => Interval::range(add_down(l1, l2), add_up(h1, h2)),
            _ => Interval::Empty,
        }
    }

    pub fn add_scalar(&self, c: f64) -> Interval {
        match self.bounds() {
            Some((l, h)) => Interval::range(add_down(l, c), add_up(h, c)),
            None => Interval::Empty,
        }
    }

    pub fn neg(&self) -> Interval {
        match self.bounds() {
            Some((l, h)) => Interval::range(-h, -l),
            None => Interval::Empty,
        }
    }

    /// Scalar multiplication `z·[l,u]`; `0·(±∞) = 0`.
    pub fn scale(&self, z: f64) -> Interval {
        debug_assert!(z.is_finite());
        let Some((l, h)) = self.bounds() else {
            return Interval::Empty;
        };
        if z == 0.0 {
            return Interval::range(0.0, 0.0);
        }
        if z > 0.0 {
            Interval::range(mul_down(z, l), mul_up(z, h))
        } else {
            Interval::range(mul_down(z, h), mul_up(z, l))
        }
    }

    /// Product of independent operands (four corner products).
    pub fn mul(&self, other: &Interval) -> Interval {
        let (Some((l1, h1)), Some((l2, h2))) = (self.bounds(), other.bounds()) else {
            return Interval::Empty;
        };
        let corners = [(l1, l2), (l1, h2), (h1, l2), (h1, h2)];
        let lo = corners
            .iter()
            .map(|&(a, b)| zero_absorbing(a, b, mul_down))
            .fold(f64::INFINITY, f64::min);
        let hi = corners
            .iter()
            .map(|&(a, b)| zero_absorbing(a, b, mul_up))
            .fold(f64::NEG_INFINITY, f64::max);
        Interval::range(lo, hi)
    }

    /// Dependent power `{x^d | x ∈ self}`, tighter than iterated `mul` for
    /// even `d` on intervals straddling zero.
    pub fn pow(&self, d: u32) -> Interval {
        assert!(d >= 1, "power must be positive");
        let Some((l, h)) = self.bounds() else {
            return Interval::Empty;
        };
        if d == 1 {
            return *self;
        }
        let down = |x: f64| signed_pow(x, d, true);
        let up = |x: f64| signed_pow(x, d, false);
        if d % 2 == 1 || l >= 0.0 {
            Interval::range(down(l), up(h))
        } else if h <= 0.0 {
            Interval::range(down(h), up(l))
        } else {
            let m = if -l > h { -l } else { h };
            Interval::range(0.0, up(m))
        }
    }

    /// Image under a continuous monotone function.
    pub fn monotone(&self, f: MonotoneFn) -> Interval {
        let Some((l, h)) = self.bounds() else {
            return Interval::Empty;
        };
        match f {
            MonotoneFn::Exp => Interval::range(exp_down(l), exp_up(h)),
        }
    }

    pub fn exp(&self) -> Interval {
        self.monotone(MonotoneFn::Exp)
    }

    pub fn meet(&self, other: &Interval) -> Interval {
        let (Some((l1, h1)), Some((l2, h2))) = (self.bounds(), other.bounds()) else {
            return Interval::Empty;
        };
        let lo = l1.max(l2);
        let hi = h1.min(h2);
        if lo > hi {
            Interval::Empty
        } else {
            Interval::range(lo, hi)
        }
    }

    /// Midpoint and an upward-rounded radius with `[mid − rad, mid + rad] ⊇ self`.
    pub fn mid_rad(&self) -> Option<(f64, f64)> {
        let (l, h) = self.bounds()?;
        if !(l.is_finite() && h.is_finite()) {
            return None;
        }
        let mid = l * 0.5 + h * 0.5;
        let rad = crate::rounding::sub_up(h, mid).max(crate::rounding::sub_up(mid, l));
        Some((mid, rad))
    }
}

/// Monotone scalar functions with a built-in interval transformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneFn {
    Exp,
}

fn zero_absorbing(a: f64, b: f64, f: fn(f64, f64) -> f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        f(a, b)
    }
}

// x^d rounded down (`down == true`) or up, any sign of x.
fn signed_pow(x: f64, d: u32, down: bool) -> f64 {
    if x >= 0.0 {
        if down {
            powi_down_nonneg(x, d)
        } else {
            powi_up_nonneg(x, d)
        }
    } else {
        let m = -x;
        if d % 2 == 0 {
            if down {
                powi_down_nonneg(m, d)
            } else {
                powi_up_nonneg(m, d)
            }
        } else if down {
            -powi_up_nonneg(m, d)
        } else {
            -powi_down_nonneg(m, d)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bounds() {
            None => write!(f, "⊥"),
            Some((l, h)) => write!(f, "[{l}, {h}]"),
        }
    }
}

/// A vector of intervals: the nonrelational abstraction of a set of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox {
    components: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(components: Vec<Interval>) -> Self {
        Self { components }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self, IntervalError> {
        assert_eq!(lo.len(), hi.len());
        lo.iter()
            .zip(hi)
            .map(|(&l, &h)| Interval::new(l, h))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn point(x: &[f64]) -> Self {
        Self::new(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn get(&self, j: usize) -> &Interval {
        &self.components[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.components.iter().zip(x).all(|(c, &v)| c.contains(v))
    }

    pub fn has_empty(&self) -> bool {
        self.components.iter().any(Interval::is_empty)
    }
}
