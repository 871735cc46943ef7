//! Reduced affine forms.
//!
//! A form of length `n` is `a₀ + Σⱼ aⱼεⱼ + a_r·ε_a` where each `εⱼ ∈ [−1,1]` is
//! permanently bound to input feature `j` and `ε_a` absorbs every
//! approximation: nonlinear remainders as well as floating-point rounding.
//! Coefficients are stored as round-to-nearest values; the exact rounding
//! error of each one (from `two_sum` / FMA residuals) is added to `a_r` with
//! upward rounding, so the concretization always encloses the real result.

mod bilinear;

pub use bilinear::{range_of_generators, BilinearMode, BilinearRange, VERTEX_ENUMERATION_LIMIT};

use crate::interval::Interval;
use crate::rounding::{
    add_down, add_up, exp_down, exp_up, ln_down, mul_down, mul_up, prod_err, sub_down, sub_up,
    sum_err,
};
use thiserror::Error;

/// Width under which `exp` falls back to a constant enclosure.
pub const EXP_DEGENERACY_WIDTH: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RafError {
    #[error("affine forms of different lengths ({left} and {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("noise index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot build an affine form from an unbounded or empty interval")]
    Unbounded,
    #[error("overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid affine form component")]
    Invalid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raf {
    center: f64,
    coeffs: Vec<f64>,
    radius: f64,
}

// Running upward-rounded sum of nonnegative error terms.
#[derive(Clone, Copy, Default)]
struct Slack(f64);

impl Slack {
    #[inline]
    fn push(&mut self, e: f64) {
        if e != 0.0 {
            self.0 = add_up(self.0, e);
        }
    }
}

impl Raf {
    pub fn constant(c: f64, n: usize) -> Self {
        Self {
            center: c,
            coeffs: vec![0.0; n],
            radius: 0.0,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(0.0, n)
    }

    pub fn from_parts(center: f64, coeffs: Vec<f64>, radius: f64) -> Result<Self, RafError> {
        if !(radius >= 0.0) {
            return Err(RafError::Invalid);
        }
        Self {
            center,
            coeffs,
            radius,
        }
        .checked("construction")
        .map_err(|_| RafError::Invalid)
    }

    /// `(l+u)/2 + (u−l)/2·ε_j` for the interval `[l, u]`; `j` is 0-based.
    pub fn from_interval(iv: &Interval, j: usize, n: usize) -> Result<Self, RafError> {
        if j >= n {
            return Err(RafError::IndexOutOfRange { index: j, len: n });
        }
        let (lo, hi) = match iv.bounds() {
            Some((l, h)) if l.is_finite() && h.is_finite() => (l, h),
            _ => return Err(RafError::Unbounded),
        };
        let (center, coeff) = interval_parts(lo, hi);
        let mut coeffs = vec![0.0; n];
        coeffs[j] = coeff;
        Self {
            center,
            coeffs,
            radius: 0.0,
        }
        .checked("interval conversion")
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `Σ|aⱼ| + a_r`, rounded up.
    pub fn total_radius(&self) -> f64 {
        let mut r = self.radius;
        for &c in &self.coeffs {
            r = add_up(r, c.abs());
        }
        r
    }

    /// Interval concretization `[a₀ − rad, a₀ + rad]`.
    pub fn to_interval(&self) -> Interval {
        let rad = self.total_radius();
        Interval::range(sub_down(self.center, rad), add_up(self.center, rad))
    }

    /// The same form with `extra ≥ 0` added to the noise radius.
    pub fn widen(&self, extra: f64) -> Result<Raf, RafError> {
        if !(extra >= 0.0) {
            return Err(RafError::Invalid);
        }
        Raf {
            radius: add_up(self.radius, extra),
            ..self.clone()
        }
        .checked("widening")
    }

    fn checked(self, what: &'static str) -> Result<Self, RafError> {
        if self.center.is_finite()
            && self.radius.is_finite()
            && self.coeffs.iter().all(|c| c.is_finite())
        {
            Ok(self)
        } else {
            Err(RafError::Overflow(what))
        }
    }

    fn same_len(&self, other: &Raf) -> Result<(), RafError> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(RafError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            })
        }
    }

    pub fn add(&self, other: &Raf) -> Result<Raf, RafError> {
        let mut r = self.clone();
        r.add_scaled_assign(1.0, other)?;
        Ok(r)
    }

    pub fn sub(&self, other: &Raf) -> Result<Raf, RafError> {
        let mut r = self.clone();
        r.add_scaled_assign(-1.0, other)?;
        Ok(r)
    }

    pub fn neg(&self) -> Raf {
        Raf {
            center: -self.center,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            radius: self.radius,
        }
    }

    /// `z·a`; the noise radius scales by `|z|`.
    pub fn scale(&self, z: f64) -> Result<Raf, RafError> {
        let mut slack = Slack::default();
        let (center, e) = prod_err(z, self.center);
        slack.push(e);
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let (p, e) = prod_err(z, c);
                slack.push(e);
                p
            })
            .collect();
        let radius = add_up(mul_up(z.abs(), self.radius), slack.0);
        Raf {
            center,
            coeffs,
            radius,
        }
        .checked("scaling")
    }

    pub fn add_scalar(&self, c: f64) -> Result<Raf, RafError> {
        let (center, e) = sum_err(self.center, c);
        Raf {
            center,
            coeffs: self.coeffs.clone(),
            radius: add_up(self.radius, e),
        }
        .checked("addition")
    }

    /// In-place `self ← self + z·other`.
    pub fn add_scaled_assign(&mut self, z: f64, other: &Raf) -> Result<(), RafError> {
        self.same_len(other)?;
        let mut slack = Slack::default();
        self.center = fused_term(self.center, z, other.center, &mut slack);
        for (c, &o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if o != 0.0 {
                *c = fused_term(*c, z, o, &mut slack);
            }
        }
        self.radius = add_up(add_up(self.radius, mul_up(z.abs(), other.radius)), slack.0);
        if self.center.is_finite()
            && self.radius.is_finite()
            && self.coeffs.iter().all(|c| c.is_finite())
        {
            Ok(())
        } else {
            Err(RafError::Overflow("addition"))
        }
    }

    /// Adds the one-symbol form `center + coeff·ε_index + radius·ε_a` in place.
    pub fn add_axis_assign(&mut self, t: &AxisRaf) -> Result<(), RafError> {
        if t.index >= self.len() {
            return Err(RafError::IndexOutOfRange {
                index: t.index,
                len: self.len(),
            });
        }
        let mut slack = Slack::default();
        let (c, e) = sum_err(self.center, t.center);
        slack.push(e);
        self.center = c;
        let (k, e) = sum_err(self.coeffs[t.index], t.coeff);
        slack.push(e);
        self.coeffs[t.index] = k;
        self.radius = add_up(add_up(self.radius, t.radius), slack.0);
        if self.center.is_finite() && k.is_finite() && self.radius.is_finite() {
            Ok(())
        } else {
            Err(RafError::Overflow("addition"))
        }
    }

    /// Multiplication: linear part `a₀b + b₀a`, the bilinear remainder folded
    /// into the center (its midpoint) and the noise radius (its half-width).
    pub fn mul(&self, other: &Raf, mode: BilinearMode) -> Result<Raf, RafError> {
        self.same_len(other)?;
        let range = bilinear_range(self, other, mode)?;
        let (a0, b0) = (self.center, other.center);
        let mut slack = Slack::default();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&aj, &bj)| cross_coeff(a0, aj, b0, bj, &mut slack))
            .collect();
        let (center, radius) =
            product_center_radius(a0, self.radius, b0, other.radius, range, slack);
        Raf {
            center,
            coeffs,
            radius,
        }
        .checked("multiplication")
    }

    /// `aᵈ` by left-to-right repeated multiplication.
    pub fn pow(&self, d: u32, mode: BilinearMode) -> Result<Raf, RafError> {
        assert!(d >= 1, "power must be positive");
        let mut r = self.clone();
        for _ in 1..d {
            r = r.mul(self, mode)?;
        }
        Ok(r)
    }

    /// Exponential via the best linear (Chebyshev) approximation of `eˣ` on
    /// the concretization `[l, u]`.
    pub fn exp(&self) -> Result<Raf, RafError> {
        let (l, u) = self.to_interval().bounds().expect("nonempty");
        if !(l.is_finite() && u.is_finite()) {
            return Err(RafError::Overflow("exponential"));
        }
        if sub_up(u, l) < EXP_DEGENERACY_WIDTH {
            let (lo, hi) = (exp_down(l), exp_up(u));
            let mid = 0.5 * lo + 0.5 * hi;
            let rad = sub_up(hi, mid).max(sub_up(mid, lo));
            return Raf {
                center: mid,
                coeffs: vec![0.0; self.len()],
                radius: rad,
            }
            .checked("exponential");
        }
        let (el, eu) = (l.exp(), u.exp());
        if !eu.is_finite() {
            return Err(RafError::Overflow("exponential"));
        }
        let alpha = (eu - el) / (u - l);
        // h(x) = eˣ − αx is convex on [l, u]: max at an endpoint, min bounded
        // below by the tangent at x̃ = ln α (clamped into the interval).
        let h_hi = sub_up(exp_up(l), mul_down(alpha, l)).max(sub_up(exp_up(u), mul_down(alpha, u)));
        let xt = if alpha > 0.0 {
            ln_down(alpha).clamp(l, u)
        } else {
            l
        };
        let h_xt = sub_down(exp_down(xt), mul_up(alpha, xt));
        let slope = Interval::range(sub_down(exp_down(xt), alpha), sub_up(exp_up(xt), alpha));
        let offset = Interval::range(sub_down(l, xt), sub_up(u, xt));
        let h_lo = add_down(h_xt, slope.mul(&offset).lo().unwrap()).min(h_hi);
        let zeta = 0.5 * h_lo + 0.5 * h_hi;
        let zeta_rad = sub_up(h_hi, zeta).max(sub_up(zeta, h_lo));
        let mut r = self.scale(alpha)?;
        let (c, e) = sum_err(r.center, zeta);
        r.center = c;
        r.radius = add_up(add_up(r.radius, zeta_rad), e);
        r.checked("exponential")
    }
}

/// Outward-rounded range of the bilinear remainder of `a·b`, with the two
/// noise radii treated as independent symbols.
pub fn bilinear_range(a: &Raf, b: &Raf, mode: BilinearMode) -> Result<BilinearRange, RafError> {
    a.same_len(b)?;
    let mut gens: Vec<(f64, f64)> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .filter(|(x, y)| **x != 0.0 || **y != 0.0)
        .map(|(&x, &y)| (x, y))
        .collect();
    push_radius_generators(&mut gens, a.radius, b.radius);
    Ok(range_of_generators(&mut gens, mode))
}

fn push_radius_generators(gens: &mut Vec<(f64, f64)>, ar: f64, br: f64) {
    if ar != 0.0 {
        gens.push((ar, 0.0));
    }
    if br != 0.0 {
        gens.push((0.0, br));
    }
}

#[inline]
fn fused_term(acc: f64, z: f64, x: f64, slack: &mut Slack) -> f64 {
    let (p, e1) = prod_err(z, x);
    let (s, e2) = sum_err(acc, p);
    slack.push(e1);
    slack.push(e2);
    s
}

#[inline]
fn cross_coeff(a0: f64, aj: f64, b0: f64, bj: f64, slack: &mut Slack) -> f64 {
    if aj == 0.0 && bj == 0.0 {
        return 0.0;
    }
    let (p1, e1) = prod_err(a0, bj);
    let (p2, e2) = prod_err(b0, aj);
    let (s, e3) = sum_err(p1, p2);
    slack.push(e1);
    slack.push(e2);
    slack.push(e3);
    s
}

fn product_center_radius(
    a0: f64,
    ar: f64,
    b0: f64,
    br: f64,
    range: BilinearRange,
    mut slack: Slack,
) -> (f64, f64) {
    let (p, e) = prod_err(a0, b0);
    slack.push(e);
    let mid = 0.5 * range.rmin + 0.5 * range.rmax;
    let half = sub_up(range.rmax, mid).max(sub_up(mid, range.rmin));
    let (center, e) = sum_err(p, mid);
    slack.push(e);
    let radius = add_up(
        add_up(add_up(mul_up(a0.abs(), br), mul_up(b0.abs(), ar)), half),
        slack.0,
    );
    (center, radius)
}

// Center and coefficient of the form for [lo, hi]; the half-width is rounded
// up far enough that `center ± coeff` covers both endpoints.
fn interval_parts(lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * lo + 0.5 * hi;
    let coeff = sub_up(hi, center).max(sub_up(center, lo));
    (center, coeff)
}

/// A form with at most one nonzero linear coefficient. Perturbation regions
/// consist of such forms, and their products stay in this shape, which lets
/// kernels over `n` features run in `O(n)` instead of `O(n²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRaf {
    pub index: usize,
    pub center: f64,
    pub coeff: f64,
    pub radius: f64,
}

impl AxisRaf {
    /// `(l+u)/2 + (u−l)/2·ε_index`.
    pub fn from_interval(iv: &Interval, index: usize) -> Result<AxisRaf, RafError> {
        let (lo, hi) = match iv.bounds() {
            Some((l, h)) if l.is_finite() && h.is_finite() => (l, h),
            _ => return Err(RafError::Unbounded),
        };
        let (center, coeff) = interval_parts(lo, hi);
        Ok(AxisRaf {
            index,
            center,
            coeff,
            radius: 0.0,
        })
    }

    pub fn from_raf(r: &Raf) -> Option<AxisRaf> {
        let mut nz = r.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0);
        let (index, coeff) = match nz.next() {
            Some((i, &c)) => (i, c),
            None => (0, 0.0),
        };
        if nz.next().is_some() {
            return None;
        }
        Some(AxisRaf {
            index,
            center: r.center,
            coeff,
            radius: r.radius,
        })
    }

    pub fn to_raf(&self, n: usize) -> Raf {
        let mut coeffs = vec![0.0; n];
        if self.coeff != 0.0 {
            coeffs[self.index] = self.coeff;
        }
        Raf {
            center: self.center,
            coeffs,
            radius: self.radius,
        }
    }

    /// Same result as [`Raf::to_interval`] of the dense form.
    pub fn to_interval(&self) -> Interval {
        let rad = add_up(self.radius, self.coeff.abs());
        Interval::range(sub_down(self.center, rad), add_up(self.center, rad))
    }

    pub fn add_scalar(&self, c: f64) -> Result<AxisRaf, RafError> {
        let (center, e) = sum_err(self.center, c);
        let r = AxisRaf {
            center,
            radius: add_up(self.radius, e),
            ..*self
        };
        if r.center.is_finite() && r.radius.is_finite() {
            Ok(r)
        } else {
            Err(RafError::Overflow("addition"))
        }
    }

    /// `self²`, bit-identical to [`Raf::mul`] of the dense forms.
    pub fn square(&self, mode: BilinearMode) -> Result<AxisRaf, RafError> {
        let mut gens: Vec<(f64, f64)> = Vec::with_capacity(3);
        if self.coeff != 0.0 {
            gens.push((self.coeff, self.coeff));
        }
        push_radius_generators(&mut gens, self.radius, self.radius);
        let range = range_of_generators(&mut gens, mode);
        let mut slack = Slack::default();
        let c = self.center;
        let coeff = cross_coeff(c, self.coeff, c, self.coeff, &mut slack);
        let (center, radius) = product_center_radius(c, self.radius, c, self.radius, range, slack);
        if center.is_finite() && coeff.is_finite() && radius.is_finite() {
            Ok(AxisRaf {
                index: self.index,
                center,
                coeff,
                radius,
            })
        } else {
            Err(RafError::Overflow("multiplication"))
        }
    }
}
