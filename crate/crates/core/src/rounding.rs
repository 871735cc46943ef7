//! Directed-rounding scalar arithmetic.
//!
//! Every primitive is available rounded toward −∞ (`Dir::Down`) and toward
//! +∞ (`Dir::Up`). Addition, subtraction, multiplication, division and square
//! root are *correctly* rounded in the requested direction: the round-to-nearest
//! result is computed first and the exact residual (via error-free
//! transformations, `two_sum` / FMA) decides whether it must be nudged by one
//! ulp. No process-global FPU state is touched, so every function here is pure
//! and can be called from any number of threads at once.
//!
//! `exp` and `ln` rely on the platform libm, which is assumed accurate to
//! within [`LIBM_ULPS`] ulps; their directed variants pad the round-to-nearest
//! result outward by that many ulps (exact special points such as `exp(0) = 1`
//! and `ln(1) = 0` are returned exactly).
//!
//! Overflow saturates: a finite operation whose exact result exceeds the finite
//! range rounds down to `f64::MAX` and up to `+∞` (mirrored for negative
//! results). NaN is rejected at the checked entry point [`dir_op`]; the
//! unchecked helpers assume non-NaN inputs.

use thiserror::Error;

/// Assumed worst-case error of the platform `exp`/`ln`, in ulps.
pub const LIBM_ULPS: u32 = 2;

/// Magnitude below which a product may have lost bits to gradual underflow,
/// making the FMA residual inexact.
const UNDERFLOW_GUARD: f64 = 1.0261342003245941e-289; // 2^-960

/// Smallest positive subnormal.
const TINY: f64 = f64::from_bits(1);

/// 2^600 and its inverse, for moving tiny operands into the normal range.
const SCALE: f64 = 4.149515568880993e180;
const UNSCALE: f64 = 2.409919865102884e-181;
/// 2^-300
const HALF_UNSCALE: f64 = 4.909093465297727e-91;
/// Below this, `s*s - a` in a square root may underflow.
const SQRT_GUARD: f64 = UNDERFLOW_GUARD;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundingError {
    #[error("NaN operand")]
    NaN,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("operation {0:?} needs a second operand")]
    MissingOperand(Op),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    Ln,
    Sqrt,
}

/// Checked directed operation. `b` is required for the binary operations and
/// ignored for the unary ones.
pub fn dir_op(op: Op, a: f64, b: Option<f64>, dir: Dir) -> Result<f64, RoundingError> {
    if a.is_nan() || b.is_some_and(f64::is_nan) {
        return Err(RoundingError::NaN);
    }
    let rhs = || b.ok_or(RoundingError::MissingOperand(op));
    let r = match (op, dir) {
        (Op::Add, Dir::Down) => add_down(a, rhs()?),
        (Op::Add, Dir::Up) => add_up(a, rhs()?),
        (Op::Sub, Dir::Down) => sub_down(a, rhs()?),
        (Op::Sub, Dir::Up) => sub_up(a, rhs()?),
        (Op::Mul, Dir::Down) => mul_down(a, rhs()?),
        (Op::Mul, Dir::Up) => mul_up(a, rhs()?),
        (Op::Div, _) => {
            let b = rhs()?;
            if b == 0.0 {
                return Err(RoundingError::Domain("division by zero"));
            }
            match dir {
                Dir::Down => div_down(a, b),
                Dir::Up => div_up(a, b),
            }
        }
        (Op::Exp, Dir::Down) => exp_down(a),
        (Op::Exp, Dir::Up) => exp_up(a),
        (Op::Ln, _) => {
            if a <= 0.0 {
                return Err(RoundingError::Domain("ln of a nonpositive number"));
            }
            match dir {
                Dir::Down => ln_down(a),
                Dir::Up => ln_up(a),
            }
        }
        (Op::Sqrt, _) => {
            if a < 0.0 {
                return Err(RoundingError::Domain("sqrt of a negative number"));
            }
            match dir {
                Dir::Down => sqrt_down(a),
                Dir::Up => sqrt_up(a),
            }
        }
    };
    if r.is_nan() {
        // inf - inf and friends
        return Err(RoundingError::Domain("indeterminate form"));
    }
    Ok(r)
}

/// Error-free sum: `a + b == s + e` exactly (for finite, non-overflowing `s`).
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Product with a bound on its rounding error: `|a*b - p| <= err`.
#[inline]
pub fn prod_err(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p).abs();
    if p.abs() < UNDERFLOW_GUARD && a != 0.0 && b != 0.0 {
        (p, e + TINY)
    } else {
        (p, e)
    }
}

/// Sum with a bound on its rounding error: `|a+b - s| <= err`.
#[inline]
pub fn sum_err(a: f64, b: f64) -> (f64, f64) {
    let (s, e) = two_sum(a, b);
    (s, e.abs())
}

// Directed rounding of a nonzero real below half the smallest subnormal.
fn below_tiny(positive: bool, dir: Dir) -> f64 {
    match (dir, positive) {
        (Dir::Down, true) => 0.0,
        (Dir::Up, false) => -0.0,
        (Dir::Down, false) => -TINY,
        (Dir::Up, true) => TINY,
    }
}

// Directed rounding of `(hi + lo)·2⁻⁶⁰⁰`, where `hi` is normal and `lo` is at
// most half an ulp of `hi` (only its sign matters).
fn unscale_dir(hi: f64, lo: f64, dir: Dir) -> f64 {
    let r = hi * UNSCALE;
    // both exact: r·2⁶⁰⁰ is hi rounded to a coarser grid
    let diff = hi - r * SCALE;
    let sign = if diff != 0.0 { diff } else { lo };
    match dir {
        Dir::Down if sign < 0.0 => r.next_down(),
        Dir::Up if sign > 0.0 => r.next_up(),
        _ => r,
    }
}

#[inline]
fn overflowed(r: f64, a: f64, b: f64) -> bool {
    r.is_infinite() && a.is_finite() && b.is_finite()
}

#[inline]
fn saturate(r: f64, dir: Dir) -> f64 {
    match (r > 0.0, dir) {
        (true, Dir::Down) => f64::MAX,
        (false, Dir::Up) => -f64::MAX,
        _ => r,
    }
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if overflowed(s, a, b) {
            saturate(s, Dir::Down)
        } else {
            s
        };
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if overflowed(s, a, b) {
            saturate(s, Dir::Up)
        } else {
            s
        };
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

#[inline]
fn mul_dir(a: f64, b: f64, dir: Dir) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if overflowed(p, a, b) {
            saturate(p, dir)
        } else {
            p
        };
    }
    if p.abs() < UNDERFLOW_GUARD {
        if a == 0.0 || b == 0.0 {
            return p;
        }
        if p == 0.0 {
            return below_tiny((a > 0.0) == (b > 0.0), dir);
        }
        // rescale the smaller factor so the residual is exact again
        let (s, t) = if a.abs() < b.abs() {
            (a * SCALE, b)
        } else {
            (a, b * SCALE)
        };
        let q = s * t;
        return unscale_dir(q, s.mul_add(t, -q), dir);
    }
    let e = a.mul_add(b, -p);
    match dir {
        Dir::Down if e < 0.0 => p.next_down(),
        Dir::Up if e > 0.0 => p.next_up(),
        _ => p,
    }
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    mul_dir(a, b, Dir::Down)
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    mul_dir(a, b, Dir::Up)
}

#[inline]
fn div_dir(a: f64, b: f64, dir: Dir) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return if overflowed(q, a, b) {
            saturate(q, dir)
        } else {
            q
        };
    }
    if a == 0.0 || b.is_infinite() {
        return q;
    }
    if q.abs() < UNDERFLOW_GUARD || a.abs() < UNDERFLOW_GUARD {
        // either |a| < 2^55 or |a/b| < 2^115, so the scaled values stay finite
        let s = a * SCALE;
        let q = s / b;
        if q.abs() < UNDERFLOW_GUARD {
            return below_tiny((a > 0.0) == (b > 0.0), dir);
        }
        let r = (-q).mul_add(b, s);
        return unscale_dir(q, r * b.signum(), dir);
    }
    // a - q*b is exact; exact quotient is q + r/b
    let r = (-q).mul_add(b, a);
    let residual_sign = r.signum() * b.signum();
    if r == 0.0 {
        return q;
    }
    match dir {
        Dir::Down if residual_sign < 0.0 => q.next_down(),
        Dir::Up if residual_sign > 0.0 => q.next_up(),
        _ => q,
    }
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    div_dir(a, b, Dir::Down)
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    div_dir(a, b, Dir::Up)
}

pub fn sqrt_down(a: f64) -> f64 {
    sqrt_dir(a, Dir::Down)
}

pub fn sqrt_up(a: f64) -> f64 {
    sqrt_dir(a, Dir::Up)
}

fn sqrt_dir(a: f64, dir: Dir) -> f64 {
    if a < SQRT_GUARD && a > 0.0 {
        // even power of two: the root scales exactly and lands in the normal range
        return sqrt_dir(a * SCALE, dir) * HALF_UNSCALE;
    }
    let s = a.sqrt();
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    // s*s - a: positive means s overshoots
    let r = s.mul_add(s, -a);
    match dir {
        Dir::Down if r > 0.0 => s.next_down(),
        Dir::Up if r < 0.0 => s.next_up(),
        _ => s,
    }
}

#[inline]
fn nudge_down(mut x: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        x = x.next_down();
    }
    x
}

#[inline]
fn nudge_up(mut x: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        x = x.next_up();
    }
    x
}

pub fn exp_down(a: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    if a == f64::NEG_INFINITY {
        return 0.0;
    }
    let e = a.exp();
    if e.is_infinite() {
        return if a.is_finite() { f64::MAX } else { e };
    }
    nudge_down(e, LIBM_ULPS).max(0.0)
}

pub fn exp_up(a: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    if a == f64::NEG_INFINITY {
        return 0.0;
    }
    let e = a.exp();
    if e.is_infinite() {
        return e;
    }
    nudge_up(e, LIBM_ULPS)
}

pub fn ln_down(a: f64) -> f64 {
    if a == 1.0 || a.is_infinite() {
        return a.ln();
    }
    nudge_down(a.ln(), LIBM_ULPS)
}

pub fn ln_up(a: f64) -> f64 {
    if a == 1.0 || a.is_infinite() {
        return a.ln();
    }
    nudge_up(a.ln(), LIBM_ULPS)
}

/// `x^d` rounded down, for `x >= 0`.
pub fn powi_down_nonneg(x: f64, d: u32) -> f64 {
    debug_assert!(x >= 0.0);
    (1..d).fold(x, |acc, _| mul_down(acc, x))
}

/// `x^d` rounded up, for `x >= 0`.
pub fn powi_up_nonneg(x: f64, d: u32) -> f64 {
    debug_assert!(x >= 0.0);
    (1..d).fold(x, |acc, _| mul_up(acc, x))
}
