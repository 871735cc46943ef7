//! Exact reference arithmetic for the integration tests.
//!
//! Every finite double is a dyadic rational `m·2ᵉ`, so sums and products of
//! doubles are computed here without any rounding. The exponential is
//! bracketed with a fixed-point Taylor series carried to several hundred bits.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::path::PathBuf;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use svmcert::svm::Kernel;

/// `m·2ᵉ`, exactly.
#[derive(Clone, Debug)]
pub struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            m: BigInt::zero(),
            e: 0,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite {x}");
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let eb = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if eb == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), eb - 1075)
        };
        let m = BigInt::from(m);
        Dyadic {
            m: if neg { -m } else { m },
            e,
        }
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = self.e.min(other.e);
        (
            &self.m << (self.e - e) as usize,
            &other.m << (other.e - e) as usize,
            e,
        )
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic { m: a + b, e }
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic {
            m: -&self.m,
            e: self.e,
        }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic {
            m: &self.m * &other.m,
            e: self.e + other.e,
        }
    }

    pub fn mul_f64(&self, x: f64) -> Dyadic {
        self.mul(&Dyadic::from_f64(x))
    }

    pub fn pow(&self, d: u32) -> Dyadic {
        let mut r = Dyadic::from_f64(1.0);
        for _ in 0..d {
            r = r.mul(self);
        }
        r
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            m: self.m.abs(),
            e: self.e,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.m.sign() == Sign::Minus
    }

    pub fn cmp(&self, other: &Dyadic) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }

    pub fn cmp_f64(&self, x: f64) -> Ordering {
        self.cmp(&Dyadic::from_f64(x))
    }

    pub fn le_f64(&self, x: f64) -> bool {
        self.cmp_f64(x) != Ordering::Greater
    }

    pub fn ge_f64(&self, x: f64) -> bool {
        self.cmp_f64(x) != Ordering::Less
    }

    /// Nearest-ish double, for messages and tolerances only.
    pub fn approx(&self) -> f64 {
        let bits = self.m.bits() as i64;
        let shift = (bits - 60).max(0);
        let m = (&self.m >> shift as usize).to_f64().unwrap();
        let e = (self.e + shift).clamp(-2200, 2200) as i32;
        m * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }
}

/// Fractional bits of the fixed-point exponential.
const P: i64 = 640;

fn floor_shift(m: &BigInt, k: i64) -> BigInt {
    // m·2^k rounded toward −∞ (m ≥ 0)
    if k >= 0 {
        m << k as usize
    } else {
        m >> (-k) as usize
    }
}

fn ceil_shift(m: &BigInt, k: i64) -> BigInt {
    if k >= 0 {
        return m << k as usize;
    }
    let f = m >> (-k) as usize;
    if (&f << (-k) as usize) == *m {
        f
    } else {
        f + 1
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a / b;
    if &q * b == *a {
        q
    } else {
        q + 1
    }
}

// Bracket of e^y for 0 ≤ y < 2^-8 given as fixed-point bounds.
fn exp_small(y_lo: &BigInt, y_hi: &BigInt) -> (BigInt, BigInt) {
    let one = BigInt::from(1) << P as usize;
    let (mut s_lo, mut t_lo) = (one.clone(), one.clone());
    let (mut s_hi, mut t_hi) = (one.clone(), one.clone());
    for i in 1..=48u32 {
        t_lo = floor_shift(&(&t_lo * y_lo), -P) / i;
        t_hi = ceil_div(&ceil_shift(&(&t_hi * y_hi), -P), &BigInt::from(i));
        s_lo += &t_lo;
        s_hi += &t_hi;
    }
    // tail after the last term is below twice that term
    s_hi += &t_hi * 2 + 1;
    (s_lo, s_hi)
}

/// Rigorous bracket `[lo, hi] ∋ eˣ`.
pub fn exp_bracket(x: &Dyadic) -> (Dyadic, Dyadic) {
    let t = x.abs();
    let tb = t.m.bits() as i64 + t.e;
    let k = (tb + 8).max(0);
    let sh = t.e + P - k;
    let (y_lo, y_hi) = (floor_shift(&t.m, sh), ceil_shift(&t.m, sh));
    let (mut lo, mut hi) = exp_small(&y_lo, &y_hi);
    if x.is_negative() {
        let two_p = BigInt::from(1) << (2 * P) as usize;
        let nl = &two_p / &hi;
        let nh = ceil_div(&two_p, &lo);
        lo = nl;
        hi = nh;
    }
    for _ in 0..k {
        lo = floor_shift(&(&lo * &lo), -P);
        hi = ceil_shift(&(&hi * &hi), -P);
    }
    (Dyadic { m: lo, e: -P }, Dyadic { m: hi, e: -P })
}

/// Exact `⟨a, b⟩`.
pub fn dot(a: &[f64], b: &[f64]) -> Dyadic {
    a.iter().zip(b).fold(Dyadic::zero(), |s, (&x, &y)| {
        s.add(&Dyadic::from_f64(x).mul_f64(y))
    })
}

/// Bracket of the real kernel value `k(sv, x)`; exact for linear and
/// polynomial kernels.
pub fn kernel_bracket(k: &Kernel, sv: &[f64], x: &[f64]) -> (Dyadic, Dyadic) {
    match *k {
        Kernel::Linear => {
            let v = dot(sv, x);
            (v.clone(), v)
        }
        Kernel::Polynomial {
            degree,
            gamma,
            coef0,
        } => {
            let v = dot(sv, x)
                .mul_f64(gamma)
                .add(&Dyadic::from_f64(coef0))
                .pow(degree);
            (v.clone(), v)
        }
        Kernel::Rbf { gamma } => {
            let mut d = Dyadic::zero();
            for (&a, &b) in sv.iter().zip(x) {
                let t = Dyadic::from_f64(a).sub(&Dyadic::from_f64(b));
                d = d.add(&t.mul(&t));
            }
            exp_bracket(&d.mul_f64(-gamma))
        }
    }
}

/// Bracket of the real decision value `Σᵢ wᵢ·k(svᵢ, x) − bias`.
pub fn decision_bracket(
    k: &Kernel,
    svs: &[Vec<f64>],
    weights: &[f64],
    bias: f64,
    x: &[f64],
) -> (Dyadic, Dyadic) {
    let mut lo = Dyadic::from_f64(-bias);
    let mut hi = lo.clone();
    for (sv, &w) in svs.iter().zip(weights) {
        let (kl, kh) = kernel_bracket(k, sv, x);
        let (a, b) = (kl.mul_f64(w), kh.mul_f64(w));
        if w >= 0.0 {
            lo = lo.add(&a);
            hi = hi.add(&b);
        } else {
            lo = lo.add(&b);
            hi = hi.add(&a);
        }
    }
    (lo, hi)
}

/// The sign of a bracket: `Some(+1)` if surely `≥ 0`, `Some(−1)` if surely
/// `< 0`.
pub fn bracket_sign(lo: &Dyadic, hi: &Dyadic) -> Option<i8> {
    if !lo.is_negative() {
        Some(1)
    } else if hi.is_negative() {
        Some(-1)
    } else {
        None
    }
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}
