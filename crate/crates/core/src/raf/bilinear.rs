//! Range of the bilinear form `(Σ aₖεₖ)(Σ bₖεₖ)` over `ε ∈ [−1,1]^K`.
//!
//! The map `ε ↦ (u, v) = Σ εₖ(aₖ, bₖ)` sends the hypercube onto a centrally
//! symmetric polygon (a zonotope in the plane), and `uv` has no interior
//! extremum, so the range is attained on the polygon boundary. The boundary is
//! traced by sorting the generators by angle; since `uv` is even, half of it
//! suffices. Each edge contributes its endpoints plus, when the parabola along
//! the edge has its vertex inside, the value at that vertex.

use std::cmp::Ordering;

use crate::interval::Interval;
use crate::rounding::{add_down, add_up, div_up, mul_down, mul_up, sub_down, sub_up, two_sum};

/// Which extrema `bilinear_range` computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum BilinearMode {
    /// True minimum and maximum over the whole hypercube (outward rounded).
    #[default]
    Exact,
    /// Minimum and maximum over the hypercube *vertices* only. This is not an
    /// enclosure of the true range (for `ε₁²` it gives `[1,1]`) and exists to
    /// reproduce hand computations that use it. Falls back to `Exact` beyond
    /// [`VERTEX_ENUMERATION_LIMIT`] generators.
    Vertex,
}

/// Largest generator count for which vertex mode enumerates sign patterns.
pub const VERTEX_ENUMERATION_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearRange {
    pub rmin: f64,
    pub rmax: f64,
}

impl BilinearRange {
    pub const ZERO: BilinearRange = BilinearRange {
        rmin: 0.0,
        rmax: 0.0,
    };
}

/// Range over the generators `(aₖ, bₖ)`. Zero generators are ignored; the
/// slice is reordered in place.
pub fn range_of_generators(gens: &mut [(f64, f64)], mode: BilinearMode) -> BilinearRange {
    match mode {
        BilinearMode::Vertex if gens.len() <= VERTEX_ENUMERATION_LIMIT => vertex_range(gens),
        _ => exact_range(gens),
    }
}

fn exact_range(gens: &mut [(f64, f64)]) -> BilinearRange {
    for g in gens.iter_mut() {
        if g.1 < 0.0 || (g.1 == 0.0 && g.0 < 0.0) {
            *g = (-g.0, -g.1);
        }
    }
    gens.sort_unstable_by(|p, q| angle_cmp(*p, *q));

    // Start at the vertex −Σg and walk by 2g in angle order.
    let (mut ul, mut uh, mut vl, mut vh) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &(a, b) in gens.iter() {
        ul = sub_down(ul, a);
        uh = sub_up(uh, a);
        vl = sub_down(vl, b);
        vh = sub_up(vh, b);
    }
    let mut acc = Extremes::new();
    acc.vertex(ul, uh, vl, vh);
    for &(a, b) in gens.iter() {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let du = 2.0 * a;
        let dv = 2.0 * b;
        acc.edge(ul, uh, vl, vh, du, dv);
        ul = add_down(ul, du);
        uh = add_up(uh, du);
        vl = add_down(vl, dv);
        vh = add_up(vh, dv);
        acc.vertex(ul, uh, vl, vh);
    }
    acc.finish()
}

struct Extremes {
    rmin: f64,
    rmax: f64,
}

impl Extremes {
    fn new() -> Self {
        Self {
            rmin: f64::INFINITY,
            rmax: f64::NEG_INFINITY,
        }
    }

    fn vertex(&mut self, ul: f64, uh: f64, vl: f64, vh: f64) {
        let p = Interval::range(ul, uh).mul(&Interval::range(vl, vh));
        let (lo, hi) = p.bounds().expect("nonempty product");
        self.rmin = self.rmin.min(lo);
        self.rmax = self.rmax.max(hi);
    }

    // Edge from (u0, v0) to (u0 + du, v0 + dv). Along it
    //   f(t) = u0·v0 + t(u0·dv + v0·du) + t²·du·dv,
    // whose stationary value is −(u0·dv − v0·du)² / (4·du·dv).
    fn edge(&mut self, ul: f64, uh: f64, vl: f64, vh: f64, du: f64, dv: f64) {
        if du == 0.0 || dv == 0.0 {
            return;
        }
        let u0 = Interval::range(ul, uh);
        let v0 = Interval::range(vl, vh);
        let ud = u0.scale(dv);
        let vd = v0.scale(du);
        let num = ud.add(&vd).neg();
        let dd = Interval::range(mul_down(du, dv), mul_up(du, dv));
        let (nl, nh) = num.bounds().unwrap();
        let (dl, dh) = dd.bounds().unwrap();
        // t* = num / (2·du·dv) must be able to land in [0, 1]
        let same_sign = (du > 0.0) == (dv > 0.0);
        let inside = if same_sign {
            nh >= 0.0 && nl <= 2.0 * dh
        } else {
            nl <= 0.0 && nh >= 2.0 * dl
        };
        if !inside {
            return;
        }
        let cross = ud.add(&vd.neg());
        let c2 = cross.pow(2).hi().unwrap();
        if same_sign {
            // minimum of the parabola
            let q = -div_up(c2, 4.0 * dl);
            self.rmin = self.rmin.min(q);
        } else {
            let q = div_up(c2, -4.0 * dh);
            self.rmax = self.rmax.max(q);
        }
    }

    fn finish(self) -> BilinearRange {
        BilinearRange {
            rmin: self.rmin,
            rmax: self.rmax,
        }
    }
}

fn vertex_range(gens: &[(f64, f64)]) -> BilinearRange {
    let k = gens.len();
    if k == 0 {
        return BilinearRange::ZERO;
    }
    let mut acc = Extremes::new();
    // f(−ε) = f(ε): fix the sign of the first generator
    for mask in 0u32..(1u32 << (k - 1)) {
        let (mut ul, mut uh, mut vl, mut vh) = (gens[0].0, gens[0].0, gens[0].1, gens[0].1);
        for (i, &(a, b)) in gens.iter().enumerate().skip(1) {
            if mask & (1 << (i - 1)) != 0 {
                ul = sub_down(ul, a);
                uh = sub_up(uh, a);
                vl = sub_down(vl, b);
                vh = sub_up(vh, b);
            } else {
                ul = add_down(ul, a);
                uh = add_up(uh, a);
                vl = add_down(vl, b);
                vh = add_up(vh, b);
            }
        }
        acc.vertex(ul, uh, vl, vh);
    }
    acc.finish()
}

/// Angular order on the upper half-plane: `p < q` iff `q` is strictly
/// counterclockwise of `p`. The sign of the cross product is computed exactly
/// (barring underflow of the partial products).
fn angle_cmp(p: (f64, f64), q: (f64, f64)) -> Ordering {
    // cross = p.a·q.b − p.b·q.a; positive means p comes first
    match cross_sign(p.0, q.1, p.1, q.0) {
        Ordering::Greater => Ordering::Less,
        Ordering::Less => Ordering::Greater,
        Ordering::Equal => Ordering::Equal,
    }
}

/// Exact sign of `a·b − c·d`.
pub(crate) fn cross_sign(a: f64, b: f64, c: f64, d: f64) -> Ordering {
    let p1 = a * b;
    let e1 = a.mul_add(b, -p1);
    let p2 = c * d;
    let e2 = c.mul_add(d, -p2);
    expansion_sign(&[e1, -e2, p1, -p2])
}

// Sign of an exact sum of doubles via a nonoverlapping expansion.
fn expansion_sign(terms: &[f64; 4]) -> Ordering {
    let mut exp = [0.0f64; 4];
    for (k, &t) in terms.iter().enumerate() {
        let mut q = t;
        for h in exp[..k].iter_mut() {
            let (s, e) = two_sum(q, *h);
            *h = e;
            q = s;
        }
        exp[k] = q;
    }
    exp.iter()
        .rev()
        .find(|&&x| x != 0.0)
        .map_or(Ordering::Equal, |x| x.partial_cmp(&0.0).unwrap())
}
