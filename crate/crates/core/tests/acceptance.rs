//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to stderr,
//! outside the test harness capture, and fails when its criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{bracket_sign, decision_bracket, fixture, kernel_bracket, Dyadic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use svmcert::abstract_svm::{
    abstract_decision_interval, abstract_decision_raf, counterexample_linear, sign_sharp, Domain,
    ModelEvaluator, Verdict,
};
use svmcert::multiclass::{
    abstract_votes, abstract_votes_ordered, m_ovo_sharp, verify_multiclass, VoteRange,
};
use svmcert::perturb::{frame_region, linf_region, region_to_raf, PerturbationSpec};
use svmcert::raf::{bilinear_range, BilinearRange};
use svmcert::svm::{BinaryProblem, Kernel, SvmModel, SvmType};
use svmcert::verify::{self, load_csv, Report, Status, VerifyConfig};
use svmcert::{BilinearMode, Interval, IntervalBox, Raf};

fn report(n: u32, title: &str, result: Result<String, String>) {
    let line = match &result {
        Ok(detail) => format!("criterion {n} ({title}): PASS  {detail}"),
        Err(detail) => format!("criterion {n} ({title}): FAIL  {detail}"),
    };
    let mut err = std::io::stderr().lock();
    writeln!(err, "{line}").unwrap();
    if let Err(detail) = result {
        panic!("criterion {n} failed: {detail}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn median_time(reps: usize, mut f: impl FnMut()) -> Duration {
    f();
    let mut t: Vec<Duration> = (0..reps)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed()
        })
        .collect();
    t.sort();
    t[reps / 2]
}

const POLY2: Kernel = Kernel::Polynomial {
    degree: 2,
    gamma: 1.0,
    coef0: 0.0,
};

const TOY_SVS: [[f64; 2]; 4] = [[8.0, 7.0], [10.0, -4.0], [8.0, 1.0], [9.0, -5.0]];
const TOY_WEIGHTS: [f64; 4] = [5.36e-4, -3.78e-3, -9.23e-4, 4.17e-3];
const TOY_BIAS: f64 = -3.33;

fn toy() -> BinaryProblem {
    BinaryProblem::new(
        TOY_SVS.iter().map(|v| v.to_vec()).collect(),
        TOY_WEIGHTS.to_vec(),
        TOY_BIAS,
    )
    .unwrap()
}

fn toy_box() -> IntervalBox {
    linf_region(&[5.0, 1.0], 1.0, None).unwrap()
}

fn near(got: (f64, f64), want: (f64, f64), tol: f64) -> bool {
    (got.0 - want.0).abs() <= tol && (got.1 - want.1).abs() <= tol
}

// Interval evaluation done by hand: each ⟨svᵢ, x⟩ ranges over a segment whose
// square is taken with the dependency on x kept.
fn toy_interval_by_hand() -> (f64, f64) {
    let (mut lo, mut hi) = (-TOY_BIAS, -TOY_BIAS);
    for (sv, &w) in TOY_SVS.iter().zip(&TOY_WEIGHTS) {
        let a = (sv[0] * 4.0).min(sv[0] * 6.0) + (sv[1] * 0.0).min(sv[1] * 2.0);
        let b = (sv[0] * 4.0).max(sv[0] * 6.0) + (sv[1] * 0.0).max(sv[1] * 2.0);
        let (s0, s1) = if a >= 0.0 {
            (a * a, b * b)
        } else if b <= 0.0 {
            (b * b, a * a)
        } else {
            (0.0, (a * a).max(b * b))
        };
        if w >= 0.0 {
            lo += w * s0;
            hi += w * s1;
        } else {
            lo += w * s1;
            hi += w * s0;
        }
    }
    (lo, hi)
}

// Affine evaluation in exact bilinear mode done by hand. With x = (5+ε₁, 1+ε₂),
// ⟨sv, x⟩ = c + s₁ε₁ + s₂ε₂ and its square is c² + R/2 + 2c(s₁ε₁ + s₂ε₂) ± R/2
// with R = (|s₁| + |s₂|)².
fn toy_raf_by_hand() -> (f64, f64) {
    let (mut center, mut k1, mut k2, mut rad) = (-TOY_BIAS, 0.0, 0.0, 0.0);
    for (sv, &w) in TOY_SVS.iter().zip(&TOY_WEIGHTS) {
        let c = 5.0 * sv[0] + sv[1];
        let r = (sv[0].abs() + sv[1].abs()).powi(2);
        center += w * (c * c + r / 2.0);
        k1 += w * 2.0 * c * sv[0];
        k2 += w * 2.0 * c * sv[1];
        rad += w.abs() * r / 2.0;
    }
    let total = k1.abs() + k2.abs() + rad;
    (center - total, center + total)
}

#[test]
fn criterion_1_golden_interval() {
    let run = || -> Result<String, String> {
        let (bp, b) = (toy(), toy_box());
        let iv = abstract_decision_interval(&bp, &POLY2, &b).map_err(|e| e.to_string())?;
        let (lo, hi) = iv.bounds().ok_or("empty result")?;
        let hand = toy_interval_by_hand();
        ensure(near((lo, hi), hand, 1e-9), || {
            format!("[{lo}, {hi}] differs from hand evaluation {hand:?}")
        })?;
        ensure(near((lo, hi), (-9.231596, 12.735958), 0.05), || {
            format!("[{lo}, {hi}] not within 0.05 of [-9.231596, 12.735958]")
        })?;
        ensure(sign_sharp(&iv, 0.0) == Verdict::Top, || {
            "verdict is not top".into()
        })?;
        let t = median_time(201, || {
            std::hint::black_box(abstract_decision_interval(&bp, &POLY2, &b).unwrap());
        });
        ensure(t < Duration::from_millis(1), || format!("took {t:?}"))?;
        Ok(format!("[{lo:.6}, {hi:.6}], top, {t:?}"))
    };
    report(1, "golden example, interval path", run());
}

#[test]
fn criterion_2_golden_raf() {
    let run = || -> Result<String, String> {
        let (bp, b) = (toy(), toy_box());
        let region = region_to_raf(&b).map_err(|e| e.to_string())?;
        let eval =
            |mode| abstract_decision_raf(&bp, &POLY2, &region, mode).map(|r| r.to_interval());
        let v = eval(BilinearMode::Vertex).map_err(|e| e.to_string())?;
        let (vl, vh) = v.bounds().ok_or("empty")?;
        ensure(near((vl, vh), (0.200413, 3.070115), 0.05), || {
            format!("vertex [{vl}, {vh}] not within 0.05 of [0.200413, 3.070115]")
        })?;
        ensure(sign_sharp(&v, 0.0) == Verdict::Pos, || {
            "vertex verdict is not +1".into()
        })?;
        let e = eval(BilinearMode::Exact).map_err(|e| e.to_string())?;
        let (el, eh) = e.bounds().ok_or("empty")?;
        ensure(el > 0.0 && sign_sharp(&e, 0.0) == Verdict::Pos, || {
            format!("exact [{el}, {eh}] not positive")
        })?;
        let hand = toy_raf_by_hand();
        ensure(near((el, eh), hand, 1e-9), || {
            format!("exact [{el}, {eh}] differs from hand expansion {hand:?}")
        })?;
        let t = median_time(201, || {
            std::hint::black_box(eval(BilinearMode::Exact).unwrap());
        });
        ensure(t < Duration::from_millis(1), || format!("took {t:?}"))?;
        Ok(format!(
            "vertex [{vl:.6}, {vh:.6}], exact [{el:.6}, {eh:.6}], +1, {t:?}"
        ))
    };
    report(2, "golden example, affine path", run());
}

#[test]
fn criterion_3_incomparable_enclosures() {
    let run = || -> Result<String, String> {
        let unit = Interval::new(-1.0, 1.0).unwrap();
        let (x1, x2) = (unit, unit);
        let u = Interval::point(1.0).add(&x1.scale(2.0)).add(&x2.neg());
        let v = Interval::point(2.0).add(&x1).add(&x2);
        let f_iv = u.pow(2).add(&v.pow(2).scale(-0.25));

        let e1 = Raf::from_interval(&unit, 0, 2).unwrap();
        let e2 = Raf::from_interval(&unit, 1, 2).unwrap();
        let ur = e1
            .scale(2.0)
            .unwrap()
            .sub(&e2)
            .unwrap()
            .add_scalar(1.0)
            .unwrap();
        let vr = e1.add(&e2).unwrap().add_scalar(2.0).unwrap();
        let mode = BilinearMode::Exact;
        let f_raf = ur
            .mul(&ur, mode)
            .unwrap()
            .sub(&vr.mul(&vr, mode).unwrap().scale(0.25).unwrap())
            .unwrap()
            .to_interval();
        let ru = bilinear_range(&ur, &ur, mode).unwrap();
        let rv = bilinear_range(&vr, &vr, mode).unwrap();

        let mut problems = Vec::new();
        if f_iv != Interval::new(-4.0, 16.0).unwrap() {
            problems.push(format!("interval {f_iv} != [-4, 16]"));
        }
        if ru
            != (BilinearRange {
                rmin: 0.0,
                rmax: 9.0,
            })
            || rv
                != (BilinearRange {
                    rmin: 0.0,
                    rmax: 4.0,
                })
        {
            problems.push(format!("R ranges {ru:?}, {rv:?}"));
        }
        if f_raf != Interval::new(-6.0, 14.0).unwrap() {
            problems.push(format!("affine {f_raf} != [-6, 14]"));
        }
        let incomparable = !f_iv.is_subset(&f_raf) && !f_raf.is_subset(&f_iv);
        if !incomparable {
            problems.push("enclosures are comparable".into());
        }
        let summary = format!(
            "interval {f_iv}, affine {f_raf}, R [0,{}] and [0,{}]",
            ru.rmax, rv.rmax
        );
        if problems.is_empty() {
            Ok(summary)
        } else {
            Err(format!("{}; {summary}", problems.join("; ")))
        }
    };
    report(3, "incomparable interval and affine enclosures", run());
}

// Random models and regions for the soundness fuzzer.

fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel {
    match rng.gen_range(0..3) {
        0 => Kernel::Linear,
        1 => Kernel::Polynomial {
            degree: rng.gen_range(1..=4),
            gamma: rng.gen_range(0.1..2.0),
            coef0: rng.gen_range(-1.0..1.0),
        },
        _ => Kernel::Rbf {
            gamma: rng.gen_range(0.05..3.0),
        },
    }
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> SvmModel {
    let m = if rng.gen_bool(0.6) {
        2
    } else {
        rng.gen_range(3..=4)
    };
    let nr_sv: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=3)).collect();
    let total: usize = nr_sv.iter().sum();
    let svs = (0..total)
        .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let coeffs = (0..m - 1)
        .map(|_| (0..total).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let rho = (0..m * (m - 1) / 2)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    SvmModel::new(
        SvmType::CSvc,
        random_kernel(rng),
        (0..m as i64).collect(),
        nr_sv,
        svs,
        coeffs,
        rho,
    )
    .unwrap()
}

fn random_region(rng: &mut ChaCha8Rng, n: usize) -> IntervalBox {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    if n == 9 && rng.gen_bool(0.3) {
        return frame_region(&x, 1, 3, 3).unwrap();
    }
    let delta = match rng.gen_range(0..4) {
        0 => 0.0,
        1 => rng.gen_range(0.0..0.02),
        _ => rng.gen_range(0.0..0.3),
    };
    let clip = rng.gen_bool(0.5).then_some((0.0, 1.0));
    linf_region(&x, delta, clip).unwrap()
}

// A random corner of the box, or a uniform point inside it.
fn sample_point(rng: &mut ChaCha8Rng, b: &IntervalBox, corner: bool) -> Vec<f64> {
    b.components()
        .iter()
        .map(|c| {
            let (l, h) = c.bounds().unwrap();
            if corner {
                if rng.gen_bool(0.5) {
                    l
                } else {
                    h
                }
            } else {
                rng.gen_range(0.0..=1.0f64).mul_add(h - l, l).clamp(l, h)
            }
        })
        .collect()
}

fn encloses(iv: &Interval, lo: &Dyadic, hi: &Dyadic) -> bool {
    match iv.bounds() {
        Some((l, h)) => lo.ge_f64(l) && hi.le_f64(h),
        None => false,
    }
}

// libsvm voting on exact signs; None when some sign is undecidable.
fn exact_winner(signs: &[Option<i8>], m: usize) -> Option<usize> {
    let mut votes = vec![0usize; m];
    let mut it = signs.iter();
    for i in 0..m {
        for j in i + 1..m {
            match it.next().unwrap() {
                Some(1) => votes[i] += 1,
                Some(_) => votes[j] += 1,
                None => return None,
            }
        }
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best)
}

#[test]
fn criterion_4_soundness_fuzzing() {
    let run = || -> Result<String, String> {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
        let (mut triples, mut instances, mut checks, mut undecidable) =
            (0usize, 0usize, 0usize, 0usize);
        let mut failures: Vec<String> = Vec::new();
        let mut per_kernel = [0usize; 3];
        while triples < 100_000 {
            let n = [1, 2, 3, 4, 5, 6, 9][rng.gen_range(0..7)];
            let model = random_model(&mut rng, n);
            let b = random_region(&mut rng, n);
            let region = region_to_raf(&b).unwrap();
            let eval = ModelEvaluator::new(&model, BilinearMode::Exact).unwrap();
            let ivs = eval.pair_intervals(&b).unwrap();
            let rafs: Vec<Interval> = eval
                .pair_rafs(&region)
                .unwrap()
                .iter()
                .map(|r| r.to_interval())
                .collect();
            let domains = [Domain::Interval, Domain::Raf, Domain::Hybrid];
            let verdicts: Vec<Vec<Verdict>> = domains
                .iter()
                .map(|&d| eval.pair_verdicts(&b, &region, d).unwrap())
                .collect();
            let sets: Vec<Vec<usize>> = domains
                .iter()
                .map(|&d| verify_multiclass(&eval, &b, &region, d).unwrap())
                .collect();
            let problems: Vec<BinaryProblem> = model
                .pairs()
                .map(|(i, j)| model.binary_problem(i, j).unwrap())
                .collect();
            per_kernel[match model.kernel {
                Kernel::Linear => 0,
                Kernel::Polynomial { .. } => 1,
                Kernel::Rbf { .. } => 2,
            }] += 1;
            instances += 1;
            for k in 0..50 {
                let x = sample_point(&mut rng, &b, k % 3 == 0);
                let kv: Vec<(Dyadic, Dyadic)> = model
                    .support_vectors
                    .iter()
                    .map(|sv| kernel_bracket(&model.kernel, sv, &x))
                    .collect();
                let mut signs = Vec::with_capacity(problems.len());
                for (p, bp) in problems.iter().enumerate() {
                    let (mut lo, mut hi) = (Dyadic::from_f64(-bp.bias), Dyadic::from_f64(-bp.bias));
                    for (&s, &w) in bp.sv_index.iter().zip(&bp.weights) {
                        let (a, c) = (kv[s].0.mul_f64(w), kv[s].1.mul_f64(w));
                        if w >= 0.0 {
                            lo = lo.add(&a);
                            hi = hi.add(&c);
                        } else {
                            lo = lo.add(&c);
                            hi = hi.add(&a);
                        }
                    }
                    if !encloses(&ivs[p], &lo, &hi) {
                        failures.push(format!(
                            "interval {} misses {} at {x:?}",
                            ivs[p],
                            lo.approx()
                        ));
                    }
                    if !encloses(&rafs[p], &lo, &hi) {
                        failures.push(format!(
                            "affine {} misses {} at {x:?}",
                            rafs[p],
                            lo.approx()
                        ));
                    }
                    let sign = bracket_sign(&lo, &hi);
                    for v in &verdicts {
                        let bad = match (v[p], sign) {
                            (Verdict::Pos, Some(s)) => s != 1,
                            (Verdict::Neg, Some(s)) => s != -1,
                            _ => false,
                        };
                        if bad {
                            failures.push(format!("verdict {:?} contradicted at {x:?}", v[p]));
                        }
                    }
                    checks += 2;
                    signs.push(sign);
                }
                match exact_winner(&signs, model.num_classes()) {
                    Some(w) => {
                        for s in &sets {
                            if !s.contains(&w) {
                                failures.push(format!("class {w} missing from {s:?} at {x:?}"));
                            }
                        }
                    }
                    None => undecidable += 1,
                }
                triples += 1;
            }
            if failures.len() > 20 {
                break;
            }
        }
        let elapsed = start.elapsed();
        ensure(failures.is_empty(), || {
            format!("{} violations, first: {}", failures.len(), failures[0])
        })?;
        ensure(elapsed < Duration::from_secs(300), || {
            format!("took {elapsed:?}")
        })?;
        Ok(format!(
            "{triples} triples over {instances} instances (linear/poly/rbf {per_kernel:?}), {checks} enclosure checks, \
             {undecidable} points with an undecidable sign, {elapsed:.1?}"
        ))
    };
    report(4, "soundness fuzzing", run());
}

#[test]
fn criterion_5_linear_completeness() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
        let (mut top, mut decided) = (0usize, 0usize);
        for case in 0..1000 {
            let n = rng.gen_range(1..=8);
            let w: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        0.0
                    } else {
                        rng.gen_range(-3.0..3.0)
                    }
                })
                .collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let delta = rng.gen_range(0.001..0.5);
            let b = linf_region(&x, delta, None).unwrap();
            // offset the bias around w·x so both outcomes are common
            let wx: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            let spread: f64 = w.iter().map(|a| a.abs()).sum::<f64>() * delta;
            let bias = wx + rng.gen_range(-2.0..2.0) * spread;
            let bp = BinaryProblem::new(vec![w.clone()], vec![1.0], bias).unwrap();
            let value = |p: &[f64]| common::dot(&w, p).sub(&Dyadic::from_f64(bias));
            let verdict = sign_sharp(
                &abstract_decision_interval(&bp, &Kernel::Linear, &b).unwrap(),
                0.0,
            );
            if verdict == Verdict::Top {
                top += 1;
                let (y, z) =
                    counterexample_linear(&bp, &Kernel::Linear, &b).map_err(|e| e.to_string())?;
                ensure(b.contains(&y) && b.contains(&z), || {
                    format!("case {case}: counterexample outside the box")
                })?;
                ensure(!value(&y).is_negative() && value(&z).is_negative(), || {
                    format!("case {case}: top verdict without a witness pair")
                })?;
            } else {
                decided += 1;
                let want = verdict == Verdict::Pos;
                for mask in 0u32..(1 << n) {
                    let corner: Vec<f64> = b
                        .components()
                        .iter()
                        .enumerate()
                        .map(|(j, c)| {
                            if mask >> j & 1 == 1 {
                                c.hi().unwrap()
                            } else {
                                c.lo().unwrap()
                            }
                        })
                        .collect();
                    ensure(!value(&corner).is_negative() == want, || {
                        format!("case {case}: corner {corner:?} contradicts {verdict:?}")
                    })?;
                }
            }
        }
        Ok(format!(
            "1000 instances, {top} top with witnesses, {decided} decided with all corners agreeing"
        ))
    };
    report(5, "linear completeness", run());
}

// Extremes of (Σ gⱼ.0 εⱼ)(Σ gⱼ.1 εⱼ) over the cube, from every corner and the
// stationary point of every cube edge.
fn bilinear_oracle(gens: &[(f64, f64)]) -> (f64, f64) {
    let k = gens.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut see = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    if k == 0 {
        return (0.0, 0.0);
    }
    for mask in 0u32..(1 << k) {
        let eps: Vec<f64> = (0..k)
            .map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let (u, v) = gens
            .iter()
            .zip(&eps)
            .fold((0.0, 0.0), |(u, v), (g, e)| (u + g.0 * e, v + g.1 * e));
        see(u * v);
        for (j, g) in gens.iter().enumerate() {
            // free coordinate j: (U + αt)(V + βt)
            let (uu, vv) = (u - g.0 * eps[j], v - g.1 * eps[j]);
            let (a, b) = (g.0, g.1);
            if a * b != 0.0 {
                let t = -(uu * b + vv * a) / (2.0 * a * b);
                if t.abs() <= 1.0 {
                    see((uu + a * t) * (vv + b * t));
                }
            }
        }
    }
    (lo, hi)
}

fn random_form(rng: &mut ChaCha8Rng, n: usize) -> Raf {
    let coeffs = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(-4.0..4.0)
            }
        })
        .collect();
    let radius = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.0..2.0)
    };
    Raf::from_parts(rng.gen_range(-5.0..5.0), coeffs, radius).unwrap()
}

fn form_value(a: &Raf, eps: &[f64], ea: f64) -> Dyadic {
    let mut v = Dyadic::from_f64(a.center()).add(&Dyadic::from_f64(a.radius()).mul_f64(ea));
    for (&k, &e) in a.coeffs().iter().zip(eps) {
        v = v.add(&Dyadic::from_f64(k).mul_f64(e));
    }
    v
}

#[test]
fn criterion_6_multiplication_optimality() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
        let mut worst = 0.0f64;
        let mut samples = 0usize;
        for case in 0..1000 {
            let n = rng.gen_range(1..=3);
            let (a, b) = (random_form(&mut rng, n), random_form(&mut rng, n));
            let r = bilinear_range(&a, &b, BilinearMode::Exact).map_err(|e| e.to_string())?;
            let mut gens: Vec<(f64, f64)> = a
                .coeffs()
                .iter()
                .copied()
                .zip(b.coeffs().iter().copied())
                .collect();
            gens.push((a.radius(), 0.0));
            gens.push((0.0, b.radius()));
            let (lo, hi) = bilinear_oracle(&gens);
            let err = (r.rmin - lo).abs().max((r.rmax - hi).abs());
            worst = worst.max(err);
            ensure(err <= 1e-6, || {
                format!(
                    "case {case}: [{}, {}] vs oracle [{lo}, {hi}]",
                    r.rmin, r.rmax
                )
            })?;
            let p = a.mul(&b, BilinearMode::Exact).map_err(|e| e.to_string())?;
            for _ in 0..10 {
                let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let (ea, eb) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                let exact = form_value(&a, &eps, ea).mul(&form_value(&b, &eps, eb));
                let lin = form_value(&p, &eps, 0.0);
                ensure(exact.sub(&lin).abs().le_f64(p.radius()), || {
                    format!("case {case}: product misses {} at {eps:?}", exact.approx())
                })?;
                samples += 1;
            }
        }
        Ok(format!(
            "1000 pairs, max deviation {worst:.2e}, {samples} sampled products enclosed"
        ))
    };
    report(6, "multiplication optimality", run());
}

fn all_verdict_choices(table: &[Verdict]) -> Vec<Vec<Verdict>> {
    let tops: Vec<usize> = (0..table.len())
        .filter(|&k| table[k] == Verdict::Top)
        .collect();
    (0u32..(1 << tops.len()))
        .map(|mask| {
            let mut t = table.to_vec();
            for (b, &k) in tops.iter().enumerate() {
                t[k] = if mask >> b & 1 == 1 {
                    Verdict::Pos
                } else {
                    Verdict::Neg
                };
            }
            t
        })
        .collect()
}

#[test]
fn criterion_7_abstract_voting() {
    let run = || -> Result<String, String> {
        let vr = VoteRange::new;
        let first = m_ovo_sharp(&[vr(4, 4), vr(0, 2), vr(4, 5), vr(1, 3)]);
        ensure(first == vec![0, 2], || {
            format!("first scenario gave {first:?}")
        })?;
        let mut table = std::collections::BTreeMap::new();
        table.insert((0, 1), Verdict::Top);
        table.insert((0, 2), Verdict::Neg);
        table.insert((1, 2), Verdict::Top);
        let votes = abstract_votes(&table, 3).map_err(|e| e.to_string())?;
        let second = m_ovo_sharp(&votes);
        ensure(second == vec![0, 1, 2], || {
            format!("second scenario gave {second:?} from {votes:?}")
        })?;

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
        let mut concretizations = 0usize;
        for case in 0..1000 {
            let m = rng.gen_range(3..=5);
            let table: Vec<Verdict> = (0..m * (m - 1) / 2)
                .map(|_| [Verdict::Pos, Verdict::Neg, Verdict::Top][rng.gen_range(0..3)])
                .collect();
            let set = m_ovo_sharp(&abstract_votes_ordered(&table, m).map_err(|e| e.to_string())?);
            for concrete in all_verdict_choices(&table) {
                let signs: Vec<Option<i8>> = concrete
                    .iter()
                    .map(|v| Some(if *v == Verdict::Pos { 1 } else { -1 }))
                    .collect();
                let w = exact_winner(&signs, m).unwrap();
                ensure(set.contains(&w), || {
                    format!("case {case}: winner {w} outside {set:?}")
                })?;
                concretizations += 1;
            }
        }
        Ok(format!(
            "both scenarios reproduced; 1000 tables, {concretizations} concrete outcomes covered"
        ))
    };
    report(7, "abstract one-versus-one voting", run());
}

fn fixture_model() -> (SvmModel, Vec<verify::Sample>) {
    let samples = load_csv(fixture("digits_test.csv"), Some((0.0, 1.0))).unwrap();
    let model =
        SvmModel::load(fixture("digits_rbf.model"), Some(samples[0].features.len())).unwrap();
    (model, samples)
}

fn run_fixture(model: &SvmModel, samples: &[verify::Sample], delta: f64, domain: Domain) -> Report {
    let config = VerifyConfig {
        perturbation: PerturbationSpec::Linf {
            delta,
            clip: Some((0.0, 1.0)),
        },
        domain,
        mode: BilinearMode::Exact,
        only_correct: false,
        jobs: None,
    };
    verify::run(model, samples, &config).unwrap()
}

// Random points of the clipped L∞ ball, corners included.
fn attack(model: &SvmModel, x: &[f64], delta: f64, label: i64, seed: u64) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = linf_region(x, delta, Some((0.0, 1.0))).unwrap();
    (0..1000).find_map(|k| {
        let p = sample_point(&mut rng, &b, k % 2 == 0);
        (model.predict(&p).unwrap() != label).then_some(p)
    })
}

#[test]
fn criterion_8_fixture_end_to_end() {
    let run = || -> Result<String, String> {
        let (model, samples) = fixture_model();
        let deltas = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
        let mut rows = Vec::new();
        let mut raf_times = Vec::new();
        let mut previous = [f64::INFINITY; 3];
        let mut attacked = 0usize;
        for &delta in &deltas {
            let reports: Vec<Report> = [Domain::Interval, Domain::Raf, Domain::Hybrid]
                .iter()
                .map(|&d| run_fixture(&model, &samples, delta, d))
                .collect();
            let proved: Vec<usize> = reports.iter().map(|r| r.summary.proved_robust).collect();
            for (k, r) in reports.iter().enumerate() {
                let pct = r.summary.robustness_pct;
                ensure(pct <= previous[k], || {
                    format!("robustness rose to {pct} at delta {delta}")
                })?;
                previous[k] = pct;
            }
            ensure(proved[2] >= proved[0].max(proved[1]), || {
                format!(
                    "delta {delta}: hybrid proved {} < max({}, {})",
                    proved[2], proved[0], proved[1]
                )
            })?;
            raf_times.extend(reports[1].verdicts.iter().map(|v| v.elapsed_ms));
            let robust: Vec<&verify::SampleVerdict> = reports[2]
                .verdicts
                .iter()
                .filter(|v| v.status == Status::ProvedRobust)
                .collect();
            let broken: Vec<usize> = robust
                .par_iter()
                .filter_map(|v| {
                    let x = &samples[v.id].features;
                    attack(&model, x, delta, v.prediction, v.id as u64).map(|_| v.id)
                })
                .collect();
            ensure(broken.is_empty(), || {
                format!("delta {delta}: attack broke proved samples {broken:?}")
            })?;
            attacked += robust.len();
            rows.push(format!(
                "{delta}: {:.0}/{:.0}/{:.0}%",
                reports[0].summary.robustness_pct,
                reports[1].summary.robustness_pct,
                reports[2].summary.robustness_pct
            ));
        }
        let mean = raf_times.iter().sum::<Duration>() / raf_times.len() as u32;
        ensure(mean < Duration::from_secs(1), || {
            format!("mean affine time {mean:?}")
        })?;
        Ok(format!(
            "robust % interval/affine/hybrid by delta [{}]; {attacked} proofs survived 1000-point attacks; \
             mean affine time {mean:.2?}",
            rows.join(", ")
        ))
    };
    report(8, "fixture end to end", run());
}

#[test]
fn hand_oracles_agree_with_direct_evaluation() {
    // the concrete decision at the box center lies inside both enclosures
    let (lo, hi) = decision_bracket(
        &POLY2,
        &TOY_SVS.iter().map(|v| v.to_vec()).collect::<Vec<_>>(),
        &TOY_WEIGHTS,
        TOY_BIAS,
        &[5.0, 1.0],
    );
    let c = lo.approx();
    assert_eq!(lo.approx(), hi.approx());
    let i = toy_interval_by_hand();
    let r = toy_raf_by_hand();
    assert!(
        i.0 <= c && c <= i.1 && r.0 <= c && c <= r.1,
        "{c} {i:?} {r:?}"
    );
}
