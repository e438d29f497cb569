//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use intervaldyn::classifier::{classify_attractors, recurrence_check, AttractorKind, Classification, ClassifyConfig};
use intervaldyn::expr::{differentiate, BinaryOp, Expr, UnaryOp};
use intervaldyn::fixtures;
use intervaldyn::induction::{
    expansion_analysis, find_nice_interval, first_return, is_nice, koebe_estimate, measure_distortion, ExpansionMode,
    InducedMap, InductionError, NeutralEntryModel,
};
use intervaldyn::mane::{growth_test, mane_certificate, GrowthStatus, ManeConfig};
use intervaldyn::rng::{uniform_points, Sampler};
use intervaldyn::{Interval, LateralPoint, PiecewiseMap};

type Outcome = (bool, String);

// ---------------------------------------------------------------- oracles

/// Evaluator written independently of the library's.
fn oracle_eval(e: &Expr, x: f64) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var => x,
        Expr::Unary(op, a) => {
            let u = oracle_eval(a, x);
            match op {
                UnaryOp::Neg => -u,
                UnaryOp::Sin => u.sin(),
                UnaryOp::Cos => u.cos(),
                UnaryOp::Exp => u.exp(),
                UnaryOp::Log => u.ln(),
                UnaryOp::Sqrt => u.sqrt(),
                UnaryOp::Abs => u.abs(),
            }
        }
        Expr::Binary(op, a, b) => {
            let (u, v) = (oracle_eval(a, x), oracle_eval(b, x));
            match op {
                BinaryOp::Add => u + v,
                BinaryOp::Sub => u - v,
                BinaryOp::Mul => u * v,
                BinaryOp::Div => u / v,
            }
        }
        Expr::Pow(a, p) => oracle_eval(a, x).powf(*p),
        Expr::Spow(a, p) => {
            let u = oracle_eval(a, x);
            u.signum() * u.abs().powf(*p)
        }
    }
}

/// Two-level Richardson extrapolation of the central difference, and the
/// gap to the next level as an error estimate.
fn richardson(e: &Expr, x: f64) -> (f64, f64) {
    let d = |h: f64| (oracle_eval(e, x + h) - oracle_eval(e, x - h)) / (2.0 * h);
    let h = 1e-3;
    let r1 = (4.0 * d(h / 2.0) - d(h)) / 3.0;
    let r2 = (4.0 * d(h / 4.0) - d(h / 2.0)) / 3.0;
    ((16.0 * r2 - r1) / 15.0, (r2 - r1).abs())
}

fn random_expr(s: &mut Sampler, depth: usize) -> Expr {
    if depth == 0 || s.unit() < 0.2 {
        return if s.unit() < 0.6 {
            Expr::var()
        } else {
            Expr::constant((s.uniform(-3.0, 3.0) * 16.0).round() / 16.0)
        };
    }
    let guarded = |e: Expr| Expr::binary(BinaryOp::Add, Expr::pow(e, 2.0), Expr::constant(1.0));
    let mut sub = || random_expr(s, depth - 1);
    let a = sub();
    match (s.unit() * 13.0) as usize {
        0 => Expr::unary(UnaryOp::Neg, a),
        1 => Expr::unary(UnaryOp::Sin, a),
        2 => Expr::unary(UnaryOp::Cos, a),
        3 => Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, a)),
        4 => Expr::unary(UnaryOp::Log, guarded(a)),
        5 => Expr::unary(UnaryOp::Sqrt, guarded(a)),
        6 => Expr::binary(BinaryOp::Add, a, random_expr(s, depth - 1)),
        7 => Expr::binary(BinaryOp::Sub, a, random_expr(s, depth - 1)),
        8 | 9 => Expr::binary(BinaryOp::Mul, a, random_expr(s, depth - 1)),
        10 => Expr::binary(BinaryOp::Div, a, guarded(random_expr(s, depth - 1))),
        11 => Expr::pow(a, [2.0, 3.0, 4.0][(s.unit() * 3.0) as usize]),
        _ => Expr::spow(a, [3.0, 4.0, 5.5][(s.unit() * 3.0) as usize]),
    }
}

/// `|Df^n(x)|` as a plain product of one-step derivatives, with sign.
fn chain_product(m: &PiecewiseMap, x: f64, n: usize) -> Option<f64> {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..n {
        d *= m.deriv(y).ok()?;
        y = m.eval(y).ok()?;
    }
    Some(d)
}

/// Sup-ratio of `|Df^n|` over probe pairs in `iv`.
fn probe_pair_distortion(m: &PiecewiseMap, iv: Interval, n: usize, probes: usize) -> f64 {
    let d: Vec<f64> = (0..probes)
        .filter_map(|k| chain_product(m, iv.at((k as f64 + 0.5) / probes as f64), n))
        .map(f64::abs)
        .collect();
    let hi = d.iter().copied().fold(0.0, f64::max);
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Smallest mean of `log |4(1 - 2x)|` over length-`n` stretches (`n` in
/// `lo..=hi`) of logistic-4 periodic orbits of period `<= p_max` avoiding
/// `u`. Periodic points are `sin²(π j / (2^p ∓ 1))` from the conjugacy with
/// the doubling/tent map.
fn logistic4_periodic_rate(u: Interval, p_max: u32, lo: usize, hi: usize) -> f64 {
    let mut best = f64::INFINITY;
    for p in 1..=p_max {
        for den in [(1u64 << p) - 1, (1u64 << p) + 1] {
            for j in 1..den {
                let mut t = j;
                let mut logs = Vec::new();
                for _ in 0..p {
                    let x = (PI * t as f64 / den as f64).sin().powi(2);
                    if u.contains(x) {
                        logs.clear();
                        break;
                    }
                    logs.push((4.0 * (1.0 - 2.0 * x)).abs().ln());
                    t = 2 * t % den;
                }
                if logs.is_empty() {
                    continue;
                }
                for n in lo..=hi {
                    let s: f64 = (0..n).map(|k| logs[k % logs.len()]).sum();
                    best = best.min(s / n as f64);
                }
            }
        }
    }
    best.exp()
}

/// Regression value of the closed-form oracle above for `U = (0.4, 0.6)`,
/// periods up to 8 and stretches of 100..=200 steps.
const LOGISTIC4_LAMBDA: f64 = 1.983873628257867;

// ---------------------------------------------------------------- criteria

fn c1_symbolic_derivative() -> Outcome {
    let start = Instant::now();
    let mut s = Sampler::new(1);
    let (mut trees, mut rejected, mut worst) = (0, 0, 0.0_f64);
    let mut failures = 0;
    while trees < 1000 {
        let e = random_expr(&mut s, 4);
        let xs: Vec<f64> = (0..100).map(|_| s.uniform(0.05, 0.95)).collect();
        let refs: Vec<(f64, f64)> = xs.iter().map(|&x| richardson(&e, x)).collect();
        // keep trees whose values and oracle derivatives are moderate and
        // on which the oracle itself has converged
        let conditioned = xs.iter().zip(&refs).all(|(&x, &(fd, err))| {
            let v = oracle_eval(&e, x);
            v.is_finite() && v.abs() < 1e3 && fd.abs() < 1e4 && err <= 1e-7 * fd.abs().max(1.0)
        });
        if !conditioned {
            rejected += 1;
            continue;
        }
        trees += 1;
        let de = differentiate(&e);
        for (&x, &(fd, _)) in xs.iter().zip(&refs) {
            let d = de.eval(x).unwrap_or(f64::NAN);
            let rel = (d - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
            if !(rel <= 1e-5) {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        failures == 0 && secs < 10.0,
        format!("1000 trees x 100 points, {rejected} ill-conditioned trees redrawn, worst rel err {worst:.2e}, {failures} failures, {secs:.2} s"),
    )
}

fn c2_chain_rule() -> Outcome {
    let maps = [
        fixtures::logistic(3.9),
        fixtures::logistic(fixtures::FEIGENBAUM_A),
        fixtures::tent(),
        fixtures::doubling(),
        fixtures::fixed_like(),
        fixtures::neutral_core(),
    ];
    let mut s = Sampler::new(2);
    let (mut done, mut worst, mut bad) = (0, 0.0_f64, 0);
    while done < 100 {
        let m = &maps[(s.unit() * maps.len() as f64) as usize];
        let x = s.uniform(m.lo(), m.hi());
        let n = 1 + (s.unit() * 50.0) as usize;
        let Some(expected) = chain_product(m, x, n) else { continue };
        if expected == 0.0 || !expected.is_finite() {
            continue;
        }
        let dp = m.deriv_product(x, n).unwrap();
        let got = dp.sign * dp.log_abs.exp();
        let rel = (got - expected).abs() / expected.abs();
        worst = worst.max(rel);
        if !(rel <= 1e-9) {
            bad += 1;
        }
        done += 1;
    }
    (bad == 0, format!("100 triples, worst rel err {worst:.2e}"))
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(if x >= 0.0 { x.to_bits() + 1 } else { x.to_bits() - 1 })
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(if x > 0.0 { x.to_bits() - 1 } else { x.to_bits() + 1 })
}

/// Exact piecewise-linear map on `[0, 1]`, iterated as a one-sided limit:
/// `side` is +1 for approach from the right. At the turning or jump point
/// `1/2` the lateral value is taken.
struct Linear {
    /// Slope signs left and right of `1/2`.
    signs: [f64; 2],
    /// `f(1/2-)` and `f(1/2+)`.
    laterals: [f64; 2],
}

impl Linear {
    const TENT: Linear = Linear {
        signs: [1.0, -1.0],
        laterals: [1.0, 1.0],
    };
    const DOUBLING: Linear = Linear {
        signs: [1.0, 1.0],
        laterals: [1.0, 0.0],
    };

    /// Binary64 is exact for these steps on `[0, 1]`.
    fn step(&self, x: f64, side: f64) -> (f64, f64) {
        let right = x > 0.5 || (x == 0.5 && side > 0.0);
        let k = right as usize;
        let y = if x == 0.5 {
            self.laterals[k]
        } else if right && self.signs[1] > 0.0 {
            2.0 * x - 1.0
        } else if right {
            2.0 - 2.0 * x
        } else {
            2.0 * x
        };
        (y, side * self.signs[k])
    }

    fn run(&self, mut x: f64, mut side: f64, t: usize) -> f64 {
        for _ in 0..t {
            (x, side) = self.step(x, side);
        }
        x
    }

    /// Distance from `y` to the image of the domain endpoint `e`, taken
    /// from inside the domain (`side`). When `e` is only a rounded preimage
    /// the distance to the images of its two float neighbours is used.
    fn preimage_gap(&self, e: f64, side: f64, t: usize, y: f64) -> f64 {
        let exact = (self.run(e, side, t) - y).abs();
        let (a, b) = (self.run(next_down(e), 1.0, t), self.run(next_up(e), 1.0, t));
        exact.min(Interval::hull(a, b).distance_to(y))
    }
}

/// Full-Markov check against exact piecewise-linear iteration: each domain
/// endpoint must be a correctly rounded preimage of the matching endpoint
/// of `J`, and the reported image must have length `|J|` to 1e-6.
fn markov_check(ind: &InducedMap, map: &Linear) -> (bool, String) {
    let j = ind.base;
    let mut worst = 0.0_f64;
    for b in &ind.branches {
        let (ylo, yhi) = if b.orientation > 0.0 { (j.lo, j.hi) } else { (j.hi, j.lo) };
        let gap = map.preimage_gap(b.domain.lo, 1.0, b.time, ylo).max(map.preimage_gap(b.domain.hi, -1.0, b.time, yhi));
        worst = worst.max(gap / j.len()).max((b.image.len() / j.len() - 1.0).abs());
    }
    (
        worst <= 1e-6 && ind.coverage >= 0.95 && ind.full_markov(),
        format!("{} branches, coverage {:.4}, worst rel image err {worst:.1e}", ind.branches.len(), ind.coverage),
    )
}

fn c3_full_markov() -> Outcome {
    let d = fixtures::doubling();
    let (ok_d, msg_d) = markov_check(&first_return(&d, Interval::new(0.0, 0.5), 50).unwrap(), &Linear::DOUBLING);
    let t = fixtures::tent();
    let j = find_nice_interval(&t, 2.0 / 3.0, 0.1, 200).unwrap().expect("nice interval around 2/3");
    let nice = is_nice(&t, j, 200);
    let (ok_t, msg_t) = markov_check(&first_return(&t, j, 50).unwrap(), &Linear::TENT);
    (
        ok_d && ok_t && nice && j.contains(2.0 / 3.0),
        format!("doubling J=(0,0.5): {msg_d}; tent J=({:.6},{:.6}): {msg_t}", j.lo, j.hi),
    )
}

fn c4_koebe() -> Outcome {
    let m = fixtures::logistic(4.0);
    let mut s = Sampler::new(4);
    let (mut done, mut worst_ratio, mut bad) = (0, 0.0_f64, 0);
    while done < 50 {
        let n = 1 + (s.unit() * 4.0) as usize;
        let c = s.uniform(0.02, 0.98);
        let w = 10f64.powf(s.uniform(-3.0, -1.3));
        let t0 = Interval::new(c - w / 2.0, c + w / 2.0);
        if t0.lo <= 0.0 || t0.hi >= 1.0 {
            continue;
        }
        let (a, b) = (s.uniform(0.1, 0.45), s.uniform(0.55, 0.9));
        let j0 = Interval::new(t0.at(a), t0.at(b));
        let bound = match koebe_estimate(&m, t0, j0, n) {
            Ok(e) => e.bound,
            Err(InductionError::NotDiffeomorphic { .. }) => continue,
            Err(e) => return (false, format!("unexpected error {e}")),
        };
        let measured = probe_pair_distortion(&m, j0, n, 100);
        worst_ratio = worst_ratio.max(measured / bound);
        if !(measured <= bound) {
            bad += 1;
        }
        done += 1;
    }
    let t = fixtures::tent();
    let mut tent_ok = true;
    for k in 0..20 {
        let lo = 0.01 + 0.02 * k as f64;
        let t0 = Interval::new(lo, lo + 0.01);
        let j0 = Interval::new(lo + 0.0025, lo + 0.0075);
        let n = 1 + k % 4;
        if koebe_estimate(&t, t0, j0, n).is_ok() {
            tent_ok &= probe_pair_distortion(&t, j0, n, 100) == 1.0;
        }
    }
    let ret = first_return(&t, Interval::new(2.0 / 3.0 - 0.1, 2.0 / 3.0 + 0.1), 50).unwrap();
    tent_ok &= measure_distortion(&t, &ret, 10) == 1.0;
    (
        bad == 0 && tent_ok,
        format!("logistic-4: 50 instances, max measured/bound {worst_ratio:.3}; tent distortion exactly 1: {tent_ok}"),
    )
}

fn c5_nested_distortion() -> Outcome {
    let t = fixtures::tent();
    let d: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&l| {
            let ind = first_return(&t, Interval::new(2.0 / 3.0 - l / 2.0, 2.0 / 3.0 + l / 2.0), 50).unwrap();
            measure_distortion(&t, &ind, 20)
        })
        .collect();
    (
        d.windows(2).all(|w| w[1] <= w[0]),
        format!("distortions {d:?} (non-increasing; constant slope makes them all 1)"),
    )
}

fn c6_expansion() -> Outcome {
    let d = fixtures::doubling();
    let rd = expansion_analysis(&d, &first_return(&d, Interval::new(0.0, 0.5), 50).unwrap()).unwrap();
    let doubling_ok = rd.mode == ExpansionMode::UniformlyExpanding;

    let n = fixtures::neutral_core();
    let rn = expansion_analysis(&n, &first_return(&n, Interval::new(0.0, 1.0), 50).unwrap()).unwrap();
    let (core_ok, core_msg) = match &rn.mode {
        ExpansionMode::NeutralCore(core) => {
            let min = core.flank_min_expansion[core.chosen].unwrap_or(0.0);
            (core.valid && min > 3.0 && core.entry_bound_holds, format!("neutral core min |DF_l| {min:.3}"))
        }
        m => (false, format!("neutral core fixture gave {m:?}")),
    };

    // toy model, oracle: explicit branches a_n = g^{-n}(g(b)) and G' by direct iteration
    let (a, b, c) = (0.0, 0.1, 1.0);
    let toy = NeutralEntryModel::new(a, b, c);
    let g = |x: f64| x + c * (x - a) * (x - a);
    let g_inv = |y: f64| a + (-1.0 + (1.0 + 4.0 * c * (y - a)).sqrt()) / (2.0 * c);
    let j_len = g(b) - b;
    let eps = 2.0 * c * (b - a);
    let mut branches = Vec::new();
    let mut hi = b;
    for _ in 0..40 {
        let lo = g_inv(hi);
        branches.push((lo, hi));
        hi = lo;
    }
    let gprime = |x: f64, n: usize| {
        let (mut y, mut d) = (x, 1.0);
        for _ in 0..n {
            d *= 1.0 + 2.0 * c * (y - a);
            y = g(y);
        }
        d
    };
    let probes: Vec<(f64, f64)> = branches
        .iter()
        .enumerate()
        .flat_map(|(i, &(lo, hi))| (0..20).map(move |k| (lo + (hi - lo) * (k as f64 + 0.5) / 20.0, (i + 1) as f64)))
        .map(|(x, n)| (x, gprime(x, n as usize)))
        .collect();
    let k_dist = branches
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let ds: Vec<f64> = probes[i * 20..(i + 1) * 20].iter().map(|p| p.1).collect();
            ds.iter().copied().fold(0.0, f64::max) / ds.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(1.0, f64::max);
    let bound = j_len / (eps * k_dist * (b - a));
    let toy_ok = probes.iter().all(|p| p.1 >= bound) && toy.check(40, 20).holds;

    (
        doubling_ok && core_ok && toy_ok,
        format!("doubling {:?}, min |DF| {}; {core_msg}; toy bound {bound:.4} holds at {} probes: {toy_ok}", rd.mode, rd.min_expansion, probes.len()),
    )
}

fn c7_density() -> Outcome {
    let start = Instant::now();
    let m = fixtures::doubling();
    let ind = first_return(&m, Interval::new(0.0, 0.5), 50).unwrap();
    let mut s = Sampler::new(7);
    let mut dense = 0;
    for _ in 0..20 {
        let x = s.uniform(ind.base.lo, ind.base.hi);
        if let Ok(cover) = ind.omega_cover(&m, x, 1000, 1_000_000, 1e-3) {
            if cover.is_dense_in(ind.base, 1e-2) {
                dense += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        dense == 20 && secs < 60.0 && ind.coverage >= 1.0 - 1e-3,
        format!("coverage {:.6}, {dense}/20 covers 1e-2-dense, {secs:.2} s", ind.coverage),
    )
}

fn single<'a>(c: &'a Classification, kind: &str) -> Option<&'a intervaldyn::classifier::AttractorReport> {
    (c.reports.len() == 1 && c.reports[0].kind.name() == kind).then(|| &c.reports[0])
}

fn summary(c: &Classification) -> String {
    let names: Vec<&str> = c.reports.iter().map(|r| r.kind.name()).collect();
    format!("{names:?}")
}

fn c8_classification(runs: &[(&str, PiecewiseMap, Classification)]) -> Outcome {
    let mut ok = true;
    let mut msgs = Vec::new();
    for (name, m, c) in runs {
        let bounded = c.reports.len() <= c.report_bound(m);
        let pass = match *name {
            "logistic3.2" => single(c, "periodic_like").is_some_and(|r| r.basin_fraction >= 0.99),
            "tent" | "logistic4" => single(c, "interval_cycle").is_some(),
            "feigenbaum" => single(c, "cantor").is_some_and(|r| {
                let both = [LateralPoint::left(0.5), LateralPoint::right(0.5)]
                    .iter()
                    .all(|&v| recurrence_check(m, v, 20_000, 1e-3).unwrap_or(false));
                let flags = matches!(&r.kind, AttractorKind::Cantor { recurrent, .. } if recurrent.iter().all(|&b| b));
                both && flags && r.cover.max_cell_length() <= 1e-2
            }),
            _ => true,
        };
        ok &= pass && bounded;
        msgs.push(format!("{name} {} (bound ok: {bounded})", summary(c)));
    }
    (ok, msgs.join("; "))
}

fn c9_growth(runs: &[(&str, PiecewiseMap, Classification)], cfgs: &[ClassifyConfig]) -> Outcome {
    let mut ok = true;
    let mut msgs = Vec::new();
    for ((name, m, c), cfg) in runs.iter().zip(cfgs) {
        if *name != "tent" && *name != "logistic4" {
            continue;
        }
        let in_b0: Vec<usize> = c
            .reports
            .iter()
            .filter(|r| matches!(r.kind, AttractorKind::PeriodicLike { .. }))
            .flat_map(|r| r.sample_indices.iter().copied())
            .collect();
        let avoid: Vec<Interval> = m.exceptional().iter().map(|&p| Interval::new(p - 1e-3, p + 1e-3)).collect();
        let pts = uniform_points(cfg.seed, cfg.samples, m.lo(), m.hi());
        let outside: Vec<f64> = pts.iter().enumerate().filter(|(i, _)| !in_b0.contains(i)).map(|(_, &x)| x).collect();
        let good = outside
            .iter()
            .filter(|&&x| growth_test(m, x, &avoid, 10_000).status != GrowthStatus::Bounded)
            .count();
        let frac = good as f64 / outside.len() as f64;
        ok &= outside.len() >= 990 && frac >= 0.99;
        msgs.push(format!("{name}: {good}/{} not bounded", outside.len()));
    }
    (ok, msgs.join("; "))
}

fn c10_mane() -> Outcome {
    let u = Interval::new(0.4, 0.6);
    let oracle = logistic4_periodic_rate(u, 8, 100, 200);
    let frozen_ok = (oracle - LOGISTIC4_LAMBDA).abs() <= 1e-12;

    let cfg = ManeConfig::default();
    let l4 = mane_certificate(&fixtures::logistic(4.0), &[u], &cfg).unwrap();
    let l4_ok = l4.valid && l4.lambda > 1.0 && (l4.lambda - LOGISTIC4_LAMBDA).abs() <= 0.05 * LOGISTIC4_LAMBDA;

    let a = 3.2_f64;
    let disc = ((a - 3.0) * (a + 1.0)).sqrt();
    let cycle = [(a + 1.0 - disc) / (2.0 * a), (a + 1.0 + disc) / (2.0 * a)];
    let l32 = mane_certificate(&fixtures::logistic(a), &[u], &cfg).unwrap();
    // the cycle point inside U is exempt
    let listed = cycle
        .iter()
        .filter(|&&q| !u.contains(q))
        .all(|&q| l32.periodic_violations.iter().any(|p| p.period == 2 && (p.point - q).abs() <= 1e-6));
    let l32_ok = !l32.valid && listed;

    let d = mane_certificate(&fixtures::doubling(), &[u], &cfg).unwrap();
    let d_ok = d.valid && (d.lambda - 2.0).abs() <= 1e-9 && (d.c - 1.0).abs() <= 1e-9;
    (
        frozen_ok && l4_ok && l32_ok && d_ok,
        format!(
            "logistic-4 lambda {} vs oracle {LOGISTIC4_LAMBDA} (C {:.4}, valid {}); 3.2 invalid with 2-cycle {cycle:?} listed: {l32_ok}; doubling lambda {} C {}",
            l4.lambda, l4.c, l4.valid, d.lambda, d.c
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Option<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_intervaldyn")).args(args).arg("--out").arg(out).output().ok()?;
    if !status.status.success() {
        return None;
    }
    std::fs::read(out.join("report.json")).ok()
}

fn c11_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("fixtures directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut bad = Vec::new();
    let mut runs = 0;
    for f in &files {
        let map = f.to_str().unwrap();
        for cmd in [
            vec!["analyze", "--map", map],
            vec!["classify", "--map", map, "--samples", "300", "--seed", "11"],
        ] {
            let outs: Vec<Option<Vec<u8>>> = (0..2)
                .map(|_| {
                    let tmp = tempfile::tempdir().unwrap();
                    run_cli(&cmd, tmp.path())
                })
                .collect();
            runs += 1;
            if outs[0].is_none() || outs[0] != outs[1] {
                bad.push(format!("{} {}", cmd[0], f.file_name().unwrap().to_string_lossy()));
            }
        }
    }
    (
        bad.is_empty() && !files.is_empty(),
        format!("{} fixtures, {runs} command pairs, mismatches {bad:?}", files.len()),
    )
}

fn main() {
    let mut all_ok = true;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let (ok, msg) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(_) => (false, "panicked".to_string()),
        };
        all_ok &= ok;
        println!(
            "criterion {id:>2} {} {name}: {msg} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };

    report(1, "symbolic derivative", &mut c1_symbolic_derivative);
    report(2, "chain rule", &mut c2_chain_rule);
    report(3, "full-Markov return maps", &mut c3_full_markov);
    report(4, "Koebe soundness", &mut c4_koebe);
    report(5, "nested base distortion", &mut c5_nested_distortion);
    report(6, "expansion certificates", &mut c6_expansion);
    report(7, "induced orbit density", &mut c7_density);

    let specs: Vec<(&str, PiecewiseMap, ClassifyConfig)> = vec![
        ("logistic3.2", fixtures::logistic(3.2), ClassifyConfig::default()),
        ("tent", fixtures::tent(), ClassifyConfig::default()),
        (
            "logistic4",
            fixtures::logistic(4.0),
            ClassifyConfig {
                length: 50_000,
                ..ClassifyConfig::default()
            },
        ),
        ("feigenbaum", fixtures::logistic(fixtures::FEIGENBAUM_A), ClassifyConfig::default()),
    ];
    let cfgs: Vec<ClassifyConfig> = specs.iter().map(|s| s.2.clone()).collect();
    let runs: Vec<(&str, PiecewiseMap, Classification)> = specs
        .into_iter()
        .map(|(name, m, cfg)| {
            let c = classify_attractors(&m, &cfg).expect("classification");
            (name, m, c)
        })
        .collect();
    report(8, "attractor classification", &mut || c8_classification(&runs));
    report(9, "derivative growth off B0", &mut || c9_growth(&runs, &cfgs));
    report(10, "expansion away from C_f", &mut c10_mane);
    report(11, "deterministic reports", &mut c11_determinism);

    if !all_ok {
        std::process::exit(1);
    }
}
