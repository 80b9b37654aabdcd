//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line with
//! the measured margins, then asserts. Run with `--nocapture` to see them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use pagc_core::birthproc::{laplace_a, laplace_c};
use pagc_core::exec::Execution;
use pagc_core::ibrw::gw::{gw_extinction, gw_growth_check, gw_survival_bound_check, OffspringLaw};
use pagc_core::ibrw::{estimate_survival, ParticleType, RootLocation, StopPolicy};
use pagc_core::netgen::{generate, theta_curve, GenMode};
use pagc_core::rules::AttachmentRule;
use pagc_core::seed::SeedStream;
use pagc_core::spectral::{
    beta_c, chain_check_beta, chain_check_gamma, cor_beta_constant, cor_gamma_constant, gamma_c, minimize_alpha,
    rho_derivatives_linear, rho_linear, thm1_constant, thm2_constant,
};
use pagc_core::spine::fit::{fit_decay, FitMode};
use pagc_core::spine::tube::{tube_probability, GaussianWalk, TubeEstimator, TubeSpec};
use pagc_core::spine::zeta::zeta_upper_bound;
use pagc_core::spine::{SpineModel, SpineState};
use pagc_core::stats::Moments;
use pagc_core::validation::spine_batch_moments;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn verdict(n: u32, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {n}: {} {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {n} failed: {}", detail.as_ref());
}

/// Perron root of `[[a, b], [c, b]]` by the quadratic formula.
fn perron(gamma: f64, beta: f64, alpha: f64) -> f64 {
    let a = beta / (alpha - gamma);
    let b = beta / (1.0 - gamma - alpha);
    let c = (beta + gamma) / (alpha - gamma);
    let (tr, det) = (a + b, a * b - b * c);
    0.5 * (tr + (tr * tr - 4.0 * det).sqrt())
}

/// Richardson-extrapolated central second difference.
fn second_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn first_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn criterion_01_series_closed_form() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let g = 0.45 * i as f64 / 9.0;
        for j in 0..10 {
            let b = 0.05 + 0.95 * j as f64 / 9.0;
            let rule = AttachmentRule::linear(g, b);
            for l in 0..10 {
                let a = g + (1.0 - 2.0 * g) * (0.02 + 0.96 * l as f64 / 9.0);
                worst = worst.max((laplace_a(&rule, a, 1e-12).unwrap() - b / (a - g)).abs());
                worst = worst.max((laplace_c(&rule, a, 1e-12).unwrap() - (b + g) / (a - g)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(1, worst <= 1e-8 && secs < 5.0, format!("max error {worst:.2e} (tol 1e-8), {secs:.3} s (limit 5 s)"));
}

#[test]
fn criterion_02_criticality_table() {
    let r1 = rho_linear(0.0, 0.25, 0.5).unwrap();
    let r2 = rho_linear(0.25, 1.0 / 12.0, 0.5).unwrap();
    let o1 = perron(0.0, 0.25, 0.5);
    let o2 = perron(0.25, 1.0 / 12.0, 0.5);
    let exact = beta_c(0.0).unwrap() == 0.25 && gamma_c(0.25).unwrap() == 0.0;
    let mut round_trip: f64 = 0.0;
    for i in 1..=200 {
        let b = 0.25 * i as f64 / 200.0;
        round_trip = round_trip.max((beta_c(gamma_c(b).unwrap()).unwrap() - b).abs());
    }
    let e = (r1 - 1.0).abs().max((r2 - 1.0).abs()).max((o1 - 1.0).abs()).max((o2 - 1.0).abs());
    verdict(
        2,
        e <= 1e-10 && exact && round_trip <= 1e-12,
        format!("|rho(1/2) - 1| = {e:.1e} (tol 1e-10), exact endpoints {exact}, round trip {round_trip:.1e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_03_second_derivative() {
    let mut worst_fd: f64 = 0.0;
    for i in 0..9 {
        let g = 0.05 * i as f64;
        for j in 0..10 {
            let b = 0.05 + 0.95 * j as f64 / 9.0;
            let closed = rho_derivatives_linear(g, b).unwrap().1;
            let h = 0.002 * (0.5 - g);
            let fd = second_diff(|a| perron(g, b, a), 0.5, h);
            worst_fd = worst_fd.max((closed - fd).abs());
        }
    }
    let mut worst_crit: f64 = 0.0;
    for i in 0..=45 {
        let g = 0.01 * i as f64;
        let bc = beta_c(g).unwrap();
        worst_crit = worst_crit.max((rho_derivatives_linear(g, bc).unwrap().1 - 2.0 / bc).abs());
    }
    verdict(
        3,
        worst_fd <= 1e-6 && worst_crit <= 1e-8,
        format!("closed vs finite difference {worst_fd:.2e} (tol 1e-6), critical line vs 2/beta_c {worst_crit:.2e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_04_spine_moments() {
    let start = Instant::now();
    let samples = 1_000_000usize;
    let seeds = SeedStream::new(2024, "acceptance-spine");
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, (g, b)) in [(0.0, 0.5), (0.25, 1.0 / 12.0), (0.2, 0.4)].into_iter().enumerate() {
        let rule = AttachmentRule::linear(g, b);
        let alpha = minimize_alpha(&rule, 1e-12).unwrap().alpha_star;
        let model = SpineModel::new(&rule, alpha).unwrap();
        let target = second_diff(|a| perron(g, b, a), alpha, 0.002 * (0.5 - g)) / perron(g, b, alpha);
        let stream = seeds.substream(i as u64);
        if g == 0.0 {
            // one type: increments are i.i.d., so single steps are the moments
            let mut rng = stream.rng(0);
            let (mut m1, mut m2) = (Moments::default(), Moments::default());
            let s0 = SpineState::new(0.0, ParticleType::Left);
            for _ in 0..samples {
                let d = model.step(&s0, 0.7, &mut rng).unwrap().s;
                m1.push(d);
                m2.push(d * d);
            }
            let z1 = m1.mean.abs() / m1.std_error();
            let z2 = (m2.mean - target).abs() / m2.std_error();
            pass &= z1 <= 3.0 && z2 <= 3.0;
            lines.push(format!("[g={g} b={b}] E[dS] {:.4} ({z1:.2} SE), E[dS^2] {:.4} vs {target:.4} ({z2:.2} SE)", m1.mean, m2.mean));
        } else {
            // two types: per-step moments depend on the type, so the stationary
            // mean and the long-run variance per step are compared
            let steps = 200;
            let chains = samples / steps;
            let m = spine_batch_moments(&model, chains, steps, &stream, Execution::Parallel);
            let n = steps as f64;
            let (mean, se_mean) = (m.mean / n, m.std_error() / n);
            let var = m.variance() / n;
            let se_var = var * (2.0 / (chains as f64 - 1.0)).sqrt();
            let (z1, z2) = (mean.abs() / se_mean, (var - target).abs() / se_var);
            let from_left = model.one_step_moments(ParticleType::Left).1;
            pass &= z1 <= 3.0 && z2 <= 3.0;
            lines.push(format!(
                "[g={g} b={b:.4}] stationary E[dS] {mean:.4} ({z1:.2} SE), Var(S_n)/n {var:.4} vs {target:.4} ({z2:.2} SE); one step from Left E[dS^2] = {from_left:.4}"
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    verdict(4, pass, format!("{}; {secs:.1} s", lines.join("; ")));
}

/// Exact law of the edge set of `G_n`, keyed by an edge bitmask.
fn exact_graph_law(f: &dyn Fn(u32) -> f64, n: u32) -> HashMap<u64, f64> {
    fn grow(f: &dyn Fn(u32) -> f64, n: u32, t: u32, deg: &mut Vec<u32>, mask: u64, prob: f64, out: &mut HashMap<u64, f64>) {
        if t == n {
            *out.entry(mask).or_default() += prob;
            return;
        }
        // vertex t + 1 arrives; choose its targets among 1..=t
        for subset in 0u64..(1 << t) {
            let mut p = prob;
            let mut m2 = mask;
            for m in 1..=t {
                let q = f(deg[m as usize - 1]) / t as f64;
                if subset >> (m - 1) & 1 == 1 {
                    p *= q;
                    m2 |= 1 << edge_bit(t + 1, m);
                } else {
                    p *= 1.0 - q;
                }
            }
            if p == 0.0 {
                continue;
            }
            for m in 1..=t {
                if subset >> (m - 1) & 1 == 1 {
                    deg[m as usize - 1] += 1;
                }
            }
            grow(f, n, t + 1, deg, m2, p, out);
            for m in 1..=t {
                if subset >> (m - 1) & 1 == 1 {
                    deg[m as usize - 1] -= 1;
                }
            }
        }
    }
    let mut out = HashMap::new();
    grow(f, n, 1, &mut vec![0; n as usize], 0, 1.0, &mut out);
    out
}

fn edge_bit(u: u32, m: u32) -> u32 {
    (u - 1) * (u - 2) / 2 + (m - 1)
}

#[test]
fn criterion_05_generator_exactness() {
    let cases: Vec<(AttachmentRule, Box<dyn Fn(u32) -> f64>)> = vec![
        (AttachmentRule::linear(0.0, 0.5), Box::new(|_| 0.5)),
        (AttachmentRule::linear(0.25, 0.25), Box::new(|d| 0.25 + 0.25 * d as f64)),
        (AttachmentRule::table(vec![0.4, 0.7, 0.9], 0.1), Box::new(|d| match d {
            0 => 0.4,
            1 => 0.7,
            k => 0.9 + 0.1 * (k - 2) as f64,
        })),
    ];
    let samples = 1_000_000usize;
    let chunks = 100usize;
    let mut lines = Vec::new();
    let mut pass = true;
    for (ci, (rule, f)) in cases.iter().enumerate() {
        for n in [4u32, 6] {
            let law = exact_graph_law(f.as_ref(), n);
            let seeds = SeedStream::new(77, "acceptance-generator").substream((ci * 10 + n as usize) as u64);
            let counts = Execution::Parallel
                .map(chunks, |c| {
                    let mut rng = seeds.rng(c as u64);
                    let mut h: HashMap<u64, u64> = HashMap::new();
                    for _ in 0..samples / chunks {
                        let g = generate(rule, n, &mut rng, GenMode::Fast).unwrap();
                        let mask = g.edges.iter().fold(0u64, |acc, &(u, m)| acc | 1 << edge_bit(u, m));
                        *h.entry(mask).or_default() += 1;
                    }
                    h
                })
                .into_iter()
                .fold(HashMap::new(), |mut acc: HashMap<u64, u64>, h| {
                    for (k, v) in h {
                        *acc.entry(k).or_default() += v;
                    }
                    acc
                });
            let impossible = counts.keys().filter(|k| !law.contains_key(k)).count();
            // pool outcomes with expected count below 5
            let (mut stat, mut bins) = (0.0, 0usize);
            let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
            for (k, p) in &law {
                let e = p * samples as f64;
                let o = *counts.get(k).unwrap_or(&0) as f64;
                if e < 5.0 {
                    pooled_e += e;
                    pooled_o += o;
                } else {
                    stat += (o - e).powi(2) / e;
                    bins += 1;
                }
            }
            if pooled_e > 0.0 {
                stat += (pooled_o - pooled_e).powi(2) / pooled_e;
                bins += 1;
            }
            let pval = ChiSquared::new((bins - 1) as f64).unwrap().sf(stat);
            pass &= impossible == 0 && pval > 0.01;
            lines.push(format!("[{rule} n={n}] {bins} bins, p = {pval:.3}"));
        }
    }

    // degree summaries at n = 1000, fast against naive
    let rule = AttachmentRule::linear(0.25, 0.5);
    let reps = 200;
    let summary = |mode: GenMode, tag: &str| {
        let s = SeedStream::new(78, tag);
        let rows = Execution::Parallel.map(reps, |i| {
            let g = generate(&rule, 1000, &mut s.rng(i as u64), mode).unwrap();
            let n = g.indegree.len() as f64;
            let zero = g.indegree.iter().filter(|&&d| d == 0).count() as f64 / n;
            let mean = g.indegree.iter().map(|&d| d as f64).sum::<f64>() / n;
            let max = *g.indegree.iter().max().unwrap() as f64;
            [zero, mean, max]
        });
        (0..3).map(|j| rows.iter().map(|r| r[j]).collect::<Moments>()).collect::<Vec<_>>()
    };
    let fast = summary(GenMode::Fast, "fast");
    let naive = summary(GenMode::Naive, "naive");
    for (j, name) in ["zero share", "mean indegree", "max indegree"].iter().enumerate() {
        let (a, b) = (&fast[j], &naive[j]);
        let z = (a.mean - b.mean).abs() / (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
        // two-sided p > 0.01
        pass &= z < 2.5758;
        lines.push(format!("n=1000 {name}: fast {:.4} naive {:.4} (|z| = {z:.2})", a.mean, b.mean));
    }
    verdict(5, pass, lines.join("; "));
}

#[test]
fn criterion_06_07_cross_engine_and_critical_point() {
    let start = Instant::now();
    let rule = AttachmentRule::linear(0.0, 0.5);
    let graph = theta_curve(&rule, 100_000, &[0.3, 0.8, 1.0], 200, &SeedStream::new(6, "acceptance-graph"), Execution::Parallel)
        .unwrap();
    let seeds = SeedStream::new(6, "acceptance-ibrw");
    let mut pass6 = true;
    let mut lines = Vec::new();
    for gp in graph.iter().filter(|g| g.p >= 0.8) {
        let e = estimate_survival(&rule, gp.p, RootLocation::Exponential, 10_000, StopPolicy::default(), &seeds, Execution::Parallel)
            .unwrap();
        let gap = (gp.mean_fraction - e.estimate).abs();
        let allowed = 0.5 * (gp.ci_high - gp.ci_low) + 0.5 * (e.ci.high - e.ci.low);
        pass6 &= gap <= allowed;
        lines.push(format!("p={}: graph {:.4} ibrw {:.4} |diff| {gap:.4} <= {allowed:.4}", gp.p, gp.mean_fraction, e.estimate));
    }
    let secs = start.elapsed().as_secs_f64();
    pass6 &= secs < 600.0;
    lines.push(format!("{secs:.1} s"));

    let star = minimize_alpha(&rule, 1e-12).unwrap();
    let p_c = 1.0 / star.rho_star.upper;
    let low = graph[0].mean_fraction;
    let high = graph[1].mean_fraction;
    let pass7 = low < 0.01 && high > 0.1 && (p_c - 0.5).abs() < 1e-12;
    println!("criterion 7: {} p_c = {p_c}, theta(0.3) = {low:.5} (< 0.01), theta(0.8) = {high:.4} (> 0.1)",
        if pass7 { "PASS" } else { "FAIL" });
    verdict(6, pass6, lines.join("; "));
    assert!(pass7, "criterion 7 failed");
}

#[test]
fn criterion_08_mogulskii_rate() {
    let walk = GaussianWalk { sigma: 1.0, start: 0.0 };
    let est = TubeEstimator::Splitting { population: 2000, runs: 10 };
    let seeds = SeedStream::new(8, "acceptance-tube");
    let k = 2500;
    let w = 1.5;
    let wide = tube_probability(&walk, &TubeSpec::constant(w, k), est, &seeds.substream(0), Execution::Parallel).unwrap();
    let narrow = tube_probability(&walk, &TubeSpec::constant(w / 2.0, k), est, &seeds.substream(1), Execution::Parallel).unwrap();
    let limit = -PI * PI / (2.0 * w * w);
    let rel = (wide.rate_empirical / limit - 1.0).abs();
    let ratio = narrow.rate_empirical / wide.rate_empirical;
    verdict(
        8,
        rel <= 0.15 && (ratio / 4.0 - 1.0).abs() <= 0.2,
        format!(
            "w={w}: rate {:.4} vs {limit:.4} ({:.1}% off, tol 15%); w={}: rate {:.4}; ratio {ratio:.3} (4 within 20%)",
            wide.rate_empirical,
            100.0 * rel,
            w / 2.0,
            narrow.rate_empirical
        ),
    );
}

#[test]
fn criterion_09_galton_watson() {
    let q2 = gw_extinction(&OffspringLaw::poisson(2.0).unwrap(), 1e-15).unwrap();
    let mut oracle = 0.0f64;
    for _ in 0..5000 {
        oracle = (2.0 * (oracle - 1.0)).exp();
    }
    let mut pass = (q2 - oracle).abs() <= 1e-6 && (q2 - 0.203188).abs() <= 1e-6;
    let mut laws = vec![OffspringLaw::poisson(1.2).unwrap(), OffspringLaw::poisson(2.0).unwrap(), OffspringLaw::poisson(5.0).unwrap()];
    for (p0, big) in [(0.2, 30usize), (0.5, 2_000), (0.7, 40_000)] {
        let mut pmf = vec![0.0; big + 1];
        pmf[0] = p0;
        pmf[2] = 0.5 * (1.0 - p0);
        pmf[big] = 0.5 * (1.0 - p0);
        laws.push(OffspringLaw::general(pmf, 0.0).unwrap());
    }
    let mut points = 0;
    let mut worst = f64::NEG_INFINITY;
    for law in &laws {
        let q = gw_extinction(law, 1e-15).unwrap();
        let r_max = q.min(0.125);
        for r in [0.001, 0.01, 0.05, 0.1, 0.125, 0.25 * r_max, 0.5 * r_max, r_max] {
            if r > r_max {
                continue;
            }
            let c = gw_survival_bound_check(law, r).unwrap();
            // independent right-hand side
            let cut = (1.0 / (r * r)).floor() as usize;
            let mass: f64 = law.pmf.iter().enumerate().filter(|(k, _)| *k >= 1 && *k <= cut).map(|(_, p)| p).sum();
            let rhs = (1.0 - law.pmf[0]) - 2.0 * mass / (r * r) - 2.0 * r;
            let scale = 1.0 + 2.0 * mass / (r * r);
            pass &= (rhs - c.rhs).abs() < 1e-12 * scale && 1.0 - q >= rhs - 1e-12 * scale;
            worst = worst.max(rhs - (1.0 - q));
            points += 1;
        }
    }
    let growth = gw_growth_check(
        &OffspringLaw::poisson(20.0).unwrap(),
        2.0,
        0.5,
        8,
        20_000,
        &SeedStream::new(9, "acceptance-gw"),
        Execution::Parallel,
    )
    .unwrap();
    let excess = growth.iter().map(|g| g.conditional - 0.5f64.powi(g.n as i32)).skip(1).fold(f64::NEG_INFINITY, f64::max);
    pass &= excess <= 0.0;
    verdict(
        9,
        pass,
        format!("q(Poisson(2)) = {q2:.9} (oracle {oracle:.9}); {points} (law, r) points, max rhs - lhs {worst:.3e}; growth max excess {excess:.3e}"),
    );
}

#[test]
fn criterion_10_decay_constants() {
    // (a) synthetic
    let mut worst_a: f64 = 0.0;
    for c in [0.3, 1.0, 2.2214, 5.0] {
        let pts: Vec<(f64, f64)> = (1..=10).map(|i| (0.03 * i as f64, (0.4 - c / (0.03 * i as f64).sqrt()).exp())).collect();
        worst_a = worst_a.max((fit_decay(&pts, FitMode::Percolation).unwrap().slope + c).abs());
    }
    let pass_a = worst_a < 1e-9;

    // (b) reachable window
    let rule = AttachmentRule::linear(0.0, 0.5);
    let seeds = SeedStream::new(10, "acceptance-decay");
    let p_c = 0.5;
    let mut pts = Vec::new();
    for p in [0.55, 0.6, 0.65, 0.7, 0.75, 0.8] {
        let e = estimate_survival(&rule, p, RootLocation::Exponential, 10_000, StopPolicy::default(), &seeds, Execution::Parallel)
            .unwrap();
        pts.push((p - p_c, e.estimate));
    }
    let fit = fit_decay(&pts, FitMode::Percolation).unwrap();
    let thm1 = thm1_constant(&rule, 1e-12).unwrap();
    let target = -PI / 2f64.sqrt();
    let ratio = fit.slope / target;
    let pass_b = fit.r2 > 0.9 && fit.slope < 0.0 && (1.0 / 3.0..=3.0).contains(&ratio) && (thm1.lower - target).abs() < 1e-9;

    // (c) corollary values and the expansion chain
    let cb = cor_beta_constant(0.0).unwrap();
    let cg = cor_gamma_constant(0.25).unwrap();
    let mut err_c = (cb + PI / 2.0).abs().max((cg + PI / (2.0 * (9.0f64 / 16.0).powf(0.25))).abs());
    for g in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let bc = 0.25 * (1.0 - 2.0 * g) * (1.0 - 2.0 * g) / (1.0 - g);
        let limit = AttachmentRule::linear(g, bc);
        let t2 = thm2_constant(&limit, 1e-12).unwrap();
        let d = first_diff(|b| perron(g, b, 0.5), bc, 1e-3 * bc);
        let chain = t2.lower / d.sqrt();
        err_c = err_c.max((chain - (-PI / (2.0 * (1.0 - g).sqrt()))).abs());
        err_c = err_c.max(chain_check_beta(g).unwrap().max_error());
    }
    for b in [0.05, 0.1, 0.2, 0.25] {
        let gc = gamma_c(b).unwrap();
        let limit = AttachmentRule::linear(gc, b);
        let t2 = thm2_constant(&limit, 1e-12).unwrap();
        let d = first_diff(|g| perron(g, b, 0.5), gc, 1e-4);
        let chain = t2.lower / d.sqrt();
        err_c = err_c.max((chain - (-PI / (2.0 * (b * b + 2.0 * b).powf(0.25)))).abs());
        err_c = err_c.max(chain_check_gamma(b).unwrap().max_error());
    }
    let pass_c = err_c <= 1e-9;
    verdict(
        10,
        pass_a && pass_b && pass_c,
        format!(
            "(a) synthetic slope error {worst_a:.1e}; (b) slope {:.4} vs {target:.4} (ratio {ratio:.3}), r2 {:.4}, {} points; (c) max error {err_c:.1e}",
            fit.slope, fit.r2, fit.points_used
        ),
    );
}

#[test]
fn criterion_11_zeta_bound() {
    let rule = AttachmentRule::linear(0.0, 0.5);
    let seeds = SeedStream::new(11, "acceptance-zeta");
    let s0 = -1.0;
    let mut pass = true;
    let mut lines = Vec::new();
    let mut tested = 0;
    for p in [0.9, 0.7, 0.55] {
        let mc = estimate_survival(&rule, p, RootLocation::Fixed(s0), 10_000, StopPolicy::default(), &seeds, Execution::Parallel)
            .unwrap();
        let mut tightest = f64::INFINITY;
        for alpha in [0.5, 0.45] {
            for (k, n, b0, slope) in [(10usize, 1usize, 20.0, 0.0), (5, 4, 12.0, 0.1), (20, 2, 30.0, 0.2), (4, 3, 8.0, 0.0)] {
                let sched: Vec<f64> = (0..k * n).map(|i| b0 - slope * i as f64).collect();
                let z = zeta_upper_bound(&rule, p, alpha, s0, k, n, &sched, 20_000, &seeds.substream(tested), Execution::Parallel)
                    .unwrap();
                pass &= z.bound >= mc.estimate;
                tightest = tightest.min(z.bound);
                tested += 1;
            }
        }
        lines.push(format!("p={p}: MC zeta {:.4}, smallest bound {tightest:.4}", mc.estimate));
    }
    verdict(11, pass, format!("{tested} points; {}", lines.join("; ")));
}
