use std::fs;

use pagc_core::exec::Execution;
use pagc_core::ibrw::gw::{gw_extinction, gw_growth_check, gw_survival_bound_check};
use pagc_core::ibrw::estimate_survival;
use pagc_core::netgen::{
    edge_uniforms, generate, indegree_tail_slope, largest_component, largest_component_percolated, theta_curve,
    Graph, PercolationSample, ThetaPoint,
};
use pagc_core::rules::AttachmentRule;
use pagc_core::seed::SeedStream;
use pagc_core::spectral::{
    critical_line_beta, critical_line_gamma, family_profile, interior_grid, minimize_alpha, rho, rho2_star,
    thm1_constant, thm2_constant,
};
use pagc_core::spine::fit::{fit_decay, FitMode};
use pagc_core::spine::tube::{tube_probability, GaussianWalk, SpineWalk, TubeEstimate, TubeEstimator, TubeSpec, Walk};
use pagc_core::spine::{SpineModel, SpineState};
use pagc_core::ibrw::ParticleType;
use pagc_core::validation::run_checks;
use serde::Serialize;

use crate::config::{Engine, ExperimentConfig, TubeWalk};
use crate::output::{num, read_csv, Output};
use crate::CliError;

pub fn spectral_table(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let rule = &cfg.rule;
    let grid = if cfg.alpha_grid.is_empty() { interior_grid(rule.gamma(), cfg.alpha_points) } else { cfg.alpha_grid.clone() };
    let mut rows = Vec::new();
    for &a in &grid {
        // a bad point is flagged and the table goes on
        rows.push(match rho(rule, a, cfg.tol) {
            Ok(b) => vec!["grid".into(), num(a), num(b.lower), num(b.upper), "ok".into()],
            Err(e) => vec!["grid".into(), num(a), String::new(), String::new(), format!("DomainError: {e}")],
        });
    }
    let star = minimize_alpha(rule, cfg.tol)?;
    let r2 = rho2_star(rule, &star, cfg.tol)?;
    let (a_lo, a_hi) = (star.alpha_star_lower.min(star.alpha_star), star.alpha_star_lower.max(star.alpha_star));
    rows.push(vec!["alpha_star".into(), num(star.alpha_star), num(a_lo), num(a_hi), "ok".into()]);
    rows.push(vec!["rho_star".into(), num(star.alpha_star), num(star.rho_star.lower), num(star.rho_star.upper), "ok".into()]);
    rows.push(vec!["rho2_star".into(), num(star.alpha_star), num(r2.lower), num(r2.upper), "ok".into()]);
    let (pc_lo, pc_hi) = (1.0 / star.rho_star.upper, 1.0 / star.rho_star.lower);
    let status = if pc_lo > 1.0 { "subcritical" } else { "ok" };
    rows.push(vec!["p_c".into(), num(star.alpha_star), num(pc_lo), num(pc_hi.min(1.0).max(pc_lo)), status.into()]);
    out.derive("alpha_star", star.alpha_star);
    out.derive("rho_star", star.rho_star);
    out.derive("rho2_star", r2);
    out.derive("p_c", [pc_lo, pc_hi]);
    match thm1_constant(rule, cfg.tol) {
        Ok(c) => {
            rows.push(vec!["thm1_constant".into(), num(star.alpha_star), num(c.lower), num(c.upper), "ok".into()]);
            out.derive("thm1_constant", c);
        }
        Err(e) => rows.push(vec!["thm1_constant".into(), num(star.alpha_star), String::new(), String::new(), e.to_string()]),
    }
    out.csv(
        "spectral_table.csv",
        "alpha dimensionless; rho is a spectral radius (dimensionless); lower/upper bracket the value",
        &["kind", "alpha", "lower", "upper", "status"],
        &rows,
    )
}

pub fn critical_line(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for p in critical_line_gamma(&cfg.gammas)? {
        rows.push(vec!["beta_c".into(), num(p.gamma), num(p.beta)]);
    }
    for p in critical_line_beta(&cfg.betas)? {
        rows.push(vec!["gamma_c".into(), num(p.gamma), num(p.beta)]);
    }
    out.csv(
        "critical_line.csv",
        "gamma and beta are rule parameters (dimensionless)",
        &["solved_for", "gamma", "beta"],
        &rows,
    )
}

pub fn generate_graph(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let g = generate(&cfg.rule, cfg.n, &mut seeds.rng(0), cfg.gen_mode)?;
    out.derive("edges", g.edges.len());
    out.derive("max_indegree", g.indegree.iter().max().copied().unwrap_or(0));
    out.derive("indegree_tail_slope", indegree_tail_slope(&g));
    out.derive("largest_component", largest_component(&g));
    out.text("graph.txt", &g.to_edge_list())
}

pub fn percolate(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let g = match &cfg.graph_input {
        Some(path) => Graph::from_edge_list(&fs::read_to_string(path)?)?,
        None => generate(&cfg.rule, cfg.n, &mut seeds.rng(0), cfg.gen_mode)?,
    };
    // one uniform per edge, shared by every p
    let u = edge_uniforms(&g, &mut seeds.substream(1).rng(0));
    let rows: Vec<Vec<String>> = cfg
        .p_grid
        .iter()
        .map(|&p| {
            let s = largest_component_percolated(&g, &PercolationSample::from_uniforms(&u, p));
            vec![num(p), s.largest_size.to_string(), num(s.fraction), s.second_largest.to_string(), s.component_count.to_string()]
        })
        .collect();
    out.derive("n", g.n);
    out.derive("edges", g.edges.len());
    out.csv(
        "percolation.csv",
        "p is a retention probability; sizes are vertex counts; fraction = largest_size / n",
        &["p", "largest_size", "fraction", "second_largest", "component_count"],
        &rows,
    )
}

#[derive(Debug, Clone, Copy)]
struct IbrwPoint {
    estimate: f64,
    low: f64,
    high: f64,
    ambiguous: usize,
}

pub fn theta(cfg: &ExperimentConfig, engine: Engine, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let exec = cfg.exec();
    let graph: Vec<Result<ThetaPoint, String>> = if engine == Engine::Ibrw {
        Vec::new()
    } else {
        // each point gets its own run so that one failure does not hide the rest
        cfg.p_grid
            .iter()
            .map(|&p| {
                theta_curve(&cfg.rule, cfg.n, &[p], cfg.replicas, &seeds.substream(0), exec)
                    .map(|v| v[0])
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let ibrw: Vec<Result<IbrwPoint, String>> = if engine == Engine::Graph {
        Vec::new()
    } else {
        cfg.p_grid
            .iter()
            .map(|&p| {
                estimate_survival(&cfg.rule, p, cfg.root, cfg.ibrw_replicas, cfg.stop_policy(), &seeds.substream(1), exec)
                    .map(|e| IbrwPoint { estimate: e.estimate, low: e.ci.low, high: e.ci.high, ambiguous: e.ambiguous })
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let mut header = vec!["p"];
    if engine != Engine::Ibrw {
        header.extend(["graph_mean", "graph_ci_low", "graph_ci_high"]);
    }
    if engine != Engine::Graph {
        header.extend(["ibrw_mean", "ibrw_ci_low", "ibrw_ci_high", "ibrw_ambiguous"]);
    }
    if engine == Engine::Both {
        header.extend(["abs_diff", "combined_half_width", "agree"]);
    }
    header.push("status");
    let mut rows = Vec::new();
    let mut agreeing = 0;
    for (i, &p) in cfg.p_grid.iter().enumerate() {
        let mut row = vec![num(p)];
        let mut errors = Vec::new();
        let g = graph.get(i).and_then(|r| r.as_ref().map_err(|e| errors.push(format!("graph: {e}"))).ok());
        let b = ibrw.get(i).and_then(|r| r.as_ref().map_err(|e| errors.push(format!("ibrw: {e}"))).ok());
        if engine != Engine::Ibrw {
            match g {
                Some(t) => row.extend([num(t.mean_fraction), num(t.ci_low), num(t.ci_high)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        if engine != Engine::Graph {
            match b {
                Some(t) => row.extend([num(t.estimate), num(t.low), num(t.high), t.ambiguous.to_string()]),
                None => row.extend([String::new(), String::new(), String::new(), String::new()]),
            }
        }
        if engine == Engine::Both {
            match (g, b) {
                (Some(g), Some(b)) => {
                    let diff = (g.mean_fraction - b.estimate).abs();
                    let half = 0.5 * (g.ci_high - g.ci_low) + 0.5 * (b.high - b.low);
                    agreeing += (diff <= half) as usize;
                    row.extend([num(diff), num(half), (diff <= half).to_string()]);
                }
                _ => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        row.push(if errors.is_empty() { "ok".into() } else { errors.join("; ") });
        rows.push(row);
    }
    if engine == Engine::Both {
        out.derive("points_agreeing", agreeing);
    }
    out.derive("stop_policy", cfg.stop_policy());
    out.csv(
        "theta_curve.csv",
        "p is a retention probability; theta is a probability (graph: largest-component fraction; ibrw: survival); 95% intervals",
        &header,
        &rows,
    )
}

#[derive(Serialize)]
struct FitRecord {
    mode: FitMode,
    constant_theoretical: f64,
    constant_lower: f64,
    constant_upper: f64,
    slope_empirical: f64,
    intercept: f64,
    r2: f64,
    points_used: usize,
    dropped: Vec<(f64, f64)>,
    reliable: bool,
    control: &'static str,
}

/// Theta values against the control variable: `p - p_c` for percolation,
/// `log rho_t(alpha_t*)` for a family.
fn fit_points(cfg: &ExperimentConfig, seeds: &SeedStream) -> Result<Vec<(f64, f64)>, CliError> {
    let (key, values): (&str, Vec<(f64, f64)>) = match &cfg.theta_input {
        Some(path) => {
            let (header, rows) = read_csv(path)?;
            let key = if cfg.fit_mode == FitMode::Percolation { "p" } else { "t" };
            let xi = header.iter().position(|h| h == key);
            let ti = ["theta", "ibrw_mean", "graph_mean"].iter().find_map(|c| header.iter().position(|h| h == c));
            let (Some(xi), Some(ti)) = (xi, ti) else {
                return Err(CliError::Config(format!("{} needs a {key:?} column and a theta column", path.display())));
            };
            let mut v = Vec::new();
            for r in rows {
                let x: f64 = r[xi].parse().map_err(|_| CliError::Config(format!("bad {key} value {:?}", r[xi])))?;
                // rows with a failed estimate carry an empty cell
                if let Ok(t) = r[ti].parse::<f64>() {
                    v.push((x, t));
                }
            }
            (key, v)
        }
        None => match cfg.fit_mode {
            FitMode::Percolation => {
                let mut v = Vec::new();
                for &p in &cfg.p_grid {
                    let e = estimate_survival(&cfg.rule, p, cfg.root, cfg.ibrw_replicas, cfg.stop_policy(), seeds, cfg.exec())?;
                    v.push((p, e.estimate));
                }
                ("p", v)
            }
            FitMode::Family => {
                let fam = cfg.family.expect("validated").family();
                let mut v = Vec::new();
                for (i, &t) in cfg.t_grid.iter().enumerate() {
                    let e = estimate_survival(&fam.at(t), 1.0, cfg.root, cfg.ibrw_replicas, cfg.stop_policy(), &seeds.substream(i as u64), cfg.exec())?;
                    v.push((t, e.estimate));
                }
                ("t", v)
            }
        },
    };
    match (cfg.fit_mode, key) {
        (FitMode::Percolation, _) => {
            let star = minimize_alpha(&cfg.rule, cfg.tol)?;
            let p_c = 1.0 / star.rho_star.midpoint();
            Ok(values.into_iter().map(|(p, t)| (p - p_c, t)).collect())
        }
        (FitMode::Family, _) => {
            let fam = cfg.family.expect("validated").family();
            let ts: Vec<f64> = values.iter().map(|v| v.0).collect();
            let prof = family_profile(&fam, &ts, cfg.tol)?;
            Ok(values.iter().zip(prof).map(|(&(_, t), fp)| (fp.epsilon.midpoint(), t)).collect())
        }
    }
}

pub fn fit(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let pts = fit_points(cfg, seeds)?;
    let f = fit_decay(&pts, cfg.fit_mode)?;
    let (constant, control) = match cfg.fit_mode {
        FitMode::Percolation => (thm1_constant(&cfg.rule, cfg.tol)?, "p - p_c"),
        FitMode::Family => (thm2_constant(&cfg.family.expect("validated").limit(), cfg.tol)?, "log rho_t(alpha_t*)"),
    };
    let rec = FitRecord {
        mode: f.mode,
        constant_theoretical: constant.midpoint(),
        constant_lower: constant.lower,
        constant_upper: constant.upper,
        slope_empirical: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        points_used: f.points_used,
        dropped: f.dropped,
        reliable: f.reliable,
        control,
    };
    out.derive("constant_theoretical", constant);
    out.json("fit.json", &rec)
}

pub fn gw(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut violations = 0;
    for spec in &cfg.gw.laws {
        let law = spec.law()?;
        let q = gw_extinction(&law, 1e-15)?;
        for &r in &cfg.gw.r_grid {
            rows.push(match gw_survival_bound_check(&law, r) {
                Ok(c) => {
                    violations += !c.holds as usize;
                    vec![spec.label(), num(r), num(q), num(c.lhs), num(c.rhs), c.holds.to_string(), "ok".into()]
                }
                Err(e) => vec![spec.label(), num(r), num(q), String::new(), String::new(), String::new(), e.to_string()],
            });
        }
    }
    out.derive("bound_violations", violations);
    out.csv(
        "gw_bound.csv",
        "r dimensionless; extinction, lhs = 1 - q and rhs are probabilities",
        &["law", "r", "extinction", "lhs", "rhs", "holds", "status"],
        &rows,
    )?;
    let g = &cfg.gw;
    let pts = gw_growth_check(&g.growth_law.law()?, g.theta1, g.theta2, g.n_max, g.replicas, seeds, cfg.exec())?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|p| vec![p.n.to_string(), p.alive.to_string(), num(p.conditional), num(p.envelope), (p.conditional <= p.envelope).to_string()])
        .collect();
    out.csv(
        "gw_growth.csv",
        "n is a generation; conditional = P(X_n <= theta1^n | X_n >= 1); envelope = theta2^n",
        &["n", "alive", "conditional", "envelope", "within"],
        &rows,
    )
}

pub fn mogulskii(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<(), CliError> {
    let t = cfg.tube;
    let est = TubeEstimator::Splitting { population: t.population, runs: t.runs };
    let run = |w: f64, i: u64| -> Result<TubeEstimate, CliError> {
        let tube = TubeSpec::constant(w, t.k);
        let s = seeds.substream(i);
        Ok(match t.walk {
            TubeWalk::Gaussian => tube_probability(&GaussianWalk { sigma: t.sigma, start: 0.0 }, &tube, est, &s, cfg.exec())?,
            TubeWalk::Spine { alpha } => {
                let walk = SpineWalk { model: SpineModel::new(&cfg.rule, alpha)?, start: SpineState::new(0.0, ParticleType::Left) };
                tube_probability(&walk, &tube, est, &s, cfg.exec())?
            }
        })
    };
    let wide = run(t.width, 0)?;
    let narrow = run(0.5 * t.width, 1)?;
    let sigma2 = match t.walk {
        TubeWalk::Gaussian => t.sigma * t.sigma,
        TubeWalk::Spine { alpha } => {
            SpineWalk { model: SpineModel::new(&cfg.rule, alpha)?, start: SpineState::new(0.0, ParticleType::Left) }.step_variance()
        }
    };
    let a = (t.k as f64).cbrt();
    let rows: Vec<Vec<String>> = [(t.width, wide), (0.5 * t.width, narrow)]
        .iter()
        .map(|(w, e)| {
            vec![
                num(*w),
                t.k.to_string(),
                num(a),
                num(e.log_probability),
                num(e.std_error),
                num(e.rate_empirical),
                num(e.rate_theory),
                num(e.rate_empirical / e.rate_theory - 1.0),
            ]
        })
        .collect();
    out.derive("step_variance", sigma2);
    out.derive("rate_ratio", narrow.rate_empirical / wide.rate_empirical);
    out.csv(
        "mogulskii.csv",
        "width in units of a = k^(1/3); rate = (a^2/k) log P, dimensionless",
        &["width", "k", "a", "log_probability", "std_error", "rate_empirical", "rate_theory", "relative_error"],
        &rows,
    )
}

/// Returns the number of failed checks.
pub fn checks(cfg: &ExperimentConfig, out: &mut Output, seeds: &SeedStream) -> Result<usize, CliError> {
    let rule: &AttachmentRule = &cfg.rule;
    let reports = run_checks(rule, &cfg.checks, seeds, cfg.exec())?;
    let mut rows = Vec::new();
    for c in &reports {
        println!("{} {:<34} {:.4e} / {:.4e}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.tolerance, c.detail);
        rows.push(vec![c.name.clone(), c.passed.to_string(), num(c.measured), num(c.tolerance), num(c.margin()), c.detail.clone()]);
    }
    let failed = reports.iter().filter(|c| !c.passed).count();
    out.derive("failed", failed);
    out.derive("budget", cfg.checks);
    out.csv(
        "checks.csv",
        "measured and tolerance share units per check (absolute error, relative error or standard errors)",
        &["name", "passed", "measured", "tolerance", "margin", "detail"],
        &rows,
    )?;
    Ok(failed)
}

pub fn execution_label(e: Execution) -> &'static str {
    match e {
        Execution::Parallel if Execution::parallel_available() => "parallel",
        _ => "sequential",
    }
}
