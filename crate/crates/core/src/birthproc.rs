//! The pure birth process `Z` jumping from `k` to `k + 1` at rate `f(k)`.
//!
//! Besides path sampling this module solves the forward equations for the
//! mean intensity `E[f(Z_t)]`, evaluates the Laplace series `a(alpha)` and
//! `c(alpha)`, and samples the process conditioned to jump at a given time.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rules::AttachmentRule;

/// A path on `[0, horizon]`. For conditioned paths `forced_jump` marks the
/// jump that was conditioned on; it is not part of `jump_times`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirthPath {
    pub jump_times: Vec<f64>,
    pub start_state: u64,
    pub horizon: f64,
    pub forced_jump: Option<f64>,
}

impl BirthPath {
    /// State at time `t`, counting the forced jump if there is one.
    pub fn state_at(&self, t: f64) -> u64 {
        let jumps = self.jump_times.partition_point(|&s| s <= t) as u64;
        let forced = matches!(self.forced_jump, Some(s) if s <= t) as u64;
        self.start_state + jumps + forced
    }
}

#[inline]
fn exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Appends to `out` the jump times in `(t0, horizon]` of the process started
/// in `state` at time `t0`. Returns the state at `horizon`.
fn extend_path<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    mut state: u64,
    t0: f64,
    horizon: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> u64 {
    let mut t = t0;
    loop {
        t += exp(rng, rule.eval(state));
        if t > horizon {
            return state;
        }
        out.push(t);
        state += 1;
    }
}

/// Jump times on `[0, horizon]` of `Z` started in `start_state`.
pub fn sample_path<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    start_state: u64,
    horizon: f64,
    rng: &mut R,
) -> BirthPath {
    let mut jump_times = Vec::new();
    extend_path(rule, start_state, 0.0, horizon, rng, &mut jump_times);
    BirthPath { jump_times, start_state, horizon, forced_jump: None }
}

/// `E[f(Z_t)]` on a time grid, with a certified error bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanIntensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub truncation_level: u64,
    /// Bound on `|values[i] - E[f(Z_{grid[i]})]|`, uniform over the grid.
    pub tail_bound: f64,
}

impl MeanIntensity {
    /// CSV with columns `t,value,tail_bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value,tail_bound\n");
        for (t, v) in self.grid.iter().zip(&self.values) {
            s.push_str(&format!("{t:.16e},{v:.16e},{:.16e}\n", self.tail_bound));
        }
        s
    }
}

/// Upper limit on the number of tracked states in the forward equations.
pub const DEFAULT_TRUNCATION_CAP: u64 = 1 << 16;

/// Distribution of `Z_t` from the truncated forward equations.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub start_state: u64,
    /// `pmf[i] = P(Z_t = start_state + i)` for states up to the truncation level.
    pub pmf: Vec<f64>,
    /// `P(Z_t > truncation level)`.
    pub escaped: f64,
    /// Richardson estimate of the integration error, in intensity units.
    pub ode_error: f64,
}

/// Forward equations restricted to `start..=level`; mass leaving `level` is
/// collected in an absorbing escape state.
struct Forward {
    rates: Vec<f64>,
}

impl Forward {
    fn new(rule: &AttachmentRule, start: u64, level: u64) -> Self {
        Forward { rates: (start..=level).map(|k| rule.eval(k)).collect() }
    }

    /// `dp/dt` for the state vector `p` (last entry is the escape state).
    fn deriv(&self, p: &[f64], dp: &mut [f64]) {
        let n = self.rates.len();
        let mut inflow = 0.0;
        for i in 0..n {
            let out = self.rates[i] * p[i];
            dp[i] = inflow - out;
            inflow = out;
        }
        dp[n] = inflow;
    }

    fn rk4(&self, p: &mut [f64], h: f64, steps: usize, scratch: &mut [Vec<f64>; 5]) {
        let [k1, k2, k3, k4, tmp] = scratch;
        for _ in 0..steps {
            self.deriv(p, k1);
            for i in 0..p.len() {
                tmp[i] = p[i] + 0.5 * h * k1[i];
            }
            self.deriv(tmp, k2);
            for i in 0..p.len() {
                tmp[i] = p[i] + 0.5 * h * k2[i];
            }
            self.deriv(tmp, k3);
            for i in 0..p.len() {
                tmp[i] = p[i] + h * k3[i];
            }
            self.deriv(tmp, k4);
            for i in 0..p.len() {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    /// Rate-weighted L1 distance, which bounds the difference in intensity.
    fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let n = self.rates.len();
        let body: f64 = (0..n).map(|i| self.rates[i] * (p[i] - q[i]).abs()).sum();
        body + (p[n] - q[n]).abs()
    }

    /// Advances `p` by `dt`, doubling the step count until step doubling
    /// moves the state by less than `tol` in the weighted norm. Returns the
    /// Richardson error estimate.
    fn advance(&self, p: &mut Vec<f64>, dt: f64, tol: f64, scratch: &mut [Vec<f64>; 5]) -> f64 {
        let fmax = self.rates.iter().fold(0.0f64, |m, &r| m.max(r));
        let mut steps = ((dt * fmax).ceil() as usize).max(1);
        let mut coarse = p.clone();
        self.rk4(&mut coarse, dt / steps as f64, steps, scratch);
        loop {
            let mut fine = p.clone();
            self.rk4(&mut fine, dt / (2 * steps) as f64, 2 * steps, scratch);
            // the fine solution is off by about a fifteenth of the difference
            let err = self.distance(&coarse, &fine) / 15.0;
            if err <= tol || steps > 1 << 20 {
                *p = fine;
                return err;
            }
            coarse = fine;
            steps *= 2;
        }
    }

    fn intensity(&self, p: &[f64]) -> f64 {
        self.rates.iter().zip(p).map(|(r, q)| r * q).sum()
    }
}

/// `sqrt(E[(f(0) + gamma_plus * Z'_t)^2])` for the linear process `Z'` with
/// rates `f(0) + gamma_plus * k` started in `start`; it dominates `f(Z_t)`.
fn dominating_second_moment(rule: &AttachmentRule, start: u64, t: f64) -> f64 {
    let g = rule.gamma_plus().max(0.0);
    let b = rule.eval(0) + g * start as f64;
    if g == 0.0 {
        return b * b;
    }
    (b * b + b * g) * (2.0 * g * t).exp() - b * g * (g * t).exp()
}

struct Solved {
    level: u64,
    states: Vec<Vec<f64>>,
    values: Vec<f64>,
    bound: f64,
    ode_error: f64,
}

fn solve_forward(
    rule: &AttachmentRule,
    start: u64,
    grid: &[f64],
    tol: f64,
    cap: u64,
) -> Result<Solved> {
    rule.check()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be finite, nonnegative and sorted".into()));
    }
    let t_max = grid.last().copied().unwrap_or(0.0);
    // Start a little above the mean of the dominating process.
    let g = rule.gamma_plus().max(0.0);
    let mean_guess = if g > 0.0 {
        (rule.eval(0) / g + start as f64) * ((g * t_max).exp() - 1.0)
    } else {
        rule.eval(0) * t_max
    };
    let mut width = ((2.0 * mean_guess + 32.0) as u64).next_power_of_two();
    loop {
        let level = start + width;
        if width > cap {
            return Err(Error::TruncationFailure { cap: cap as usize, tol });
        }
        let fwd = Forward::new(rule, start, level);
        let n = fwd.rates.len() + 1;
        let mut p = vec![0.0; n];
        p[0] = 1.0;
        let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        let mut now = 0.0;
        let mut states = Vec::with_capacity(grid.len());
        let mut values = Vec::with_capacity(grid.len());
        let mut bound: f64 = 0.0;
        let mut ode_error: f64 = 0.0;
        // keep the integration error well inside tol
        let step_tol = 0.1 * tol / (grid.len() as f64).max(1.0);
        let mut ok = true;
        for &t in grid {
            if t > now {
                ode_error += fwd.advance(&mut p, t - now, step_tol, &mut scratch);
                now = t;
            }
            let escaped = p[n - 1].max(0.0);
            let trunc = (dominating_second_moment(rule, start, t) * escaped).sqrt();
            let total = trunc + ode_error;
            if total > tol {
                ok = false;
                break;
            }
            bound = bound.max(total);
            values.push(fwd.intensity(&p));
            states.push(p.clone());
        }
        if ok {
            return Ok(Solved { level, states, values, bound, ode_error });
        }
        width *= 2;
    }
}

/// `E[f(Z_t)]` on `n_points + 1` equally spaced times in `[0, horizon]`.
pub fn mean_intensity(
    rule: &AttachmentRule,
    start_state: u64,
    horizon: f64,
    tol: f64,
) -> Result<MeanIntensity> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let n_points = 100;
    let grid: Vec<f64> = (0..=n_points).map(|i| horizon * i as f64 / n_points as f64).collect();
    mean_intensity_on(rule, start_state, &grid, tol, DEFAULT_TRUNCATION_CAP)
}

/// `E[f(Z_t)]` on a caller-supplied sorted grid.
pub fn mean_intensity_on(
    rule: &AttachmentRule,
    start_state: u64,
    grid: &[f64],
    tol: f64,
    cap: u64,
) -> Result<MeanIntensity> {
    let s = solve_forward(rule, start_state, grid, tol, cap)?;
    Ok(MeanIntensity {
        grid: grid.to_vec(),
        values: s.values,
        truncation_level: s.level,
        tail_bound: s.bound,
    })
}

/// Law of `Z_t` from the truncated forward equations. `tol` bounds the error
/// of `E[f(Z_t)]`, which also bounds the escaped mass times `f(0)`.
pub fn state_distribution(
    rule: &AttachmentRule,
    start_state: u64,
    t: f64,
    tol: f64,
) -> Result<StateDistribution> {
    let s = solve_forward(rule, start_state, &[t], tol, DEFAULT_TRUNCATION_CAP)?;
    let mut p = s.states.into_iter().next().expect("one grid point");
    let escaped = p.pop().unwrap_or(0.0).max(0.0);
    Ok(StateDistribution { start_state, pmf: p, escaped, ode_error: s.ode_error })
}

/// Partial products `prod_{j<=k} g(j) / (g(j) + alpha)` with `g(j) = f(j + shift)`,
/// for `k` up to the index where `g` becomes affine, plus the exact value of
/// the remaining sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerms {
    pub terms: Vec<f64>,
    pub tail: f64,
}

impl SeriesTerms {
    pub fn total(&self) -> f64 {
        self.terms.iter().sum::<f64>() + self.tail
    }
}

/// Terms of `sum_k prod_{j<=k} f(j+shift)/(f(j+shift)+alpha)`.
///
/// Beyond the last tabulated index the rule is affine with slope `s`, and
/// for an affine `g` starting at value `G` one has
/// `sum_{m>=0} prod_{j<=m} (G+sj)/(G+sj+alpha) = G/(alpha-s)`, so the tail
/// past index `N` equals `t_N (g(N) + s) / (alpha - s)` exactly.
pub fn series_terms(rule: &AttachmentRule, alpha: f64, shift: u64) -> Result<SeriesTerms> {
    rule.check()?;
    let s = rule.gamma();
    if !(alpha > s) {
        return Err(Error::DivergentSeries { alpha, gamma: s });
    }
    let last = rule.linear_from().saturating_sub(shift);
    let mut terms = Vec::with_capacity(last as usize + 1);
    let mut t = 1.0;
    for j in 0..=last {
        let g = rule.eval(j + shift);
        t *= g / (g + alpha);
        terms.push(t);
    }
    let tail = t * (rule.eval(last + shift) + s) / (alpha - s);
    Ok(SeriesTerms { terms, tail })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// `a(alpha) = sum_k prod_{j<=k} f(j)/(f(j)+alpha)`. The affine tail is summed
/// in closed form, so the result is exact up to rounding and `tol` is only
/// validated.
pub fn laplace_a(rule: &AttachmentRule, alpha: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    Ok(series_terms(rule, alpha, 0)?.total())
}

/// `c(alpha) = sum_k prod_{j<=k} f(j+1)/(f(j+1)+alpha)`.
pub fn laplace_c(rule: &AttachmentRule, alpha: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    Ok(series_terms(rule, alpha, 1)?.total())
}

/// Default cap on consecutive rejections in [`sample_conditioned`].
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

/// Level `K` such that under the dominating linear process (rates
/// `f(0) + gamma_plus k` from 0) `E[(f(0)+gamma_plus Z') ; Z' > K] < eps * f(0)`
/// at time `t`. Since `E f(Z_t) >= f(0)`, the size-biased law of `Z_{t}`
/// puts less than `eps` mass above `K`.
fn envelope_level(rule: &AttachmentRule, t: f64, eps: f64) -> u64 {
    let b = rule.eval(0);
    let g = rule.gamma_plus().max(0.0);
    // pmf of Z'_t: negative binomial (r = b/g, q = e^{-g t}) or Poisson(b t).
    let mut weights = Vec::new();
    let mut log_p = if g > 0.0 { (b / g) * (-g * t) } else { -b * t };
    let mut peak = f64::NEG_INFINITY;
    let mut k = 0u64;
    loop {
        let w = log_p.exp() * (b + g * k as f64);
        weights.push(w);
        peak = peak.max(log_p);
        let kf = k as f64;
        let ratio = if g > 0.0 {
            (kf + b / g) / (kf + 1.0) * (1.0 - (-g * t).exp())
        } else {
            b * t / (kf + 1.0)
        };
        log_p += ratio.ln();
        k += 1;
        // past the mode, stop once terms are negligible against eps
        if ratio < 1.0 && log_p < peak - 80.0 && log_p.exp() * (b + g * kf) * 1e3 < eps * b {
            break;
        }
        if ratio == 0.0 || k > 1 << 26 {
            break;
        }
    }
    let mut suffix = 0.0;
    for i in (0..weights.len()).rev() {
        suffix += weights[i];
        if suffix >= eps * b {
            return i as u64;
        }
    }
    0
}

/// Samples `Z` conditioned to have a jump at `tau`.
///
/// On `[0, tau)` the path has the law of `Z` reweighted by
/// `f(Z_{tau-}) / E[f(Z_{tau-})]`; at `tau` a forced jump occurs; afterwards
/// the process continues from `Z_{tau-} + 1`. Jump times are reported on
/// `[0, horizon]` with the forced jump kept apart.
///
/// For affine rules the reported jumps have exactly the law of the jumps of
/// `Z` started in 1, which is sampled directly. Other rules use
/// acceptance-rejection against unconditioned paths.
pub fn sample_conditioned<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    tau: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<BirthPath> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("conditioning time must be nonnegative, got {tau}")));
    }
    if rule.is_linear() {
        let mut jump_times = Vec::new();
        extend_path(rule, 1, 0.0, horizon, rng, &mut jump_times);
        return Ok(BirthPath { jump_times, start_state: 0, horizon, forced_jump: Some(tau) });
    }
    sample_conditioned_rejection(rule, tau, horizon, DEFAULT_REJECTION_BUDGET, rng)
}

/// Acceptance-rejection sampler behind [`sample_conditioned`]; usable for
/// any rule, including affine ones.
pub fn sample_conditioned_rejection<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    tau: f64,
    horizon: f64,
    budget: u64,
    rng: &mut R,
) -> Result<BirthPath> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("conditioning time must be nonnegative, got {tau}")));
    }
    let level = envelope_level(rule, tau, 1e-12);
    let m = rule.eval(level);
    let mut past = Vec::new();
    for _ in 0..budget {
        past.clear();
        let state = extend_path(rule, 0, 0.0, tau, rng, &mut past);
        // Overflow of the envelope is rejected; its target mass is below 1e-12.
        if state > level {
            continue;
        }
        if rng.random::<f64>() * m < rule.eval(state) {
            let mut jump_times: Vec<f64> = past.iter().copied().filter(|&s| s <= horizon).collect();
            if tau <= horizon {
                extend_path(rule, state + 1, tau, horizon, rng, &mut jump_times);
            }
            return Ok(BirthPath { jump_times, start_state: 0, horizon, forced_jump: Some(tau) });
        }
    }
    Err(Error::RejectionBudgetExceeded { attempts: budget })
}
