//! Corridor probabilities: the chance that a walk stays inside a rescaled
//! tube `a g1(i/k) <= S_i <= a g2(i/k)` for `i = 1..=k`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SpineModel, SpineState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ibrw::ParticleType;
use crate::rules::AttachmentRule;
use crate::seed::SeedStream;
use crate::stats::{wilson, Moments, Z95};

/// A Markov walk observed through a real position.
pub trait Walk: Sync {
    type State: Clone + Send + Sync;
    fn start(&self) -> Self::State;
    fn advance<R: Rng + ?Sized>(&self, state: &Self::State, rng: &mut R) -> Self::State;
    fn position(&self, state: &Self::State) -> f64;
    /// Long-run variance per step.
    fn step_variance(&self) -> f64;
}

/// Reference walk with `N(0, sigma^2)` increments started at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWalk {
    pub sigma: f64,
    pub start: f64,
}

impl Walk for GaussianWalk {
    type State = f64;
    fn start(&self) -> f64 {
        self.start
    }
    #[inline]
    fn advance<R: Rng + ?Sized>(&self, s: &f64, rng: &mut R) -> f64 {
        s + self.sigma * rng.sample::<f64, _>(StandardNormal)
    }
    fn position(&self, s: &f64) -> f64 {
        *s
    }
    fn step_variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// The spine chain from a fixed start state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpineWalk {
    pub model: SpineModel,
    pub start: SpineState,
}

impl Walk for SpineWalk {
    type State = SpineState;
    fn start(&self) -> SpineState {
        self.start
    }
    #[inline]
    fn advance<R: Rng + ?Sized>(&self, s: &SpineState, rng: &mut R) -> SpineState {
        self.model.step_unchecked(s, rng)
    }
    fn position(&self, s: &SpineState) -> f64 {
        s.s
    }
    fn step_variance(&self) -> f64 {
        self.model.variance()
    }
}

/// Piecewise linear function on `[0, 1]` through the given knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn constant(c: f64) -> Self {
        PiecewiseLinear { knots: vec![(0.0, c), (1.0, c)] }
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.knots;
        if k.len() < 2 || k[0].0 != 0.0 || k[k.len() - 1].0 != 1.0 {
            return Err(Error::Domain("knots must start at t = 0 and end at t = 1".into()));
        }
        if k.windows(2).any(|w| !(w[1].0 > w[0].0)) || k.iter().any(|(_, y)| !y.is_finite()) {
            return Err(Error::Domain("knot times must increase and values be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        let j = k.partition_point(|(x, _)| *x <= t).clamp(1, k.len() - 1);
        let ((t0, y0), (t1, y1)) = (k[j - 1], k[j]);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub lower: PiecewiseLinear,
    pub upper: PiecewiseLinear,
    pub k: usize,
    pub a: f64,
    /// If set, additionally require `S_k >= a (g2(1) - drop)`.
    pub endpoint_drop: Option<f64>,
}

impl TubeSpec {
    /// Constant tube `[-w, 0]` with the usual scale `a = k^{1/3}`.
    pub fn constant(width: f64, k: usize) -> Self {
        TubeSpec {
            lower: PiecewiseLinear::constant(-width),
            upper: PiecewiseLinear::constant(0.0),
            k,
            a: (k as f64).cbrt(),
            endpoint_drop: None,
        }
    }

    fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.lower.knots.iter().chain(&self.upper.knots).map(|k| k.0).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    pub fn validate(&self) -> Result<()> {
        self.lower.validate()?;
        self.upper.validate()?;
        if self.k == 0 || !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Domain(format!("need k >= 1 and a > 0, got k = {}, a = {}", self.k, self.a)));
        }
        // both boundaries are linear between merged knots, so checking knots suffices
        if self.times().iter().any(|&t| !(self.upper.eval(t) > self.lower.eval(t))) {
            return Err(Error::Domain("tube must satisfy g1 < g2 on [0, 1]".into()));
        }
        if let Some(d) = self.endpoint_drop {
            if !(d > 0.0) {
                return Err(Error::Domain(format!("endpoint drop must be positive, got {d}")));
            }
        }
        Ok(())
    }

    /// Whether position `x` at step `i` lies inside.
    #[inline]
    pub fn inside(&self, i: usize, x: f64) -> bool {
        let t = i as f64 / self.k as f64;
        let ok = x >= self.a * self.lower.eval(t) && x <= self.a * self.upper.eval(t);
        match self.endpoint_drop {
            Some(d) if i == self.k => ok && x >= self.a * (self.upper.eval(1.0) - d),
            _ => ok,
        }
    }

    /// `int_0^1 (g2 - g1)^{-2} dt`, exact for piecewise linear width.
    pub fn inverse_square_width_integral(&self) -> f64 {
        let t = self.times();
        t.windows(2)
            .map(|w| {
                let w0 = self.upper.eval(w[0]) - self.lower.eval(w[0]);
                let w1 = self.upper.eval(w[1]) - self.lower.eval(w[1]);
                (w[1] - w[0]) / (w0 * w1)
            })
            .sum()
    }

    /// Limiting value of `(a^2 / k) log P` for step variance `sigma2`.
    pub fn theoretical_rate(&self, sigma2: f64) -> f64 {
        -std::f64::consts::PI.powi(2) * sigma2 / 2.0 * self.inverse_square_width_integral()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeEstimator {
    /// Independent paths; counts the ones that stay inside.
    Crude { replicas: usize },
    /// Fixed-population splitting: `population` particles are advanced one
    /// step at a time, the survivors resampled back to full size, and the
    /// product of survival fractions averaged over `runs` independent runs.
    Splitting { population: usize, runs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeEstimate {
    pub estimator: TubeEstimator,
    pub probability: f64,
    pub std_error: f64,
    pub log_probability: f64,
    /// `(a^2 / k) log P`.
    pub rate_empirical: f64,
    pub rate_theory: f64,
    /// Surviving paths, for the crude estimator.
    pub hits: Option<u64>,
}

/// Estimates the probability that `walk` stays in `tube` for `k` steps.
pub fn tube_probability<W: Walk>(
    walk: &W,
    tube: &TubeSpec,
    estimator: TubeEstimator,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<TubeEstimate> {
    tube.validate()?;
    let start = walk.start();
    let x0 = walk.position(&start);
    let (lo0, hi0) = (tube.a * tube.lower.eval(0.0), tube.a * tube.upper.eval(0.0));
    if !(x0 >= lo0 && x0 <= hi0) {
        return Err(Error::PreconditionViolation(format!("start {x0} outside [{lo0}, {hi0}]")));
    }
    let scale = tube.a * tube.a / tube.k as f64;
    let rate_theory = tube.theoretical_rate(walk.step_variance());
    match estimator {
        TubeEstimator::Crude { replicas } => {
            if replicas == 0 {
                return Err(Error::Domain("need at least one replica".into()));
            }
            let hits = exec
                .map(replicas, |r| {
                    let mut rng = seeds.rng(r as u64);
                    let mut s = start.clone();
                    for i in 1..=tube.k {
                        s = walk.advance(&s, &mut rng);
                        if !tube.inside(i, walk.position(&s)) {
                            return 0u64;
                        }
                    }
                    1
                })
                .into_iter()
                .sum::<u64>();
            if hits == 0 {
                return Err(Error::ZeroHits { replicas, upper_bound: wilson(0, replicas as u64, Z95).high });
            }
            let n = replicas as f64;
            let p = hits as f64 / n;
            Ok(TubeEstimate {
                estimator,
                probability: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                log_probability: p.ln(),
                rate_empirical: scale * p.ln(),
                rate_theory,
                hits: Some(hits),
            })
        }
        TubeEstimator::Splitting { population, runs } => {
            if population == 0 || runs < 2 {
                return Err(Error::Domain("splitting needs population >= 1 and runs >= 2".into()));
            }
            let logs = exec.map(runs, |r| splitting_run(walk, tube, &start, population, seeds.rng(r as u64)));
            if logs.iter().all(|l| *l == f64::NEG_INFINITY) {
                let trials = (population * runs) as u64;
                return Err(Error::ZeroHits { replicas: population * runs, upper_bound: wilson(0, trials, Z95).high });
            }
            // average on a common scale to avoid underflow
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let m: Moments = logs.iter().map(|l| (l - top).exp()).collect();
            let log_p = top + m.mean.ln();
            Ok(TubeEstimate {
                estimator,
                probability: log_p.exp(),
                std_error: m.std_error() * top.exp(),
                log_probability: log_p,
                rate_empirical: scale * log_p,
                rate_theory,
                hits: None,
            })
        }
    }
}

/// One splitting run; returns the log of the product of survival fractions.
fn splitting_run<W: Walk, R: Rng>(walk: &W, tube: &TubeSpec, start: &W::State, n: usize, mut rng: R) -> f64 {
    let mut pop = vec![start.clone(); n];
    let mut kept = Vec::with_capacity(n);
    let mut log_p = 0.0;
    for i in 1..=tube.k {
        kept.clear();
        for s in &pop {
            let next = walk.advance(s, &mut rng);
            if tube.inside(i, walk.position(&next)) {
                kept.push(next);
            }
        }
        if kept.is_empty() {
            return f64::NEG_INFINITY;
        }
        log_p += (kept.len() as f64 / n as f64).ln();
        if i < tube.k {
            for slot in pop.iter_mut() {
                *slot = kept[rng.random_range(0..kept.len())].clone();
            }
        }
    }
    log_p
}

/// Corridor probability for the spine of an affine `rule` at `alpha`,
/// started at position 0 with type `Left`.
pub fn spine_tube_probability(
    tube: &TubeSpec,
    alpha: f64,
    rule: &AttachmentRule,
    estimator: TubeEstimator,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<TubeEstimate> {
    let walk = SpineWalk { model: SpineModel::new(rule, alpha)?, start: SpineState::new(0.0, ParticleType::Left) };
    tube_probability(&walk, tube, estimator, seeds, exec)
}
