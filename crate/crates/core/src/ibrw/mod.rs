//! The percolated idealised branching random walk with killing at zero.
//!
//! Particles live on `(-inf, 0]` and carry a type: `Left` for particles born
//! to the right of their parent, or `Dist(u)` for particles born at distance
//! `u` to the left of their parent. Every particle owns a key from which its
//! random stream is derived, and every potential child draws its retention
//! uniform from that stream whether or not it is kept. Running the same
//! replica at two retention values therefore gives nested trees.

pub mod gw;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Poisson};
use serde::Serialize;

use crate::birthproc::{sample_conditioned, sample_path, series_terms};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rules::AttachmentRule;
use crate::seed::{mix, SeedStream, SimRng};
use crate::stats::{wilson, Interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParticleType {
    Left,
    Dist(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Particle {
    pub location: f64,
    pub kind: ParticleType,
    pub generation: u32,
    /// Seed of this particle's random stream.
    pub key: u64,
}

/// How far right offspring are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Barrier {
    /// Children right of zero are killed.
    Killing,
    /// No killing; right offspring are generated up to this displacement.
    Horizon(f64),
}

/// Samples displacements `u` of left children, whose intensity is
/// `e^{-u} E[f(Z_u)] du`.
///
/// With `t_k = prod_{j<=k} f(j)/(f(j)+1)` the intensity equals
/// `sum_k t_k h_k(u)` where `h_k` is the density of
/// `sum_{j<=k} Exp(f(j)+1)`: it is the density of the `(k+1)`-th jump of
/// `Z` run alongside an independent rate-one killing. So the number of
/// children is Poisson with mean `a(1) = sum_k t_k`, the index `k` of a child
/// is drawn with probability `t_k / a(1)`, and its displacement is the sum
/// of the first `k+1` holding times.
#[derive(Debug, Clone)]
pub struct LeftSampler {
    rule: AttachmentRule,
    mean: f64,
    /// `P(K = k | K >= k)` below the affine region.
    hazard: Vec<f64>,
    linear: Option<f64>,
}

impl LeftSampler {
    pub fn new(rule: &AttachmentRule) -> Result<Self> {
        let s = series_terms(rule, 1.0, 0)?;
        let mean = s.total();
        if let Some((gamma, _)) = rule.linear_params() {
            return Ok(LeftSampler { rule: rule.clone(), mean, hazard: vec![], linear: Some(1.0 - gamma) });
        }
        let mut suffix = s.tail;
        let mut hazard = vec![0.0; s.terms.len()];
        for k in (0..s.terms.len()).rev() {
            suffix += s.terms[k];
            hazard[k] = s.terms[k] / suffix;
        }
        Ok(LeftSampler { rule: rule.clone(), mean, hazard, linear: None })
    }

    /// Expected number of left children, `a(1)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn displacement<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Some(rate) = self.linear {
            // affine f: intensity beta e^{-(1-gamma)u}
            let e: f64 = rng.sample(Exp1);
            return e / rate;
        }
        let slope = self.rule.gamma();
        let mut u = 0.0;
        let mut k = 0u64;
        loop {
            let fk = self.rule.eval(k);
            let e: f64 = rng.sample(Exp1);
            u += e / (fk + 1.0);
            let h = match self.hazard.get(k as usize) {
                Some(&h) => h,
                None => (1.0 - slope) / (1.0 + fk),
            };
            if rng.random::<f64>() < h {
                return u;
            }
            k += 1;
        }
    }
}

/// Offspring law of one rule, with precomputed left-child tables.
#[derive(Debug, Clone)]
pub struct OffspringModel {
    pub rule: AttachmentRule,
    left: LeftSampler,
}

const CHILD_TAG: u64 = 0x6368_696c_6472_656e;

#[inline]
fn child_key(parent: u64, index: u64) -> u64 {
    mix(mix(parent ^ CHILD_TAG) ^ index)
}

impl OffspringModel {
    pub fn new(rule: &AttachmentRule) -> Result<Self> {
        rule.check()?;
        Ok(OffspringModel { rule: rule.clone(), left: LeftSampler::new(rule)? })
    }

    pub fn left_sampler(&self) -> &LeftSampler {
        &self.left
    }

    /// Retained children of `parent`, at most `limit` of them. Left children
    /// come first, then right children in increasing position.
    pub fn spawn_children(
        &self,
        parent: &Particle,
        p: f64,
        barrier: Barrier,
        limit: usize,
    ) -> Result<Vec<Particle>> {
        let mut out = Vec::new();
        self.spawn_into(parent, p, barrier, limit, &mut out)?;
        Ok(out)
    }

    fn spawn_into(
        &self,
        parent: &Particle,
        p: f64,
        barrier: Barrier,
        limit: usize,
        out: &mut Vec<Particle>,
    ) -> Result<()> {
        let mut rng = SimRng::seed_from_u64(parent.key);
        let x = parent.location;
        let generation = parent.generation + 1;
        let start = out.len();
        let mut index = 0u64;
        let mut push = |out: &mut Vec<Particle>, location: f64, kind: ParticleType, keep: bool| {
            let key = child_key(parent.key, index);
            index += 1;
            if keep {
                out.push(Particle { location, kind, generation, key });
            }
        };

        let n_left = match Poisson::new(self.left.mean()) {
            Ok(d) => d.sample(&mut rng) as u64,
            Err(_) => 0,
        };
        for _ in 0..n_left {
            let u = self.left.displacement(&mut rng);
            let keep = rng.random::<f64>() < p;
            push(out, x - u, ParticleType::Dist(u), keep);
            if out.len() - start >= limit {
                return Ok(());
            }
        }

        let horizon = match barrier {
            Barrier::Killing => -x,
            Barrier::Horizon(h) => h,
        };
        if horizon < 0.0 {
            return Ok(());
        }
        let path = match parent.kind {
            ParticleType::Left => sample_path(&self.rule, 0, horizon, &mut rng),
            ParticleType::Dist(tau) => sample_conditioned(&self.rule, tau, horizon, &mut rng)?,
        };
        for t in path.jump_times {
            let keep = rng.random::<f64>() < p;
            push(out, x + t, ParticleType::Left, keep);
            if out.len() - start >= limit {
                break;
            }
        }
        Ok(())
    }
}

/// Where the ancestor starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootLocation {
    /// `-E` with `E` standard exponential.
    Exponential,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct StopPolicy {
    pub max_gen: u32,
    pub pop_cap: usize,
    pub survival_floor: usize,
}

impl Default for StopPolicy {
    fn default() -> Self {
        StopPolicy { max_gen: 200, pop_cap: 10_000, survival_floor: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Died,
    Survived,
    /// Alive at `max_gen` but below the survival floor.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub p: f64,
    pub rule: AttachmentRule,
    pub replicas: usize,
    pub survived: usize,
    pub ambiguous: usize,
    pub estimate: f64,
    /// Wilson interval, widened to cover every ambiguous replica surviving.
    pub ci: Interval,
    pub stop_policy: StopPolicy,
}

/// Runs one replica and reports how it ended. `on_generation` sees every
/// generation that is alive.
pub fn run_replica(
    model: &OffspringModel,
    p: f64,
    root: Particle,
    policy: &StopPolicy,
    mut on_generation: impl FnMut(&[Particle]),
) -> Result<Outcome> {
    if root.location > 0.0 {
        return Ok(Outcome::Died);
    }
    let mut current = vec![root];
    let mut next = Vec::new();
    for _ in 0..policy.max_gen {
        on_generation(&current);
        if current.len() >= policy.pop_cap {
            return Ok(Outcome::Survived);
        }
        next.clear();
        for particle in &current {
            let room = policy.pop_cap - next.len();
            model.spawn_into(particle, p, Barrier::Killing, room, &mut next)?;
            if next.len() >= policy.pop_cap {
                break;
            }
        }
        if next.is_empty() {
            return Ok(Outcome::Died);
        }
        std::mem::swap(&mut current, &mut next);
    }
    on_generation(&current);
    Ok(if current.len() >= policy.pop_cap || current.len() >= policy.survival_floor {
        Outcome::Survived
    } else {
        Outcome::Ambiguous
    })
}

/// Root particle of replica `i`.
pub fn root_particle(seeds: &SeedStream, i: u64, root: RootLocation) -> Particle {
    let mut rng = seeds.rng(i);
    let location = match root {
        RootLocation::Exponential => -rng.sample::<f64, _>(Exp1),
        RootLocation::Fixed(s) => s,
    };
    Particle { location, kind: ParticleType::Left, generation: 0, key: rng.random() }
}

/// Fraction of replicas whose killed walk survives. Replica `i` uses the
/// same root and particle keys for every `p`, so estimates at different
/// retention values are coupled.
#[allow(clippy::too_many_arguments)]
pub fn estimate_survival(
    rule: &AttachmentRule,
    p: f64,
    root: RootLocation,
    replicas: usize,
    policy: StopPolicy,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<SurvivalEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("retention probability {p} outside [0, 1]")));
    }
    if let RootLocation::Fixed(s) = root {
        if !(s <= 0.0) {
            return Err(Error::Domain(format!("root location {s} must be <= 0")));
        }
    }
    let model = OffspringModel::new(rule)?;
    let outcomes = exec.map(replicas, |i| {
        run_replica(&model, p, root_particle(seeds, i as u64, root), &policy, |_| {})
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let survived = outcomes.iter().filter(|o| **o == Outcome::Survived).count();
    let ambiguous = outcomes.iter().filter(|o| **o == Outcome::Ambiguous).count();
    Ok(summarize(rule, p, replicas, survived, ambiguous, policy))
}

fn summarize(
    rule: &AttachmentRule,
    p: f64,
    replicas: usize,
    survived: usize,
    ambiguous: usize,
    stop_policy: StopPolicy,
) -> SurvivalEstimate {
    let estimate = if replicas == 0 { 0.0 } else { survived as f64 / replicas as f64 };
    let lo = wilson(survived as u64, replicas as u64, Z95).low;
    let hi = wilson((survived + ambiguous) as u64, replicas as u64, Z95).high;
    SurvivalEstimate {
        p,
        rule: rule.clone(),
        replicas,
        survived,
        ambiguous,
        estimate,
        ci: Interval { low: lo.min(estimate), high: hi.max(estimate) },
        stop_policy,
    }
}

/// Mean over replicas of `sum_children e^{-alpha d} weight(type)` for one
/// parent at location zero with the barrier replaced by a horizon. `d` is the
/// child's displacement.
pub fn one_generation_functional(
    model: &OffspringModel,
    parent_kind: ParticleType,
    alpha: f64,
    horizon: f64,
    weight: impl Fn(ParticleType) -> f64 + Sync + Send,
    replicas: usize,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<crate::stats::Moments> {
    let sums = exec.map(replicas, |i| -> Result<f64> {
        let parent = Particle { location: 0.0, kind: parent_kind, generation: 0, key: seeds.seed(i as u64) };
        let kids = model.spawn_children(&parent, 1.0, Barrier::Horizon(horizon), usize::MAX)?;
        Ok(kids.iter().map(|c| (-alpha * c.location).exp() * weight(c.kind)).sum())
    });
    Ok(sums.into_iter().collect::<Result<Vec<_>>>()?.into_iter().collect())
}
