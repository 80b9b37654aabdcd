//! Computable upper bound on the survival probability of the killed,
//! percolated walk started from a type `Left` particle at `s0 <= 0`:
//!
//! `zeta <= e^{-alpha s0} rho^{kN} I(kN)
//!        + k sum_{l<N} e^{-alpha (b_{(l+1)k} + s0)} rho^{(l+1)k} I(lk)`
//!
//! with `rho = p rho(alpha) >= 1` and `I(j)` the probability that the spine
//! started at `(s0, Left)` satisfies `-b_i <= S_i <= 0` for `i = 1..=j`.

use serde::Serialize;

use super::tube::{SpineWalk, Walk};
use super::{SpineModel, SpineState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ibrw::ParticleType;
use crate::rules::AttachmentRule;
use crate::seed::SeedStream;
use crate::stats::{wilson, Z99};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaBound {
    pub p: f64,
    pub alpha: f64,
    pub s0: f64,
    pub k: usize,
    pub blocks: usize,
    /// `p rho(alpha)`.
    pub rho_p: f64,
    /// Upper confidence values of `I(lk)` for `l = 0..=N`.
    pub corridor: Vec<f64>,
    /// Point estimates of the same.
    pub corridor_estimate: Vec<f64>,
    pub replicas: usize,
    pub bound: f64,
}

/// Evaluates the bound. `schedule[i - 1] = b_i` for `i = 1..=kN`; it must be
/// nonnegative and nonincreasing. The corridor probabilities are replaced by
/// 99% Wilson upper limits, so the result is a high-confidence bound.
#[allow(clippy::too_many_arguments)]
pub fn zeta_upper_bound(
    rule: &AttachmentRule,
    p: f64,
    alpha: f64,
    s0: f64,
    k: usize,
    blocks: usize,
    schedule: &[f64],
    replicas: usize,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<ZetaBound> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("retention {p} outside (0, 1]")));
    }
    if !(s0 <= 0.0) {
        return Err(Error::Domain(format!("start {s0} must be <= 0")));
    }
    if k == 0 || blocks == 0 || replicas == 0 {
        return Err(Error::Domain("k, N and replicas must be positive".into()));
    }
    let n = k * blocks;
    if schedule.len() != n {
        return Err(Error::Domain(format!("schedule has {} entries, need kN = {n}", schedule.len())));
    }
    if schedule.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) || schedule.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::PreconditionViolation("schedule must be nonnegative and nonincreasing".into()));
    }
    let model = SpineModel::new(rule, alpha)?;
    let rho_p = p * model.rho;
    if rho_p < 1.0 {
        return Err(Error::PreconditionViolation(format!("p rho(alpha) = {rho_p} < 1")));
    }
    let walk = SpineWalk { model, start: SpineState::new(s0, ParticleType::Left) };

    // number of steps survived before leaving the corridor, capped at n
    let survived = exec.map(replicas, |r| {
        let mut rng = seeds.rng(r as u64);
        let mut s = walk.start();
        for (i, b) in schedule.iter().enumerate() {
            s = walk.advance(&s, &mut rng);
            if s.s > 0.0 || s.s < -b {
                return i;
            }
        }
        n
    });
    let mut corridor = Vec::with_capacity(blocks + 1);
    let mut corridor_estimate = Vec::with_capacity(blocks + 1);
    for l in 0..=blocks {
        let j = l * k;
        if j == 0 {
            corridor.push(1.0);
            corridor_estimate.push(1.0);
            continue;
        }
        let hits = survived.iter().filter(|&&m| m >= j).count() as u64;
        corridor.push(wilson(hits, replicas as u64, Z99).high);
        corridor_estimate.push(hits as f64 / replicas as f64);
    }

    let ln_rho = rho_p.ln();
    let mut bound = (-alpha * s0 + n as f64 * ln_rho).exp() * corridor[blocks];
    for l in 0..blocks {
        let b = schedule[(l + 1) * k - 1];
        let e = -alpha * (b + s0) + ((l + 1) * k) as f64 * ln_rho;
        bound += k as f64 * e.exp() * corridor[l];
    }
    Ok(ZetaBound { p, alpha, s0, k, blocks, rho_p, corridor, corridor_estimate, replicas, bound })
}
