//! The spine: the two-type Markov chain behind the many-to-one formula for
//! affine rules, with corridor probabilities, survival upper bounds and
//! decay fits built on top of it.
//!
//! For `f(k) = gamma k + beta` the eigenfunction of the score operator takes
//! one value `v_left` on type `Left` and one value `v_right` on all distance
//! types, and the spine moves as follows. From a particle of type `i` it
//! jumps right (to type `Left`) with probability `m_{i,R} v_left / (rho v_i)`,
//! by an `Exp(alpha - gamma)` distance, and otherwise left (to a distance
//! type) by an `Exp(1 - alpha - gamma)` distance, where
//! `m_{Left,R} = a(alpha)`, `m_{Dist,R} = c(alpha)`, and the left mass is
//! `a(1 - alpha)` for both. Retention `p` scales every mass and `rho` alike,
//! so the chain does not depend on it.

pub mod fit;
pub mod tube;
pub mod zeta;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ibrw::ParticleType;
use crate::rules::AttachmentRule;
use crate::spectral::{rho1_linear, rho_linear, richardson_second_derivative, FD_STEP};

/// Eigenvector of the two-type operator, normalised so the larger entry is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpineWeights {
    pub v_left: f64,
    pub v_right: f64,
}

impl SpineWeights {
    pub fn of(&self, kind: ParticleType) -> f64 {
        match kind {
            ParticleType::Left => self.v_left,
            ParticleType::Dist(_) => self.v_right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpineState {
    pub s: f64,
    pub kind: ParticleType,
    pub step: u64,
}

impl SpineState {
    pub fn new(s: f64, kind: ParticleType) -> Self {
        SpineState { s, kind, step: 0 }
    }
}

/// Spine chain of an affine rule at a fixed `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpineModel {
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub rho: f64,
    pub weights: SpineWeights,
    /// Probability of a right step from type `Left`.
    pub right_from_left: f64,
    /// Probability of a right step from a distance type.
    pub right_from_dist: f64,
}

impl SpineModel {
    pub fn new(rule: &AttachmentRule, alpha: f64) -> Result<Self> {
        rule.check()?;
        let (gamma, beta) = rule.linear_params().ok_or_else(|| {
            Error::UnsupportedRule("the spine chain needs an affine rule".into())
        })?;
        let rho = rho_linear(gamma, beta, alpha)?;
        let a = beta / (alpha - gamma);
        let b = beta / (1.0 - gamma - alpha);
        let c = (beta + gamma) / (alpha - gamma);
        // From the first row of M v = rho v with v_right = 1.
        let v_left = if gamma == 0.0 { 1.0 } else { b / (rho - a) };
        let weights = SpineWeights { v_left, v_right: 1.0 };
        Ok(SpineModel {
            gamma,
            beta,
            alpha,
            rho,
            weights,
            right_from_left: a / rho,
            right_from_dist: c * v_left / rho,
        })
    }

    pub fn right_rate(&self) -> f64 {
        self.alpha - self.gamma
    }

    pub fn left_rate(&self) -> f64 {
        1.0 - self.alpha - self.gamma
    }

    /// One transition of the chain. `p` is the retention probability; it
    /// cancels and is accepted only to make that explicit.
    pub fn step<R: Rng + ?Sized>(&self, state: &SpineState, p: f64, rng: &mut R) -> Result<SpineState> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("retention {p} outside (0, 1]")));
        }
        Ok(self.step_unchecked(state, rng))
    }

    #[inline]
    pub(crate) fn step_unchecked<R: Rng + ?Sized>(&self, state: &SpineState, rng: &mut R) -> SpineState {
        let right = match state.kind {
            ParticleType::Left => self.right_from_left,
            ParticleType::Dist(_) => self.right_from_dist,
        };
        let e: f64 = rng.sample(Exp1);
        if rng.random::<f64>() < right {
            let d = e / self.right_rate();
            SpineState { s: state.s + d, kind: ParticleType::Left, step: state.step + 1 }
        } else {
            let u = e / self.left_rate();
            SpineState { s: state.s - u, kind: ParticleType::Dist(u), step: state.step + 1 }
        }
    }

    /// Stationary probability of type `Left`.
    pub fn stationary_left(&self) -> f64 {
        let to_dist = 1.0 - self.right_from_left;
        let to_left = self.right_from_dist;
        to_left / (to_left + to_dist)
    }

    /// Exact `(E[S_1 - S_0], E[(S_1 - S_0)^2])` from a given start type.
    pub fn one_step_moments(&self, kind: ParticleType) -> (f64, f64) {
        let r = match kind {
            ParticleType::Left => self.right_from_left,
            ParticleType::Dist(_) => self.right_from_dist,
        };
        let (mr, ml) = (1.0 / self.right_rate(), 1.0 / self.left_rate());
        (r * mr - (1.0 - r) * ml, 2.0 * (r * mr * mr + (1.0 - r) * ml * ml))
    }

    /// Long-run drift `-rho'(alpha) / rho(alpha)`.
    pub fn drift(&self) -> f64 {
        -rho1_linear(self.gamma, self.beta, self.alpha).unwrap_or(f64::NAN) / self.rho
    }

    /// Long-run variance per step, `(log rho)''(alpha)`; equals
    /// `rho''/rho` at `alpha*`.
    pub fn variance(&self) -> f64 {
        let (g, b) = (self.gamma, self.beta);
        let h = FD_STEP.min(0.25 * (self.alpha - g).min(1.0 - g - self.alpha));
        richardson_second_derivative(|a| rho_linear(g, b, a).map(f64::ln).unwrap_or(f64::NAN), self.alpha, h)
    }
}

/// Convenience wrapper: one spine step for `rule` at `alpha`.
pub fn spine_step<R: Rng + ?Sized>(
    state: &SpineState,
    alpha: f64,
    rule: &AttachmentRule,
    p: f64,
    rng: &mut R,
) -> Result<SpineState> {
    SpineModel::new(rule, alpha)?.step(state, p, rng)
}
