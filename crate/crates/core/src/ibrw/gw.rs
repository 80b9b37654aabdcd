//! Galton-Watson checks: extinction probabilities, a lower bound on the
//! survival probability, and exponential growth on survival.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LawKind {
    Poisson(f64),
    Deterministic(u64),
    General,
}

/// Offspring distribution: `pmf[k] = P(X = k)` up to a cutoff, and the mass
/// beyond it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringLaw {
    pub pmf: Vec<f64>,
    pub tail: f64,
    pub kind: LawKind,
}

impl OffspringLaw {
    /// Poisson pmf carried until the remaining mass is below `1e-16`.
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("Poisson mean {lambda} must be finite and >= 0")));
        }
        let mut pmf = Vec::new();
        let mut term = (-lambda).exp();
        let mut mass = 0.0;
        let mut k = 0.0;
        // past the mode, stop when the rest is negligible
        while k <= lambda || 1.0 - mass > 1e-16 && term > 0.0 {
            pmf.push(term);
            mass += term;
            k += 1.0;
            term *= lambda / k;
            if pmf.len() > 10_000_000 {
                break;
            }
        }
        let tail = (1.0 - mass).max(0.0);
        Ok(OffspringLaw { pmf, tail, kind: LawKind::Poisson(lambda) })
    }

    pub fn deterministic(k: u64) -> Self {
        let mut pmf = vec![0.0; k as usize + 1];
        pmf[k as usize] = 1.0;
        OffspringLaw { pmf, tail: 0.0, kind: LawKind::Deterministic(k) }
    }

    pub fn general(pmf: Vec<f64>, tail: f64) -> Result<Self> {
        let law = OffspringLaw { pmf, tail, kind: LawKind::General };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pmf.iter().chain([&self.tail]).any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("pmf entries must be finite and nonnegative".into()));
        }
        let total: f64 = self.pmf.iter().sum::<f64>() + self.tail;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("pmf sums to {total}, not 1")));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            LawKind::Poisson(l) => l,
            LawKind::Deterministic(k) => k as f64,
            LawKind::General => self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
        }
    }

    /// Generating function. Mass beyond the cutoff is placed just past it,
    /// which is exact whenever the tail is empty.
    pub fn pgf(&self, s: f64) -> f64 {
        match self.kind {
            LawKind::Poisson(l) => (l * (s - 1.0)).exp(),
            _ => {
                let mut acc = self.tail;
                for &p in self.pmf.iter().rev() {
                    acc = acc * s + p;
                }
                acc
            }
        }
    }

    /// `P(lo <= X <= hi)` from the tabulated part only.
    pub fn mass_between(&self, lo: u64, hi: u64) -> f64 {
        let end = (hi as usize).min(self.pmf.len().saturating_sub(1));
        if (lo as usize) > end {
            return 0.0;
        }
        self.pmf[lo as usize..=end].iter().sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut u = rng.random::<f64>();
        for (k, &p) in self.pmf.iter().enumerate() {
            if u < p {
                return k as u64;
            }
            u -= p;
        }
        self.pmf.len() as u64
    }

    /// Total offspring of `count` independent parents.
    fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        match self.kind {
            LawKind::Poisson(l) => {
                let mean = l * count as f64;
                if mean <= 0.0 {
                    0
                } else {
                    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
                }
            }
            LawKind::Deterministic(k) => k.saturating_mul(count),
            LawKind::General => (0..count).map(|_| self.sample(rng)).sum(),
        }
    }
}

/// Extinction probability: smallest fixed point of the generating function
/// in `[0, 1]`, by monotone iteration from zero.
pub fn gw_extinction(law: &OffspringLaw, tol: f64) -> Result<f64> {
    law.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut q = 0.0;
    for _ in 0..100_000_000u64 {
        let next = law.pgf(q).min(1.0);
        if (next - q).abs() < tol {
            return Ok(next);
        }
        q = next;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalBoundCheck {
    pub r: f64,
    pub extinction: f64,
    /// `P(survival) = 1 - q`.
    pub lhs: f64,
    /// `P(X != 0) - 2 r^{-2} P(1 <= X <= r^{-2}) - 2 r`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `1 - q >= P(X != 0) - 2 r^{-2} P(1 <= X <= r^{-2}) - 2r` for
/// `0 < r <= min(1/8, q)`. The tabulated mass is used for
/// `P(1 <= X <= r^{-2})`, which can only raise the right-hand side.
pub fn gw_survival_bound_check(law: &OffspringLaw, r: f64) -> Result<SurvivalBoundCheck> {
    let q = gw_extinction(law, 1e-15)?;
    let r_max = q.min(0.125);
    if !(r > 0.0 && r <= r_max) {
        return Err(Error::PreconditionViolation(format!(
            "r = {r} must lie in (0, min(1/8, q)] = (0, {r_max}]"
        )));
    }
    let p0 = law.pmf.first().copied().unwrap_or(0.0);
    let cut = (1.0 / (r * r)).floor() as u64;
    let rhs = (1.0 - p0) - 2.0 / (r * r) * law.mass_between(1, cut) - 2.0 * r;
    let lhs = 1.0 - q;
    Ok(SurvivalBoundCheck { r, extinction: q, lhs, rhs, holds: lhs >= rhs - 1e-12 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub n: u32,
    pub alive: usize,
    /// Empirical `P(X_n <= theta1^n | X_n >= 1)`.
    pub conditional: f64,
    pub envelope: f64,
}

/// Monte Carlo curve of `P(X_n <= theta1^n | X_n >= 1)` against `theta2^n`.
pub fn gw_growth_check(
    law: &OffspringLaw,
    theta1: f64,
    theta2: f64,
    n_max: u32,
    replicas: usize,
    seeds: &SeedStream,
    exec: Execution,
) -> Result<Vec<GrowthPoint>> {
    law.validate()?;
    if !(theta1 > 1.0 && 1.0 > theta2 && theta2 > 0.0) {
        return Err(Error::Domain(format!("need theta1 > 1 > theta2 > 0, got {theta1}, {theta2}")));
    }
    let paths = exec.map(replicas, |i| {
        let mut rng = seeds.rng(i as u64);
        let mut x = 1u64;
        let mut path = Vec::with_capacity(n_max as usize + 1);
        path.push(x);
        for _ in 0..n_max {
            x = if x == 0 { 0 } else { law.sample_sum(x, &mut rng) };
            path.push(x);
        }
        path
    });
    Ok((0..=n_max)
        .map(|n| {
            let bound = theta1.powi(n as i32);
            let alive: Vec<u64> = paths.iter().map(|p| p[n as usize]).filter(|&x| x >= 1).collect();
            let small = alive.iter().filter(|&&x| (x as f64) <= bound).count();
            let conditional = if alive.is_empty() { 0.0 } else { small as f64 / alive.len() as f64 };
            GrowthPoint { n, alive: alive.len(), conditional, envelope: theta2.powi(n as i32) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extinction_examples() {
        assert_eq!(gw_extinction(&OffspringLaw::deterministic(2), 1e-12).unwrap(), 0.0);
        let sub = OffspringLaw::poisson(0.7).unwrap();
        assert!((gw_extinction(&sub, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        let q = gw_extinction(&OffspringLaw::poisson(2.0).unwrap(), 1e-14).unwrap();
        let mut oracle = 0.0f64;
        for _ in 0..1000 {
            oracle = (2.0 * (oracle - 1.0)).exp();
        }
        assert!((q - oracle).abs() < 1e-9);
        assert!((q - 0.203188).abs() < 1e-6);
    }

    #[test]
    fn binary_branching_closed_form() {
        for (p0, p2) in [(0.2, 0.5), (0.1, 0.9), (0.3, 0.4)] {
            let law = OffspringLaw::general(vec![p0, 1.0 - p0 - p2, p2], 0.0).unwrap();
            let q = gw_extinction(&law, 1e-15).unwrap();
            assert!((q - p0 / p2).abs() < 1e-9, "{q} vs {}", p0 / p2);
        }
    }

    #[test]
    fn pgf_counts_tail() {
        let law = OffspringLaw::general(vec![0.5, 0.25], 0.25).unwrap();
        assert!((law.pgf(0.5) - (0.5 + 0.125 + 0.25 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn bound_precondition() {
        let law = OffspringLaw::poisson(5.0).unwrap();
        let q = gw_extinction(&law, 1e-15).unwrap();
        assert!(matches!(gw_survival_bound_check(&law, 0.01), Err(Error::PreconditionViolation(_))));
        assert!(gw_survival_bound_check(&law, q).unwrap().holds);
        assert!(gw_survival_bound_check(&law, 0.5 * q).unwrap().holds);
    }

    #[test]
    fn bound_degenerate_zero() {
        let law = OffspringLaw::deterministic(0);
        let c = gw_survival_bound_check(&law, 0.125).unwrap();
        assert_eq!(c.extinction, 1.0);
        assert!(c.holds);
    }

    #[test]
    fn bound_informative_mixture() {
        // X = 0 w.p. 0.6, else 10^4: the bound is nearly tight.
        let mut pmf = vec![0.0; 10_001];
        pmf[0] = 0.6;
        pmf[10_000] = 0.4;
        let law = OffspringLaw::general(pmf, 0.0).unwrap();
        let c = gw_survival_bound_check(&law, 0.02).unwrap();
        assert!(c.holds);
        assert!(c.rhs > 0.3);
    }

    #[test]
    fn growth_examples() {
        let s = SeedStream::new(1, "gw");
        let det = gw_growth_check(&OffspringLaw::deterministic(3), 2.0, 0.5, 10, 50, &s, Execution::Sequential).unwrap();
        assert_eq!(det[0].conditional, 1.0);
        assert!(det[1..].iter().all(|g| g.conditional == 0.0));
        let pois = gw_growth_check(&OffspringLaw::poisson(20.0).unwrap(), 2.0, 0.5, 8, 2000, &s, Execution::Parallel).unwrap();
        assert!(pois.iter().all(|g| g.conditional <= g.envelope));
    }
}
