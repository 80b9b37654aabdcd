//! Attachment rules: concave functions `f: N0 -> (0, inf)` with `f(0) <= 1`
//! and increments strictly below one.
//!
//! A rule is either affine (`gamma * k + beta`) or a finite table of values
//! continued linearly with `tail_slope`. The tail slope equals the asymptotic
//! slope `gamma`, so every series over the tail can be summed in closed form.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AttachmentRule {
    Linear { gamma: f64, beta: f64 },
    #[serde(rename = "table")]
    Tabulated { values: Vec<f64>, tail_slope: f64 },
}

/// First invariant an attachment rule fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    EmptyTable,
    NonFinite,
    InitialAboveOne { value: f64 },
    NotConcave { k: u64, increment: f64, next_increment: f64 },
    IncrementTooLarge { k: u64, increment: f64 },
    NonPositive { k: u64, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTable => write!(f, "table is empty"),
            Violation::NonFinite => write!(f, "rule contains a non-finite number"),
            Violation::InitialAboveOne { value } => write!(f, "f(0) = {value} > 1"),
            Violation::NotConcave { k, increment, next_increment } => write!(
                f,
                "increments increase at k = {k}: {increment} < {next_increment}"
            ),
            Violation::IncrementTooLarge { k, increment } => {
                write!(f, "increment f({}) - f({k}) = {increment} >= 1", k + 1)
            }
            Violation::NonPositive { k, value } => write!(f, "f({k}) = {value} <= 0"),
        }
    }
}

impl AttachmentRule {
    pub fn linear(gamma: f64, beta: f64) -> Self {
        AttachmentRule::Linear { gamma, beta }
    }

    pub fn table(values: Vec<f64>, tail_slope: f64) -> Self {
        AttachmentRule::Tabulated { values, tail_slope }
    }

    /// `f(k)`.
    #[inline]
    pub fn eval(&self, k: u64) -> f64 {
        match self {
            AttachmentRule::Linear { gamma, beta } => gamma * k as f64 + beta,
            AttachmentRule::Tabulated { values, tail_slope } => {
                let last = values.len() as u64 - 1;
                if k <= last {
                    values[k as usize]
                } else {
                    values[last as usize] + (k - last) as f64 * tail_slope
                }
            }
        }
    }

    /// `f(k + 1) - f(k)`.
    #[inline]
    pub fn increment(&self, k: u64) -> f64 {
        match self {
            AttachmentRule::Linear { gamma, .. } => *gamma,
            AttachmentRule::Tabulated { values, tail_slope } => {
                let k = k as usize;
                if k + 1 < values.len() {
                    values[k + 1] - values[k]
                } else {
                    *tail_slope
                }
            }
        }
    }

    /// Asymptotic slope `lim f(k)/k`, which is also the infimum of the increments.
    pub fn gamma(&self) -> f64 {
        match self {
            AttachmentRule::Linear { gamma, .. } => *gamma,
            AttachmentRule::Tabulated { tail_slope, .. } => *tail_slope,
        }
    }

    /// Largest increment `f(1) - f(0)`.
    pub fn gamma_plus(&self) -> f64 {
        self.eval(1) - self.eval(0)
    }

    /// Index from which `f` is exactly affine with slope `gamma()`.
    pub fn linear_from(&self) -> u64 {
        match self {
            AttachmentRule::Linear { .. } => 0,
            AttachmentRule::Tabulated { values, .. } => values.len() as u64 - 1,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, AttachmentRule::Linear { .. })
    }

    /// Linear parameters `(gamma, beta)` if the rule is affine on all of `N0`.
    pub fn linear_params(&self) -> Option<(f64, f64)> {
        match self {
            AttachmentRule::Linear { gamma, beta } => Some((*gamma, *beta)),
            _ => None,
        }
    }

    /// Returns the first violated invariant, checked in the order
    /// `f(0) <= 1`, concavity, increments below one, positivity.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let (len, tail) = match self {
            AttachmentRule::Linear { gamma, beta } => {
                if !gamma.is_finite() || !beta.is_finite() {
                    return Err(Violation::NonFinite);
                }
                (1usize, *gamma)
            }
            AttachmentRule::Tabulated { values, tail_slope } => {
                if values.is_empty() {
                    return Err(Violation::EmptyTable);
                }
                if !tail_slope.is_finite() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Violation::NonFinite);
                }
                (values.len(), *tail_slope)
            }
        };

        let f0 = self.eval(0);
        if f0 > 1.0 {
            return Err(Violation::InitialAboveOne { value: f0 });
        }
        // Increments are constant from index len - 1 on, so checking up to
        // len covers every pair.
        for k in 0..len as u64 {
            let (d, d_next) = (self.increment(k), self.increment(k + 1));
            // tolerate round-off from tables written as decimals
            if d_next > d + CONCAVITY_SLACK * (1.0 + d.abs()) {
                return Err(Violation::NotConcave { k, increment: d, next_increment: d_next });
            }
        }
        for k in 0..len as u64 {
            let d = self.increment(k);
            if d >= 1.0 {
                return Err(Violation::IncrementTooLarge { k, increment: d });
            }
        }
        // With concave f, positivity everywhere needs a nonnegative tail slope
        // and positive tabulated values.
        for k in 0..len as u64 {
            let v = self.eval(k);
            if v <= 0.0 {
                return Err(Violation::NonPositive { k, value: v });
            }
        }
        if tail < 0.0 {
            let last = len as u64 - 1;
            let value = self.eval(last);
            let k = last + (value / -tail).floor() as u64 + 1;
            return Err(Violation::NonPositive { k, value: self.eval(k) });
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but as an [`Error`].
    pub fn check(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidRule)
    }

    /// Smallest `A` with `f(k) <= A + gamma * k` for all `k`.
    pub fn affine_majorant_intercept(&self) -> f64 {
        let k = self.linear_from();
        self.eval(k) - self.gamma() * k as f64
    }
}

impl fmt::Display for AttachmentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttachmentRule::Linear { gamma, beta } => write!(f, "linear(gamma={gamma}, beta={beta})"),
            AttachmentRule::Tabulated { values, tail_slope } => {
                write!(f, "table({values:?}, tail_slope={tail_slope})")
            }
        }
    }
}

const CONCAVITY_SLACK: f64 = 1e-12;

type Generator = Arc<dyn Fn(f64) -> AttachmentRule + Send + Sync>;

/// Parameterised family `t -> f_t`, expected to decrease pointwise in `t`.
#[derive(Clone)]
pub struct RuleFamily {
    pub base: AttachmentRule,
    generator: Generator,
    pub monotone: bool,
}

impl fmt::Debug for RuleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RuleFamily")
            .field("base", &self.base)
            .field("monotone", &self.monotone)
            .finish_non_exhaustive()
    }
}

impl RuleFamily {
    pub fn new<G>(generator: G, monotone: bool) -> Self
    where
        G: Fn(f64) -> AttachmentRule + Send + Sync + 'static,
    {
        let base = generator(0.0);
        RuleFamily { base, generator: Arc::new(generator), monotone }
    }

    /// `f_t(k) = gamma k + beta_limit + offset / (1 + t)`.
    pub fn linear_beta(gamma: f64, beta_limit: f64, offset: f64) -> Self {
        Self::new(move |t| AttachmentRule::linear(gamma, beta_limit + offset / (1.0 + t)), true)
    }

    /// `f_t(k) = (gamma_limit + offset / (1 + t)) k + beta`.
    pub fn linear_gamma(beta: f64, gamma_limit: f64, offset: f64) -> Self {
        Self::new(move |t| AttachmentRule::linear(gamma_limit + offset / (1.0 + t), beta), true)
    }

    pub fn at(&self, t: f64) -> AttachmentRule {
        (self.generator)(t)
    }

    /// Checks `f_t(k) >= f_s(k)` for every `t <= s` on the grid and that each
    /// member is a valid rule with `gamma_t < 1/2`.
    pub fn check_monotone(&self, t_grid: &[f64], k_max: u64) -> Result<()> {
        let mut ts = t_grid.to_vec();
        ts.sort_by(f64::total_cmp);
        let members: Vec<AttachmentRule> = ts.iter().map(|&t| self.at(t)).collect();
        for (t, rule) in ts.iter().zip(&members) {
            rule.check()?;
            if rule.gamma() >= 0.5 {
                return Err(Error::PreconditionViolation(format!(
                    "member at t = {t} has gamma = {} >= 1/2",
                    rule.gamma()
                )));
            }
        }
        for (i, pair) in members.windows(2).enumerate() {
            for k in 0..=k_max {
                if pair[1].eval(k) > pair[0].eval(k) {
                    return Err(Error::PreconditionViolation(format!(
                        "family increases between t = {} and t = {} at k = {k}",
                        ts[i],
                        ts[i + 1]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        assert_eq!(AttachmentRule::linear(0.0, 0.5).eval(7), 0.5);
        let r = AttachmentRule::linear(0.25, 1.0 / 12.0);
        assert!((r.eval(12) - (1.0 / 12.0 + 3.0)).abs() < 1e-15);
        let t = AttachmentRule::table(vec![0.5, 0.9, 1.2], 0.2);
        assert!((t.eval(5) - 1.8).abs() < 1e-12);
        assert_eq!(t.eval(2), 1.2);
    }

    #[test]
    fn validate_examples() {
        assert_eq!(AttachmentRule::linear(0.4, 0.3).validate(), Ok(()));
        assert_eq!(
            AttachmentRule::linear(0.0, 1.5).validate(),
            Err(Violation::InitialAboveOne { value: 1.5 })
        );
        match AttachmentRule::table(vec![0.5, 1.6], 0.1).validate() {
            Err(Violation::IncrementTooLarge { k: 0, increment }) => {
                assert!((increment - 1.1).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            AttachmentRule::table(vec![0.5, 0.6, 0.9], 0.1).validate(),
            Err(Violation::NotConcave { k: 0, .. })
        ));
        assert!(matches!(
            AttachmentRule::table(vec![0.5, 0.9], 0.5).validate(),
            Err(Violation::NotConcave { k: 0, .. })
        ));
        assert!(matches!(
            AttachmentRule::table(vec![0.5, 0.4], -0.1).validate(),
            Err(Violation::NonPositive { .. })
        ));
        assert_eq!(AttachmentRule::table(vec![], 0.1).validate(), Err(Violation::EmptyTable));
        // tail slope equal to the last increment is allowed
        assert_eq!(AttachmentRule::table(vec![0.5, 0.7], 0.2).validate(), Ok(()));
    }

    #[test]
    fn gammas() {
        let r = AttachmentRule::linear(0.25, 0.5);
        assert_eq!((r.gamma(), r.gamma_plus()), (0.25, 0.25));
        let t = AttachmentRule::table(vec![0.5, 0.9, 1.2], 0.2);
        assert_eq!(t.gamma(), 0.2);
        assert!((t.gamma_plus() - 0.4).abs() < 1e-12);
        assert_eq!(AttachmentRule::linear(0.0, 0.25).gamma(), 0.0);
    }

    #[test]
    fn config_representation() {
        let r: AttachmentRule =
            serde_json::from_str(r#"{"linear":{"gamma":0.25,"beta":0.5}}"#).unwrap();
        assert_eq!(r, AttachmentRule::linear(0.25, 0.5));
        let t: AttachmentRule =
            serde_json::from_str(r#"{"table":{"values":[0.5,0.9,1.2],"tail_slope":0.2}}"#).unwrap();
        assert_eq!(t, AttachmentRule::table(vec![0.5, 0.9, 1.2], 0.2));
    }

    #[test]
    fn families() {
        let fam = RuleFamily::linear_beta(0.1, 0.2, 0.3);
        assert!(fam.check_monotone(&[0.0, 1.0, 5.0, 40.0], 50).is_ok());
        let bad = RuleFamily::new(|t| AttachmentRule::linear(0.1, 0.2 + 0.01 * t), true);
        assert!(bad.check_monotone(&[0.0, 1.0], 10).is_err());
    }

    fn concave_table() -> impl Strategy<Value = AttachmentRule> {
        (0.01f64..1.0, prop::collection::vec(0.0f64..0.99, 1..8)).prop_map(|(f0, mut incs)| {
            incs.sort_by(|a, b| b.total_cmp(a));
            let tail = incs.pop().unwrap();
            let mut values = vec![f0];
            for d in incs {
                let last = *values.last().unwrap();
                values.push(last + d);
            }
            AttachmentRule::table(values, tail)
        })
    }

    proptest! {
        #[test]
        fn generated_tables_are_valid(rule in concave_table()) {
            prop_assert_eq!(rule.validate(), Ok(()));
        }

        #[test]
        fn increments_nonincreasing_and_below_one(rule in concave_table(), k in 0u64..200) {
            prop_assert!(rule.increment(k + 1) <= rule.increment(k));
            prop_assert!(rule.increment(k) < 1.0);
            prop_assert!(rule.eval(k) > 0.0);
            prop_assert!(rule.gamma() <= rule.gamma_plus() + 1e-15);
        }

        #[test]
        fn affine_majorant_dominates(rule in concave_table(), k in 0u64..500) {
            let a = rule.affine_majorant_intercept();
            prop_assert!(rule.eval(k) <= a + rule.gamma() * k as f64 + 1e-12);
        }
    }
}
