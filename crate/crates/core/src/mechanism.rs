//! Learner-side mechanisms.
//!
//! All mechanisms share one lifecycle per round: [`Mechanism::select`] sees the
//! `K` reports and picks an arm (or none once every arm is eliminated), then
//! [`Mechanism::record`] feeds back the observed reward and evaluates the
//! elimination trigger, if the mechanism has one.
//!
//! | kind | selection | elimination |
//! |------|-----------|-------------|
//! | `Ggtm` | greedy on `⟨θ*, x⟩` over active arms | `Σ⟨θ*, x⟩ > Σr + 2√(n ln T)` |
//! | `OptGtm` | per-arm optimistic score over active arms | `Σ lcb > Σr + 2√(n ln T)` |
//! | `LinUcb` | shared optimistic score over all arms | never |
//! | `GreedyKnownTheta` | greedy on `⟨θ*, x⟩` over all arms | never |
//! | `Uniform` | uniform over all arms | never |
//! | `DeterministicIc` | greedy, then uniform over active arms in the last `K+1` rounds | reported value ≠ reward |
//!
//! Argmax ties are broken uniformly at random.

use serde::{Deserialize, Serialize};

use crate::chance::Chance;
use crate::error::{invalid, Error, Result};
use crate::estimator::{ArmEstimator, ScoreMode};
use crate::geometry::{all_finite, project_to_unit_ball, Vector};

/// Tolerance of the reported-value-equals-reward test in the noiseless mechanism.
pub const IC_TOLERANCE: f64 = 1e-9;

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Ggtm,
    OptGtm,
    LinUcb,
    GreedyKnownTheta,
    Uniform,
    DeterministicIc,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Ggtm => "ggtm",
            MechanismKind::OptGtm => "opt_gtm",
            MechanismKind::LinUcb => "lin_ucb",
            MechanismKind::GreedyKnownTheta => "greedy_known_theta",
            MechanismKind::Uniform => "uniform",
            MechanismKind::DeterministicIc => "deterministic_ic",
        }
    }

    pub fn knows_theta(self) -> bool {
        matches!(
            self,
            MechanismKind::Ggtm | MechanismKind::GreedyKnownTheta | MechanismKind::DeterministicIc
        )
    }

    pub fn eliminates(self) -> bool {
        matches!(
            self,
            MechanismKind::Ggtm | MechanismKind::OptGtm | MechanismKind::DeterministicIc
        )
    }
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Confidence level; `1/T²` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Norm bound `S`; the environment's bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_bound: Option<f64>,
    /// Softmax-smoothed selection, probability ∝ `exp(T · score)`.
    #[serde(default)]
    pub softmax: bool,
}

impl MechanismConfig {
    pub fn new(kind: MechanismKind) -> Self {
        Self {
            kind,
            lambda: 1.0,
            delta: None,
            s_bound: None,
            softmax: false,
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind.name()
    }

    pub fn delta_for(&self, horizon: usize) -> f64 {
        self.delta
            .unwrap_or_else(|| (1.0 / (horizon as f64 * horizon as f64)).min(0.5))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid("mechanism.lambda", "must be finite and positive"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(invalid("mechanism.delta", "must lie in (0, 1)"));
            }
        }
        if let Some(s) = self.s_bound {
            if !(s.is_finite() && s >= 0.0) {
                return Err(invalid("mechanism.s_bound", "must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// The per-round score function a mechanism publishes for an arm.
#[derive(Debug, Clone, Copy)]
pub enum PublicScore<'a> {
    /// `x ↦ ⟨θ, x⟩`
    Linear(&'a Vector),
    /// `x ↦ ⟨θ̂, x⟩ + ρ‖x‖_{V⁻¹}`
    Optimistic(&'a ArmEstimator),
    /// Selection ignores reports.
    Uninformative,
}

impl PublicScore<'_> {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            PublicScore::Linear(theta) => theta.dot(x),
            PublicScore::Optimistic(est) => est.score(x, ScoreMode::Optimistic).unwrap_or(f64::NAN),
            PublicScore::Uninformative => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub arm: Option<usize>,
    /// Score of every candidate arm; `None` for arms that were not candidates.
    pub scores: Vec<Option<f64>>,
    /// Arms whose report had to be projected onto the unit ball.
    pub projected: Vec<usize>,
}

/// Mechanism state for one deployment of `T` rounds.
#[derive(Debug, Clone)]
pub struct Mechanism {
    config: MechanismConfig,
    num_arms: usize,
    horizon: usize,
    log_horizon: f64,
    round: usize,
    active: Vec<bool>,
    reported_sum: Vec<f64>,
    pessimistic_sum: Vec<f64>,
    observed_sum: Vec<f64>,
    counts: Vec<usize>,
    estimators: Vec<ArmEstimator>,
    shared: Option<ArmEstimator>,
    theta_star: Option<Vector>,
    elimination_round: Vec<Option<usize>>,
    pending: Option<usize>,
}

impl Mechanism {
    /// `theta_star` is retained only by the mechanisms that know it.
    pub fn new(config: &MechanismConfig, num_arms: usize, horizon: usize, theta_star: &Vector, s_bound: f64) -> Result<Self> {
        config.validate()?;
        if num_arms == 0 {
            return Err(invalid("num_arms", "must be positive"));
        }
        if horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        let dim = theta_star.len();
        let delta = config.delta_for(horizon);
        let s = config.s_bound.unwrap_or(s_bound);
        let estimators = if config.kind == MechanismKind::OptGtm {
            (0..num_arms)
                .map(|_| ArmEstimator::new(dim, config.lambda, delta, s))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let shared = if config.kind == MechanismKind::LinUcb {
            Some(ArmEstimator::new(dim, config.lambda, delta, s)?)
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            num_arms,
            horizon,
            log_horizon: (horizon as f64).ln(),
            round: 0,
            active: vec![true; num_arms],
            reported_sum: vec![0.0; num_arms],
            pessimistic_sum: vec![0.0; num_arms],
            observed_sum: vec![0.0; num_arms],
            counts: vec![0; num_arms],
            estimators,
            shared,
            theta_star: config.kind.knows_theta().then(|| theta_star.clone()),
            elimination_round: vec![None; num_arms],
            pending: None,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.config.kind
    }

    pub fn config(&self) -> &MechanismConfig {
        &self.config
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn is_active(&self, arm: usize) -> bool {
        self.active[arm]
    }

    pub fn active_set(&self) -> Vec<usize> {
        (0..self.num_arms).filter(|&i| self.active[i]).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn observed_sum(&self) -> &[f64] {
        &self.observed_sum
    }

    pub fn reported_sum(&self) -> &[f64] {
        &self.reported_sum
    }

    pub fn pessimistic_sum(&self) -> &[f64] {
        &self.pessimistic_sum
    }

    /// Round in which the trigger fired for each arm.
    pub fn elimination_round(&self) -> &[Option<usize>] {
        &self.elimination_round
    }

    pub fn estimator(&self, arm: usize) -> Option<&ArmEstimator> {
        match self.config.kind {
            MechanismKind::OptGtm => self.estimators.get(arm),
            MechanismKind::LinUcb => self.shared.as_ref(),
            _ => None,
        }
    }

    /// Hoeffding width `2√(n ln T)` of the observed-reward upper bound.
    pub fn confidence_width(&self, n: usize) -> f64 {
        2.0 * (n as f64 * self.log_horizon).sqrt()
    }

    /// True when no round has been played yet.
    pub fn is_fresh(&self) -> bool {
        self.round == 0
            && self.active.iter().all(|a| *a)
            && self.counts.iter().all(|c| *c == 0)
            && self.reported_sum.iter().all(|s| *s == 0.0)
            && self.pessimistic_sum.iter().all(|s| *s == 0.0)
            && self.observed_sum.iter().all(|s| *s == 0.0)
    }

    pub fn public_score(&self, arm: usize) -> PublicScore<'_> {
        match self.config.kind {
            MechanismKind::Ggtm | MechanismKind::GreedyKnownTheta | MechanismKind::DeterministicIc => {
                PublicScore::Linear(self.theta_star.as_ref().expect("mechanism knows theta"))
            }
            MechanismKind::OptGtm => PublicScore::Optimistic(&self.estimators[arm]),
            MechanismKind::LinUcb => PublicScore::Optimistic(self.shared.as_ref().expect("shared estimator")),
            MechanismKind::Uniform => PublicScore::Uninformative,
        }
    }

    fn greedy_phase(&self) -> bool {
        (self.round as i64) < self.horizon as i64 - (self.num_arms as i64 + 1)
    }

    fn score(&self, arm: usize, x: &Vector) -> Result<f64> {
        Ok(match self.config.kind {
            MechanismKind::Ggtm | MechanismKind::GreedyKnownTheta | MechanismKind::DeterministicIc => {
                self.theta_star.as_ref().expect("mechanism knows theta").dot(x)
            }
            MechanismKind::OptGtm => self.estimators[arm].score(x, ScoreMode::Optimistic)?,
            MechanismKind::LinUcb => self
                .shared
                .as_ref()
                .expect("shared estimator")
                .score(x, ScoreMode::Optimistic)?,
            MechanismKind::Uniform => 0.0,
        })
    }

    /// Picks this round's arm from the `K` reports. Returns `arm: None` once
    /// the active set is empty; the round then counts as played with reward 0.
    pub fn select(&mut self, reports: &[Vector], chance: &mut dyn Chance) -> Result<Selection> {
        if reports.len() != self.num_arms {
            return Err(Error::ReportCount {
                expected: self.num_arms,
                got: reports.len(),
            });
        }
        if reports.iter().any(|x| !all_finite(x)) {
            return Err(Error::NonFinite("report"));
        }
        if self.pending.is_some() {
            return Err(invalid("select", "previous selection was never recorded"));
        }
        let mut projected = Vec::new();
        let clamped: Vec<Vector> = reports
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (p, moved) = project_to_unit_ball(x);
                if moved {
                    projected.push(i);
                }
                p
            })
            .collect();

        let restrict = self.config.kind.eliminates();
        let candidates: Vec<usize> = (0..self.num_arms)
            .filter(|&i| !restrict || self.active[i])
            .collect();
        let mut scores = vec![None; self.num_arms];
        if candidates.is_empty() {
            self.round += 1;
            return Ok(Selection {
                arm: None,
                scores,
                projected,
            });
        }

        let uniform = match self.config.kind {
            MechanismKind::Uniform => true,
            MechanismKind::DeterministicIc => !self.greedy_phase(),
            _ => false,
        };
        let arm = if uniform {
            for &i in &candidates {
                scores[i] = Some(0.0);
            }
            candidates[chance.uniform_index(candidates.len())]
        } else {
            let mut vals = Vec::with_capacity(candidates.len());
            for &i in &candidates {
                let s = self.score(i, &clamped[i])?;
                scores[i] = Some(s);
                vals.push(s);
            }
            if self.config.softmax {
                candidates[softmax_pick(&vals, self.horizon as f64, chance)]
            } else {
                let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tol = TIE_TOLERANCE * best.abs().max(1.0);
                let ties: Vec<usize> = candidates
                    .iter()
                    .zip(&vals)
                    .filter(|(_, v)| best - **v <= tol)
                    .map(|(i, _)| *i)
                    .collect();
                ties[chance.uniform_index(ties.len())]
            }
        };
        self.pending = Some(arm);
        Ok(Selection {
            arm: Some(arm),
            scores,
            projected,
        })
    }

    /// Records the reward of the arm returned by the last [`select`](Self::select)
    /// and reports whether that arm was eliminated.
    pub fn record(&mut self, arm: usize, report: &Vector, reward: f64) -> Result<bool> {
        if self.pending != Some(arm) {
            return Err(Error::NotSelected { arm });
        }
        if !all_finite(report) {
            return Err(Error::NonFinite("report"));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        let (x, _) = project_to_unit_ball(report);
        self.pending = None;
        self.counts[arm] += 1;
        self.observed_sum[arm] += reward;
        let n = self.counts[arm];
        let ucb_observed = self.observed_sum[arm] + self.confidence_width(n);

        let eliminate = match self.config.kind {
            MechanismKind::Ggtm => {
                let theta = self.theta_star.as_ref().expect("mechanism knows theta");
                self.reported_sum[arm] += theta.dot(&x);
                self.reported_sum[arm] > ucb_observed
            }
            MechanismKind::OptGtm => {
                // The lower bound uses the estimator as it stood before this
                // round's observation.
                let est = &mut self.estimators[arm];
                let lcb = est.score(&x, ScoreMode::Pessimistic)?;
                self.pessimistic_sum[arm] += lcb;
                est.update(&x, reward)?;
                self.pessimistic_sum[arm] > ucb_observed
            }
            MechanismKind::LinUcb => {
                self.shared.as_mut().expect("shared estimator").update(&x, reward)?;
                false
            }
            MechanismKind::DeterministicIc => {
                let theta = self.theta_star.as_ref().expect("mechanism knows theta");
                let claimed = theta.dot(&x);
                self.reported_sum[arm] += claimed;
                (claimed - reward).abs() > IC_TOLERANCE
            }
            MechanismKind::GreedyKnownTheta | MechanismKind::Uniform => false,
        };
        if eliminate {
            self.active[arm] = false;
            self.elimination_round[arm] = Some(self.round);
        }
        self.round += 1;
        Ok(eliminate)
    }
}

fn softmax_pick(scores: &[f64], temperature_inv: f64, chance: &mut dyn Chance) -> usize {
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| ((s - best) * temperature_inv).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = chance.unit() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    scores.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::SeededChance;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn mech(kind: MechanismKind, k: usize, t: usize, theta: &[f64]) -> Mechanism {
        Mechanism::new(&MechanismConfig::new(kind), k, t, &v(theta), 1.0).unwrap()
    }

    #[test]
    fn ggtm_strict_argmax() {
        let mut m = mech(MechanismKind::Ggtm, 2, 10, &[1.0, 0.0]);
        let mut ch = SeededChance::new(0);
        let sel = m.select(&[v(&[0.9, 0.0]), v(&[0.5, 0.0])], &mut ch).unwrap();
        assert_eq!(sel.arm, Some(0));
    }

    #[test]
    fn ggtm_ties_are_uniform() {
        let k = 4;
        let n = 10_000;
        let mut counts = vec![0usize; k];
        let mut ch = SeededChance::new(3);
        let reports = vec![v(&[0.3, 0.4]); k];
        for _ in 0..n {
            let mut m = mech(MechanismKind::Ggtm, k, 10, &[1.0, 0.0]);
            let arm = m.select(&reports, &mut ch).unwrap().arm.unwrap();
            counts[arm] += 1;
        }
        let p = 1.0 / k as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - p).abs() <= 3.0 * se, "{c}");
        }
    }

    #[test]
    fn opt_gtm_fresh_state_ties_equal_norm_reports() {
        let mut m = mech(MechanismKind::OptGtm, 3, 100, &[0.6, 0.8]);
        let mut ch = SeededChance::new(1);
        let reports = [v(&[0.6, 0.0]), v(&[0.0, 0.6]), v(&[-0.6, 0.0])];
        let sel = m.select(&reports, &mut ch).unwrap();
        let s: Vec<f64> = sel.scores.iter().map(|s| s.unwrap()).collect();
        assert!((s[0] - s[1]).abs() < 1e-12 && (s[1] - s[2]).abs() < 1e-12);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            let mut m = mech(MechanismKind::OptGtm, 3, 100, &[0.6, 0.8]);
            counts[m.select(&reports, &mut ch).unwrap().arm.unwrap()] += 1;
        }
        assert!(counts.iter().all(|c| *c > 850), "{counts:?}");
    }

    #[test]
    fn ggtm_trigger_threshold() {
        let t = 10_000;
        // one pull, reported value 1.0 and reward 1.0: 1.0 <= 1.0 + 2√(ln 1e4)
        let mut m = mech(MechanismKind::Ggtm, 1, t, &[1.0]);
        let mut ch = SeededChance::new(0);
        m.select(&[v(&[1.0])], &mut ch).unwrap();
        assert!(!m.record(0, &v(&[1.0]), 1.0).unwrap());
        assert!((1.0 + m.confidence_width(1) - 7.069_708_517_540_585).abs() < 1e-12);

        // Overscaled claim of 10: only reachable with a theta of norm 10.
        let mut m = Mechanism::new(&MechanismConfig::new(MechanismKind::Ggtm), 1, t, &v(&[10.0]), 10.0).unwrap();
        m.select(&[v(&[1.0])], &mut ch).unwrap();
        assert!(m.record(0, &v(&[1.0]), 1.0).unwrap());
        assert!(!m.is_active(0));
        assert_eq!(m.elimination_round()[0], Some(0));
    }

    #[test]
    fn empty_active_set_selects_nothing() {
        let mut m = Mechanism::new(&MechanismConfig::new(MechanismKind::Ggtm), 1, 100, &v(&[10.0]), 10.0).unwrap();
        let mut ch = SeededChance::new(0);
        m.select(&[v(&[1.0])], &mut ch).unwrap();
        m.record(0, &v(&[1.0]), 0.0).unwrap();
        let sel = m.select(&[v(&[1.0])], &mut ch).unwrap();
        assert_eq!(sel.arm, None);
        assert_eq!(m.round(), 2);
        // Eliminated arms never come back.
        for _ in 0..5 {
            assert_eq!(m.select(&[v(&[0.0])], &mut ch).unwrap().arm, None);
        }
    }

    #[test]
    fn deterministic_ic_eliminates_a_lie() {
        let mut m = mech(MechanismKind::DeterministicIc, 1, 100, &[1.0]);
        let mut ch = SeededChance::new(0);
        let sel = m.select(&[v(&[0.9])], &mut ch).unwrap();
        assert_eq!(sel.arm, Some(0));
        // true context 0.5, noiseless reward 0.5
        assert!(m.record(0, &v(&[0.9]), 0.5).unwrap());
        assert!(!m.is_active(0));
    }

    #[test]
    fn deterministic_ic_switches_to_uniform_for_last_rounds() {
        let k = 2;
        let t = 10;
        let mut m = mech(MechanismKind::DeterministicIc, k, t, &[1.0]);
        let mut ch = SeededChance::new(0);
        let mut last_phase_picks = [0usize; 2];
        for round in 0..t {
            let reports = [v(&[0.9]), v(&[0.1])];
            let arm = m.select(&reports, &mut ch).unwrap().arm.unwrap();
            if round < t - (k + 1) {
                assert_eq!(arm, 0);
            } else {
                last_phase_picks[arm] += 1;
            }
            let r = if arm == 0 { 0.9 } else { 0.1 };
            m.record(arm, &reports[arm], r).unwrap();
        }
        assert_eq!(last_phase_picks.iter().sum::<usize>(), k + 1);
    }

    #[test]
    fn record_requires_the_selected_arm() {
        let mut m = mech(MechanismKind::Uniform, 3, 10, &[1.0]);
        let mut ch = SeededChance::new(0);
        let arm = m.select(&[v(&[0.1]), v(&[0.2]), v(&[0.3])], &mut ch).unwrap().arm.unwrap();
        let other = (arm + 1) % 3;
        assert!(matches!(m.record(other, &v(&[0.1]), 0.0), Err(Error::NotSelected { .. })));
        assert!(m.record(arm, &v(&[0.1]), 0.0).is_ok());
        assert!(matches!(m.record(arm, &v(&[0.1]), 0.0), Err(Error::NotSelected { .. })));
    }

    #[test]
    fn wrong_report_count_and_non_finite() {
        let mut m = mech(MechanismKind::Ggtm, 2, 10, &[1.0]);
        let mut ch = SeededChance::new(0);
        assert!(matches!(m.select(&[v(&[0.1])], &mut ch), Err(Error::ReportCount { .. })));
        assert!(matches!(
            m.select(&[v(&[0.1]), v(&[f64::NAN])], &mut ch),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn long_reports_are_projected() {
        let mut m = mech(MechanismKind::Ggtm, 2, 10, &[1.0, 0.0]);
        let mut ch = SeededChance::new(0);
        let sel = m.select(&[v(&[3.0, 4.0]), v(&[0.7, 0.0])], &mut ch).unwrap();
        assert_eq!(sel.projected, vec![0]);
        assert!((sel.scores[0].unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(sel.arm, Some(1));
    }

    #[test]
    fn opt_gtm_pessimistic_sum_uses_pre_update_estimator() {
        let mut m = mech(MechanismKind::OptGtm, 1, 50, &[0.6, 0.8]);
        let mut ch = SeededChance::new(0);
        let mut replay = ArmEstimator::new(2, 1.0, 1.0 / 2500.0, 1.0).unwrap();
        let mut expected = 0.0;
        for k in 0..20 {
            let x = v(&[0.3 + 0.01 * k as f64, -0.2]);
            let r = 0.1 * (k % 4) as f64;
            m.select(std::slice::from_ref(&x), &mut ch).unwrap();
            m.record(0, &x, r).unwrap();
            expected += replay.score(&x, ScoreMode::Pessimistic).unwrap();
            replay.update(&x, r).unwrap();
        }
        assert_eq!(m.pessimistic_sum()[0], expected);
    }

    #[test]
    fn non_eliminating_mechanisms_keep_all_arms() {
        for kind in [MechanismKind::LinUcb, MechanismKind::GreedyKnownTheta, MechanismKind::Uniform] {
            let mut m = mech(kind, 2, 20, &[1.0, 0.0]);
            let mut ch = SeededChance::new(0);
            for _ in 0..20 {
                let reports = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
                let arm = m.select(&reports, &mut ch).unwrap().arm.unwrap();
                m.record(arm, &reports[arm], -5.0).unwrap();
                assert_eq!(m.active_count(), 2);
            }
        }
    }

    #[test]
    fn softmax_prefers_higher_scores() {
        let cfg = MechanismConfig {
            softmax: true,
            ..MechanismConfig::new(MechanismKind::GreedyKnownTheta)
        };
        let mut ch = SeededChance::new(9);
        let mut top = 0;
        for _ in 0..200 {
            let mut m = Mechanism::new(&cfg, 2, 100, &v(&[1.0]), 1.0).unwrap();
            if m.select(&[v(&[0.5]), v(&[0.4])], &mut ch).unwrap().arm == Some(0) {
                top += 1;
            }
        }
        // exp(100 * 0.1) odds: practically always the top arm.
        assert!(top >= 198, "{top}");
    }
}
