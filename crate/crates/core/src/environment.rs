//! Ground-truth bandit instances.
//!
//! An [`EnvironmentSpec`] describes the hidden parameter `theta_star`, the
//! noise model, and where the true contexts come from. [`generate_instance`]
//! turns it into a [`TrueContextSequence`]: the `T x K` true contexts together
//! with the per-round optimal arm and gaps. Mechanisms never see this object;
//! arms and metrics do.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chance::{derive_seed, rng_from, stream, Chance};
use crate::error::{invalid, Error, Result};
use crate::geometry::{random_unit_vector, Vector};

/// Attempts allowed per round when rejection-sampling user vectors.
pub const MAX_RESAMPLES: usize = 10_000;

const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    Gaussian { sigma: f64 },
    Bernoulli,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian { sigma: 0.1 }
    }
}

/// Distribution of the per-round user vectors `c_t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserDistribution {
    /// Uniform on the unit sphere.
    #[default]
    Sphere,
    /// Uniform on the unit sphere, folded into the nonnegative orthant.
    Orthant,
}

fn default_min_gap() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub user_dim: usize,
    pub arm_feature_dim: usize,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    /// Seed of the arm features `y*_i`; they stay fixed across regenerations.
    pub seed: u64,
    #[serde(default)]
    pub users: UserDistribution,
    /// Explicit arm features; drawn uniformly from the unit sphere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_features: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSource {
    /// `contexts[t][i]` is the true context of arm `i` in round `t`.
    Explicit { contexts: Vec<Vec<Vec<f64>>> },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub dim: usize,
    pub num_arms: usize,
    pub horizon: usize,
    pub theta_star: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
    pub contexts: ContextSource,
    /// Upper bound `S` on `||theta_star||`.
    pub s_bound: f64,
}

impl EnvironmentSpec {
    /// The standard synthetic setup: `theta_star = 1/√d` in every coordinate,
    /// user vectors and arm features uniform on the sphere, `Δ_min = 0.05`,
    /// Gaussian noise with `σ = 0.1`.
    pub fn synthetic(dim: usize, num_arms: usize, horizon: usize, feature_seed: u64) -> Self {
        let w = 1.0 / (dim.max(1) as f64).sqrt();
        Self {
            dim,
            num_arms,
            horizon,
            theta_star: vec![w; dim],
            noise: NoiseModel::default(),
            contexts: ContextSource::Synthetic(SyntheticSpec {
                user_dim: dim,
                arm_feature_dim: dim,
                min_gap: default_min_gap(),
                seed: feature_seed,
                users: UserDistribution::Sphere,
                arm_features: None,
            }),
            s_bound: 1.0,
        }
    }

    pub fn theta(&self) -> Vector {
        Vector::from_column_slice(&self.theta_star)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("environment.dim", "must be positive"));
        }
        if self.num_arms == 0 {
            return Err(invalid("environment.num_arms", "must be positive"));
        }
        if self.horizon == 0 {
            return Err(invalid("environment.horizon", "must be positive"));
        }
        if self.theta_star.len() != self.dim {
            return Err(invalid(
                "environment.theta_star",
                format!("length {} != dim {}", self.theta_star.len(), self.dim),
            ));
        }
        if self.theta_star.iter().any(|v| !v.is_finite()) {
            return Err(invalid("environment.theta_star", "non-finite entry"));
        }
        let norm = self.theta().norm();
        if !(self.s_bound.is_finite() && self.s_bound >= norm - NORM_SLACK) {
            return Err(invalid(
                "environment.s_bound",
                format!("{} is below ||theta_star|| = {norm}", self.s_bound),
            ));
        }
        if let NoiseModel::Gaussian { sigma } = self.noise {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(invalid("environment.noise.sigma", "must be finite and >= 0"));
            }
        }
        match &self.contexts {
            ContextSource::Explicit { contexts } => {
                if contexts.len() != self.horizon {
                    return Err(invalid(
                        "environment.contexts",
                        format!("{} rounds given, horizon is {}", contexts.len(), self.horizon),
                    ));
                }
                for (t, row) in contexts.iter().enumerate() {
                    if row.len() != self.num_arms {
                        return Err(invalid(
                            "environment.contexts",
                            format!("round {t} has {} arms, expected {}", row.len(), self.num_arms),
                        ));
                    }
                    for x in row {
                        if x.len() != self.dim {
                            return Err(invalid(
                                "environment.contexts",
                                format!("round {t} has a context of length {}", x.len()),
                            ));
                        }
                    }
                }
            }
            ContextSource::Synthetic(s) => {
                if s.user_dim != self.dim || s.arm_feature_dim != self.dim {
                    return Err(invalid(
                        "environment.contexts",
                        "synthetic generator requires user_dim = arm_feature_dim = dim",
                    ));
                }
                if !(s.min_gap.is_finite() && s.min_gap > 0.0) {
                    return Err(invalid("environment.contexts.min_gap", "must be positive"));
                }
                if let Some(features) = &s.arm_features {
                    if features.len() != self.num_arms || features.iter().any(|y| y.len() != self.dim) {
                        return Err(invalid(
                            "environment.contexts.arm_features",
                            "need one feature vector of length dim per arm",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The hidden ground truth of one episode.
#[derive(Debug, Clone)]
pub struct TrueContextSequence {
    pub theta_star: Vector,
    /// `contexts[t][i]`
    pub contexts: Vec<Vec<Vector>>,
    /// `values[t][i] = <theta_star, contexts[t][i]>`
    pub values: Vec<Vec<f64>>,
    pub optimal_arm: Vec<usize>,
    pub gaps: Vec<Vec<f64>>,
    /// User vectors `c_t` (synthetic instances only).
    pub users: Option<Vec<Vector>>,
    /// Arm features `y*_i` (synthetic instances only).
    pub arm_features: Option<Vec<Vector>>,
    pub fingerprint: u64,
}

impl TrueContextSequence {
    pub fn horizon(&self) -> usize {
        self.contexts.len()
    }

    pub fn num_arms(&self) -> usize {
        self.contexts.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn optimal_value(&self, t: usize) -> f64 {
        self.values[t][self.optimal_arm[t]]
    }

    fn assemble(
        theta_star: Vector,
        contexts: Vec<Vec<Vector>>,
        users: Option<Vec<Vector>>,
        arm_features: Option<Vec<Vector>>,
    ) -> Self {
        let values: Vec<Vec<f64>> = contexts
            .iter()
            .map(|row| row.iter().map(|x| theta_star.dot(x)).collect())
            .collect();
        let optimal_arm: Vec<usize> = values.iter().map(|row| argmax_lowest(row)).collect();
        let gaps = values
            .iter()
            .zip(&optimal_arm)
            .map(|(row, &best)| row.iter().map(|v| row[best] - v).collect())
            .collect();
        let fingerprint = fingerprint_of(&theta_star, &contexts);
        Self {
            theta_star,
            contexts,
            values,
            optimal_arm,
            gaps,
            users,
            arm_features,
            fingerprint,
        }
    }
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn fingerprint_of(theta: &Vector, contexts: &[Vec<Vector>]) -> u64 {
    // FNV-1a over the IEEE bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: f64| {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    theta.iter().for_each(|v| feed(*v));
    for row in contexts {
        for x in row {
            x.iter().for_each(|v| feed(*v));
        }
    }
    h
}

/// `phi(c, y) = (c ⊙ y) / max(1, ||c ⊙ y||)`.
pub fn feature_map(c: &Vector, y: &Vector) -> Result<Vector> {
    if c.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: y.len(),
        });
    }
    let p = c.component_mul(y);
    let n = p.norm();
    Ok(if n > 1.0 { p / n } else { p })
}

/// Draws a reward with mean `<theta_star, x_true>` under the given noise model.
pub fn sample_reward(theta_star: &Vector, x_true: &Vector, noise: &NoiseModel, chance: &mut dyn Chance) -> Result<f64> {
    let mean = theta_star.dot(x_true);
    if !mean.is_finite() {
        return Err(Error::NonFinite("reward mean"));
    }
    match noise {
        NoiseModel::None => Ok(mean),
        NoiseModel::Gaussian { sigma } => Ok(mean + chance.gaussian(*sigma)),
        NoiseModel::Bernoulli => {
            if !(0.0..=1.0).contains(&mean) {
                return Err(Error::BernoulliMean(mean));
            }
            Ok(if chance.bernoulli(mean) { 1.0 } else { 0.0 })
        }
    }
}

fn sample_user<R: Rng + ?Sized>(dim: usize, dist: UserDistribution, rng: &mut R) -> Vector {
    let c = random_unit_vector(dim, rng);
    match dist {
        UserDistribution::Sphere => c,
        UserDistribution::Orthant => c.map(f64::abs),
    }
}

fn row_admissible(values: &[f64], min_gap: Option<f64>, noise: &NoiseModel) -> bool {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    let mut worst = f64::INFINITY;
    for &v in values {
        if v > best {
            second = best;
            best = v;
        } else if v > second {
            second = v;
        }
        worst = worst.min(v);
    }
    if best - worst > 1.0 {
        return false;
    }
    if let Some(gap) = min_gap {
        if values.len() > 1 && best - second < gap {
            return false;
        }
    }
    if *noise == NoiseModel::Bernoulli && values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return false;
    }
    true
}

/// Arm features `y*_i` of a synthetic instance. They depend only on the
/// synthetic seed so that regenerated instances share them.
pub fn synthetic_arm_features(spec: &EnvironmentSpec, synth: &SyntheticSpec) -> Vec<Vector> {
    match &synth.arm_features {
        Some(features) => features.iter().map(|y| Vector::from_column_slice(y)).collect(),
        None => {
            let mut rng = rng_from(derive_seed(synth.seed, stream::ARMS));
            (0..spec.num_arms)
                .map(|_| random_unit_vector(synth.arm_feature_dim, &mut rng))
                .collect()
        }
    }
}

/// Builds the true context sequence. Deterministic in `(spec, seed)`; for
/// explicit sources the seed is ignored.
pub fn generate_instance(spec: &EnvironmentSpec, seed: u64) -> Result<TrueContextSequence> {
    spec.validate()?;
    let theta = spec.theta();
    match &spec.contexts {
        ContextSource::Explicit { contexts } => {
            let mut rows = Vec::with_capacity(spec.horizon);
            for (t, row) in contexts.iter().enumerate() {
                let mut xs = Vec::with_capacity(spec.num_arms);
                for (i, x) in row.iter().enumerate() {
                    let x = Vector::from_column_slice(x);
                    if !x.iter().all(|v| v.is_finite()) {
                        return Err(Error::NonFinite("explicit context"));
                    }
                    let norm = x.norm();
                    if norm > 1.0 + NORM_SLACK {
                        return Err(Error::NormBound { round: t, arm: i, norm });
                    }
                    xs.push(x);
                }
                let values: Vec<f64> = xs.iter().map(|x| theta.dot(x)).collect();
                let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - values.iter().cloned().fold(f64::INFINITY, f64::min);
                if spread > 1.0 + NORM_SLACK {
                    return Err(Error::SpreadBound { round: t, spread });
                }
                if spec.noise == NoiseModel::Bernoulli {
                    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                        return Err(Error::BernoulliMean(*v));
                    }
                }
                rows.push(xs);
            }
            Ok(TrueContextSequence::assemble(theta, rows, None, None))
        }
        ContextSource::Synthetic(synth) => {
            let features = synthetic_arm_features(spec, synth);
            let mut rng = rng_from(derive_seed(seed, stream::ENVIRONMENT));
            let mut rows = Vec::with_capacity(spec.horizon);
            let mut users = Vec::with_capacity(spec.horizon);
            for t in 0..spec.horizon {
                let mut accepted = None;
                for _ in 0..MAX_RESAMPLES {
                    let c = sample_user(synth.user_dim, synth.users, &mut rng);
                    let xs: Vec<Vector> = features
                        .iter()
                        .map(|y| feature_map(&c, y))
                        .collect::<Result<_>>()?;
                    let values: Vec<f64> = xs.iter().map(|x| theta.dot(x)).collect();
                    if row_admissible(&values, Some(synth.min_gap), &spec.noise) {
                        accepted = Some((c, xs));
                        break;
                    }
                }
                let (c, xs) = accepted.ok_or(Error::GapInfeasible {
                    round: t,
                    attempts: MAX_RESAMPLES,
                })?;
                users.push(c);
                rows.push(xs);
            }
            Ok(TrueContextSequence::assemble(theta, rows, Some(users), Some(features)))
        }
    }
}

/// `(dim, num_arms, horizon, contexts, theta_star)`
pub type ParsedMatrix = (usize, usize, usize, Vec<Vec<Vec<f64>>>, Vec<f64>);

/// Parses the plain-text instance format: a `d K T` header, `T*K` rows of `d`
/// reals in round-major then arm order, and a final row holding `theta_star`.
pub fn parse_matrix_text(text: &str) -> Result<ParsedMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_row = |line: usize, s: &str| -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("{tok:?}: {e}"),
                })
            })
            .collect()
    };
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|e| Error::Parse {
                line: hl,
                message: format!("{tok:?}: {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: hl,
            message: "header must be `d K T`".into(),
        });
    }
    let (d, k, t) = (dims[0], dims[1], dims[2]);
    let mut contexts = Vec::with_capacity(t);
    for _ in 0..t {
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, s) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: "unexpected end of file".into(),
            })?;
            let x = parse_row(ln, s)?;
            if x.len() != d {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected {d} values, found {}", x.len()),
                });
            }
            row.push(x);
        }
        contexts.push(row);
    }
    let (ln, s) = lines.next().ok_or(Error::Parse {
        line: 0,
        message: "missing theta_star line".into(),
    })?;
    let theta = parse_row(ln, s)?;
    if theta.len() != d {
        return Err(Error::Parse {
            line: ln,
            message: format!("theta_star needs {d} values"),
        });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            message: "trailing data".into(),
        });
    }
    Ok((d, k, t, contexts, theta))
}

pub fn format_matrix_text(contexts: &[Vec<Vec<f64>>], theta_star: &[f64]) -> String {
    let k = contexts.first().map_or(0, Vec::len);
    let mut out = format!("{} {} {}\n", theta_star.len(), k, contexts.len());
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    for row in contexts {
        for x in row {
            let _ = writeln!(out, "{}", join(x));
        }
    }
    let _ = writeln!(out, "{}", join(theta_star));
    out
}

/// Reads an explicit instance file into a spec with the given noise and `S`.
pub fn load_matrix_file(path: &Path, noise: NoiseModel, s_bound: Option<f64>) -> Result<EnvironmentSpec> {
    let text = std::fs::read_to_string(path)?;
    let (d, k, t, contexts, theta_star) = parse_matrix_text(&text)?;
    let norm = theta_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(EnvironmentSpec {
        dim: d,
        num_arms: k,
        horizon: t,
        theta_star,
        noise,
        contexts: ContextSource::Explicit { contexts },
        s_bound: s_bound.unwrap_or(norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::SeededChance;

    pub(crate) fn explicit_1d(values: &[[f64; 2]]) -> EnvironmentSpec {
        EnvironmentSpec {
            dim: 1,
            num_arms: 2,
            horizon: values.len(),
            theta_star: vec![1.0],
            noise: NoiseModel::None,
            contexts: ContextSource::Explicit {
                contexts: values.iter().map(|r| r.iter().map(|v| vec![*v]).collect()).collect(),
            },
            s_bound: 1.0,
        }
    }

    fn synthetic(seed: u64) -> EnvironmentSpec {
        EnvironmentSpec {
            dim: 5,
            num_arms: 5,
            horizon: 200,
            theta_star: vec![0.6, -0.2, 0.5, 0.3, 0.5],
            noise: NoiseModel::default(),
            contexts: ContextSource::Synthetic(SyntheticSpec {
                user_dim: 5,
                arm_feature_dim: 5,
                min_gap: 0.02,
                seed,
                users: UserDistribution::Sphere,
                arm_features: None,
            }),
            s_bound: 1.0,
        }
    }

    #[test]
    fn one_dimensional_gaps() {
        let inst = generate_instance(&explicit_1d(&[[0.5, 0.25], [1.0, 0.25]]), 0).unwrap();
        assert_eq!(inst.optimal_arm, vec![0, 0]);
        assert_eq!(inst.gaps, vec![vec![0.0, 0.25], vec![0.0, 0.75]]);
    }

    #[test]
    fn under_reporting_instance_alternates() {
        // x*_{t,1} is 0 on even (1-based) rounds and 1 on odd ones; x*_{t,2} = 1/4.
        let rows: Vec<[f64; 2]> = (1..=6).map(|t| [if t % 2 == 0 { 0.0 } else { 1.0 }, 0.25]).collect();
        let inst = generate_instance(&explicit_1d(&rows), 0).unwrap();
        assert_eq!(inst.optimal_arm, vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = synthetic(42);
        let a = generate_instance(&spec, 42).unwrap();
        let b = generate_instance(&spec, 42).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.contexts, b.contexts);
        let c = generate_instance(&spec, 43).unwrap();
        assert_ne!(a.fingerprint, c.fingerprint);
        // Arm features depend only on the synthetic seed.
        assert_eq!(a.arm_features, c.arm_features);
    }

    #[test]
    fn synthetic_respects_invariants() {
        let inst = generate_instance(&synthetic(9), 1).unwrap();
        for t in 0..inst.horizon() {
            let zero_gaps = inst.gaps[t].iter().filter(|g| **g == 0.0).count();
            assert_eq!(zero_gaps, 1);
            for (i, g) in inst.gaps[t].iter().enumerate() {
                assert!(inst.contexts[t][i].norm() <= 1.0 + 1e-12);
                assert!(*g == 0.0 || *g >= 0.02);
                assert!(*g <= 1.0);
            }
        }
    }

    #[test]
    fn infeasible_gap_is_reported() {
        let mut spec = synthetic(1);
        if let ContextSource::Synthetic(s) = &mut spec.contexts {
            s.min_gap = 0.99;
        }
        spec.horizon = 3;
        assert!(matches!(generate_instance(&spec, 0), Err(Error::GapInfeasible { round: 0, .. })));
    }

    #[test]
    fn explicit_norm_violation_is_rejected() {
        let spec = explicit_1d(&[[1.5, 0.0]]);
        assert!(matches!(generate_instance(&spec, 0), Err(Error::NormBound { arm: 0, .. })));
    }

    #[test]
    fn feature_map_cases() {
        let e1 = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(feature_map(&e1, &e1).unwrap(), e1);

        // ||c ⊙ y|| = 2 before clamping.
        let s = (2.0f64 / 5.0f64.sqrt()).sqrt();
        let c = Vector::from_element(5, s);
        let y = Vector::from_element(5, s);
        assert!(((c.component_mul(&y)).norm() - 2.0).abs() < 1e-12);
        assert!((feature_map(&c, &y).unwrap().norm() - 1.0).abs() < 1e-12);

        let zero = Vector::zeros(5);
        assert_eq!(feature_map(&zero, &y).unwrap(), zero);

        assert!(matches!(
            feature_map(&zero, &Vector::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noiseless_reward_is_the_mean() {
        let mut ch = SeededChance::new(0);
        let r = sample_reward(
            &Vector::from_vec(vec![1.0, 0.0]),
            &Vector::from_vec(vec![0.5, 0.3]),
            &NoiseModel::None,
            &mut ch,
        )
        .unwrap();
        assert_eq!(r, 0.5);
    }

    #[test]
    fn gaussian_reward_concentrates() {
        let mut ch = SeededChance::new(11);
        let theta = Vector::from_vec(vec![0.8, 0.6]);
        let x = Vector::from_vec(vec![0.5, -0.2]);
        let n = 100_000;
        let sigma = 0.1;
        let mean: f64 = (0..n)
            .map(|_| sample_reward(&theta, &x, &NoiseModel::Gaussian { sigma }, &mut ch).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - theta.dot(&x)).abs() <= 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn bernoulli_reward_frequency() {
        let mut ch = SeededChance::new(5);
        let theta = Vector::from_vec(vec![1.0]);
        let x = Vector::from_vec(vec![0.25]);
        let n = 100_000;
        let hits: f64 = (0..n)
            .map(|_| sample_reward(&theta, &x, &NoiseModel::Bernoulli, &mut ch).unwrap())
            .sum();
        let freq = hits / n as f64;
        assert!((0.24..=0.26).contains(&freq), "{freq}");
        let bad = sample_reward(&theta, &Vector::from_vec(vec![-0.5]), &NoiseModel::Bernoulli, &mut ch);
        assert!(matches!(bad, Err(Error::BernoulliMean(_))));
    }

    #[test]
    fn matrix_text_round_trip() {
        let contexts = vec![vec![vec![0.5, 0.1], vec![0.25, -0.3]], vec![vec![1.0, 0.0], vec![0.0, 0.5]]];
        let theta = vec![1.0, 0.0];
        let text = format_matrix_text(&contexts, &theta);
        assert!(text.starts_with("2 2 2\n"));
        let (d, k, t, parsed, th) = parse_matrix_text(&text).unwrap();
        assert_eq!((d, k, t), (2, 2, 2));
        assert_eq!(parsed, contexts);
        assert_eq!(th, theta);
    }

    #[test]
    fn matrix_text_errors() {
        assert!(parse_matrix_text("1 1 1\n0.5\n").is_err());
        assert!(parse_matrix_text("1 1 1\n0.5 0.2\n1\n").is_err());
        assert!(parse_matrix_text("1 1 1\n0.5\n1\n9\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn feature_map_stays_in_ball(
                c in proptest::collection::vec(-10.0f64..10.0, 5),
                y in proptest::collection::vec(-10.0f64..10.0, 5),
            ) {
                let x = feature_map(&Vector::from_vec(c), &Vector::from_vec(y)).unwrap();
                prop_assert!(x.norm() <= 1.0 + 1e-12);
            }
        }
    }
}
