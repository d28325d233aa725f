//! Arm-side reporting strategies.
//!
//! [`StrategyKind`] is the serializable description of a strategy; a
//! [`Strategy`] is its running state inside one simulation. Every report a
//! strategy emits lies in the closed unit ball.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chance::{derive_seed, rng_from, stream};
use crate::environment::feature_map;
use crate::error::{invalid, Result};
use crate::geometry::{max_step_in_ball, project_to_unit_ball, random_orthogonal, random_unit_vector, Vector};
use crate::mechanism::PublicScore;

fn default_inner_iters() -> usize {
    50
}
fn default_ascent_step() -> f64 {
    1.0
}
fn default_restarts() -> usize {
    8
}
fn default_gradient_step() -> f64 {
    0.1
}
fn default_perturb() -> f64 {
    0.1
}
fn default_fraction() -> f64 {
    1.0
}

/// Per-parity value targets, keyed on the 1-based round number. `None`
/// means the arm reports truthfully on rounds of that parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityScript {
    #[serde(default)]
    pub even: Option<f64>,
    #[serde(default)]
    pub odd: Option<f64>,
}

impl ParityScript {
    pub fn target(&self, round: usize) -> Option<f64> {
        if (round + 1).is_multiple_of(2) {
            self.even
        } else {
            self.odd
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    Truthful,
    /// Maximizes the mechanism's published score every round.
    Myopic {
        #[serde(default = "default_inner_iters")]
        inner_iters: usize,
        #[serde(default = "default_ascent_step")]
        step: f64,
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Reports `phi(c_t, y)` and adapts `y` between epochs by a one-point
    /// simultaneous-perturbation gradient step on its pull count.
    EpochGradient {
        /// Starting feature; the arm's true feature when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y: Option<Vec<f64>>,
        #[serde(default = "default_gradient_step")]
        step: f64,
        #[serde(default = "default_perturb")]
        perturb: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Reports a scripted value along the `theta_star` direction.
    UnderReporter { script: ParityScript },
    /// Reports `R x*` for a fixed orthogonal `R` (random from `seed` when absent).
    LinearRealizable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        seed: u64,
    },
    /// With the given probability, inflates the true context along `theta_star`
    /// by a uniformly drawn share of the room left in the unit ball.
    RandomOverreport {
        probability: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Inflates its value by whatever is left of a `fraction · 2√(n ln T)`
    /// manipulation budget, where `n` counts its pulls.
    BudgetedOverreport {
        #[serde(default = "default_fraction")]
        fraction: f64,
    },
    /// Truthful except for one round, where it claims `value`.
    SingleLie { round: usize, value: f64 },
    /// A fixed report per round (the last one repeats past the end).
    Fixed { reports: Vec<Vec<f64>> },
}

impl StrategyKind {
    pub fn label(&self) -> String {
        match self {
            StrategyKind::Truthful => "truthful".into(),
            StrategyKind::Myopic { .. } => "myopic".into(),
            StrategyKind::EpochGradient { .. } => "epoch_gradient".into(),
            StrategyKind::UnderReporter { .. } => "under_reporter".into(),
            StrategyKind::LinearRealizable { .. } => "linear_realizable".into(),
            StrategyKind::RandomOverreport { probability, .. } => format!("random_overreport({probability})"),
            StrategyKind::BudgetedOverreport { fraction } => format!("budgeted_overreport({fraction})"),
            StrategyKind::SingleLie { round, value } => format!("single_lie({round},{value})"),
            StrategyKind::Fixed { reports } => format!("fixed({})", reports.len()),
        }
    }

    pub fn myopic() -> Self {
        StrategyKind::Myopic {
            inner_iters: default_inner_iters(),
            step: default_ascent_step(),
            restarts: default_restarts(),
            seed: 0,
        }
    }

    pub fn epoch_gradient() -> Self {
        StrategyKind::EpochGradient {
            y: None,
            step: default_gradient_step(),
            perturb: default_perturb(),
            seed: 0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_vec = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(what, format!("needs {dim} finite values")));
            }
            Ok(())
        };
        match self {
            StrategyKind::Myopic { inner_iters, step, restarts, .. } => {
                if *inner_iters == 0 || *restarts == 0 || !(step.is_finite() && *step > 0.0) {
                    return Err(invalid("strategy.myopic", "iterations, restarts and step must be positive"));
                }
            }
            StrategyKind::EpochGradient { y, step, perturb, .. } => {
                if let Some(y) = y {
                    check_vec(y, "strategy.epoch_gradient.y")?;
                }
                if !(step.is_finite() && *step > 0.0 && perturb.is_finite() && *perturb > 0.0) {
                    return Err(invalid("strategy.epoch_gradient", "step and perturb must be positive"));
                }
            }
            StrategyKind::LinearRealizable { rotation: Some(rows), .. } => {
                if rows.len() != dim {
                    return Err(invalid("strategy.linear_realizable.rotation", "must be dim x dim"));
                }
                for r in rows {
                    check_vec(r, "strategy.linear_realizable.rotation")?;
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
                let err = (m.transpose() * &m - DMatrix::identity(dim, dim)).norm();
                if err > 1e-9 {
                    return Err(invalid("strategy.linear_realizable.rotation", "must be orthogonal"));
                }
            }
            StrategyKind::RandomOverreport { probability, .. } => {
                if !(0.0..=1.0).contains(probability) {
                    return Err(invalid("strategy.random_overreport.probability", "must lie in [0, 1]"));
                }
            }
            StrategyKind::BudgetedOverreport { fraction } => {
                if !(fraction.is_finite() && *fraction >= 0.0) {
                    return Err(invalid("strategy.budgeted_overreport.fraction", "must be nonnegative"));
                }
            }
            StrategyKind::Fixed { reports } => {
                if reports.is_empty() {
                    return Err(invalid("strategy.fixed.reports", "must not be empty"));
                }
                for r in reports {
                    check_vec(r, "strategy.fixed.reports")?;
                }
            }
            StrategyKind::Truthful
            | StrategyKind::UnderReporter { .. }
            | StrategyKind::LinearRealizable { rotation: None, .. }
            | StrategyKind::SingleLie { .. } => {}
        }
        Ok(())
    }
}

/// What an arm may look at when reporting in one round.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub round: usize,
    pub horizon: usize,
    pub x_true: &'a Vector,
    pub theta_star: &'a Vector,
    /// User vector `c_t` (synthetic instances only).
    pub user: Option<&'a Vector>,
    /// The arm's true feature `y*_i` (synthetic instances only).
    pub feature: Option<&'a Vector>,
    pub score: PublicScore<'a>,
}

#[derive(Debug, Clone)]
pub struct EpochGradientArm {
    y: Option<Vector>,
    step: f64,
    perturb: f64,
    baseline: Option<f64>,
    epochs_seen: usize,
    direction: Option<Vector>,
    rng: ChaCha8Rng,
}

impl EpochGradientArm {
    pub fn new(y: Option<Vector>, step: f64, perturb: f64, rng: ChaCha8Rng) -> Self {
        Self {
            y,
            step,
            perturb,
            baseline: None,
            epochs_seen: 0,
            direction: None,
            rng,
        }
    }

    /// Current base feature (before this epoch's perturbation).
    pub fn feature(&self) -> Option<&Vector> {
        self.y.as_ref()
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    /// Perturbation direction in effect for the running epoch.
    pub fn direction(&self) -> Option<&Vector> {
        self.direction.as_ref()
    }

    pub fn set_direction(&mut self, delta: Vector) {
        self.direction = Some(delta);
    }

    /// Feature the arm reports with during the running epoch.
    pub fn effective_feature(&self) -> Option<Vector> {
        let y = self.y.as_ref()?;
        Some(match &self.direction {
            Some(delta) => project_to_unit_ball(&(y + delta * self.perturb)).0,
            None => y.clone(),
        })
    }

    /// One simultaneous-perturbation step from the finished epoch's utility.
    pub fn epoch_update(&mut self, utility: f64) -> Result<()> {
        if !utility.is_finite() {
            return Err(crate::error::Error::NonFinite("epoch utility"));
        }
        let y = self
            .y
            .as_ref()
            .ok_or_else(|| invalid("epoch_update", "arm feature unknown before the first epoch"))?;
        if let (Some(base), Some(delta)) = (self.baseline, &self.direction) {
            let g = delta * ((utility - base) / self.perturb);
            self.y = Some(project_to_unit_ball(&(y + g * self.step)).0);
        }
        self.epochs_seen += 1;
        self.baseline = Some(match self.baseline {
            None => utility,
            Some(b) => b + (utility - b) / self.epochs_seen as f64,
        });
        let dim = self.y.as_ref().map_or(0, Vector::len);
        let rng = &mut self.rng;
        self.direction = Some(Vector::from_fn(dim, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }));
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Strategy {
    Truthful,
    Myopic {
        inner_iters: usize,
        step: f64,
        restarts: usize,
        rng: ChaCha8Rng,
    },
    EpochGradient(EpochGradientArm),
    UnderReporter(ParityScript),
    LinearRealizable(DMatrix<f64>),
    RandomOverreport {
        probability: f64,
        rng: ChaCha8Rng,
    },
    BudgetedOverreport {
        fraction: f64,
        pulls: usize,
        spent: f64,
    },
    SingleLie {
        round: usize,
        value: f64,
    },
    Fixed(Vec<Vector>),
}

impl Strategy {
    /// Instantiates the strategy of arm `arm`; randomness derives from
    /// `(master_seed, arm, kind seed)`.
    pub fn new(kind: &StrategyKind, arm: usize, dim: usize, master_seed: u64) -> Result<Self> {
        kind.validate(dim)?;
        let arm_seed = |seed: u64| derive_seed(derive_seed(derive_seed(master_seed, stream::ARMS), arm as u64), seed);
        Ok(match kind {
            StrategyKind::Truthful => Strategy::Truthful,
            StrategyKind::Myopic {
                inner_iters,
                step,
                restarts,
                seed,
            } => Strategy::Myopic {
                inner_iters: *inner_iters,
                step: *step,
                restarts: *restarts,
                rng: rng_from(arm_seed(*seed)),
            },
            StrategyKind::EpochGradient { y, step, perturb, seed } => Strategy::EpochGradient(EpochGradientArm::new(
                y.as_ref().map(|y| Vector::from_column_slice(y)),
                *step,
                *perturb,
                rng_from(arm_seed(*seed)),
            )),
            StrategyKind::UnderReporter { script } => Strategy::UnderReporter(*script),
            StrategyKind::LinearRealizable { rotation, seed } => Strategy::LinearRealizable(match rotation {
                Some(rows) => DMatrix::from_fn(dim, dim, |i, j| rows[i][j]),
                None => random_orthogonal(dim, &mut rng_from(arm_seed(*seed))),
            }),
            StrategyKind::RandomOverreport { probability, seed } => Strategy::RandomOverreport {
                probability: *probability,
                rng: rng_from(arm_seed(*seed)),
            },
            StrategyKind::BudgetedOverreport { fraction } => Strategy::BudgetedOverreport {
                fraction: *fraction,
                pulls: 0,
                spent: 0.0,
            },
            StrategyKind::SingleLie { round, value } => Strategy::SingleLie {
                round: *round,
                value: *value,
            },
            StrategyKind::Fixed { reports } => {
                Strategy::Fixed(reports.iter().map(|r| Vector::from_column_slice(r)).collect())
            }
        })
    }

    /// Called once per episode before the first report.
    pub fn begin_episode(&mut self, feature: Option<&Vector>) {
        match self {
            Strategy::EpochGradient(arm) => {
                if arm.y.is_none() {
                    arm.y = feature.cloned();
                }
            }
            Strategy::BudgetedOverreport { pulls, spent, .. } => {
                *pulls = 0;
                *spent = 0.0;
            }
            _ => {}
        }
    }

    pub fn report(&mut self, obs: &Observation<'_>) -> Vector {
        let x = match self {
            Strategy::Truthful => obs.x_true.clone(),
            Strategy::Myopic {
                inner_iters,
                step,
                restarts,
                rng,
            } => myopic_report(obs, *inner_iters, *step, *restarts, rng),
            Strategy::EpochGradient(arm) => match (obs.user, arm.effective_feature()) {
                (Some(c), Some(y)) => feature_map(c, &y).unwrap_or_else(|_| obs.x_true.clone()),
                _ => obs.x_true.clone(),
            },
            Strategy::UnderReporter(script) => match script.target(obs.round) {
                Some(value) => value_along_theta(obs.theta_star, value).unwrap_or_else(|| obs.x_true.clone()),
                None => obs.x_true.clone(),
            },
            Strategy::LinearRealizable(r) => &*r * obs.x_true,
            Strategy::RandomOverreport { probability, rng } => {
                if rng.random::<f64>() < *probability {
                    let share: f64 = rng.random();
                    inflate(obs.x_true, obs.theta_star, f64::INFINITY, share)
                } else {
                    obs.x_true.clone()
                }
            }
            Strategy::BudgetedOverreport { fraction, pulls, spent } => {
                let budget = *fraction * 2.0 * (((*pulls + 1) as f64) * (obs.horizon as f64).ln()).sqrt();
                inflate(obs.x_true, obs.theta_star, (budget - *spent).max(0.0), 1.0)
            }
            Strategy::SingleLie { round, value } => {
                if obs.round == *round {
                    value_along_theta(obs.theta_star, *value).unwrap_or_else(|| obs.x_true.clone())
                } else {
                    obs.x_true.clone()
                }
            }
            Strategy::Fixed(reports) => reports[obs.round.min(reports.len() - 1)].clone(),
        };
        project_to_unit_ball(&x).0
    }

    /// End-of-round feedback: whether this arm was pulled, with what report.
    pub fn observe(&mut self, selected: bool, report: &Vector, obs: &Observation<'_>) {
        if let Strategy::BudgetedOverreport { pulls, spent, .. } = self {
            if selected {
                *pulls += 1;
                *spent += obs.theta_star.dot(&(report - obs.x_true));
            }
        }
    }

    /// End-of-epoch adaptation; only epoch learners react.
    pub fn epoch_update(&mut self, utility: f64) -> Result<()> {
        match self {
            Strategy::EpochGradient(arm) => arm.epoch_update(utility),
            _ => Ok(()),
        }
    }

    pub fn as_epoch_gradient(&self) -> Option<&EpochGradientArm> {
        match self {
            Strategy::EpochGradient(arm) => Some(arm),
            _ => None,
        }
    }
}

/// `value · θ/‖θ‖²`, the shortest vector with `⟨θ, x⟩ = value`.
fn value_along_theta(theta: &Vector, value: f64) -> Option<Vector> {
    let n2 = theta.norm_squared();
    (n2 > 0.0).then(|| theta * (value / n2))
}

/// Moves `x` along `θ/‖θ‖` by `share` of the room left in the unit ball,
/// capped so the claimed value rises by at most `max_gain`.
fn inflate(x: &Vector, theta: &Vector, max_gain: f64, share: f64) -> Vector {
    let norm = theta.norm();
    if norm == 0.0 {
        return x.clone();
    }
    let u = theta / norm;
    let (x, _) = project_to_unit_ball(x);
    let alpha = (max_step_in_ball(&x, &u) * share).min(max_gain / norm);
    &x + u * alpha
}

fn myopic_report(obs: &Observation<'_>, iters: usize, step: f64, restarts: usize, rng: &mut ChaCha8Rng) -> Vector {
    match obs.score {
        PublicScore::Linear(theta) => {
            let n = theta.norm();
            if n > 0.0 {
                theta / n
            } else {
                obs.x_true.clone()
            }
        }
        PublicScore::Optimistic(est) => {
            let a = est.gram_inverse();
            let theta_hat = est.theta_hat();
            let rho = est.confidence_radius();
            let value = |x: &Vector| theta_hat.dot(x) + rho * x.dot(&(a * x)).max(0.0).sqrt();
            let grad = |x: &Vector| {
                let ax = a * x;
                let q = x.dot(&ax).max(0.0).sqrt();
                if q > 0.0 {
                    theta_hat + ax * (rho / q)
                } else {
                    theta_hat.clone()
                }
            };
            let mut starts = Vec::with_capacity(restarts + 1);
            if theta_hat.norm() > 0.0 {
                starts.push(theta_hat / theta_hat.norm());
            }
            while starts.len() < restarts {
                starts.push(random_unit_vector(obs.x_true.len(), rng));
            }
            maximize_on_ball(&starts, iters, step, value, grad)
        }
        PublicScore::Uninformative => obs.x_true.clone(),
    }
}

/// Multi-start projected ascent with normalized gradient steps on the unit ball.
pub fn maximize_on_ball<F, G>(starts: &[Vector], iters: usize, step: f64, value: F, grad: G) -> Vector
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    let mut best: Option<(f64, Vector)> = None;
    for start in starts {
        let mut x = project_to_unit_ball(start).0;
        for _ in 0..iters {
            let g = grad(&x);
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            x = project_to_unit_ball(&(&x + g * (step / gn))).0;
        }
        let v = value(&x);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, x));
        }
    }
    best.map(|(_, x)| x).unwrap_or_else(|| Vector::zeros(starts.first().map_or(0, Vector::len)))
}
