//! Round-by-round driver for the interaction protocol.
//!
//! Each round every arm reports, the mechanism selects, the environment draws
//! the reward of the selected arm's true context, and the mechanism records it.
//! [`run_episode`] plays one deployment, [`run_epochs`] repeats deployments
//! while epoch learners adapt, and [`run_batch`] fans jobs out over a thread
//! pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{Observation, Strategy, StrategyKind};
use crate::chance::{derive_seed, stream, Chance, SeededChance};
use crate::environment::{generate_instance, sample_reward, EnvironmentSpec, NoiseModel, TrueContextSequence};
use crate::error::{invalid, Error, Result};
use crate::geometry::Vector;
use crate::mechanism::{Mechanism, MechanismConfig, MechanismKind, PublicScore};

/// Slack for the per-report instrumentation comparisons.
const CHECK_TOLERANCE: f64 = 1e-9;

/// How much of each round the log keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detail {
    /// Per-arm summaries only.
    Summary,
    /// One [`RoundRecord`] per round without reports or scores.
    #[default]
    Rounds,
    /// Rounds plus reports and selection-time scores.
    Full,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    pub detail: Detail,
    pub instrument: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub arm: Option<usize>,
    pub reward: f64,
    /// `<θ*, x*_opt> - <θ*, x*_arm>`, or the optimal value when nothing is played.
    pub regret: f64,
    /// `Σ_i ||x*_{t,i} - x_{t,i}||`
    pub manipulation: f64,
    /// Active arms after this round's trigger.
    pub active_count: usize,
    pub eliminated: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reports: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<Option<f64>>>,
}

/// Ground-truth checks gathered when instrumentation is on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstrumentReport {
    /// Reports with `<θ*, x> < <θ*, x*>`, per arm.
    pub underreports: Vec<usize>,
    /// Reports whose published optimistic score falls below `<θ*, x*>`, per arm.
    pub score_underreports: Vec<usize>,
    /// Whether `|Σ(<θ*, x*> - r)| <= 2√(n ln T)` held for every arm at every round.
    pub noise_band_ok: bool,
    /// Active-arm rounds checked against `Σ<θ*, x - x*> <= 4√(n ln T)`.
    pub manipulation_checks: usize,
    /// Checks that failed while the noise band held.
    pub manipulation_violations: usize,
    /// Largest `Σ<θ*, x - x*> / √(n ln T)` seen on an active arm.
    pub manipulation_max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    pub mechanism: MechanismKind,
    pub seed: u64,
    pub epoch: usize,
    pub horizon: usize,
    pub num_arms: usize,
    pub instance_fingerprint: u64,
    pub rounds: Vec<RoundRecord>,
    /// `n_T(i)`
    pub pulls: Vec<usize>,
    /// First round arm `i` is inactive, `T` if never eliminated.
    pub tau: Vec<usize>,
    /// `n*_T(i)`: rounds in which `i` was the optimal arm.
    pub optimal_counts: Vec<usize>,
    pub empty_rounds: usize,
    pub total_regret: f64,
    pub manipulation_mass: f64,
    /// Selected arm per round, kept at every detail level.
    pub selections: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<InstrumentReport>,
}

impl SimulationLog {
    /// Running sum of the per-round regret.
    pub fn cumulative_regret(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.rounds
            .iter()
            .map(|r| {
                acc += r.regret;
                acc
            })
            .collect()
    }

    pub fn utilities(&self) -> Vec<f64> {
        self.pulls.iter().map(|&n| n as f64).collect()
    }
}

/// Builds one [`Strategy`] per arm; a single-entry profile applies to every arm.
pub fn build_strategies(profile: &[StrategyKind], num_arms: usize, dim: usize, seed: u64) -> Result<Vec<Strategy>> {
    let kinds = expand_profile(profile, num_arms)?;
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| Strategy::new(k, i, dim, seed))
        .collect()
}

pub fn expand_profile(profile: &[StrategyKind], num_arms: usize) -> Result<Vec<StrategyKind>> {
    match profile.len() {
        0 => Err(invalid("profile", "must name at least one strategy")),
        1 => Ok(vec![profile[0].clone(); num_arms]),
        n if n == num_arms => Ok(profile.to_vec()),
        n => Err(invalid("profile", format!("has {n} entries for {num_arms} arms"))),
    }
}

/// Plays one episode with seeded mechanism and noise streams derived from `seed`.
pub fn run_episode(
    instance: &TrueContextSequence,
    noise: &NoiseModel,
    s_bound: f64,
    config: &MechanismConfig,
    strategies: &mut [Strategy],
    seed: u64,
    options: EpisodeOptions,
) -> Result<SimulationLog> {
    let mut mech_chance = SeededChance::new(derive_seed(seed, stream::MECHANISM));
    let mut noise_chance = SeededChance::new(derive_seed(seed, stream::NOISE));
    let mut log = run_episode_with(
        instance,
        noise,
        s_bound,
        config,
        strategies,
        &mut mech_chance,
        &mut noise_chance,
        options,
    )?;
    log.seed = seed;
    Ok(log)
}

struct Instrumenter {
    noise_sum: Vec<f64>,
    manipulation: Vec<f64>,
    n: Vec<usize>,
    log_horizon: f64,
    report: InstrumentReport,
}

impl Instrumenter {
    fn new(num_arms: usize, horizon: usize) -> Self {
        Self {
            noise_sum: vec![0.0; num_arms],
            manipulation: vec![0.0; num_arms],
            n: vec![0; num_arms],
            log_horizon: (horizon as f64).ln(),
            report: InstrumentReport {
                underreports: vec![0; num_arms],
                score_underreports: vec![0; num_arms],
                noise_band_ok: true,
                ..InstrumentReport::default()
            },
        }
    }

    fn before_selection(&mut self, mechanism: &Mechanism, theta: &Vector, reports: &[Vector], truth: &[Vector]) {
        for (i, (x, xs)) in reports.iter().zip(truth).enumerate() {
            let true_value = theta.dot(xs);
            if theta.dot(x) < true_value - CHECK_TOLERANCE {
                self.report.underreports[i] += 1;
            }
            if let score @ PublicScore::Optimistic(_) = mechanism.public_score(i) {
                if score.eval(x) < true_value - CHECK_TOLERANCE {
                    self.report.score_underreports[i] += 1;
                }
            }
        }
    }

    fn after_record(&mut self, mechanism: &Mechanism, theta: &Vector, arm: usize, report: &Vector, truth: &Vector, reward: f64) {
        let true_value = theta.dot(truth);
        self.n[arm] += 1;
        self.noise_sum[arm] += true_value - reward;
        self.manipulation[arm] += theta.dot(report) - true_value;
        let band = 2.0 * (self.n[arm] as f64 * self.log_horizon).sqrt();
        if self.noise_sum[arm].abs() > band {
            self.report.noise_band_ok = false;
        }
        for i in 0..self.n.len() {
            if self.n[i] == 0 || !mechanism.is_active(i) {
                continue;
            }
            let scale = (self.n[i] as f64 * self.log_horizon).sqrt();
            self.report.manipulation_checks += 1;
            if scale > 0.0 {
                self.report.manipulation_max_ratio = self.report.manipulation_max_ratio.max(self.manipulation[i] / scale);
            }
            if self.report.noise_band_ok && self.manipulation[i] > 4.0 * scale + CHECK_TOLERANCE {
                self.report.manipulation_violations += 1;
            }
        }
    }
}

/// Plays one episode drawing mechanism and noise randomness from the given
/// sources. The returned log has seed 0; [`run_episode`] fills it in.
#[allow(clippy::too_many_arguments)]
pub fn run_episode_with(
    instance: &TrueContextSequence,
    noise: &NoiseModel,
    s_bound: f64,
    config: &MechanismConfig,
    strategies: &mut [Strategy],
    mech_chance: &mut dyn Chance,
    noise_chance: &mut dyn Chance,
    options: EpisodeOptions,
) -> Result<SimulationLog> {
    let horizon = instance.horizon();
    let k = instance.num_arms();
    if strategies.len() != k {
        return Err(Error::ReportCount {
            expected: k,
            got: strategies.len(),
        });
    }
    let theta = &instance.theta_star;
    let mut mechanism = Mechanism::new(config, k, horizon, theta, s_bound)?;
    for (i, s) in strategies.iter_mut().enumerate() {
        s.begin_episode(instance.arm_features.as_ref().map(|f| &f[i]));
    }
    let mut tracker = options.instrument.then(|| Instrumenter::new(k, horizon));

    let mut rounds = Vec::with_capacity(if options.detail == Detail::Summary { 0 } else { horizon });
    let mut selections = Vec::with_capacity(horizon);
    let mut optimal_counts = vec![0; k];
    let mut empty_rounds = 0;
    let mut total_regret = 0.0;
    let mut manipulation_mass = 0.0;
    let mut reports = Vec::with_capacity(k);

    for t in 0..horizon {
        let truth = &instance.contexts[t];
        let user = instance.users.as_ref().map(|u| &u[t]);
        reports.clear();
        for (i, s) in strategies.iter_mut().enumerate() {
            let obs = Observation {
                round: t,
                horizon,
                x_true: &truth[i],
                theta_star: theta,
                user,
                feature: instance.arm_features.as_ref().map(|f| &f[i]),
                score: mechanism.public_score(i),
            };
            reports.push(s.report(&obs));
        }
        if let Some(tr) = tracker.as_mut() {
            tr.before_selection(&mechanism, theta, &reports, truth);
        }
        let manipulation: f64 = reports.iter().zip(truth).map(|(x, xs)| (x - xs).norm()).sum();
        manipulation_mass += manipulation;

        let selection = mechanism.select(&reports, mech_chance)?;
        let opt = instance.optimal_arm[t];
        optimal_counts[opt] += 1;
        let mut eliminated = Vec::new();
        let (reward, regret) = match selection.arm {
            Some(arm) => {
                let reward = sample_reward(theta, &truth[arm], noise, noise_chance)?;
                if mechanism.record(arm, &reports[arm], reward)? {
                    eliminated.push(arm);
                }
                if let Some(tr) = tracker.as_mut() {
                    tr.after_record(&mechanism, theta, arm, &reports[arm], &truth[arm], reward);
                }
                (reward, instance.gaps[t][arm])
            }
            None => {
                empty_rounds += 1;
                (0.0, instance.optimal_value(t))
            }
        };
        for (i, s) in strategies.iter_mut().enumerate() {
            let obs = Observation {
                round: t,
                horizon,
                x_true: &truth[i],
                theta_star: theta,
                user,
                feature: instance.arm_features.as_ref().map(|f| &f[i]),
                score: PublicScore::Uninformative,
            };
            s.observe(selection.arm == Some(i), &reports[i], &obs);
        }
        total_regret += regret;
        selections.push(selection.arm);
        if options.detail != Detail::Summary {
            let full = options.detail == Detail::Full;
            rounds.push(RoundRecord {
                t,
                arm: selection.arm,
                reward,
                regret,
                manipulation,
                active_count: mechanism.active_count(),
                eliminated,
                reports: full.then(|| reports.iter().map(|x| x.iter().copied().collect()).collect()),
                scores: full.then(|| selection.scores.clone()),
            });
        }
    }

    let tau = mechanism
        .elimination_round()
        .iter()
        .map(|r| r.map_or(horizon, |r| r + 1))
        .collect();
    Ok(SimulationLog {
        mechanism: config.kind,
        seed: 0,
        epoch: 0,
        horizon,
        num_arms: k,
        instance_fingerprint: instance.fingerprint,
        rounds,
        pulls: mechanism.counts().to_vec(),
        tau,
        optimal_counts,
        empty_rounds,
        total_regret,
        manipulation_mass,
        selections,
        instrument: tracker.map(|t| t.report),
    })
}

/// Seed of epoch `e` under master seed `seed`.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    derive_seed(derive_seed(seed, stream::EPOCH), epoch as u64)
}

/// Plays `epochs` fresh deployments of the mechanism. Strategies persist and
/// receive their pull count `n_T(i)` at every epoch end; the instance is
/// regenerated from a per-epoch seed. `on_epoch` sees every log as it
/// finishes; the logs are also returned.
pub fn run_epochs(
    spec: &EnvironmentSpec,
    config: &MechanismConfig,
    strategies: &mut [Strategy],
    epochs: usize,
    seed: u64,
    options: EpisodeOptions,
    mut on_epoch: impl FnMut(&SimulationLog, &[Strategy]),
) -> Result<Vec<SimulationLog>> {
    if epochs == 0 {
        return Err(invalid("epochs", "must be at least 1"));
    }
    let mut logs = Vec::with_capacity(epochs);
    for e in 0..epochs {
        let es = epoch_seed(seed, e);
        let instance = generate_instance(spec, es)?;
        let mut log = run_episode(&instance, &spec.noise, spec.s_bound, config, strategies, es, options)?;
        log.epoch = e;
        for (i, s) in strategies.iter_mut().enumerate() {
            s.epoch_update(log.pulls[i] as f64)?;
        }
        on_epoch(&log, strategies);
        logs.push(log);
    }
    Ok(logs)
}

/// Something a batch can run and name in error messages.
pub trait Job: Sync {
    fn label(&self) -> String;
}

impl Job for String {
    fn label(&self) -> String {
        self.clone()
    }
}

/// Runs `work` over `jobs` on `threads` workers. Results come back in job
/// order regardless of scheduling; the first failure (in job order) is
/// returned tagged with its job label.
pub fn run_batch<J, R, F>(jobs: &[J], threads: usize, work: F) -> Result<Vec<R>>
where
    J: Job,
    R: Send,
    F: Fn(&J) -> Result<R> + Sync,
{
    if jobs.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    let results: Vec<Result<R>> = pool.install(|| jobs.par_iter().map(&work).collect());
    results
        .into_iter()
        .zip(jobs)
        .map(|(r, j)| {
            r.map_err(|e| Error::Job {
                job: j.label(),
                source: Box::new(e),
            })
        })
        .collect()
}
