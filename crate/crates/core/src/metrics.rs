//! Regret and equilibrium diagnostics.
//!
//! [`deviation_gain`] estimates how much an arm gains by unilaterally
//! switching strategy, using paired simulations that share every random
//! stream. [`exact_utility_oracle`] computes expected pull counts exactly on
//! tiny instances by walking every tie-break and reward branch.

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::arms::StrategyKind;
use crate::chance::{derive_seed, stream, Chance};
use crate::environment::{generate_instance, EnvironmentSpec, NoiseModel, TrueContextSequence};
use crate::error::{invalid, Error, Result};
use crate::geometry::Vector;
use crate::mechanism::MechanismConfig;
use crate::simulator::{build_strategies, expand_profile, run_batch, run_episode, run_episode_with, Detail, EpisodeOptions, Job, SimulationLog};

/// Branch budget of the exact oracle.
pub const ORACLE_BRANCH_LIMIT: usize = 1_000_000;
pub const ORACLE_MAX_HORIZON: usize = 3;
pub const ORACLE_MAX_ARMS: usize = 3;
pub const ORACLE_MAX_GRID: usize = 9;

/// Sum by recursive halving; the result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    /// Standard error of the mean, zero for fewer than two samples.
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanStderr {
    let n = xs.len();
    if n == 0 {
        return MeanStderr::default();
    }
    let mean = pairwise_sum(xs) / n as f64;
    let stderr = if n > 1 {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanStderr { mean, stderr, n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub total: f64,
}

/// Strategic regret of a log, computed from the true contexts.
pub fn strategic_regret(log: &SimulationLog, instance: &TrueContextSequence) -> Result<RegretSeries> {
    if log.instance_fingerprint != instance.fingerprint || log.selections.len() != instance.horizon() {
        return Err(Error::InstanceMismatch {
            log: log.instance_fingerprint,
            instance: instance.fingerprint,
        });
    }
    let instantaneous: Vec<f64> = log
        .selections
        .iter()
        .enumerate()
        .map(|(t, arm)| {
            let best = instance.optimal_value(t);
            match arm {
                Some(i) => best - instance.values[t][*i],
                None => best,
            }
        })
        .collect();
    let mut acc = 0.0;
    let cumulative = instantaneous
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    Ok(RegretSeries {
        total: acc,
        instantaneous,
        cumulative,
    })
}

/// `Σ_i Σ_{t: i_t = i} Δ_{t,i}` plus the optimal value of every unplayed round.
pub fn regret_by_arm(log: &SimulationLog, instance: &TrueContextSequence) -> (Vec<f64>, f64) {
    let mut per_arm = vec![0.0; instance.num_arms()];
    let mut empty = 0.0;
    for (t, arm) in log.selections.iter().enumerate() {
        match arm {
            Some(i) => per_arm[*i] += instance.gaps[t][*i],
            None => empty += instance.optimal_value(t),
        }
    }
    (per_arm, empty)
}

/// Total `Σ_{t,i} ||x*_{t,i} - x_{t,i}||` recorded in a log.
pub fn manipulation_mass(log: &SimulationLog) -> f64 {
    if log.rounds.is_empty() {
        return log.manipulation_mass;
    }
    let per_round: Vec<f64> = log.rounds.iter().map(|r| r.manipulation).collect();
    pairwise_sum(&per_round)
}

/// Distortion of one set of reports against the truth.
pub fn report_distortion(reports: &[Vector], truth: &[Vector]) -> f64 {
    reports.iter().zip(truth).map(|(x, xs)| (x - xs).norm()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMethod {
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEntry {
    pub label: String,
    pub utility: MeanStderr,
    /// Paired difference to the baseline utility.
    pub gain: MeanStderr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub arm: usize,
    pub method: DeviationMethod,
    pub baseline: MeanStderr,
    pub entries: Vec<DeviationEntry>,
    /// Index into `entries` of the largest mean gain, if any entry beats the baseline.
    pub best: Option<usize>,
    /// `max(0, best mean gain)`
    pub gain: f64,
    pub gain_stderr: f64,
}

impl DeviationReport {
    fn finish(arm: usize, method: DeviationMethod, baseline: MeanStderr, entries: Vec<DeviationEntry>) -> Self {
        let mut best = None;
        let mut gain = 0.0;
        let mut gain_stderr = 0.0;
        for (k, e) in entries.iter().enumerate() {
            if e.gain.mean > gain {
                gain = e.gain.mean;
                gain_stderr = e.gain.stderr;
                best = Some(k);
            }
        }
        Self {
            arm,
            method,
            baseline,
            entries,
            best,
            gain,
            gain_stderr,
        }
    }
}

impl Job for usize {
    fn label(&self) -> String {
        format!("run {self}")
    }
}

/// Seed of paired run `r` under master seed `seed`.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(derive_seed(seed, stream::RUN), run as u64)
}

/// Monte-Carlo deviation analysis for one arm. Run `r` draws its instance,
/// mechanism, noise and strategy randomness from `run_seed(seed, r)` under
/// the baseline and under every deviation alike.
#[allow(clippy::too_many_arguments)]
pub fn deviation_gain(
    spec: &EnvironmentSpec,
    config: &MechanismConfig,
    profile: &[StrategyKind],
    arm: usize,
    menu: &[StrategyKind],
    runs: usize,
    seed: u64,
    threads: usize,
) -> Result<DeviationReport> {
    if runs < 2 {
        return Err(invalid("deviation.runs", "needs at least 2 runs"));
    }
    if arm >= spec.num_arms {
        return Err(invalid("deviation.arm", format!("arm {arm} out of range")));
    }
    let base_profile = expand_profile(profile, spec.num_arms)?;
    for m in menu {
        m.validate(spec.dim)?;
    }
    let options = EpisodeOptions {
        detail: Detail::Summary,
        instrument: false,
    };
    let ids: Vec<usize> = (0..runs).collect();
    // Per run: baseline utility followed by one utility per menu entry.
    let rows = run_batch(&ids, threads, |&r| {
        let rs = run_seed(seed, r);
        let instance = generate_instance(spec, rs)?;
        let mut out = Vec::with_capacity(menu.len() + 1);
        let mut strategies = build_strategies(&base_profile, spec.num_arms, spec.dim, rs)?;
        let log = run_episode(&instance, &spec.noise, spec.s_bound, config, &mut strategies, rs, options)?;
        out.push(log.pulls[arm] as f64);
        for m in menu {
            let mut p = base_profile.clone();
            p[arm] = m.clone();
            let mut strategies = build_strategies(&p, spec.num_arms, spec.dim, rs)?;
            let log = run_episode(&instance, &spec.noise, spec.s_bound, config, &mut strategies, rs, options)?;
            out.push(log.pulls[arm] as f64);
        }
        Ok(out)
    })?;
    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let base = column(0);
    let entries = menu
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let u = column(k + 1);
            let diff: Vec<f64> = u.iter().zip(&base).map(|(a, b)| a - b).collect();
            DeviationEntry {
                label: m.label(),
                utility: mean_stderr(&u),
                gain: mean_stderr(&diff),
            }
        })
        .collect();
    Ok(DeviationReport::finish(arm, DeviationMethod::MonteCarlo, mean_stderr(&base), entries))
}

/// One scripted decision point of the enumeration.
#[derive(Debug, Clone)]
struct ChoicePoint {
    taken: usize,
    probs: Vec<f64>,
}

#[derive(Debug, Default)]
struct Odometer {
    script: Vec<ChoicePoint>,
    cursor: usize,
    unsupported: Option<String>,
}

impl Odometer {
    fn choose(&mut self, probs: Vec<f64>) -> usize {
        let k = self.cursor;
        self.cursor += 1;
        if k < self.script.len() {
            self.script[k].taken
        } else {
            self.script.push(ChoicePoint { taken: 0, probs });
            0
        }
    }

    fn probability(&self) -> f64 {
        self.script.iter().map(|c| c.probs[c.taken]).product()
    }

    /// Moves to the next branch with positive probability; false when done.
    fn advance(&mut self) -> bool {
        self.cursor = 0;
        while let Some(last) = self.script.last_mut() {
            if let Some(next) = (last.taken + 1..last.probs.len()).find(|&j| last.probs[j] > 0.0) {
                last.taken = next;
                return true;
            }
            self.script.pop();
        }
        false
    }
}

/// [`Chance`] whose draws follow a shared odometer script.
struct Scripted(Rc<RefCell<Odometer>>);

impl Chance for Scripted {
    fn uniform_index(&mut self, n: usize) -> usize {
        if n == 1 {
            return 0;
        }
        self.0.borrow_mut().choose(vec![1.0 / n as f64; n])
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.0.borrow_mut().choose(vec![p, 1.0 - p]) == 0
    }

    fn gaussian(&mut self, sigma: f64) -> f64 {
        if sigma != 0.0 {
            self.0.borrow_mut().unsupported = Some("gaussian noise".into());
        }
        0.0
    }

    fn unit(&mut self) -> f64 {
        self.0.borrow_mut().unsupported = Some("continuous draws (softmax selection)".into());
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Exact `E[n_T(i)]` per arm.
    pub utilities: Vec<f64>,
    pub expected_regret: f64,
    pub branches: usize,
}

fn check_oracle_scope(instance: &TrueContextSequence, noise: &NoiseModel) -> Result<()> {
    if instance.horizon() > ORACLE_MAX_HORIZON || instance.num_arms() > ORACLE_MAX_ARMS {
        return Err(Error::OracleUnsupported(format!(
            "needs T <= {ORACLE_MAX_HORIZON} and K <= {ORACLE_MAX_ARMS}"
        )));
    }
    if matches!(noise, NoiseModel::Gaussian { sigma } if *sigma != 0.0) {
        return Err(Error::OracleUnsupported("gaussian noise".into()));
    }
    Ok(())
}

/// Exact expected utilities of a pure profile, by total probability over
/// every tie-break and Bernoulli reward branch.
pub fn exact_utility_oracle(
    instance: &TrueContextSequence,
    noise: &NoiseModel,
    s_bound: f64,
    config: &MechanismConfig,
    profile: &[StrategyKind],
) -> Result<OracleResult> {
    check_oracle_scope(instance, noise)?;
    let kinds = expand_profile(profile, instance.num_arms())?;
    if let Some(k) = kinds.iter().find(|k| matches!(k, StrategyKind::RandomOverreport { .. })) {
        return Err(Error::OracleUnsupported(format!("mixed strategy {}", k.label())));
    }
    let odo = Rc::new(RefCell::new(Odometer::default()));
    let mut utilities = vec![0.0; instance.num_arms()];
    let mut expected_regret = 0.0;
    let mut branches = 0;
    let options = EpisodeOptions {
        detail: Detail::Summary,
        instrument: false,
    };
    loop {
        branches += 1;
        if branches > ORACLE_BRANCH_LIMIT {
            return Err(Error::OracleTooLarge {
                limit: ORACLE_BRANCH_LIMIT,
            });
        }
        let mut strategies = build_strategies(&kinds, instance.num_arms(), instance.dim(), 0)?;
        let mut mech = Scripted(odo.clone());
        let mut noise_src = Scripted(odo.clone());
        let log = run_episode_with(instance, noise, s_bound, config, &mut strategies, &mut mech, &mut noise_src, options)?;
        let mut o = odo.borrow_mut();
        if let Some(what) = o.unsupported.take() {
            return Err(Error::OracleUnsupported(what));
        }
        let p = o.probability();
        for (u, n) in utilities.iter_mut().zip(&log.pulls) {
            *u += p * *n as f64;
        }
        expected_regret += p * log.total_regret;
        if !o.advance() {
            break;
        }
    }
    Ok(OracleResult {
        utilities,
        expected_regret,
        branches,
    })
}

/// Exact best-deviation analysis over every fixed report sequence drawn
/// from `grid` (one grid point per round) for one arm.
pub fn exact_deviation_gain(
    instance: &TrueContextSequence,
    noise: &NoiseModel,
    s_bound: f64,
    config: &MechanismConfig,
    profile: &[StrategyKind],
    arm: usize,
    grid: &[Vec<f64>],
) -> Result<DeviationReport> {
    check_oracle_scope(instance, noise)?;
    if grid.is_empty() || grid.len() > ORACLE_MAX_GRID {
        return Err(Error::OracleUnsupported(format!("grid must hold 1..={ORACLE_MAX_GRID} points")));
    }
    if arm >= instance.num_arms() {
        return Err(invalid("deviation.arm", format!("arm {arm} out of range")));
    }
    let kinds = expand_profile(profile, instance.num_arms())?;
    let base = exact_utility_oracle(instance, noise, s_bound, config, &kinds)?;
    let horizon = instance.horizon();
    let total = grid.len().pow(horizon as u32);
    let mut entries = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let reports: Vec<Vec<f64>> = (0..horizon)
            .map(|_| {
                let g = grid[c % grid.len()].clone();
                c /= grid.len();
                g
            })
            .collect();
        let dev = StrategyKind::Fixed { reports };
        let mut p = kinds.clone();
        p[arm] = dev.clone();
        let u = exact_utility_oracle(instance, noise, s_bound, config, &p)?.utilities[arm];
        entries.push(DeviationEntry {
            label: dev.label() + &format!("#{code}"),
            utility: MeanStderr { mean: u, stderr: 0.0, n: 1 },
            gain: MeanStderr {
                mean: u - base.utilities[arm],
                stderr: 0.0,
                n: 1,
            },
        });
    }
    let baseline = MeanStderr {
        mean: base.utilities[arm],
        stderr: 0.0,
        n: 1,
    };
    Ok(DeviationReport::finish(arm, DeviationMethod::Exact, baseline, entries))
}

/// Exact deviation analysis over a menu of pure strategies for one arm.
pub fn exact_menu_deviation(
    instance: &TrueContextSequence,
    noise: &NoiseModel,
    s_bound: f64,
    config: &MechanismConfig,
    profile: &[StrategyKind],
    arm: usize,
    menu: &[StrategyKind],
) -> Result<DeviationReport> {
    if arm >= instance.num_arms() {
        return Err(invalid("deviation.arm", format!("arm {arm} out of range")));
    }
    let kinds = expand_profile(profile, instance.num_arms())?;
    let base = exact_utility_oracle(instance, noise, s_bound, config, &kinds)?.utilities[arm];
    let exact = |mean| MeanStderr { mean, stderr: 0.0, n: 1 };
    let mut entries = Vec::with_capacity(menu.len());
    for dev in menu {
        let mut p = kinds.clone();
        p[arm] = dev.clone();
        let u = exact_utility_oracle(instance, noise, s_bound, config, &p)?.utilities[arm];
        entries.push(DeviationEntry {
            label: dev.label(),
            utility: exact(u),
            gain: exact(u - base),
        });
    }
    Ok(DeviationReport::finish(arm, DeviationMethod::Exact, exact(base), entries))
}
