//! Experiment drivers that persist their results.
//!
//! [`run_experiment`] writes `rounds.csv`, `summary.json` and
//! `config_echo.json`; [`check_ne`] writes `ne_report.json`;
//! [`emit_plotdata`] turns result directories into the four tidy CSVs the
//! plotting scripts read. Every file carries the config fingerprint.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::environment::generate_instance;
use crate::error::{invalid, Result};
use crate::mechanism::MechanismConfig;
use crate::metrics::{deviation_gain, exact_deviation_gain, exact_menu_deviation, mean_stderr, run_seed, DeviationMethod, DeviationReport, MeanStderr};
use crate::simulator::{build_strategies, run_batch, run_epochs, Detail, EpisodeOptions, InstrumentReport, Job, SimulationLog};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_ECHO_FILE: &str = "config_echo.json";
pub const NE_REPORT_FILE: &str = "ne_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub config_fingerprint: String,
    pub mechanism: String,
    pub run: usize,
    pub epoch: usize,
    pub t: usize,
    pub arm: Option<usize>,
    pub reward: f64,
    pub instantaneous_regret: f64,
    pub cumulative_regret: f64,
    pub active_count: usize,
    pub manipulation_this_round: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub mechanism: String,
    pub run: usize,
    pub epoch: usize,
    pub seed: u64,
    pub total_regret: f64,
    pub pulls: Vec<usize>,
    pub tau: Vec<usize>,
    pub optimal_counts: Vec<usize>,
    pub empty_rounds: usize,
    pub manipulation_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<InstrumentReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub mechanism: String,
    pub epoch: usize,
    pub regret: MeanStderr,
    pub manipulation: MeanStderr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_fingerprint: String,
    pub episodes: Vec<EpisodeSummary>,
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config_fingerprint: String,
    config: &'a ExperimentConfig,
}

struct ExperimentJob<'a> {
    mechanism: &'a MechanismConfig,
    run: usize,
}

impl Job for ExperimentJob<'_> {
    fn label(&self) -> String {
        format!("mechanism={} run={}", self.mechanism.label(), self.run)
    }
}

fn strided_rows(log: &SimulationLog, fingerprint: &str, run: usize, stride: usize) -> Vec<RoundRow> {
    let mut cumulative = 0.0;
    let last = log.rounds.len().saturating_sub(1);
    let mut rows = Vec::with_capacity(log.rounds.len() / stride + 1);
    for r in &log.rounds {
        cumulative += r.regret;
        if (r.t + 1) % stride == 0 || r.t == last {
            rows.push(RoundRow {
                config_fingerprint: fingerprint.to_string(),
                mechanism: log.mechanism.name().to_string(),
                run,
                epoch: log.epoch,
                t: r.t,
                arm: r.arm,
                reward: r.reward,
                instantaneous_regret: r.regret,
                cumulative_regret: cumulative,
                active_count: r.active_count,
                manipulation_this_round: r.manipulation,
            });
        }
    }
    rows
}

fn summarize(log: &SimulationLog, run: usize) -> EpisodeSummary {
    EpisodeSummary {
        mechanism: log.mechanism.name().to_string(),
        run,
        epoch: log.epoch,
        seed: log.seed,
        total_regret: log.total_regret,
        pulls: log.pulls.clone(),
        tau: log.tau.clone(),
        optimal_counts: log.optimal_counts.clone(),
        empty_rounds: log.empty_rounds,
        manipulation_mass: log.manipulation_mass,
        instrument: log.instrument.clone(),
    }
}

/// Groups values by key while remembering the order keys first appeared.
struct Grouped<K: Ord, V> {
    order: Vec<K>,
    groups: BTreeMap<K, Vec<V>>,
}

impl<K: Ord + Clone, V> Grouped<K, V> {
    fn new() -> Self {
        Self {
            order: Vec::new(),
            groups: BTreeMap::new(),
        }
    }

    fn push(&mut self, key: K, value: V) {
        self.groups
            .entry(key.clone())
            .or_insert_with(|| {
                self.order.push(key);
                Vec::new()
            })
            .push(value);
    }

    fn iter(&self) -> impl Iterator<Item = (&K, &Vec<V>)> {
        self.order.iter().map(move |k| (k, &self.groups[k]))
    }
}

fn aggregate(episodes: &[EpisodeSummary]) -> Vec<AggregateRow> {
    let mut g = Grouped::new();
    for e in episodes {
        g.push((e.mechanism.clone(), e.epoch), e);
    }
    g.iter()
        .map(|((mechanism, epoch), eps)| AggregateRow {
            mechanism: mechanism.clone(),
            epoch: *epoch,
            regret: mean_stderr(&eps.iter().map(|e| e.total_regret).collect::<Vec<_>>()),
            manipulation: mean_stderr(&eps.iter().map(|e| e.manipulation_mass).collect::<Vec<_>>()),
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub fingerprint: String,
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

/// Runs every (mechanism, run) pair of the config and writes the results
/// to `out`. Run `r` uses seed `run_seed(config.seed, r)` under every
/// mechanism, so mechanisms face identical instances.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, threads: usize) -> Result<RunOutcome> {
    config.validate()?;
    let spec = config.environment_spec()?;
    let fingerprint = config.fingerprint();
    let jobs: Vec<ExperimentJob<'_>> = config
        .mechanisms
        .iter()
        .flat_map(|m| (0..config.runs).map(move |run| ExperimentJob { mechanism: m, run }))
        .collect();
    let options = EpisodeOptions {
        detail: Detail::Rounds,
        instrument: config.instrument,
    };
    let results = run_batch(&jobs, threads, |job| {
        let seed = run_seed(config.seed, job.run);
        let mut strategies = build_strategies(&config.profile, spec.num_arms, spec.dim, seed)?;
        let mut summaries = Vec::with_capacity(config.epochs);
        let mut rows = Vec::new();
        run_epochs(&spec, job.mechanism, &mut strategies, config.epochs, seed, options, |log, _| {
            summaries.push(summarize(log, job.run));
            rows.extend(strided_rows(log, &fingerprint, job.run, config.round_stride));
        })?;
        Ok((summaries, rows))
    })?;

    std::fs::create_dir_all(out)?;
    let mut episodes = Vec::new();
    let mut rows = Vec::new();
    for (s, r) in results {
        episodes.extend(s);
        rows.extend(r);
    }
    let summary = RunSummary {
        config_fingerprint: fingerprint.clone(),
        aggregate: aggregate(&episodes),
        episodes,
    };
    let files = vec![out.join(ROUNDS_FILE), out.join(SUMMARY_FILE), out.join(CONFIG_ECHO_FILE)];
    write_csv(&files[0], &rows)?;
    write_json(&files[1], &summary)?;
    write_json(
        &files[2],
        &ConfigEcho {
            config_fingerprint: fingerprint.clone(),
            config,
        },
    )?;
    Ok(RunOutcome {
        fingerprint,
        summary,
        files,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeEntry {
    pub mechanism: String,
    pub report: DeviationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeReport {
    pub config_fingerprint: String,
    pub entries: Vec<NeEntry>,
}

/// Deviation analysis for every configured mechanism and arm; writes
/// `ne_report.json` to `out`.
pub fn check_ne(config: &ExperimentConfig, out: &Path, threads: usize) -> Result<NeReport> {
    config.validate()?;
    let dev = config
        .deviation
        .as_ref()
        .ok_or_else(|| invalid("deviation", "check-ne needs a deviation section"))?;
    let spec = config.environment_spec()?;
    let arms: Vec<usize> = dev.arms.clone().unwrap_or_else(|| (0..spec.num_arms).collect());
    let mut entries = Vec::new();
    for m in &config.mechanisms {
        for &arm in &arms {
            let report = match dev.method {
                DeviationMethod::MonteCarlo => {
                    deviation_gain(&spec, m, &config.profile, arm, &dev.menu, dev.runs, config.seed, threads)?
                }
                DeviationMethod::Exact => {
                    let instance = generate_instance(&spec, config.seed)?;
                    match &dev.grid {
                        Some(grid) => exact_deviation_gain(&instance, &spec.noise, spec.s_bound, m, &config.profile, arm, grid)?,
                        None => exact_menu_deviation(&instance, &spec.noise, spec.s_bound, m, &config.profile, arm, &dev.menu)?,
                    }
                }
            };
            entries.push(NeEntry {
                mechanism: m.label().to_string(),
                report,
            });
        }
    }
    let report = NeReport {
        config_fingerprint: config.fingerprint(),
        entries,
    };
    std::fs::create_dir_all(out)?;
    write_json(&out.join(NE_REPORT_FILE), &report)?;
    Ok(report)
}

/// Plain-text table of a deviation analysis.
pub fn format_ne_table(report: &NeReport) -> String {
    let mut s = format!(
        "{:<20} {:>4} {:>14} {:>34} {:>14} {:>10}\n",
        "mechanism", "arm", "baseline", "best deviation", "gain", "stderr"
    );
    for e in &report.entries {
        let r = &e.report;
        let best = r.best.map_or("(baseline)".to_string(), |b| r.entries[b].label.clone());
        s.push_str(&format!(
            "{:<20} {:>4} {:>14.4} {:>34} {:>14.4} {:>10.4}\n",
            e.mechanism, r.arm, r.baseline.mean, best, r.gain, r.gain_stderr
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRegretRow {
    pub config_fingerprint: String,
    pub mechanism: String,
    pub epoch: usize,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurveRow {
    pub config_fingerprint: String,
    pub mechanism: String,
    pub epoch: usize,
    pub t: usize,
    pub mean_cumulative_regret: f64,
    pub stderr_cumulative_regret: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationUtilityRow {
    pub config_fingerprint: String,
    pub mechanism: String,
    pub epoch: usize,
    /// `manipulation` (episode total) or `utility` (pulls of `arm`).
    pub quantity: String,
    pub arm: Option<usize>,
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
}

pub const PLOT_FILES: [&str; 4] = [
    "regret_by_epoch.csv",
    "regret_vs_t_epoch0.csv",
    "regret_vs_t_final.csv",
    "manipulation_and_utility.csv",
];

fn read_results(dir: &Path) -> Result<(RunSummary, Vec<RoundRow>)> {
    let summary_path = dir.join(SUMMARY_FILE);
    let rounds_path = dir.join(ROUNDS_FILE);
    for p in [&summary_path, &rounds_path] {
        if !p.is_file() {
            return Err(invalid("results", format!("missing {}", p.display())));
        }
    }
    let summary: RunSummary = serde_json::from_reader(std::io::BufReader::new(File::open(&summary_path)?))?;
    let mut reader = csv::Reader::from_path(&rounds_path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<RoundRow>, _>>()?;
    Ok((summary, rows))
}

fn curve(fingerprint: &str, rows: &[&RoundRow]) -> Vec<RegretCurveRow> {
    let mut g = Grouped::new();
    for r in rows {
        g.push((r.mechanism.clone(), r.epoch, r.t), r.cumulative_regret);
    }
    g.iter()
        .map(|((mechanism, epoch, t), vals)| {
            let m = mean_stderr(vals);
            RegretCurveRow {
                config_fingerprint: fingerprint.to_string(),
                mechanism: mechanism.clone(),
                epoch: *epoch,
                t: *t,
                mean_cumulative_regret: m.mean,
                stderr_cumulative_regret: m.stderr,
                runs: m.n,
            }
        })
        .collect()
}

/// Reads one or more result directories produced by the same config and
/// writes the plot-ready CSVs to `out`. Inputs with differing fingerprints
/// are refused.
pub fn emit_plotdata(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(invalid("results", "no result directory given"));
    }
    let mut fingerprint: Option<String> = None;
    let mut episodes = Vec::new();
    let mut rows = Vec::new();
    for dir in inputs {
        let (summary, r) = read_results(dir)?;
        let mut seen = vec![summary.config_fingerprint.clone()];
        seen.extend(r.iter().map(|row| row.config_fingerprint.clone()));
        for fp in seen {
            match &fingerprint {
                None => fingerprint = Some(fp),
                Some(f) if *f != fp => {
                    return Err(invalid(
                        "config_fingerprint",
                        format!("inputs mix fingerprints {f} and {fp}"),
                    ))
                }
                Some(_) => {}
            }
        }
        episodes.extend(summary.episodes);
        rows.extend(r);
    }
    let fp = fingerprint.expect("at least one input");

    let by_epoch: Vec<EpochRegretRow> = aggregate(&episodes)
        .into_iter()
        .map(|a| EpochRegretRow {
            config_fingerprint: fp.clone(),
            mechanism: a.mechanism,
            epoch: a.epoch,
            mean_regret: a.regret.mean,
            stderr_regret: a.regret.stderr,
            runs: a.regret.n,
        })
        .collect();

    // Final epoch per mechanism.
    let mut last_epoch: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &episodes {
        let v = last_epoch.entry(e.mechanism.as_str()).or_insert(0);
        *v = (*v).max(e.epoch);
    }
    let first: Vec<&RoundRow> = rows.iter().filter(|r| r.epoch == 0).collect();
    let last: Vec<&RoundRow> = rows
        .iter()
        .filter(|r| last_epoch.get(r.mechanism.as_str()) == Some(&r.epoch))
        .collect();

    let mut g = Grouped::new();
    for e in &episodes {
        g.push((e.mechanism.clone(), e.epoch), e);
    }
    let mut manip = Vec::new();
    for ((mechanism, epoch), eps) in g.iter() {
        let m = mean_stderr(&eps.iter().map(|e| e.manipulation_mass).collect::<Vec<_>>());
        manip.push(ManipulationUtilityRow {
            config_fingerprint: fp.clone(),
            mechanism: mechanism.clone(),
            epoch: *epoch,
            quantity: "manipulation".into(),
            arm: None,
            mean: m.mean,
            stderr: m.stderr,
            runs: m.n,
        });
        let k = eps.iter().map(|e| e.pulls.len()).max().unwrap_or(0);
        for arm in 0..k {
            let u = mean_stderr(&eps.iter().map(|e| e.pulls.get(arm).copied().unwrap_or(0) as f64).collect::<Vec<_>>());
            manip.push(ManipulationUtilityRow {
                config_fingerprint: fp.clone(),
                mechanism: mechanism.clone(),
                epoch: *epoch,
                quantity: "utility".into(),
                arm: Some(arm),
                mean: u.mean,
                stderr: u.stderr,
                runs: u.n,
            });
        }
    }

    std::fs::create_dir_all(out)?;
    let paths: Vec<PathBuf> = PLOT_FILES.iter().map(|f| out.join(f)).collect();
    write_csv(&paths[0], &by_epoch)?;
    write_csv(&paths[1], &curve(&fp, &first))?;
    write_csv(&paths[2], &curve(&fp, &last))?;
    write_csv(&paths[3], &manip)?;
    Ok(paths)
}
