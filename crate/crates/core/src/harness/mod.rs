//! Experiment orchestration: configs, seeded jobs and the files they write.

mod task;
mod visit;

pub use task::{PolicyArtifact, TaskSpec, POLICY_FORMAT};
pub use visit::{
    export_heatmap, read_heatmap_csv, visit_map, visit_map_runs, HeatmapFiles, TransitionCountMap,
    DIRECTIONS,
};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{train_agent_until, AgentConfig, CostContext, CostSource};
use crate::constraint::{count_constrained_trajectories, sequence_space, TrajectoryCount};
use crate::distance::{shortest_distances, DistanceTable};
use crate::error::{Error, Result};
use crate::gridworld::GridTask;
use crate::mdp::{rollout_from, PolicyTable};
use crate::rnet::{
    all_gt_pairs, gt_labeled_pairs, random_walk_episodes, rnet_accuracy, sample_triplets,
    train_on_episodes, Optimizer, RNetModel, RNetTrainConfig, ScoreTable, TrainReport,
};

pub const MANIFEST_FORMAT: &str = "sprl-manifest/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    /// Used in file names; letters, digits, `-` and `_` only.
    pub name: String,
    #[serde(default)]
    pub config: AgentConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Upper bound on every agent's episode count.
    pub max_episodes: Option<usize>,
    /// Wall-clock budget per training run.
    pub wall_clock_secs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerationSpec {
    pub horizon: usize,
    pub k_list: Vec<usize>,
    pub dt_list: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RNetEvalSpec {
    pub train_episodes: usize,
    pub heldout_episodes: usize,
    pub episode_len: usize,
    /// Start random walks from every state instead of the task's start.
    pub all_initial_states: bool,
    pub threshold: f64,
    pub train: RNetTrainConfig,
}

impl Default for RNetEvalSpec {
    fn default() -> Self {
        Self {
            train_episodes: 2000,
            heldout_episodes: 500,
            episode_len: 100,
            all_initial_states: true,
            threshold: 0.5,
            train: RNetTrainConfig {
                epochs: 10,
                ..RNetTrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisitMapSpec {
    /// Rollouts per seed.
    pub episodes: usize,
    pub max_steps: usize,
}

impl Default for VisitMapSpec {
    fn default() -> Self {
        Self {
            episodes: 1,
            max_steps: 500,
        }
    }
}

/// Everything one experiment runs. Agents train on every seed; the optional
/// sections add an enumeration sweep, RNet evaluation and count maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: TaskSpec,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<EnumerationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnet_eval: Option<RNetEvalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visit_maps: Option<VisitMapSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Hex SHA-256 of the config's JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }

    /// Checks everything that can fail before any computation, including
    /// that the task builds and the output directory is writable.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.agents.is_empty() && self.enumeration.is_none() && self.rnet_eval.is_none() {
            return bad("nothing to run: no agents, enumeration or rnet_eval".into());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.name.is_empty()
                || !a
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return bad(format!(
                    "agent name {:?} must be non-empty and use [A-Za-z0-9_-]",
                    a.name
                ));
            }
            if self.agents[..i].iter().any(|b| b.name == a.name) {
                return bad(format!("duplicate agent name {:?}", a.name));
            }
            a.config
                .validate()
                .map_err(|e| Error::Config(format!("agent {}: {e}", a.name)))?;
        }
        if self.caps.max_episodes == Some(0) {
            return bad("caps.max_episodes must be positive".into());
        }
        if let Some(secs) = self.caps.wall_clock_secs {
            if !(secs > 0.0 && secs.is_finite()) {
                return bad(format!("caps.wall_clock_secs {secs} must be positive"));
            }
        }
        let task = self.task.build::<f64>(self.seeds[0])?;
        if let Some(e) = &self.enumeration {
            if e.k_list.is_empty() || e.dt_list.is_empty() {
                return bad("enumeration needs non-empty k_list and dt_list".into());
            }
            if e.k_list.contains(&0) {
                return bad("enumeration k values must be at least 1".into());
            }
            sequence_space(task.mdp.num_actions(), e.horizon)?;
            if self.task.is_randomized() {
                return bad("enumeration needs a fixed-start task".into());
            }
        }
        if let Some(r) = &self.rnet_eval {
            if r.train_episodes == 0 || r.heldout_episodes == 0 || r.episode_len == 0 {
                return bad("rnet_eval episode counts and length must be positive".into());
            }
            if !(r.threshold > 0.0 && r.threshold < 1.0) {
                return bad(format!(
                    "rnet_eval.threshold {} outside (0, 1)",
                    r.threshold
                ));
            }
            if r.train.batch_size == 0 || r.train.hidden == 0 || r.train.triplets.k == 0 {
                return bad("rnet_eval.train needs positive batch_size, hidden and k".into());
            }
        }
        if let Some(v) = &self.visit_maps {
            if v.episodes == 0 || v.max_steps == 0 {
                return bad("visit_maps episodes and max_steps must be positive".into());
            }
        }
        check_writable(&self.output_dir)
    }
}

fn check_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".sprl-write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Outcome of one agent on one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: String,
    pub seed: u64,
    pub episodes: usize,
    pub episodes_to_success: Option<usize>,
    pub timed_out: bool,
    /// Steps of the greedy rollout from the task's start state.
    pub greedy_steps: usize,
    pub greedy_success: bool,
    /// Shortest distance from the start to the nearest goal state.
    pub shortest_steps: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationRow {
    pub k: usize,
    pub delta_t: usize,
    pub satisfying: u64,
    pub total: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RNetAccuracyRow {
    pub seed: u64,
    pub triplets: usize,
    pub final_loss: f64,
    pub heldout_pairs: usize,
    pub heldout_accuracy: f64,
    pub all_pairs_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub name: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub created_unix: u64,
    pub files: Vec<FileEntry>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub manifest: Manifest,
    pub summary: Vec<SummaryRow>,
    pub enumeration: Vec<EnumerationRow>,
    pub rnet: Vec<RNetAccuracyRow>,
}

/// Collects written files relative to the output directory.
struct Outputs {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn path(&self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(path)
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel)?;
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(rel.into());
        Ok(())
    }

    fn record(&mut self, rel: impl Into<PathBuf>) {
        self.files.push(rel.into());
    }
}

pub fn write_csv_rows<S: Serialize, W: Write>(rows: &[S], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(out);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn csv_bytes<S: Serialize>(rows: &[S], header: &[&str]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv_rows(rows, header, &mut buf)?;
    Ok(buf)
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "agent",
    "seed",
    "episodes",
    "episodes_to_success",
    "timed_out",
    "greedy_steps",
    "greedy_success",
    "shortest_steps",
];
pub const ENUMERATION_HEADER: [&str; 5] = ["k", "delta_t", "satisfying", "total", "ratio"];
pub const RNET_HEADER: [&str; 6] = [
    "seed",
    "triplets",
    "final_loss",
    "heldout_pairs",
    "heldout_accuracy",
    "all_pairs_accuracy",
];

pub fn enumeration_csv(rows: &[EnumerationRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &ENUMERATION_HEADER)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

/// Shortest distance from the start state to the nearest goal state.
pub fn start_goal_distance<T>(task: &GridTask<T>, table: &DistanceTable) -> Option<u32>
where
    T: crate::scalar::Real,
{
    task.goal_states()
        .into_iter()
        .filter_map(|g| table.get(task.start, g))
        .min()
}

/// Enumeration sweep over every `(k, delta_t)` pair in ascending order.
pub fn enumeration_sweep<T: crate::scalar::Real>(
    task: &GridTask<T>,
    spec: &EnumerationSpec,
) -> Result<Vec<EnumerationRow>> {
    let table = shortest_distances(&task.mdp);
    let mut ks = spec.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut dts = spec.dt_list.clone();
    dts.sort_unstable();
    dts.dedup();
    let mut rows = Vec::with_capacity(ks.len() * dts.len());
    for &k in &ks {
        for &delta_t in &dts {
            let TrajectoryCount { satisfying, total } =
                count_constrained_trajectories(&task.mdp, &table, spec.horizon, k, delta_t)?;
            rows.push(EnumerationRow {
                k,
                delta_t,
                satisfying,
                total,
                ratio: satisfying as f64 / total as f64,
            });
        }
    }
    Ok(rows)
}

/// Trains an RNet on random walks of `task` and scores it against the
/// ground-truth predicate on held-out walks and on all state pairs.
pub fn evaluate_rnet(
    task: &GridTask<f64>,
    spec: &RNetEvalSpec,
    seed: u64,
) -> Result<(RNetModel<f64>, TrainReport, RNetAccuracyRow)> {
    let mut mdp = task.mdp.reward_free();
    if spec.all_initial_states {
        let all = (0..mdp.num_states()).collect();
        mdp = mdp.with_initial_states(all)?;
    }
    let table = shortest_distances(&mdp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_eps = random_walk_episodes(&mdp, spec.train_episodes, spec.episode_len, &mut rng)?;
    let heldout_eps =
        random_walk_episodes(&mdp, spec.heldout_episodes, spec.episode_len, &mut rng)?;
    let cfg = &spec.train;
    let mut model = RNetModel::new(mdp.num_states(), cfg.hidden, &mut rng)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.step_size, cfg.weight_decay);
    let report = train_on_episodes(
        &mut model,
        &mut opt,
        train_eps.iter().map(|e| e.as_slice()),
        cfg,
        &mut rng,
    )?;

    let k = cfg.triplets.k;
    let heldout: Vec<_> = heldout_eps
        .iter()
        .flat_map(|e| sample_triplets(e, &cfg.triplets, &mut rng))
        .collect();
    let pairs = gt_labeled_pairs(&heldout, &table, k);
    let scores = ScoreTable::new(&model)?;
    let threshold = spec.threshold;
    let row = RNetAccuracyRow {
        seed,
        triplets: report.triplets,
        final_loss: report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        heldout_pairs: pairs.len(),
        heldout_accuracy: rnet_accuracy(&scores, &pairs, threshold)?,
        all_pairs_accuracy: rnet_accuracy(&scores, &all_gt_pairs(&table, k), threshold)?,
    };
    Ok((model, report, row))
}

struct JobResult {
    row: SummaryRow,
    curve_csv: Vec<u8>,
    policy: PolicyTable<f64>,
    artifact: Vec<u8>,
    rnet: Option<Vec<u8>>,
}

fn run_job(config: &ExperimentConfig, agent: &AgentSpec, seed: u64) -> Result<JobResult> {
    let task = config.task.build::<f64>(seed)?;
    let table = shortest_distances(&task.mdp);
    let mut cfg = agent.config.clone();
    cfg.seed = seed;
    if let Some(cap) = config.caps.max_episodes {
        cfg.episodes = cfg.episodes.min(cap);
    }
    let ctx = match cfg.cost_source {
        CostSource::None => CostContext::None,
        CostSource::Gt => CostContext::Gt(&table),
        CostSource::Rnet => CostContext::Rnet(None),
    };
    let deadline = config
        .caps
        .wall_clock_secs
        .map(|s| Instant::now() + Duration::from_secs_f64(s));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = train_agent_until(&task.mdp, &cfg, ctx, &mut rng, deadline)?;

    let max_steps = cfg.max_steps.unwrap_or(task.mdp.horizon());
    let greedy = rollout_from(
        &task.mdp,
        &out.policy.greedy(),
        task.start,
        &mut ChaCha8Rng::seed_from_u64(seed),
        max_steps,
    )?;
    let row = SummaryRow {
        agent: agent.name.clone(),
        seed,
        episodes: out.curve.records.len(),
        episodes_to_success: out
            .curve
            .episodes_to_success(cfg.success_window, cfg.success_threshold),
        timed_out: out.timed_out,
        greedy_steps: greedy.len(),
        greedy_success: greedy.rewards.iter().any(|&r| r > 0.0),
        shortest_steps: start_goal_distance(&task, &table),
    };
    let mut curve_csv = Vec::new();
    out.curve.write_csv(&mut curve_csv)?;
    let artifact = PolicyArtifact::new(config.task.clone(), seed, max_steps, &out.policy)?;
    let rnet = match &out.rnet {
        Some(m) => Some(serde_json::to_vec(&m.to_checkpoint())?),
        None => None,
    };
    Ok(JobResult {
        row,
        curve_csv,
        policy: out.policy,
        artifact: serde_json::to_vec(&artifact)?,
        rnet,
    })
}

/// Runs every part of `config` and writes its files under the output
/// directory. Agent-seed jobs run concurrently; each uses its own random
/// stream, so results do not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut out = Outputs {
        root: config.output_dir.clone(),
        files: Vec::new(),
    };

    let jobs: Vec<(&AgentSpec, u64)> = config
        .agents
        .iter()
        .flat_map(|a| config.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|&(agent, seed)| run_job(config, agent, seed))
        .collect::<Result<_>>()?;

    let mut summary = Vec::with_capacity(results.len());
    for ((agent, seed), res) in jobs.iter().zip(&results) {
        out.write(
            &format!("curves/{}/seed_{seed}.csv", agent.name),
            &res.curve_csv,
        )?;
        out.write(
            &format!("policies/{}/seed_{seed}.json", agent.name),
            &res.artifact,
        )?;
        if let Some(bytes) = &res.rnet {
            out.write(&format!("rnet/{}/seed_{seed}.json", agent.name), bytes)?;
        }
        summary.push(res.row.clone());
    }
    if !jobs.is_empty() {
        out.write("summary.csv", &csv_bytes(&summary, &SUMMARY_HEADER)?)?;
    }

    if let Some(spec) = &config.visit_maps {
        for agent in &config.agents {
            let runs: Vec<(u64, &PolicyTable<f64>)> = jobs
                .iter()
                .zip(&results)
                .filter(|((a, _), _)| a.name == agent.name)
                .map(|((_, s), r)| (*s, &r.policy))
                .collect();
            // Randomized tasks differ per seed; the map uses the first seed's
            // layout for every run.
            let task = config.task.build::<f64>(config.seeds[0])?;
            let map = visit_map_runs(&task, &runs, spec.episodes, spec.max_steps)?;
            let stem = format!("maps/{}", agent.name);
            export_heatmap(&map, &out.path(&stem)?)?;
            out.record(format!("{stem}.csv"));
            out.record(format!("{stem}.pgm"));
        }
    }

    let mut enumeration = Vec::new();
    if let Some(spec) = &config.enumeration {
        let task = config.task.build::<f64>(config.seeds[0])?;
        enumeration = enumeration_sweep(&task, spec)?;
        out.write("enumeration.csv", &enumeration_csv(&enumeration)?)?;
    }

    let mut rnet = Vec::new();
    if let Some(spec) = &config.rnet_eval {
        let evals: Vec<_> = config
            .seeds
            .par_iter()
            .map(|&seed| {
                let task = config.task.build::<f64>(seed)?;
                evaluate_rnet(&task, spec, seed)
            })
            .collect::<Result<_>>()?;
        for (seed, (model, _, row)) in config.seeds.iter().zip(evals) {
            out.write(
                &format!("rnet_eval/seed_{seed}.json"),
                &serde_json::to_vec(&model.to_checkpoint())?,
            )?;
            rnet.push(row);
        }
        out.write("rnet_accuracy.csv", &csv_bytes(&rnet, &RNET_HEADER)?)?;
    }

    let mut files = Vec::with_capacity(out.files.len());
    for rel in &out.files {
        let path = out.root.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.push(FileEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_hex(&bytes),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        name: config.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.hash()?,
        seeds: config.seeds.clone(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files,
        config: config.clone(),
    };
    let path = out.root.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&path, e))?;

    Ok(ExperimentReport {
        manifest,
        summary,
        enumeration,
        rnet,
    })
}

/// Median episodes-to-success of one agent across an experiment's seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub experiment: String,
    pub agent: String,
    pub seeds: usize,
    pub successes: usize,
    /// `None` when at least half of the seeds never reached the threshold.
    pub median_episodes_to_success: Option<f64>,
    pub median_greedy_steps: f64,
}

pub const COMPARISON_HEADER: [&str; 6] = [
    "experiment",
    "agent",
    "seeds",
    "successes",
    "median_episodes_to_success",
    "median_greedy_steps",
];

/// Median with unfinished runs ordered after every finished one.
pub fn median_episodes(values: &[Option<usize>]) -> Option<f64> {
    let mut v: Vec<usize> = values.iter().map(|x| x.unwrap_or(usize::MAX)).collect();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return None;
    }
    let (a, b) = (v[(n - 1) / 2], v[n / 2]);
    (b != usize::MAX).then(|| (a as f64 + b as f64) / 2.0)
}

fn median_f64(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) / 2.0
}

/// Per-agent medians of each report's summary, in agent order.
pub fn compare_reports(reports: &[ExperimentReport]) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for report in reports {
        for agent in &report.manifest.config.agents {
            let mine: Vec<&SummaryRow> = report
                .summary
                .iter()
                .filter(|r| r.agent == agent.name)
                .collect();
            if mine.is_empty() {
                continue;
            }
            let eps: Vec<Option<usize>> = mine.iter().map(|r| r.episodes_to_success).collect();
            rows.push(ComparisonRow {
                experiment: report.manifest.name.clone(),
                agent: agent.name.clone(),
                seeds: mine.len(),
                successes: eps.iter().filter(|x| x.is_some()).count(),
                median_episodes_to_success: median_episodes(&eps),
                median_greedy_steps: median_f64(
                    mine.iter().map(|r| r.greedy_steps as f64).collect(),
                ),
            });
        }
    }
    rows
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &COMPARISON_HEADER)
}
