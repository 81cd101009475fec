//! Tabular policy-gradient agents trained on the shaped reward `r - lambda c`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{fill_costs, step_cost_tolerant, CostParams, GtReachability, Reachability};
use crate::distance::DistanceTable;
use crate::error::{Error, Result};
use crate::mdp::{discounted_return, rollout, Action, PolicyTable, State, TabularMdp, Trajectory};
use crate::rnet::{
    train_from_buffer, Optimizer, RNetModel, RNetTrainConfig, ReplayBuffer, ScoreTable,
};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Reinforce,
    ClippedSurrogate,
    /// Uniform policy, never updated.
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    #[default]
    None,
    Gt,
    Rnet,
}

/// What the learner sees of the environment reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Env,
    /// No extrinsic reward; only the cost (and any bonus) drives learning.
    Free,
    /// `sign(r)` in place of `r`.
    Existence,
}

impl RewardMode {
    pub fn apply<T: Real>(self, r: T) -> T {
        match self {
            RewardMode::Env => r,
            RewardMode::Free => T::zero(),
            RewardMode::Existence => {
                if r > T::zero() {
                    T::one()
                } else if r < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RNetSchedule {
    /// Retrain after this many episodes.
    pub retrain_every: usize,
    pub buffer_steps: usize,
    pub train: RNetTrainConfig,
}

impl Default for RNetSchedule {
    fn default() -> Self {
        Self {
            retrain_every: 20,
            buffer_steps: 60_000,
            train: RNetTrainConfig {
                epochs: 1,
                ..RNetTrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub entropy_coeff: f64,
    pub lambda: f64,
    pub cost_source: CostSource,
    pub k: usize,
    pub delta_t: usize,
    pub n_tolerance: usize,
    pub reward_mode: RewardMode,
    /// Count-based bonus scale; 0 disables it.
    pub ucb_beta: f64,
    pub episodes: usize,
    pub batch_size: usize,
    pub clip: f64,
    pub surrogate_epochs: usize,
    pub baseline_rate: f64,
    /// Episode step cap; `None` uses the MDP horizon.
    pub max_steps: Option<usize>,
    pub success_window: usize,
    pub success_threshold: f64,
    /// Stop once the success criterion is met.
    pub stop_on_success: bool,
    pub rnet: RNetSchedule,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Reinforce,
            step_size: 0.1,
            entropy_coeff: 0.01,
            lambda: 0.0,
            cost_source: CostSource::None,
            k: 3,
            delta_t: 0,
            n_tolerance: 1,
            reward_mode: RewardMode::Env,
            ucb_beta: 0.0,
            episodes: 1000,
            batch_size: 8,
            clip: 0.2,
            surrogate_epochs: 4,
            baseline_rate: 0.1,
            max_steps: None,
            success_window: 20,
            success_threshold: 0.95,
            stop_on_success: false,
            rnet: RNetSchedule::default(),
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad(format!(
                "step_size {} must be a non-negative number",
                self.step_size
            ));
        }
        if !(self.entropy_coeff >= 0.0) {
            return bad(format!(
                "entropy_coeff {} must be non-negative",
                self.entropy_coeff
            ));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda {} must be non-negative", self.lambda));
        }
        if !(self.ucb_beta >= 0.0) {
            return bad(format!("ucb_beta {} must be non-negative", self.ucb_beta));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n_tolerance == 0 {
            return bad("n_tolerance must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.success_window == 0 {
            return bad("success_window must be at least 1".into());
        }
        if self.cost_source == CostSource::Rnet && self.rnet.retrain_every == 0 {
            return bad("rnet.retrain_every must be at least 1".into());
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be at least 1".into());
        }
        Ok(())
    }

    pub fn cost_params<T: Real>(&self, gamma: T) -> Result<CostParams<T>> {
        CostParams {
            k: self.k,
            delta_t: self.delta_t,
            lambda: T::lit(self.lambda),
            n_tolerance: self.n_tolerance,
            gamma,
        }
        .validated()
    }
}

/// `r - lambda * c`.
pub fn shaped_step_reward<T: Real>(r: T, c: T, lambda: T) -> T {
    r - lambda * c
}

/// `beta / sqrt(max(1, n))`.
pub fn ucb_bonus<T: Real>(visit_counts: &[u64], s_next: State, beta: T) -> T {
    let n = visit_counts.get(s_next).copied().unwrap_or(0).max(1);
    beta / T::lit(n as f64).sqrt()
}

/// Discounted return-to-go for every transition index.
pub fn returns_to_go<T: Real>(rewards: &[T], gamma: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = T::zero();
    for j in (0..rewards.len()).rev() {
        acc = rewards[j] + gamma * acc;
        out[j] = acc;
    }
    out
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy<T: Real>(probs: &[T]) -> T {
    probs
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}

/// One policy-gradient sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample<T> {
    pub state: State,
    pub action: Action,
    pub advantage: T,
    /// Probability of `action` under the behavior policy.
    pub old_prob: T,
}

/// Objective whose gradient the update ascends, normalized by `episodes`.
///
/// Reinforce: `sum A log pi(a|s) + c H(s)`. Clipped surrogate:
/// `sum min(rho A, clip(rho) A) + c H(s)` with `rho = pi / pi_old`.
pub fn surrogate_objective<T: Real>(
    policy: &PolicyTable<T>,
    samples: &[Sample<T>],
    algorithm: Algorithm,
    clip: T,
    entropy_coeff: T,
    episodes: usize,
) -> T {
    let mut total = T::zero();
    for smp in samples {
        let probs = policy.probs(smp.state);
        let p = probs[smp.action];
        let term = match algorithm {
            Algorithm::ClippedSurrogate => {
                let rho = p / smp.old_prob;
                let clipped = rho.max(T::one() - clip).min(T::one() + clip);
                (rho * smp.advantage).min(clipped * smp.advantage)
            }
            _ => smp.advantage * p.ln(),
        };
        total += term + entropy_coeff * entropy(&probs);
    }
    total / T::from_count(episodes.max(1))
}

/// Analytic gradient of [`surrogate_objective`] with respect to all logits.
pub fn surrogate_gradient<T: Real>(
    policy: &PolicyTable<T>,
    samples: &[Sample<T>],
    algorithm: Algorithm,
    clip: T,
    entropy_coeff: T,
    episodes: usize,
) -> Vec<T> {
    let na = policy.num_actions();
    let tau = policy.temperature();
    let mut grad = vec![T::zero(); policy.all_logits().len()];
    for smp in samples {
        let probs = policy.probs(smp.state);
        let p = probs[smp.action];
        // Coefficient on grad log pi(a|s).
        let coeff = match algorithm {
            Algorithm::ClippedSurrogate => {
                let rho = p / smp.old_prob;
                let unclipped = rho * smp.advantage;
                let clipped = rho.max(T::one() - clip).min(T::one() + clip) * smp.advantage;
                if unclipped <= clipped {
                    rho * smp.advantage
                } else {
                    T::zero()
                }
            }
            _ => smp.advantage,
        };
        let h = entropy(&probs);
        let g = &mut grad[smp.state * na..(smp.state + 1) * na];
        for b in 0..na {
            let indicator = if b == smp.action { T::one() } else { T::zero() };
            g[b] += coeff * (indicator - probs[b]) / tau;
            if probs[b] > T::zero() {
                g[b] -= entropy_coeff * probs[b] * (probs[b].ln() + h) / tau;
            }
        }
    }
    let scale = T::one() / T::from_count(episodes.max(1));
    for x in &mut grad {
        *x *= scale;
    }
    grad
}

/// Per-state running-mean baseline.
#[derive(Clone, Debug)]
pub struct Baseline<T> {
    values: Vec<T>,
    rate: T,
}

impl<T: Real> Baseline<T> {
    pub fn new(num_states: usize, rate: T) -> Self {
        Self {
            values: vec![T::zero(); num_states],
            rate,
        }
    }

    pub fn value(&self, s: State) -> T {
        self.values[s]
    }
}

/// Policy-gradient samples for a batch of trajectories whose `rewards` are
/// the learner's shaped rewards. Advantages use the baseline from before
/// the batch; the baseline is then moved toward the observed returns.
pub fn batch_samples<T: Real>(
    policy: &PolicyTable<T>,
    batch: &[Trajectory<T>],
    gamma: T,
    baseline: &mut Baseline<T>,
) -> Vec<Sample<T>> {
    let mut samples = Vec::new();
    let mut targets = Vec::new();
    for traj in batch {
        let g = returns_to_go(&traj.rewards, gamma);
        for (j, &ret) in g.iter().enumerate() {
            let s = traj.states[j];
            let a = traj.actions[j];
            samples.push(Sample {
                state: s,
                action: a,
                advantage: ret - baseline.value(s),
                old_prob: policy.probs(s)[a],
            });
            targets.push((s, ret));
        }
    }
    for (s, ret) in targets {
        let v = &mut baseline.values[s];
        *v += baseline.rate * (ret - *v);
    }
    samples
}

/// Updates `policy` from a batch of trajectories carrying shaped rewards.
pub fn policy_update<T: Real>(
    policy: &mut PolicyTable<T>,
    batch: &[Trajectory<T>],
    cfg: &AgentConfig,
    gamma: T,
    baseline: &mut Baseline<T>,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::arg("empty trajectory batch"));
    }
    if cfg.algorithm == Algorithm::Random {
        return Ok(());
    }
    let samples = batch_samples(policy, batch, gamma, baseline);
    let epochs = match cfg.algorithm {
        Algorithm::ClippedSurrogate => cfg.surrogate_epochs.max(1),
        _ => 1,
    };
    let step = T::lit(cfg.step_size);
    for _ in 0..epochs {
        let grad = surrogate_gradient(
            policy,
            &samples,
            cfg.algorithm,
            T::lit(cfg.clip),
            T::lit(cfg.entropy_coeff),
            batch.len(),
        );
        for (l, g) in policy.all_logits_mut().iter_mut().zip(grad) {
            *l += step * g;
        }
    }
    if policy.all_logits().iter().any(|l| l.is_nan()) {
        return Err(Error::Numerical("policy logits became NaN".into()));
    }
    Ok(())
}

/// One row of a learning curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    #[serde(rename = "return")]
    pub ret: f64,
    pub disc_return: f64,
    pub cost: f64,
    pub success: u8,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub records: Vec<EpisodeRecord>,
}

impl LearningCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record([
                "episode",
                "seed",
                "return",
                "disc_return",
                "cost",
                "success",
                "steps",
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }

    /// Episodes consumed when the trailing success rate over `window`
    /// episodes first reaches `threshold`.
    pub fn episodes_to_success(&self, window: usize, threshold: f64) -> Option<usize> {
        let window = window.max(1);
        let mut hits = 0usize;
        for (i, r) in self.records.iter().enumerate() {
            hits += r.success as usize;
            if i >= window {
                hits -= self.records[i - window].success as usize;
            }
            if i + 1 >= window && hits as f64 >= threshold * window as f64 {
                return Some(i + 1);
            }
        }
        None
    }
}

/// Reachability source for the cost.
#[derive(Clone, Debug)]
pub enum CostContext<'a, T> {
    None,
    Gt(&'a DistanceTable),
    /// Starts from the given model, or a fresh one whose cost stays zero
    /// until its first training round.
    Rnet(Option<RNetModel<T>>),
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub policy: PolicyTable<T>,
    pub curve: LearningCurve,
    pub rnet: Option<RNetModel<T>>,
    /// Whether a wall-clock deadline ended the run early.
    pub timed_out: bool,
}

struct RnetState<T> {
    model: RNetModel<T>,
    scores: Option<ScoreTable<T>>,
    buffer: ReplayBuffer,
    opt: Optimizer<T>,
}

/// Trains a tabular softmax policy on `mdp` with the configured cost.
pub fn train_agent<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    cfg: &AgentConfig,
    ctx: CostContext<'_, T>,
    rng: &mut R,
) -> Result<TrainOutcome<T>> {
    train_agent_until(mdp, cfg, ctx, rng, None)
}

/// [`train_agent`] that stops after the first episode finishing past
/// `deadline`, applying the partial batch.
pub fn train_agent_until<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    cfg: &AgentConfig,
    ctx: CostContext<'_, T>,
    rng: &mut R,
    deadline: Option<Instant>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let gamma = mdp.gamma();
    let params = cfg.cost_params(gamma)?;
    let table = match (cfg.cost_source, &ctx) {
        (CostSource::None, _) => None,
        (CostSource::Gt, CostContext::Gt(table)) => {
            if table.num_states() != mdp.num_states() {
                return Err(Error::Config(
                    "distance table does not match the MDP".into(),
                ));
            }
            Some(*table)
        }
        (CostSource::Rnet, CostContext::Rnet(_)) => None,
        (source, _) => {
            return Err(Error::Config(format!(
                "cost source {source:?} needs a matching cost context"
            )))
        }
    };
    let mut rnet = match (cfg.cost_source, ctx) {
        (CostSource::Rnet, CostContext::Rnet(model)) => {
            let n = mdp.num_states();
            let (model, scores) = match model {
                Some(m) => {
                    if m.input_width() != n {
                        return Err(Error::Config(
                            "RNet input width does not match the MDP".into(),
                        ));
                    }
                    let scores = ScoreTable::new(&m)?;
                    (m, Some(scores))
                }
                None => (RNetModel::new(n, cfg.rnet.train.hidden, rng)?, None),
            };
            let train = &cfg.rnet.train;
            Some(RnetState {
                model,
                scores,
                buffer: ReplayBuffer::new(cfg.rnet.buffer_steps)?,
                opt: Optimizer::new(
                    train.optimizer,
                    T::lit(train.step_size),
                    T::lit(train.weight_decay),
                ),
            })
        }
        _ => None,
    };

    let max_steps = cfg.max_steps.unwrap_or(mdp.horizon());
    let lambda = T::lit(cfg.lambda);
    let beta = T::lit(cfg.ucb_beta);
    let mut policy = PolicyTable::uniform(mdp.num_states(), mdp.num_actions());
    let mut baseline = Baseline::new(mdp.num_states(), T::lit(cfg.baseline_rate));
    let mut visits = vec![0u64; mdp.num_states()];
    let mut curve = LearningCurve::default();
    let mut timed_out = false;
    let mut episode = 0;
    while episode < cfg.episodes {
        let batch_len = cfg.batch_size.min(cfg.episodes - episode);
        let mut batch = Vec::with_capacity(batch_len);
        for _ in 0..batch_len {
            let mut traj = rollout(mdp, &policy, rng, max_steps)?;
            match (table, &rnet) {
                (Some(table), _) => {
                    let reach = GtReachability::for_cost(table, params.k);
                    fill_costs(&mut traj, |tr, t| {
                        step_cost_tolerant(tr, t, &reach, &params)
                    });
                }
                (
                    None,
                    Some(RnetState {
                        scores: Some(scores),
                        ..
                    }),
                ) => {
                    fill_costs(&mut traj, |tr, t| {
                        step_cost_tolerant(tr, t, scores as &dyn Reachability<T>, &params)
                    });
                }
                _ => {}
            }
            let success = traj.rewards.iter().any(|&r| r > T::zero());
            curve.records.push(EpisodeRecord {
                episode,
                seed: cfg.seed,
                ret: traj.rewards.iter().copied().sum::<T>().as_f64(),
                disc_return: discounted_return(&traj, gamma).as_f64(),
                cost: traj.costs.iter().copied().sum::<T>().as_f64(),
                success: u8::from(success),
                steps: traj.len(),
            });

            // Learner's reward: transformed env reward, bonus, minus cost.
            for j in 0..traj.len() {
                let next = traj.states[j + 1];
                let mut r = cfg.reward_mode.apply(traj.rewards[j]);
                if cfg.ucb_beta > 0.0 {
                    visits[next] += 1;
                    r += ucb_bonus(&visits, next, beta);
                }
                traj.rewards[j] = shaped_step_reward(r, traj.costs[j], lambda);
            }
            if let Some(state) = rnet.as_mut() {
                state.buffer.push(&traj.states);
                if (episode + 1) % cfg.rnet.retrain_every == 0 {
                    train_from_buffer(
                        &mut state.model,
                        &mut state.opt,
                        &state.buffer,
                        &cfg.rnet.train,
                        rng,
                    )?;
                    state.scores = Some(ScoreTable::new(&state.model)?);
                }
            }
            batch.push(traj);
            episode += 1;
            if deadline.is_some_and(|d| Instant::now() >= d) {
                timed_out = episode < cfg.episodes;
                break;
            }
        }
        policy_update(&mut policy, &batch, cfg, gamma, &mut baseline)?;
        if timed_out {
            break;
        }
        if cfg.stop_on_success
            && curve
                .episodes_to_success(cfg.success_window, cfg.success_threshold)
                .is_some()
        {
            break;
        }
    }
    Ok(TrainOutcome {
        policy,
        curve,
        rnet: rnet.map(|s| s.model),
        timed_out,
    })
}
