//! Finite MDPs, tabular softmax policies, rollouts and exact planning.
//!
//! Rewards follow the arrival convention: a transition into `s'` pays
//! `reward(s')`. Terminal states end an episode and have no value of their own.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type State = usize;
pub type Action = usize;

/// Discount used throughout unless a task overrides it.
pub const DEFAULT_GAMMA: f64 = 0.99;

const MAX_VALUE_SWEEPS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TabularMdp<T> {
    num_states: usize,
    num_actions: usize,
    /// Successor distribution for `(s, a)` at index `s * num_actions + a`.
    transitions: Vec<Vec<(State, T)>>,
    rewards: Vec<T>,
    initial_states: Vec<State>,
    terminal: Vec<bool>,
    gamma: T,
    horizon: usize,
}

/// Flat JSON description used for fixtures and interchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MdpDescription<T> {
    pub num_states: usize,
    pub num_actions: usize,
    /// `(state, action, next_state, probability)` quadruples.
    pub transitions: Vec<(State, Action, State, T)>,
    pub rewards: Vec<T>,
    pub initial_states: Vec<State>,
    pub terminal_states: Vec<State>,
    pub gamma: T,
    pub horizon: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub next: State,
    pub reward: T,
    pub done: bool,
}

impl<T: Real> TabularMdp<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<Vec<(State, T)>>,
        rewards: Vec<T>,
        initial_states: Vec<State>,
        terminal_states: &[State],
        gamma: T,
        horizon: usize,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::arg("MDP needs at least one state and one action"));
        }
        if transitions.len() != num_states * num_actions {
            return Err(Error::arg(format!(
                "expected {} transition rows, got {}",
                num_states * num_actions,
                transitions.len()
            )));
        }
        let tol = T::lit(1e-9);
        for (idx, row) in transitions.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::arg(format!(
                    "state {} action {} has no successors",
                    idx / num_actions,
                    idx % num_actions
                )));
            }
            let mut total = T::zero();
            for &(next, p) in row {
                if next >= num_states {
                    return Err(Error::arg(format!("successor {next} out of range")));
                }
                if !(p >= T::zero()) {
                    return Err(Error::arg(format!("negative probability {p}")));
                }
                total += p;
            }
            if (total - T::one()).abs() > tol {
                return Err(Error::arg(format!(
                    "state {} action {} probabilities sum to {total}",
                    idx / num_actions,
                    idx % num_actions
                )));
            }
        }
        if rewards.len() != num_states {
            return Err(Error::arg("reward vector length differs from state count"));
        }
        if initial_states.is_empty() {
            return Err(Error::arg("no initial states"));
        }
        if let Some(&bad) = initial_states.iter().find(|&&s| s >= num_states) {
            return Err(Error::arg(format!("initial state {bad} out of range")));
        }
        let mut terminal = vec![false; num_states];
        for &s in terminal_states {
            if s >= num_states {
                return Err(Error::arg(format!("terminal state {s} out of range")));
            }
            terminal[s] = true;
        }
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::arg(format!("gamma {gamma} outside [0, 1)")));
        }
        if horizon == 0 {
            return Err(Error::arg("horizon must be positive"));
        }
        Ok(Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            initial_states,
            terminal,
            gamma,
            horizon,
        })
    }

    /// Deterministic MDP from a flat successor table indexed `s * num_actions + a`.
    #[allow(clippy::too_many_arguments)]
    pub fn deterministic(
        num_states: usize,
        num_actions: usize,
        next: &[State],
        rewards: Vec<T>,
        initial_states: Vec<State>,
        terminal_states: &[State],
        gamma: T,
        horizon: usize,
    ) -> Result<Self> {
        let transitions = next.iter().map(|&s| vec![(s, T::one())]).collect();
        Self::new(
            num_states,
            num_actions,
            transitions,
            rewards,
            initial_states,
            terminal_states,
            gamma,
            horizon,
        )
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_states(&self) -> &[State] {
        &self.initial_states
    }

    pub fn reward(&self, s: State) -> T {
        self.rewards[s]
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    pub fn is_terminal(&self, s: State) -> bool {
        self.terminal[s]
    }

    pub fn is_rewarding(&self, s: State) -> bool {
        self.rewards[s] != T::zero()
    }

    pub fn is_initial(&self, s: State) -> bool {
        self.initial_states.contains(&s)
    }

    pub fn terminal_states(&self) -> Vec<State> {
        (0..self.num_states).filter(|&s| self.terminal[s]).collect()
    }

    pub fn rewarding_states(&self) -> Vec<State> {
        (0..self.num_states)
            .filter(|&s| self.is_rewarding(s))
            .collect()
    }

    /// Union of initial and rewarding states.
    pub fn initial_or_rewarding(&self) -> Vec<State> {
        (0..self.num_states)
            .filter(|&s| self.is_rewarding(s) || self.is_initial(s))
            .collect()
    }

    pub fn successors(&self, s: State, a: Action) -> &[(State, T)] {
        &self.transitions[s * self.num_actions + a]
    }

    pub fn is_deterministic(&self) -> bool {
        self.transitions.iter().all(|row| row.len() == 1)
    }

    /// Successor of a deterministic transition. Panics on stochastic rows.
    pub fn next_state(&self, s: State, a: Action) -> State {
        let row = self.successors(s, a);
        assert_eq!(row.len(), 1, "next_state called on a stochastic transition");
        row[0].0
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::arg("horizon must be positive"));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_initial_states(mut self, initial: Vec<State>) -> Result<Self> {
        if initial.is_empty() || initial.iter().any(|&s| s >= self.num_states) {
            return Err(Error::arg("invalid initial state set"));
        }
        self.initial_states = initial;
        Ok(self)
    }

    /// Same dynamics with every reward zeroed and no terminal states.
    pub fn reward_free(&self) -> Self {
        let mut out = self.clone();
        out.rewards = vec![T::zero(); self.num_states];
        out.terminal = vec![false; self.num_states];
        out
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        self.initial_states[rng.gen_range(0..self.initial_states.len())]
    }

    /// Samples one transition. `done` is set when the successor is terminal;
    /// horizon truncation is the caller's business.
    pub fn step<R: Rng + ?Sized>(
        &self,
        s: State,
        a: Action,
        rng: &mut R,
    ) -> Result<StepOutcome<T>> {
        if s >= self.num_states {
            return Err(Error::arg(format!("state {s} out of range")));
        }
        if a >= self.num_actions {
            return Err(Error::arg(format!("action {a} out of range")));
        }
        if self.terminal[s] {
            return Err(Error::arg(format!("state {s} is terminal")));
        }
        let row = self.successors(s, a);
        let next = if row.len() == 1 {
            row[0].0
        } else {
            let u = T::lit(rng.gen::<f64>());
            let mut acc = T::zero();
            let mut chosen = row[row.len() - 1].0;
            for &(next, p) in row {
                acc += p;
                if u < acc {
                    chosen = next;
                    break;
                }
            }
            chosen
        };
        Ok(StepOutcome {
            next,
            reward: self.rewards[next],
            done: self.terminal[next],
        })
    }

    pub fn to_description(&self) -> MdpDescription<T> {
        let mut transitions = Vec::new();
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for &(next, p) in self.successors(s, a) {
                    transitions.push((s, a, next, p));
                }
            }
        }
        MdpDescription {
            num_states: self.num_states,
            num_actions: self.num_actions,
            transitions,
            rewards: self.rewards.clone(),
            initial_states: self.initial_states.clone(),
            terminal_states: self.terminal_states(),
            gamma: self.gamma,
            horizon: self.horizon,
        }
    }

    pub fn from_description(desc: MdpDescription<T>) -> Result<Self> {
        let mut rows = vec![Vec::new(); desc.num_states * desc.num_actions];
        for (s, a, next, p) in desc.transitions {
            if s >= desc.num_states || a >= desc.num_actions {
                return Err(Error::arg(format!("transition ({s}, {a}) out of range")));
            }
            rows[s * desc.num_actions + a].push((next, p));
        }
        Self::new(
            desc.num_states,
            desc.num_actions,
            rows,
            desc.rewards,
            desc.initial_states,
            &desc.terminal_states,
            desc.gamma,
            desc.horizon,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_description())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_description(serde_json::from_str(text)?)
    }
}

/// An episode as parallel arrays: `states` has one more entry than the
/// per-transition `actions`, `rewards` and `costs`.
///
/// `rewards[j]` is the reward paid on arrival at `states[j + 1]`. `costs[j]`
/// holds the shortest-path cost evaluated at state index `j + 1` (the cost at
/// index 0 is identically zero) and stays zero until a cost is assigned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T> {
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    pub rewards: Vec<T>,
    pub costs: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(start: State) -> Self {
        Self {
            states: vec![start],
            actions: Vec::new(),
            rewards: Vec::new(),
            costs: Vec::new(),
        }
    }

    /// Builds a trajectory from a state path, reading rewards from `mdp`.
    /// Actions are unknown and recorded as 0.
    pub fn from_states(mdp: &TabularMdp<T>, states: &[State]) -> Self {
        let mut traj = Self::new(states[0]);
        for &s in &states[1..] {
            traj.push(0, s, mdp.reward(s));
        }
        traj
    }

    pub fn push(&mut self, action: Action, next: State, reward: T) {
        self.actions.push(action);
        self.states.push(next);
        self.rewards.push(reward);
        self.costs.push(T::zero());
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn start_state(&self) -> State {
        self.states[0]
    }

    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory has a start state")
    }
}

/// Tabular softmax policy `pi(a|s) ∝ exp(logit(s, a) / temperature)`.
///
/// A logit of negative infinity gives an action zero probability, which is
/// how deterministic (greedy) policies are represented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PolicyTable<T> {
    num_states: usize,
    num_actions: usize,
    logits: Vec<T>,
    temperature: T,
}

impl<T: Real> PolicyTable<T> {
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            logits: vec![T::zero(); num_states * num_actions],
            temperature: T::one(),
        }
    }

    pub fn from_logits(
        num_states: usize,
        num_actions: usize,
        logits: Vec<T>,
        temperature: T,
    ) -> Result<Self> {
        if logits.len() != num_states * num_actions {
            return Err(Error::arg("logit table has the wrong size"));
        }
        if !(temperature > T::zero()) {
            return Err(Error::arg("temperature must be positive"));
        }
        Ok(Self {
            num_states,
            num_actions,
            logits,
            temperature,
        })
    }

    /// One-hot policy choosing `actions[s]` in every state.
    pub fn deterministic(num_actions: usize, actions: &[Action]) -> Self {
        let mut logits = vec![T::neg_infinity(); actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            logits[s * num_actions + a] = T::zero();
        }
        Self {
            num_states: actions.len(),
            num_actions,
            logits,
            temperature: T::one(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn temperature(&self) -> T {
        self.temperature
    }

    pub fn logits(&self, s: State) -> &[T] {
        &self.logits[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn logits_mut(&mut self, s: State) -> &mut [T] {
        &mut self.logits[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn all_logits(&self) -> &[T] {
        &self.logits
    }

    pub fn all_logits_mut(&mut self) -> &mut [T] {
        &mut self.logits
    }

    pub fn probs(&self, s: State) -> Vec<T> {
        let logits = self.logits(s);
        let max = logits
            .iter()
            .copied()
            .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
        let mut out: Vec<T> = logits
            .iter()
            .map(|&l| ((l - max) / self.temperature).exp())
            .collect();
        let total: T = out.iter().copied().sum();
        for p in &mut out {
            *p /= total;
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: State, rng: &mut R) -> Action {
        let probs = self.probs(s);
        let u = T::lit(rng.gen::<f64>());
        let mut acc = T::zero();
        let mut fallback = 0;
        for (a, &p) in probs.iter().enumerate() {
            if p > T::zero() {
                fallback = a;
            }
            acc += p;
            if u < acc {
                return a;
            }
        }
        fallback
    }

    /// Highest-logit action, lowest index on ties.
    pub fn greedy_action(&self, s: State) -> Action {
        let mut best = 0;
        let logits = self.logits(s);
        for a in 1..self.num_actions {
            if logits[a] > logits[best] {
                best = a;
            }
        }
        best
    }

    pub fn greedy(&self) -> Self {
        let actions: Vec<Action> = (0..self.num_states)
            .map(|s| self.greedy_action(s))
            .collect();
        Self::deterministic(self.num_actions, &actions)
    }
}

/// Rolls out `policy` from an initial state drawn from `mdp`.
pub fn rollout<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    policy: &PolicyTable<T>,
    rng: &mut R,
    max_steps: usize,
) -> Result<Trajectory<T>> {
    let start = mdp.sample_initial(rng);
    rollout_from(mdp, policy, start, rng, max_steps)
}

pub fn rollout_from<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    policy: &PolicyTable<T>,
    start: State,
    rng: &mut R,
    max_steps: usize,
) -> Result<Trajectory<T>> {
    if max_steps == 0 {
        return Err(Error::arg("max_steps must be at least 1"));
    }
    if policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return Err(Error::arg("policy shape does not match the MDP"));
    }
    let mut traj = Trajectory::new(start);
    let mut s = start;
    while traj.len() < max_steps && !mdp.is_terminal(s) {
        let a = policy.sample(s, rng);
        let out = mdp.step(s, a, rng)?;
        traj.push(a, out.next, out.reward);
        s = out.next;
        if out.done {
            break;
        }
    }
    Ok(traj)
}

/// `sum_t gamma^t r_t`, with `r_0` the reward of the first transition.
pub fn discounted_return<T: Real>(traj: &Trajectory<T>, gamma: T) -> T {
    discounted_sum(&traj.rewards, gamma)
}

pub(crate) fn discounted_sum<T: Real>(values: &[T], gamma: T) -> T {
    let mut total = T::zero();
    let mut weight = T::one();
    for &v in values {
        total += weight * v;
        weight *= gamma;
    }
    total
}

#[derive(Clone, Debug)]
pub struct ValueSolution<T> {
    pub values: Vec<T>,
    pub greedy: PolicyTable<T>,
    pub sweeps: usize,
}

fn q_value<T: Real>(mdp: &TabularMdp<T>, values: &[T], s: State, a: Action, gamma: T) -> T {
    mdp.successors(s, a)
        .iter()
        .map(|&(next, p)| {
            let future = if mdp.is_terminal(next) {
                T::zero()
            } else {
                gamma * values[next]
            };
            p * (mdp.reward(next) + future)
        })
        .sum()
}

/// Synchronous value iteration until the sup-norm Bellman residual drops
/// below `tol`. Terminal states keep value zero.
pub fn value_iteration<T: Real>(mdp: &TabularMdp<T>, gamma: T, tol: T) -> Result<ValueSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::arg(format!("gamma {gamma} outside [0, 1)")));
    }
    let n = mdp.num_states();
    let mut values = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    let mut sweeps = 0;
    while residual >= tol {
        if sweeps >= MAX_VALUE_SWEEPS {
            return Err(Error::NotConverged {
                iterations: sweeps,
                residual: residual.as_f64(),
            });
        }
        residual = T::zero();
        for s in 0..n {
            next[s] = if mdp.is_terminal(s) {
                T::zero()
            } else {
                (0..mdp.num_actions())
                    .map(|a| q_value(mdp, &values, s, a, gamma))
                    .fold(T::neg_infinity(), T::max)
            };
            residual = residual.max((next[s] - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        sweeps += 1;
    }

    // Ties within a few ulps count as ties so the lowest index wins.
    let actions: Vec<Action> = (0..n)
        .map(|s| {
            let mut best = 0;
            let mut best_q = q_value(mdp, &values, s, 0, gamma);
            for a in 1..mdp.num_actions() {
                let q = q_value(mdp, &values, s, a, gamma);
                let slack = T::epsilon() * T::lit(16.0) * best_q.abs().max(T::one());
                if q > best_q + slack {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect();
    Ok(ValueSolution {
        values,
        greedy: PolicyTable::deterministic(mdp.num_actions(), &actions),
        sweeps,
    })
}
