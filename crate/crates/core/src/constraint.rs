//! The k-shortest-path cost and trajectory-space enumeration.
//!
//! Time index `t` refers to state index `t` of a trajectory, so `t` ranges
//! over `0..=traj.len()`. Reward `r_j` is the reward of transition `j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{gt_reachability, DistanceTable};
use crate::error::{Error, Result};
use crate::mdp::{State, TabularMdp, Trajectory};
use crate::scalar::Real;

/// Parameters of the shortest-path cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CostParams<T> {
    pub k: usize,
    pub delta_t: usize,
    pub lambda: T,
    pub n_tolerance: usize,
    pub gamma: T,
}

impl<T: Real> CostParams<T> {
    /// Uses the default tolerance `round(k / 5)` and a single sample.
    pub fn new(k: usize, lambda: T, gamma: T) -> Result<Self> {
        Self {
            k,
            delta_t: default_tolerance(k),
            lambda,
            n_tolerance: 1,
            gamma,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        if self.n_tolerance == 0 {
            return Err(Error::arg("n_tolerance must be at least 1"));
        }
        if !(self.lambda >= T::zero()) {
            return Err(Error::arg(format!(
                "lambda {} must be non-negative",
                self.lambda
            )));
        }
        if !(self.gamma >= T::zero() && self.gamma < T::one()) {
            return Err(Error::arg(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        Ok(self)
    }

    pub fn with_tolerance(mut self, delta_t: usize, n_tolerance: usize) -> Result<Self> {
        self.delta_t = delta_t;
        self.n_tolerance = n_tolerance;
        self.validated()
    }
}

pub fn default_tolerance(k: usize) -> usize {
    (k + 2) / 5
}

/// Reachability score for an ordered state pair, in `[0, 1]`.
pub trait Reachability<T> {
    fn score(&self, from: State, to: State) -> T;
}

/// Ground-truth predicate `D_nr(from, to) < threshold + 1`.
#[derive(Clone, Copy, Debug)]
pub struct GtReachability<'a> {
    pub table: &'a DistanceTable,
    pub threshold: usize,
}

impl<'a> GtReachability<'a> {
    /// The predicate the cost uses for window length `k`: `D_nr < k`.
    pub fn for_cost(table: &'a DistanceTable, k: usize) -> Self {
        Self {
            table,
            threshold: k.saturating_sub(1),
        }
    }
}

impl<T: Real> Reachability<T> for GtReachability<'_> {
    fn score(&self, from: State, to: State) -> T {
        if gt_reachability(self.table, from, to, self.threshold) {
            T::one()
        } else {
            T::zero()
        }
    }
}

impl<T: Real, F: Fn(State, State) -> T> Reachability<T> for F {
    fn score(&self, from: State, to: State) -> T {
        self(from, to)
    }
}

fn rewards_zero<T: Real>(rewards: &[T], from: usize, to: usize) -> bool {
    rewards[from..to].iter().all(|&r| r == T::zero())
}

/// `I[t >= k] * I[D_nr(s_{t-k}, s_t) < k] * prod_{j=t-k}^{t-1} I[r_j = 0]`.
pub fn step_cost_exact<T: Real>(
    traj: &Trajectory<T>,
    t: usize,
    table: &DistanceTable,
    params: &CostParams<T>,
) -> T {
    let k = params.k;
    if t < k || t > traj.len() {
        return T::zero();
    }
    if !rewards_zero(&traj.rewards, t - k, t) {
        return T::zero();
    }
    match table.get(traj.states[t - k], traj.states[t]) {
        Some(d) if (d as usize) < k => T::one(),
        _ => T::zero(),
    }
}

/// Tolerance-relaxed cost on the pair `(s_{t-k-dt}, s_t)`. With
/// `n_tolerance > 1` the reachability factor is [`multi_tolerance_score`].
pub fn step_cost_tolerant<T: Real, R: Reachability<T> + ?Sized>(
    traj: &Trajectory<T>,
    t: usize,
    reach: &R,
    params: &CostParams<T>,
) -> T {
    let span = params.k + params.delta_t;
    if t < span || t > traj.len() {
        return T::zero();
    }
    if !rewards_zero(&traj.rewards, t - span, t) {
        return T::zero();
    }
    if params.n_tolerance > 1 {
        multi_tolerance_score(traj, t, reach, params)
    } else {
        reach.score(traj.states[t - span], traj.states[t])
    }
}

/// Nearest-rank 90th percentile of the scores for `(s_{t-(k+n dt)}, s_t)`
/// over `n = 1..=n_tolerance`, skipping offsets before the episode start.
pub fn multi_tolerance_score<T: Real, R: Reachability<T> + ?Sized>(
    traj: &Trajectory<T>,
    t: usize,
    reach: &R,
    params: &CostParams<T>,
) -> T {
    if t > traj.len() {
        return T::zero();
    }
    let mut scores: Vec<T> = (1..=params.n_tolerance)
        .map(|n| params.k + n * params.delta_t)
        .filter(|&off| off <= t)
        .map(|off| reach.score(traj.states[t - off], traj.states[t]))
        .collect();
    percentile90(&mut scores)
}

/// Nearest-rank 90th percentile: the `ceil(0.9 m)`-th smallest of `m` values.
pub fn percentile90<T: Real>(values: &mut [T]) -> T {
    let m = values.len();
    if m == 0 {
        return T::zero();
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = (9 * m).div_ceil(10).max(1);
    values[rank - 1]
}

/// `sum_{t=0}^{len} gamma^t c_t`.
pub fn trajectory_cost<T: Real, F: Fn(&Trajectory<T>, usize) -> T>(
    traj: &Trajectory<T>,
    costfn: F,
    gamma: T,
) -> T {
    let mut total = T::zero();
    let mut weight = T::one();
    for t in 0..=traj.len() {
        total += weight * costfn(traj, t);
        weight *= gamma;
    }
    total
}

/// Stores `c_{j+1}` in `traj.costs[j]` for every transition `j`.
pub fn fill_costs<T: Real, F: Fn(&Trajectory<T>, usize) -> T>(traj: &mut Trajectory<T>, costfn: F) {
    let costs: Vec<T> = (1..=traj.len()).map(|t| costfn(traj, t)).collect();
    traj.costs = costs;
}

/// True iff the tolerant cost with the ground-truth predicate vanishes at
/// every time index.
pub fn satisfies_ksp<T: Real>(
    traj: &Trajectory<T>,
    table: &DistanceTable,
    k: usize,
    delta_t: usize,
) -> bool {
    let reach = GtReachability::for_cost(table, k);
    let params = CostParams {
        k,
        delta_t,
        lambda: T::zero(),
        n_tolerance: 1,
        gamma: T::zero(),
    };
    (0..=traj.len()).all(|t| step_cost_tolerant(traj, t, &reach, &params) == T::zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryCount {
    pub satisfying: u64,
    pub total: u64,
}

impl TrajectoryCount {
    pub fn ratio(&self) -> f64 {
        self.satisfying as f64 / self.total as f64
    }
}

/// Largest action-sequence space the enumerator accepts.
pub const ENUMERATION_LIMIT: u64 = 1 << 32;

/// `num_actions^horizon`, or a resource-guard error above [`ENUMERATION_LIMIT`].
pub fn sequence_space(num_actions: usize, horizon: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..horizon {
        total = total
            .checked_mul(num_actions as u64)
            .filter(|&t| t <= ENUMERATION_LIMIT)
            .ok_or_else(|| {
                Error::ResourceGuard(format!(
                    "{num_actions}^{horizon} action sequences exceed the limit of {ENUMERATION_LIMIT}"
                ))
            })?;
    }
    Ok(total)
}

struct Enumerator<'a, T> {
    mdp: &'a TabularMdp<T>,
    table: &'a DistanceTable,
    k: usize,
    delta_t: usize,
    horizon: usize,
}

/// Path state for the depth-first search. `nonzero[t]` counts nonzero rewards
/// among the first `t` transitions.
#[derive(Clone)]
struct Path {
    states: Vec<State>,
    nonzero: Vec<u32>,
}

impl<T: Real> Enumerator<'_, T> {
    /// Cost at the newest index of `path` is zero.
    fn last_ok(&self, path: &Path) -> bool {
        let t = path.states.len() - 1;
        let span = self.k + self.delta_t;
        if t < span {
            return true;
        }
        let w = t - span;
        if path.nonzero[t] != path.nonzero[w] {
            return true;
        }
        match self.table.get(path.states[w], path.states[t]) {
            Some(d) => d as usize >= self.k,
            None => true,
        }
    }

    fn extend(&self, path: &mut Path, a: usize) -> bool {
        let s = *path.states.last().expect("non-empty path");
        let next = self.mdp.next_state(s, a);
        let nz = path.nonzero.last().copied().unwrap_or(0)
            + u32::from(self.mdp.reward(next) != T::zero());
        path.states.push(next);
        path.nonzero.push(nz);
        self.last_ok(path)
    }

    fn retract(&self, path: &mut Path) {
        path.states.pop();
        path.nonzero.pop();
    }

    /// Satisfying completions of a path that is still running.
    fn count(&self, path: &mut Path) -> u64 {
        let depth = path.states.len() - 1;
        if depth == self.horizon {
            return 1;
        }
        let mut total = 0;
        for a in 0..self.mdp.num_actions() {
            if self.extend(path, a) {
                let s = *path.states.last().expect("non-empty path");
                total += if self.mdp.is_terminal(s) {
                    1
                } else {
                    self.count(path)
                };
            }
            self.retract(path);
        }
        total
    }

    /// Satisfying running paths of exactly `depth` steps, plus the number of
    /// satisfying episodes that ended earlier.
    fn frontier(&self, path: &mut Path, depth: usize, out: &mut Vec<Path>) -> u64 {
        if path.states.len() - 1 == depth {
            out.push(path.clone());
            return 0;
        }
        let mut ended = 0;
        for a in 0..self.mdp.num_actions() {
            if self.extend(path, a) {
                let s = *path.states.last().expect("non-empty path");
                if self.mdp.is_terminal(s) {
                    ended += 1;
                } else {
                    ended += self.frontier(path, depth, out);
                }
            }
            self.retract(path);
        }
        ended
    }
}

/// Counts action sequences of length `horizon` from the initial state whose
/// state path satisfies the k-SP constraint with tolerance `delta_t`.
///
/// `total` is `num_actions^horizon`. An episode that reaches a terminal state
/// early is counted once, as its action prefix. A violated prefix is pruned
/// since extending a path never removes a violation.
pub fn count_constrained_trajectories<T: Real>(
    mdp: &TabularMdp<T>,
    table: &DistanceTable,
    horizon: usize,
    k: usize,
    delta_t: usize,
) -> Result<TrajectoryCount> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let total = sequence_space(mdp.num_actions(), horizon)?;
    if !mdp.is_deterministic() {
        return Err(Error::arg("enumeration requires a deterministic MDP"));
    }
    let start = match mdp.initial_states() {
        [s] => *s,
        _ => return Err(Error::arg("enumeration requires a single initial state")),
    };
    if table.num_states() != mdp.num_states() {
        return Err(Error::arg("distance table does not match the MDP"));
    }
    let en = Enumerator {
        mdp,
        table,
        k,
        delta_t,
        horizon,
    };
    let mut root = Path {
        states: vec![start],
        nonzero: vec![0],
    };
    if mdp.is_terminal(start) {
        return Ok(TrajectoryCount {
            satisfying: 1,
            total,
        });
    }
    let split = horizon.min(4);
    let mut prefixes = Vec::new();
    let ended = en.frontier(&mut root, split, &mut prefixes);
    let running: u64 = prefixes.into_par_iter().map(|mut p| en.count(&mut p)).sum();
    Ok(TrajectoryCount {
        satisfying: ended + running,
        total,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::distance::shortest_distances;
    use crate::gridworld::{build_fourrooms_tabular, Cell};

    pub(crate) fn grid7() -> (TabularMdp<f64>, DistanceTable) {
        let mdp = build_fourrooms_tabular(7, Cell::new(1, 1), Cell::new(4, 4), 14)
            .unwrap()
            .mdp;
        let table = shortest_distances(&mdp);
        (mdp, table)
    }

    fn params(k: usize, dt: usize) -> CostParams<f64> {
        CostParams {
            k,
            delta_t: dt,
            lambda: 0.1,
            n_tolerance: 1,
            gamma: 0.9,
        }
    }

    /// Every action sequence, simulated independently; sequences that act
    /// after termination count only with all-zero padding.
    pub(crate) fn brute_force_count(
        mdp: &TabularMdp<f64>,
        table: &DistanceTable,
        horizon: usize,
        k: usize,
        dt: usize,
    ) -> u64 {
        let a = mdp.num_actions();
        let total = a.pow(horizon as u32);
        let start = mdp.initial_states()[0];
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let mut states = vec![start];
            let mut padded = true;
            for _ in 0..horizon {
                let act = c % a;
                c /= a;
                let s = *states.last().unwrap();
                if mdp.is_terminal(s) {
                    padded &= act == 0;
                } else {
                    states.push(mdp.next_state(s, act));
                }
            }
            let traj = Trajectory::from_states(mdp, &states);
            if padded && satisfies_ksp(&traj, table, k, dt) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn oscillation_is_penalized() {
        let (mdp, table) = grid7();
        let traj = Trajectory::from_states(&mdp, &[0, 1, 0]);
        assert_eq!(step_cost_exact(&traj, 2, &table, &params(2, 0)), 1.0);
        assert!(!satisfies_ksp(&traj, &table, 2, 0));
    }

    #[test]
    fn geodesic_of_length_k_is_free() {
        let (mdp, table) = grid7();
        let traj = Trajectory::from_states(&mdp, &[0, 1, 2]);
        assert_eq!(table.get(0, 2), Some(2));
        assert_eq!(step_cost_exact(&traj, 2, &table, &params(2, 0)), 0.0);
        let gt = GtReachability::for_cost(&table, 2);
        assert_eq!(step_cost_tolerant(&traj, 2, &gt, &params(2, 0)), 0.0);
    }

    #[test]
    fn reward_in_window_clears_cost() {
        let next = [0, 1, 0, 2, 1, 2];
        let mdp = TabularMdp::deterministic(3, 2, &next, vec![0.0, 1.0, 0.0], vec![0], &[], 0.9, 5)
            .unwrap();
        let table = shortest_distances(&mdp);
        let traj = Trajectory::from_states(&mdp, &[0, 1, 0]);
        assert_eq!(step_cost_exact(&traj, 2, &table, &params(2, 0)), 0.0);
    }

    #[test]
    fn tolerant_gate_and_idle_window() {
        let (mdp, table) = grid7();
        let gt = GtReachability::for_cost(&table, 3);
        let p = params(3, 1);
        // Idle for two steps at the start cell, then move right twice.
        let traj = Trajectory::from_states(&mdp, &[0, 0, 0, 1, 2]);
        assert_eq!(step_cost_tolerant(&traj, 3, &gt, &p), 0.0);
        // Pair (s_0, s_4) = ((1,1), (1,3)) with distance 2 < 3.
        assert_eq!(table.get(0, 2), Some(2));
        assert_eq!(step_cost_tolerant(&traj, 4, &gt, &p), 1.0);
    }

    #[test]
    fn percentile_examples() {
        let mut flat = vec![0.7; 6];
        assert_eq!(percentile90(&mut flat), 0.7);
        let mut one_hot = vec![0.0; 10];
        one_hot[9] = 1.0;
        assert_eq!(percentile90(&mut one_hot), 0.0);
        let mut two_hot = vec![0.0; 10];
        two_hot[0] = 1.0;
        two_hot[5] = 1.0;
        assert_eq!(percentile90(&mut two_hot), 1.0);
        assert_eq!(percentile90::<f64>(&mut []), 0.0);
    }

    #[test]
    fn multi_tolerance_with_single_sample_matches_tolerant() {
        let (mdp, table) = grid7();
        let traj = Trajectory::from_states(&mdp, &[0, 1, 0, 1, 0, 1, 2, 1]);
        let gt = GtReachability::for_cost(&table, 2);
        let p = params(2, 1);
        for t in 0..=traj.len() {
            let single = step_cost_tolerant(&traj, t, &gt, &p);
            let multi = if t >= 3 {
                multi_tolerance_score(&traj, t, &gt, &p)
            } else {
                0.0
            };
            assert_eq!(single, multi, "t = {t}");
        }
    }

    #[test]
    fn trajectory_cost_arithmetic() {
        let (mdp, _) = grid7();
        let traj = Trajectory::from_states(&mdp, &[0, 1, 2, 3]);
        let c = trajectory_cost(&traj, |_, t| if t == 2 { 1.0 } else { 0.0 }, 0.9);
        assert!((c - 0.81).abs() < 1e-12);
        assert_eq!(trajectory_cost(&traj, |_, _| 0.0, 0.9), 0.0);
    }

    #[test]
    fn fill_costs_aligns_with_transitions() {
        let (mdp, table) = grid7();
        let mut traj = Trajectory::from_states(&mdp, &[0, 1, 0, 1]);
        let p = params(2, 0);
        fill_costs(&mut traj, |tr, t| step_cost_exact(tr, t, &table, &p));
        assert_eq!(traj.costs, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn short_trajectories_satisfy() {
        let (mdp, table) = grid7();
        let traj = Trajectory::from_states(&mdp, &[0, 1, 0]);
        assert!(satisfies_ksp(&traj, &table, 2, 1));
    }

    #[test]
    fn pruned_count_matches_brute_force() {
        let (mdp, table) = grid7();
        for horizon in [1, 4, 7] {
            for k in 1..=4 {
                for dt in 0..=2 {
                    let fast =
                        count_constrained_trajectories(&mdp, &table, horizon, k, dt).unwrap();
                    assert_eq!(fast.total, 4u64.pow(horizon as u32));
                    assert_eq!(
                        fast.satisfying,
                        brute_force_count(&mdp, &table, horizon, k, dt),
                        "h={horizon} k={k} dt={dt}"
                    );
                }
            }
        }
    }

    #[test]
    fn early_termination_counts_once() {
        // 0 -> 1 (goal) under action 1; action 0 idles at 0.
        let next = [0, 1, 1, 1];
        let mdp =
            TabularMdp::deterministic(2, 2, &next, vec![0.0, 1.0], vec![0], &[1], 0.9, 3).unwrap();
        let table = shortest_distances(&mdp);
        // k = 4 never fires within 3 steps: 1 idle path + 3 goal prefixes.
        let count = count_constrained_trajectories(&mdp, &table, 3, 4, 0).unwrap();
        assert_eq!(
            count,
            TrajectoryCount {
                satisfying: 4,
                total: 8
            }
        );
        assert_eq!(brute_force_count(&mdp, &table, 3, 4, 0), 4);
        // k = 3 rejects idling three times.
        let count = count_constrained_trajectories(&mdp, &table, 3, 3, 0).unwrap();
        assert_eq!(count.satisfying, 3);
    }

    #[test]
    fn guard_rejects_huge_spaces() {
        let (mdp, table) = grid7();
        let err = count_constrained_trajectories(&mdp, &table, 17, 3, 0).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard(_)));
    }

    #[test]
    fn default_tolerance_is_about_a_fifth() {
        assert_eq!(default_tolerance(1), 0);
        assert_eq!(default_tolerance(3), 1);
        assert_eq!(default_tolerance(5), 1);
        assert_eq!(default_tolerance(10), 2);
    }
}
