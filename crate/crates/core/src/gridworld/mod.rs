//! Gridworld environments: plain four-action rooms and MiniGrid-style tasks.

pub mod layout;
pub mod minigrid;
pub mod tabular;

pub use layout::{Cell, GridLayout, BUNDLED_LAYOUTS};
pub use minigrid::{
    build_minigrid_task, episode_score, Direction, GridState, MiniAction, MiniGridKind,
    MiniGridTask,
};
pub use tabular::{build_fourrooms_tabular, build_tabular};

use crate::mdp::{State, TabularMdp};
use crate::scalar::Real;

/// A gridworld MDP together with the cell each state places the agent in.
#[derive(Clone, Debug)]
pub struct GridTask<T> {
    pub mdp: TabularMdp<T>,
    pub layout: GridLayout,
    /// Agent cell for every state index.
    pub cells: Vec<Cell>,
    pub start: State,
    /// Single goal state for four-action tasks; `None` when several states
    /// share the goal cell (MiniGrid headings).
    pub goal: Option<State>,
}

impl<T: Real> GridTask<T> {
    /// States whose agent cell is the goal cell.
    pub fn goal_states(&self) -> Vec<State> {
        match self.layout.goal() {
            Some(goal) => (0..self.cells.len())
                .filter(|&s| self.cells[s] == goal)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// One-hot feature vector of length `num_states`.
pub fn encode_state<T: Real>(mdp: &TabularMdp<T>, s: State) -> Vec<T> {
    one_hot(mdp.num_states(), s)
}

pub fn one_hot<T: Real>(width: usize, s: State) -> Vec<T> {
    let mut v = vec![T::zero(); width];
    v[s] = T::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_encodings_are_distinct_and_invertible() {
        let task = build_fourrooms_tabular::<f64>(7, Cell::new(1, 1), Cell::new(4, 4), 14).unwrap();
        let n = task.mdp.num_states();
        let codes: Vec<Vec<f64>> = (0..n).map(|s| encode_state(&task.mdp, s)).collect();
        assert_eq!(codes[0][0], 1.0);
        assert_eq!(codes[0].iter().sum::<f64>(), 1.0);
        for (s, code) in codes.iter().enumerate() {
            let argmax = code
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, s);
            for other in &codes[s + 1..] {
                assert_ne!(code, other);
            }
        }
    }
}
