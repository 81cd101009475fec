use crate::error::{Error, Result};
use crate::gridworld::layout::{Cell, GridLayout};
use crate::gridworld::GridTask;
use crate::mdp::{TabularMdp, DEFAULT_GAMMA};
use crate::scalar::Real;

/// Up, down, left, right.
pub const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

/// Four-action gridworld over the open cells of `layout` (doors count as
/// floor). Moving into a wall leaves the agent in place. The goal pays +1
/// on arrival and is terminal.
pub fn build_tabular<T: Real>(layout: &GridLayout, horizon: usize) -> Result<GridTask<T>> {
    let start = layout
        .start()
        .ok_or_else(|| Error::arg("layout has no start cell"))?;
    let goal = layout
        .goal()
        .ok_or_else(|| Error::arg("layout has no goal cell"))?;
    let cells = layout.open_cells();
    let index = |c: Cell| cells.binary_search(&c).ok();
    let mut next = Vec::with_capacity(cells.len() * MOVES.len());
    for &cell in &cells {
        for (dr, dc) in MOVES {
            let target = layout
                .neighbor(cell, dr, dc)
                .filter(|&n| !layout.is_wall(n))
                .unwrap_or(cell);
            next.push(index(target).expect("open cell indexed"));
        }
    }
    let start_state =
        index(start).ok_or_else(|| Error::arg(format!("start {start} is on a wall")))?;
    let goal_state = index(goal).ok_or_else(|| Error::arg(format!("goal {goal} is on a wall")))?;
    let mut rewards = vec![T::zero(); cells.len()];
    rewards[goal_state] = T::one();
    let mdp = TabularMdp::deterministic(
        cells.len(),
        MOVES.len(),
        &next,
        rewards,
        vec![start_state],
        &[goal_state],
        T::lit(DEFAULT_GAMMA),
        horizon,
    )?;
    Ok(GridTask {
        mdp,
        layout: layout.clone(),
        cells,
        start: start_state,
        goal: Some(goal_state),
    })
}

/// Plain four-rooms of side `size` with explicit start and goal cells.
pub fn build_fourrooms_tabular<T: Real>(
    size: usize,
    start: Cell,
    goal: Cell,
    horizon: usize,
) -> Result<GridTask<T>> {
    let base = GridLayout::four_rooms(size)?;
    if base.is_wall(start) {
        return Err(Error::arg(format!("start {start} is on a wall")));
    }
    if base.is_wall(goal) {
        return Err(Error::arg(format!("goal {goal} is on a wall")));
    }
    if start == goal {
        return Err(Error::arg("start and goal coincide"));
    }
    let layout = base
        .with_endpoints(start, goal)
        .map_err(|e| Error::arg(e.to_string()))?;
    build_tabular(&layout, horizon)
}
