//! MiniGrid-style tasks at tabular fidelity: the agent has a heading, moves
//! forward one cell at a time and can carry a key and toggle doors.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::layout::{Cell, GridLayout};
use crate::gridworld::GridTask;
use crate::mdp::{State, TabularMdp, DEFAULT_GAMMA};
use crate::scalar::Real;

pub const MINIGRID_HORIZON: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiniGridKind {
    FourRooms,
    KeyDoor,
    NineRooms,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn clockwise(self) -> Self {
        Self::ALL[(self as usize + 1) % 4]
    }

    pub fn counter_clockwise(self) -> Self {
        Self::ALL[(self as usize + 3) % 4]
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum MiniAction {
    TurnCounterClockwise = 0,
    TurnClockwise = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    /// The unused optional action.
    NoOp = 6,
}

impl MiniAction {
    pub const ALL: [MiniAction; 7] = [
        MiniAction::TurnCounterClockwise,
        MiniAction::TurnClockwise,
        MiniAction::Forward,
        MiniAction::Pickup,
        MiniAction::Drop,
        MiniAction::Toggle,
        MiniAction::NoOp,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridState {
    pub agent: Cell,
    pub direction: Direction,
    pub has_key: bool,
    /// Where the key lies when not carried; `None` when carried or absent.
    pub key_cell: Option<Cell>,
    pub door_open: bool,
}

/// A MiniGrid task: the tabular MDP plus the state enumeration.
#[derive(Clone, Debug)]
pub struct MiniGridTask<T> {
    pub task: GridTask<T>,
    pub kind: MiniGridKind,
    pub states: Vec<GridState>,
    index: HashMap<GridState, State>,
}

impl<T> MiniGridTask<T> {
    pub fn index_of(&self, state: &GridState) -> Option<State> {
        self.index.get(state).copied()
    }

    pub fn state(&self, s: State) -> &GridState {
        &self.states[s]
    }
}

/// Episode score used for reporting MiniGrid runs: `1 - 0.9 * steps / horizon`
/// when the goal was reached, 0 otherwise.
pub fn episode_score(reached_goal: bool, steps: usize, horizon: usize) -> f64 {
    if reached_goal {
        1.0 - 0.9 * steps as f64 / horizon as f64
    } else {
        0.0
    }
}

struct Dynamics<'a> {
    layout: &'a GridLayout,
    goal: Cell,
}

impl Dynamics<'_> {
    fn front(&self, s: &GridState) -> Option<Cell> {
        let (dr, dc) = s.direction.delta();
        self.layout
            .neighbor(s.agent, dr, dc)
            .filter(|&c| !self.layout.is_wall(c))
    }

    fn is_door(&self, c: Cell) -> bool {
        self.layout.is_door(c)
    }

    fn apply(&self, s: &GridState, action: MiniAction) -> GridState {
        let mut next = *s;
        match action {
            MiniAction::TurnCounterClockwise => next.direction = s.direction.counter_clockwise(),
            MiniAction::TurnClockwise => next.direction = s.direction.clockwise(),
            MiniAction::Forward => {
                if let Some(f) = self.front(s) {
                    let blocked_by_door = self.is_door(f) && !s.door_open;
                    let blocked_by_key = s.key_cell == Some(f);
                    if !blocked_by_door && !blocked_by_key {
                        next.agent = f;
                    }
                }
            }
            MiniAction::Pickup => {
                if let Some(f) = self.front(s) {
                    if !s.has_key && s.key_cell == Some(f) {
                        next.has_key = true;
                        next.key_cell = None;
                    }
                }
            }
            MiniAction::Drop => {
                if let Some(f) = self.front(s) {
                    if s.has_key && !self.is_door(f) && f != self.goal {
                        next.has_key = false;
                        next.key_cell = Some(f);
                    }
                }
            }
            MiniAction::Toggle => {
                if let Some(f) = self.front(s) {
                    if self.is_door(f) {
                        if s.door_open {
                            next.door_open = false;
                        } else if s.has_key {
                            next.door_open = true;
                        }
                    }
                }
            }
            MiniAction::NoOp => {}
        }
        next
    }
}

fn kind_layout(kind: MiniGridKind, size: usize) -> Result<GridLayout> {
    let bad = || Error::arg(format!("unsupported size {size} for {kind:?}"));
    match kind {
        MiniGridKind::FourRooms => match size {
            7 => GridLayout::bundled("fourrooms_7"),
            11 => GridLayout::bundled("fourrooms_11"),
            _ => Err(bad()),
        },
        MiniGridKind::KeyDoor => match size {
            7 => GridLayout::bundled("keydoor_7"),
            11 => GridLayout::bundled("keydoor_11"),
            _ => Err(bad()),
        },
        MiniGridKind::NineRooms => match size {
            13 => GridLayout::bundled("ninerooms_13"),
            19 => {
                let layout = GridLayout::nine_rooms(19)?;
                layout
                    .with_start(Cell::new(1, 1))?
                    .with_goal(Cell::new(17, 17))
            }
            _ => Err(bad()),
        },
    }
}

/// Builds one of the MiniGrid tasks.
///
/// With `randomize == false` the agent starts at the layout's start cell
/// facing east and the goal is the layout's goal. With `randomize == true`
/// the goal is drawn from `seed` and episodes start from any free cell and
/// heading. The environment pays +1 at the goal; see [`episode_score`] for the
/// time-scaled score.
pub fn build_minigrid_task<T: Real>(
    kind: MiniGridKind,
    size: usize,
    seed: u64,
    randomize: bool,
) -> Result<MiniGridTask<T>> {
    let mut layout = kind_layout(kind, size)?;
    build_minigrid_from_layout(kind, &mut layout, seed, randomize)
}

pub fn build_minigrid_from_layout<T: Real>(
    kind: MiniGridKind,
    layout: &mut GridLayout,
    seed: u64,
    randomize: bool,
) -> Result<MiniGridTask<T>> {
    let free: Vec<Cell> = layout
        .open_cells()
        .into_iter()
        .filter(|&c| !layout.is_door(c) && Some(c) != layout.key())
        .collect();
    if randomize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let goal = *free.choose(&mut rng).expect("layout has free cells");
        let start = *free
            .iter()
            .find(|&&c| c != goal)
            .ok_or_else(|| Error::arg("layout too small to randomize"))?;
        *layout = layout.clone().with_endpoints(start, goal)?;
    }
    let goal = layout
        .goal()
        .ok_or_else(|| Error::arg("layout has no goal"))?;
    let start = layout
        .start()
        .ok_or_else(|| Error::arg("layout has no start"))?;

    let base = GridState {
        agent: start,
        direction: Direction::East,
        has_key: false,
        key_cell: layout.key(),
        door_open: false,
    };
    let roots: Vec<GridState> = if randomize {
        free.iter()
            .filter(|&&c| c != goal)
            .flat_map(|&c| {
                Direction::ALL.iter().map(move |&d| GridState {
                    agent: c,
                    direction: d,
                    ..base
                })
            })
            .collect()
    } else {
        vec![base]
    };

    let dynamics = Dynamics { layout, goal };
    let mut states: Vec<GridState> = Vec::new();
    let mut index: HashMap<GridState, State> = HashMap::new();
    let mut queue = VecDeque::new();
    for root in &roots {
        if !index.contains_key(root) {
            index.insert(*root, states.len());
            states.push(*root);
            queue.push_back(*root);
        }
    }
    let mut edges: Vec<Vec<(State, T)>> = Vec::new();
    // Breadth-first enumeration; edges are filled in discovery order so the
    // row for state `s` lands at `s * 7 + a`.
    let mut processed = 0;
    while let Some(s) = queue.pop_front() {
        debug_assert_eq!(index[&s], processed);
        for action in MiniAction::ALL {
            let next = if s.agent == goal {
                s
            } else {
                dynamics.apply(&s, action)
            };
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    index.insert(next, id);
                    states.push(next);
                    queue.push_back(next);
                    id
                }
            };
            edges.push(vec![(id, T::one())]);
        }
        processed += 1;
    }

    let n = states.len();
    let mut rewards = vec![T::zero(); n];
    let mut terminal = Vec::new();
    for (id, s) in states.iter().enumerate() {
        if s.agent == goal {
            rewards[id] = T::one();
            terminal.push(id);
        }
    }
    let initial: Vec<State> = roots.iter().map(|r| index[r]).collect();
    let cells = states.iter().map(|s| s.agent).collect();
    let mdp = TabularMdp::new(
        n,
        MiniAction::ALL.len(),
        edges,
        rewards,
        initial.clone(),
        &terminal,
        T::lit(DEFAULT_GAMMA),
        MINIGRID_HORIZON,
    )?;
    Ok(MiniGridTask {
        task: GridTask {
            mdp,
            layout: layout.clone(),
            cells,
            start: initial[0],
            goal: None,
        },
        kind,
        states,
        index,
    })
}
