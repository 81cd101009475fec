use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Cell, GridTask};
use crate::mdp::{rollout, PolicyTable};
use crate::scalar::Real;

/// Slots of a cell's counts: moves north, east, south, west, then
/// transitions that leave the agent in place (turns, bumps, toggles).
pub const DIRECTIONS: [&str; 5] = ["north", "east", "south", "west", "stay"];

/// Per-cell directed transition counts, indexed by the cell the agent
/// leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionCountMap {
    height: usize,
    width: usize,
    counts: Vec<[f64; 5]>,
}

impl TransitionCountMap {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            counts: vec![[0.0; 5]; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, cell: Cell) -> [f64; 5] {
        self.counts[self.index(cell)]
    }

    pub fn cell_total(&self, cell: Cell) -> f64 {
        self.get(cell).iter().sum()
    }

    /// Row-major per-cell totals.
    pub fn totals(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.totals().iter().sum()
    }

    /// Cells with any recorded transition.
    pub fn support(&self) -> Vec<Cell> {
        (0..self.counts.len())
            .filter(|&i| self.counts[i].iter().any(|&x| x > 0.0))
            .map(|i| Cell::new(i / self.width, i % self.width))
            .collect()
    }

    pub fn add(&mut self, from: Cell, to: Cell, weight: f64) -> Result<()> {
        if from.row >= self.height || from.col >= self.width {
            return Err(Error::arg(format!("cell {from} outside the map")));
        }
        let slot = match (
            to.row as isize - from.row as isize,
            to.col as isize - from.col as isize,
        ) {
            (-1, 0) => 0,
            (0, 1) => 1,
            (1, 0) => 2,
            (0, -1) => 3,
            (0, 0) => 4,
            _ => {
                return Err(Error::arg(format!(
                    "transition {from} -> {to} is not a single move"
                )))
            }
        };
        let i = self.index(from);
        self.counts[i][slot] += weight;
        Ok(())
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    fn scale(&mut self, factor: f64) {
        for c in &mut self.counts {
            for x in c.iter_mut() {
                *x *= factor;
            }
        }
    }
}

/// Transition counts of `episodes` policy rollouts per seed, averaged over
/// `seeds`.
pub fn visit_map<T: Real>(
    task: &GridTask<T>,
    policy: &PolicyTable<T>,
    episodes: usize,
    max_steps: usize,
    seeds: &[u64],
) -> Result<TransitionCountMap> {
    let runs: Vec<(u64, &PolicyTable<T>)> = seeds.iter().map(|&s| (s, policy)).collect();
    visit_map_runs(task, &runs, episodes, max_steps)
}

/// [`visit_map`] with a separate policy per seed, as when each seed trained
/// its own agent.
pub fn visit_map_runs<T: Real>(
    task: &GridTask<T>,
    runs: &[(u64, &PolicyTable<T>)],
    episodes: usize,
    max_steps: usize,
) -> Result<TransitionCountMap> {
    if episodes == 0 {
        return Err(Error::arg("episodes must be at least 1"));
    }
    if runs.is_empty() {
        return Err(Error::arg("at least one seed is required"));
    }
    let mut map = TransitionCountMap::new(task.layout.height(), task.layout.width());
    for &(seed, policy) in runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..episodes {
            let traj = rollout(&task.mdp, policy, &mut rng, max_steps)?;
            for w in traj.states.windows(2) {
                map.add(task.cells[w[0]], task.cells[w[1]], 1.0)?;
            }
        }
    }
    map.scale(1.0 / runs.len() as f64);
    Ok(map)
}

#[derive(Serialize, Deserialize)]
struct Row {
    row: usize,
    col: usize,
    north: f64,
    east: f64,
    south: f64,
    west: f64,
    stay: f64,
}

/// Paths written by [`export_heatmap`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeatmapFiles {
    pub csv: PathBuf,
    pub pgm: PathBuf,
}

/// Writes `<stem>.csv` (one row per cell with its directed counts) and
/// `<stem>.pgm`, a binary graymap of per-cell totals with the maximum in
/// white.
pub fn export_heatmap(map: &TransitionCountMap, stem: &Path) -> Result<HeatmapFiles> {
    let csv_path = stem.with_extension("csv");
    let pgm_path = stem.with_extension("pgm");

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in 0..map.height {
            for c in 0..map.width {
                let [north, east, south, west, stay] = map.get(Cell::new(r, c));
                w.serialize(Row {
                    row: r,
                    col: c,
                    north,
                    east,
                    south,
                    west,
                    stay,
                })?;
            }
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
    }
    std::fs::write(&csv_path, &buf).map_err(|e| Error::io(&csv_path, e))?;

    let totals = map.totals();
    let max = totals.iter().copied().fold(0.0, f64::max);
    let mut pgm = Vec::with_capacity(totals.len() + 32);
    write!(pgm, "P5\n{} {}\n255\n", map.width, map.height).map_err(|e| Error::io(&pgm_path, e))?;
    pgm.extend(totals.iter().map(|&t| {
        if max > 0.0 {
            (255.0 * t / max).round() as u8
        } else {
            0
        }
    }));
    std::fs::write(&pgm_path, &pgm).map_err(|e| Error::io(&pgm_path, e))?;

    Ok(HeatmapFiles {
        csv: csv_path,
        pgm: pgm_path,
    })
}

/// Reads a map written by [`export_heatmap`].
pub fn read_heatmap_csv(path: &Path) -> Result<TransitionCountMap> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<Row> = csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let height = rows.iter().map(|r| r.row + 1).max().unwrap_or(0);
    let width = rows.iter().map(|r| r.col + 1).max().unwrap_or(0);
    if rows.len() != height * width {
        return Err(Error::Config(format!(
            "{}: incomplete count grid",
            path.display()
        )));
    }
    let mut map = TransitionCountMap::new(height, width);
    for r in rows {
        let i = map.index(Cell::new(r.row, r.col));
        map.counts[i] = [r.north, r.east, r.south, r.west, r.stay];
    }
    Ok(map)
}
