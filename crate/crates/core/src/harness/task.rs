use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::minigrid::build_minigrid_from_layout;
use crate::gridworld::{
    build_minigrid_task, build_tabular, Cell, GridLayout, GridTask, MiniGridKind,
};
use crate::mdp::PolicyTable;
use crate::scalar::Real;

pub const POLICY_FORMAT: &str = "sprl-policy/1";

/// Which environment an experiment runs on.
///
/// `layout` is a bundled layout name or a path to a layout file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Tabular {
        layout: String,
        horizon: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<Cell>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goal: Option<Cell>,
    },
    Minigrid {
        env: MiniGridKind,
        size: usize,
        #[serde(default)]
        randomize: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<String>,
    },
}

impl TaskSpec {
    /// Builds the task. `seed` only matters for randomized MiniGrid tasks,
    /// where it picks the goal.
    pub fn build<T: Real>(&self, seed: u64) -> Result<GridTask<T>> {
        match self {
            TaskSpec::Tabular {
                layout,
                horizon,
                start,
                goal,
            } => {
                let mut grid = GridLayout::load(layout)?;
                if let Some(s) = start {
                    grid = grid.with_start(*s)?;
                }
                if let Some(g) = goal {
                    grid = grid.with_goal(*g)?;
                }
                build_tabular(&grid, *horizon)
            }
            TaskSpec::Minigrid {
                env,
                size,
                randomize,
                layout,
            } => {
                let mg = match layout {
                    Some(name) => build_minigrid_from_layout(
                        *env,
                        &mut GridLayout::load(name)?,
                        seed,
                        *randomize,
                    )?,
                    None => build_minigrid_task(*env, *size, seed, *randomize)?,
                };
                Ok(mg.task)
            }
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(
            self,
            TaskSpec::Minigrid {
                randomize: true,
                ..
            }
        )
    }
}

/// A trained policy together with what is needed to rebuild its task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub format: String,
    pub task: TaskSpec,
    pub seed: u64,
    pub max_steps: usize,
    pub policy: PolicyTable<f64>,
}

impl PolicyArtifact {
    pub fn new<T: Real>(
        task: TaskSpec,
        seed: u64,
        max_steps: usize,
        policy: &PolicyTable<T>,
    ) -> Result<Self> {
        let logits = policy.all_logits().iter().map(|x| x.as_f64()).collect();
        let policy = PolicyTable::from_logits(
            policy.num_states(),
            policy.num_actions(),
            logits,
            policy.temperature().as_f64(),
        )?;
        Ok(Self {
            format: POLICY_FORMAT.to_string(),
            task,
            seed,
            max_steps,
            policy,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let artifact: Self = serde_json::from_str(&text)?;
        if artifact.format != POLICY_FORMAT {
            return Err(Error::Config(format!(
                "{}: unsupported policy format {:?}",
                path.display(),
                artifact.format
            )));
        }
        Ok(artifact)
    }
}
