use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sprl::distance::shortest_distances;
use sprl::gridworld::{build_tabular, Cell, GridLayout};
use sprl::harness::{
    compare_reports, comparison_csv, enumeration_csv, enumeration_sweep, export_heatmap,
    run_experiment, visit_map, EnumerationSpec, ExperimentConfig, ExperimentReport, PolicyArtifact,
};
use sprl::rnet::{
    all_gt_pairs, gt_labeled_pairs, random_walk_episodes, rnet_accuracy, sample_triplets,
    RNetModel, ScoreTable, TripletParams,
};
use sprl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sprl",
    version,
    about = "k-shortest-path constrained RL on gridworlds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count action sequences that satisfy the k-SP constraint.
    Enumerate {
        #[arg(long)]
        layout: String,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        k_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        dt_list: Vec<usize>,
        /// Override the start cell as `row,col`.
        #[arg(long, value_parser = parse_cell)]
        start: Option<Cell>,
        #[arg(long, value_parser = parse_cell)]
        goal: Option<Cell>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured agents and write curves, policies and a manifest.
    TrainAgent {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train and evaluate RNets on random walks as set by `rnet_eval`.
    TrainRnet {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a saved RNet against ground-truth reachability on a layout.
    EvalRnet {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        layout: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        positive_bias: usize,
        #[arg(long, default_value_t = 20)]
        negative_bias: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        #[arg(long, default_value_t = 100)]
        episode_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a saved policy and export its transition-count map.
    VisitMap {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        seeds: Vec<u64>,
        /// Defaults to the step cap stored with the policy.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Output path stem; `.csv` and `.pgm` are appended.
        #[arg(long, default_value = "visit_map")]
        out: PathBuf,
    },
    /// Run several experiments and tabulate median episodes to success.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct Overrides {
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

fn parse_cell(text: &str) -> std::result::Result<Cell, String> {
    let (r, c) = text.split_once(',').ok_or("expected row,col")?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok(Cell::new(parse(r)?, parse(c)?))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn summary_bytes(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    sprl::harness::write_csv_rows(&report.summary, &sprl::harness::SUMMARY_HEADER, &mut buf)?;
    Ok(buf)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enumerate {
            layout,
            horizon,
            k_list,
            dt_list,
            start,
            goal,
            out,
        } => {
            let mut grid = GridLayout::load(&layout)?;
            if let Some(s) = start {
                grid = grid.with_start(s)?;
            }
            if let Some(g) = goal {
                grid = grid.with_goal(g)?;
            }
            let task = build_tabular::<f64>(&grid, horizon)?;
            let spec = EnumerationSpec {
                horizon,
                k_list,
                dt_list,
            };
            if spec.k_list.contains(&0) {
                return Err(Error::InvalidArgument("k values must be at least 1".into()));
            }
            let rows = enumeration_sweep(&task, &spec)?;
            emit(out.as_deref(), &enumeration_csv(&rows)?)
        }
        Command::TrainAgent { config, overrides } => {
            let mut cfg = overrides.load(&config)?;
            if cfg.agents.is_empty() {
                return Err(Error::Config("config has no agents".into()));
            }
            cfg.enumeration = None;
            cfg.rnet_eval = None;
            let report = run_experiment(&cfg)?;
            emit(None, &summary_bytes(&report)?)
        }
        Command::TrainRnet { config, overrides } => {
            let mut cfg = overrides.load(&config)?;
            if cfg.rnet_eval.is_none() {
                return Err(Error::Config("config has no rnet_eval section".into()));
            }
            cfg.agents.clear();
            cfg.enumeration = None;
            cfg.visit_maps = None;
            let report = run_experiment(&cfg)?;
            let mut buf = Vec::new();
            sprl::harness::write_csv_rows(&report.rnet, &sprl::harness::RNET_HEADER, &mut buf)?;
            emit(None, &buf)
        }
        Command::EvalRnet {
            checkpoint,
            layout,
            k,
            positive_bias,
            negative_bias,
            threshold,
            episodes,
            episode_len,
            seed,
            out,
        } => {
            let model = RNetModel::<f64>::load(&checkpoint)?;
            let task = build_tabular::<f64>(&GridLayout::load(&layout)?, episode_len.max(1))?;
            let n = task.mdp.num_states();
            if model.input_width() != n {
                return Err(Error::Config(format!(
                    "checkpoint expects {} states, layout has {n}",
                    model.input_width()
                )));
            }
            let mdp = task
                .mdp
                .reward_free()
                .with_initial_states((0..n).collect())?;
            let table = shortest_distances(&mdp);
            let params = TripletParams::new(k, positive_bias, negative_bias)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let walks = random_walk_episodes(&mdp, episodes, episode_len, &mut rng)?;
            let triplets: Vec<_> = walks
                .iter()
                .flat_map(|w| sample_triplets(w, &params, &mut rng))
                .collect();
            let scores = ScoreTable::new(&model)?;
            let heldout = gt_labeled_pairs(&triplets, &table, k);
            let all = all_gt_pairs(&table, k);
            let mut text = String::from("set,pairs,accuracy\n");
            for (name, pairs) in [("heldout", &heldout), ("all_pairs", &all)] {
                let acc = rnet_accuracy(&scores, pairs, threshold)?;
                text.push_str(&format!("{name},{},{acc}\n", pairs.len()));
            }
            emit(out.as_deref(), text.as_bytes())
        }
        Command::VisitMap {
            policy,
            episodes,
            seeds,
            max_steps,
            out,
        } => {
            let artifact = PolicyArtifact::load(&policy)?;
            let task = artifact.task.build::<f64>(artifact.seed)?;
            let map = visit_map(
                &task,
                &artifact.policy,
                episodes,
                max_steps.unwrap_or(artifact.max_steps),
                &seeds,
            )?;
            let files = export_heatmap(&map, &out)?;
            let line = serde_json::json!({
                "csv": files.csv,
                "pgm": files.pgm,
                "total": map.total(),
            });
            emit(None, format!("{line}\n").as_bytes())
        }
        Command::Compare {
            configs,
            overrides,
            out,
        } => {
            let mut reports = Vec::with_capacity(configs.len());
            for (i, path) in configs.iter().enumerate() {
                let mut cfg = overrides.load(path)?;
                if let Some(dir) = &overrides.output_dir {
                    cfg.output_dir = dir.join(format!("{i}_{}", cfg.name));
                }
                reports.push(run_experiment(&cfg)?);
            }
            emit(out.as_deref(), &comparison_csv(&compare_reports(&reports))?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let line = serde_json::json!({ "error": "usage", "message": e.to_string().trim() });
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
