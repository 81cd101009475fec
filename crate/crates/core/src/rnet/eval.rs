use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::Reachability;
use crate::distance::{gt_reachability, DistanceTable};
use crate::error::{Error, Result};
use crate::mdp::{State, TabularMdp};
use crate::rnet::data::Triplet;
use crate::rnet::model::RNetModel;
use crate::scalar::Real;

/// Above this many states the score table evaluates pairs on demand.
const DENSE_LIMIT: usize = 1024;

/// Reachability scores of a frozen model over one-hot states. Embeddings are
/// computed once per state.
#[derive(Clone, Debug)]
pub struct ScoreTable<T> {
    model: RNetModel<T>,
    embeddings: Vec<Vec<T>>,
    dense: Option<Vec<T>>,
}

impl<T: Real> ScoreTable<T> {
    pub fn new(model: &RNetModel<T>) -> Result<Self> {
        let n = model.input_width();
        let embeddings = (0..n)
            .map(|s| model.embed_state(s).map(|e| e.out))
            .collect::<Result<Vec<_>>>()?;
        let dense = (n <= DENSE_LIMIT).then(|| {
            let mut scores = Vec::with_capacity(n * n);
            for a in &embeddings {
                for b in &embeddings {
                    scores.push(model.compare(a, b).prob);
                }
            }
            scores
        });
        Ok(Self {
            model: model.clone(),
            embeddings,
            dense,
        })
    }

    pub fn num_states(&self) -> usize {
        self.embeddings.len()
    }

    pub fn get(&self, from: State, to: State) -> T {
        match &self.dense {
            Some(scores) => scores[from * self.embeddings.len() + to],
            None => {
                self.model
                    .compare(&self.embeddings[from], &self.embeddings[to])
                    .prob
            }
        }
    }
}

impl<T: Real> Reachability<T> for ScoreTable<T> {
    fn score(&self, from: State, to: State) -> T {
        self.get(from, to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub from: State,
    pub to: State,
    pub label: bool,
}

/// Anchor-positive and anchor-negative pairs of `triplets`, labeled with the
/// ground-truth predicate `D_nr < k`.
pub fn gt_labeled_pairs(triplets: &[Triplet], table: &DistanceTable, k: usize) -> Vec<LabeledPair> {
    let label = |a, b| gt_reachability(table, a, b, k.saturating_sub(1));
    triplets
        .iter()
        .flat_map(|t| {
            [
                LabeledPair {
                    from: t.anchor,
                    to: t.positive,
                    label: label(t.anchor, t.positive),
                },
                LabeledPair {
                    from: t.anchor,
                    to: t.negative,
                    label: label(t.anchor, t.negative),
                },
            ]
        })
        .collect()
}

/// Every ordered state pair labeled with `D_nr < k`.
pub fn all_gt_pairs(table: &DistanceTable, k: usize) -> Vec<LabeledPair> {
    let n = table.num_states();
    (0..n)
        .flat_map(|a| {
            (0..n).map(move |b| LabeledPair {
                from: a,
                to: b,
                label: gt_reachability(table, a, b, k.saturating_sub(1)),
            })
        })
        .collect()
}

/// Fraction of pairs where `score >= threshold` agrees with the label.
pub fn rnet_accuracy<T: Real, R: Reachability<T> + ?Sized>(
    scores: &R,
    pairs: &[LabeledPair],
    threshold: T,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::arg("no labeled pairs"));
    }
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::arg(format!("threshold {threshold} outside (0, 1)")));
    }
    let hits = pairs
        .iter()
        .filter(|p| (scores.score(p.from, p.to) >= threshold) == p.label)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Uniform-random-action episodes of `len` steps from initial states of
/// `mdp`, stopping early at terminal states.
pub fn random_walk_episodes<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    episodes: usize,
    len: usize,
    rng: &mut R,
) -> Result<Vec<Vec<State>>> {
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = mdp.sample_initial(rng);
        let mut states = vec![s];
        for _ in 0..len {
            if mdp.is_terminal(s) {
                break;
            }
            let a = rng.gen_range(0..mdp.num_actions());
            s = mdp.step(s, a, rng)?.next;
            states.push(s);
        }
        out.push(states);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::shortest_distances;
    use crate::gridworld::{build_fourrooms_tabular, Cell};
    use crate::rnet::train::{rnet_train_step, Optimizer, OptimizerKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_model_gets_half_on_balanced_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = RNetModel::<f64>::new(4, 5, &mut rng).unwrap();
        let table = ScoreTable::new(&model).unwrap();
        let pairs = [
            LabeledPair {
                from: 0,
                to: 1,
                label: true,
            },
            LabeledPair {
                from: 1,
                to: 2,
                label: false,
            },
            LabeledPair {
                from: 2,
                to: 3,
                label: true,
            },
            LabeledPair {
                from: 3,
                to: 0,
                label: false,
            },
        ];
        assert_eq!(rnet_accuracy(&table, &pairs, 0.5).unwrap(), 0.5);
        assert!(rnet_accuracy(&table, &[], 0.5).is_err());
    }

    #[test]
    fn overfit_pairs_reach_full_accuracy() {
        let task = build_fourrooms_tabular::<f64>(7, Cell::new(1, 1), Cell::new(4, 4), 14).unwrap();
        let dist = shortest_distances(&task.mdp.reward_free());
        let k = 3;
        let n = task.mdp.num_states();
        let mut triplets = Vec::new();
        for a in 0..n {
            let near = (0..n).find(|&b| b != a && dist.get(a, b).is_some_and(|d| (d as usize) < k));
            let far = (0..n).find(|&b| dist.get(a, b).is_some_and(|d| d as usize >= k + 2));
            if let (Some(p), Some(q)) = (near, far) {
                triplets.push(Triplet {
                    anchor: a,
                    positive: p,
                    negative: q,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = RNetModel::new(n, 32, &mut rng).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, 0.0);
        for _ in 0..300 {
            rnet_train_step(&mut model, &triplets, &mut opt).unwrap();
        }
        let pairs = gt_labeled_pairs(&triplets, &dist, k);
        let table = ScoreTable::new(&model).unwrap();
        assert_eq!(rnet_accuracy(&table, &pairs, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn random_walks_stop_at_terminal_states() {
        let task = build_fourrooms_tabular::<f64>(7, Cell::new(1, 1), Cell::new(1, 2), 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = random_walk_episodes(&task.mdp, 50, 30, &mut rng).unwrap();
        for ep in &eps {
            assert!(ep.len() <= 31);
            if ep.len() < 31 {
                assert!(task.mdp.is_terminal(*ep.last().unwrap()));
            }
        }
    }
}
