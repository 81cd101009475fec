use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rnet::data::{sample_triplets, ReplayBuffer, Triplet, TripletParams};
use crate::rnet::model::{RNetModel, EPS};
use crate::scalar::Real;

/// `-ln(p_pos) - ln(1 - p_neg)` on clamped probabilities.
pub fn rnet_loss<T: Real>(p_pos: T, p_neg: T) -> T {
    let eps = T::lit(EPS);
    let clamp = |p: T| p.max(eps).min(T::one() - eps);
    -(clamp(p_pos).ln()) - (T::one() - clamp(p_neg)).ln()
}

/// Mean loss over `batch` and its gradient, accumulated into a fresh
/// zero-shaped model. Clamped outputs contribute no gradient.
pub fn loss_and_gradient<T: Real>(
    model: &RNetModel<T>,
    batch: &[Triplet],
) -> Result<(T, RNetModel<T>)> {
    if batch.is_empty() {
        return Err(Error::arg("empty triplet batch"));
    }
    let mut grad = model.zeros_like();
    let scale = T::one() / T::from_count(batch.len());
    let mut total = T::zero();
    for tr in batch {
        let ea = model.embed_state(tr.anchor)?;
        let ep = model.embed_state(tr.positive)?;
        let en = model.embed_state(tr.negative)?;
        let pos = model.compare(&ea.out, &ep.out);
        let neg = model.compare(&ea.out, &en.out);
        total += rnet_loss(pos.prob, neg.prob);

        let dpos = if pos.clamped() {
            T::zero()
        } else {
            (pos.prob - T::one()) * scale
        };
        let dneg = if neg.clamped() {
            T::zero()
        } else {
            neg.prob * scale
        };
        let (da1, dp) = model.backward_compare(&pos, dpos, &mut grad);
        let (da2, dn) = model.backward_compare(&neg, dneg, &mut grad);
        let da: Vec<T> = da1.iter().zip(&da2).map(|(&x, &y)| x + y).collect();
        model.backward_embed_state(tr.anchor, &ea, da, &mut grad);
        model.backward_embed_state(tr.positive, &ep, dp, &mut grad);
        model.backward_embed_state(tr.negative, &en, dn, &mut grad);
    }
    let mean = total * scale;
    if !mean.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite triplet loss {mean} on a batch of {}",
            batch.len()
        )));
    }
    Ok((mean, grad))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

/// Gradient descent with optional adaptive moments. Weight decay adds
/// `weight_decay * theta` to the gradient.
#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    step_size: T,
    weight_decay: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind, step_size: T, weight_decay: T) -> Self {
        Self {
            kind,
            step_size,
            weight_decay,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn apply(&mut self, model: &mut RNetModel<T>, grad: &RNetModel<T>) -> Result<()> {
        let mut theta = model.params();
        let g = grad.params();
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &gi) in theta.iter_mut().zip(&g) {
                    *p -= self.step_size * (gi + self.weight_decay * *p);
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
                if self.m.len() != theta.len() {
                    self.m = vec![T::zero(); theta.len()];
                    self.v = vec![T::zero(); theta.len()];
                    self.t = 0;
                }
                self.t += 1;
                let c1 = T::one() - b1.powi(self.t);
                let c2 = T::one() - b2.powi(self.t);
                for i in 0..theta.len() {
                    let gi = g[i] + self.weight_decay * theta[i];
                    self.m[i] = b1 * self.m[i] + (T::one() - b1) * gi;
                    self.v[i] = b2 * self.v[i] + (T::one() - b2) * gi * gi;
                    let mhat = self.m[i] / c1;
                    let vhat = self.v[i] / c2;
                    theta[i] -= self.step_size * mhat / (vhat.sqrt() + eps);
                }
            }
        }
        model.set_params(&theta)
    }
}

/// One update on the mean batch loss. Returns the loss before the update.
pub fn rnet_train_step<T: Real>(
    model: &mut RNetModel<T>,
    batch: &[Triplet],
    opt: &mut Optimizer<T>,
) -> Result<T> {
    let (loss, grad) = loss_and_gradient(model, batch)?;
    opt.apply(model, &grad)?;
    Ok(loss)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RNetTrainConfig {
    pub triplets: TripletParams,
    pub batch_size: usize,
    pub epochs: usize,
    pub step_size: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    pub hidden: usize,
}

impl Default for RNetTrainConfig {
    fn default() -> Self {
        Self {
            triplets: TripletParams {
                k: 5,
                positive_bias: 5,
                negative_bias: 20,
            },
            batch_size: 64,
            epochs: 4,
            step_size: 1e-3,
            weight_decay: 0.0,
            optimizer: OptimizerKind::Adam,
            hidden: crate::rnet::model::DEFAULT_HIDDEN,
        }
    }
}

/// Per-epoch mean losses of a training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub triplets: usize,
    pub epoch_losses: Vec<f64>,
}

/// Samples triplets from every buffered episode and runs `cfg.epochs`
/// shuffled passes of minibatch updates.
pub fn train_on_episodes<'a, T: Real, R: Rng + ?Sized>(
    model: &mut RNetModel<T>,
    opt: &mut Optimizer<T>,
    episodes: impl IntoIterator<Item = &'a [usize]>,
    cfg: &RNetTrainConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    if cfg.batch_size == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    let mut triplets: Vec<Triplet> = Vec::new();
    for ep in episodes {
        triplets.extend(sample_triplets(ep, &cfg.triplets, rng));
    }
    let mut report = TrainReport {
        triplets: triplets.len(),
        epoch_losses: Vec::new(),
    };
    if triplets.is_empty() {
        return Ok(report);
    }
    for _ in 0..cfg.epochs {
        triplets.shuffle(rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for batch in triplets.chunks(cfg.batch_size) {
            sum += rnet_train_step(model, batch, opt)?.as_f64();
            batches += 1;
        }
        report.epoch_losses.push(sum / batches as f64);
    }
    Ok(report)
}

pub fn train_from_buffer<T: Real, R: Rng + ?Sized>(
    model: &mut RNetModel<T>,
    opt: &mut Optimizer<T>,
    buffer: &ReplayBuffer,
    cfg: &RNetTrainConfig,
    rng: &mut R,
) -> Result<TrainReport> {
    train_on_episodes(model, opt, buffer.episodes(), cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn loss_examples() {
        assert!((rnet_loss(0.5, 0.5) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(rnet_loss(1.0 - EPS, EPS) < 1e-6);
        assert!((rnet_loss(0.9f64, 0.1) - 0.210_721_031_3).abs() < 1e-9);
        assert!(rnet_loss(0.0f64, 1.0).is_finite());
    }

    fn tiny() -> (RNetModel<f64>, Vec<Triplet>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = RNetModel::new(5, 6, &mut rng).unwrap();
        let batch = vec![
            Triplet {
                anchor: 0,
                positive: 1,
                negative: 4,
            },
            Triplet {
                anchor: 2,
                positive: 3,
                negative: 0,
            },
        ];
        (model, batch)
    }

    #[test]
    fn repeated_steps_reduce_loss() {
        let (mut model, batch) = tiny();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1, 0.0);
        let first = rnet_train_step(&mut model, &batch, &mut opt).unwrap();
        let mut last = first;
        for _ in 0..100 {
            last = rnet_train_step(&mut model, &batch, &mut opt).unwrap();
        }
        assert!(last < first * 0.5, "{first} -> {last}");
    }

    #[test]
    fn zero_step_size_leaves_parameters() {
        let (mut model, batch) = tiny();
        let before = model.clone();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.0, 0.0);
        rnet_train_step(&mut model, &batch, &mut opt).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let (mut model, _) = tiny();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1, 0.0);
        assert!(rnet_train_step(&mut model, &[], &mut opt).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (mut model, batch) = tiny();
        // Move the output layer off zero so every layer receives gradient.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in &mut model.output_layer_mut().w {
            *w = rng.gen_range(-1.0..1.0);
        }
        let (_, grad) = loss_and_gradient(&model, &batch).unwrap();
        let g = grad.params();
        let theta = model.params();
        let h = 1e-6;
        for i in (0..theta.len()).step_by(7) {
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let mut m = model.clone();
            m.set_params(&plus).unwrap();
            let lp = loss_and_gradient(&m, &batch).unwrap().0;
            m.set_params(&minus).unwrap();
            let lm = loss_and_gradient(&m, &batch).unwrap().0;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-4 * fd.abs().max(g[i].abs()).max(1e-3),
                "param {i}: fd {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn adam_training_is_deterministic() {
        let (model, batch) = tiny();
        let run = || {
            let mut m = model.clone();
            let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, 0.03);
            for _ in 0..10 {
                rnet_train_step(&mut m, &batch, &mut opt).unwrap();
            }
            m
        };
        assert_eq!(run(), run());
    }
}
