use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities are clamped to `[EPS, 1 - EPS]`.
pub const EPS: f64 = 1e-7;
pub const CHECKPOINT_FORMAT: &str = "sprl-rnet/1";
pub const DEFAULT_HIDDEN: usize = 64;

/// Fully connected layer. Weights are stored input-major:
/// `w[i * outputs + o]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: vec![T::zero(); inputs * outputs],
            b: vec![T::zero(); outputs],
        }
    }

    fn uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs);
        for w in &mut layer.w {
            *w = T::lit(rng.gen_range(-bound..bound));
        }
        layer
    }

    /// `W^T x + b`; zero inputs are skipped so one-hot inputs cost one column.
    fn forward(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend_from_slice(&self.b);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &self.w[i * self.outputs..(i + 1) * self.outputs];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    /// Accumulates parameter gradients for upstream gradient `dy` and
    /// returns the input gradient when `want_dx` is set.
    fn backward(&self, x: &[T], dy: &[T], grad: &mut Dense<T>, want_dx: bool) -> Vec<T> {
        for (g, &d) in grad.b.iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = if want_dx {
            vec![T::zero(); self.inputs]
        } else {
            Vec::new()
        };
        for (i, &xi) in x.iter().enumerate() {
            let lo = i * self.outputs;
            if xi != T::zero() {
                for (g, &d) in grad.w[lo..lo + self.outputs].iter_mut().zip(dy) {
                    *g += xi * d;
                }
            }
            if want_dx {
                dx[i] = self.w[lo..lo + self.outputs]
                    .iter()
                    .zip(dy)
                    .map(|(&w, &d)| w * d)
                    .sum();
            }
        }
        dx
    }
}

fn relu_in_place<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

fn relu_backward<T: Real>(activated: &[T], dy: &mut [T]) {
    for (d, &a) in dy.iter_mut().zip(activated) {
        if a <= T::zero() {
            *d = T::zero();
        }
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Siamese reachability predictor.
///
/// Both inputs pass through the same two-layer ReLU branch; the comparator
/// sees the concatenated embeddings, applies two ReLU layers and a logistic
/// output unit.
#[derive(Clone, Debug, PartialEq)]
pub struct RNetModel<T> {
    input_width: usize,
    hidden: usize,
    layers: [Dense<T>; 5],
}

const LAYER_NAMES: [&str; 5] = [
    "branch.0",
    "branch.1",
    "comparator.0",
    "comparator.1",
    "output",
];

/// Activations of one branch pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Embedding<T> {
    h1: Vec<T>,
    pub out: Vec<T>,
}

/// Activations of one comparator pass.
#[derive(Clone, Debug)]
pub struct Comparison<T> {
    joined: Vec<T>,
    c1: Vec<T>,
    c2: Vec<T>,
    pub logit: T,
    /// Clamped probability.
    pub prob: T,
}

impl<T: Real> Comparison<T> {
    pub fn clamped(&self) -> bool {
        let eps = T::lit(EPS);
        let raw = sigmoid(self.logit);
        raw <= eps || raw >= T::one() - eps
    }
}

impl<T: Real> RNetModel<T> {
    /// Random hidden layers and a zero output layer, so every score starts
    /// at 0.5.
    pub fn new<R: Rng + ?Sized>(input_width: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        if input_width == 0 || hidden == 0 {
            return Err(Error::arg("input width and hidden size must be positive"));
        }
        Ok(Self {
            input_width,
            hidden,
            layers: [
                Dense::uniform(input_width, hidden, rng),
                Dense::uniform(hidden, hidden, rng),
                Dense::uniform(2 * hidden, hidden, rng),
                Dense::uniform(hidden, hidden, rng),
                Dense::zeros(hidden, 1),
            ],
        })
    }

    fn zeros(input_width: usize, hidden: usize) -> Self {
        Self {
            input_width,
            hidden,
            layers: [
                Dense::zeros(input_width, hidden),
                Dense::zeros(hidden, hidden),
                Dense::zeros(2 * hidden, hidden),
                Dense::zeros(hidden, hidden),
                Dense::zeros(hidden, 1),
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_width, self.hidden)
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters in a fixed order.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    pub fn output_layer_mut(&mut self) -> &mut Dense<T> {
        &mut self.layers[4]
    }

    pub fn embed(&self, x: &[T]) -> Result<Embedding<T>> {
        if x.len() != self.input_width {
            return Err(Error::arg(format!(
                "input width {} differs from model width {}",
                x.len(),
                self.input_width
            )));
        }
        Ok(self.embed_unchecked(x))
    }

    fn embed_unchecked(&self, x: &[T]) -> Embedding<T> {
        let mut h1 = Vec::with_capacity(self.hidden);
        self.layers[0].forward(x, &mut h1);
        relu_in_place(&mut h1);
        let mut out = Vec::with_capacity(self.hidden);
        self.layers[1].forward(&h1, &mut out);
        relu_in_place(&mut out);
        Embedding { h1, out }
    }

    /// Embedding of a one-hot state without materializing the input.
    pub fn embed_state(&self, s: usize) -> Result<Embedding<T>> {
        if s >= self.input_width {
            return Err(Error::arg(format!(
                "state {s} outside input width {}",
                self.input_width
            )));
        }
        let l0 = &self.layers[0];
        let mut h1: Vec<T> = l0.w[s * l0.outputs..(s + 1) * l0.outputs]
            .iter()
            .zip(&l0.b)
            .map(|(&w, &b)| w + b)
            .collect();
        relu_in_place(&mut h1);
        let mut out = Vec::with_capacity(self.hidden);
        self.layers[1].forward(&h1, &mut out);
        relu_in_place(&mut out);
        Ok(Embedding { h1, out })
    }

    pub fn compare(&self, a: &[T], b: &[T]) -> Comparison<T> {
        let mut joined = Vec::with_capacity(2 * self.hidden);
        joined.extend_from_slice(a);
        joined.extend_from_slice(b);
        let mut c1 = Vec::with_capacity(self.hidden);
        self.layers[2].forward(&joined, &mut c1);
        relu_in_place(&mut c1);
        let mut c2 = Vec::with_capacity(self.hidden);
        self.layers[3].forward(&c1, &mut c2);
        relu_in_place(&mut c2);
        let mut z = Vec::with_capacity(1);
        self.layers[4].forward(&c2, &mut z);
        let logit = z[0];
        let eps = T::lit(EPS);
        let prob = sigmoid(logit).max(eps).min(T::one() - eps);
        Comparison {
            joined,
            c1,
            c2,
            logit,
            prob,
        }
    }

    /// Reachability probability for the ordered pair `(a, b)`.
    pub fn forward(&self, a: &[T], b: &[T]) -> Result<T> {
        let ea = self.embed(a)?;
        let eb = self.embed(b)?;
        Ok(self.compare(&ea.out, &eb.out).prob)
    }

    /// Backpropagates `dlogit` through the comparator, returning gradients
    /// with respect to the two embeddings.
    pub fn backward_compare(
        &self,
        cmp: &Comparison<T>,
        dlogit: T,
        grad: &mut Self,
    ) -> (Vec<T>, Vec<T>) {
        let mut dc2 = self.layers[4].backward(&cmp.c2, &[dlogit], &mut grad.layers[4], true);
        relu_backward(&cmp.c2, &mut dc2);
        let mut dc1 = self.layers[3].backward(&cmp.c1, &dc2, &mut grad.layers[3], true);
        relu_backward(&cmp.c1, &mut dc1);
        let djoined = self.layers[2].backward(&cmp.joined, &dc1, &mut grad.layers[2], true);
        let (da, db) = djoined.split_at(self.hidden);
        (da.to_vec(), db.to_vec())
    }

    pub fn backward_embed(&self, x: &[T], emb: &Embedding<T>, mut dout: Vec<T>, grad: &mut Self) {
        relu_backward(&emb.out, &mut dout);
        let mut dh1 = self.layers[1].backward(&emb.h1, &dout, &mut grad.layers[1], true);
        relu_backward(&emb.h1, &mut dh1);
        self.layers[0].backward(x, &dh1, &mut grad.layers[0], false);
    }

    /// [`Self::backward_embed`] for a one-hot input at index `s`.
    pub fn backward_embed_state(
        &self,
        s: usize,
        emb: &Embedding<T>,
        mut dout: Vec<T>,
        grad: &mut Self,
    ) {
        relu_backward(&emb.out, &mut dout);
        let mut dh1 = self.layers[1].backward(&emb.h1, &dout, &mut grad.layers[1], true);
        relu_backward(&emb.h1, &mut dh1);
        let g0 = &mut grad.layers[0];
        let lo = s * g0.outputs;
        for (o, &d) in dh1.iter().enumerate() {
            g0.w[lo + o] += d;
            g0.b[o] += d;
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            input_width: self.input_width,
            hidden: self.hidden,
            tensors: self
                .layers
                .iter()
                .zip(LAYER_NAMES)
                .flat_map(|(l, name)| {
                    [
                        Tensor {
                            name: format!("{name}.weight"),
                            shape: vec![l.inputs, l.outputs],
                            data: l.w.iter().map(|x| x.as_f64()).collect(),
                        },
                        Tensor {
                            name: format!("{name}.bias"),
                            shape: vec![l.outputs],
                            data: l.b.iter().map(|x| x.as_f64()).collect(),
                        },
                    ]
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::arg(format!(
                "unsupported checkpoint format {:?}",
                ckpt.format
            )));
        }
        if ckpt.input_width == 0 || ckpt.hidden == 0 {
            return Err(Error::arg("checkpoint has an empty layer"));
        }
        let mut model = Self::zeros(ckpt.input_width, ckpt.hidden);
        for (l, name) in model.layers.iter_mut().zip(LAYER_NAMES) {
            for (suffix, shape, dst) in [
                ("weight", vec![l.inputs, l.outputs], &mut l.w),
                ("bias", vec![l.outputs], &mut l.b),
            ] {
                let full = format!("{name}.{suffix}");
                let t = ckpt
                    .tensors
                    .iter()
                    .find(|t| t.name == full)
                    .ok_or_else(|| Error::arg(format!("checkpoint is missing tensor {full}")))?;
                if t.shape != shape || t.data.len() != dst.len() {
                    return Err(Error::arg(format!(
                        "tensor {full} has shape {:?}, expected {shape:?}",
                        t.shape
                    )));
                }
                for (d, &v) in dst.iter_mut().zip(&t.data) {
                    *d = T::lit(v);
                }
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub input_width: usize,
    pub hidden: usize,
    pub tensors: Vec<Tensor>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::one_hot;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_model_scores_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = RNetModel::<f64>::new(6, 8, &mut rng).unwrap();
        for (a, b) in [(0, 1), (3, 3), (5, 2)] {
            let p = model.forward(&one_hot(6, a), &one_hot(6, b)).unwrap();
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = RNetModel::<f64>::new(6, 8, &mut rng).unwrap();
        assert!(model.forward(&[1.0; 5], &[1.0; 6]).is_err());
    }

    #[test]
    fn one_hot_embedding_matches_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = RNetModel::<f64>::new(7, 5, &mut rng).unwrap();
        for s in 0..7 {
            let dense = model.embed(&one_hot(7, s)).unwrap();
            let fast = model.embed_state(s).unwrap();
            for (x, y) in dense.out.iter().zip(&fast.out) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extreme_logits_are_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = RNetModel::<f64>::new(3, 4, &mut rng).unwrap();
        model.output_layer_mut().b[0] = 1e3;
        let cmp = model.compare(&[0.0; 4], &[0.0; 4]);
        assert_eq!(cmp.prob, 1.0 - EPS);
        assert!(cmp.clamped());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = RNetModel::<f64>::new(5, 3, &mut rng).unwrap();
        let ckpt = model.to_checkpoint();
        assert_eq!(ckpt.format, CHECKPOINT_FORMAT);
        assert_eq!(ckpt.tensors[0].name, "branch.0.weight");
        assert_eq!(ckpt.tensors[0].shape, vec![5, 3]);
        let text = serde_json::to_string(&ckpt).unwrap();
        let back =
            RNetModel::<f64>::from_checkpoint(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn checkpoint_rejects_wrong_format() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ckpt = RNetModel::<f64>::new(5, 3, &mut rng)
            .unwrap()
            .to_checkpoint();
        ckpt.format = "other/0".into();
        assert!(RNetModel::<f64>::from_checkpoint(&ckpt).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = RNetModel::<f32>::new(4, 3, &mut rng).unwrap();
        let mut p = model.params();
        p[0] = 0.25;
        model.set_params(&p).unwrap();
        assert_eq!(model.params(), p);
        assert!(model.set_params(&p[1..]).is_err());
    }
}
