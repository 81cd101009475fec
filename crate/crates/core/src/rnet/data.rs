use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::State;

/// Ring buffer of episode state sequences with a capacity in transitions.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    steps: usize,
    episodes: VecDeque<Vec<State>>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::arg("buffer capacity must be positive"));
        }
        Ok(Self {
            capacity,
            steps: 0,
            episodes: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stored transitions.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Appends an episode, evicting the oldest ones to stay within capacity.
    /// An episode longer than the capacity keeps only its most recent part.
    pub fn push(&mut self, states: &[State]) {
        if states.len() < 2 {
            return;
        }
        let keep = states.len().min(self.capacity + 1);
        let episode = states[states.len() - keep..].to_vec();
        self.steps += episode.len() - 1;
        self.episodes.push_back(episode);
        while self.steps > self.capacity {
            let old = self
                .episodes
                .pop_front()
                .expect("buffer non-empty while over capacity");
            self.steps -= old.len() - 1;
        }
    }

    pub fn episodes(&self) -> impl Iterator<Item = &[State]> {
        self.episodes.iter().map(|e| e.as_slice())
    }
}

/// Triplet sampling parameters: positive window `k`, positive bias and
/// negative bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletParams {
    pub k: usize,
    pub positive_bias: usize,
    pub negative_bias: usize,
}

impl TripletParams {
    pub fn new(k: usize, positive_bias: usize, negative_bias: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("triplet k must be at least 1"));
        }
        if positive_bias == 0 {
            return Err(Error::arg("positive bias must be at least 1"));
        }
        Ok(Self {
            k,
            positive_bias,
            negative_bias,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: State,
    pub positive: State,
    pub negative: State,
}

/// Time indices `(anchor, positive, negative)` sampled from an episode with
/// `len` transitions. Bounds of every uniform draw are inclusive.
pub fn sample_triplet_indices<R: Rng + ?Sized>(
    len: usize,
    params: &TripletParams,
    rng: &mut R,
) -> Vec<(usize, usize, usize)> {
    let k = params.k;
    let gap = k + params.negative_bias;
    let mut out = Vec::new();
    if len <= gap {
        return out;
    }
    let mut anchor = 0;
    while anchor < len && anchor + gap <= len {
        let positive = rng.gen_range(anchor + 1..=anchor + k);
        let negative = rng.gen_range(anchor + gap..=len);
        out.push((anchor, positive, negative));
        anchor = rng.gen_range(positive + 1..=positive + params.positive_bias);
    }
    out
}

pub fn sample_triplets<R: Rng + ?Sized>(
    episode: &[State],
    params: &TripletParams,
    rng: &mut R,
) -> Vec<Triplet> {
    if episode.is_empty() {
        return Vec::new();
    }
    sample_triplet_indices(episode.len() - 1, params, rng)
        .into_iter()
        .map(|(a, p, n)| Triplet {
            anchor: episode[a],
            positive: episode[p],
            negative: episode[n],
        })
        .collect()
}
