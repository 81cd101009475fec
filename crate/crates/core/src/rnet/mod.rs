//! Reachability network: a siamese predictor of `D_nr(s, s') < k` trained
//! from temporal triplets.

pub mod data;
pub mod eval;
pub mod model;
pub mod train;

pub use data::{sample_triplet_indices, sample_triplets, ReplayBuffer, Triplet, TripletParams};
pub use eval::{
    all_gt_pairs, gt_labeled_pairs, random_walk_episodes, rnet_accuracy, LabeledPair, ScoreTable,
};
pub use model::{Checkpoint, RNetModel, CHECKPOINT_FORMAT, DEFAULT_HIDDEN, EPS};
pub use train::{
    loss_and_gradient, rnet_loss, rnet_train_step, train_from_buffer, train_on_episodes, Optimizer,
    OptimizerKind, RNetTrainConfig, TrainReport,
};
