// SPDX-License-Identifier: Apache-2.0

//! Learned cut-delay classifier: AIG encoder, graph attention, cut
//! transformer, technology encoder and training.

pub mod config;
pub mod features;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod predictor;
pub mod tape;
pub mod train;

pub use config::ModelConfig;
pub use features::{featurize_library, LIBRARY_FEATURES, NODE_CLASSES, NODE_FEATURES};
pub use gradcheck::{grad_check, grad_check_fn, GradCheckOptions, LossKind};
pub use params::{load_params, load_params_for, save_params, ModelParams};
pub use predictor::{CircuitContext, GpaPredictor};
pub use train::{evaluate, finetune, finetune_split, pretrain, pretrain_params, records_in, Adam, EpochMetrics, Evaluation, TrainMetrics};
