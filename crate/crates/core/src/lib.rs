//! Regression trees over tensor-valued inputs.
//!
//! Trees split on single tensor entries and fit a mean, CP-structured or
//! Tucker-structured linear model in each leaf. Trees can be pruned, combined
//! into boosted or random-forest ensembles, and used for tensor responses
//! either entry by entry or through a low-rank output decomposition.
//!
//! Everything is generic over `f32`/`f64`; the `*64` / `*32` aliases below
//! name the common instantiations.

pub mod data;
pub mod decomposition;
pub mod ensemble;
pub mod error;
pub mod leaf;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod npy;
pub mod output;
pub mod rng;
pub mod scalar;
pub mod split;
pub mod tensor;
pub mod tree;

pub use data::{generate, train_test_split, Dataset, Generator, SyntheticSpec};
pub use decomposition::{cp_als, tucker_als, AlsConfig, CpDecomposition, Decomposition, TuckerDecomposition};
pub use ensemble::{
    ensemble_predict, fit_boosting, fit_boosting_traced, fit_forest, BoostedModel, BoostingConfig, EnsembleModel,
    ForestConfig, ForestModel,
};
pub use error::{Error, Result};
pub use leaf::{fit_leaf, predict_leaf, FittedLeafModel, LeafKind, LeafModelSpec};
pub use metrics::{evaluate, Metrics};
pub use model::Model;
pub use output::{
    fit_entrywise, fit_lowrank, fit_tensor_output, predict_tensor, OutputApproach, OutputConfig, OutputDecomposition,
    TensorOutputModel,
};
pub use scalar::Scalar;
pub use split::{
    find_best_split, CriterionKind, SearchStrategy, SplitCriterion, SplitEvaluation, SplitRank, SplitRule,
    StrategyKind, ValueMode,
};
pub use tensor::{DenseTensor, Matrix};
pub use tree::{apply, complexity, grow, prune, tree_predict, GrowConfig, PruneConfig, PruneQuality, TensorTree};

pub type Tensor64 = DenseTensor<f64>;
pub type Tensor32 = DenseTensor<f32>;
pub type Tree64 = TensorTree<f64>;
pub type Tree32 = TensorTree<f32>;
pub type Boosted64 = BoostedModel<f64>;
pub type Boosted32 = BoostedModel<f32>;
pub type Forest64 = ForestModel<f64>;
pub type Forest32 = ForestModel<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
