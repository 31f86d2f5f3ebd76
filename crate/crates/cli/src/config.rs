//! Flat JSON run configuration and its translation into library configs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tensor_tree::decomposition::AlsConfig;
use tensor_tree::leaf::{LeafKind, LeafModelSpec};
use tensor_tree::split::{CriterionKind, SearchStrategy, SplitCriterion, SplitRank, StrategyKind, ValueMode};
use tensor_tree::tree::{GrowConfig, PruneConfig, PruneQuality};
use tensor_tree::{BoostingConfig, ForestConfig, OutputConfig, OutputDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Boosting,
    Forest,
    Entrywise,
    Lowrank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafName {
    Mean,
    Cp,
    Tucker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueModeName {
    Observed,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputDecompName {
    Cp,
    Tucker,
}

/// An integer rank or one rank per mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankValue {
    One(usize),
    PerMode(Vec<usize>),
}

fn d_model() -> ModelKind {
    ModelKind::Tree
}
fn d_depth() -> usize {
    3
}
fn d_msl() -> usize {
    5
}
fn d_criterion() -> CriterionKind {
    CriterionKind::Sse
}
fn d_value_mode() -> ValueModeName {
    ValueModeName::Observed
}
fn d_strategy() -> StrategyKind {
    StrategyKind::Exhaustive
}
fn d_tau() -> f64 {
    1.0
}
fn d_leaf() -> LeafName {
    LeafName::Mean
}
fn d_true() -> bool {
    true
}
fn d_als_iter() -> usize {
    AlsConfig::default().max_iterations
}
fn d_als_tol() -> f64 {
    AlsConfig::default().rel_tolerance
}
fn d_estimators() -> usize {
    10
}
fn d_lr() -> f64 {
    0.1
}
fn d_trees() -> usize {
    100
}
fn d_forest_tau() -> f64 {
    1.0 / 3.0
}
fn d_output_decomp() -> OutputDecompName {
    OutputDecompName::Cp
}

/// Every field has a default, so `{}` plus data paths is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_model")]
    pub model: ModelKind,
    /// Training inputs, NPY; relative paths resolve against the config file.
    #[serde(default)]
    pub x: Option<PathBuf>,
    #[serde(default)]
    pub y: Option<PathBuf>,

    #[serde(default = "d_depth")]
    pub max_depth: usize,
    #[serde(default = "d_msl")]
    pub min_samples_leaf: usize,
    #[serde(default = "d_criterion")]
    pub criterion: CriterionKind,
    #[serde(default)]
    pub split_rank: Option<RankValue>,
    #[serde(default = "d_value_mode")]
    pub value_mode: ValueModeName,
    #[serde(default = "d_strategy")]
    pub strategy: StrategyKind,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default)]
    pub xi: usize,

    #[serde(default = "d_leaf")]
    pub leaf: LeafName,
    #[serde(default, rename = "CP_reg_rank")]
    pub cp_reg_rank: Option<usize>,
    #[serde(default, rename = "Tucker_reg_rank")]
    pub tucker_reg_rank: Option<Vec<usize>>,
    #[serde(default = "d_true")]
    pub intercept: bool,
    #[serde(default = "d_als_iter")]
    pub als_max_iterations: usize,
    #[serde(default = "d_als_tol")]
    pub als_tolerance: f64,

    /// Pruning is applied when `alpha` is set.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub prune_quality: PruneQuality,
    #[serde(default)]
    pub prune_normalized: bool,

    #[serde(default = "d_estimators")]
    pub n_estimators: usize,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub p_resample: f64,

    #[serde(default = "d_trees")]
    pub n_trees: usize,
    #[serde(default = "d_true")]
    pub bootstrap: bool,
    #[serde(default = "d_forest_tau")]
    pub forest_tau: f64,

    #[serde(default = "d_output_decomp")]
    pub output_decomposition: OutputDecompName,
    #[serde(default)]
    pub output_rank: Option<RankValue>,

    #[serde(default)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.x, &mut cfg.y].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn als(&self) -> AlsConfig {
        AlsConfig {
            max_iterations: self.als_max_iterations,
            rel_tolerance: self.als_tolerance,
            seed: self.seed,
        }
    }

    pub fn grow(&self) -> anyhow::Result<GrowConfig> {
        let split_rank = self.split_rank.clone().map(|r| match r {
            RankValue::One(r) => SplitRank::Cp(r),
            RankValue::PerMode(v) => SplitRank::Tucker(v),
        });
        let value_mode = match self.value_mode {
            ValueModeName::Observed => ValueMode::ObservedValues,
            ValueModeName::Mean => ValueMode::MeanValue,
        };
        let criterion = SplitCriterion {
            kind: self.criterion,
            split_rank,
            value_mode,
            als: self.als(),
        };
        let strategy = SearchStrategy {
            kind: self.strategy,
            tau: self.tau,
            xi: self.xi,
            seed: self.seed,
        };
        let kind = match self.leaf {
            LeafName::Mean => LeafKind::Mean,
            LeafName::Cp => LeafKind::Cp {
                rank: self.cp_reg_rank.context("leaf \"cp\" needs CP_reg_rank")?,
            },
            LeafName::Tucker => LeafKind::Tucker {
                ranks: self
                    .tucker_reg_rank
                    .clone()
                    .context("leaf \"tucker\" needs Tucker_reg_rank")?,
            },
        };
        let g = GrowConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            criterion,
            strategy,
            leaf: LeafModelSpec {
                kind,
                als: self.als(),
                intercept: self.intercept,
            },
        };
        g.validate()?;
        Ok(g)
    }

    pub fn prune(&self) -> anyhow::Result<Option<PruneConfig>> {
        let Some(alpha) = self.alpha else {
            return Ok(None);
        };
        let p = PruneConfig {
            alpha,
            quality: self.prune_quality,
            normalized: self.prune_normalized,
        };
        p.validate()?;
        Ok(Some(p))
    }

    pub fn boosting(&self) -> anyhow::Result<BoostingConfig> {
        let b = BoostingConfig {
            n_estimators: self.n_estimators,
            learning_rate: self.learning_rate,
            p_resample: self.p_resample,
            tree: self.grow()?,
            prune: self.prune()?,
            seed: self.seed,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn forest(&self) -> anyhow::Result<ForestConfig> {
        let f = ForestConfig {
            n_trees: self.n_trees,
            bootstrap: self.bootstrap,
            tree: self.grow()?,
            tau: self.forest_tau,
            seed: self.seed,
        };
        f.validate()?;
        Ok(f)
    }

    /// Output settings; a Tucker `output_rank` given as one integer is
    /// applied to every one of `output_modes` modes (observation mode included).
    pub fn output(&self, output_modes: usize) -> anyhow::Result<OutputConfig> {
        let boosting = self.boosting()?;
        let mut cfg = match self.model {
            ModelKind::Entrywise => OutputConfig::entrywise(boosting),
            ModelKind::Lowrank => {
                let rank = self.output_rank.clone().context("model \"lowrank\" needs output_rank")?;
                let d = match (self.output_decomposition, rank) {
                    (OutputDecompName::Cp, RankValue::One(rank)) => OutputDecomposition::Cp { rank },
                    (OutputDecompName::Cp, RankValue::PerMode(_)) => bail!("CP output_rank must be one integer"),
                    (OutputDecompName::Tucker, RankValue::One(r)) => OutputDecomposition::tucker_uniform(r, output_modes),
                    (OutputDecompName::Tucker, RankValue::PerMode(ranks)) => OutputDecomposition::Tucker { ranks },
                };
                OutputConfig::lowrank(d, boosting)
            }
            other => bail!("model {other:?} does not produce tensor outputs"),
        };
        cfg.als = self.als();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field without touching data.
    pub fn validate(&self) -> anyhow::Result<()> {
        match self.model {
            ModelKind::Tree => {
                self.grow()?;
                self.prune()?;
            }
            ModelKind::Boosting => {
                self.boosting()?;
            }
            ModelKind::Forest => {
                self.forest()?;
            }
            ModelKind::Entrywise | ModelKind::Lowrank => {
                self.output(2)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_names() {
        let c = RunConfig::default();
        assert_eq!((c.model, c.max_depth, c.n_estimators), (ModelKind::Tree, 3, 10));
        c.validate().unwrap();
        let c: RunConfig = serde_json::from_str(
            r#"{"model":"boosting","leaf":"cp","CP_reg_rank":2,"criterion":"lae","split_rank":[2,2],"alpha":0.01}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.grow().unwrap().leaf, LeafModelSpec::cp(2));
        assert!(serde_json::from_str::<RunConfig>(r#"{"max_dept":3}"#).is_err());
    }

    #[test]
    fn invalid_combinations() {
        let bad: RunConfig = serde_json::from_str(r#"{"leaf":"cp"}"#).unwrap();
        assert!(bad.validate().is_err());
        let bad: RunConfig = serde_json::from_str(r#"{"criterion":"lre"}"#).unwrap();
        assert!(bad.validate().is_err());
        let bad: RunConfig = serde_json::from_str(r#"{"model":"lowrank"}"#).unwrap();
        assert!(bad.validate().is_err());
        let ok: RunConfig = serde_json::from_str(r#"{"model":"lowrank","output_rank":3}"#).unwrap();
        ok.validate().unwrap();
    }
}
