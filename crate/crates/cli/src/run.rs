//! Shared fitting and scoring used by `fit` and `bench`.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use tensor_tree::metrics::{evaluate, mse};
use tensor_tree::npy::load_npy;
use tensor_tree::{fit_boosting, fit_forest, fit_tensor_output, grow, prune, DenseTensor, Error, Model64, Tensor64};

use crate::config::{ModelKind, RunConfig};

/// Command failure tagged with its exit code class.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(anyhow::Error),
    /// Unreadable, malformed or mismatched data: exit 3.
    Data(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) => write!(f, "{e:#}"),
        }
    }
}

pub fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

pub fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

/// Library errors: invalid arguments are configuration problems, everything
/// else concerns the data.
pub fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidArgument(_) => Failure::Usage(e.into()),
        _ => Failure::Data(e.into()),
    }
}

pub fn load_tensor(path: &Path) -> Result<Tensor64, Failure> {
    load_npy(path).map_err(|e| data(anyhow::Error::new(e).context(format!("cannot load {}", path.display()))))
}

/// `y` as a scalar response vector: shape `(n,)` or `(n, 1)`.
fn scalar_targets(y: &Tensor64) -> Result<&[f64], Failure> {
    match y.shape() {
        [_] | [_, 1] => Ok(y.data()),
        s => Err(data(anyhow::anyhow!(
            "scalar models need y of shape (n,) or (n, 1), got {s:?}; use model \"entrywise\" or \"lowrank\""
        ))),
    }
}

pub fn fit_model(cfg: &RunConfig, x: &Tensor64, y: &Tensor64) -> Result<Model64, Failure> {
    if x.ndim() < 2 {
        return Err(data(anyhow::anyhow!("X needs an observation mode and at least one feature mode")));
    }
    if x.n_obs() != y.n_obs() {
        return Err(data(anyhow::anyhow!(
            "X has {} observations but y has {}",
            x.n_obs(),
            y.n_obs()
        )));
    }
    let model = match cfg.model {
        ModelKind::Tree => {
            let t = grow(x, scalar_targets(y)?, &cfg.grow().map_err(usage)?).map_err(classify)?;
            match cfg.prune().map_err(usage)? {
                Some(p) => prune(&t, &p).map_err(classify)?,
                None => t,
            }
            .into()
        }
        ModelKind::Boosting => fit_boosting(x, scalar_targets(y)?, &cfg.boosting().map_err(usage)?)
            .map_err(classify)?
            .into(),
        ModelKind::Forest => fit_forest(x, scalar_targets(y)?, &cfg.forest().map_err(usage)?)
            .map_err(classify)?
            .into(),
        ModelKind::Entrywise | ModelKind::Lowrank => {
            if y.ndim() < 2 {
                return Err(data(anyhow::anyhow!(
                    "tensor-output models need Y with at least two modes, got {:?}",
                    y.shape()
                )));
            }
            fit_tensor_output(x, y, &cfg.output(y.ndim()).map_err(usage)?)
                .map_err(classify)?
                .into()
        }
    };
    Ok(model)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scores {
    pub mse: f64,
    pub rmse: f64,
    /// `None` when the target is all zeros.
    pub rpe: Option<f64>,
}

pub fn score(y: &DenseTensor<f64>, pred: &DenseTensor<f64>) -> Result<Scores, Failure> {
    if y.len() != pred.len() || y.n_obs() != pred.n_obs() {
        return Err(data(anyhow::anyhow!(
            "targets have shape {:?} but predictions have shape {:?}",
            y.shape(),
            pred.shape()
        )));
    }
    match evaluate(y.data(), pred.data()) {
        Ok(m) => Ok(Scores {
            mse: m.mse,
            rmse: m.rmse,
            rpe: Some(m.rpe),
        }),
        Err(Error::ZeroNormTarget) => {
            let m = mse(y.data(), pred.data()).map_err(classify)?;
            Ok(Scores {
                mse: m,
                rmse: m.sqrt(),
                rpe: None,
            })
        }
        Err(e) => Err(classify(e)),
    }
}

pub fn model_name(m: &Model64) -> &'static str {
    match m {
        Model64::Tree(_) => "tree",
        Model64::Boosted(_) => "boosting",
        Model64::Forest(_) => "forest",
        Model64::TensorOutput(tensor_tree::TensorOutputModel::Entrywise { .. }) => "entrywise",
        Model64::TensorOutput(tensor_tree::TensorOutputModel::LowRank { .. }) => "lowrank",
    }
}
