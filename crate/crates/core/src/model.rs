//! Versioned JSON envelope for every fitted model kind.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{BoostedModel, ForestModel};
use crate::error::{invalid, Result};
use crate::output::{predict_tensor, TensorOutputModel};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::tree::{tree_predict, TensorTree};

pub const FORMAT: &str = "tensor-tree-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum Model<T> {
    Tree(TensorTree<T>),
    Boosted(BoostedModel<T>),
    Forest(ForestModel<T>),
    TensorOutput(TensorOutputModel<T>),
}

impl<T: Scalar> Model<T> {
    /// `(n,)` for scalar models, `(n,) + output_shape` for tensor outputs.
    pub fn predict(&self, x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        let scalar = match self {
            Model::Tree(t) => tree_predict(t, x)?,
            Model::Boosted(m) => m.predict(x)?,
            Model::Forest(m) => m.predict(x)?,
            Model::TensorOutput(m) => return predict_tensor(m, x),
        };
        DenseTensor::new(vec![x.n_obs()], scalar)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_str(s)?;
        if file.format != FORMAT {
            return Err(invalid(format!("not a model file (format '{}')", file.format)));
        }
        if file.version != VERSION {
            return Err(invalid(format!("unsupported model version {}", file.version)));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct ModelFile<T> {
    format: String,
    version: u32,
    model: Model<T>,
}

impl<T> From<TensorTree<T>> for Model<T> {
    fn from(m: TensorTree<T>) -> Self {
        Model::Tree(m)
    }
}

impl<T> From<BoostedModel<T>> for Model<T> {
    fn from(m: BoostedModel<T>) -> Self {
        Model::Boosted(m)
    }
}

impl<T> From<ForestModel<T>> for Model<T> {
    fn from(m: ForestModel<T>) -> Self {
        Model::Forest(m)
    }
}

impl<T> From<TensorOutputModel<T>> for Model<T> {
    fn from(m: TensorOutputModel<T>) -> Self {
        Model::TensorOutput(m)
    }
}
