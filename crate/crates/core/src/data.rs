//! Synthetic datasets and train/test splitting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::{cp_als, tucker_als, AlsConfig};
use crate::error::{invalid, mismatch, Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Inputs stacked along mode 0 with matching targets: shape `(n,)` for a
/// scalar response, `(n, p, ...)` for tensor responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: DenseTensor<T>,
    pub y: DenseTensor<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: DenseTensor<T>, y: DenseTensor<T>) -> Result<Self> {
        if x.n_obs() != y.n_obs() {
            return Err(mismatch(format!(
                "{} inputs but {} targets",
                x.n_obs(),
                y.n_obs()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.n_obs()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.y.ndim() == 1
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Ok(Self {
            x: self.x.select_obs(rows)?,
            y: self.y.select_obs(rows)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `(n, 5, 4)` inputs on [-1, 1]; `y = 2 X[0,1] X[2,3] + 3 X[1,0] X[2,0] X[3,0]`.
    Fig5Interaction,
    /// `(n, 4, 4, 4)` inputs on [0, 1]; piecewise constant in 5, -1, -4.
    PruneFn,
    Table2Linear,
    Table2Nonlinear,
    Table2ExactCp,
    Table2ExactTucker,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::Fig5Interaction,
        Generator::PruneFn,
        Generator::Table2Linear,
        Generator::Table2Nonlinear,
        Generator::Table2ExactCp,
        Generator::Table2ExactTucker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Fig5Interaction => "fig5_interaction",
            Generator::PruneFn => "prune_fn",
            Generator::Table2Linear => "table2_linear",
            Generator::Table2Nonlinear => "table2_nonlinear",
            Generator::Table2ExactCp => "table2_exact_cp",
            Generator::Table2ExactTucker => "table2_exact_tucker",
        }
    }

    /// Noise level used when none is given: Gaussian variance for
    /// `fig5_interaction` and `prune_fn`, uniform half-width for `table2_*`.
    pub fn default_noise(self) -> f64 {
        match self {
            Generator::Fig5Interaction => 0.0,
            Generator::PruneFn => 0.1,
            _ => 0.01,
        }
    }

    pub fn input_shape(self) -> &'static [usize] {
        match self {
            Generator::Fig5Interaction => &[5, 4],
            Generator::PruneFn => &[4, 4, 4],
            Generator::Table2Linear | Generator::Table2Nonlinear => &[3, 4],
            Generator::Table2ExactCp | Generator::Table2ExactTucker => &[12, 6],
        }
    }

    /// Output width; `None` for scalar responses.
    pub fn output_dim(self) -> Option<usize> {
        match self {
            Generator::Fig5Interaction | Generator::PruneFn => None,
            Generator::Table2Linear => Some(15),
            Generator::Table2Nonlinear => Some(6),
            Generator::Table2ExactCp | Generator::Table2ExactTucker => Some(7),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Generator::ALL.iter().map(|g| g.name()).collect();
                invalid(format!("unknown generator '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub generator: Generator,
    pub n: usize,
    /// Gaussian noise variance (`fig5_interaction`, `prune_fn`) or uniform
    /// noise half-width (`table2_*`); `None` selects the generator default.
    #[serde(default)]
    pub noise: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(generator: Generator, n: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            noise: None,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = Some(noise);
        self
    }
}

/// Noiseless `prune_fn` response for one `(4, 4, 4)` input (flat row-major).
pub fn prune_fn_value(x: &[f64]) -> f64 {
    let a = x[4]; // X[0, 1, 0]
    let b = x[2 * 16 + 2 * 4]; // X[2, 2, 0]
    if a >= 0.4 {
        5.0
    } else if b >= 0.65 {
        -1.0
    } else {
        -4.0
    }
}

/// Noiseless `fig5_interaction` response for one `(5, 4)` input.
pub fn fig5_value(x: &[f64]) -> f64 {
    let at = |i: usize, j: usize| x[i * 4 + j];
    2.0 * at(0, 1) * at(2, 3) + 3.0 * at(1, 0) * at(2, 0) * at(3, 0)
}

/// Noiseless `table2_linear` output entry `i` for one `(3, 4)` input.
pub fn table2_linear_value(x: &[f64], i: usize) -> f64 {
    let at = |a: usize, b: usize| x[a * 4 + b];
    match i % 3 {
        0 => at(0, 1) + at(1, 1),
        1 => at(1, 1) + at(2, 0),
        _ => at(2, 2) + at(0, 3),
    }
}

/// Noiseless `table2_nonlinear` output entry `i` for one `(3, 4)` input.
pub fn table2_nonlinear_value(x: &[f64], i: usize) -> f64 {
    x[(i % 3) * 4 + i % 4].sin()
}

/// Draws a dataset. Inputs come from stream `seed`, noise from the derived
/// stream `derive_seed(seed, 1)`, so changing the noise level never changes X.
pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    if spec.n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let g = spec.generator;
    let noise = spec.noise.unwrap_or_else(|| g.default_noise());
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(invalid(format!("noise must be nonnegative, got {noise}")));
    }
    let n = spec.n;
    let mut shape = vec![n];
    shape.extend_from_slice(g.input_shape());
    let mut rng = SplitMix64::new(spec.seed);
    let (lo, hi) = match g {
        Generator::Fig5Interaction => (-1.0, 1.0),
        _ => (0.0, 1.0),
    };
    let x = DenseTensor::<f64>::from_fn(shape, |_| rng.uniform_range(lo, hi))?;
    let mut noise_rng = SplitMix64::new(derive_seed(spec.seed, 1));
    let f = x.feature_len();

    let (y_shape, y): (Vec<usize>, Vec<f64>) = match g {
        Generator::Fig5Interaction | Generator::PruneFn => {
            let sd = noise.sqrt();
            let value = if g == Generator::PruneFn { prune_fn_value } else { fig5_value };
            let y = (0..n)
                .map(|i| value(x.row(i)) + sd * noise_rng.standard_normal())
                .collect();
            (vec![n], y)
        }
        _ => {
            let p = g.output_dim().unwrap_or(1);
            let tilde = match g {
                Generator::Table2ExactCp => Some(cp_als(&x, 4, &AlsConfig::default())?.decomposition.reconstruct()?),
                Generator::Table2ExactTucker => {
                    Some(tucker_als(&x, &[4.min(n), 4, 4], &AlsConfig::default())?.decomposition.reconstruct()?)
                }
                _ => None,
            };
            let mut y = Vec::with_capacity(n * p);
            for i in 0..n {
                let row = x.row(i);
                for j in 0..p {
                    let clean = match (&tilde, g) {
                        (Some(t), _) => {
                            let v = t.data()[i * f + 1];
                            v * v - row[0]
                        }
                        (None, Generator::Table2Linear) => table2_linear_value(row, j),
                        _ => table2_nonlinear_value(row, j),
                    };
                    y.push(clean + noise_rng.uniform_range(-noise, noise));
                }
            }
            (vec![n, p], y)
        }
    };
    Ok(Dataset {
        x: cast(&x)?,
        y: cast(&DenseTensor::new(y_shape, y)?)?,
    })
}

fn cast<T: Scalar>(t: &DenseTensor<f64>) -> Result<DenseTensor<T>> {
    DenseTensor::new(t.shape().to_vec(), t.data().iter().map(|&v| T::real(v)).collect())
}

/// Seeded shuffle, then the first `ceil(fraction * n)` rows train and the
/// rest test. Rows keep their original relative order within each part.
pub fn train_test_split<T: Scalar>(data: &Dataset<T>, fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let n = data.len();
    let n_train = (fraction * n as f64).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(invalid(format!(
            "fraction {fraction} of {n} rows leaves an empty part"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let (a, b) = idx.split_at(n_train);
    let (mut train, mut test) = (a.to_vec(), b.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select(&train)?, data.select(&test)?))
}
