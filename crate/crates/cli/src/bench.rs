//! Parameter sweeps: the Cartesian product of the `sweep` lists, each cell
//! fit on a training split and scored on the held-out rows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::Deserialize;
use serde_json::{Map, Value};
use tensor_tree::data::{generate, train_test_split, Dataset, Generator, SyntheticSpec};

use crate::config::RunConfig;
use crate::run::{classify, data, fit_model, load_tensor, model_name, score, usage, Failure, Scores};

fn d_fraction() -> f64 {
    0.75
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSpec {
    #[serde(default)]
    generator: Option<Generator>,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    noise: Option<f64>,
    #[serde(default)]
    x: Option<PathBuf>,
    #[serde(default)]
    y: Option<PathBuf>,
    /// Seed of the generator and of the train/test shuffle.
    #[serde(default)]
    seed: u64,
    #[serde(default = "d_fraction")]
    train_fraction: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    #[serde(default)]
    base: Map<String, Value>,
    data: DataSpec,
    /// Run-config field name (or `n`, the synthetic dataset size) to the
    /// values it takes.
    #[serde(default)]
    sweep: BTreeMap<String, Vec<Value>>,
}

fn cells(sweep: &BTreeMap<String, Vec<Value>>) -> Vec<Vec<(String, Value)>> {
    let mut out = vec![Vec::new()];
    for (key, values) in sweep {
        out = out
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = cell.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    out
}

fn load_data(spec: &DataSpec, n: Option<usize>, base_dir: &Path) -> Result<Dataset<f64>, Failure> {
    match (&spec.generator, &spec.x, &spec.y) {
        (Some(g), None, None) => {
            let n = n.or(spec.n).context("synthetic data needs \"n\"").map_err(usage)?;
            let s = SyntheticSpec {
                generator: *g,
                n,
                noise: spec.noise,
                seed: spec.seed,
            };
            generate(&s).map_err(classify)
        }
        (None, Some(x), Some(y)) => {
            if n.is_some() {
                return Err(usage(anyhow::anyhow!("\"n\" can only be swept for synthetic data")));
            }
            let x = load_tensor(&base_dir.join(x))?;
            let y = load_tensor(&base_dir.join(y))?;
            Dataset::new(x, y).map_err(|e| data(e))
        }
        _ => Err(usage(anyhow::anyhow!(
            "data needs either \"generator\" or both \"x\" and \"y\""
        ))),
    }
}

fn cell_config(base: &Map<String, Value>, cell: &[(String, Value)], seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut obj = base.clone();
    if let Some(s) = seed {
        obj.insert("seed".into(), Value::from(s));
    }
    for (k, v) in cell {
        if k != "n" {
            obj.insert(k.clone(), v.clone());
        }
    }
    if obj.contains_key("x") || obj.contains_key("y") {
        bail!("data paths belong in \"data\", not in the run config");
    }
    let cfg: RunConfig = serde_json::from_value(Value::Object(obj)).context("invalid sweep cell")?;
    cfg.validate()?;
    Ok(cfg)
}

/// Strings bare, everything else as JSON.
fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn push_scores(row: &mut Vec<String>, s: &Scores) {
    row.push(s.mse.to_string());
    row.push(s.rmse.to_string());
    row.push(s.rpe.map(|v| v.to_string()).unwrap_or_default());
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read sweep config {}", config.display()))
        .map_err(usage)?;
    let file: SweepFile = serde_json::from_str(&text)
        .with_context(|| format!("invalid sweep config {}", config.display()))
        .map_err(usage)?;
    if !(file.data.train_fraction > 0.0 && file.data.train_fraction < 1.0) {
        return Err(usage(anyhow::anyhow!("train_fraction must lie in (0, 1)")));
    }
    let grid = cells(&file.sweep);
    // Validate every cell before any fitting.
    let configs: Vec<RunConfig> = grid
        .iter()
        .map(|c| cell_config(&file.base, c, seed))
        .collect::<anyhow::Result<_>>()
        .map_err(usage)?;
    let base_dir = config.parent().unwrap_or(Path::new(""));

    let mut w = csv::Writer::from_path(out)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(data)?;
    let mut header: Vec<String> = file.sweep.keys().cloned().collect();
    header.extend(
        [
            "model",
            "n_train",
            "n_test",
            "train_mse",
            "train_rmse",
            "train_rpe",
            "test_mse",
            "test_rmse",
            "test_rpe",
            "fit_seconds",
            "predict_seconds",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(data)?;

    for (cell, cfg) in grid.iter().zip(&configs) {
        let n = cell
            .iter()
            .find(|(k, _)| k == "n")
            .map(|(_, v)| v.as_u64().map(|n| n as usize).context("\"n\" values must be integers"))
            .transpose()
            .map_err(usage)?;
        let all = load_data(&file.data, n, base_dir)?;
        let (train, test) = train_test_split(&all, file.data.train_fraction, file.data.seed).map_err(classify)?;

        let t0 = Instant::now();
        let model = fit_model(cfg, &train.x, &train.y)?;
        let fit_seconds = t0.elapsed().as_secs_f64();
        let train_pred = model.predict(&train.x).map_err(classify)?;
        let t1 = Instant::now();
        let test_pred = model.predict(&test.x).map_err(classify)?;
        let predict_seconds = t1.elapsed().as_secs_f64();

        let mut row: Vec<String> = cell.iter().map(|(_, v)| cell_text(v)).collect();
        row.push(model_name(&model).to_string());
        row.push(train.len().to_string());
        row.push(test.len().to_string());
        push_scores(&mut row, &score(&train.y, &train_pred)?);
        push_scores(&mut row, &score(&test.y, &test_pred)?);
        row.push(fit_seconds.to_string());
        row.push(predict_seconds.to_string());
        w.write_record(&row).map_err(data)?;
    }
    w.flush().map_err(data)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian() {
        let mut s = BTreeMap::new();
        s.insert("max_depth".to_string(), vec![Value::from(1), Value::from(2)]);
        s.insert("criterion".to_string(), vec![Value::from("sse"), Value::from("lae")]);
        let g = cells(&s);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0][0].0, "criterion");
        assert!(cells(&BTreeMap::new()).len() == 1);
        assert_eq!(cell_text(&Value::from("cp")), "cp");
        assert_eq!(cell_text(&serde_json::json!([2, 2])), "[2,2]");
    }
}
