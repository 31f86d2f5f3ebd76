//! Test helpers shared by the integration tests (and the acceptance suite,
//! which includes this file by path).

#![allow(dead_code)]

use tensor_tree::leaf::{fit_leaf, predict_leaf, LeafKind, LeafModelSpec};
use tensor_tree::rng::SplitMix64;
use tensor_tree::split::{CriterionKind, SplitCriterion, SplitRank, ValueMode};
use tensor_tree::{cp_als, tucker_als, DenseTensor};

/// Random split-search instance: `n` rows, a `d1 x d2` feature grid, and a
/// response that sometimes depends on one entry. Half the instances use a
/// coarse value grid so that ties and repeated values occur.
pub struct Instance {
    pub x: DenseTensor<f64>,
    pub y: Vec<f64>,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = SplitMix64::new(seed);
    let n = 2 + rng.below(19);
    let d1 = 1 + rng.below(3);
    let d2 = 1 + rng.below(3);
    let coarse = rng.below(2) == 0;
    let x = DenseTensor::from_fn(vec![n, d1, d2], |_| {
        let v = rng.uniform();
        if coarse {
            (v * 4.0).floor() / 4.0
        } else {
            v
        }
    })
    .unwrap();
    let j = rng.below(d1 * d2);
    let y = (0..n)
        .map(|i| {
            let base = if x.row(i)[j] > 0.5 { 2.0 } else { -1.0 };
            base + 0.3 * rng.standard_normal()
        })
        .collect();
    Instance { x, y }
}

/// Criteria exercised by the oracle tests for an instance's feature shape:
/// SSE, LAE and LRE (CP and Tucker ranks up to 2) in both value modes.
pub fn criteria(shape: &[usize], seed: u64) -> Vec<SplitCriterion> {
    let mut rng = SplitMix64::new(seed);
    let cp = SplitRank::Cp(1 + rng.below(2));
    let tucker = SplitRank::Tucker(shape.iter().map(|&d| 1 + rng.below(d.min(2))).collect());
    let mut out = Vec::new();
    for mode in [ValueMode::ObservedValues, ValueMode::MeanValue] {
        out.push(SplitCriterion::sse().with_value_mode(mode));
        for r in [cp.clone(), tucker.clone()] {
            out.push(SplitCriterion::lae(r.clone()).with_value_mode(mode));
            out.push(SplitCriterion::lre(r).with_value_mode(mode));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub coords: Vec<usize>,
    pub threshold: f64,
    pub loss: f64,
    pub left: usize,
    pub right: usize,
}

fn pop_variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64
}

fn scatter(xs: &DenseTensor<f64>) -> f64 {
    let n = xs.n_obs();
    (0..xs.feature_len())
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|i| xs.row(i)[j]).collect();
            pop_variance(&col) * n as f64
        })
        .sum()
}

fn lae_child(xs: &DenseTensor<f64>, rank: &SplitRank, crit: &SplitCriterion) -> f64 {
    let n = xs.n_obs();
    let recon = match rank {
        SplitRank::Cp(r) => {
            if n < *r {
                return scatter(xs);
            }
            cp_als(xs, *r, &crit.als).unwrap().decomposition.reconstruct().unwrap()
        }
        SplitRank::Tucker(r) => {
            let mut full = vec![n.min(r.iter().product())];
            full.extend_from_slice(r);
            tucker_als(xs, &full, &crit.als).unwrap().decomposition.reconstruct().unwrap()
        }
    };
    xs.data().iter().zip(recon.data()).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn lre_child(xs: &DenseTensor<f64>, ys: &[f64], rank: &SplitRank, crit: &SplitCriterion, leaf: &LeafModelSpec) -> f64 {
    let kind = match rank {
        SplitRank::Cp(r) => LeafKind::Cp { rank: *r },
        SplitRank::Tucker(r) => LeafKind::Tucker { ranks: r.clone() },
    };
    let spec = LeafModelSpec {
        kind,
        als: crit.als,
        intercept: leaf.intercept,
    };
    let m = fit_leaf(xs, ys, &spec).unwrap();
    let pred = predict_leaf(&m, xs).unwrap();
    ys.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Loss of splitting `x` at `x[.., j] <= t`, computed from scratch.
pub fn oracle_loss(
    x: &DenseTensor<f64>,
    y: &[f64],
    j: usize,
    t: f64,
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
) -> Option<(f64, usize, usize)> {
    let n = x.n_obs();
    let left: Vec<usize> = (0..n).filter(|&i| x.row(i)[j] <= t).collect();
    let right: Vec<usize> = (0..n).filter(|&i| x.row(i)[j] > t).collect();
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let mut loss = 0.0;
    for part in [&left, &right] {
        let ys: Vec<f64> = part.iter().map(|&i| y[i]).collect();
        loss += match crit.kind {
            CriterionKind::Sse => pop_variance(&ys),
            CriterionKind::Lae => lae_child(&x.select_obs(part).unwrap(), crit.split_rank.as_ref().unwrap(), crit),
            CriterionKind::Lre => lre_child(
                &x.select_obs(part).unwrap(),
                &ys,
                crit.split_rank.as_ref().unwrap(),
                crit,
                leaf,
            ),
        };
    }
    Some((loss, left.len(), right.len()))
}

/// Brute-force enumeration of every coordinate and candidate threshold,
/// keeping the smallest loss, then smallest coordinates, then smallest
/// threshold.
pub fn brute_force(x: &DenseTensor<f64>, y: &[f64], crit: &SplitCriterion, leaf: &LeafModelSpec) -> Option<OracleSplit> {
    let shape = x.feature_shape().to_vec();
    let n = x.n_obs();
    let mut best: Option<OracleSplit> = None;
    for j in 0..x.feature_len() {
        let col: Vec<f64> = (0..n).map(|i| x.row(i)[j]).collect();
        let thresholds = match crit.value_mode {
            ValueMode::MeanValue => vec![col.iter().sum::<f64>() / n as f64],
            ValueMode::ObservedValues => {
                let mut v = col.clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        };
        let coords = unravel(j, &shape);
        for t in thresholds {
            let Some((loss, left, right)) = oracle_loss(x, y, j, t, crit, leaf) else {
                continue;
            };
            let cand = OracleSplit {
                coords: coords.clone(),
                threshold: t,
                loss,
                left,
                right,
            };
            // Coordinates are visited in lexicographic order and thresholds
            // ascending, so only a strictly smaller loss replaces the best.
            if best.as_ref().is_none_or(|b| loss < b.loss) {
                best = Some(cand);
            }
        }
    }
    best
}

pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}
