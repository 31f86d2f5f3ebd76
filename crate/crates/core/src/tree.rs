//! Single tensor tree: recursive partitioning, cost-complexity pruning and
//! prediction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::leaf::{fit_leaf, predict_leaf, FittedLeafModel, LeafModelSpec};
use crate::rng::derive_seed;
use crate::scalar::{count, sum_sq_dev, variance, Scalar};
use crate::split::{CriterionKind, SearchStrategy, SplitCriterion, SplitProblem, SplitRule};
use crate::tensor::DenseTensor;

/// Minimum decrease of the node criterion for a split to be kept.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowConfig {
    pub max_depth: usize,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    pub criterion: SplitCriterion,
    #[serde(default)]
    pub strategy: SearchStrategy,
    pub leaf: LeafModelSpec,
}

fn default_min_samples_leaf() -> usize {
    5
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            min_samples_leaf: default_min_samples_leaf(),
            criterion: SplitCriterion::sse(),
            strategy: SearchStrategy::exhaustive(),
            leaf: LeafModelSpec::mean(),
        }
    }
}

impl GrowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(invalid("min_samples_leaf must be at least 1"));
        }
        self.criterion.validate()?;
        self.strategy.validate()?;
        self.leaf.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneQuality {
    /// In-leaf response variance.
    #[default]
    Variance,
    /// Mean squared training residual of the leaf model.
    TensorLoss,
    /// Low-rank approximation error of the leaf inputs divided by the leaf
    /// size; available for trees grown with the LAE criterion.
    ApproximationError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub alpha: f64,
    #[serde(default)]
    pub quality: PruneQuality,
    /// Weight each leaf by its share `N_m / N` of the root samples instead
    /// of the raw count `N_m`, which makes `alpha` independent of `N`.
    #[serde(default)]
    pub normalized: bool,
}

impl PruneConfig {
    pub fn new(alpha: f64, quality: PruneQuality) -> Self {
        Self {
            alpha,
            quality,
            normalized: false,
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalized = true;
        self
    }

    fn leaf_weight<T: Scalar>(&self, l: &LeafNode<T>, n_root: usize) -> Result<T> {
        let w = l.weighted_quality(self.quality)?;
        Ok(if self.normalized { w / count(n_root) } else { w })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be a nonnegative number, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LeafNode<T> {
    pub model: FittedLeafModel<T>,
    pub n: usize,
    /// Population variance of the responses in the region.
    pub variance: T,
    pub residual_mse: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx_error: Option<T>,
}

impl<T: Scalar> LeafNode<T> {
    fn quality(&self, q: PruneQuality) -> Result<T> {
        match q {
            PruneQuality::Variance => Ok(self.variance),
            PruneQuality::TensorLoss => Ok(self.residual_mse),
            PruneQuality::ApproximationError => self
                .approx_error
                .map(|e| e / count(self.n))
                .ok_or_else(|| invalid("approximation-error pruning needs a tree grown with the LAE criterion")),
        }
    }

    /// `N_m Q_m`.
    fn weighted_quality(&self, q: PruneQuality) -> Result<T> {
        Ok(count::<T>(self.n) * self.quality(q)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum Node<T> {
    Leaf(LeafNode<T>),
    Split {
        rule: SplitRule<T>,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
        /// Leaf fitted on all of this node's samples; used when pruning
        /// collapses the subtree.
        collapsed: LeafNode<T>,
    },
}

impl<T: Scalar> Node<T> {
    fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LeafNode<T>>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TensorTree<T> {
    pub feature_shape: Vec<usize>,
    pub root: Node<T>,
}

impl<T: Scalar> TensorTree<T> {
    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Training samples that reached the root.
    pub fn n_samples(&self) -> usize {
        match &self.root {
            Node::Leaf(l) => l.n,
            Node::Split { collapsed, .. } => collapsed.n,
        }
    }

    /// Leaves in depth-first (left before right) order; index = leaf id.
    pub fn leaves(&self) -> Vec<&LeafNode<T>> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn predict(&self, x: &DenseTensor<T>) -> Result<Vec<T>> {
        tree_predict(self, x)
    }
}

/// Growth of one node's subtree; `root_strategy` overrides the search at depth 0.
struct Grower<'a, T> {
    x: &'a DenseTensor<T>,
    y: &'a [T],
    cfg: &'a GrowConfig,
    root_strategy: Option<SearchStrategy>,
}

impl<'a, T: Scalar> Grower<'a, T> {
    fn leaf(&self, xs: &DenseTensor<T>, ys: &[T]) -> Result<LeafNode<T>> {
        let model = fit_leaf(xs, ys, &self.cfg.leaf)?;
        let approx_error = match self.cfg.criterion.kind {
            CriterionKind::Lae => {
                let all: Vec<T> = ys.to_vec();
                let p = SplitProblem::new(xs, &all, &self.cfg.criterion, &self.cfg.leaf, 1)?;
                Some(p.unsplit_loss()?)
            }
            _ => None,
        };
        Ok(LeafNode {
            n: ys.len(),
            variance: variance(ys),
            residual_mse: model.train_mse(),
            approx_error,
            model,
        })
    }

    fn node(&self, idx: &[usize], depth: usize, seed: u64) -> Result<Node<T>> {
        let xs = self.x.select_obs(idx)?;
        let ys: Vec<T> = idx.iter().map(|&i| self.y[i]).collect();
        let here = self.leaf(&xs, &ys)?;
        let msl = self.cfg.min_samples_leaf;
        if depth >= self.cfg.max_depth || idx.len() < 2 * msl {
            return Ok(Node::Leaf(here));
        }
        let mut strat = match (depth, self.root_strategy) {
            (0, Some(s)) => s,
            _ => self.cfg.strategy,
        };
        strat.seed = seed;
        let problem = SplitProblem::new(&xs, &ys, &self.cfg.criterion, &self.cfg.leaf, msl)?;
        let Some(best) = problem.search(&strat)? else {
            return Ok(Node::Leaf(here));
        };
        let flat = crate::split::flat_index(&best.rule.coords, xs.feature_shape());
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (local, &global) in idx.iter().enumerate() {
            if xs.row(local)[flat] <= best.rule.threshold {
                left.push(global);
            } else {
                right.push(global);
            }
        }
        let gain = match self.cfg.criterion.kind {
            CriterionKind::Sse => {
                let l: Vec<T> = left.iter().map(|&i| self.y[i]).collect();
                let r: Vec<T> = right.iter().map(|&i| self.y[i]).collect();
                sum_sq_dev(&ys) - sum_sq_dev(&l) - sum_sq_dev(&r)
            }
            _ => problem.unsplit_loss()? - best.loss,
        };
        if !(gain > T::real(MIN_GAIN)) {
            return Ok(Node::Leaf(here));
        }
        let (l, r) = rayon::join(
            || self.node(&left, depth + 1, derive_seed(seed, 1)),
            || self.node(&right, depth + 1, derive_seed(seed, 2)),
        );
        Ok(Node::Split {
            rule: best.rule,
            left: Box::new(l?),
            right: Box::new(r?),
            collapsed: here,
        })
    }
}

fn check_data<T: Scalar>(x: &DenseTensor<T>, y: &[T]) -> Result<()> {
    if y.is_empty() {
        return Err(invalid("cannot grow a tree on zero samples"));
    }
    if x.n_obs() != y.len() {
        return Err(mismatch(format!(
            "{} observations but {} responses",
            x.n_obs(),
            y.len()
        )));
    }
    if x.ndim() < 2 {
        return Err(invalid("inputs need an observation mode and at least one feature mode"));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("training data contain non-finite values"));
    }
    Ok(())
}

pub fn grow<T: Scalar>(x: &DenseTensor<T>, y: &[T], cfg: &GrowConfig) -> Result<TensorTree<T>> {
    grow_with_root(x, y, cfg, None)
}

pub(crate) fn grow_with_root<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    cfg: &GrowConfig,
    root_strategy: Option<SearchStrategy>,
) -> Result<TensorTree<T>> {
    cfg.validate()?;
    check_data(x, y)?;
    let grower = Grower {
        x,
        y,
        cfg,
        root_strategy,
    };
    let all: Vec<usize> = (0..y.len()).collect();
    let seed = root_strategy.map_or(cfg.strategy.seed, |s| s.seed);
    Ok(TensorTree {
        feature_shape: x.feature_shape().to_vec(),
        root: grower.node(&all, 0, seed)?,
    })
}

/// `sum_m N_m Q_m + alpha * (number of leaves)`, with `N_m / N` in place of
/// `N_m` when the config is normalized.
pub fn complexity<T: Scalar>(t: &TensorTree<T>, p: &PruneConfig) -> Result<T> {
    p.validate()?;
    let leaves = t.leaves();
    let n_root = t.n_samples();
    let mut total = T::zero();
    for l in &leaves {
        total += p.leaf_weight(l, n_root)?;
    }
    Ok(total + T::real(p.alpha) * count(leaves.len()))
}

/// Bottom-up pruning: a subtree is replaced by its collapsed leaf whenever
/// the leaf's cost `N Q + alpha` does not exceed the subtree's cost.
pub fn prune<T: Scalar>(t: &TensorTree<T>, p: &PruneConfig) -> Result<TensorTree<T>> {
    p.validate()?;
    let (root, _) = prune_node(&t.root, p, t.n_samples())?;
    Ok(TensorTree {
        feature_shape: t.feature_shape.clone(),
        root,
    })
}

fn prune_node<T: Scalar>(node: &Node<T>, p: &PruneConfig, n_root: usize) -> Result<(Node<T>, T)> {
    let alpha = T::real(p.alpha);
    match node {
        Node::Leaf(l) => Ok((node.clone(), p.leaf_weight(l, n_root)? + alpha)),
        Node::Split {
            rule,
            left,
            right,
            collapsed,
        } => {
            let (l, cl) = prune_node(left, p, n_root)?;
            let (r, cr) = prune_node(right, p, n_root)?;
            let subtree = cl + cr;
            let single = p.leaf_weight(collapsed, n_root)? + alpha;
            if single <= subtree {
                Ok((Node::Leaf(collapsed.clone()), single))
            } else {
                Ok((
                    Node::Split {
                        rule: rule.clone(),
                        left: Box::new(l),
                        right: Box::new(r),
                        collapsed: collapsed.clone(),
                    },
                    subtree,
                ))
            }
        }
    }
}

fn check_shape<T: Scalar>(t: &TensorTree<T>, x: &DenseTensor<T>) -> Result<()> {
    if x.ndim() < 2 || x.feature_shape() != t.feature_shape.as_slice() {
        return Err(mismatch(format!(
            "tree expects feature shape {:?}, got {:?}",
            t.feature_shape,
            &x.shape()[1.min(x.ndim())..]
        )));
    }
    Ok(())
}

/// Leaf id (depth-first order) reached by every row of `x`.
pub fn apply<T: Scalar>(t: &TensorTree<T>, x: &DenseTensor<T>) -> Result<Vec<usize>> {
    check_shape(t, x)?;
    Ok((0..x.n_obs()).map(|i| route(&t.root, x.row(i), &t.feature_shape).0).collect())
}

/// Returns (leaf id, leaf) for one row.
fn route<'a, T: Scalar>(root: &'a Node<T>, row: &[T], shape: &[usize]) -> (usize, &'a LeafNode<T>) {
    let mut node = root;
    let mut offset = 0;
    loop {
        match node {
            Node::Leaf(l) => return (offset, l),
            Node::Split { rule, left, right, .. } => {
                if rule.goes_left(row, shape) {
                    node = left;
                } else {
                    offset += left.n_leaves();
                    node = right;
                }
            }
        }
    }
}

pub fn tree_predict<T: Scalar>(t: &TensorTree<T>, x: &DenseTensor<T>) -> Result<Vec<T>> {
    check_shape(t, x)?;
    let leaves = t.leaves();
    let ids = apply(t, x)?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); leaves.len()];
    for (i, &id) in ids.iter().enumerate() {
        groups[id].push(i);
    }
    let mut out = vec![T::zero(); x.n_obs()];
    for (leaf, rows) in leaves.iter().zip(&groups) {
        if rows.is_empty() {
            continue;
        }
        let preds = predict_leaf(&leaf.model, &x.select_obs(rows)?)?;
        for (&r, p) in rows.iter().zip(preds) {
            out[r] = p;
        }
    }
    Ok(out)
}
