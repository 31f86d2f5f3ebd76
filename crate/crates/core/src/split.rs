//! Split criteria and split search.
//!
//! A split rule sends observation `i` left when `X[i, coords] <= threshold`.
//! Candidates are compared by the total order (loss, coords lexicographic,
//! threshold), so every search returns the same rule regardless of the
//! order or thread in which candidates were evaluated.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{cp_als, tucker_als, AlsConfig};
use crate::error::{invalid, mismatch, Result};
use crate::leaf::{fit_leaf, LeafKind, LeafModelSpec};
use crate::rng::SplitMix64;
use crate::scalar::{count, mean, Scalar};
use crate::tensor::{unravel, DenseTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SplitRule<T> {
    pub coords: Vec<usize>,
    pub threshold: T,
}

impl<T: Scalar> SplitRule<T> {
    #[inline]
    pub fn goes_left(&self, x_row: &[T], feature_shape: &[usize]) -> bool {
        x_row[flat_index(&self.coords, feature_shape)] <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Sse,
    Lae,
    Lre,
}

/// Rank used by the low-rank criteria. The variant also picks the family:
/// CP for `Cp`, Tucker for `Tucker`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitRank {
    Cp(usize),
    Tucker(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    #[default]
    ObservedValues,
    MeanValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCriterion {
    pub kind: CriterionKind,
    #[serde(default)]
    pub split_rank: Option<SplitRank>,
    #[serde(default)]
    pub value_mode: ValueMode,
    #[serde(default)]
    pub als: AlsConfig,
}

impl SplitCriterion {
    pub fn sse() -> Self {
        Self {
            kind: CriterionKind::Sse,
            split_rank: None,
            value_mode: ValueMode::ObservedValues,
            als: AlsConfig::default(),
        }
    }

    pub fn lae(rank: SplitRank) -> Self {
        Self {
            kind: CriterionKind::Lae,
            split_rank: Some(rank),
            ..Self::sse()
        }
    }

    pub fn lre(rank: SplitRank) -> Self {
        Self {
            kind: CriterionKind::Lre,
            split_rank: Some(rank),
            ..Self::sse()
        }
    }

    pub fn with_value_mode(mut self, mode: ValueMode) -> Self {
        self.value_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.als.validate()?;
        match (self.kind, &self.split_rank) {
            (CriterionKind::Sse, Some(_)) => Err(invalid("split_rank is only used by LAE and LRE")),
            (CriterionKind::Sse, None) => Ok(()),
            (_, None) => Err(invalid("LAE and LRE need a split_rank")),
            (_, Some(SplitRank::Cp(0))) => Err(invalid("split_rank must be at least 1")),
            (_, Some(SplitRank::Tucker(r))) if r.is_empty() || r.contains(&0) => {
                Err(invalid("split_rank entries must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    fn rank(&self) -> Result<&SplitRank> {
        self.split_rank
            .as_ref()
            .ok_or_else(|| invalid("LAE and LRE need a split_rank"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Exhaustive,
    LeverageScore,
    BranchBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStrategy {
    pub kind: StrategyKind,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub xi: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tau() -> f64 {
    1.0
}

impl Default for SearchStrategy {
    fn default() -> Self {
        Self::exhaustive()
    }
}

impl SearchStrategy {
    pub fn exhaustive() -> Self {
        Self {
            kind: StrategyKind::Exhaustive,
            tau: 1.0,
            xi: 0,
            seed: 0,
        }
    }

    pub fn leverage(tau: f64, seed: u64) -> Self {
        Self {
            kind: StrategyKind::LeverageScore,
            tau,
            seed,
            ..Self::exhaustive()
        }
    }

    pub fn branch_bound(xi: usize) -> Self {
        Self {
            kind: StrategyKind::BranchBound,
            xi,
            ..Self::exhaustive()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SplitEvaluation<T> {
    pub rule: SplitRule<T>,
    pub loss: T,
    pub left_count: usize,
    pub right_count: usize,
}

/// Total order used for every reduction over candidates.
pub fn compare_evaluations<T: Scalar>(a: &SplitEvaluation<T>, b: &SplitEvaluation<T>) -> Ordering {
    cmp_scalar(a.loss, b.loss)
        .then_with(|| a.rule.coords.cmp(&b.rule.coords))
        .then_with(|| cmp_scalar(a.rule.threshold, b.rule.threshold))
}

/// NaN sorts after every number.
fn cmp_scalar<T: Scalar>(a: T, b: T) -> Ordering {
    match a.partial_cmp(&b) {
        Some(o) => o,
        None => a.is_nan().cmp(&b.is_nan()),
    }
}

fn better<T: Scalar>(a: Option<SplitEvaluation<T>>, b: Option<SplitEvaluation<T>>) -> Option<SplitEvaluation<T>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if compare_evaluations(&b, &a) == Ordering::Less { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

pub(crate) fn flat_index(coords: &[usize], shape: &[usize]) -> usize {
    coords.iter().zip(shape).fold(0, |acc, (&c, &d)| acc * d + c)
}

fn check_coords(x_shape: &[usize], coords: &[usize]) -> Result<()> {
    if coords.len() != x_shape.len() || coords.iter().zip(x_shape).any(|(c, d)| c >= d) {
        return Err(invalid(format!(
            "coords {coords:?} outside feature shape {x_shape:?}"
        )));
    }
    Ok(())
}

fn column<T: Scalar>(x: &DenseTensor<T>, flat: usize) -> Vec<T> {
    (0..x.n_obs()).map(|i| x.row(i)[flat]).collect()
}

/// Left and right observation indices, each in increasing order.
fn partition<T: Scalar>(col: &[T], threshold: T) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &v) in col.iter().enumerate() {
        if v <= threshold {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    (left, right)
}

fn rule_partition<T: Scalar>(x: &DenseTensor<T>, rule: &SplitRule<T>) -> Result<(Vec<usize>, Vec<usize>)> {
    check_coords(x.feature_shape(), &rule.coords)?;
    let flat = flat_index(&rule.coords, x.feature_shape());
    Ok(partition(&column(x, flat), rule.threshold))
}

fn check_y<T: Scalar>(x: &DenseTensor<T>, y: &[T]) -> Result<()> {
    if x.n_obs() != y.len() {
        return Err(mismatch(format!(
            "{} observations but {} responses",
            x.n_obs(),
            y.len()
        )));
    }
    Ok(())
}

/// `(1/N) sum (y_i - mean)^2` over the listed indices, two-pass in index order.
fn child_variance<T: Scalar>(y: &[T], idx: &[usize]) -> T {
    let m = idx.iter().map(|&i| y[i]).sum::<T>() / count(idx.len());
    idx.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum::<T>() / count(idx.len())
}

/// Sum of within-child variances. `None` when a child is empty.
pub fn evaluate_sse<T: Scalar>(x: &DenseTensor<T>, y: &[T], rule: &SplitRule<T>) -> Result<Option<T>> {
    check_y(x, y)?;
    let (l, r) = rule_partition(x, rule)?;
    if l.is_empty() || r.is_empty() {
        return Ok(None);
    }
    Ok(Some(child_variance(y, &l) + child_variance(y, &r)))
}

/// Summed low-rank approximation error of both children's stacked inputs.
pub fn evaluate_lae<T: Scalar>(x: &DenseTensor<T>, rule: &SplitRule<T>, crit: &SplitCriterion) -> Result<Option<T>> {
    if crit.kind != CriterionKind::Lae {
        return Err(invalid("evaluate_lae needs an LAE criterion"));
    }
    crit.validate()?;
    let (l, r) = rule_partition(x, rule)?;
    if l.is_empty() || r.is_empty() {
        return Ok(None);
    }
    Ok(Some(lae_term(x, &l, crit)? + lae_term(x, &r, crit)?))
}

/// Summed squared training residuals of a low-rank regression in each child.
pub fn evaluate_lre<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    rule: &SplitRule<T>,
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
) -> Result<Option<T>> {
    if crit.kind != CriterionKind::Lre {
        return Err(invalid("evaluate_lre needs an LRE criterion"));
    }
    crit.validate()?;
    check_y(x, y)?;
    let (l, r) = rule_partition(x, rule)?;
    if l.is_empty() || r.is_empty() {
        return Ok(None);
    }
    let spec = lre_spec(crit, leaf)?;
    Ok(Some(lre_term(x, y, &l, &spec)? + lre_term(x, y, &r, &spec)?))
}

/// Regression fitted by the LRE criterion: family and rank from the
/// criterion, intercept from the leaf spec, ALS settings from the criterion.
pub(crate) fn lre_spec(crit: &SplitCriterion, leaf: &LeafModelSpec) -> Result<LeafModelSpec> {
    let kind = match crit.rank()? {
        SplitRank::Cp(r) => LeafKind::Cp { rank: *r },
        SplitRank::Tucker(r) => LeafKind::Tucker { ranks: r.clone() },
    };
    Ok(LeafModelSpec {
        kind,
        als: crit.als,
        intercept: leaf.intercept,
    })
}

fn lre_term<T: Scalar>(x: &DenseTensor<T>, y: &[T], idx: &[usize], spec: &LeafModelSpec) -> Result<T> {
    let xs = x.select_obs(idx)?;
    let ys: Vec<T> = idx.iter().map(|&i| y[i]).collect();
    Ok(fit_leaf(&xs, &ys, spec)?.train_sse)
}

/// Low-rank approximation error of the child's stacked tensor. A CP child
/// with fewer observations than the rank contributes `sum ||X_i - mean X||^2`.
fn lae_term<T: Scalar>(x: &DenseTensor<T>, idx: &[usize], crit: &SplitCriterion) -> Result<T> {
    let xs = x.select_obs(idx)?;
    let n = idx.len();
    match crit.rank()? {
        SplitRank::Cp(r) => {
            if n < *r {
                return Ok(input_scatter(&xs));
            }
            let fit = cp_als(&xs, *r, &crit.als)?;
            Ok(xs.sub(&fit.decomposition.reconstruct()?)?.squared_norm())
        }
        SplitRank::Tucker(r) => {
            let ranks = tucker_ranks(r, xs.shape())?;
            let fit = tucker_als(&xs, &ranks, &crit.als)?;
            Ok(xs.sub(&fit.decomposition.reconstruct()?)?.squared_norm())
        }
    }
}

/// Full Tucker ranks for a stacked child. Ranks that list only the feature
/// modes get an observation-mode rank of `min(n, product of feature ranks)`;
/// a leading observation rank, when given, is capped at `n`.
pub(crate) fn tucker_ranks(r: &[usize], shape: &[usize]) -> Result<Vec<usize>> {
    let n = shape[0];
    let features = &shape[1..];
    let ranks = if r.len() == features.len() {
        let mut full = vec![n.min(r.iter().product())];
        full.extend_from_slice(r);
        full
    } else if r.len() == shape.len() {
        let mut full = r.to_vec();
        full[0] = full[0].min(n);
        full
    } else {
        return Err(invalid(format!(
            "split_rank {r:?} does not match {} feature modes",
            features.len()
        )));
    };
    if let Some((q, (&rq, &d))) = ranks.iter().zip(shape).enumerate().find(|(_, (rq, d))| rq > d) {
        return Err(invalid(format!("split_rank {rq} exceeds extent {d} of mode {q}")));
    }
    Ok(ranks)
}

fn input_scatter<T: Scalar>(xs: &DenseTensor<T>) -> T {
    let n = xs.n_obs();
    let f = xs.feature_len();
    let mut total = T::zero();
    for j in 0..f {
        let col: Vec<T> = (0..n).map(|i| xs.row(i)[j]).collect();
        let m = mean(&col);
        total += col.iter().map(|&v| (v - m) * (v - m)).sum::<T>();
    }
    total
}

/// Candidate thresholds for one coordinate: sorted distinct observed values,
/// or the single node-local mean.
pub fn candidate_thresholds<T: Scalar>(x: &DenseTensor<T>, coords: &[usize], mode: ValueMode) -> Result<Vec<T>> {
    check_coords(x.feature_shape(), coords)?;
    let col = column(x, flat_index(coords, x.feature_shape()));
    Ok(match mode {
        ValueMode::MeanValue => vec![mean(&col)],
        ValueMode::ObservedValues => {
            let mut v = col;
            v.sort_by(|a, b| cmp_scalar(*a, *b));
            v.dedup();
            v
        }
    })
}

/// Population variance of every feature coordinate across observations,
/// shaped like one observation.
pub fn variance_matrix<T: Scalar>(x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let f = x.feature_len();
    let data = (0..f)
        .map(|j| crate::scalar::variance(&column(x, j)))
        .collect();
    DenseTensor::new(x.feature_shape().to_vec(), data)
}

/// Everything a search needs at one node.
pub(crate) struct SplitProblem<'a, T> {
    pub x: &'a DenseTensor<T>,
    pub y: &'a [T],
    pub crit: &'a SplitCriterion,
    pub lre: Option<LeafModelSpec>,
    /// Minimum observations per child.
    pub min_child: usize,
}

impl<'a, T: Scalar> SplitProblem<'a, T> {
    pub fn new(
        x: &'a DenseTensor<T>,
        y: &'a [T],
        crit: &'a SplitCriterion,
        leaf: &LeafModelSpec,
        min_child: usize,
    ) -> Result<Self> {
        crit.validate()?;
        check_y(x, y)?;
        if x.ndim() < 2 {
            return Err(invalid("split search needs at least one feature mode"));
        }
        let lre = match crit.kind {
            CriterionKind::Lre => Some(lre_spec(crit, leaf)?),
            _ => None,
        };
        if let (CriterionKind::Lae, Some(SplitRank::Tucker(r))) = (crit.kind, &crit.split_rank) {
            tucker_ranks(r, x.shape())?;
        }
        Ok(Self {
            x,
            y,
            crit,
            lre,
            min_child: min_child.max(1),
        })
    }

    fn n_coords(&self) -> usize {
        self.x.feature_len()
    }

    fn loss(&self, left: &[usize], right: &[usize]) -> Result<T> {
        match self.crit.kind {
            CriterionKind::Sse => Ok(child_variance(self.y, left) + child_variance(self.y, right)),
            CriterionKind::Lae => Ok(lae_term(self.x, left, self.crit)? + lae_term(self.x, right, self.crit)?),
            CriterionKind::Lre => {
                let spec = self.lre.as_ref().unwrap_or_else(|| unreachable!());
                Ok(lre_term(self.x, self.y, left, spec)? + lre_term(self.x, self.y, right, spec)?)
            }
        }
    }

    /// Criterion value of the node left whole.
    pub fn unsplit_loss(&self) -> Result<T> {
        let all: Vec<usize> = (0..self.y.len()).collect();
        match self.crit.kind {
            CriterionKind::Sse => Ok(child_variance(self.y, &all)),
            CriterionKind::Lae => lae_term(self.x, &all, self.crit),
            CriterionKind::Lre => {
                let spec = self.lre.as_ref().unwrap_or_else(|| unreachable!());
                lre_term(self.x, self.y, &all, spec)
            }
        }
    }

    fn admissible(&self, left: usize, right: usize) -> bool {
        left >= self.min_child && right >= self.min_child
    }

    fn evaluation(&self, flat: usize, threshold: T, left: &[usize], right: &[usize]) -> Result<SplitEvaluation<T>> {
        Ok(SplitEvaluation {
            rule: SplitRule {
                coords: unravel(flat, self.x.feature_shape()),
                threshold,
            },
            loss: self.loss(left, right)?,
            left_count: left.len(),
            right_count: right.len(),
        })
    }

    fn exact(&self, flat: usize, col: &[T], threshold: T) -> Result<Option<SplitEvaluation<T>>> {
        let (l, r) = partition(col, threshold);
        if !self.admissible(l.len(), r.len()) {
            return Ok(None);
        }
        self.evaluation(flat, threshold, &l, &r).map(Some)
    }

    /// Best admissible split on one coordinate.
    pub fn best_for_coord(&self, flat: usize) -> Result<Option<SplitEvaluation<T>>> {
        let col = column(self.x, flat);
        match self.crit.value_mode {
            ValueMode::MeanValue => self.exact(flat, &col, mean(&col)),
            ValueMode::ObservedValues if self.crit.kind == CriterionKind::Sse => self.sse_scan(flat, &col),
            ValueMode::ObservedValues => {
                let mut thresholds = col.clone();
                thresholds.sort_by(|a, b| cmp_scalar(*a, *b));
                thresholds.dedup();
                let evals: Vec<Option<SplitEvaluation<T>>> = thresholds
                    .par_iter()
                    .map(|&t| self.exact(flat, &col, t))
                    .collect::<Result<_>>()?;
                Ok(evals.into_iter().fold(None, better))
            }
        }
    }

    /// Sorted prefix-sum scan screens every threshold; the few within
    /// rounding distance of the scan minimum are re-evaluated exactly.
    fn sse_scan(&self, flat: usize, col: &[T]) -> Result<Option<SplitEvaluation<T>>> {
        let n = col.len();
        let y = self.y;
        let ybar = mean(y);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_scalar(col[a], col[b]).then(a.cmp(&b)));
        let (total1, total2) = order.iter().fold((T::zero(), T::zero()), |(s1, s2), &i| {
            let v = y[i] - ybar;
            (s1 + v, s2 + v * v)
        });
        let mut approx: Vec<(T, T)> = Vec::new();
        let (mut s1, mut s2) = (T::zero(), T::zero());
        for p in 0..n.saturating_sub(1) {
            let v = y[order[p]] - ybar;
            s1 += v;
            s2 += v * v;
            let t = col[order[p]];
            if !(t < col[order[p + 1]]) {
                continue;
            }
            let (nl, nr) = (p + 1, n - p - 1);
            if !self.admissible(nl, nr) {
                continue;
            }
            let (fl, fr) = (count::<T>(nl), count::<T>(nr));
            let (r1, r2) = (total1 - s1, total2 - s2);
            let loss = (s2 - s1 * s1 / fl) / fl + (r2 - r1 * r1 / fr) / fr;
            approx.push((loss, t));
        }
        let Some(best) = approx.iter().map(|a| a.0).reduce(|a, b| if cmp_scalar(b, a) == Ordering::Less { b } else { a }) else {
            return Ok(None);
        };
        let scale = total2 / count(n) + best.abs();
        let slack = T::real(1e-9) * scale + T::min_positive_value();
        let mut out = None;
        for &(loss, t) in &approx {
            if loss <= best + slack {
                out = better(out, self.exact(flat, col, t)?);
            }
        }
        Ok(out)
    }

    pub fn exhaustive(&self) -> Result<Option<SplitEvaluation<T>>> {
        if self.x.n_obs() < 2 {
            return Ok(None);
        }
        let all: Vec<usize> = (0..self.n_coords()).collect();
        self.over_coords(&all)
    }

    fn over_coords(&self, flats: &[usize]) -> Result<Option<SplitEvaluation<T>>> {
        let evals: Vec<Option<SplitEvaluation<T>>> = flats
            .par_iter()
            .map(|&f| self.best_for_coord(f))
            .collect::<Result<_>>()?;
        Ok(evals.into_iter().fold(None, better))
    }

    pub fn leverage(&self, strat: &SearchStrategy) -> Result<Option<SplitEvaluation<T>>> {
        strat.validate()?;
        if self.x.n_obs() < 2 {
            return Ok(None);
        }
        let selected = leverage_sample(self.x, strat.tau, strat.seed)?;
        self.over_coords(&selected)
    }

    pub fn branch_bound(&self, strat: &SearchStrategy) -> Result<Option<SplitEvaluation<T>>> {
        if self.x.n_obs() < 2 {
            return Ok(None);
        }
        let shape = self.x.feature_shape().to_vec();
        let mut queue: VecDeque<Vec<(usize, usize)>> = VecDeque::new();
        queue.push_back(shape.iter().map(|&d| (0, d - 1)).collect());
        let mut cache: HashMap<usize, Option<SplitEvaluation<T>>> = HashMap::new();
        let mut best = None;
        while let Some(bounds) = queue.pop_front() {
            let mid: Vec<usize> = bounds.iter().map(|&(lo, hi)| (lo + hi) / 2).collect();
            let flat = flat_index(&mid, &shape);
            let eval = match cache.get(&flat) {
                Some(e) => e.clone(),
                None => {
                    let e = self.best_for_coord(flat)?;
                    cache.insert(flat, e.clone());
                    e
                }
            };
            best = better(best, eval);
            if let Some(i) = bounds.iter().position(|&(lo, hi)| hi - lo > strat.xi) {
                let (lo, hi) = bounds[i];
                let m = (lo + hi) / 2;
                let mut left = bounds.clone();
                let mut right = bounds;
                left[i] = (lo, m);
                right[i] = (m + 1, hi);
                queue.push_back(left);
                queue.push_back(right);
            }
        }
        Ok(best)
    }

    pub fn search(&self, strat: &SearchStrategy) -> Result<Option<SplitEvaluation<T>>> {
        match strat.kind {
            StrategyKind::Exhaustive => self.exhaustive(),
            StrategyKind::LeverageScore => self.leverage(strat),
            StrategyKind::BranchBound => self.branch_bound(strat),
        }
    }
}

/// Flat coordinates chosen by variance-weighted sampling without
/// replacement, in increasing order. Draws `ceil(tau * D)` coordinates (or
/// every nonzero-variance coordinate when fewer exist) using reservoir keys
/// `ln(u) / w`: the coordinates with the largest keys are kept.
pub fn leverage_sample<T: Scalar>(x: &DenseTensor<T>, tau: f64, seed: u64) -> Result<Vec<usize>> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(invalid(format!("tau must lie in (0, 1], got {tau}")));
    }
    let var = variance_matrix(x)?;
    let d = var.len();
    let want = ((tau * d as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut rng = SplitMix64::new(seed);
    let mut keyed: Vec<(f64, usize)> = Vec::new();
    for (j, &w) in var.data().iter().enumerate() {
        let w = w.as_f64();
        // Every coordinate consumes one draw so keys do not shift with zeros.
        let u = rng.uniform_open0();
        if w > 0.0 {
            keyed.push((u.ln() / w, j));
        }
    }
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = keyed.into_iter().take(want).map(|(_, j)| j).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn find_best_split_exhaustive<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
) -> Result<Option<SplitEvaluation<T>>> {
    SplitProblem::new(x, y, crit, leaf, 1)?.exhaustive()
}

pub fn find_best_split_leverage<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
    strat: &SearchStrategy,
) -> Result<Option<SplitEvaluation<T>>> {
    SplitProblem::new(x, y, crit, leaf, 1)?.leverage(strat)
}

pub fn find_best_split_bb<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
    strat: &SearchStrategy,
) -> Result<Option<SplitEvaluation<T>>> {
    SplitProblem::new(x, y, crit, leaf, 1)?.branch_bound(strat)
}

/// Dispatches on `strat.kind`.
pub fn find_best_split<T: Scalar>(
    x: &DenseTensor<T>,
    y: &[T],
    crit: &SplitCriterion,
    leaf: &LeafModelSpec,
    strat: &SearchStrategy,
) -> Result<Option<SplitEvaluation<T>>> {
    SplitProblem::new(x, y, crit, leaf, 1)?.search(strat)
}
