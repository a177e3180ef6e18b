//! Dual SVM on precomputed kernels: SMO training, prediction, stratified
//! k-fold cross-validation and exhaustive grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{assemble_gram_sweep, prepare_items, GramMatrix, KernelConfig, KernelKind};
use crate::tensor::DenseTensor;
use crate::Matrix;

/// Curvature used when the pair's second derivative is not positive.
const TAU: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub items: Vec<DenseTensor>,
    pub labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(items: Vec<DenseTensor>, labels: Vec<i8>) -> Result<Self> {
        if items.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} items but {} labels",
                items.len(),
                labels.len()
            )));
        }
        validate_labels(&labels)?;
        if let Some(first) = items.first() {
            for x in &items[1..] {
                first.check_same_dims(x)?;
            }
        }
        Ok(Self { items, labels })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y > 0).count();
        (self.labels.len() - pos, pos)
    }
}

fn validate_labels(labels: &[i8]) -> Result<()> {
    match labels.iter().find(|&&y| y != 1 && y != -1) {
        Some(&bad) => Err(Error::InvalidLabel(bad as i64)),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoOptions {
    /// Largest tolerated maximal KKT violation.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub labels: Vec<i8>,
    pub c: f64,
    pub config: KernelConfig,
    /// False when the iteration cap was hit first; the model is still usable.
    pub converged: bool,
    pub iterations: usize,
}

impl SvmModel {
    pub fn support_indices(&self) -> Vec<usize> {
        self.alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `Σ α_i y_i K(x_i, x) + b` for one kernel row.
    pub fn decision_value(&self, kernel_row: &[f64]) -> Result<f64> {
        decision(&self.alpha, &self.labels, self.bias, kernel_row)
    }

    /// Value of the dual objective `Σα − ½ΣΣ α_i α_j y_i y_j K_ij`.
    pub fn dual_objective(&self, gram: &Matrix) -> f64 {
        dual_objective(&self.alpha, &self.labels, gram)
    }
}

fn decision(alpha: &[f64], labels: &[i8], bias: f64, kernel_row: &[f64]) -> Result<f64> {
    if kernel_row.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel row has {} entries, model has {} training items",
            kernel_row.len(),
            alpha.len()
        )));
    }
    Ok(alpha
        .iter()
        .zip(labels)
        .zip(kernel_row)
        .filter(|((&a, _), _)| a != 0.0)
        .map(|((&a, &y), &k)| a * y as f64 * k)
        .sum::<f64>()
        + bias)
}

fn dual_objective(alpha: &[f64], labels: &[i8], gram: &Matrix) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * (labels[i] * labels[j]) as f64 * gram[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: i8,
    pub decision: f64,
}

/// Label is the sign of the decision value, with 0 mapped to +1.
pub fn predict(model: &SvmModel, kernel_row: &[f64]) -> Result<Prediction> {
    let decision = model.decision_value(kernel_row)?;
    Ok(Prediction {
        label: if decision >= 0.0 { 1 } else { -1 },
        decision,
    })
}

#[derive(Clone, Debug)]
struct DualSolution {
    alpha: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
}

/// SMO iterate with maximal-violating-pair working set selection.
struct Smo<'a> {
    k: &'a Matrix,
    y: Vec<f64>,
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of `½αᵀQα − eᵀα`, `Q_ij = y_i y_j K_ij`.
    grad: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(k: &'a Matrix, labels: &[i8], c: f64) -> Self {
        let n = labels.len();
        Self {
            k,
            y: labels.iter().map(|&l| l as f64).collect(),
            c,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
        }
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// `(i, m, j, M)`: `m = max_{I_up} −y G`, `M = min_{I_low} −y G`.
    fn select(&self) -> (Option<usize>, f64, Option<usize>, f64) {
        let (mut i, mut gmax) = (None, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (None, f64::INFINITY);
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > gmax {
                gmax = v;
                i = Some(t);
            }
            if self.in_low(t) && v < gmin {
                gmin = v;
                j = Some(t);
            }
        }
        (i, gmax, j, gmin)
    }

    fn update(&mut self, i: usize, j: usize) {
        let (k, c) = (self.k, self.c);
        let (yi, yj) = (self.y[i], self.y[j]);
        let qij = yi * yj * k[(i, j)];
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let mut quad = k[(i, i)] + k[(j, j)] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.y.len() {
            let yt = self.y[t];
            self.grad[t] += yt * (yi * k[(t, i)] * di + yj * k[(t, j)] * dj);
        }
    }

    fn bias(&self, m_up: f64, m_low: f64) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for t in 0..self.y.len() {
            if self.alpha[t] > 0.0 && self.alpha[t] < self.c {
                sum += -self.y[t] * self.grad[t];
                count += 1;
            }
        }
        if count > 0 {
            return sum / count as f64;
        }
        match (m_up.is_finite(), m_low.is_finite()) {
            (true, true) => 0.5 * (m_up + m_low),
            (true, false) => m_up,
            (false, true) => m_low,
            (false, false) => 0.0,
        }
    }
}

fn solve_dual(k: &Matrix, labels: &[i8], c: f64, opts: &SmoOptions) -> DualSolution {
    let n = labels.len();
    if let Some(&first) = labels.first() {
        if labels.iter().all(|&y| y == first) {
            return DualSolution {
                alpha: vec![0.0; n],
                bias: first as f64,
                converged: true,
                iterations: 0,
            };
        }
    }
    let mut smo = Smo::new(k, labels, c);
    let mut iterations = 0;
    loop {
        let (i, m_up, j, m_low) = smo.select();
        let optimal = match (i, j) {
            (Some(_), Some(_)) => m_up - m_low <= opts.tol,
            _ => true,
        };
        if optimal || iterations >= opts.max_iter {
            let bias = smo.bias(m_up, m_low);
            return DualSolution {
                alpha: smo.alpha,
                bias,
                converged: optimal,
                iterations,
            };
        }
        smo.update(i.unwrap(), j.unwrap());
        iterations += 1;
    }
}

fn check_problem(k: &Matrix, labels: &[i8], c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C = {c} must be positive and finite")));
    }
    if k.nrows() != k.ncols() || k.nrows() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel is {}x{}, {} labels",
            k.nrows(),
            k.ncols(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no training items".into()));
    }
    validate_labels(labels)
}

/// Trains on a precomputed Gram matrix.
pub fn smo_solve(gram: &GramMatrix, labels: &[i8], c: f64, opts: &SmoOptions) -> Result<SvmModel> {
    check_problem(&gram.values, labels, c)?;
    let sol = solve_dual(&gram.values, labels, c, opts);
    Ok(SvmModel {
        alpha: sol.alpha,
        bias: sol.bias,
        labels: labels.to_vec(),
        c,
        config: gram.config,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

/// Stratified folds: each class is shuffled by `seed`, then the classes
/// are dealt round-robin, one after the other, onto the `k` folds.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    validate_labels(labels)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InvalidArgument(format!("{} items cannot fill {k} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [-1i8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::MissingClass(class));
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn fold_accuracies(k: &Matrix, labels: &[i8], c: f64, folds: &[Vec<usize>], opts: &SmoOptions) -> Vec<f64> {
    let n = labels.len();
    folds
        .iter()
        .map(|test| {
            let mut is_test = vec![false; n];
            for &t in test {
                is_test[t] = true;
            }
            let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
            let sub = Matrix::from_fn(train.len(), train.len(), |a, b| k[(train[a], train[b])]);
            let sub_labels: Vec<i8> = train.iter().map(|&i| labels[i]).collect();
            let sol = solve_dual(&sub, &sub_labels, c, opts);
            let correct = test
                .iter()
                .filter(|&&t| {
                    let row: Vec<f64> = train.iter().map(|&j| k[(t, j)]).collect();
                    let f = decision(&sol.alpha, &sub_labels, sol.bias, &row).expect("row length matches");
                    let label = if f >= 0.0 { 1 } else { -1 };
                    label == labels[t]
                })
                .count();
            correct as f64 / test.len() as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
}

impl CvResult {
    fn from_folds(fold_accuracies: Vec<f64>) -> Self {
        let mean = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
        Self { fold_accuracies, mean }
    }
}

/// k-fold cross-validation of one hyperparameter setting. Each item is
/// decomposed once and the Gram matrix is shared by all folds.
pub fn cross_validate(data: &LabeledDataset, config: &KernelConfig, c: f64, k: usize, seed: u64) -> Result<CvResult> {
    let folds = stratified_folds(&data.labels, k, seed)?;
    let items = prepare_items(&data.items, config)?;
    let gram = assemble_gram_sweep(&items, config, &[config.sigma])?.remove(0);
    cross_validate_gram(&gram.values, &data.labels, c, &folds)
}

/// Cross-validation on a precomputed kernel matrix with explicit folds.
pub fn cross_validate_gram(k: &Matrix, labels: &[i8], c: f64, folds: &[Vec<usize>]) -> Result<CvResult> {
    check_problem(k, labels, c)?;
    Ok(CvResult::from_folds(fold_accuracies(k, labels, c, folds, &SmoOptions::default())))
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn pow2_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Kernel kind and flags; `sigma` and `rank` are overridden per cell.
    pub base: KernelConfig,
    pub ranks: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub cs: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Independent fold assignments, seeded `seed, seed + 1, …`.
    pub repeats: usize,
}

impl GridSpec {
    /// `R ∈ {1..10}`, `σ, C ∈ {2⁻⁸..2⁸}`, 5 folds, 5 repeats.
    pub fn defaults(kind: KernelKind) -> Self {
        Self {
            base: KernelConfig::new(kind, 1.0, 1),
            ranks: (1..=10).collect(),
            sigmas: pow2_grid(-8, 8),
            cs: pow2_grid(-8, 8),
            folds: 5,
            seed: 0,
            repeats: 5,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.ranks.len() * self.sigmas.len() * self.cs.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub rank: usize,
    pub sigma: f64,
    pub c: f64,
    /// Mean accuracy over repeats × folds.
    pub mean: f64,
    pub std: f64,
}

impl GridCell {
    /// True when `self` should replace `other` as the winner: higher mean,
    /// then smaller rank, smaller C, smaller σ.
    fn beats(&self, other: &GridCell) -> bool {
        if self.mean != other.mean {
            return self.mean > other.mean;
        }
        (self.rank, self.c, self.sigma) < (other.rank, other.c, other.sigma)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub kind: KernelKind,
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

impl GridReport {
    /// Best cell for each rank, in rank order.
    pub fn rank_curve(&self) -> Vec<GridCell> {
        let mut ranks: Vec<usize> = self.cells.iter().map(|c| c.rank).collect();
        ranks.dedup();
        ranks
            .into_iter()
            .map(|r| {
                self.cells
                    .iter()
                    .filter(|c| c.rank == r)
                    .fold(None::<GridCell>, |acc, c| match acc {
                        Some(best) if !c.beats(&best) => Some(best),
                        _ => Some(*c),
                    })
                    .expect("every rank has cells")
            })
            .collect()
    }

    /// `R,sigma,C,mean,std`, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,sigma,C,mean,std\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{}\n", c.rank, c.sigma, c.c, c.mean, c.std));
        }
        out
    }

    /// `R,mean,std,sigma,C`: the best cell per rank.
    pub fn rank_curve_csv(&self) -> String {
        let mut out = String::from("R,mean,std,sigma,C\n");
        for c in self.rank_curve() {
            out.push_str(&format!("{},{},{},{},{}\n", c.rank, c.mean, c.std, c.sigma, c.c));
        }
        out
    }
}

/// Exhaustive search over `ranks × sigmas × cs`. Decompositions are
/// computed once per rank, Gram matrices once per (rank, σ), and fold
/// assignments once per repeat.
pub fn grid_search(data: &LabeledDataset, spec: &GridSpec) -> Result<GridReport> {
    if spec.ranks.is_empty() || spec.sigmas.is_empty() || spec.cs.is_empty() {
        return Err(Error::InvalidArgument("grid axes must be non-empty".into()));
    }
    if spec.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    for &c in &spec.cs {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C = {c} must be positive and finite")));
        }
    }
    let fold_sets: Vec<Vec<Vec<usize>>> = (0..spec.repeats as u64)
        .map(|r| stratified_folds(&data.labels, spec.folds, spec.seed.wrapping_add(r)))
        .collect::<Result<_>>()?;
    let opts = SmoOptions::default();

    let mut cells = Vec::with_capacity(spec.cell_count());
    for &rank in &spec.ranks {
        let config = KernelConfig {
            rank,
            sigma: spec.sigmas[0],
            ..spec.base
        };
        let items = prepare_items(&data.items, &config)?;
        let grams = assemble_gram_sweep(&items, &config, &spec.sigmas)?;
        let jobs: Vec<(usize, f64)> = (0..grams.len())
            .flat_map(|s| spec.cs.iter().map(move |&c| (s, c)))
            .collect();
        let evaluated: Vec<GridCell> = jobs
            .par_iter()
            .map(|&(s, c)| {
                let accs: Vec<f64> = fold_sets
                    .iter()
                    .flat_map(|folds| fold_accuracies(&grams[s].values, &data.labels, c, folds, &opts))
                    .collect();
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64;
                GridCell {
                    rank,
                    sigma: spec.sigmas[s],
                    c,
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect();
        cells.extend(evaluated);
    }
    let best = cells
        .iter()
        .copied()
        .reduce(|best, c| if c.beats(&best) { c } else { best })
        .expect("grid is non-empty");
    Ok(GridReport {
        kind: spec.base.kind,
        cells,
        best,
    })
}
