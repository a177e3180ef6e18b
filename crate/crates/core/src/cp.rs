//! Kruskal (CP) tensors: expansion from a tensor train, norm
//! equilibration, reconstruction, and an ALS fitter used as a baseline.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{increment, khatri_rao, DenseTensor};
use crate::tt::TtDecomposition;
use crate::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CpDecomposition {
    factors: Vec<Matrix>,
}

impl CpDecomposition {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidCp("no factor matrices".into()))?;
        let rank = first.ncols();
        if let Some((m, f)) = factors.iter().enumerate().find(|(_, f)| f.ncols() != rank) {
            return Err(Error::InvalidCp(format!(
                "factor {m} has {} columns, expected {rank}",
                f.ncols()
            )));
        }
        if factors.iter().any(|f| f.nrows() == 0) {
            return Err(Error::InvalidCp("factor with zero rows".into()));
        }
        if factors.len() > crate::tensor::MAX_ORDER {
            return Err(Error::InvalidCp(format!("order {} is too large", factors.len())));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn reconstruct(&self) -> DenseTensor {
        cp_reconstruct(self)
    }
}

/// Rewrites a train as a CP by merging `r₁, …, r_{M−1}` into one index
/// (`r₁` fastest). Column `r` of factor `m` is the fibre
/// `G^(m)[r_{m−1}, :, r_m]`; nothing is computed, only copied.
pub fn tt_to_cp(t: &TtDecomposition) -> CpDecomposition {
    let ranks = t.ranks();
    let order = t.order();
    let internal = &ranks[1..order];
    let total: usize = internal.iter().product();
    let mut factors: Vec<Matrix> = t
        .cores()
        .iter()
        .map(|c| Matrix::zeros(c.shape().1, total))
        .collect();
    // Merged-index digits, r₁ fastest.
    let mut digits = vec![0usize; internal.len()];
    for r in 0..total {
        for (m, core) in t.cores().iter().enumerate() {
            let a = if m == 0 { 0 } else { digits[m - 1] };
            let b = if m + 1 == order { 0 } else { digits[m] };
            let col = &mut factors[m].column_mut(r);
            for i in 0..core.shape().1 {
                col[i] = core.get(a, i, b);
            }
        }
        increment(&mut digits, internal);
    }
    CpDecomposition { factors }
}

/// Rescales every rank-one term so that all of its `M` columns share the
/// norm `n_r^{1/M}`, where `n_r` is the product of the column norms.
/// Terms with a zero column anywhere are zeroed in every mode.
pub fn equilibrate_norms(c: &CpDecomposition) -> CpDecomposition {
    let order = c.order() as f64;
    let mut factors = c.factors.clone();
    for r in 0..c.rank() {
        let norms: Vec<f64> = c.factors.iter().map(|f| f.column(r).norm()).collect();
        if norms.iter().any(|&n| n == 0.0) {
            for f in &mut factors {
                f.column_mut(r).fill(0.0);
            }
            continue;
        }
        // Product computed through logs so that wide norm ranges across
        // modes cannot overflow before the root is taken.
        let target = (norms.iter().map(|n| n.ln()).sum::<f64>() / order).exp();
        for (f, n) in factors.iter_mut().zip(&norms) {
            let mut col = f.column_mut(r);
            col *= target / n;
        }
    }
    CpDecomposition { factors }
}

/// Sum of the rank-one outer products.
pub fn cp_reconstruct(c: &CpDecomposition) -> DenseTensor {
    let dims = c.dims();
    let mut data = vec![0.0; dims.iter().product()];
    let mut term = Vec::with_capacity(data.len());
    for r in 0..c.rank() {
        term.clear();
        term.push(1.0);
        for f in &c.factors {
            let col = f.column(r);
            let prev = std::mem::take(&mut term);
            term.reserve(prev.len() * col.len());
            for &v in col.iter() {
                term.extend(prev.iter().map(|p| p * v));
            }
        }
        for (d, t) in data.iter_mut().zip(&term) {
            *d += t;
        }
    }
    DenseTensor::new(dims, data).expect("factor dims were validated at construction")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpAlsOptions {
    pub rank: usize,
    pub max_sweeps: usize,
    /// Stop once the relative residual changes by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl CpAlsOptions {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_sweeps: 100,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CpAlsFit {
    pub decomposition: CpDecomposition,
    /// Relative residual `‖x − x̂‖_F / ‖x‖_F` after each sweep.
    pub residuals: Vec<f64>,
}

pub fn cp_als(x: &DenseTensor, opts: &CpAlsOptions) -> Result<CpAlsFit> {
    if opts.rank < 1 {
        return Err(Error::InvalidArgument("CP rank must be at least 1".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let dims = x.dims().to_vec();
    let order = dims.len();
    let rank = opts.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut factors: Vec<Matrix> = dims
        .iter()
        .map(|&d| Matrix::from_fn(d, rank, |_, _| rng.random_range(-1.0..=1.0)))
        .collect();
    let unfoldings: Vec<Matrix> = (0..order).map(|m| x.matricize(m)).collect::<Result<_>>()?;
    let norm_x = x.frobenius_norm();

    let mut residuals = Vec::with_capacity(opts.max_sweeps);
    for _ in 0..opts.max_sweeps {
        for m in 0..order {
            // Khatri-Rao of the other factors, highest mode leftmost so the
            // lowest remaining mode runs fastest, matching `matricize`.
            let mut kr: Option<Matrix> = None;
            let mut gram = Matrix::from_element(rank, rank, 1.0);
            for k in (0..order).filter(|&k| k != m) {
                gram.component_mul_assign(&(factors[k].transpose() * &factors[k]));
                kr = Some(match kr {
                    None => factors[k].clone(),
                    Some(acc) => khatri_rao(&factors[k], &acc)?,
                });
            }
            let rhs = match kr {
                Some(kr) => &unfoldings[m] * kr,
                None => unfoldings[m].clone() * Matrix::from_element(1, rank, 1.0),
            };
            factors[m] = solve_normal_equations(&gram, &rhs);
        }
        let fit = CpDecomposition {
            factors: factors.clone(),
        };
        let err = x.distance(&cp_reconstruct(&fit))?;
        let rel = if norm_x > 0.0 { err / norm_x } else { err };
        let done = residuals.last().is_some_and(|&prev: &f64| (prev - rel).abs() < opts.tol);
        residuals.push(rel);
        if done || rel == 0.0 {
            break;
        }
    }
    Ok(CpAlsFit {
        decomposition: CpDecomposition { factors },
        residuals,
    })
}

/// Solves `H · gram = rhs` for `H` (gram symmetric positive semidefinite).
fn solve_normal_equations(gram: &Matrix, rhs: &Matrix) -> Matrix {
    let rank = gram.nrows();
    let chol = Cholesky::new(gram.clone()).or_else(|| {
        let ridge = gram + Matrix::identity(rank, rank) * 1e-12;
        Cholesky::new(ridge)
    });
    match chol {
        Some(chol) => chol.solve(&rhs.transpose()).transpose(),
        None => {
            let pinv = gram
                .clone()
                .pseudo_inverse(1e-12)
                .unwrap_or_else(|_| Matrix::zeros(rank, rank));
            rhs * pinv
        }
    }
}
