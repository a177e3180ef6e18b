//! Kernels on decomposed tensors and Gram matrix assembly.
//!
//! Every kernel here is a sum of Gaussian terms. Products of per-mode
//! Gaussians sharing one width collapse to a single exponential of the
//! summed squared distances, so a pair of items is reduced once to its list
//! of distance sums and any number of widths can be evaluated from it.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cp::{cp_als, equilibrate_norms, tt_to_cp, CpAlsOptions, CpDecomposition};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::tt::{tt_svd_unique, TtDecomposition, TtTruncation};
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// TT-SVD → CP expansion → equilibration → product Gaussian kernel.
    TtMmk,
    /// Product Gaussian kernel applied to the TT cores directly (order 3 only).
    TtNaive,
    /// Product Gaussian kernel on a CP-ALS fit.
    CpDusk,
    /// Gaussian kernel on the vectorized tensors.
    VectorRbf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::TtMmk,
        KernelKind::TtNaive,
        KernelKind::CpDusk,
        KernelKind::VectorRbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::TtMmk => "ttmmk",
            KernelKind::TtNaive => "tt-naive",
            KernelKind::CpDusk => "cp-dusk",
            KernelKind::VectorRbf => "vector-rbf",
        }
    }

    /// Tag used in the binary file formats.
    pub fn code(self) -> u8 {
        match self {
            KernelKind::TtMmk => 0,
            KernelKind::TtNaive => 1,
            KernelKind::CpDusk => 2,
            KernelKind::VectorRbf => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-").to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Gaussian width, shared by every mode and every CP column.
    pub sigma: f64,
    /// Uniform TT rank, or CP rank for `CpDusk`. Ignored by `VectorRbf`.
    pub rank: usize,
    /// Equalise the column norms of each CP term before the kernel.
    pub equilibrate: bool,
    /// Report `K(x,y)/√(K(x,x)K(y,y))` instead of `K(x,y)`.
    pub normalize: bool,
}

impl KernelConfig {
    /// Defaults: equilibration on for `TtMmk` only, no normalization.
    pub fn new(kind: KernelKind, sigma: f64, rank: usize) -> Self {
        Self {
            kind,
            sigma,
            rank,
            equilibrate: kind == KernelKind::TtMmk,
            normalize: false,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if self.rank < 1 && self.kind != KernelKind::VectorRbf {
            return Err(Error::InvalidArgument(format!("{} needs a rank of at least 1", self.kind)));
        }
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("kernel width {sigma} must be positive and finite")))
    }
}

#[inline]
fn gamma(sigma: f64) -> f64 {
    1.0 / (2.0 * sigma * sigma)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn column(m: &Matrix, r: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[r * n..(r + 1) * n]
}

/// `exp(−‖h − p‖² / (2σ²))`.
pub fn gaussian_rbf(h: &[f64], p: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if h.len() != p.len() {
        return Err(Error::DimensionMismatch(format!("vectors of length {} and {}", h.len(), p.len())));
    }
    Ok((-sq_dist(h, p) * gamma(sigma)).exp())
}

/// `Σ_{i,j} ∏_m k(H^(m)_i, P^(m)_j)` over all column pairs of two CP tensors.
pub fn dusk_cp_kernel(cx: &CpDecomposition, cy: &CpDecomposition, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let mut terms = Vec::new();
    cp_terms(cx, cy, &mut terms)?;
    Ok(sum_gaussians(&terms, gamma(sigma)))
}

/// Product Gaussian kernel on order-3 TT cores, summed over
/// `(r₁, t₁, r₂, t₂)`; the middle arguments are the fibres `G²[r₁, :, r₂]`.
pub fn tt_naive_kernel(tx: &TtDecomposition, ty: &TtDecomposition, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let mut terms = Vec::new();
    tt_terms(tx, ty, &mut terms)?;
    Ok(sum_gaussians(&terms, gamma(sigma)))
}

pub fn vector_rbf_kernel(x: &DenseTensor, y: &DenseTensor, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    x.check_same_dims(y)?;
    Ok((-sq_dist(x.data(), y.data()) * gamma(sigma)).exp())
}

fn sum_gaussians(terms: &[f64], g: f64) -> f64 {
    terms.iter().map(|s| (-s * g).exp()).sum()
}

fn cp_terms(cx: &CpDecomposition, cy: &CpDecomposition, out: &mut Vec<f64>) -> Result<()> {
    if cx.dims() != cy.dims() {
        return Err(Error::DimensionMismatch(format!(
            "CP mode sizes {:?} vs {:?}",
            cx.dims(),
            cy.dims()
        )));
    }
    out.clear();
    let (rx, ry) = (cx.rank(), cy.rank());
    out.resize(rx * ry, 0.0);
    for (fx, fy) in cx.factors().iter().zip(cy.factors()) {
        for j in 0..ry {
            let p = column(fy, j);
            for i in 0..rx {
                out[i + rx * j] += sq_dist(column(fx, i), p);
            }
        }
    }
    Ok(())
}

fn tt_terms(tx: &TtDecomposition, ty: &TtDecomposition, out: &mut Vec<f64>) -> Result<()> {
    for t in [tx, ty] {
        if t.order() != 3 {
            return Err(Error::UnsupportedOrder {
                kernel: "tt-naive",
                expected: 3,
                found: t.order(),
            });
        }
    }
    if tx.dims() != ty.dims() {
        return Err(Error::DimensionMismatch(format!("TT mode sizes {:?} vs {:?}", tx.dims(), ty.dims())));
    }
    let (px, py) = (tx.ranks(), ty.ranks());
    let (rx1, rx2, ry1, ry2) = (px[1], px[2], py[1], py[2]);
    let (gx, gy) = (tx.cores(), ty.cores());

    // Squared distances between boundary fibres, indexed (r, t).
    let boundary = |first: bool| -> Vec<f64> {
        let (nx, ny) = if first { (rx1, ry1) } else { (rx2, ry2) };
        let mut d = vec![0.0; nx * ny];
        for t in 0..ny {
            for r in 0..nx {
                let (a, b) = if first {
                    (gx[0].fiber(0, r), gy[0].fiber(0, t))
                } else {
                    (gx[2].fiber(r, 0), gy[2].fiber(t, 0))
                };
                d[r + nx * t] = sq_dist(&a, &b);
            }
        }
        d
    };
    let d1 = boundary(true);
    let d3 = boundary(false);
    let fibers_x: Vec<Vec<f64>> = (0..rx1 * rx2).map(|k| gx[1].fiber(k % rx1, k / rx1)).collect();
    let fibers_y: Vec<Vec<f64>> = (0..ry1 * ry2).map(|k| gy[1].fiber(k % ry1, k / ry1)).collect();

    out.clear();
    out.reserve(rx1 * ry1 * rx2 * ry2);
    for t2 in 0..ry2 {
        for r2 in 0..rx2 {
            for t1 in 0..ry1 {
                for r1 in 0..rx1 {
                    let mid = sq_dist(&fibers_x[r1 + rx1 * r2], &fibers_y[t1 + ry1 * t2]);
                    out.push(d1[r1 + rx1 * t1] + mid + d3[r2 + rx2 * t2]);
                }
            }
        }
    }
    Ok(())
}

/// A data point in the representation a kernel consumes.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelItem {
    Tensor(DenseTensor),
    Tt(TtDecomposition),
    Cp(CpDecomposition),
}

impl KernelItem {
    fn variant(&self) -> &'static str {
        match self {
            KernelItem::Tensor(_) => "tensor",
            KernelItem::Tt(_) => "TT decomposition",
            KernelItem::Cp(_) => "CP decomposition",
        }
    }

    /// Converts the item into the representation `config.kind` needs,
    /// decomposing raw tensors and expanding trains as required.
    pub fn conform(self, config: &KernelConfig) -> Result<KernelItem> {
        let finish_cp = |cp: CpDecomposition| {
            if config.equilibrate {
                equilibrate_norms(&cp)
            } else {
                cp
            }
        };
        match (config.kind, self) {
            (KernelKind::VectorRbf, item @ KernelItem::Tensor(_)) => Ok(item),
            (KernelKind::TtNaive, item @ KernelItem::Tt(_)) => Ok(item),
            (KernelKind::TtMmk | KernelKind::CpDusk, item @ KernelItem::Cp(_)) => Ok(item),
            (KernelKind::TtMmk, KernelItem::Tt(tt)) => Ok(KernelItem::Cp(finish_cp(tt_to_cp(&tt)))),
            (_, KernelItem::Tensor(x)) => prepare_item(&x, config),
            (kind, item) => Err(Error::InvalidArgument(format!(
                "{kind} kernel cannot use a {}",
                item.variant()
            ))),
        }
    }
}

/// Decomposes one tensor as required by `config`.
pub fn prepare_item(x: &DenseTensor, config: &KernelConfig) -> Result<KernelItem> {
    match config.kind {
        KernelKind::VectorRbf => Ok(KernelItem::Tensor(x.clone())),
        KernelKind::TtNaive => {
            if x.order() != 3 {
                return Err(Error::UnsupportedOrder {
                    kernel: "tt-naive",
                    expected: 3,
                    found: x.order(),
                });
            }
            Ok(KernelItem::Tt(tt_svd_unique(x, TtTruncation::FixedRank(config.rank))?))
        }
        KernelKind::TtMmk => {
            let tt = tt_svd_unique(x, TtTruncation::FixedRank(config.rank))?;
            KernelItem::Tt(tt).conform(config)
        }
        KernelKind::CpDusk => {
            let fit = cp_als(x, &CpAlsOptions::new(config.rank))?;
            let cp = if config.equilibrate {
                equilibrate_norms(&fit.decomposition)
            } else {
                fit.decomposition
            };
            Ok(KernelItem::Cp(cp))
        }
    }
}

/// Decomposes every tensor of a dataset, in parallel; output order follows input.
pub fn prepare_items(data: &[DenseTensor], config: &KernelConfig) -> Result<Vec<KernelItem>> {
    config.validate()?;
    data.par_iter().map(|x| prepare_item(x, config)).collect()
}

fn pair_terms(a: &KernelItem, b: &KernelItem, kind: KernelKind, out: &mut Vec<f64>) -> Result<()> {
    match (kind, a, b) {
        (KernelKind::VectorRbf, KernelItem::Tensor(x), KernelItem::Tensor(y)) => {
            x.check_same_dims(y)?;
            out.clear();
            out.push(sq_dist(x.data(), y.data()));
            Ok(())
        }
        (KernelKind::TtNaive, KernelItem::Tt(x), KernelItem::Tt(y)) => tt_terms(x, y, out),
        (KernelKind::TtMmk | KernelKind::CpDusk, KernelItem::Cp(x), KernelItem::Cp(y)) => cp_terms(x, y, out),
        (kind, a, b) => Err(Error::InvalidArgument(format!(
            "{kind} kernel cannot compare a {} with a {}",
            a.variant(),
            b.variant()
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub values: Matrix,
    pub config: KernelConfig,
    /// Dataset index of each row.
    pub item_ids: Vec<usize>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Kernel matrix over `items` for a single width.
pub fn assemble_gram(items: &[KernelItem], config: &KernelConfig) -> Result<GramMatrix> {
    let mut grams = assemble_gram_sweep(items, config, &[config.sigma])?;
    Ok(grams.remove(0))
}

/// Kernel matrices over `items` for several widths at once. Each unordered
/// pair is reduced once; every cell is written by exactly one task, so the
/// result does not depend on the thread schedule.
pub fn assemble_gram_sweep(items: &[KernelItem], config: &KernelConfig, sigmas: &[f64]) -> Result<Vec<GramMatrix>> {
    for &s in sigmas {
        check_sigma(s)?;
    }
    let n = items.len();
    let gammas: Vec<f64> = sigmas.iter().map(|&s| gamma(s)).collect();
    let rows: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut terms = Vec::new();
            (u..n)
                .map(|v| {
                    pair_terms(&items[u], &items[v], config.kind, &mut terms)?;
                    Ok(gammas.iter().map(|&g| sum_gaussians(&terms, g)).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;

    Ok(sigmas
        .iter()
        .enumerate()
        .map(|(k, &sigma)| {
            let mut values = Matrix::zeros(n, n);
            for (u, row) in rows.iter().enumerate() {
                for (off, vals) in row.iter().enumerate() {
                    let v = u + off;
                    values[(u, v)] = vals[k];
                    values[(v, u)] = vals[k];
                }
            }
            if config.normalize {
                let diag: Vec<f64> = (0..n).map(|i| values[(i, i)]).collect();
                for v in 0..n {
                    for u in 0..n {
                        values[(u, v)] /= (diag[u] * diag[v]).sqrt();
                    }
                }
            }
            GramMatrix {
                values,
                config: config.with_sigma(sigma),
                item_ids: (0..n).collect(),
            }
        })
        .collect())
}

/// Kernel values between test and training items, `n_test × n_train`.
pub fn cross_kernel(train: &[KernelItem], test: &[KernelItem], config: &KernelConfig) -> Result<Matrix> {
    config.validate()?;
    let g = gamma(config.sigma);
    let self_kernel = |item: &KernelItem| -> Result<f64> {
        let mut terms = Vec::new();
        pair_terms(item, item, config.kind, &mut terms)?;
        Ok(sum_gaussians(&terms, g))
    };
    let rows: Vec<Vec<f64>> = test
        .par_iter()
        .map(|x| {
            let mut terms = Vec::new();
            let norm_x = if config.normalize { self_kernel(x)? } else { 1.0 };
            train
                .iter()
                .map(|y| {
                    pair_terms(x, y, config.kind, &mut terms)?;
                    let k = sum_gaussians(&terms, g);
                    if config.normalize {
                        Ok(k / (norm_x * self_kernel(y)?).sqrt())
                    } else {
                        Ok(k)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_fn(test.len(), train.len(), |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig_descending;
    use crate::tt::TtCore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cp(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> CpDecomposition {
        CpDecomposition::new(
            dims.iter()
                .map(|&d| Matrix::from_fn(d, rank, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn random_tt(rng: &mut ChaCha8Rng, dims: &[usize], ranks: &[usize]) -> TtDecomposition {
        let cores = dims
            .iter()
            .enumerate()
            .map(|(m, &d)| {
                let len = ranks[m] * d * ranks[m + 1];
                TtCore::new(ranks[m], d, ranks[m + 1], (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        TtDecomposition::new(cores).unwrap()
    }

    fn col(m: &Matrix, r: usize) -> Vec<f64> {
        m.column(r).iter().copied().collect()
    }

    /// Double loop of per-mode Gaussian products.
    fn dusk_oracle(cx: &CpDecomposition, cy: &CpDecomposition, sigma: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..cx.rank() {
            for j in 0..cy.rank() {
                let mut prod = 1.0;
                for (fx, fy) in cx.factors().iter().zip(cy.factors()) {
                    prod *= gaussian_rbf(&col(fx, i), &col(fy, j), sigma).unwrap();
                }
                total += prod;
            }
        }
        total
    }

    fn naive_oracle(tx: &TtDecomposition, ty: &TtDecomposition, sigma: f64) -> f64 {
        let (p, q) = (tx.ranks(), ty.ranks());
        let (gx, gy) = (tx.cores(), ty.cores());
        let mut total = 0.0;
        for r1 in 0..p[1] {
            for t1 in 0..q[1] {
                for r2 in 0..p[2] {
                    for t2 in 0..q[2] {
                        total += gaussian_rbf(&gx[0].fiber(0, r1), &gy[0].fiber(0, t1), sigma).unwrap()
                            * gaussian_rbf(&gx[1].fiber(r1, r2), &gy[1].fiber(t1, t2), sigma).unwrap()
                            * gaussian_rbf(&gx[2].fiber(r2, 0), &gy[2].fiber(t2, 0), sigma).unwrap();
                    }
                }
            }
        }
        total
    }

    #[test]
    fn gaussian_examples() {
        let h = [0.3, -1.0, 2.0];
        assert_eq!(gaussian_rbf(&h, &h, 0.7).unwrap(), 1.0);
        let sigma = 1.5f64;
        // ‖h − p‖² = 2σ² along one axis.
        let p = [0.3 + (2.0f64).sqrt() * sigma, -1.0, 2.0];
        assert!((gaussian_rbf(&h, &p, sigma).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(((-1.0f64).exp() - 0.3678794).abs() < 1e-7);
        assert_eq!(gaussian_rbf(&h, &p, sigma).unwrap(), gaussian_rbf(&p, &h, sigma).unwrap());
        assert!(gaussian_rbf(&h, &p[..2], 1.0).is_err());
        assert!(gaussian_rbf(&h, &h, 0.0).is_err());
        assert!(gaussian_rbf(&h, &h, -1.0).is_err());
    }

    #[test]
    fn dusk_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cp(&mut rng, &[3, 4, 2], 1);
        assert_eq!(dusk_cp_kernel(&a, &a, 0.8).unwrap(), 1.0);

        let b = random_cp(&mut rng, &[3, 4, 2], 1);
        let sigma = 0.9;
        let d2: f64 = a.factors().iter().zip(b.factors()).map(|(x, y)| (x - y).norm_squared()).sum();
        let expected = (-d2 / (2.0 * sigma * sigma)).exp();
        assert!((dusk_cp_kernel(&a, &b, sigma).unwrap() - expected).abs() <= 1e-15 * expected);

        for (rx, ry) in [(2, 3), (3, 2), (3, 3)] {
            let x = random_cp(&mut rng, &[4, 3, 5], rx);
            let y = random_cp(&mut rng, &[4, 3, 5], ry);
            let k = dusk_cp_kernel(&x, &y, 1.1).unwrap();
            let o = dusk_oracle(&x, &y, 1.1);
            assert!((k - o).abs() <= 1e-14 * o);
            assert!((k - dusk_cp_kernel(&y, &x, 1.1).unwrap()).abs() <= 1e-15 * k);
        }
        let mismatched = random_cp(&mut rng, &[4, 3, 4], 1);
        assert!(dusk_cp_kernel(&a, &mismatched, 1.0).is_err());
    }

    #[test]
    fn naive_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_tt(&mut rng, &[3, 4, 2], &[1, 1, 1, 1]);
        assert_eq!(tt_naive_kernel(&a, &a, 0.5).unwrap(), 1.0);

        let b = random_tt(&mut rng, &[3, 4, 2], &[1, 1, 1, 1]);
        let expected: f64 = a
            .cores()
            .iter()
            .zip(b.cores())
            .map(|(x, y)| gaussian_rbf(x.data(), y.data(), 0.7).unwrap())
            .product();
        let k = tt_naive_kernel(&a, &b, 0.7).unwrap();
        assert!((k - expected).abs() <= 1e-14 * expected);

        let x = random_tt(&mut rng, &[3, 4, 2], &[1, 2, 2, 1]);
        let y = random_tt(&mut rng, &[3, 4, 2], &[1, 2, 2, 1]);
        let k = tt_naive_kernel(&x, &y, 1.3).unwrap();
        let o = naive_oracle(&x, &y, 1.3);
        assert!((k - o).abs() <= 1e-14 * o);

        let four = random_tt(&mut rng, &[2, 2, 2, 2], &[1, 1, 1, 1, 1]);
        assert!(matches!(tt_naive_kernel(&four, &four, 1.0), Err(Error::UnsupportedOrder { .. })));
        let other_ranks = random_tt(&mut rng, &[3, 4, 2], &[1, 3, 1, 1]);
        let k = tt_naive_kernel(&x, &other_ranks, 0.9).unwrap();
        let o = naive_oracle(&x, &other_ranks, 0.9);
        assert!((k - o).abs() <= 1e-14 * o);
        assert!((k - tt_naive_kernel(&other_ranks, &x, 0.9).unwrap()).abs() <= 1e-15 * k);
        let other_dims = random_tt(&mut rng, &[3, 4, 3], &[1, 2, 2, 1]);
        assert!(tt_naive_kernel(&x, &other_dims, 1.0).is_err());
    }

    #[test]
    fn vector_rbf_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DenseTensor::from_fn(&[2, 3, 2], |_| rng.random_range(-1.0..1.0)).unwrap();
        assert_eq!(vector_rbf_kernel(&x, &x, 0.3).unwrap(), 1.0);
        let sigma = 0.25;
        let mut shifted = x.data().to_vec();
        shifted[5] += 2f64.sqrt() * sigma;
        let y = DenseTensor::new(x.dims().to_vec(), shifted).unwrap();
        assert!((vector_rbf_kernel(&x, &y, sigma).unwrap() - (-1.0f64).exp()).abs() < 1e-15);

        // A fixed permutation applied to both inputs leaves the value unchanged.
        let perm = |t: &DenseTensor| {
            let mut d = t.data().to_vec();
            d.reverse();
            d.swap(0, 3);
            DenseTensor::new(vec![12], d).unwrap()
        };
        let k = vector_rbf_kernel(&x, &y, 0.9).unwrap();
        let kp = vector_rbf_kernel(&perm(&x), &perm(&y), 0.9).unwrap();
        assert!((k - kp).abs() < 1e-15);
        assert!(vector_rbf_kernel(&x, &DenseTensor::zeros(&[12]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn gram_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cp = random_cp(&mut rng, &[3, 3, 3], 2);
        let config = KernelConfig::new(KernelKind::TtMmk, 0.9, 2);
        let g = assemble_gram(&[KernelItem::Cp(cp.clone())], &config).unwrap();
        assert!(g.values[(0, 0)] >= 1.0);
        let rank_one = random_cp(&mut rng, &[3, 3, 3], 1);
        let g1 = assemble_gram(&[KernelItem::Cp(rank_one)], &config).unwrap();
        assert_eq!(g1.values[(0, 0)], 1.0);

        let pair = [KernelItem::Cp(cp.clone()), KernelItem::Cp(cp)];
        let g2 = assemble_gram(&pair, &config).unwrap();
        assert!(g2.values.iter().all(|&v| v == g2.values[(0, 0)]));

        let items: Vec<KernelItem> = (0..5).map(|_| KernelItem::Cp(random_cp(&mut rng, &[3, 4, 2], 2))).collect();
        let g5 = assemble_gram(&items, &config).unwrap();
        for u in 0..5 {
            for v in 0..5 {
                let (KernelItem::Cp(a), KernelItem::Cp(b)) = (&items[u], &items[v]) else { unreachable!() };
                assert_eq!(g5.values[(u, v)], dusk_cp_kernel(a, b, 0.9).unwrap());
            }
        }
        assert_eq!(g5.item_ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn gram_sweep_matches_single_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let items: Vec<KernelItem> = (0..6).map(|_| KernelItem::Cp(random_cp(&mut rng, &[3, 2, 4], 3))).collect();
        let config = KernelConfig::new(KernelKind::TtMmk, 1.0, 2);
        let sigmas = [0.25, 1.0, 4.0];
        let sweep = assemble_gram_sweep(&items, &config, &sigmas).unwrap();
        for (g, &s) in sweep.iter().zip(&sigmas) {
            assert_eq!(g, &assemble_gram(&items, &config.with_sigma(s)).unwrap());
        }
    }

    #[test]
    fn gram_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let n = rng.random_range(2..20);
            let items: Vec<KernelItem> = (0..n).map(|_| KernelItem::Cp(random_cp(&mut rng, &[3, 3, 2], 2))).collect();
            let g = assemble_gram(&items, &KernelConfig::new(KernelKind::TtMmk, 0.7, 2)).unwrap();
            let (vals, _) = sym_eig_descending(&g.values).unwrap();
            assert!(vals[n - 1] >= -1e-8 * g.values.trace());
        }
    }

    #[test]
    fn normalization_puts_ones_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let items: Vec<KernelItem> = (0..4).map(|_| KernelItem::Cp(random_cp(&mut rng, &[3, 3, 3], 3))).collect();
        let mut config = KernelConfig::new(KernelKind::TtMmk, 1.0, 2);
        config.normalize = true;
        let g = assemble_gram(&items, &config).unwrap();
        for i in 0..4 {
            assert!((g.values[(i, i)] - 1.0).abs() < 1e-15);
        }
        let cross = cross_kernel(&items, &items, &config).unwrap();
        assert!((cross - &g.values).amax() < 1e-14);
    }

    #[test]
    fn equilibration_removes_gauge_dependence() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_cp(&mut rng, &[3, 4, 2], 1);
        let b = random_cp(&mut rng, &[3, 4, 2], 1);
        let gauged = |cp: &CpDecomposition, c: f64| {
            let mut f = cp.factors().to_vec();
            f[0] *= c;
            f[1] /= c;
            CpDecomposition::new(f).unwrap()
        };
        let a2 = gauged(&a, 3.0);
        let raw = dusk_cp_kernel(&a, &b, 1.0).unwrap();
        let raw_gauged = dusk_cp_kernel(&a2, &b, 1.0).unwrap();
        assert!((raw - raw_gauged).abs() > 1e-6);
        let eq = dusk_cp_kernel(&equilibrate_norms(&a), &equilibrate_norms(&b), 1.0).unwrap();
        let eq_gauged = dusk_cp_kernel(&equilibrate_norms(&a2), &equilibrate_norms(&gauged(&b, 0.2)), 1.0).unwrap();
        assert!((eq - eq_gauged).abs() <= 1e-12 * eq);
    }

    #[test]
    fn kinds_roundtrip_and_item_checks() {
        for kind in KernelKind::ALL {
            assert_eq!(kind.name().parse::<KernelKind>().unwrap(), kind);
            assert_eq!(KernelKind::from_code(kind.code()), Some(kind));
        }
        assert_eq!("tt_naive".parse::<KernelKind>().unwrap(), KernelKind::TtNaive);
        assert!("svm".parse::<KernelKind>().is_err());

        let x = DenseTensor::zeros(&[2, 2, 2, 2]).unwrap();
        let config = KernelConfig::new(KernelKind::TtNaive, 1.0, 2);
        assert!(matches!(prepare_item(&x, &config), Err(Error::UnsupportedOrder { .. })));
        let items = [KernelItem::Tensor(x.clone()), KernelItem::Tensor(x)];
        assert!(assemble_gram(&items, &KernelConfig::new(KernelKind::TtMmk, 1.0, 2)).is_err());
        assert!(KernelConfig::new(KernelKind::TtMmk, 0.0, 2).validate().is_err());
        assert!(KernelConfig::new(KernelKind::TtMmk, 1.0, 0).validate().is_err());
    }

    #[test]
    fn ttmmk_equals_cp_dusk_on_same_cp() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let items: Vec<KernelItem> = (0..4).map(|_| KernelItem::Cp(random_cp(&mut rng, &[2, 3, 2], 2))).collect();
        let a = assemble_gram(&items, &KernelConfig::new(KernelKind::TtMmk, 0.6, 2)).unwrap();
        let b = assemble_gram(&items, &KernelConfig::new(KernelKind::CpDusk, 0.6, 2)).unwrap();
        assert_eq!(a.values, b.values);
    }
}
