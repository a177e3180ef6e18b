//! Tensor-train decomposition with sign-canonical singular vectors.
//!
//! Each left singular vector produced during the sweep is flipped so that
//! its largest-magnitude entry (first one on ties) is positive, with the
//! matching right vector flipped alongside. For simple singular values
//! this removes the only freedom the SVD leaves, so the cores become a
//! function of the tensor rather than of rounding noise.

use crate::error::{Error, Result};
use crate::linalg::svd_truncated;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// One order-3 core of shape `left × size × right`, column-major with the
/// left rank index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TtCore {
    left: usize,
    size: usize,
    right: usize,
    data: Vec<f64>,
}

impl TtCore {
    pub fn new(left: usize, size: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || size == 0 || right == 0 {
            return Err(Error::InvalidTt(format!("core shape {left}x{size}x{right} has a zero extent")));
        }
        if data.len() != left * size * right {
            return Err(Error::PayloadMismatch {
                expected: left * size * right,
                found: data.len(),
            });
        }
        Ok(Self {
            left,
            size,
            right,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.left, self.size, self.right)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[a + self.left * (i + self.size * b)]
    }

    #[inline]
    pub fn get_mut(&mut self, a: usize, i: usize, b: usize) -> &mut f64 {
        &mut self.data[a + self.left * (i + self.size * b)]
    }

    /// The mode fibre `G[a, :, b]`.
    pub fn fiber(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.size).map(|i| self.get(a, i, b)).collect()
    }

    /// Left unfolding, `(left·size) × right`.
    pub fn left_unfolding(&self) -> Matrix {
        Matrix::from_column_slice(self.left * self.size, self.right, &self.data)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TtDecomposition {
    cores: Vec<TtCore>,
}

impl TtDecomposition {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        let (first, last) = match (cores.first(), cores.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidTt("no cores".into())),
        };
        if first.left != 1 || last.right != 1 {
            return Err(Error::InvalidTt(format!(
                "boundary ranks must be 1, got {} and {}",
                first.left, last.right
            )));
        }
        for (m, pair) in cores.windows(2).enumerate() {
            if pair[0].right != pair[1].left {
                return Err(Error::InvalidTt(format!(
                    "core {m} has right rank {} but core {} has left rank {}",
                    pair[0].right,
                    m + 1,
                    pair[1].left
                )));
            }
        }
        if cores.len() > crate::tensor::MAX_ORDER {
            return Err(Error::InvalidTt(format!("order {} is too large", cores.len())));
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn cores_mut(&mut self) -> &mut [TtCore] {
        &mut self.cores
    }

    pub fn into_cores(self) -> Vec<TtCore> {
        self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.size).collect()
    }

    /// `(R₀, R₁, …, R_M)`.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.cores.iter().map(|c| c.right)).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor> {
        tt_reconstruct(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TtTruncation {
    /// Relative Frobenius error bound ε for the whole train.
    Threshold(f64),
    /// Cap every internal rank at `R`.
    FixedRank(usize),
}

/// Flips column pairs so that each column of `u` has a strictly positive
/// largest-magnitude entry; ties go to the first such entry.
pub fn canonicalize_signs(u: &Matrix, vt: &Matrix) -> Result<(Matrix, Matrix)> {
    if u.ncols() != vt.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} columns, vt has {} rows",
            u.ncols(),
            vt.nrows()
        )));
    }
    let mut u = u.clone();
    let mut vt = vt.clone();
    for r in 0..u.ncols() {
        let mut pivot = 0.0f64;
        for &v in u.column(r).iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot == 0.0 {
            return Err(Error::ZeroColumn { column: r });
        }
        if pivot < 0.0 {
            u.column_mut(r).neg_mut();
            vt.row_mut(r).neg_mut();
        }
    }
    Ok((u, vt))
}

/// TT-SVD with sign canonicalization of every left factor.
///
/// In threshold mode each of the `M − 1` truncations discards at most
/// `ε‖x‖_F / √(M−1)`, so the full train is within `ε‖x‖_F` of `x`.
pub fn tt_svd_unique(x: &DenseTensor, mode: TtTruncation) -> Result<TtDecomposition> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let dims = x.dims();
    let order = dims.len();
    let (delta, cap) = match mode {
        TtTruncation::Threshold(eps) => {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(Error::InvalidArgument(format!("relative threshold {eps} must be finite and >= 0")));
            }
            let delta = if order > 1 {
                eps * x.frobenius_norm() / ((order - 1) as f64).sqrt()
            } else {
                0.0
            };
            (delta, None)
        }
        TtTruncation::FixedRank(r) => {
            if r < 1 {
                return Err(Error::InvalidArgument("TT rank must be at least 1".into()));
            }
            (0.0, Some(r))
        }
    };

    let mut cores = Vec::with_capacity(order);
    let mut left_rank = 1;
    let mut remainder: Vec<f64> = x.data().to_vec();
    for &size in &dims[..order - 1] {
        let rows = left_rank * size;
        let cols = remainder.len() / rows;
        let z = Matrix::from_column_slice(rows, cols, &remainder);
        let svd = svd_truncated(&z, delta, cap)?;
        let (u, vt) = canonicalize_signs(&svd.u, &svd.vt)?;
        let rank = svd.rank();
        cores.push(TtCore::new(left_rank, size, rank, u.as_slice().to_vec())?);

        let mut next = vt;
        for (mut row, &s) in next.row_iter_mut().zip(&svd.s) {
            row *= s;
        }
        remainder = next.as_slice().to_vec();
        left_rank = rank;
    }
    cores.push(TtCore::new(left_rank, dims[order - 1], 1, remainder)?);
    TtDecomposition::new(cores)
}

/// Full tensor represented by a train, contracting left to right.
pub fn tt_reconstruct(t: &TtDecomposition) -> Result<DenseTensor> {
    let dims = t.dims();
    // `acc` is the (∏ processed dims) × R_m partial product, column-major.
    let mut acc = vec![1.0];
    let mut rows = 1usize;
    for core in t.cores() {
        let (left, size, right) = core.shape();
        let mut next = vec![0.0; rows * size * right];
        for b in 0..right {
            for i in 0..size {
                let dst = rows * (i + size * b);
                for a in 0..left {
                    let g = core.get(a, i, b);
                    if g == 0.0 {
                        continue;
                    }
                    let src = &acc[rows * a..rows * (a + 1)];
                    for (d, s) in next[dst..dst + rows].iter_mut().zip(src) {
                        *d += s * g;
                    }
                }
            }
        }
        acc = next;
        rows *= size;
    }
    DenseTensor::new(dims, acc)
}
