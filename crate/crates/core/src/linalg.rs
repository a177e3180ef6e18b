//! Deterministic dense factorizations.
//!
//! The SVD is a one-sided Jacobi iteration with a fixed cyclic pivot order;
//! the eigensolver wraps nalgebra's symmetric QR. Neither uses
//! randomization, so bit-identical input yields bit-identical output, which
//! the sign-canonical TT-SVD relies on.
//!
//! nalgebra's bidiagonal SVD is not used: on rank-deficient wide matrices it
//! can return singular triplets that reconstruct the input with O(1e-2)
//! error, which breaks re-decomposition of truncated trains.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSvd {
    /// `n × r`, orthonormal columns.
    pub u: Matrix,
    /// Singular values, non-increasing.
    pub s: Vec<f64>,
    /// `r × k`, orthonormal rows.
    pub vt: Matrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (mut col, &s) in us.column_iter_mut().zip(&self.s) {
            col *= s;
        }
        us * &self.vt
    }
}

/// Smallest rank `r` whose discarded tail satisfies `(Σ_{i≥r} s_i²)^{1/2} ≤ delta`.
pub fn truncation_rank(s: &[f64], delta: f64) -> usize {
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 0 {
        let next = tail + s[r - 1] * s[r - 1];
        if next.sqrt() > delta {
            break;
        }
        tail = next;
        r -= 1;
    }
    r
}

/// δ-truncated SVD of `z`, additionally capped at `rmax` terms.
///
/// Singular values below `max(n, k)·ε·s₁` are treated as exact zeros.
/// The returned rank is never below 1; for `z = 0` the single term is
/// `e₁ · 0 · 0ᵀ`.
pub fn svd_truncated(z: &Matrix, delta: f64, rmax: Option<usize>) -> Result<TruncatedSvd> {
    let (n, k) = z.shape();
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("cannot factor an empty {n}x{k} matrix")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("truncation threshold {delta} is negative")));
    }
    if rmax == Some(0) {
        return Err(Error::InvalidArgument("rank cap must be at least 1".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if z.iter().all(|&v| v == 0.0) {
        let mut u = Matrix::zeros(n, 1);
        u[(0, 0)] = 1.0;
        return Ok(TruncatedSvd {
            u,
            s: vec![0.0],
            vt: Matrix::zeros(1, k),
        });
    }

    let (u, values, vt) = jacobi_svd(z);

    // Stable descending order.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let floor = n.max(k) as f64 * f64::EPSILON * values[order[0]];
    let s_sorted: Vec<f64> = order
        .iter()
        .map(|&i| if values[i] <= floor { 0.0 } else { values[i] })
        .collect();
    let mut r = truncation_rank(&s_sorted, delta).max(1);
    if let Some(cap) = rmax {
        r = r.min(cap);
    }

    let mut u_out = Matrix::zeros(n, r);
    let mut vt_out = Matrix::zeros(r, k);
    for (dst, &src) in order.iter().take(r).enumerate() {
        u_out.set_column(dst, &u.column(src));
        vt_out.set_row(dst, &vt.row(src));
    }
    Ok(TruncatedSvd {
        u: u_out,
        s: s_sorted[..r].to_vec(),
        vt: vt_out,
    })
}

const MAX_SWEEPS: usize = 80;

/// Thin SVD `z = u·diag(s)·vt` by one-sided Jacobi rotations, unsorted.
/// Left vectors of exactly zero singular values are left as zero columns.
fn jacobi_svd(z: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (n, k) = z.shape();
    if n < k {
        let (u, s, vt) = jacobi_svd(&z.transpose());
        return (vt.transpose(), s, u.transpose());
    }
    // Orthogonalize the columns of `a`; `v` accumulates the rotations.
    let mut a = z.clone();
    let mut v = Matrix::identity(k, k);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (alpha, beta, gamma) = {
                    let cp = a.column(p);
                    let cq = a.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = Vec::with_capacity(k);
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        s.push(norm);
    }
    (a, s, v.transpose())
}

fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in
/// descending order; column `i` of the returned matrix pairs with value `i`.
pub fn sym_eig_descending(g: &Matrix) -> Result<(DVector<f64>, Matrix)> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = g.amax().max(1.0);
    let deviation = (g - g.transpose()).amax();
    if deviation > 1e-10 * scale {
        return Err(Error::NotSymmetric { deviation });
    }
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(g.nrows(), g.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}
