//! Dense M-way tensors and the algebra the decompositions are built on.
//!
//! Storage is column-major with the first index fastest, so the mode-0
//! unfolding is a reinterpretation of the flat buffer. Mode indices are
//! zero-based throughout the crate.

use crate::error::{Error, Result};
use crate::Matrix;

/// Highest tensor order accepted at construction.
pub const MAX_ORDER: usize = 8;
/// Largest element count accepted at construction.
pub const MAX_ELEMENTS: usize = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::PayloadMismatch {
                expected: len,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_len(dims)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(i < d);
            lin += i * stride;
            stride *= d;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Mode-`mode` unfolding: an `I_mode × ∏_{k≠mode} I_k` matrix whose
    /// column index runs over the remaining modes with the lowest mode fastest.
    pub fn matricize(&self, mode: usize) -> Result<Matrix> {
        let (left, size, right) = self.split_at_mode(mode)?;
        let mut out = Matrix::zeros(size, left * right);
        for r in 0..right {
            for i in 0..size {
                let src = left * (i + size * r);
                for l in 0..left {
                    out[(i, l + left * r)] = self.data[src + l];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn from_matricized(mat: &Matrix, mode: usize, dims: &[usize]) -> Result<Self> {
        let mut out = Self::zeros(dims)?;
        let (left, size, right) = out.split_at_mode(mode)?;
        if mat.nrows() != size || mat.ncols() != left * right {
            return Err(Error::DimensionMismatch(format!(
                "unfolding is {}x{}, dims {:?} need {}x{}",
                mat.nrows(),
                mat.ncols(),
                dims,
                size,
                left * right
            )));
        }
        for r in 0..right {
            for i in 0..size {
                let dst = left * (i + size * r);
                for l in 0..left {
                    out.data[dst + l] = mat[(i, l + left * r)];
                }
            }
        }
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Mode-`mode` product with a `J × I_mode` matrix.
    pub fn mode_product(&self, mode: usize, a: &Matrix) -> Result<Self> {
        let (left, size, right) = self.split_at_mode(mode)?;
        if a.ncols() != size {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, mode {} has size {}",
                a.ncols(),
                mode,
                size
            )));
        }
        let j_len = a.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = j_len;
        let mut out = Self::zeros(&dims)?;
        for r in 0..right {
            for i in 0..size {
                let src = left * (i + size * r);
                for j in 0..j_len {
                    let w = a[(j, i)];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = left * (j + j_len * r);
                    for l in 0..left {
                        out.data[dst + l] += w * self.data[src + l];
                    }
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// `(∏_{k<mode} I_k, I_mode, ∏_{k>mode} I_k)`.
    fn split_at_mode(&self, mode: usize) -> Result<(usize, usize, usize)> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.dims.len(),
            });
        }
        let left = self.dims[..mode].iter().product();
        let right = self.dims[mode + 1..].iter().product();
        Ok((left, self.dims[mode], right))
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidTensor("tensor order must be at least 1".into()));
    }
    if dims.len() > MAX_ORDER {
        return Err(Error::InvalidTensor(format!(
            "order {} exceeds the maximum of {MAX_ORDER}",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidTensor(format!("zero-length mode in {dims:?}")));
    }
    let mut len: usize = 1;
    for &d in dims {
        len = len
            .checked_mul(d)
            .filter(|&l| l <= MAX_ELEMENTS)
            .ok_or_else(|| {
                Error::InvalidTensor(format!("{dims:?} exceeds {MAX_ELEMENTS} elements"))
            })?;
    }
    Ok(len)
}

/// Advances a column-major multi-index.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

/// Column-wise Kronecker product: column `r` of the result is `a_r ⊗ b_r`,
/// with the row index of `b` running fastest.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "khatri-rao operands have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ia, kb) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(ia * kb, a.ncols());
    for r in 0..a.ncols() {
        for i in 0..ia {
            let ai = a[(i, r)];
            for k in 0..kb {
                out[(i * kb + k, r)] = ai * b[(k, r)];
            }
        }
    }
    Ok(out)
}

/// Reference constructions used only to check the decompositions.
#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Outer product `a₁ ∘ a₂ ∘ … ∘ a_M`, entry by entry.
    pub fn outer_product(vectors: &[&[f64]]) -> DenseTensor {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        DenseTensor::from_fn(&dims, |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        })
        .unwrap()
    }

    /// Mode-(M,1) contracted product of `a ∈ ℝ^{I₁×…×I_M}` and
    /// `b ∈ ℝ^{J₁×…×J_N}` with `I_M = J₁`.
    pub fn contracted_product(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
        let m = a.order();
        assert_eq!(a.dims()[m - 1], b.dims()[0]);
        let shared = b.dims()[0];
        let mut dims: Vec<usize> = a.dims()[..m - 1].to_vec();
        dims.extend_from_slice(&b.dims()[1..]);
        DenseTensor::from_fn(&dims, |idx| {
            let (ia, ib) = idx.split_at(m - 1);
            (0..shared)
                .map(|s| {
                    let mut full_a = ia.to_vec();
                    full_a.push(s);
                    let mut full_b = vec![s];
                    full_b.extend_from_slice(ib);
                    a.get(&full_a) * b.get(&full_b)
                })
                .sum()
        })
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_to_eight() -> DenseTensor {
        DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap()
    }

    /// Column index of the 1-based unfolding formula `1 + Σ_{k≠m} (i_k − 1) J_k`.
    fn unfolding_column(idx1: &[usize], dims: &[usize], m: usize) -> usize {
        let mut j = 1;
        for k in 0..dims.len() {
            if k == m {
                continue;
            }
            let jk: usize = (0..k).filter(|&l| l != m).map(|l| dims[l]).product();
            j += (idx1[k] - 1) * jk;
        }
        j
    }

    #[test]
    fn matricize_matches_index_formula() {
        let x = DenseTensor::from_fn(&[2, 2, 2], |i| (1 + i[0] + 2 * i[1] + 4 * i[2]) as f64).unwrap();
        assert_eq!(x, one_to_eight());
        for m in 0..3 {
            let mat = x.matricize(m).unwrap();
            let mut idx = vec![0; 3];
            for _ in 0..8 {
                let idx1: Vec<usize> = idx.iter().map(|i| i + 1).collect();
                let col = unfolding_column(&idx1, x.dims(), m) - 1;
                assert_eq!(mat[(idx[m], col)], x.get(&idx));
                increment(&mut idx, x.dims());
            }
        }
        let m1 = x.matricize(0).unwrap();
        let expected = Matrix::from_row_slice(2, 4, &[1., 3., 5., 7., 2., 4., 6., 8.]);
        assert_eq!(m1, expected);
    }

    #[test]
    fn matricize_order_one_keeps_the_data() {
        // I_1 rows, one (empty-product) column.
        let x = DenseTensor::new(vec![4], vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(x.matricize(0).unwrap(), Matrix::from_column_slice(4, 1, &[1., 2., 3., 4.]));
    }

    #[test]
    fn matricize_rejects_bad_mode() {
        let err = one_to_eight().matricize(3).unwrap_err();
        assert!(matches!(err, Error::ModeOutOfRange { mode: 3, order: 3 }));
    }

    #[test]
    fn inner_and_norm() {
        let x = one_to_eight();
        assert_eq!(x.inner(&x).unwrap(), 204.0);
        assert_eq!(x.frobenius_norm(), 204f64.sqrt());
        let z = DenseTensor::zeros(&[2, 2, 2]).unwrap();
        assert_eq!(x.inner(&z).unwrap(), 0.0);
        assert_eq!(z.frobenius_norm(), 0.0);
        assert!((x.scaled(-3.0).frobenius_norm() - 3.0 * 204f64.sqrt()).abs() < 1e-12);
        let y = DenseTensor::zeros(&[2, 4]).unwrap();
        assert!(matches!(x.inner(&y), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn khatri_rao_examples() {
        let a = Matrix::from_column_slice(2, 1, &[1., 2.]);
        let b = Matrix::from_column_slice(2, 1, &[3., 4.]);
        assert_eq!(
            khatri_rao(&a, &b).unwrap(),
            Matrix::from_column_slice(4, 1, &[3., 4., 6., 8.])
        );
        let ones = Matrix::from_element(1, 3, 1.0);
        let b = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(khatri_rao(&ones, &b).unwrap(), b);
        let empty = khatri_rao(&Matrix::zeros(3, 0), &Matrix::zeros(5, 0)).unwrap();
        assert_eq!(empty.shape(), (15, 0));
        assert!(khatri_rao(&Matrix::zeros(3, 1), &Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn mode_product_examples() {
        let x = one_to_eight();
        let y = x.mode_product(0, &Matrix::from_row_slice(1, 2, &[1., 1.])).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2]);
        assert_eq!(y.data(), &[3., 7., 11., 15.]);
        assert_eq!(x.mode_product(1, &Matrix::identity(2, 2)).unwrap(), x);

        let xm = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let a = Matrix::from_row_slice(2, 2, &[1., 2., -1., 0.5]);
        let prod = xm.mode_product(0, &a).unwrap();
        let expected = &a * xm.matricize(0).unwrap();
        assert_eq!(prod.matricize(0).unwrap(), expected);
        assert!(x.mode_product(2, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn construction_limits() {
        assert!(DenseTensor::zeros(&[]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
        assert!(DenseTensor::zeros(&[1; 9]).is_err());
        assert!(DenseTensor::zeros(&[10_000, 10_001]).is_err());
        assert!(matches!(
            DenseTensor::new(vec![2, 2], vec![0.0; 3]),
            Err(Error::PayloadMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn contracted_product_of_matrices_is_matmul() {
        let a = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let b = DenseTensor::new(vec![3, 2], (0..6).map(|v| v as f64 - 1.0).collect()).unwrap();
        let c = oracle::contracted_product(&a, &b);
        let expected = a.matricize(0).unwrap() * b.matricize(0).unwrap();
        assert_eq!(c.matricize(0).unwrap(), expected);
    }

    fn tensor_strategy(max_order: usize) -> impl Strategy<Value = DenseTensor> {
        prop::collection::vec(1usize..4, 1..=max_order).prop_flat_map(|dims| {
            let len: usize = dims.iter().product();
            prop::collection::vec(-10.0f64..10.0, len)
                .prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matricize_roundtrip(x in tensor_strategy(5)) {
            for m in 0..x.order() {
                let mat = x.matricize(m).unwrap();
                prop_assert_eq!(&DenseTensor::from_matricized(&mat, m, x.dims()).unwrap(), &x);
            }
        }

        #[test]
        fn inner_is_symmetric(x in tensor_strategy(4), seed in any::<u64>()) {
            let y = DenseTensor::from_fn(x.dims(), |i| {
                let h = i.iter().fold(seed, |acc, &v| acc.wrapping_mul(6364136223846793005).wrapping_add(v as u64 + 1));
                (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            }).unwrap();
            prop_assert_eq!(x.inner(&y).unwrap(), y.inner(&x).unwrap());
        }

        #[test]
        fn mode_product_adjoint(x in tensor_strategy(4), j in 1usize..4, fill in -3.0f64..3.0) {
            let m = x.order() - 1;
            let a = Matrix::from_fn(j, x.dims()[m], |r, c| fill * (r as f64 + 1.0) - c as f64);
            let ax = x.mode_product(m, &a).unwrap();
            let y = DenseTensor::from_fn(ax.dims(), |i| i.iter().sum::<usize>() as f64 - 1.5).unwrap();
            let lhs = ax.inner(&y).unwrap();
            let rhs = x.inner(&y.mode_product(m, &a.transpose()).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
            prop_assert_eq!(ax.matricize(m).unwrap(), &a * x.matricize(m).unwrap());
        }

        #[test]
        fn khatri_rao_column_norms(
            a in prop::collection::vec(-5.0f64..5.0, 6),
            b in prop::collection::vec(-5.0f64..5.0, 8),
        ) {
            let a = Matrix::from_column_slice(3, 2, &a);
            let b = Matrix::from_column_slice(4, 2, &b);
            let kr = khatri_rao(&a, &b).unwrap();
            for r in 0..2 {
                let expected = a.column(r).norm() * b.column(r).norm();
                prop_assert!((kr.column(r).norm() - expected).abs() <= 1e-13 * expected.max(1.0));
            }
        }
    }
}
