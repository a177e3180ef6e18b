//! Support tensor machines built on tensor-train decompositions.
//!
//! The pipeline decomposes each data tensor with a sign-canonical TT-SVD,
//! expands the train into an equivalent CP (Kruskal) form, equalises the
//! column norms of every rank-one term, and then compares tensors with a
//! sum-of-products Gaussian kernel. A precomputed Gram matrix feeds an SMO
//! dual solver, and hyperparameters are tuned by stratified k-fold
//! cross-validation.
//!
//! ```
//! use ttmmk::{tt_svd_unique, tt_to_cp, equilibrate_norms, DenseTensor, TtTruncation};
//!
//! let x = DenseTensor::from_fn(&[3, 4, 5], |idx| (idx[0] + 2 * idx[1] + 3 * idx[2]) as f64).unwrap();
//! let tt = tt_svd_unique(&x, TtTruncation::FixedRank(2)).unwrap();
//! let cp = equilibrate_norms(&tt_to_cp(&tt));
//! assert_eq!(cp.rank(), tt.ranks()[1] * tt.ranks()[2]);
//! ```

pub mod cp;
pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod svm;
pub mod synth;
pub mod tensor;
pub mod tt;

pub use cp::{cp_als, cp_reconstruct, equilibrate_norms, tt_to_cp, CpAlsFit, CpAlsOptions, CpDecomposition};
pub use error::{Error, Result};
pub use kernel::{
    assemble_gram, assemble_gram_sweep, cross_kernel, dusk_cp_kernel, gaussian_rbf, prepare_item, prepare_items,
    tt_naive_kernel, vector_rbf_kernel, GramMatrix, KernelConfig, KernelItem, KernelKind,
};
pub use io::{DatasetManifest, ManifestEntry};
pub use linalg::{svd_truncated, sym_eig_descending, TruncatedSvd};
pub use svm::{
    cross_validate, cross_validate_gram, grid_search, pow2_grid, predict, smo_solve, stratified_folds, CvResult, GridCell,
    GridReport, GridSpec, LabeledDataset, Prediction, SmoOptions, SvmModel,
};
pub use synth::{generate_synthetic, SyntheticSpec};
pub use tensor::{khatri_rao, DenseTensor};
pub use tt::{canonicalize_signs, tt_reconstruct, tt_svd_unique, TtCore, TtDecomposition, TtTruncation};

/// Dense column-major matrix type used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
