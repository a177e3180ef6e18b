//! Python bindings: `import ttmmk`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use ttmmk::io;
use ttmmk::{
    assemble_gram, cross_validate, dusk_cp_kernel, equilibrate_norms, generate_synthetic, prepare_items, smo_solve,
    tt_svd_unique, tt_to_cp, CpDecomposition, DenseTensor, GramMatrix, KernelConfig, KernelKind, LabeledDataset,
    Matrix, SmoOptions, SvmModel, SyntheticSpec, TtDecomposition, TtTruncation,
};

fn py_err(e: ttmmk::Error) -> PyErr {
    match e {
        ttmmk::Error::Io(inner) => PyIOError::new_err(inner.to_string()),
        other => PyValueError::new_err(format!("[{}] {other}", other.code())),
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Ok(Matrix::from_fn(n, k, |i, j| rows[i][j]))
}

/// Dense tensor, column-major (first index fastest).
#[pyclass(name = "Tensor", module = "ttmmk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTensor(DenseTensor);

#[pymethods]
impl PyTensor {
    #[new]
    fn new(dims: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        DenseTensor::new(dims, data).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_tensor(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_tensor(path, &self.0).map_err(py_err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn get(&self, index: Vec<usize>) -> PyResult<f64> {
        if index.len() != self.0.order() || index.iter().zip(self.0.dims()).any(|(i, d)| i >= d) {
            return Err(PyValueError::new_err(format!("index {index:?} out of bounds for {:?}", self.0.dims())));
        }
        Ok(self.0.get(&index))
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    fn inner(&self, other: &PyTensor) -> PyResult<f64> {
        self.0.inner(&other.0).map_err(py_err)
    }

    /// Mode-`mode` unfolding as a list of rows (0-based mode).
    fn matricize(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        self.0.matricize(mode).map(|m| rows(&m)).map_err(py_err)
    }

    /// Multiplies mode `mode` by the matrix given as a list of rows.
    fn mode_product(&self, matrix: Vec<Vec<f64>>, mode: usize) -> PyResult<Self> {
        self.0.mode_product(mode, &from_rows(&matrix)?).map(Self).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Tensor(dims={:?})", self.0.dims())
    }
}

#[pyclass(name = "TT", module = "ttmmk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTt(TtDecomposition);

#[pymethods]
impl PyTt {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_tt(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_tt(path, &self.0).map_err(py_err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims()
    }

    #[getter]
    fn ranks(&self) -> Vec<usize> {
        self.0.ranks()
    }

    /// Core `m` as nested lists indexed `[left][i][right]`.
    fn core(&self, m: usize) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let core = self
            .0
            .cores()
            .get(m)
            .ok_or_else(|| PyValueError::new_err(format!("core {m} out of range")))?;
        let (l, s, r) = core.shape();
        Ok((0..l)
            .map(|a| (0..s).map(|i| (0..r).map(|b| core.get(a, i, b)).collect()).collect())
            .collect())
    }

    fn reconstruct(&self) -> PyResult<PyTensor> {
        self.0.reconstruct().map(PyTensor).map_err(py_err)
    }

    #[pyo3(signature = (equilibrate = true))]
    fn to_cp(&self, equilibrate: bool) -> PyCp {
        let cp = tt_to_cp(&self.0);
        PyCp(if equilibrate { equilibrate_norms(&cp) } else { cp })
    }

    fn __repr__(&self) -> String {
        format!("TT(dims={:?}, ranks={:?})", self.0.dims(), self.0.ranks())
    }
}

#[pyclass(name = "CP", module = "ttmmk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCp(CpDecomposition);

#[pymethods]
impl PyCp {
    /// Factor matrices, each a list of `I_m` rows of length `R`.
    #[new]
    fn new(factors: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let mats = factors.iter().map(|f| from_rows(f)).collect::<PyResult<_>>()?;
        CpDecomposition::new(mats).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_cp(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_cp(path, &self.0).map_err(py_err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims()
    }

    #[getter]
    fn factors(&self) -> Vec<Vec<Vec<f64>>> {
        self.0.factors().iter().map(rows).collect()
    }

    fn equilibrate(&self) -> Self {
        Self(equilibrate_norms(&self.0))
    }

    fn reconstruct(&self) -> PyTensor {
        PyTensor(self.0.reconstruct())
    }

    fn __repr__(&self) -> String {
        format!("CP(dims={:?}, rank={})", self.0.dims(), self.0.rank())
    }
}

#[pyclass(name = "SvmModel", module = "ttmmk", frozen)]
struct PyModel(SvmModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_model(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_model(path, &self.0).map_err(py_err)
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.0.alpha.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.0.bias
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    fn support_indices(&self) -> Vec<usize> {
        self.0.support_indices()
    }

    /// `(label, decision value)` for one row of kernel values against the training items.
    fn predict(&self, kernel_row: Vec<f64>) -> PyResult<(i8, f64)> {
        ttmmk::predict(&self.0, &kernel_row)
            .map(|p| (p.label, p.decision))
            .map_err(py_err)
    }
}

fn kernel_config(kind: &str, sigma: f64, rank: usize, equilibrate: Option<bool>, normalize: bool) -> PyResult<KernelConfig> {
    let kind: KernelKind = kind.parse().map_err(py_err)?;
    let mut config = KernelConfig::new(kind, sigma, rank);
    if let Some(e) = equilibrate {
        config.equilibrate = e;
    }
    config.normalize = normalize;
    config.validate().map_err(py_err)?;
    Ok(config)
}

fn tensors(items: &[PyRef<'_, PyTensor>]) -> Vec<DenseTensor> {
    items.iter().map(|t| t.0.clone()).collect()
}

/// Sign-canonical TT-SVD with a fixed rank cap or a relative error threshold.
#[pyfunction]
#[pyo3(signature = (tensor, rank = None, eps = None))]
fn tt_svd(tensor: &PyTensor, rank: Option<usize>, eps: Option<f64>) -> PyResult<PyTt> {
    let mode = match (rank, eps) {
        (Some(r), None) => TtTruncation::FixedRank(r),
        (None, Some(e)) => TtTruncation::Threshold(e),
        _ => return Err(PyValueError::new_err("pass exactly one of rank= or eps=")),
    };
    tt_svd_unique(&tensor.0, mode).map(PyTt).map_err(py_err)
}

/// Sum-of-products Gaussian kernel between two CP tensors.
#[pyfunction]
fn cp_kernel(a: &PyCp, b: &PyCp, sigma: f64) -> PyResult<f64> {
    dusk_cp_kernel(&a.0, &b.0, sigma).map_err(py_err)
}

/// Gram matrix (list of rows) over raw tensors.
#[pyfunction]
#[pyo3(signature = (items, sigma, kind = "ttmmk", rank = 2, equilibrate = None, normalize = false))]
fn gram(
    py: Python<'_>,
    items: Vec<PyRef<'_, PyTensor>>,
    sigma: f64,
    kind: &str,
    rank: usize,
    equilibrate: Option<bool>,
    normalize: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let config = kernel_config(kind, sigma, rank, equilibrate, normalize)?;
    let data = tensors(&items);
    py.detach(|| {
        let prepared = prepare_items(&data, &config)?;
        assemble_gram(&prepared, &config)
    })
    .map(|g| rows(&g.values))
    .map_err(py_err)
}

/// Trains on a precomputed Gram matrix (list of rows).
#[pyfunction]
#[pyo3(signature = (gram, labels, c = 1.0))]
fn train(gram: Vec<Vec<f64>>, labels: Vec<i8>, c: f64) -> PyResult<PyModel> {
    let values = from_rows(&gram)?;
    let n = values.nrows();
    let g = GramMatrix {
        values,
        config: KernelConfig::new(KernelKind::VectorRbf, 1.0, 1),
        item_ids: (0..n).collect(),
    };
    smo_solve(&g, &labels, c, &SmoOptions::default())
        .map(PyModel)
        .map_err(py_err)
}

/// Stratified k-fold cross-validation; returns `(mean, fold_accuracies)`.
#[pyfunction]
#[pyo3(signature = (items, labels, sigma, c = 1.0, kind = "ttmmk", rank = 2, k = 5, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn cross_val(
    py: Python<'_>,
    items: Vec<PyRef<'_, PyTensor>>,
    labels: Vec<i8>,
    sigma: f64,
    c: f64,
    kind: &str,
    rank: usize,
    k: usize,
    seed: u64,
) -> PyResult<(f64, Vec<f64>)> {
    let config = kernel_config(kind, sigma, rank, None, false)?;
    let data = LabeledDataset::new(tensors(&items), labels).map_err(py_err)?;
    py.detach(|| cross_validate(&data, &config, c, k, seed))
        .map(|r| (r.mean, r.fold_accuracies))
        .map_err(py_err)
}

/// Two-class synthetic data; returns `(tensors, labels)`.
#[pyfunction]
#[pyo3(signature = (dims, rank = 2, noise = 0.5, per_class = 50, seed = 0))]
fn synthetic(dims: Vec<usize>, rank: usize, noise: f64, per_class: usize, seed: u64) -> PyResult<(Vec<PyTensor>, Vec<i8>)> {
    let spec = SyntheticSpec {
        dims,
        rank,
        noise,
        per_class,
        seed,
    };
    let data = generate_synthetic(&spec).map_err(py_err)?;
    Ok((data.items.into_iter().map(PyTensor).collect(), data.labels))
}

#[pymodule]
#[pyo3(name = "ttmmk")]
pub fn ttmmk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyTt>()?;
    m.add_class::<PyCp>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(tt_svd, m)?)?;
    m.add_function(wrap_pyfunction!(cp_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(gram, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(cross_val, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    Ok(())
}
