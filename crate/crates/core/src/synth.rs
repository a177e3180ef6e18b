//! Synthetic two-class tensor data: a low-rank class signal plus noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cp::CpDecomposition;
use crate::error::{Error, Result};
use crate::svm::LabeledDataset;
use crate::tensor::DenseTensor;
use crate::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub dims: Vec<usize>,
    /// CP rank of each class signal.
    pub rank: usize,
    /// Noise Frobenius norm relative to the signal's.
    pub noise: f64,
    pub per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        DenseTensor::zeros(&self.dims)?;
        if self.rank == 0 {
            return Err(Error::InvalidArgument("synthetic rank must be at least 1".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise level {} must be finite and >= 0", self.noise)));
        }
        if self.per_class == 0 {
            return Err(Error::InvalidArgument("need at least one sample per class".into()));
        }
        Ok(())
    }
}

fn gaussian_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let n: usize = dims.iter().product();
    let data = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    DenseTensor::new(dims.to_vec(), data).expect("dims already validated")
}

/// Unit-norm class signal from a Gaussian rank-`rank` CP model.
fn class_signal(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> DenseTensor {
    loop {
        let factors = spec
            .dims
            .iter()
            .map(|&d| Matrix::from_fn(d, spec.rank, |_, _| StandardNormal.sample(rng)))
            .collect();
        let x = CpDecomposition::new(factors).expect("valid factors").reconstruct();
        let norm = x.frobenius_norm();
        if norm > 0.0 {
            return x.scaled(1.0 / norm);
        }
    }
}

/// Class −1 samples first, then class +1. Each sample is its class signal
/// plus a Gaussian draw rescaled to exactly `noise · ‖signal‖_F`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signals = [class_signal(spec, &mut rng), class_signal(spec, &mut rng)];
    let mut items = Vec::with_capacity(2 * spec.per_class);
    let mut labels = Vec::with_capacity(2 * spec.per_class);
    for (signal, label) in signals.iter().zip([-1i8, 1]) {
        for _ in 0..spec.per_class {
            let mut data = signal.data().to_vec();
            if spec.noise > 0.0 {
                let e = gaussian_tensor(&spec.dims, &mut rng);
                let scale = spec.noise * signal.frobenius_norm() / e.frobenius_norm();
                for (v, n) in data.iter_mut().zip(e.data()) {
                    *v += scale * n;
                }
            }
            items.push(DenseTensor::new(spec.dims.clone(), data)?);
            labels.push(label);
        }
    }
    LabeledDataset::new(items, labels)
}
