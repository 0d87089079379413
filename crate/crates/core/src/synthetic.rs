//! Synthetic tabular data generators with known structure.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::data::{ColumnKind, DataTable, Labels};
use crate::rng::Stream;
use crate::Result;

/// Correlated Gaussian from a low-rank factor model: `x = W z + mu + sigma * e`
/// with `z ~ N(0, I_k)` and `e ~ N(0, I_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGaussian {
    loadings: Array2<f64>,
    offsets: Array1<f64>,
    noise_std: f64,
}

impl FactorGaussian {
    /// Random loadings and offsets drawn from `seed`.
    pub fn new(dim: usize, factors: usize, noise_std: f64, seed: u64) -> Self {
        let mut rng = Stream::seed_from_u64(seed);
        let loadings = Array2::from_shape_simple_fn((factors, dim), || rng.sample::<f64, _>(StandardNormal));
        let offsets = Array1::from_shape_simple_fn(dim, || rng.sample::<f64, _>(StandardNormal));
        Self {
            loadings,
            offsets,
            noise_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn sample(&self, n: usize, rng: &mut Stream) -> Result<DataTable> {
        let k = self.loadings.nrows();
        let z = Array2::from_shape_simple_fn((n, k), || rng.sample::<f64, _>(StandardNormal));
        let e = Array2::from_shape_simple_fn((n, self.dim()), || rng.sample::<f64, _>(StandardNormal));
        let values = z.dot(&self.loadings) + &self.offsets + e * self.noise_std;
        DataTable::complete(values, vec![ColumnKind::Continuous; self.dim()])
    }
}

/// Independent exponential columns with per-column rates: no cross-column
/// structure and skewed marginals.
pub fn independent_exponential(n: usize, dim: usize, rng: &mut Stream) -> Result<DataTable> {
    let rates: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
    let dists: Vec<Exp<f64>> = rates.iter().map(|&r| Exp::new(r).expect("positive rate")).collect();
    let values = Array2::from_shape_fn((n, dim), |(_, j)| dists[j].sample(rng));
    DataTable::complete(values, vec![ColumnKind::Continuous; dim])
}

/// Independent columns, each an equal mixture of two well-separated uniforms:
/// bimodal marginals with no cross-column structure.
pub fn independent_bimodal(n: usize, dim: usize, rng: &mut Stream) -> Result<DataTable> {
    let values = Array2::from_shape_simple_fn((n, dim), || {
        let base = if rng.random::<bool>() { 0.0 } else { 3.0 };
        base + rng.random::<f64>()
    });
    DataTable::complete(values, vec![ColumnKind::Continuous; dim])
}

/// Linearly separable classes: `n_classes` Gaussian blobs whose centres lie
/// `separation` apart along distinct directions, unit isotropic noise.
pub fn separable_classes(
    n: usize,
    dim: usize,
    n_classes: usize,
    separation: f64,
    rng: &mut Stream,
) -> Result<DataTable> {
    let centres = Array2::from_shape_fn(
        (n_classes, dim),
        |(c, j)| {
            if j % n_classes == c {
                separation
            } else {
                0.0
            }
        },
    );
    let ids: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    let values = Array2::from_shape_fn((n, dim), |(i, j)| {
        centres[[ids[i], j]] + rng.sample::<f64, _>(StandardNormal)
    });
    DataTable::complete(values, vec![ColumnKind::Continuous; dim])?.with_labels(Labels::from_ids(ids))
}
