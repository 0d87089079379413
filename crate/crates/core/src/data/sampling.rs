use ndarray::Array2;
use rand::Rng;

use crate::rng::Stream;
use crate::{Error, Result};

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Precondition(format!("{name} must lie in [0, 1], got {rate}")));
    }
    Ok(())
}

/// MCAR mask: each cell is independently missing (0) with probability `miss_rate`.
pub fn generate_mcar_mask(rows: usize, cols: usize, miss_rate: f64, rng: &mut Stream) -> Result<Array2<f64>> {
    check_rate("miss rate", miss_rate)?;
    Ok(Array2::from_shape_simple_fn((rows, cols), || {
        if rng.random::<f64>() < miss_rate {
            0.0
        } else {
            1.0
        }
    }))
}

/// `values` where `mask == 1`, the placeholder 0 elsewhere.
pub fn make_observed(values: &Array2<f64>, mask: &Array2<f64>) -> Result<Array2<f64>> {
    if values.dim() != mask.dim() {
        return Err(Error::Input(format!(
            "values {:?} and mask {:?} differ in shape",
            values.dim(),
            mask.dim()
        )));
    }
    let mut out = values.clone();
    out.zip_mut_with(mask, |v, &m| {
        if m == 0.0 {
            *v = 0.0
        }
    });
    Ok(out)
}

/// `batch_size` distinct row indices (clamped to `n`).
pub fn sample_batch(n: usize, batch_size: usize, rng: &mut Stream) -> Result<Vec<usize>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    Ok(rand::seq::index::sample(rng, n, batch_size.min(n)).into_vec())
}

/// i.i.d. `Uniform[0, high)` noise.
pub fn sample_noise(rows: usize, cols: usize, high: f64, rng: &mut Stream) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() * high)
}

/// Hint matrix `H = B ⊙ M + 0.5 (1 - B)` with `B ~ Bernoulli(hint_rate)`.
/// Returns `(H, B)`.
pub fn sample_hint(mask: &Array2<f64>, hint_rate: f64, rng: &mut Stream) -> Result<(Array2<f64>, Array2<f64>)> {
    check_rate("hint rate", hint_rate)?;
    let b = Array2::from_shape_simple_fn(
        mask.raw_dim(),
        || {
            if rng.random::<f64>() < hint_rate {
                1.0
            } else {
                0.0
            }
        },
    );
    let mut h = mask.clone();
    h.zip_mut_with(&b, |h, &b| *h = b * *h + 0.5 * (1.0 - b));
    Ok((h, b))
}
