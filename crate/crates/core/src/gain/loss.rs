//! GAIN losses and their derivatives with respect to network outputs.
//!
//! All batch losses are sums over cells averaged over batch rows.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::ColumnKind;
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-8;

/// How binary columns enter the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryReconstruction {
    /// `-x log(x*)`; a true 0 contributes nothing.
    #[default]
    PositiveOnly,
    /// `-x log(x*) - (1 - x) log(1 - x*)`.
    CrossEntropy,
}

/// `ln(clamp(p))` and its derivative (zero where the clamp is active).
#[inline]
fn log_clamped(p: f64) -> (f64, f64) {
    if p < PROB_EPS {
        (PROB_EPS.ln(), 0.0)
    } else if p > 1.0 - PROB_EPS {
        ((1.0 - PROB_EPS).ln(), 0.0)
    } else {
        (p.ln(), 1.0 / p)
    }
}

/// Per-cell reconstruction error between a true value `x` and a generated `x_star`.
pub fn reconstruction_term(x: f64, x_star: f64, kind: ColumnKind, mode: BinaryReconstruction) -> f64 {
    reconstruction_with_grad(x, x_star, kind, mode).0
}

/// Value and derivative with respect to `x_star`.
#[inline]
pub(crate) fn reconstruction_with_grad(
    x: f64,
    x_star: f64,
    kind: ColumnKind,
    mode: BinaryReconstruction,
) -> (f64, f64) {
    match kind {
        ColumnKind::Continuous => {
            let diff = x - x_star;
            (diff * diff, -2.0 * diff)
        }
        ColumnKind::Binary => {
            let (lp, dlp) = log_clamped(x_star);
            let mut value = -x * lp;
            let mut grad = -x * dlp;
            if mode == BinaryReconstruction::CrossEntropy {
                let (lq, dlq) = log_clamped(1.0 - x_star);
                value -= (1.0 - x) * lq;
                grad += (1.0 - x) * dlq;
            }
            (value, grad)
        }
    }
}

fn check_shapes(shapes: &[(&str, (usize, usize))]) -> Result<()> {
    let (first_name, first) = shapes[0];
    for &(name, s) in &shapes[1..] {
        if s != first {
            return Err(Error::Input(format!(
                "`{name}` has shape {s:?} but `{first_name}` has {first:?}"
            )));
        }
    }
    Ok(())
}

/// The discriminator's log-likelihood over cells whose hint was withheld (`b == 0`):
/// `Σ m log m̂ + (1 - m) log(1 - m̂)`, averaged over rows. The discriminator
/// maximizes this.
pub fn discriminator_loss(m: &Array2<f64>, m_hat: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    Ok(-discriminator_objective(m, m_hat, b)?.0)
}

/// The minimized discriminator objective (negated log-likelihood) and its
/// gradient with respect to `m_hat`.
pub(crate) fn discriminator_objective(
    m: &Array2<f64>,
    m_hat: &Array2<f64>,
    b: &Array2<f64>,
) -> Result<(f64, Array2<f64>)> {
    check_shapes(&[("m", m.dim()), ("m_hat", m_hat.dim()), ("b", b.dim())])?;
    let scale = 1.0 / m.nrows().max(1) as f64;
    let mut grad = Array2::zeros(m.raw_dim());
    let mut total = 0.0;
    Zip::from(&mut grad)
        .and(m)
        .and(m_hat)
        .and(b)
        .for_each(|g, &mi, &p, &bi| {
            if bi != 0.0 {
                return;
            }
            let (lp, dlp) = log_clamped(p);
            let (lq, dlq) = log_clamped(1.0 - p);
            total += mi * lp + (1.0 - mi) * lq;
            *g = -scale * (mi * dlp - (1.0 - mi) * dlq);
        });
    Ok((-scale * total, grad))
}

/// Generator loss used for GAIN training and fine-tuning: the adversarial term
/// `-Σ_{m=0} log m̂` plus `alpha` times the reconstruction error on observed
/// cells, averaged over rows.
pub fn generator_finetune_loss(
    m: &Array2<f64>,
    m_hat: &Array2<f64>,
    x_tilde: &Array2<f64>,
    x_bar: &Array2<f64>,
    alpha: f64,
    kinds: &[ColumnKind],
    mode: BinaryReconstruction,
) -> Result<f64> {
    Ok(generator_finetune_objective(m, m_hat, x_tilde, x_bar, alpha, kinds, mode)?.0)
}

/// Loss plus gradients with respect to `m_hat` and `x_bar`.
pub(crate) fn generator_finetune_objective(
    m: &Array2<f64>,
    m_hat: &Array2<f64>,
    x_tilde: &Array2<f64>,
    x_bar: &Array2<f64>,
    alpha: f64,
    kinds: &[ColumnKind],
    mode: BinaryReconstruction,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    check_shapes(&[
        ("m", m.dim()),
        ("m_hat", m_hat.dim()),
        ("x_tilde", x_tilde.dim()),
        ("x_bar", x_bar.dim()),
    ])?;
    if kinds.len() != m.ncols() {
        return Err(Error::Input(format!(
            "{} column kinds for {} columns",
            kinds.len(),
            m.ncols()
        )));
    }
    let scale = 1.0 / m.nrows().max(1) as f64;
    let mut d_mhat = Array2::zeros(m.raw_dim());
    let mut d_xbar = Array2::zeros(m.raw_dim());
    let mut adversarial = 0.0;
    let mut reconstruction = 0.0;
    for ((i, j), &mi) in m.indexed_iter() {
        if mi == 0.0 {
            let (lp, dlp) = log_clamped(m_hat[[i, j]]);
            adversarial -= lp;
            d_mhat[[i, j]] = -scale * dlp;
        } else {
            let (r, dr) = reconstruction_with_grad(x_tilde[[i, j]], x_bar[[i, j]], kinds[j], mode);
            reconstruction += r;
            d_xbar[[i, j]] = scale * alpha * dr;
        }
    }
    Ok((scale * (adversarial + alpha * reconstruction), d_mhat, d_xbar))
}

/// Pre-training generator loss: reconstruction error summed over every
/// component, observed or not, averaged over rows.
pub fn reconstruction_loss(
    truth: &Array2<f64>,
    x_bar: &Array2<f64>,
    kinds: &[ColumnKind],
    mode: BinaryReconstruction,
) -> Result<f64> {
    Ok(reconstruction_objective(truth, x_bar, kinds, mode)?.0)
}

pub(crate) fn reconstruction_objective(
    truth: &Array2<f64>,
    x_bar: &Array2<f64>,
    kinds: &[ColumnKind],
    mode: BinaryReconstruction,
) -> Result<(f64, Array2<f64>)> {
    check_shapes(&[("truth", truth.dim()), ("x_bar", x_bar.dim())])?;
    if kinds.len() != truth.ncols() {
        return Err(Error::Input("column kind count mismatch".into()));
    }
    let scale = 1.0 / truth.nrows().max(1) as f64;
    let mut grad = Array2::zeros(truth.raw_dim());
    let mut total = 0.0;
    for ((i, j), &x) in truth.indexed_iter() {
        let (r, dr) = reconstruction_with_grad(x, x_bar[[i, j]], kinds[j], mode);
        total += r;
        grad[[i, j]] = scale * dr;
    }
    Ok((scale * total, grad))
}
