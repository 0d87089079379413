use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Root mean squared error over the cells where `mask == 0`.
pub fn rmse_missing(truth: &Array2<f64>, imputed: &Array2<f64>, mask: &Array2<f64>) -> Result<f64> {
    if truth.dim() != imputed.dim() || truth.dim() != mask.dim() {
        return Err(Error::Input(format!(
            "shapes differ: truth {:?}, imputed {:?}, mask {:?}",
            truth.dim(),
            imputed.dim(),
            mask.dim()
        )));
    }
    let (sum, count) = ndarray::Zip::from(truth)
        .and(imputed)
        .and(mask)
        .fold((0.0, 0usize), |(s, c), &t, &x, &m| {
            if m == 0.0 {
                (s + (t - x) * (t - x), c + 1)
            } else {
                (s, c)
            }
        });
    if count == 0 {
        return Err(Error::Metric(
            "RMSE over missing cells needs at least one missing cell".into(),
        ));
    }
    Ok((sum / count as f64).sqrt())
}

/// Mann-Whitney AUROC for one positive class; ties count one half.
/// Returns `None` when either side is empty.
pub fn auroc_binary(scores: ArrayView1<'_, f64>, positive: &[bool]) -> Option<f64> {
    let n = scores.len();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average 1-based ranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if positive[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

/// Macro one-vs-rest AUROC. Column `c` of `scores` scores class `c`; classes
/// absent from `labels` are left out of the average.
pub fn auroc_macro(scores: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    if scores.nrows() != labels.len() {
        return Err(Error::Input(format!(
            "{} score rows for {} labels",
            scores.nrows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= scores.ncols()) {
        return Err(Error::Input(format!(
            "label {bad} has no score column ({} columns)",
            scores.ncols()
        )));
    }
    let per_class: Vec<f64> = (0..scores.ncols())
        .filter_map(|c| {
            let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            auroc_binary(scores.column(c), &positive)
        })
        .collect();
    if per_class.is_empty() {
        return Err(Error::Metric("AUROC needs at least two classes present".into()));
    }
    Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    #[test]
    fn rmse_hand_cases() {
        let t = array![[1.0, 0.0]];
        let m = array![[0.0, 0.0]];
        assert_eq!(rmse_missing(&t, &t, &m).unwrap(), 0.0);
        assert_eq!(rmse_missing(&t, &array![[0.0, 1.0]], &m).unwrap(), 1.0);
        let err = rmse_missing(&t, &t, &array![[1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Metric(_)));
    }

    #[test]
    fn rmse_ignores_observed_cells() {
        let t = array![[0.2, 0.4, 0.6]];
        let m = array![[1.0, 0.0, 1.0]];
        let a = rmse_missing(&t, &array![[0.2, 0.1, 0.6]], &m).unwrap();
        let b = rmse_missing(&t, &array![[9.0, 0.1, -3.0]], &m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn auroc_hand_case() {
        // Positives at 0.9 and 0.3, negatives at 0.8 and 0.2: 3 of 4 pairs concordant.
        let s = array![0.9, 0.8, 0.3, 0.2];
        let pos = [true, false, true, false];
        assert_eq!(auroc_binary(s.view(), &pos), Some(0.75));
    }

    #[test]
    fn auroc_perfect_and_constant() {
        let labels = [0, 1, 2, 1, 0];
        let mut scores = Array2::zeros((5, 3));
        for (i, &l) in labels.iter().enumerate() {
            scores[[i, l]] = 1.0;
        }
        assert_eq!(auroc_macro(scores.view(), &labels).unwrap(), 1.0);
        let flat = Array2::from_elem((5, 3), 0.3);
        assert_eq!(auroc_macro(flat.view(), &labels).unwrap(), 0.5);
    }

    #[test]
    fn auroc_single_class_errors() {
        let scores = Array2::from_elem((3, 2), 0.5);
        assert!(matches!(
            auroc_macro(scores.view(), &[1, 1, 1]).unwrap_err(),
            Error::Metric(_)
        ));
    }

    #[test]
    fn auroc_skips_absent_class() {
        let scores = array![[0.9, 0.1, 0.0], [0.2, 0.8, 0.0]];
        assert_eq!(auroc_macro(scores.view(), &[0, 1]).unwrap(), 1.0);
    }

    /// Brute-force pair counting.
    fn auroc_pairs(s: &[f64], pos: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if pos[i] && !pos[j] {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    proptest! {
        #[test]
        fn rank_auroc_matches_pair_count(
            data in proptest::collection::vec((0u8..6, any::<bool>()), 2..40)
        ) {
            let s: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
            let pos: Vec<bool> = data.iter().map(|d| d.1).collect();
            let got = auroc_binary(Array1::from(s.clone()).view(), &pos);
            if pos.iter().all(|&p| p) || pos.iter().all(|&p| !p) {
                prop_assert!(got.is_none());
            } else {
                prop_assert!((got.unwrap() - auroc_pairs(&s, &pos)).abs() < 1e-12);
            }
        }
    }
}
