use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{PadError, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature mean and population standard deviation of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose standard deviation was raised to [`STD_FLOOR`].
    pub floored: Vec<usize>,
}

pub fn fit_normalizer(x: &Matrix) -> Result<NormalizationStats> {
    if x.rows < 2 {
        return Err(PadError::InsufficientData(format!(
            "normalizer needs at least 2 rows, got {}",
            x.rows
        )));
    }
    let n = x.rows as f64;
    let mut mean = vec![0.0; x.cols];
    for i in 0..x.rows {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.cols];
    for i in 0..x.rows {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut floored = Vec::new();
    let std = var
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let sd = (s / n).sqrt();
            if sd < STD_FLOOR {
                floored.push(j);
                STD_FLOOR
            } else {
                sd
            }
        })
        .collect();
    if !floored.is_empty() {
        log::info!("{} constant feature(s) had their std floored", floored.len());
    }
    Ok(NormalizationStats { mean, std, floored })
}

impl NormalizationStats {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols != self.mean.len() {
            return Err(PadError::LayoutMismatch {
                expected: format!("{} features", self.mean.len()),
                found: format!("{} features", x.cols),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn one_two_three() {
        let x = column(&[1.0, 2.0, 3.0]);
        let s = fit_normalizer(&x).unwrap();
        assert_eq!(s.mean[0], 2.0);
        assert!((s.std[0] - 0.816_496_580_927_726).abs() < 1e-12);
        let z = s.apply(&x).unwrap();
        for (a, b) in z.data.iter().zip([-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardized_column_unchanged() {
        let v = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        let x = column(&v);
        let z = fit_normalizer(&x).unwrap().apply(&x).unwrap();
        for (a, b) in z.data.iter().zip(v) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_column_floored() {
        let x = column(&[5.0, 5.0, 5.0]);
        let s = fit_normalizer(&x).unwrap();
        assert_eq!(s.floored, vec![0]);
        assert!(s.apply(&x).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn needs_two_rows() {
        assert!(fit_normalizer(&column(&[1.0])).is_err());
    }

    proptest! {
        #[test]
        fn zero_mean_unit_variance(v in proptest::collection::vec(-1e3f64..1e3, 2..60)) {
            let x = column(&v);
            let s = fit_normalizer(&x).unwrap();
            prop_assume!(s.floored.is_empty());
            let z = s.apply(&x).unwrap();
            let n = v.len() as f64;
            let m = z.data.iter().sum::<f64>() / n;
            let var = z.data.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n;
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-6);
        }
    }
}
