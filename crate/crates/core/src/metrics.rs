use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    /// `||y - y_hat||^2 / ||y||^2`.
    pub rpe: f64,
}

pub fn mse<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(mismatch(format!(
            "{} targets but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(mismatch("no targets to score"));
    }
    Ok(squared_error(y_true, y_pred) / y_true.len() as f64)
}

fn squared_error<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let e = p.as_f64() - q.as_f64();
            e * e
        })
        .sum()
}

/// Errors with [`Error::ZeroNormTarget`] when `y_true` is all zeros.
pub fn evaluate<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<Metrics> {
    let mse = mse(y_true, y_pred)?;
    let norm: f64 = y_true.iter().map(|&v| v.as_f64() * v.as_f64()).sum();
    if norm == 0.0 {
        return Err(Error::ZeroNormTarget);
    }
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        rpe: squared_error(y_true, y_pred) / norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let m = evaluate(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!(m.mse, 12.5);
        assert_eq!(m.rpe, 1.0);
        assert_eq!(m.rmse, 12.5f64.sqrt());
        let p = evaluate(&[1.0, -2.0], &[1.0, -2.0]).unwrap();
        assert_eq!((p.mse, p.rpe), (0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(evaluate(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNormTarget)));
        assert!(evaluate(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }
}
