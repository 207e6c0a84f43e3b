use crate::error::{Result, ZskError};

/// `100 · Σ(y − ŷ)² / Σ(y − ȳ_train)²`: the error relative to always predicting
/// the training mean, in percent.
pub fn relative_mse(y_true: &[f64], y_pred: &[f64], y_train_mean: f64) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(ZskError::dims("prediction vector", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(ZskError::Empty("no test labels to score".into()));
    }
    let num: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    let den: f64 = y_true.iter().map(|y| (y - y_train_mean).powi(2)).sum();
    if den == 0.0 {
        return Err(ZskError::UndefinedScore);
    }
    let score = 100.0 * num / den;
    if score.is_finite() {
        Ok(score)
    } else {
        Err(ZskError::NonFinite("relative MSE".into()))
    }
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(ZskError::dims("prediction vector", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(ZskError::Empty("no labels to score".into()));
    }
    Ok(y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / y_true.len() as f64)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(relative_mse(&[1.0, 2.0], &[1.0, 2.0], 0.0).unwrap(), 0.0);
        assert_eq!(relative_mse(&[0.0, 2.0], &[1.0, 1.0], 1.0).unwrap(), 100.0);
        assert_eq!(relative_mse(&[3.0, 5.0], &[4.0, 4.0], 4.0).unwrap(), 100.0);
    }

    #[test]
    fn undefined_and_mismatch() {
        assert!(matches!(relative_mse(&[2.0, 2.0], &[1.0, 1.0], 2.0), Err(ZskError::UndefinedScore)));
        assert!(matches!(relative_mse(&[2.0], &[1.0, 1.0], 2.0), Err(ZskError::DimensionMismatch { .. })));
        assert!(relative_mse(&[], &[], 0.0).is_err());
    }
}
