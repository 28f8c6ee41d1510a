use nalgebra::DVector;

use crate::error::{BcsError, Result};
use crate::field::Scalar;

/// `‖x̂ − x‖² / ‖x‖²`.
pub fn normalized_error<T: Scalar>(x_hat: &DVector<T>, x_true: &DVector<T>) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(BcsError::InvalidInstance(format!(
            "estimate has {} entries, truth has {}",
            x_hat.len(),
            x_true.len()
        )));
    }
    let denom: f64 = x_true.iter().map(|v| v.modulus_squared()).sum();
    if denom == 0.0 {
        return Err(BcsError::InvalidInstance(
            "normalized error of a zero signal".into(),
        ));
    }
    let num: f64 = x_hat
        .iter()
        .zip(x_true.iter())
        .map(|(&a, &b)| (a - b).modulus_squared())
        .sum();
    Ok(num / denom)
}

/// A trial succeeds when its normalized error is no greater than `threshold`.
pub fn is_success(err: f64, threshold: f64) -> bool {
    err <= threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn normalized_error_cases() {
        let x = DVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)]);
        assert_eq!(normalized_error(&x, &x).unwrap(), 0.0);
        assert_eq!(normalized_error(&DVector::zeros(2), &x).unwrap(), 1.0);
        assert_eq!(normalized_error(&(&x * Complex64::new(2.0, 0.0)), &x).unwrap(), 1.0);
        assert!(normalized_error(&x, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn success_threshold_is_inclusive() {
        assert!(is_success(1e-7, 1e-6));
        assert!(is_success(1e-6, 1e-6));
        assert!(!is_success(2e-6, 1e-6));
    }
}
