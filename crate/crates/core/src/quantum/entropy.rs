use super::state::clip_spectrum;
use super::{DensityOperator, Operator, QuantumError};

/// -sum p log2 p over a probability vector, with 0 log 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Entropy of an (already clipped) nonnegative spectrum.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    shannon_entropy(values)
}

/// H(rho) = -Tr rho log2 rho.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64, QuantumError> {
    Ok(entropy_of_spectrum(&rho.spectrum()?))
}

/// Entropy of a normalized PSD operator that has not been wrapped as a
/// [`DensityOperator`] (internal arithmetic results).
pub(crate) fn operator_entropy(op: &Operator) -> Result<f64, QuantumError> {
    let values = clip_spectrum(op.hermitize()?.eigenvalues()?)?;
    Ok(entropy_of_spectrum(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::C64;
    use nalgebra::DVector;

    #[test]
    fn pure_state_has_zero_entropy() {
        let psi = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let rho = DensityOperator::pure(&[2], &psi).unwrap();
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_qubit_is_one_bit() {
        let rho = DensityOperator::maximally_mixed(&[2]);
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_spectrum() {
        let op = Operator::from_real_diagonal(&[3], &[0.5, 0.25, 0.25]).unwrap();
        let rho = DensityOperator::new(op).unwrap();
        assert!((von_neumann_entropy(&rho).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn shannon_ignores_zeros() {
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        assert!((shannon_entropy(&[0.25; 4]) - 2.0).abs() < 1e-15);
    }
}
