use serde::Serialize;

use super::RateError;
use crate::graph::IndependentSetFamily;
use crate::quantum::{Operator, Povm};

const ROW_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-12;

/// p(w|x) with `w` ranging over an independent-set family on the alphabet
/// of `x`; mass is only placed on sets containing `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalChannel {
    family: IndependentSetFamily,
    /// Row-major, `alphabet` rows by `family.len()` columns.
    matrix: Vec<f64>,
}

impl ConditionalChannel {
    pub fn new(family: IndependentSetFamily, matrix: Vec<f64>) -> Result<Self, RateError> {
        let (rows, cols) = (family.alphabet(), family.len());
        if matrix.len() != rows * cols {
            return Err(RateError::InvalidChannel(format!(
                "{} entries for {rows} symbols and {cols} sets",
                matrix.len()
            )));
        }
        let mut matrix = matrix;
        for x in 0..rows {
            let row = &mut matrix[x * cols..(x + 1) * cols];
            for (w, p) in row.iter_mut().enumerate() {
                if !p.is_finite() || *p < -SUPPORT_TOL {
                    return Err(RateError::InvalidChannel(format!(
                        "p(w={}|{}) = {p}",
                        w + 1,
                        x + 1
                    )));
                }
                if !family.contains(w, x) {
                    if *p > SUPPORT_TOL {
                        return Err(RateError::SupportViolation {
                            symbol: x,
                            set: family.set(w).to_vec(),
                        });
                    }
                    *p = 0.0;
                }
                *p = p.max(0.0);
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(RateError::InvalidChannel(format!(
                    "row {} sums to {sum}",
                    x + 1
                )));
            }
        }
        Ok(Self { family, matrix })
    }

    pub fn from_rows(family: IndependentSetFamily, rows: &[Vec<f64>]) -> Result<Self, RateError> {
        if rows.len() != family.alphabet() || rows.iter().any(|r| r.len() != family.len()) {
            return Err(RateError::InvalidChannel(format!(
                "expected {} rows of {} entries",
                family.alphabet(),
                family.len()
            )));
        }
        Self::new(family, rows.concat())
    }

    /// W = X: singleton family, deterministic.
    pub fn identity(alphabet: usize) -> Self {
        let family = IndependentSetFamily::singletons(alphabet);
        let mut matrix = vec![0.0; alphabet * alphabet];
        for x in 0..alphabet {
            matrix[x * alphabet + x] = 1.0;
        }
        Self { family, matrix }
    }

    /// Uniform over the sets containing each symbol.
    pub fn uniform(family: IndependentSetFamily) -> Result<Self, RateError> {
        family.require_spanning()?;
        let cols = family.len();
        let mut matrix = vec![0.0; family.alphabet() * cols];
        for x in 0..family.alphabet() {
            let sets = family.containing(x);
            for &w in &sets {
                matrix[x * cols + w] = 1.0 / sets.len() as f64;
            }
        }
        Ok(Self { family, matrix })
    }

    /// Deterministic channel: symbol `x` goes to set `choice[x]`.
    pub fn deterministic(
        family: IndependentSetFamily,
        choice: &[usize],
    ) -> Result<Self, RateError> {
        let cols = family.len();
        let mut matrix = vec![0.0; family.alphabet() * cols];
        for (x, &w) in choice.iter().enumerate() {
            if w >= cols {
                return Err(RateError::InvalidChannel(format!("no set {}", w + 1)));
            }
            matrix[x * cols + w] = 1.0;
        }
        Self::new(family, matrix)
    }

    pub fn family(&self) -> &IndependentSetFamily {
        &self.family
    }

    pub fn alphabet(&self) -> usize {
        self.family.alphabet()
    }

    pub fn outputs(&self) -> usize {
        self.family.len()
    }

    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.matrix[x * self.outputs() + w]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .chunks(self.outputs())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Number of free real parameters: sum over symbols of (#sets containing it - 1).
    pub fn free_parameters(family: &IndependentSetFamily) -> usize {
        (0..family.alphabet())
            .map(|x| family.containing(x).len().saturating_sub(1))
            .sum()
    }

    /// Distribution of W given a distribution of X.
    pub fn output_distribution(&self, px: &[f64]) -> Vec<f64> {
        (0..self.outputs())
            .map(|w| (0..self.alphabet()).map(|x| px[x] * self.get(x, w)).sum())
            .collect()
    }
}

/// Lambda_w = sum_{x in w} p(w|x) Lambda_x.
pub fn lift_povm(povm: &Povm, channel: &ConditionalChannel) -> Result<Povm, RateError> {
    if povm.len() != channel.alphabet() {
        return Err(RateError::InvalidChannel(format!(
            "channel conditions on {} symbols, measurement has {} outcomes",
            channel.alphabet(),
            povm.len()
        )));
    }
    let elements: Vec<Operator> = (0..channel.outputs())
        .map(|w| {
            let mut acc = Operator::zeros(povm.dims());
            for &x in channel.family().set(w) {
                acc.add_scaled(channel.get(x, w), povm.element(x))
                    .expect("same dims");
            }
            acc
        })
        .collect();
    let lifted = if povm.is_complete() {
        Povm::new(elements)
    } else {
        Povm::new_sub(elements)
    };
    Ok(lifted?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cards_family() -> IndependentSetFamily {
        IndependentSetFamily::new(3, vec![vec![0, 1], vec![1, 2]], true).unwrap()
    }

    #[test]
    fn support_violation_rejected() {
        let r = ConditionalChannel::from_rows(
            cards_family(),
            &[vec![0.5, 0.5], vec![0.5, 0.5], vec![0.0, 1.0]],
        );
        assert!(matches!(r, Err(RateError::SupportViolation { .. })));
    }

    #[test]
    fn rows_must_be_stochastic() {
        let r = ConditionalChannel::from_rows(
            cards_family(),
            &[vec![1.0, 0.0], vec![0.5, 0.6], vec![0.0, 1.0]],
        );
        assert!(matches!(r, Err(RateError::InvalidChannel(_))));
    }

    #[test]
    fn deterministic_partition_groups_elements() {
        let fam = IndependentSetFamily::new(3, vec![vec![0, 1], vec![2]], true).unwrap();
        let ch = ConditionalChannel::deterministic(fam, &[0, 0, 1]).unwrap();
        let lifted = lift_povm(&Povm::computational_basis(3), &ch).unwrap();
        let expect0 = Operator::from_real_diagonal(&[3], &[1.0, 1.0, 0.0]).unwrap();
        assert!(lifted.element(0).max_abs_diff(&expect0) < 1e-15);
        assert!(lifted.is_complete());
    }

    #[test]
    fn cards_lift_with_split() {
        let q = 0.3;
        let ch = ConditionalChannel::from_rows(
            cards_family(),
            &[vec![1.0, 0.0], vec![q, 1.0 - q], vec![0.0, 1.0]],
        )
        .unwrap();
        let lifted = lift_povm(&Povm::computational_basis(3), &ch).unwrap();
        let expect = Operator::from_real_diagonal(&[3], &[1.0, q, 0.0]).unwrap();
        assert!(lifted.element(0).max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn identity_family_reproduces_povm() {
        let povm = Povm::computational_basis(3);
        let lifted = lift_povm(&povm, &ConditionalChannel::identity(3)).unwrap();
        for k in 0..3 {
            assert!(lifted.element(k).max_abs_diff(povm.element(k)) < 1e-15);
        }
    }

    #[test]
    fn free_parameter_count() {
        assert_eq!(ConditionalChannel::free_parameters(&cards_family()), 1);
        assert_eq!(
            ConditionalChannel::free_parameters(&IndependentSetFamily::singletons(4)),
            0
        );
    }
}
