use crate::graph::{
    induce_joint_pmf, maximal_independent_sets, FunctionTable, GraphError, IndependentSetFamily,
    JointPmf, Side,
};
use crate::quantum::{DensityOperator, Operator, Povm};

/// A bipartite state, the two local measurements and the function Bob
/// wants evaluated on their outcomes.
#[derive(Clone, Debug)]
pub struct Instance {
    rho: DensityOperator,
    povm_a: Povm,
    povm_b: Povm,
    g: FunctionTable,
    pmf: JointPmf,
}

impl Instance {
    pub fn new(
        rho: DensityOperator,
        povm_a: Povm,
        povm_b: Povm,
        g: FunctionTable,
    ) -> Result<Self, GraphError> {
        let (da, db) = (povm_a.dim(), povm_b.dim());
        let rho = DensityOperator::new(rho.into_op().with_dims(vec![da, db]).map_err(|_| {
            GraphError::DimensionMismatch(format!(
                "state dimension does not equal {da} x {db} from the measurements"
            ))
        })?)?;
        let pmf = induce_joint_pmf(&rho, &povm_a, &povm_b)?;
        g.check_shape(&pmf)?;
        Ok(Self {
            rho,
            povm_a,
            povm_b,
            g,
            pmf,
        })
    }

    /// Three cards {1,2,3} dealt without replacement; Alice holds `u`, Bob
    /// holds `v`, and g reports who holds the larger card (0: Alice, 1: Bob).
    /// The state is the classically correlated mixture
    /// (1/6) sum_{u != v} |u><u| (x) |v><v|.
    pub fn cards() -> Self {
        let mut diag = vec![0.0; 9];
        for u in 0..3 {
            for v in 0..3 {
                if u != v {
                    diag[u * 3 + v] = 1.0 / 6.0;
                }
            }
        }
        let rho = DensityOperator::new(Operator::from_real_diagonal(&[3, 3], &diag).unwrap())
            .expect("valid state");
        let g = FunctionTable::from_fn(3, 3, |u, v| if u > v { 0 } else { 1 });
        Self::new(
            rho,
            Povm::computational_basis(3),
            Povm::computational_basis(3),
            g,
        )
        .expect("cards instance is valid")
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn povm_a(&self) -> &Povm {
        &self.povm_a
    }

    pub fn povm_b(&self) -> &Povm {
        &self.povm_b
    }

    pub fn g(&self) -> &FunctionTable {
        &self.g
    }

    pub fn pmf(&self) -> &JointPmf {
        &self.pmf
    }

    pub fn dim_a(&self) -> usize {
        self.povm_a.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.povm_b.dim()
    }

    pub fn rho_a(&self) -> DensityOperator {
        self.rho.partial_trace(&[0]).expect("bipartite state")
    }

    pub fn rho_b(&self) -> DensityOperator {
        self.rho.partial_trace(&[1]).expect("bipartite state")
    }

    /// Maximal independent sets of Alice's alphabet.
    pub fn alice_family(&self) -> Result<IndependentSetFamily, GraphError> {
        maximal_independent_sets(&self.pmf, &self.g, Side::A)
    }

    /// Maximal independent sets of Bob's alphabet relative to `family_a`.
    pub fn bob_family(
        &self,
        family_a: &IndependentSetFamily,
    ) -> Result<IndependentSetFamily, GraphError> {
        maximal_independent_sets(&self.pmf, &self.g, Side::B(family_a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cards_pmf_matches_dealing() {
        let inst = Instance::cards();
        for u in 0..3 {
            for v in 0..3 {
                let expect = if u == v { 0.0 } else { 1.0 / 6.0 };
                assert!((inst.pmf().get(u, v) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cards_marginal_is_maximally_mixed() {
        let inst = Instance::cards();
        let a = inst.rho_a();
        assert!(
            a.op()
                .max_abs_diff(&Operator::identity(&[3]).scale(1.0 / 3.0))
                < 1e-15
        );
    }

    #[test]
    fn rejects_wrong_state_dimension() {
        let rho = DensityOperator::maximally_mixed(&[2, 2]);
        let g = FunctionTable::from_fn(3, 3, |_, _| 0);
        assert!(Instance::new(
            rho,
            Povm::computational_basis(3),
            Povm::computational_basis(3),
            g
        )
        .is_err());
    }
}
