use super::cliques::{maximal_cliques, Bitset};
use super::{FunctionTable, GraphError, IndependentSetFamily, JointPmf};

/// Which alphabet to partition. Bob's relation depends on Alice's family.
#[derive(Clone, Copy, Debug)]
pub enum Side<'a> {
    A,
    B(&'a IndependentSetFamily),
}

/// u and u' are independent when g agrees on every column where both
/// have positive probability.
pub fn alice_independence(u: usize, u2: usize, pmf: &JointPmf, g: &FunctionTable) -> bool {
    (0..pmf.v_size())
        .filter(|&v| pmf.positive(u, v) && pmf.positive(u2, v))
        .all(|v| g.get(u, v) == g.get(u2, v))
}

/// v and v' are independent when, for every set w of Alice's family and
/// every u, u' in w with p(u,v), p(u',v') > 0, g(u,v) = g(u',v').
pub fn bob_independence(
    v: usize,
    v2: usize,
    family_a: &IndependentSetFamily,
    pmf: &JointPmf,
    g: &FunctionTable,
) -> bool {
    family_a.sets().iter().all(|w| {
        w.iter().all(|&u| {
            !pmf.positive(u, v)
                || w.iter()
                    .filter(|&&u2| pmf.positive(u2, v2))
                    .all(|&u2| g.get(u, v) == g.get(u2, v2))
        })
    })
}

/// Set-level check of Bob's predicate over all ordered pairs in `set`,
/// including v = v'.
pub fn bob_set_is_independent(
    set: &[usize],
    family_a: &IndependentSetFamily,
    pmf: &JointPmf,
    g: &FunctionTable,
) -> bool {
    set.iter().all(|&v| {
        set.iter()
            .all(|&v2| bob_independence(v, v2, family_a, pmf, g))
    })
}

/// Maximal independent sets for one side, sorted lexicographically.
pub fn maximal_independent_sets(
    pmf: &JointPmf,
    g: &FunctionTable,
    side: Side<'_>,
) -> Result<IndependentSetFamily, GraphError> {
    g.check_shape(pmf)?;
    let n = match side {
        Side::A => pmf.u_size(),
        Side::B(fa) => {
            if fa.alphabet() != pmf.u_size() {
                return Err(GraphError::DimensionMismatch(format!(
                    "Alice's family covers {} symbols, distribution has {}",
                    fa.alphabet(),
                    pmf.u_size()
                )));
            }
            pmf.v_size()
        }
    };
    if n > 128 {
        return Err(GraphError::AlphabetTooLarge(n));
    }
    let related = |x: usize, y: usize| match side {
        Side::A => alice_independence(x, y, pmf, g),
        Side::B(fa) => bob_independence(x, y, fa, pmf, g) && bob_independence(y, x, fa, pmf, g),
    };
    // Vertices failing the reflexive check cannot be in any set.
    let usable: Vec<bool> = (0..n).map(|x| related(x, x)).collect();
    let mut adjacency: Vec<Bitset> = vec![0; n];
    for x in 0..n {
        for y in (x + 1)..n {
            if usable[x] && usable[y] && related(x, y) {
                adjacency[x] |= 1 << y;
                adjacency[y] |= 1 << x;
            }
        }
    }
    let mut sets: Vec<Vec<usize>> = maximal_cliques(&adjacency)
        .into_iter()
        .filter(|c| c.iter().all(|&x| usable[x]))
        .collect();
    if let Side::B(fa) = side {
        sets.retain(|s| bob_set_is_independent(s, fa, pmf, g));
    }
    if sets.is_empty() {
        return Err(GraphError::NotSpanning {
            missing: (0..n).collect(),
        });
    }
    let family = IndependentSetFamily::new(n, sets, true)?;
    family.require_spanning()?;
    Ok(family)
}

impl IndependentSetFamily {
    /// Check every set against Alice's pairwise independence predicate.
    pub fn validate_alice(&self, pmf: &JointPmf, g: &FunctionTable) -> Result<(), GraphError> {
        for s in self.sets() {
            for &u in s {
                for &u2 in s {
                    if !alice_independence(u, u2, pmf, g) {
                        return Err(GraphError::NotIndependent { set: s.clone() });
                    }
                }
            }
        }
        self.require_spanning()
    }

    /// Check every set against Bob's set-level predicate.
    pub fn validate_bob(
        &self,
        family_a: &IndependentSetFamily,
        pmf: &JointPmf,
        g: &FunctionTable,
    ) -> Result<(), GraphError> {
        for s in self.sets() {
            if !bob_set_is_independent(s, family_a, pmf, g) {
                return Err(GraphError::NotIndependent { set: s.clone() });
            }
        }
        self.require_spanning()
    }
}
