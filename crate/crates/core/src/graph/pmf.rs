use serde::Serialize;

use super::GraphError;
use crate::quantum::{DensityOperator, Povm};

/// Probabilities at or below this value count as zero.
pub const POSITIVE_TOL: f64 = 1e-12;

const SUM_TOL: f64 = 1e-9;

/// Joint distribution p(u, v), stored row-major by `u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointPmf {
    u_size: usize,
    v_size: usize,
    p: Vec<f64>,
}

impl JointPmf {
    pub fn new(u_size: usize, v_size: usize, p: Vec<f64>) -> Result<Self, GraphError> {
        if u_size == 0 || v_size == 0 || p.len() != u_size * v_size {
            return Err(GraphError::InvalidPmf(format!(
                "{} entries for a {u_size}x{v_size} table",
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(GraphError::InvalidPmf(format!("entry {bad} is negative")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(GraphError::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self { u_size, v_size, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let v_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != v_size) {
            return Err(GraphError::InvalidPmf("ragged rows".into()));
        }
        Self::new(rows.len(), v_size, rows.concat())
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.p[u * self.v_size + v]
    }

    pub fn positive(&self, u: usize, v: usize) -> bool {
        self.get(u, v) > POSITIVE_TOL
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    pub fn marginal_u(&self) -> Vec<f64> {
        (0..self.u_size)
            .map(|u| (0..self.v_size).map(|v| self.get(u, v)).sum())
            .collect()
    }

    pub fn marginal_v(&self) -> Vec<f64> {
        (0..self.v_size)
            .map(|v| (0..self.u_size).map(|u| self.get(u, v)).sum())
            .collect()
    }

    /// The same distribution with the roles of U and V exchanged.
    pub fn transpose(&self) -> Self {
        let mut p = vec![0.0; self.p.len()];
        for u in 0..self.u_size {
            for v in 0..self.v_size {
                p[v * self.u_size + u] = self.get(u, v);
            }
        }
        Self {
            u_size: self.v_size,
            v_size: self.u_size,
            p,
        }
    }
}

/// The function g(u, v) as a table of output indices in `0..z_count`.
/// `labels[z]` holds the user-facing integer for output index `z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionTable {
    u_size: usize,
    v_size: usize,
    table: Vec<usize>,
    labels: Vec<i64>,
}

impl FunctionTable {
    /// Build from integer labels. The output alphabet is the contiguous
    /// range `min..=max` of the labels present.
    pub fn new(rows: &[Vec<i64>]) -> Result<Self, GraphError> {
        let u_size = rows.len();
        let v_size = rows.first().map_or(0, Vec::len);
        if u_size == 0 || v_size == 0 {
            return Err(GraphError::InvalidTable("empty table".into()));
        }
        if let Some((u, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != v_size) {
            return Err(GraphError::InvalidTable(format!(
                "row {} has {} entries, expected {v_size}",
                u + 1,
                r.len()
            )));
        }
        let min = *rows.iter().flatten().min().expect("nonempty");
        let max = *rows.iter().flatten().max().expect("nonempty");
        let span = (max - min) as usize + 1;
        if span > 1 << 20 {
            return Err(GraphError::InvalidTable(format!(
                "label range {min}..={max} is too wide"
            )));
        }
        let table = rows.iter().flatten().map(|&z| (z - min) as usize).collect();
        Ok(Self {
            u_size,
            v_size,
            table,
            labels: (min..=max).collect(),
        })
    }

    pub fn from_fn(u_size: usize, v_size: usize, f: impl Fn(usize, usize) -> i64) -> Self {
        let rows: Vec<Vec<i64>> = (0..u_size)
            .map(|u| (0..v_size).map(|v| f(u, v)).collect())
            .collect();
        Self::new(&rows).expect("nonempty table")
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    /// Output index of g(u, v).
    pub fn get(&self, u: usize, v: usize) -> usize {
        self.table[u * self.v_size + v]
    }

    pub fn z_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, z: usize) -> i64 {
        self.labels[z]
    }

    pub fn check_shape(&self, pmf: &JointPmf) -> Result<(), GraphError> {
        if self.u_size != pmf.u_size() || self.v_size != pmf.v_size() {
            return Err(GraphError::DimensionMismatch(format!(
                "function table is {}x{}, distribution is {}x{}",
                self.u_size,
                self.v_size,
                pmf.u_size(),
                pmf.v_size()
            )));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut table = vec![0; self.table.len()];
        for u in 0..self.u_size {
            for v in 0..self.v_size {
                table[v * self.u_size + u] = self.get(u, v);
            }
        }
        Self {
            u_size: self.v_size,
            v_size: self.u_size,
            table,
            labels: self.labels.clone(),
        }
    }
}

/// p(u, v) = Tr[(Lambda_u (x) Lambda_v) rho] for a state on A (x) B.
pub fn induce_joint_pmf(
    rho: &DensityOperator,
    povm_a: &Povm,
    povm_b: &Povm,
) -> Result<JointPmf, GraphError> {
    if !povm_a.is_complete() || !povm_b.is_complete() {
        return Err(GraphError::InvalidPmf(
            "both measurements must be complete POVMs".into(),
        ));
    }
    let (da, db) = (povm_a.dim(), povm_b.dim());
    if rho.dim() != da * db {
        return Err(GraphError::DimensionMismatch(format!(
            "state has dimension {}, measurements act on {da}x{db}",
            rho.dim()
        )));
    }
    let rho = rho.op().clone().with_dims(vec![da, db])?;
    let id_b = crate::quantum::Operator::identity(&[db]);
    let mut p = Vec::with_capacity(povm_a.len() * povm_b.len());
    for lu in povm_a.elements() {
        let cond_b = lu.tensor(&id_b).try_mul(&rho)?.partial_trace(&[1])?;
        for lv in povm_b.elements() {
            let x = lv.trace_product(&cond_b)?.re;
            if x < -POSITIVE_TOL {
                return Err(GraphError::InvalidPmf(format!(
                    "Born-rule probability {x:.3e} is negative"
                )));
            }
            p.push(x.max(0.0));
        }
    }
    let total: f64 = p.iter().sum();
    for x in &mut p {
        if *x <= POSITIVE_TOL {
            *x = 0.0;
        }
        *x /= total;
    }
    JointPmf::new(povm_a.len(), povm_b.len(), p)
}
