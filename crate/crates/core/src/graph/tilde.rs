use serde::Serialize;

use super::{FunctionTable, GraphError, IndependentSetFamily, JointPmf};

/// g~ on pairs of set labels. `None` marks a cell with no positive
/// probability pair; such cells evaluate to output index 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedFunction {
    rows: usize,
    cols: usize,
    cells: Vec<Option<usize>>,
}

impl LiftedFunction {
    pub const UNCONSTRAINED_LABEL: usize = 0;

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, wa: usize, wb: usize) -> Option<usize> {
        self.cells[wa * self.cols + wb]
    }

    /// Output index, with unconstrained cells mapped to the designated label.
    pub fn eval(&self, wa: usize, wb: usize) -> usize {
        self.cell(wa, wb).unwrap_or(Self::UNCONSTRAINED_LABEL)
    }
}

/// g~(w_A, w_B) = g(u, v) for any u in w_A, v in w_B with p(u, v) > 0.
pub fn build_tilde_g(
    ga: &IndependentSetFamily,
    gb: &IndependentSetFamily,
    pmf: &JointPmf,
    g: &FunctionTable,
) -> Result<LiftedFunction, GraphError> {
    g.check_shape(pmf)?;
    ga.require_spanning()?;
    gb.require_spanning()?;
    if ga.alphabet() != pmf.u_size() || gb.alphabet() != pmf.v_size() {
        return Err(GraphError::DimensionMismatch(
            "family alphabets do not match the distribution".into(),
        ));
    }
    let mut cells = Vec::with_capacity(ga.len() * gb.len());
    for (wa, set_a) in ga.sets().iter().enumerate() {
        for (wb, set_b) in gb.sets().iter().enumerate() {
            let mut value: Option<usize> = None;
            for &u in set_a {
                for &v in set_b {
                    if !pmf.positive(u, v) {
                        continue;
                    }
                    let z = g.get(u, v);
                    match value {
                        None => value = Some(z),
                        Some(first) if first != z => {
                            return Err(GraphError::Inconsistent {
                                wa,
                                wb,
                                first,
                                second: z,
                            })
                        }
                        _ => {}
                    }
                }
            }
            cells.push(value);
        }
    }
    Ok(LiftedFunction {
        rows: ga.len(),
        cols: gb.len(),
        cells,
    })
}
