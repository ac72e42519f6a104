use nalgebra::DVector;

use super::{Operator, QuantumError, C64, EIGEN_CLIP, RANK_TOL};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POVM_PSD_TOL: f64 = 1e-10;
const POVM_SUM_TOL: f64 = 1e-9;

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self, QuantumError> {
        let residue = op.hermiticity_residue();
        if residue > HERMITIAN_TOL {
            return Err(QuantumError::NotHermitian { residue });
        }
        let trace = op.real_trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::BadTrace { trace });
        }
        let op = op.hermitize_loose();
        if let Some(&min) = op.eigenvalues()?.last() {
            if min < -EIGEN_CLIP {
                return Err(QuantumError::NegativeEigenvalue { value: min });
            }
        }
        Ok(Self { op })
    }

    /// Pure state |psi><psi| from a (not necessarily normalized) vector.
    pub fn pure(dims: &[usize], psi: &DVector<C64>) -> Result<Self, QuantumError> {
        let norm = psi.norm();
        Self::new(Operator::ket_bra(dims, &(psi / C64::new(norm, 0.0)))?)
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self {
            op: Operator::identity(dims).scale(1.0 / d as f64),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            op: self.op.tensor(&other.op),
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        Self {
            op: self.op.tensor_power(n),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, QuantumError> {
        Ok(Self {
            op: self.op.partial_trace(keep)?.hermitize_loose(),
        })
    }

    pub fn permute(&self, order: &[usize]) -> Result<Self, QuantumError> {
        Ok(Self {
            op: self.op.permute(order)?,
        })
    }

    /// Eigenvalues with values in `[-EIGEN_CLIP, 0)` clipped to zero.
    pub fn spectrum(&self) -> Result<Vec<f64>, QuantumError> {
        clip_spectrum(self.op.eigenvalues()?)
    }

    pub fn rank(&self) -> Result<usize, QuantumError> {
        Ok(self.spectrum()?.iter().filter(|&&l| l > RANK_TOL).count())
    }
}

pub(crate) fn clip_spectrum(values: Vec<f64>) -> Result<Vec<f64>, QuantumError> {
    values
        .into_iter()
        .map(|l| {
            if l >= 0.0 {
                Ok(l)
            } else if l >= -EIGEN_CLIP {
                Ok(0.0)
            } else {
                Err(QuantumError::NegativeEigenvalue { value: l })
            }
        })
        .collect()
}

impl Operator {
    /// Symmetrize unconditionally. Only for values already validated as
    /// Hermitian to a looser tolerance (input validation paths).
    pub(crate) fn hermitize_loose(&self) -> Operator {
        let mat = (self.matrix() + self.matrix().adjoint()) * C64::new(0.5, 0.0);
        Operator::new(self.dims().to_vec(), mat).expect("dims unchanged")
    }
}

/// Purification |phi> with the reference system prepended: dims
/// `[r, dims(rho)...]` where `r` is the numerical rank of `rho`.
pub fn purify(rho: &DensityOperator) -> Result<DensityOperator, QuantumError> {
    let eig = rho.op().eigh()?;
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > RANK_TOL)
        .collect();
    let r = kept.len();
    let d = rho.dim();
    let mut psi = DVector::<C64>::zeros(r * d);
    for (slot, &k) in kept.iter().enumerate() {
        let amp = eig.values[k].sqrt();
        for a in 0..d {
            psi[slot * d + a] = eig.vectors[(a, k)] * amp;
        }
    }
    let mut dims = vec![r];
    dims.extend_from_slice(rho.dims());
    let op = Operator::ket_bra(&dims, &psi)?;
    // Dropped eigenvalues are below RANK_TOL; renormalize the residual mass.
    let tr = op.real_trace();
    Ok(DensityOperator {
        op: op.scale(1.0 / tr),
    })
}

/// Indexed family of PSD operators on one subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<Operator>,
    complete: bool,
}

impl Povm {
    /// Complete POVM: elements PSD and summing to the identity.
    pub fn new(elements: Vec<Operator>) -> Result<Self, QuantumError> {
        let sum = Self::validate_elements(&elements)?;
        let id = Operator::identity(sum.dims());
        let deviation = sum.max_abs_diff(&id);
        if deviation > POVM_SUM_TOL {
            return Err(QuantumError::PovmIncomplete { deviation });
        }
        Ok(Self {
            elements,
            complete: true,
        })
    }

    /// Sub-POVM: elements PSD with sum at most the identity.
    pub fn new_sub(elements: Vec<Operator>) -> Result<Self, QuantumError> {
        let sum = Self::validate_elements(&elements)?;
        let max = sum.max_eigenvalue()?;
        if max > 1.0 + POVM_SUM_TOL {
            return Err(QuantumError::PovmOverfull { max });
        }
        Ok(Self {
            elements,
            complete: false,
        })
    }

    fn validate_elements(elements: &[Operator]) -> Result<Operator, QuantumError> {
        let first = elements.first().ok_or(QuantumError::EmptyPovm)?;
        let mut sum = Operator::zeros(first.dims());
        for (index, el) in elements.iter().enumerate() {
            let residue = el.hermiticity_residue();
            if residue > POVM_PSD_TOL {
                return Err(QuantumError::NotHermitian { residue });
            }
            let min = el.eigenvalues()?.last().copied().unwrap_or(0.0);
            if min < -POVM_PSD_TOL {
                return Err(QuantumError::PovmElementNotPsd { index, min });
            }
            sum = sum.try_add(el)?;
        }
        Ok(sum)
    }

    /// Computational-basis projective measurement on a `d`-dimensional system.
    pub fn computational_basis(d: usize) -> Self {
        Self {
            elements: (0..d).map(|k| Operator::basis_projector(d, k)).collect(),
            complete: true,
        }
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Operator {
        &self.elements[i]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn dims(&self) -> &[usize] {
        self.elements[0].dims()
    }

    pub fn sum(&self) -> Operator {
        let mut sum = Operator::zeros(self.dims());
        for el in &self.elements {
            sum.add_scaled(1.0, el).expect("validated dims");
        }
        sum
    }

    /// Square roots of the elements, used for Lüders post-measurement states.
    pub fn sqrt_elements(&self) -> Result<Vec<Operator>, QuantumError> {
        self.elements.iter().map(|e| e.sqrt_psd()).collect()
    }
}
