use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use super::QuantumError;

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;

/// Largest tolerated anti-Hermitian residue before [`Operator::hermitize`]
/// reports an error instead of symmetrizing.
pub const HERMITIZE_TOL: f64 = 1e-12;

/// Dense complex operator on an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    mat: Matrix,
}

/// Spectral decomposition of a Hermitian operator, eigenvalues in
/// descending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Operator {
    pub fn new(dims: Vec<usize>, mat: Matrix) -> Result<Self, QuantumError> {
        if mat.nrows() != mat.ncols() {
            return Err(QuantumError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(QuantumError::BadDims(dims));
        }
        let total: usize = dims.iter().product();
        if total != mat.nrows() {
            return Err(QuantumError::DimensionMismatch {
                expected: total,
                found: mat.nrows(),
            });
        }
        Ok(Self { dims, mat })
    }

    /// Single-subsystem operator.
    pub fn from_matrix(mat: Matrix) -> Result<Self, QuantumError> {
        let d = mat.nrows();
        Self::new(vec![d], mat)
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            mat: Matrix::identity(d, d),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            mat: Matrix::zeros(d, d),
        }
    }

    pub fn from_real_diagonal(dims: &[usize], diag: &[f64]) -> Result<Self, QuantumError> {
        let d: usize = dims.iter().product();
        if diag.len() != d {
            return Err(QuantumError::DimensionMismatch {
                expected: d,
                found: diag.len(),
            });
        }
        let v = DVector::from_iterator(d, diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self {
            dims: dims.to_vec(),
            mat: Matrix::from_diagonal(&v),
        })
    }

    /// Rank-one operator |psi><psi| (no normalization).
    pub fn ket_bra(dims: &[usize], psi: &DVector<C64>) -> Result<Self, QuantumError> {
        let mat = psi * psi.adjoint();
        Self::new(dims.to_vec(), mat)
    }

    /// Computational basis projector |k><k| on a single subsystem of dimension `d`.
    pub fn basis_projector(d: usize, k: usize) -> Self {
        let mut mat = Matrix::zeros(d, d);
        mat[(k, k)] = C64::new(1.0, 0.0);
        Self { dims: vec![d], mat }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn into_matrix(self) -> Matrix {
        self.mat
    }

    /// Same matrix, relabelled subsystem structure.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self, QuantumError> {
        Self::new(dims, self.mat)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn real_trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: &self.mat * C64::new(c, 0.0),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max |X - X^dagger| elementwise.
    pub fn hermiticity_residue(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let r = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residue() <= tol
    }

    /// Replace X by (X + X^dagger)/2 when the residue is at round-off level.
    pub fn hermitize(&self) -> Result<Self, QuantumError> {
        let residue = self.hermiticity_residue();
        if residue > HERMITIZE_TOL * self.max_abs().max(1.0) {
            return Err(QuantumError::NotHermitian { residue });
        }
        let mat = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self {
            dims: self.dims.clone(),
            mat,
        })
    }

    fn check_same_dims(&self, other: &Self) -> Result<(), QuantumError> {
        if self.dims != other.dims {
            return Err(QuantumError::SubsystemMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, QuantumError> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, QuantumError> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, QuantumError> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<(), QuantumError> {
        self.check_same_dims(other)?;
        self.mat += &other.mat * C64::new(c, 0.0);
        Ok(())
    }

    /// A X A^dagger.
    pub fn sandwich(a: &Self, x: &Self) -> Result<Self, QuantumError> {
        a.check_same_dims(x)?;
        Ok(Self {
            dims: x.dims.clone(),
            mat: &a.mat * &x.mat * a.mat.adjoint(),
        })
    }

    /// Kronecker product; subsystem lists are concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// n-fold tensor power; `n == 0` gives the scalar 1 on a trivial subsystem.
    pub fn tensor_power(&self, n: usize) -> Self {
        if n == 0 {
            return Self::identity(&[1]);
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }

    pub fn tensor_all<'a, I>(ops: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Operator>,
    {
        let mut iter = ops.into_iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |acc, op| acc.tensor(op)))
    }

    /// Trace out every subsystem not listed in `keep`. The kept subsystems
    /// retain their original relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, QuantumError> {
        let k = self.dims.len();
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if keep_sorted.is_empty()
            || keep_sorted.len() != keep.len()
            || keep_sorted.iter().any(|&i| i >= k)
        {
            return Err(QuantumError::BadSubsystemSelection {
                keep: keep.to_vec(),
                count: k,
            });
        }
        let traced: Vec<usize> = (0..k).filter(|i| !keep_sorted.contains(i)).collect();
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&i| self.dims[i]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| self.dims[i]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced_dims.iter().product();
        let strides = strides(&self.dims);

        let offsets = |subsystems: &[usize], sub_dims: &[usize], count: usize| -> Vec<usize> {
            (0..count)
                .map(|flat| {
                    let digits = unflatten(flat, sub_dims);
                    subsystems
                        .iter()
                        .zip(digits)
                        .map(|(&s, d)| d * strides[s])
                        .sum()
                })
                .collect()
        };
        let kept_off = offsets(&keep_sorted, &kept_dims, dk);
        let traced_off = offsets(&traced, &traced_dims, dt);

        let mut out = Matrix::zeros(dk, dk);
        for (a, &ra) in kept_off.iter().enumerate() {
            for (b, &rb) in kept_off.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &t in &traced_off {
                    acc += self.mat[(ra + t, rb + t)];
                }
                out[(a, b)] = acc;
            }
        }
        Self::new(kept_dims, out)
    }

    /// Reorder subsystems: subsystem `order[i]` of `self` becomes subsystem `i`.
    pub fn permute(&self, order: &[usize]) -> Result<Self, QuantumError> {
        let k = self.dims.len();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..k).collect::<Vec<_>>() {
            return Err(QuantumError::BadSubsystemSelection {
                keep: order.to_vec(),
                count: k,
            });
        }
        let new_dims: Vec<usize> = order.iter().map(|&i| self.dims[i]).collect();
        let old_strides = strides(&self.dims);
        let d = self.dim();
        let map: Vec<usize> = (0..d)
            .map(|flat| {
                unflatten(flat, &new_dims)
                    .into_iter()
                    .zip(order)
                    .map(|(digit, &old)| digit * old_strides[old])
                    .sum()
            })
            .collect();
        let mat = Matrix::from_fn(d, d, |a, b| self.mat[(map[a], map[b])]);
        Self::new(new_dims, mat)
    }

    /// Eigendecomposition of a Hermitian operator (descending eigenvalues).
    pub fn eigh(&self) -> Result<Eigh, QuantumError> {
        let h = self.hermitize()?;
        let eig = SymmetricEigen::new(h.mat);
        let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = Matrix::from_columns(
            &idx.iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok(Eigh { values, vectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, QuantumError> {
        Ok(self.eigh()?.values)
    }

    pub fn max_eigenvalue(&self) -> Result<f64, QuantumError> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// Rebuild sum_k f(lambda_k) |e_k><e_k| from a Hermitian operator.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Result<Self, QuantumError> {
        let Eigh { values, vectors } = self.eigh()?;
        let fv = DVector::from_iterator(values.len(), values.iter().map(|&l| C64::new(f(l), 0.0)));
        let mat = &vectors * Matrix::from_diagonal(&fv) * vectors.adjoint();
        Self::new(self.dims.clone(), mat)
    }

    /// Square root of a PSD operator; eigenvalues in [-tol, 0) are clipped.
    pub fn sqrt_psd(&self) -> Result<Self, QuantumError> {
        let values = self.eigenvalues()?;
        if let Some(&min) = values.last() {
            if min < -super::EIGEN_CLIP {
                return Err(QuantumError::NegativeEigenvalue { value: min });
            }
        }
        self.spectral_map(|l| l.max(0.0).sqrt())
    }

    /// Pseudo-inverse of the square root, restricted to eigenvalues above `threshold`.
    pub fn pinv_sqrt(&self, threshold: f64) -> Result<Self, QuantumError> {
        self.spectral_map(|l| if l > threshold { 1.0 / l.sqrt() } else { 0.0 })
    }

    /// Projector onto the eigenvectors whose eigenvalue satisfies `keep`.
    pub fn spectral_projector(&self, keep: impl Fn(f64) -> bool) -> Result<Self, QuantumError> {
        self.spectral_map(|l| if keep(l) { 1.0 } else { 0.0 })
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        if self.is_hermitian(HERMITIZE_TOL * self.max_abs().max(1.0)) {
            if let Ok(values) = self.eigenvalues() {
                return values.iter().map(|l| l.abs()).sum();
            }
        }
        self.mat.clone().singular_values().iter().copied().sum()
    }

    /// Tr[self * other].
    pub fn trace_product(&self, other: &Self) -> Result<C64, QuantumError> {
        self.check_same_dims(other)?;
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Largest elementwise |X - Y|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.mat.shape() != other.mat.shape() {
            return f64::INFINITY;
        }
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator dimensions must agree")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimensions must agree")
    }
}

/// Row-major strides for a list of subsystem dimensions.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Split a flat index into per-subsystem digits (most significant first).
pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        digits[i] = flat % dims[i];
        flat /= dims[i];
    }
    digits
}

pub fn flatten(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}
