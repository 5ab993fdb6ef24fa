//! Dense complex linear algebra sized for the small operators used here
//! (dims 2, 4 and 36): Pauli and tensor construction, Hilbert-Schmidt
//! geometry, partial traces, and a deterministic cyclic-Jacobi Hermitian
//! eigensolver.
//!
//! All types are immutable after construction and all operations are pure,
//! so values can be shared freely between worker threads.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Absolute entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor for density matrices.
pub const DENSITY_EIG_FLOOR: f64 = -1e-10;
/// Purity tolerance for treating a state as pure.
pub const PURITY_TOL: f64 = 1e-10;
/// Off-diagonal-norm stopping threshold of the Jacobi sweeps, relative to
/// max(1, ||M||_F).
pub const JACOBI_OFF_TOL: f64 = 1e-14;

const MAX_JACOBI_SWEEPS: usize = 64;

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix in row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C1;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "data length must match dimensions"
        );
        Self {
            rows,
            cols,
            data: entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Column vector for the standard basis state `j` in dimension `dim`.
    pub fn basis_ket(dim: usize, j: usize) -> Self {
        assert!(j < dim, "basis index out of range");
        let mut m = Self::zeros(dim, 1);
        m.data[j] = C1;
        m
    }

    /// Projector onto the standard basis state `j` in dimension `dim`.
    pub fn basis_proj(dim: usize, j: usize) -> Self {
        assert!(j < dim, "basis index out of range");
        let mut m = Self::zeros(dim, dim);
        m.data[j * dim + j] = C1;
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Dimension of a square matrix.
    #[inline]
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    /// Kronecker product with row-major block convention: `self`'s indices
    /// are the outer (slow) ones.
    pub fn tensor(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.data[i1 * self.cols + j1];
                if a == C0 {
                    continue;
                }
                for i2 in 0..other.rows {
                    let row = (i1 * other.rows + i2) * cols + j1 * other.cols;
                    for j2 in 0..other.cols {
                        out.data[row + j2] = a * other.data[i2 * other.cols + j2];
                    }
                }
            }
        }
        out
    }

    /// Hilbert-Schmidt inner product `tr(self^dag * other)`.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> Result<Complex64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimMismatch {
                left: self.rows.max(self.cols),
                right: other.rows.max(other.cols),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced infinity norm (max absolute row sum); upper-bounds the
    /// spectral norm of a Hermitian matrix.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Partial trace in the fixed subsystem ordering: `dims` factor the
    /// matrix dimension, `keep` lists the (ascending) subsystem indices that
    /// survive.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
        if !self.is_square() {
            return Err(Error::DimMismatch {
                left: self.rows,
                right: self.cols,
            });
        }
        let n = self.rows;
        let prod: usize = dims.iter().product();
        if prod != n || dims.contains(&0) {
            return Err(Error::InconsistentDims {
                dims: dims.to_vec(),
                dim: n,
            });
        }
        let m = dims.len();
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= m) {
            return Err(Error::InconsistentDims {
                dims: dims.to_vec(),
                dim: n,
            });
        }
        let traced: Vec<usize> = (0..m).filter(|i| !keep.contains(i)).collect();
        let out_dim: usize = keep.iter().map(|&k| dims[k]).product();

        // Multi-index decomposition table for every flat index.
        let decompose = |mut flat: usize| -> Vec<usize> {
            let mut idx = vec![0usize; m];
            for s in (0..m).rev() {
                idx[s] = flat % dims[s];
                flat /= dims[s];
            }
            idx
        };
        let table: Vec<Vec<usize>> = (0..n).map(decompose).collect();
        let out_index = |idx: &[usize]| -> usize {
            let mut flat = 0usize;
            for &k in keep {
                flat = flat * dims[k] + idx[k];
            }
            flat
        };

        let mut out = ComplexMatrix::zeros(out_dim.max(1), out_dim.max(1));
        for r in 0..n {
            let ridx = &table[r];
            for (c, cidx) in table.iter().enumerate() {
                if traced.iter().all(|&t| ridx[t] == cidx[t]) {
                    let oi = out_index(ridx);
                    let oj = out_index(cidx);
                    out.data[oi * out.cols + oj] += self.data[r * n + c];
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_re(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(other)
    }
}

/// Pauli X.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Pauli Y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![C0, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), C0],
    )
}

/// Pauli Z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Square complex matrix constrained to be Hermitian.
///
/// Construction symmetrises `(M + M^dag)/2` when the deviation is within
/// [`HERMITICITY_TOL`] and rejects the input otherwise, so float round-off
/// is absorbed without masking genuine bugs.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimMismatch {
                left: m.rows,
                right: m.cols,
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = m.rows;
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (m.get(i, j) - m.get(j, i).conj()).norm();
                deviation = deviation.max(d);
            }
        }
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation,
                tol: HERMITICITY_TOL,
            });
        }
        let mut sym = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = sym.get(i, j);
                let avg = (upper + sym.get(j, i).conj()) * 0.5;
                sym.set(i, j, avg);
                sym.set(j, i, avg.conj());
            }
            let d = sym.get(i, i);
            sym.set(i, i, Complex64::new(d.re, 0.0));
        }
        Ok(Self(sym))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    /// Full eigendecomposition, eigenvalues ascending with matching
    /// orthonormal eigenvector columns.
    pub fn eig(&self) -> Spectrum {
        let n = self.dim();
        let mut a = self.0.data.clone();
        let mut v = ComplexMatrix::identity(n).data;
        jacobi_hermitian(&mut a, n, Some(&mut v));
        let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let mut vecs = vec![C0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                vecs[k * n + new_col] = v[k * n + old_col];
            }
        }
        Spectrum {
            eigenvalues,
            eigenvectors: Some(ComplexMatrix::new(n, n, vecs)),
        }
    }

    /// Eigenvalues only, ascending. Cheaper than [`Self::eig`].
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = self.0.data.clone();
        jacobi_hermitian(&mut a, n, None);
        let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let mut a = self.0.data.clone();
        jacobi_hermitian(&mut a, n, None);
        (0..n)
            .map(|i| a[i * n + i].re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let n = self.dim();
        let mut a = self.0.data.clone();
        jacobi_hermitian(&mut a, n, None);
        (0..n)
            .map(|i| a[i * n + i].re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

/// Eigendecomposition result: eigenvalues ascending, optional unitary
/// column set of eigenvectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<ComplexMatrix>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&ComplexMatrix> {
        self.eigenvectors.as_ref()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Eigenvector column `k` as a `dim x 1` matrix.
    pub fn eigenvector(&self, k: usize) -> Option<ComplexMatrix> {
        self.eigenvectors.as_ref().map(|v| {
            let n = v.rows();
            ComplexMatrix::from_fn(n, 1, |i, _| v.get(i, k))
        })
    }
}

/// Positive semidefinite Hermitian matrix of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.matrix().trace().re;
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::NotDensity {
                reason: format!("trace = {tr}"),
            });
        }
        let min = h.min_eigenvalue();
        if min < DENSITY_EIG_FLOOR {
            return Err(Error::NotDensity {
                reason: format!("min eigenvalue = {min:.3e}"),
            });
        }
        Ok(Self(h))
    }

    /// Density matrix `|v><v| / <v|v>` of a pure state given as a column
    /// vector.
    pub fn from_pure(ket: &ComplexMatrix) -> Result<Self> {
        assert_eq!(ket.cols(), 1, "pure state must be a column vector");
        let norm_sq: f64 = ket.data().iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::NotDensity {
                reason: format!("state vector norm^2 = {norm_sq}"),
            });
        }
        let proj = ket.matmul(&ket.adjoint()).scale_re(1.0 / norm_sq);
        Self::new(HermitianMatrix::new(proj)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64);
        Self(HermitianMatrix::new(m).expect("identity is Hermitian"))
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix().hs_inner(self.matrix()).expect("same dims").re
    }

    /// Fidelity with a pure state; equals the Hilbert-Schmidt inner product
    /// because the second argument is pure.
    pub fn fidelity_with_pure(&self, phi: &DensityMatrix) -> Result<f64> {
        let purity = phi.purity();
        if (purity - 1.0).abs() > PURITY_TOL {
            return Err(Error::NotPure { purity });
        }
        Ok(self.matrix().hs_inner(phi.matrix())?.re)
    }
}

/// Cyclic Jacobi sweeps on a Hermitian matrix stored row-major in `a`.
///
/// Terminates when the off-diagonal Frobenius norm falls below
/// [`JACOBI_OFF_TOL`] relative to max(1, ||A||_F). If `vecs` is given it
/// must hold the identity on entry and accumulates the diagonalising
/// unitary, so that A_in = V diag(A_out) V^dag.
pub(crate) fn jacobi_hermitian(a: &mut [Complex64], n: usize, mut vecs: Option<&mut [Complex64]>) {
    if n <= 1 {
        return;
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let stop = (JACOBI_OFF_TOL * scale) * (JACOBI_OFF_TOL * scale);
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if 2.0 * off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let om_conj = (apq / r).conj();
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q] * om_conj;
                    let new_kp = akp * c - akq * s;
                    let new_kq = akp * s + akq * c;
                    a[k * n + p] = new_kp;
                    a[k * n + q] = new_kq;
                    a[p * n + k] = new_kp.conj();
                    a[q * n + k] = new_kq.conj();
                }
                a[p * n + p] = Complex64::new(app - t * r, 0.0);
                a[q * n + q] = Complex64::new(aqq + t * r, 0.0);
                a[p * n + q] = C0;
                a[q * n + p] = C0;
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q] * om_conj;
                        v[k * n + p] = vkp * c - vkq * s;
                        v[k * n + q] = vkp * s + vkq * c;
                    }
                }
            }
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix given as a raw row-major
/// buffer; the hot path of the grid scan. The buffer is destroyed.
pub(crate) fn min_eigenvalue_raw(a: &mut [Complex64], n: usize) -> f64 {
    jacobi_hermitian(a, n, None);
    (0..n)
        .map(|i| a[i * n + i].re)
        .fold(f64::INFINITY, f64::min)
}
