//! Dense complex matrix kernels.
//!
//! [`ComplexMatrix`] wraps a `nalgebra` dense matrix and adds the handful of
//! operations the rest of the crate needs: checked Kronecker products,
//! Hermitian eigendecomposition with descending eigenvalues, SVD, operator
//! absolute value / signum with a scale-relative kernel cutoff, and partial
//! traces of bipartite pure states.
//!
//! Serialized matrices are always row-major, `[[re, im], ...]`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{contract, Error, Result};

pub type C64 = Complex64;

/// Largest row or column count any constructed matrix may have.
pub const MAX_DIM: usize = 4096;

/// Relative cutoff below which eigenvalues count as zero.
pub const KERNEL_RTOL: f64 = 1e-9;

/// Tolerance for the Hermitian precondition of the spectral routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

fn check_cap(rows: usize, cols: usize) -> Result<()> {
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Capacity(format!(
            "{rows}x{cols} exceeds the {MAX_DIM}x{MAX_DIM} cap"
        )));
    }
    Ok(())
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 64 {
            write!(f, " {}", self.0)?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(contract("matrix dimensions must be positive"));
        }
        check_cap(rows, cols)?;
        if entries.len() != rows * cols {
            return Err(contract(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(contract("matrix entries must be finite"));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(contract("ragged rows"));
        }
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::from_row_major(r, c, entries)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_row_major(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::diag_real(&[1.0, -1.0])
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn row_major_entries(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm_op(&self) -> f64 {
        self.0
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `‖M² − Id‖_max` for square matrices.
    pub fn involution_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&(self * self) - &Self::identity(self.rows())).norm_max()
    }

    /// Hermitian and squares to the identity.
    pub fn is_observable(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.involution_defect() <= tol
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let (r1, c1) = (self.rows(), self.cols());
        let (r2, c2) = (other.rows(), other.cols());
        check_cap(r1 + r2, c1 + c2)?;
        let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
        m.view_mut((0, 0), (r1, c1)).copy_from(&self.0);
        m.view_mut((r1, c1), (r2, c2)).copy_from(&other.0);
        Ok(Self(m))
    }

    /// Copies out the `(rows, cols)` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self(self.0.view((r0, c0), (rows, cols)).into_owned())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows() == other.rows()
            && self.cols() == other.cols()
            && (self - other).norm_max() <= tol
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.row_major_entries().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MatrixFile::deserialize(d)?;
        let entries = f.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_row_major(f.rows, f.cols, entries).map_err(D::Error::custom)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    match (rows, cols) {
        (Some(r), Some(c)) => check_cap(r, c)?,
        _ => return Err(Error::Capacity("kron dimension overflow".into())),
    }
    Ok(ComplexMatrix(a.0.kronecker(&b.0)))
}

/// Kronecker product of a non-empty list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut iter = factors.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| contract("kron_all needs at least one factor"))?
        .clone();
    iter.try_fold(first, |acc, f| kron(&acc, f))
}

/// Spectral decomposition `M = U diag(λ) U†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let u = &self.vectors;
        let d = ComplexMatrix::diag_real(&self.values);
        &(u * &d) * &u.adjoint()
    }

    /// `Σ f(λₖ) Pₖ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let u = &self.vectors;
        &(u * &ComplexMatrix::diag_real(&mapped)) * &u.adjoint()
    }
}

pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(contract("herm_eig needs a square matrix"));
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(contract(format!(
            "matrix is not Hermitian (max |M - M†| = {defect:.3e})"
        )));
    }
    let sym = (&m.0 + m.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Solver("Hermitian eigensolver did not converge".into()))?;
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// Thin singular value decomposition `M = U diag(s) V†`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Singular values, descending.
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.s.len();
        let d = ComplexMatrix::from_fn(k, k, |i, j| {
            if i == j {
                C64::new(self.s[i], 0.0)
            } else {
                ZERO
            }
        });
        &(&self.u * &d) * &self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let dec = nalgebra::SVD::try_new(m.0.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Solver("SVD did not converge".into()))?;
    let u = dec.u.ok_or_else(|| Error::Solver("SVD returned no U".into()))?;
    let v_t = dec.v_t.ok_or_else(|| Error::Solver("SVD returned no V".into()))?;
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(v_t.ncols(), k, |i, j| v_t[(order[j], i)].conj());
    Ok(Svd {
        u: ComplexMatrix(u),
        s,
        v: ComplexMatrix(v),
    })
}

/// Moore–Penrose pseudo-inverse with the scale-relative kernel cutoff.
pub fn pinv(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    let cutoff = KERNEL_RTOL * dec.s.first().copied().unwrap_or(0.0);
    let k = dec.s.len();
    let inv = ComplexMatrix::from_fn(k, k, |i, j| {
        if i == j && dec.s[i] > cutoff {
            C64::new(1.0 / dec.s[i], 0.0)
        } else {
            ZERO
        }
    });
    Ok(&(&dec.v * &inv) * &dec.u.adjoint())
}

/// `|M|`, `M/|M|` and the kernel projector of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct AbsSignum {
    pub abs: ComplexMatrix,
    pub signum: ComplexMatrix,
    /// Projector onto eigenvectors whose eigenvalue fell below the cutoff.
    pub kernel: ComplexMatrix,
}

pub fn op_abs_signum(m: &ComplexMatrix) -> Result<AbsSignum> {
    let eig = herm_eig(m)?;
    let scale = eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let tau = KERNEL_RTOL * scale;
    let is_zero = |l: f64| l.abs() <= tau;
    let abs = eig.map_spectrum(|l| if is_zero(l) { 0.0 } else { l.abs() });
    let signum = eig.map_spectrum(|l| if is_zero(l) { 0.0 } else { l.signum() });
    let kernel = eig.map_spectrum(|l| if is_zero(l) { 1.0 } else { 0.0 });
    Ok(AbsSignum {
        abs,
        signum,
        kernel,
    })
}

/// A unit vector in `C^{dimA} ⊗ C^{dimB}`, index `(a, b) ↦ a·dimB + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: Vec<C64>,
}

pub const STATE_NORM_TOL: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct StateFile {
    #[serde(rename = "dimA")]
    dim_a: usize,
    #[serde(rename = "dimB")]
    dim_b: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for BipartiteState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = StateFile::deserialize(d)?;
        let amps = f.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        BipartiteState::new(f.dim_a, f.dim_b, amps).map_err(D::Error::custom)
    }
}

/// Which subsystem(s) a partial trace keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
    /// With `A = A₁ ⊗ A₂` and `B = B₁ ⊗ B₂`, keep `A₁ ⊗ B₁` where
    /// `dim A₁ = a_dim` and `dim B₁ = b_dim` are the leading factors.
    Split { a_dim: usize, b_dim: usize },
}

impl BipartiteState {
    /// Takes amplitudes that must already have unit norm.
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(contract("state dimensions must be positive"));
        }
        check_cap(dim_a, dim_b)?;
        if amplitudes.len() != dim_a * dim_b {
            return Err(contract(format!(
                "expected {} amplitudes for dims ({dim_a}, {dim_b}), got {}",
                dim_a * dim_b,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(contract("state amplitudes must be finite"));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(contract(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(dim_a: usize, dim_b: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(contract("cannot normalize a zero vector"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(dim_a, dim_b, amplitudes)
    }

    /// `D^{-1/2} Σ |i⟩|i⟩`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        let mut amps = vec![ZERO; d * d];
        let w = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            amps[i * d + i] = C64::new(w, 0.0);
        }
        Self::normalized(d, d, amps)
    }

    /// `|a⟩|b⟩` for computational basis indices.
    pub fn product_basis(dim_a: usize, dim_b: usize, a: usize, b: usize) -> Result<Self> {
        if a >= dim_a || b >= dim_b {
            return Err(contract("basis index out of range"));
        }
        let mut amps = vec![ZERO; dim_a * dim_b];
        amps[a * dim_b + b] = ONE;
        Self::new(dim_a, dim_b, amps)
    }

    /// Builds the state from its `dimA × dimB` coefficient matrix.
    pub fn from_coefficients(psi: &ComplexMatrix) -> Result<Self> {
        Self::normalized(psi.rows(), psi.cols(), psi.row_major_entries())
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// The `dimA × dimB` coefficient matrix `Ψ` with `|ψ⟩ = Σ Ψ_{ab}|a⟩|b⟩`.
    pub fn coefficients(&self) -> ComplexMatrix {
        ComplexMatrix(DMatrix::from_row_slice(self.dim_a, self.dim_b, &self.amplitudes))
    }

    /// `|ψ⟩ ⊗ |φ⟩` regrouped as `(A_self ⊗ A_other) ⊗ (B_self ⊗ B_other)`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let da = self.dim_a * other.dim_a;
        let db = self.dim_b * other.dim_b;
        check_cap(da, db)?;
        let mut amps = vec![ZERO; da * db];
        for a1 in 0..self.dim_a {
            for b1 in 0..self.dim_b {
                let x = self.amplitudes[a1 * self.dim_b + b1];
                if x == ZERO {
                    continue;
                }
                for a2 in 0..other.dim_a {
                    for b2 in 0..other.dim_b {
                        let y = other.amplitudes[a2 * other.dim_b + b2];
                        let a = a1 * other.dim_a + a2;
                        let b = b1 * other.dim_b + b2;
                        amps[a * db + b] = x * y;
                    }
                }
            }
        }
        Self::normalized(da, db, amps)
    }

    /// The same vector with the roles of the two subsystems exchanged.
    pub fn swapped(&self) -> Self {
        let mut amps = vec![ZERO; self.amplitudes.len()];
        for a in 0..self.dim_a {
            for b in 0..self.dim_b {
                amps[b * self.dim_a + a] = self.amplitudes[a * self.dim_b + b];
            }
        }
        Self {
            dim_a: self.dim_b,
            dim_b: self.dim_a,
            amplitudes: amps,
        }
    }

    /// Coefficient matrix of `(X ⊗ Id)|ψ⟩`, i.e. `XΨ`.
    pub fn apply_alice(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_a || x.cols() != self.dim_a {
            return Err(contract("Alice operator does not match the state's A dimension"));
        }
        Ok(x * &self.coefficients())
    }

    /// Coefficient matrix of `(Id ⊗ Y)|ψ⟩`, i.e. `ΨYᵀ`.
    pub fn apply_bob(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.rows() != self.dim_b || y.cols() != self.dim_b {
            return Err(contract("Bob operator does not match the state's B dimension"));
        }
        Ok(&self.coefficients() * &y.transpose())
    }

    /// `⟨ψ| X ⊗ Y |ψ⟩`.
    pub fn expectation(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<C64> {
        let xpsi = self.apply_alice(x)?;
        let psi = self.coefficients();
        let lhs = &psi.adjoint() * &xpsi;
        // Tr(Ψ† X Ψ Yᵀ) = Σ_{b,b'} (Ψ†XΨ)_{b b'} Y_{b b'}
        if y.rows() != self.dim_b || y.cols() != self.dim_b {
            return Err(contract("Bob operator does not match the state's B dimension"));
        }
        Ok(lhs.0.iter().zip(y.0.iter()).map(|(p, q)| p * q).sum())
    }

    /// `‖(X ⊗ Id)|ψ⟩‖`.
    pub fn alice_norm(&self, x: &ComplexMatrix) -> Result<f64> {
        Ok(self.apply_alice(x)?.norm_fro())
    }

    /// `‖(Id ⊗ Y)|ψ⟩‖`.
    pub fn bob_norm(&self, y: &ComplexMatrix) -> Result<f64> {
        Ok(self.apply_bob(y)?.norm_fro())
    }

    /// `‖(X ⊗ Id − Id ⊗ Y)|ψ⟩‖`.
    pub fn consistency(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
        Ok((&self.apply_alice(x)? - &self.apply_bob(y)?).norm_fro())
    }

    /// Reduced density matrix on the kept subsystem(s).
    pub fn partial_trace(&self, keep: Keep) -> Result<ComplexMatrix> {
        let psi = self.coefficients();
        match keep {
            Keep::A => Ok(&psi * &psi.adjoint()),
            Keep::B => Ok(&psi.transpose() * &psi.conj()),
            Keep::Split { a_dim, b_dim } => {
                if a_dim == 0 || b_dim == 0 || !self.dim_a.is_multiple_of(a_dim) || !self.dim_b.is_multiple_of(b_dim) {
                    return Err(contract(format!(
                        "split ({a_dim}, {b_dim}) does not divide state dims ({}, {})",
                        self.dim_a, self.dim_b
                    )));
                }
                let out = a_dim * b_dim;
                check_cap(out, out)?;
                let a2 = self.dim_a / a_dim;
                let b2 = self.dim_b / b_dim;
                let amp = |x1: usize, x2: usize, y1: usize, y2: usize| {
                    self.amplitudes[(x1 * a2 + x2) * self.dim_b + y1 * b2 + y2]
                };
                let mut rho = ComplexMatrix::zeros(out, out);
                for x1 in 0..a_dim {
                    for y1 in 0..b_dim {
                        for x1p in 0..a_dim {
                            for y1p in 0..b_dim {
                                let mut acc = ZERO;
                                for x2 in 0..a2 {
                                    for y2 in 0..b2 {
                                        acc += amp(x1, x2, y1, y2) * amp(x1p, x2, y1p, y2).conj();
                                    }
                                }
                                rho.set(x1 * b_dim + y1, x1p * b_dim + y1p, acc);
                            }
                        }
                    }
                }
                Ok(rho)
            }
        }
    }

    /// Embeds into `(C^{dimA} ⊕ C^{extraA}) ⊗ (C^{dimB} ⊕ C^{extraB})` with zero mass on the new summands.
    pub fn embed(&self, extra_a: usize, extra_b: usize) -> Result<Self> {
        let da = self.dim_a + extra_a;
        let db = self.dim_b + extra_b;
        check_cap(da, db)?;
        let mut amps = vec![ZERO; da * db];
        for a in 0..self.dim_a {
            for b in 0..self.dim_b {
                amps[a * db + b] = self.amplitudes[a * self.dim_b + b];
            }
        }
        Ok(Self {
            dim_a: da,
            dim_b: db,
            amplitudes: amps,
        })
    }
}
