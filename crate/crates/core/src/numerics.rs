//! Dense complex linear algebra for the small operators used throughout the
//! crate (at most 64×64).
//!
//! Matrices are stored row-major.  States are plain amplitude vectors with a
//! list of subsystem dimensions attached.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{input_err, Error, Result};

pub type C64 = Complex64;

/// Tolerance on `‖H − H†‖_F` accepted by [`herm_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return input_err(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return input_err("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::from(diag[i]) } else { ZERO })
    }

    /// Builds a matrix from row slices; panics if rows are ragged.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|row| row.iter().copied()).collect(),
        }
    }

    /// Column vector from amplitudes.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn dot(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A · v` for a vector of amplitudes.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(H + H†) / 2`
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(C64::from(0.5))
    }

    pub fn determinant(&self) -> Result<C64> {
        if !self.is_square() {
            return input_err("determinant of a non-square matrix");
        }
        Ok(self.to_nalgebra().determinant())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.dot(rhs)
    }
}

// Wire format: array of rows, each row an array of [re, im] pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let z = self.get(i, j);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        let data = rows
            .into_iter()
            .flatten()
            .map(|[re, im]| C64::new(re, im))
            .collect();
        ComplexMatrix::new(r, c, data).map_err(serde::de::Error::custom)
    }
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn sigma_y() -> ComplexMatrix {
    let i = C64::i();
    ComplexMatrix::from_rows(&[&[ZERO, -i], &[i, ZERO]])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = vec![ZERO; rows * cols];
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let x = a.get(ai, aj);
            if x == ZERO {
                continue;
            }
            for bi in 0..b.rows {
                let row = ai * b.rows + bi;
                let base = row * cols + aj * b.cols;
                for bj in 0..b.cols {
                    data[base + bj] = x * b.get(bi, bj);
                }
            }
        }
    }
    ComplexMatrix { rows, cols, data }
}

/// `U^{⊗n}`; `n = 0` gives the 1×1 identity.
pub fn kron_power(u: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (0..n).fold(ComplexMatrix::identity(1), |acc, _| kron(&acc, u))
}

/// Traces out every factor of `rho` whose index is not listed in `keep`.
///
/// `dims` lists the factor dimensions in tensor order; `keep` may be given in
/// any order but the result keeps the factors in their original order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows != total {
        return input_err(format!(
            "operator is {}x{} but subsystem dims {dims:?} multiply to {total}",
            rho.rows, rho.cols
        ));
    }
    if let Some(&k) = keep.iter().find(|&&k| k >= dims.len()) {
        return input_err(format!("kept factor {k} out of range for {} factors", dims.len()));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|i| keep.contains(i)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    // stride of factor i in the flat index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let n: usize = factors.iter().map(|&f| dims[f]).product();
        (0..n)
            .map(|mut idx| {
                let mut off = 0;
                for &f in factors.iter().rev() {
                    off += (idx % dims[f]) * strides[f];
                    idx /= dims[f];
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);

    let n = kept_off.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &oi) in kept_off.iter().enumerate() {
        for (j, &oj) in kept_off.iter().enumerate() {
            let s: C64 = traced_off.iter().map(|&t| rho.get(oi + t, oj + t)).sum();
            out.set(i, j, s);
        }
    }
    Ok(out)
}

/// Eigenpairs of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`, phase-fixed so that its
    /// first non-negligible component is real and nonnegative.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.col(i)
    }
}

/// Rotates `v` so that its first component with modulus above `1e-12` is real
/// and nonnegative.
pub fn canonical_phase(v: &mut [C64]) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return input_err(format!("matrix is not Hermitian: ‖H − H†‖_F = {defect:.3e}"));
    }
    let n = h.rows;
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v: Vec<C64> = eig.eigenvectors.column(src).iter().copied().collect();
        canonical_phase(&mut v);
        for (row, z) in v.into_iter().enumerate() {
            vectors.set(row, col, z);
        }
    }
    Ok(HermEig {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors,
    })
}

/// `‖U†U − I‖_F ≤ tol`; non-square input is never unitary.
pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    if !u.is_square() {
        return false;
    }
    unitarity_defect(u) <= tol
}

pub(crate) fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.rows;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut z = ZERO;
            for k in 0..n {
                z += u.get(k, i).conj() * u.get(k, j);
            }
            if i == j {
                z -= ONE;
            }
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Thin QR factorization `A = Q R` of a full-column-rank `m×n` matrix
/// (`m ≥ n`) by Gram–Schmidt with one reorthogonalization pass.
///
/// `R` comes out upper triangular with a real positive diagonal.
pub fn qr(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return input_err(format!("qr needs rows ≥ cols, got {m}x{n}"));
    }
    let mut q_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.col(j);
        for _pass in 0..2 {
            for (i, q) in q_cols.iter().enumerate() {
                let proj: C64 = q.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= proj * qk;
                }
                r.set(i, j, r.get(i, j) + proj);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::Numerical(format!("qr: column {j} is linearly dependent")));
        }
        v.iter_mut().for_each(|z| *z /= norm);
        r.set(j, j, C64::from(norm));
        q_cols.push(v);
    }
    let q = ComplexMatrix::from_fn(m, n, |i, j| q_cols[j][i]);
    Ok((q, r))
}

/// Singular value decomposition `A = U diag(s) V†` with singular values
/// descending.
pub fn svd(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let svd = nalgebra::SVD::new(a.to_nalgebra(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let u_sorted = ComplexMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    // rows of V† are conjugated right singular vectors
    let v_sorted = ComplexMatrix::from_fn(v_t.ncols(), k, |i, j| v_t[(order[j], i)].conj());
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    (u_sorted, s, v_sorted)
}

/// Normalized pure state with a tensor-factor dimension list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

/// Accepted deviation of `⟨ψ|ψ⟩` from 1.
pub const NORM_TOL: f64 = 1e-12;

impl PureState {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != amplitudes.len() {
            return input_err(format!(
                "dims {dims:?} multiply to {total} but there are {} amplitudes",
                amplitudes.len()
            ));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return input_err(format!("state is not normalized: ⟨ψ|ψ⟩ = {norm_sqr}"));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return input_err("cannot normalize a zero or non-finite vector");
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(amplitudes, dims)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if index >= total {
            return input_err(format!("basis index {index} out of range {total}"));
        }
        let mut amps = vec![ZERO; total];
        amps[index] = ONE;
        Self::new(amps, dims)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            amplitudes: amps,
            dims,
        }
    }

    /// `|ψ⟩⟨ψ|`
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Amplitudes reshaped to a `d_left × (len/d_left)` matrix, so that
    /// `(X ⊗ I)|ψ⟩` corresponds to `X · M`.
    pub fn coefficient_matrix(&self, d_left: usize) -> Result<ComplexMatrix> {
        if d_left == 0 || !self.len().is_multiple_of(d_left) {
            return input_err(format!("cannot split {} amplitudes with left dim {d_left}", self.len()));
        }
        ComplexMatrix::new(d_left, self.len() / d_left, self.amplitudes.clone())
    }

    /// `(X ⊗ I)|ψ⟩` where `X` acts on the leading `X.rows()` dimensions.
    pub fn apply_left(&self, x: &ComplexMatrix) -> Result<PureState> {
        if !x.is_square() {
            return input_err("operator must be square");
        }
        let m = self.coefficient_matrix(x.rows())?;
        let out = x.dot(&m);
        PureState::normalized(out.into_vec(), self.dims.clone())
    }

    /// `(I ⊗ Y)|ψ⟩` where `Y` acts on the trailing `Y.rows()` dimensions.
    pub fn apply_right(&self, y: &ComplexMatrix) -> Result<PureState> {
        if !y.is_square() || y.rows() == 0 || !self.len().is_multiple_of(y.rows()) {
            return input_err("operator does not fit the trailing factor");
        }
        let m = self.coefficient_matrix(self.len() / y.rows())?;
        let out = m.dot(&y.transpose());
        PureState::normalized(out.into_vec(), self.dims.clone())
    }

    /// `O|ψ⟩` for an operator on the full space.
    pub fn apply(&self, op: &ComplexMatrix) -> Result<PureState> {
        if op.rows() != self.len() || op.cols() != self.len() {
            return input_err("operator dimension does not match state");
        }
        PureState::normalized(op.apply(&self.amplitudes), self.dims.clone())
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != self.len() {
            return input_err(format!("dims {dims:?} do not fit {} amplitudes", self.len()));
        }
        self.dims = dims;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        random_matrix(n, n, rng).hermitian_part()
    }

    // independent reference: entrywise definition of the matrix product
    fn naive_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let out = kron(&sigma_x(), &ComplexMatrix::identity(2)).apply(&phi);
        let expected = [c(0., 0.), c(s, 0.), c(s, 0.), c(0., 0.)];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let [a, b, cc, d] = std::array::from_fn(|_| random_matrix(2, 2, &mut rng));
            let lhs = naive_mul(&kron(&a, &b), &kron(&cc, &d));
            let rhs = kron(&naive_mul(&a, &cc), &naive_mul(&b, &d));
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn kron_entries_match_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(2, 3, &mut rng);
        let b = random_matrix(3, 2, &mut rng);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        for i in 0..6 {
            for j in 0..6 {
                let expected = a.get(i / 3, j / 2) * b.get(i % 3, j % 2);
                assert_eq!(k.get(i, j), expected);
            }
        }
    }

    #[test]
    fn dot_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(4, 3, &mut rng);
        let b = random_matrix(3, 5, &mut rng);
        assert!(a.dot(&b).max_abs_diff(&naive_mul(&a, &b)) < 1e-14);
    }

    #[test]
    fn partial_trace_cases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexMatrix::outer(
            &[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)],
            &[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)],
        );
        let reduced = partial_trace(&phi, &[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.5])) < 1e-15);

        let p0 = ComplexMatrix::from_real_diag(&[1., 0.]);
        let p1 = ComplexMatrix::from_real_diag(&[0., 1.]);
        let reduced = partial_trace(&kron(&p0, &p1), &[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&p0) < 1e-15);
        let reduced = partial_trace(&kron(&p0, &p1), &[2, 2], &[1]).unwrap();
        assert!(reduced.max_abs_diff(&p1) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = [2, 3, 2];
        let rho = random_hermitian(12, &mut rng);
        for keep in [&[0][..], &[1], &[2], &[0, 2], &[1, 2], &[]] {
            let r = partial_trace(&rho, &dims, keep).unwrap();
            assert!((r.trace() - rho.trace()).norm() < 1e-12, "keep {keep:?}");
        }
    }

    #[test]
    fn partial_trace_of_product_second_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (da, db) in [(2, 3), (3, 2), (3, 3)] {
            let a = random_matrix(da, da, &mut rng);
            let b = random_matrix(db, db, &mut rng);
            let r = partial_trace(&kron(&a, &b), &[da, db], &[0]).unwrap();
            assert!(r.max_abs_diff(&a.scale(b.trace())) < 1e-12);
            let r = partial_trace(&kron(&a, &b), &[da, db], &[1]).unwrap();
            assert!(r.max_abs_diff(&b.scale(a.trace())) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_mismatch() {
        let rho = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&rho, &[2, 3], &[0]), Err(Error::Input(_))));
        assert!(matches!(partial_trace(&rho, &[2, 2], &[2]), Err(Error::Input(_))));
        let rect = ComplexMatrix::zeros(4, 2);
        assert!(partial_trace(&rect, &[2, 2], &[0]).is_err());
    }

    #[test]
    fn herm_eig_simple_cases() {
        let eig = herm_eig(&ComplexMatrix::from_real_diag(&[1., 3.])).unwrap();
        assert!((eig.values[0] - 3.).abs() < 1e-14 && (eig.values[1] - 1.).abs() < 1e-14);

        let eig = herm_eig(&sigma_x()).unwrap();
        assert!((eig.values[0] - 1.).abs() < 1e-14 && (eig.values[1] + 1.).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = eig.vector(0);
        let minus = eig.vector(1);
        assert!((plus[0] - c(s, 0.)).norm() < 1e-12 && (plus[1] - c(s, 0.)).norm() < 1e-12);
        assert!((minus[0] - c(s, 0.)).norm() < 1e-12 && (minus[1] - c(-s, 0.)).norm() < 1e-12);
    }

    #[test]
    fn herm_eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian(6, &mut rng);
        let eig = herm_eig(&h).unwrap();
        let lambda = ComplexMatrix::from_real_diag(&eig.values);
        let rebuilt = eig.vectors.dot(&lambda).dot(&eig.vectors.adjoint());
        assert!(rebuilt.max_abs_diff(&h) < 1e-9);
        assert!(eig.vectors.adjoint().dot(&eig.vectors).max_abs_diff(&ComplexMatrix::identity(6)) < 1e-10);
        for i in 0..6 {
            let v = eig.vector(i);
            let hv = h.apply(&v);
            let err = hv.iter().zip(&v).map(|(a, b)| (a - b * eig.values[i]).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let sum: f64 = eig.values.iter().sum();
        assert!((sum - h.trace().re).abs() < 1e-9);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(0., 0.), c(0., 0.)]]);
        assert!(matches!(herm_eig(&m), Err(Error::Input(_))));
    }

    #[test]
    fn unitarity_checks() {
        assert!(is_unitary(&ComplexMatrix::identity(4), 1e-10));
        assert!(!is_unitary(&ComplexMatrix::from_real_diag(&[1., 2.]), 0.9));
        assert!(!is_unitary(&ComplexMatrix::zeros(2, 3), 1.0));
        assert!(is_unitary(&sigma_y(), 1e-15));
    }

    #[test]
    fn qr_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(5, 5, &mut rng);
        let (q, r) = qr(&a).unwrap();
        assert!(is_unitary(&q, 1e-12));
        assert!(q.dot(&r).max_abs_diff(&a) < 1e-12);
        for i in 0..5 {
            assert!(r.get(i, i).re > 0.0 && r.get(i, i).im == 0.0);
            for j in 0..i {
                assert_eq!(r.get(i, j), C64::new(0., 0.));
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_matrix(3, 4, &mut rng);
        let (u, s, v) = svd(&a);
        let sigma = ComplexMatrix::from_real_diag(&s);
        assert!(u.dot(&sigma).dot(&v.adjoint()).max_abs_diff(&a) < 1e-12);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matrix_json_wire_format() {
        let m = sigma_y();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[0.0,0.0],[-0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[1,0],[0,0]]]").is_err());
    }

    #[test]
    fn matrix_constructor_validates() {
        assert!(ComplexMatrix::new(2, 2, vec![c(0., 0.); 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.)]).is_err());
    }

    #[test]
    fn pure_state_validation_and_local_ops() {
        assert!(PureState::new(vec![c(1., 0.), c(1., 0.)], vec![2]).is_err());
        assert!(PureState::new(vec![c(1., 0.), c(0., 0.)], vec![3]).is_err());
        let psi = PureState::basis(0, vec![2, 2]).unwrap();
        let flipped = psi.apply_left(&sigma_x()).unwrap();
        assert_eq!(flipped, PureState::basis(2, vec![2, 2]).unwrap());
        let flipped = psi.apply_right(&sigma_x()).unwrap();
        assert_eq!(flipped, PureState::basis(1, vec![2, 2]).unwrap());
    }

    #[test]
    fn local_application_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let amps: Vec<C64> = (0..6).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let psi = PureState::normalized(amps, vec![2, 3]).unwrap();
        let (q2, _) = qr(&random_matrix(2, 2, &mut rng)).unwrap();
        let (q3, _) = qr(&random_matrix(3, 3, &mut rng)).unwrap();
        let via_kron = psi.apply(&kron(&q2, &ComplexMatrix::identity(3))).unwrap();
        let via_left = psi.apply_left(&q2).unwrap();
        assert!(via_kron.amplitudes().iter().zip(via_left.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-14));
        let via_kron = psi.apply(&kron(&ComplexMatrix::identity(2), &q3)).unwrap();
        let via_right = psi.apply_right(&q3).unwrap();
        assert!(via_kron.amplitudes().iter().zip(via_right.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
                .prop_map(move |v| ComplexMatrix::new(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
        }

        proptest! {
            #[test]
            fn kron_is_associative(a in matrix(2, 2), b in matrix(2, 3), cc in matrix(3, 2)) {
                let lhs = kron(&kron(&a, &b), &cc);
                let rhs = kron(&a, &kron(&b, &cc));
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            }

            #[test]
            fn kron_is_bilinear(a in matrix(2, 2), b in matrix(2, 2), cc in matrix(3, 3), s in -2.0f64..2.0) {
                let lhs = kron(&(&a + &b.scale(C64::from(s))), &cc);
                let rhs = &kron(&a, &cc) + &kron(&b, &cc).scale(C64::from(s));
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            }

            #[test]
            fn eigenvalues_sum_to_trace(m in matrix(5, 5)) {
                let h = m.hermitian_part();
                let eig = herm_eig(&h).unwrap();
                let sum: f64 = eig.values.iter().sum();
                prop_assert!((sum - h.trace().re).abs() <= 1e-9);
            }
        }
    }
}
