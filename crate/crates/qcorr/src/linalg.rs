//! Dense complex matrices for few-qubit work.
//!
//! Everything here is sized for one, two or four qubits (dimensions 2, 4
//! and 16); storage is a row-major `Vec<Complex64>`. The eigensolver is a
//! cyclic Jacobi iteration on the complex Hermitian matrix itself, which is
//! exact enough at these sizes and keeps the dependency surface flat.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUPPORTED_DIMS: [usize; 3] = [2, 4, 16];

/// Hermiticity defect above which a matrix is rejected outright.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_OFF_TOL: f64 = 1e-13;

/// Hard cap on Jacobi sweeps; convergence is quadratic, so 100 is generous.
pub const JACOBI_MAX_SWEEPS: usize = 100;

fn check_dim(dim: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&dim) {
        Ok(())
    } else {
        Err(Error::Dimension(dim))
    }
}

/// Column vector over `Complex64`, used for kets.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        check_dim(data.len())?;
        Ok(Self { data })
    }

    /// Computational basis ket `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut data = vec![Complex64::ZERO; dim];
        data[index] = Complex64::ONE;
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Self {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Tensor product `self (x) other`; `self` is the first factor.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let dim = self.dim() * other.dim();
        if dim > 16 {
            return Err(Error::TensorTooLarge(dim));
        }
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim);
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Ok(Self { data })
    }

    /// Outer product `|self><self|`.
    pub fn outer(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, self.data[i] * self.data[j].conj());
            }
        }
        m
    }
}

/// Square complex matrix in row-major storage, dimension 2, 4 or 16.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("unsupported matrix dimension");
        Self {
            dim,
            entries: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::Invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from real entries (imaginary parts zero).
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_entries(
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.dim != v.dim() {
            return Err(Error::DimensionMismatch(self.dim, v.dim()));
        }
        let mut out = vec![Complex64::ZERO; self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.get(i, j) * v.as_slice()[j];
            }
        }
        ComplexVector::new(out)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius norm of `self - m^dag`, zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).unwrap().frobenius_norm()
    }

    /// Replaces the matrix by `(m + m^dag)/2`; only valid when the defect is
    /// already within tolerance, which the caller checks.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.adjoint()).unwrap().scale_re(0.5)
    }

    /// Expectation value `<v| self |v>`.
    pub fn expectation(&self, v: &ComplexVector) -> Result<Complex64> {
        Ok(v.inner(&self.apply(v)?))
    }
}

/// Tensor (Kronecker) product; the first factor owns the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim() * b.dim();
    if dim > 16 {
        return Err(Error::TensorTooLarge(dim));
    }
    check_dim(dim)?;
    let mut out = ComplexMatrix::zeros(dim);
    let (da, db) = (a.dim(), b.dim());
    for ia in 0..da {
        for ja in 0..da {
            let f = a.get(ia, ja);
            if f == Complex64::ZERO {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    out.set(ia * db + ib, ja * db + jb, f * b.get(ib, jb));
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace keeping the listed qubit factors (ascending indices).
///
/// The input is interpreted as an n-qubit operator with qubit 0 owning the
/// slowest index, matching `kron`'s ordering. For a two-qubit state,
/// `keep = [0]` retains qubit A and `keep = [1]` retains qubit B; for a
/// four-qubit state, `keep = [2, 3]` retains the last two factors.
pub fn partial_trace(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    let dim = m.dim();
    let n_qubits = match dim {
        4 => 2,
        16 => 4,
        _ => {
            return Err(Error::BadSelector {
                dim,
                selector: keep.to_vec(),
            })
        }
    };
    let valid = !keep.is_empty()
        && keep.len() < n_qubits
        && keep.windows(2).all(|w| w[0] < w[1])
        && keep.iter().all(|&q| q < n_qubits);
    if !valid {
        return Err(Error::BadSelector {
            dim,
            selector: keep.to_vec(),
        });
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let out_dim = 1usize << keep.len();
    check_dim(out_dim)?;

    // Index assembly: qubit q contributes bit (n_qubits-1-q) of the flat index.
    let place = |qubits: &[usize], bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            let bit = (bits >> (qubits.len() - 1 - pos)) & 1;
            idx |= bit << (n_qubits - 1 - q);
        }
        idx
    };

    let mut out = ComplexMatrix::zeros(out_dim);
    for i in 0..out_dim {
        for j in 0..out_dim {
            let mut acc = Complex64::ZERO;
            for t in 0..(1usize << traced.len()) {
                let row = place(keep, i) | place(&traced, t);
                let col = place(keep, j) | place(&traced, t);
                acc += m.get(row, col);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order; `eigenvectors` holds the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    /// Rebuilds `V diag(lambda) V^dag`, mostly useful in tests.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..n {
                    acc += v.get(i, k) * self.eigenvalues[k] * v.get(j, k).conj();
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

fn offdiag_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices.
///
/// Rejects inputs whose hermiticity defect exceeds 1e-10 and symmetrizes the
/// rest before iterating. Stops once the off-diagonal Frobenius norm falls
/// below 1e-13 or after 100 sweeps.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianSpectrum> {
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.dim();
    let mut a = m.symmetrized();
    let mut v = ComplexMatrix::identity(n);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if offdiag_norm(&a) < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;

                // Rotation angle for the phase-stripped real 2x2 block:
                // smaller-magnitude root of t^2 + 2*tau*t - 1 = 0.
                let tau = (app - aqq) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // U = [[c, -s],[s e^{-i phi}, c e^{-i phi}]] acting on (p, q).
                let u11 = Complex64::new(c, 0.0);
                let u12 = Complex64::new(-s, 0.0);
                let u21 = s * phase.conj();
                let u22 = c * phase.conj();

                // a <- U^dag a U, columns first, then rows.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * u11 + akq * u21);
                    a.set(k, q, akp * u12 + akq * u22);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, u11.conj() * apk + u21.conj() * aqk);
                    a.set(q, k, u12.conj() * apk + u22.conj() * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * u11 + vkq * u21);
                    v.set(k, q, vkp * u12 + vkq * u22);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| eigs[j].partial_cmp(&eigs[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigs[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Serialized form of a complex matrix: row-major `[re, im]` pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixRepr {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: m.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        ComplexMatrix::from_entries(
            repr.dim,
            repr.entries
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        ComplexMatrix::try_from(repr).map_err(serde::de::Error::custom)
    }
}
