//! Correlation measures for two-qubit states.
//!
//! Total correlations are the quantum mutual information I. One-way
//! classical correlations J maximize, over projective measurements on one
//! qubit, the information gained about the other; discord D = I - J is the
//! remainder. The classical mutual information I_c maximizes the mutual
//! information of the outcome table of independent projective measurements
//! on both qubits, and A = I - I_c is the gap between total and classical
//! correlations. Here "left" quantities measure qubit B (learning about A)
//! and "right" quantities measure qubit A.
//!
//! All optimized measures share one optimizer contract: a coarse uniform
//! grid (64x64 over one qubit's measurement angles, 16^4 over two), then
//! Nelder-Mead from the best five grid points, converging when the simplex
//! objective spread drops below 1e-10, all within a budget of 2e5
//! evaluations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::optim::{staged_minimize, GridAxis, StagedOptions};
use crate::states::DensityMatrix;

/// Eigenvalues below this contribute nothing to an entropy.
pub const ENTROPY_EIG_FLOOR: f64 = 1e-12;

/// Derived quantities this far below zero are float noise and clamp to 0;
/// anything lower is reported as an error.
pub const NEGATIVITY_TOL: f64 = 1e-9;

const QUBIT_GRID: usize = 64;
const BILOCAL_GRID: usize = 16;

/// Rank-1 projective measurement direction on the Bloch sphere.
///
/// The measured basis is `|v> = (cos(theta/2), e^{i phi} sin(theta/2))`
/// and its orthogonal complement; the global phase is fixed by keeping the
/// first amplitude real and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementBasis {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Maps arbitrary angles back to theta in [0, pi], phi in [0, 2pi).
    pub fn canonical(theta: f64, phi: f64) -> Self {
        let (st, ct) = (theta.sin(), theta.cos());
        let nx = st * phi.cos();
        let ny = st * phi.sin();
        let nz = ct;
        let theta_c = nz.clamp(-1.0, 1.0).acos();
        let mut phi_c = ny.atan2(nx);
        if phi_c < 0.0 {
            phi_c += 2.0 * PI;
        }
        if theta_c < 1e-12 || theta_c > PI - 1e-12 {
            phi_c = 0.0;
        }
        Self {
            theta: theta_c,
            phi: phi_c,
        }
    }

    /// Measurement ket |v>.
    pub fn ket(&self) -> [Complex64; 2] {
        let half = 0.5 * self.theta;
        [
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.phi),
        ]
    }

    /// Both projectors of the measurement, |v><v| and I - |v><v|.
    pub fn projectors(&self) -> [ComplexMatrix; 2] {
        let v = self.ket();
        let mut p0 = ComplexMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                p0.set(i, j, v[i] * v[j].conj());
            }
        }
        let p1 = ComplexMatrix::identity(2).sub(&p0).expect("same dim");
        [p0, p1]
    }
}

/// Pair of independent single-qubit measurement directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiLocalBasis {
    pub a: MeasurementBasis,
    pub b: MeasurementBasis,
}

/// Which qubit a projective measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Shannon entropy (bits) of a two-outcome distribution.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > ENTROPY_EIG_FLOOR {
            h -= q * q.log2();
        }
    }
    h
}

fn entropy_from_eigs(eigs: &[f64]) -> f64 {
    let mut s = 0.0;
    for &lambda in eigs {
        if lambda > ENTROPY_EIG_FLOOR {
            s -= lambda * lambda.log2();
        }
    }
    s
}

/// Von Neumann entropy -Tr[m log2 m] of a Hermitian unit-trace matrix.
pub fn vn_entropy(m: &ComplexMatrix) -> Result<f64> {
    let spec = hermitian_eig(m)?;
    Ok(entropy_from_eigs(&spec.eigenvalues))
}

/// Von Neumann entropy of a validated state.
pub fn vn_entropy_state(rho: &DensityMatrix) -> f64 {
    vn_entropy(rho.matrix()).expect("validated state stays Hermitian")
}

/// Entropy of a 2x2 Hermitian PSD matrix with the given trace, closed form.
#[inline]
fn entropy_2x2(m00: f64, m11: f64, m01: Complex64, trace: f64) -> f64 {
    let mean = 0.5 * (m00 + m11) / trace;
    let half_gap = 0.5 * (m00 - m11) / trace;
    let radius = (half_gap * half_gap + m01.norm_sqr() / (trace * trace)).sqrt();
    let lo = (mean - radius).max(0.0);
    let hi = (mean + radius).min(1.0);
    entropy_from_eigs(&[lo, hi])
}

/// I = S(rho_A) + S(rho_B) - S(rho_AB).
pub fn mutual_information(rho: &DensityMatrix) -> f64 {
    let s_a = vn_entropy(&rho.reduced_a()).expect("reduction is Hermitian");
    let s_b = vn_entropy(&rho.reduced_b()).expect("reduction is Hermitian");
    s_a + s_b - vn_entropy_state(rho)
}

/// Unnormalized conditional states of the unmeasured qubit and their
/// probabilities for both outcomes of measuring `ket` on `measured`.
#[inline]
fn conditional_pair(
    rho: &ComplexMatrix,
    ket: &[Complex64; 2],
    measured: Side,
) -> [(f64, f64, f64, Complex64); 2] {
    let orth = [-ket[1].conj(), ket[0].conj()];
    let mut out = [(0.0, 0.0, 0.0, Complex64::ZERO); 2];
    for (slot, v) in [ket, &orth].into_iter().enumerate() {
        // M[x][x'] = sum_{y,y'} conj(v[y]) rho[(x,y),(x',y')] v[y'] for
        // measured B; indices swap roles for measured A.
        let elem = |x: usize, xp: usize| -> Complex64 {
            let mut acc = Complex64::ZERO;
            for y in 0..2 {
                for yp in 0..2 {
                    let (row, col) = match measured {
                        Side::B => (2 * x + y, 2 * xp + yp),
                        Side::A => (2 * y + x, 2 * yp + xp),
                    };
                    acc += v[y].conj() * rho.get(row, col) * v[yp];
                }
            }
            acc
        };
        let m00 = elem(0, 0).re;
        let m11 = elem(1, 1).re;
        let m01 = elem(0, 1);
        let p = (m00 + m11).max(0.0);
        out[slot] = (p, m00, m11, m01);
    }
    out
}

/// Average entropy of the unmeasured qubit after projectively measuring
/// `basis` on the `measured` qubit: sum_i p_i S(rho_i).
pub fn conditional_entropy_post_meas(
    rho: &DensityMatrix,
    basis: &MeasurementBasis,
    measured: Side,
) -> f64 {
    let ket = basis.ket();
    conditional_pair(rho.matrix(), &ket, measured)
        .iter()
        .map(|&(p, m00, m11, m01)| {
            if p > ENTROPY_EIG_FLOOR {
                p * entropy_2x2(m00, m11, m01, p)
            } else {
                0.0
            }
        })
        .sum()
}

/// An optimized scalar with the basis achieving it and optimizer
/// diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizedValue {
    pub value: f64,
    pub basis: MeasurementBasis,
    pub evals: usize,
    pub converged: bool,
}

/// Like [`OptimizedValue`] for a two-sided measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizedBilocal {
    pub value: f64,
    pub basis: BiLocalBasis,
    pub evals: usize,
    pub converged: bool,
}

fn qubit_axes() -> [GridAxis; 2] {
    [
        GridAxis {
            lo: 0.0,
            hi: PI,
            count: QUBIT_GRID,
        },
        GridAxis {
            lo: 0.0,
            hi: 2.0 * PI,
            count: QUBIT_GRID,
        },
    ]
}

fn bilocal_axes() -> [GridAxis; 4] {
    [
        GridAxis {
            lo: 0.0,
            hi: PI,
            count: BILOCAL_GRID,
        },
        GridAxis {
            lo: 0.0,
            hi: 2.0 * PI,
            count: BILOCAL_GRID,
        },
        GridAxis {
            lo: 0.0,
            hi: PI,
            count: BILOCAL_GRID,
        },
        GridAxis {
            lo: 0.0,
            hi: 2.0 * PI,
            count: BILOCAL_GRID,
        },
    ]
}

/// One-way classical correlations J: S(unmeasured reduction) minus the
/// measurement-minimized conditional entropy, maximized over bases.
pub fn classical_correlation(rho: &DensityMatrix, measured: Side) -> OptimizedValue {
    let unmeasured = match measured {
        Side::A => rho.reduced_b(),
        Side::B => rho.reduced_a(),
    };
    let s_unmeasured = vn_entropy(&unmeasured).expect("reduction is Hermitian");
    let m = rho.matrix();
    let objective = |x: &[f64]| {
        let ket = MeasurementBasis::new(x[0], x[1]).ket();
        conditional_pair(m, &ket, measured)
            .iter()
            .map(|&(p, m00, m11, m01)| {
                if p > ENTROPY_EIG_FLOOR {
                    p * entropy_2x2(m00, m11, m01, p)
                } else {
                    0.0
                }
            })
            .sum()
    };
    let r = staged_minimize(objective, &qubit_axes(), &StagedOptions::default());
    OptimizedValue {
        value: s_unmeasured - r.value,
        basis: MeasurementBasis::canonical(r.x[0], r.x[1]),
        evals: r.evals,
        converged: r.converged,
    }
}

fn clamp_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value < -NEGATIVITY_TOL {
        return Err(Error::Invalid(format!(
            "{name} = {value:.3e} violates nonnegativity beyond tolerance 1e-9"
        )));
    }
    Ok(value.max(0.0))
}

/// Quantum discord D = I - J for a measurement on `measured`.
pub fn discord(rho: &DensityMatrix, measured: Side) -> Result<OptimizedValue> {
    let i = mutual_information(rho);
    let j = classical_correlation(rho, measured);
    Ok(OptimizedValue {
        value: clamp_nonnegative("discord", i - j.value)?,
        basis: j.basis,
        evals: j.evals,
        converged: j.converged,
    })
}

/// Two-sided discord max(D_left, D_right).
pub fn discord_sym(rho: &DensityMatrix) -> Result<f64> {
    let left = discord(rho, Side::B)?;
    let right = discord(rho, Side::A)?;
    Ok(left.value.max(right.value))
}

#[inline]
fn outcome_table(rho: &ComplexMatrix, ka: &[Complex64; 2], kb: &[Complex64; 2]) -> [f64; 4] {
    let oa = [-ka[1].conj(), ka[0].conj()];
    let ob = [-kb[1].conj(), kb[0].conj()];
    let mut table = [0.0f64; 4];
    for (k, va) in [ka, &oa].into_iter().enumerate() {
        for (l, vb) in [kb, &ob].into_iter().enumerate() {
            let u = [
                va[0] * vb[0],
                va[0] * vb[1],
                va[1] * vb[0],
                va[1] * vb[1],
            ];
            let mut acc = Complex64::ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    acc += u[i].conj() * rho.get(i, j) * u[j];
                }
            }
            table[2 * k + l] = acc.re.max(0.0);
        }
    }
    table
}

fn table_mutual_information(table: &[f64; 4]) -> f64 {
    let pa = [table[0] + table[1], table[2] + table[3]];
    let pb = [table[0] + table[2], table[1] + table[3]];
    let h = |probs: &[f64]| -> f64 {
        probs
            .iter()
            .filter(|&&p| p > 1e-15)
            .map(|&p| -p * p.log2())
            .sum()
    };
    h(&pa) + h(&pb) - h(table)
}

/// Classical mutual information I_c: the outcome-table mutual information
/// maximized over independent projective measurements on both qubits.
pub fn classical_mutual_info(rho: &DensityMatrix) -> OptimizedBilocal {
    let m = rho.matrix();
    let objective = |x: &[f64]| {
        let ka = MeasurementBasis::new(x[0], x[1]).ket();
        let kb = MeasurementBasis::new(x[2], x[3]).ket();
        -table_mutual_information(&outcome_table(m, &ka, &kb))
    };
    let r = staged_minimize(objective, &bilocal_axes(), &StagedOptions::default());
    OptimizedBilocal {
        value: -r.value,
        basis: BiLocalBasis {
            a: MeasurementBasis::canonical(r.x[0], r.x[1]),
            b: MeasurementBasis::canonical(r.x[2], r.x[3]),
        },
        evals: r.evals,
        converged: r.converged,
    }
}

/// Gap between total and classical mutual information, A = I - I_c.
pub fn amid(rho: &DensityMatrix) -> Result<f64> {
    let i = mutual_information(rho);
    let ic = classical_mutual_info(rho);
    clamp_nonnegative("amid", i - ic.value)
}

/// Every measure of one state, with the optimizing bases and diagnostics.
///
/// `J_left`/`D_left` measure qubit B; `J_right`/`D_right` measure qubit A.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_A")]
    pub s_a: f64,
    #[serde(rename = "S_B")]
    pub s_b: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J_left")]
    pub j_left: f64,
    #[serde(rename = "J_right")]
    pub j_right: f64,
    #[serde(rename = "D_left")]
    pub d_left: f64,
    #[serde(rename = "D_right")]
    pub d_right: f64,
    #[serde(rename = "D_sym")]
    pub d_sym: f64,
    #[serde(rename = "I_c")]
    pub i_c: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub basis_left: MeasurementBasis,
    pub basis_right: MeasurementBasis,
    pub basis_classical: BiLocalBasis,
    pub optimizer_evals: usize,
    pub converged: bool,
}

/// Computes the full report, sharing the entropies across measures.
pub fn correlation_report(rho: &DensityMatrix) -> Result<CorrelationReport> {
    let s = vn_entropy_state(rho);
    let s_a = vn_entropy(&rho.reduced_a()).expect("reduction is Hermitian");
    let s_b = vn_entropy(&rho.reduced_b()).expect("reduction is Hermitian");
    let i = s_a + s_b - s;

    let left = classical_correlation(rho, Side::B);
    let right = classical_correlation(rho, Side::A);
    let classical = classical_mutual_info(rho);

    let d_left = clamp_nonnegative("D_left", i - left.value)?;
    let d_right = clamp_nonnegative("D_right", i - right.value)?;
    let a = clamp_nonnegative("A", i - classical.value)?;

    Ok(CorrelationReport {
        s,
        s_a,
        s_b,
        i,
        j_left: left.value,
        j_right: right.value,
        d_left,
        d_right,
        d_sym: d_left.max(d_right),
        i_c: classical.value,
        a,
        basis_left: left.basis,
        basis_right: right.basis,
        basis_classical: classical.basis,
        optimizer_evals: left.evals + right.evals + classical.evals,
        converged: left.converged && right.converged && classical.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::states::{bell_phi, random_state, rho_down, rho_up, werner, Sign};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Diagonal (classical-classical) state from a 2x2 probability table.
    fn classical_state(table: [f64; 4]) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4);
        for (i, &p) in table.iter().enumerate() {
            m.set(i, i, Complex64::new(p, 0.0));
        }
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn entropy_of_pure_and_mixed_anchors() {
        let bell = bell_phi(0.5, Sign::Plus).unwrap();
        assert!(vn_entropy_state(&bell).abs() < 1e-10);
        let mixed = werner(1.0).unwrap();
        assert!(close(vn_entropy_state(&mixed), 2.0, 1e-12));
        let down = rho_down(0.25).unwrap();
        assert!(close(vn_entropy_state(&down), binary_entropy(0.25), 1e-12));
    }

    #[test]
    fn entropy_matches_analytic_werner_spectra() {
        for &eps in &[0.225, 0.426, 0.519] {
            let analytic = {
                let big: f64 = 1.0 - 0.75 * eps;
                let small: f64 = eps / 4.0;
                -big * big.log2() - 3.0 * small * small.log2()
            };
            let s = vn_entropy_state(&werner(eps).unwrap());
            assert!(close(s, analytic, 1e-12), "eps {eps}: {s} vs {analytic}");
        }
    }

    #[test]
    fn mutual_information_anchors() {
        let bell = bell_phi(0.5, Sign::Plus).unwrap();
        assert!(close(mutual_information(&bell), 2.0, 1e-10));

        // Product state: rho_up at eps in {0,1} or an explicit kron.
        let a = ComplexMatrix::from_real(2, &[0.8, 0.0, 0.0, 0.2]).unwrap();
        let b = ComplexMatrix::from_real(2, &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let prod = DensityMatrix::new(kron(&a, &b).unwrap()).unwrap();
        assert!(mutual_information(&prod).abs() < 1e-10);

        // werner(0.5): eigenvalues {5/8, 1/8 x3}, maximally mixed margins.
        let w = werner(0.5).unwrap();
        let s = -(0.625f64 * 0.625f64.log2()) - 3.0 * 0.125 * 0.125f64.log2();
        assert!(close(mutual_information(&w), 2.0 - s, 1e-12));
        assert!(close(mutual_information(&w), 0.4512, 1e-4));
    }

    #[test]
    fn conditional_entropy_of_bell_is_zero_in_z() {
        let bell = bell_phi(0.5, Sign::Plus).unwrap();
        let z = MeasurementBasis::new(0.0, 0.0);
        assert!(conditional_entropy_post_meas(&bell, &z, Side::B).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_of_product_is_marginal_entropy() {
        let a = ComplexMatrix::from_real(2, &[0.8, 0.0, 0.0, 0.2]).unwrap();
        let b = ComplexMatrix::from_real(2, &[0.6, 0.0, 0.0, 0.4]).unwrap();
        let prod = DensityMatrix::new(kron(&a, &b).unwrap()).unwrap();
        let s_a = binary_entropy(0.8);
        for &(theta, phi) in &[(0.0, 0.0), (0.7, 1.1), (2.3, 4.0), (1.5707, 3.1)] {
            let basis = MeasurementBasis::new(theta, phi);
            let h = conditional_entropy_post_meas(&prod, &basis, Side::B);
            assert!(close(h, s_a, 1e-10), "basis ({theta},{phi}): {h} vs {s_a}");
        }
    }

    #[test]
    fn conditional_entropy_of_werner_half_in_z() {
        // Measuring B of werner(0.5) along z leaves A with Bloch length
        // 1 - eps = 0.5 either way: eigenvalues {3/4, 1/4}.
        let w = werner(0.5).unwrap();
        let z = MeasurementBasis::new(0.0, 0.0);
        let h = conditional_entropy_post_meas(&w, &z, Side::B);
        assert!(close(h, binary_entropy(0.25), 1e-12), "{h}");
    }

    #[test]
    fn classical_correlation_of_classical_state_is_table_mi() {
        let table = [0.4, 0.1, 0.2, 0.3];
        let rho = classical_state(table);
        let want = table_mutual_information(&table);
        let j = classical_correlation(&rho, Side::B);
        assert!(close(j.value, want, 1e-8), "{} vs {want}", j.value);
        // The optimal basis is a z measurement (theta 0 or pi).
        let t = j.basis.theta;
        assert!(t < 1e-3 || t > PI - 1e-3, "theta {t}");
    }

    #[test]
    fn discord_of_pure_states_is_entanglement_entropy() {
        for &p in &[0.5, 0.3, 0.75, 0.9] {
            let rho = bell_phi(p, Sign::Plus).unwrap();
            let want = binary_entropy(p);
            let d = discord(&rho, Side::B).unwrap();
            assert!(close(d.value, want, 1e-6), "p {p}: {} vs {want}", d.value);
        }
    }

    #[test]
    fn discord_of_classical_and_product_states_vanishes() {
        let rho = classical_state([0.4, 0.1, 0.2, 0.3]);
        assert!(discord_sym(&rho).unwrap() < 1e-8);
        let prod = rho_up(0.2, 1.0).unwrap();
        assert!(discord_sym(&prod).unwrap() < 1e-8);
    }

    #[test]
    fn discord_is_asymmetric_for_quantum_classical_states() {
        // 1/2 |0><0| (x) |0><0| + 1/2 |+><+| (x) |1><1|: classical on B.
        let plus = ComplexMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let zero = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p0 = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p1 = ComplexMatrix::from_real(2, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let m = kron(&zero, &p0)
            .unwrap()
            .scale_re(0.5)
            .add(&kron(&plus, &p1).unwrap().scale_re(0.5))
            .unwrap();
        let rho = DensityMatrix::new(m).unwrap();
        let left = discord(&rho, Side::B).unwrap(); // measure the classical side
        let right = discord(&rho, Side::A).unwrap();
        assert!(left.value < 1e-8, "left {}", left.value);
        assert!(right.value > 0.05, "right {}", right.value);
        assert!(close(
            discord_sym(&rho).unwrap(),
            right.value,
            1e-12
        ));
    }

    #[test]
    fn werner_discord_is_symmetric() {
        let w = werner(0.3).unwrap();
        let left = discord(&w, Side::B).unwrap().value;
        let right = discord(&w, Side::A).unwrap().value;
        assert!(close(left, right, 1e-5), "{left} vs {right}");
    }

    #[test]
    fn classical_mutual_info_anchors() {
        let bell = bell_phi(0.5, Sign::Plus).unwrap();
        let ic = classical_mutual_info(&bell);
        assert!(close(ic.value, 1.0, 1e-6), "{}", ic.value);

        let a = ComplexMatrix::from_real(2, &[0.8, 0.0, 0.0, 0.2]).unwrap();
        let b = ComplexMatrix::from_real(2, &[0.6, 0.0, 0.0, 0.4]).unwrap();
        let prod = DensityMatrix::new(kron(&a, &b).unwrap()).unwrap();
        assert!(classical_mutual_info(&prod).value < 1e-8);

        let table = [0.4, 0.1, 0.2, 0.3];
        let cc = classical_state(table);
        let want = table_mutual_information(&table);
        assert!(close(classical_mutual_info(&cc).value, want, 1e-6));
    }

    #[test]
    fn amid_anchors() {
        let bell = bell_phi(0.5, Sign::Plus).unwrap();
        assert!(close(amid(&bell).unwrap(), 1.0, 1e-6));
        let mixed = werner(1.0).unwrap();
        assert!(amid(&mixed).unwrap() < 1e-8);
    }

    #[test]
    fn amid_upper_bounds_symmetric_discord_on_random_states() {
        for seed in 0..12u64 {
            let rho = random_state(seed);
            let a = amid(&rho).unwrap();
            let d = discord_sym(&rho).unwrap();
            assert!(a >= d - 1e-4, "seed {seed}: A {a} < D {d}");
        }
    }

    #[test]
    fn report_is_internally_consistent() {
        for seed in [3u64, 17, 40] {
            let rho = random_state(seed);
            let rep = correlation_report(&rho).unwrap();
            assert!(close(rep.i, rep.s_a + rep.s_b - rep.s, 1e-12));
            assert_eq!(rep.d_sym, rep.d_left.max(rep.d_right));
            if rep.a > 0.0 {
                assert!(close(rep.a, rep.i - rep.i_c, 1e-15));
            }
            for v in [
                rep.s, rep.s_a, rep.s_b, rep.i, rep.j_left, rep.j_right, rep.d_left,
                rep.d_right, rep.d_sym, rep.i_c, rep.a,
            ] {
                assert!(v >= -NEGATIVITY_TOL, "negative measure {v}");
            }
            assert!(rep.i_c <= rep.i + 1e-6);
            assert!(rep.converged);
            assert!(rep.optimizer_evals > 3 * 4096);
        }
    }

    #[test]
    fn report_serializes_with_fixed_field_names() {
        let rep = correlation_report(&werner(0.5).unwrap()).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        for key in [
            "S", "S_A", "S_B", "I", "J_left", "J_right", "D_left", "D_right", "D_sym",
            "I_c", "A", "basis_left", "basis_right", "basis_classical", "optimizer_evals",
        ] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
    }

    #[test]
    fn measures_are_invariant_under_local_unitaries() {
        let u = |a: f64, b: f64, c: f64| -> ComplexMatrix {
            let mut m = ComplexMatrix::zeros(2);
            m.set(0, 0, Complex64::new(a.cos(), 0.0));
            m.set(0, 1, -Complex64::from_polar(a.sin(), b));
            m.set(1, 0, Complex64::from_polar(a.sin(), c));
            m.set(1, 1, Complex64::from_polar(a.cos(), b + c));
            m
        };
        let ua = u(0.61, 2.0, 0.37);
        let ub = u(1.13, 4.2, 5.05);
        let uu = kron(&ua, &ub).unwrap();
        for seed in [5u64, 23] {
            let rho = random_state(seed);
            let rotated = DensityMatrix::new(
                uu.mul(rho.matrix()).unwrap().mul(&uu.adjoint()).unwrap(),
            )
            .unwrap();
            let before = correlation_report(&rho).unwrap();
            let after = correlation_report(&rotated).unwrap();
            for (x, y, name) in [
                (before.s, after.s, "S"),
                (before.i, after.i, "I"),
                (before.j_left, after.j_left, "J_left"),
                (before.j_right, after.j_right, "J_right"),
                (before.d_sym, after.d_sym, "D_sym"),
                (before.i_c, after.i_c, "I_c"),
                (before.a, after.a, "A"),
            ] {
                assert!(close(x, y, 1e-6), "{name}: {x} vs {y}");
            }
        }
    }
}
