//! Photon-counting state tomography: simulated counts for the 36
//! polarization analyzer settings, linear inversion, physical projection,
//! and maximum-likelihood refinement.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, kron, ComplexMatrix};
use crate::optim::{nelder_mead, OptimResult};
use crate::states::DensityMatrix;

/// Analyzer settings in measurement order: first letter is qubit A's
/// basis, second is qubit B's, inner letter fastest.
pub const SETTING_LABELS: [&str; 36] = [
    "HH", "HV", "HD", "HA", "HR", "HL", //
    "VH", "VV", "VD", "VA", "VR", "VL", //
    "DH", "DV", "DD", "DA", "DR", "DL", //
    "AH", "AV", "AD", "AA", "AR", "AL", //
    "RH", "RV", "RD", "RA", "RR", "RL", //
    "LH", "LV", "LD", "LA", "LR", "LL",
];

const SINGLE_LABELS: [char; 6] = ['H', 'V', 'D', 'A', 'R', 'L'];

/// Pauli eigenstate kets behind the six analyzer labels.
fn basis_ket(label: char) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        'H' => [Complex64::ONE, Complex64::ZERO],
        'V' => [Complex64::ZERO, Complex64::ONE],
        'D' => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        'A' => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        'R' => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
        'L' => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        other => unreachable!("no analyzer ket for {other}"),
    }
}

/// Coincidence probability of one product projector.
fn setting_probability(rho: &ComplexMatrix, ia: usize, ib: usize) -> f64 {
    let ka = basis_ket(SINGLE_LABELS[ia]);
    let kb = basis_ket(SINGLE_LABELS[ib]);
    let u = [
        ka[0] * kb[0],
        ka[0] * kb[1],
        ka[1] * kb[0],
        ka[1] * kb[1],
    ];
    let mut acc = Complex64::ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += u[i].conj() * rho.get(i, j) * u[j];
        }
    }
    acc.re.max(0.0)
}

/// Expected coincidence rates n * Tr(P_s rho) in setting order.
pub fn expected_rates(rho: &DensityMatrix, n: u64) -> [f64; 36] {
    let m = rho.matrix();
    let mut rates = [0.0; 36];
    for ia in 0..6 {
        for ib in 0..6 {
            rates[6 * ia + ib] = n as f64 * setting_probability(m, ia, ib);
        }
    }
    rates
}

/// Counts for one tomography run, keyed by the two-letter setting labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TomographyDataset {
    pub n_nominal: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
}

impl TomographyDataset {
    /// Counts in setting order; errors on a missing or extra label.
    pub fn counts_in_order(&self) -> Result<[f64; 36]> {
        if self.counts.len() != SETTING_LABELS.len() {
            return Err(Error::Invalid(format!(
                "dataset has {} settings, expected 36",
                self.counts.len()
            )));
        }
        let mut out = [0.0; 36];
        for (slot, label) in SETTING_LABELS.iter().enumerate() {
            match self.counts.get(*label) {
                Some(&k) => out[slot] = k as f64,
                None => {
                    return Err(Error::Invalid(format!("dataset is missing setting {label}")))
                }
            }
        }
        Ok(out)
    }
}

/// Draws Poisson counts around the expected rates, one fixed-order stream
/// per seed.
pub fn simulate_counts(rho: &DensityMatrix, n: u64, seed: u64) -> Result<TomographyDataset> {
    if n == 0 {
        return Err(Error::Invalid("mean count n must be positive".into()));
    }
    let rates = expected_rates(rho, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for (label, &mu) in SETTING_LABELS.iter().zip(rates.iter()) {
        let k = if mu > 0.0 {
            rng.sample(Poisson::new(mu).expect("positive mean")) as u64
        } else {
            0
        };
        counts.insert((*label).to_string(), k);
    }
    Ok(TomographyDataset {
        n_nominal: n,
        seed,
        counts,
    })
}

/// The three Pauli axes as (positive label index, negative label index).
const AXES: [(usize, usize); 3] = [(2, 3), (4, 5), (0, 1)]; // x, y, z

fn pauli(i: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    match i {
        0 => {
            m.set(0, 0, Complex64::ONE);
            m.set(1, 1, Complex64::ONE);
        }
        1 => {
            m.set(0, 1, Complex64::ONE);
            m.set(1, 0, Complex64::ONE);
        }
        2 => {
            m.set(0, 1, Complex64::new(0.0, -1.0));
            m.set(1, 0, Complex64::new(0.0, 1.0));
        }
        3 => {
            m.set(0, 0, Complex64::ONE);
            m.set(1, 1, -Complex64::ONE);
        }
        _ => unreachable!(),
    }
    m
}

/// Linear inversion of rates (or counts) in setting order: Pauli
/// correlations from per-group contrasts, marginals averaged over the
/// partner bases, then the Pauli expansion of the state estimate.
pub fn linear_inversion_from_rates(rates: &[f64; 36]) -> ComplexMatrix {
    let rate = |a: usize, b: usize| rates[6 * a + b];
    // Group totals and normalized contrasts per axis pair.
    let mut corr = [[0.0f64; 3]; 3];
    let mut single_a = [[0.0f64; 3]; 3]; // [axis of A][partner axis of B]
    let mut single_b = [[0.0f64; 3]; 3]; // [axis of B][partner axis of A]
    for (i, &(ap, am)) in AXES.iter().enumerate() {
        for (j, &(bp, bm)) in AXES.iter().enumerate() {
            let pp = rate(ap, bp);
            let pm = rate(ap, bm);
            let mp = rate(am, bp);
            let mm = rate(am, bm);
            let total = pp + pm + mp + mm;
            if total > 0.0 {
                corr[i][j] = (pp - pm - mp + mm) / total;
                single_a[i][j] = (pp + pm - mp - mm) / total;
                single_b[j][i] = (pp - pm + mp - mm) / total;
            }
        }
    }

    let mut estimate = ComplexMatrix::identity(4).scale_re(0.25);
    let id = pauli(0);
    for i in 0..3 {
        let sa: f64 = single_a[i].iter().sum::<f64>() / 3.0;
        let sb: f64 = single_b[i].iter().sum::<f64>() / 3.0;
        let pa = kron(&pauli(i + 1), &id).expect("2x2 factors");
        let pb = kron(&id, &pauli(i + 1)).expect("2x2 factors");
        estimate = estimate
            .add(&pa.scale_re(0.25 * sa))
            .and_then(|m| m.add(&pb.scale_re(0.25 * sb)))
            .expect("same dim");
        for j in 0..3 {
            let pij = kron(&pauli(i + 1), &pauli(j + 1)).expect("2x2 factors");
            estimate = estimate.add(&pij.scale_re(0.25 * corr[i][j])).expect("same dim");
        }
    }
    estimate
}

/// Linear inversion of a counted dataset; the estimate is Hermitian with
/// unit trace but may have negative eigenvalues.
pub fn linear_inversion(data: &TomographyDataset) -> Result<ComplexMatrix> {
    Ok(linear_inversion_from_rates(&data.counts_in_order()?))
}

/// Euclidean projection of a real vector onto the probability simplex
/// (sorted-truncation form).
fn simplex_project(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (1.0 - cumsum) / (j + 1) as f64;
        if u + candidate > 0.0 {
            tau = candidate;
        }
    }
    values.iter().map(|&u| (u + tau).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm: project the spectrum onto
/// the probability simplex and rebuild in the same eigenbasis.
pub fn project_physical(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let defect = m.hermiticity_defect();
    if defect > 1e-8 {
        return Err(Error::NotHermitian { defect });
    }
    let spec = hermitian_eig(m)?;
    let projected = simplex_project(&spec.eigenvalues);
    let rebuilt = crate::linalg::HermitianSpectrum {
        eigenvalues: projected,
        eigenvectors: spec.eigenvectors,
    }
    .reconstruct();
    DensityMatrix::new(rebuilt)
}

const MLE_BUDGET: usize = 100_000;
const MLE_FLOOR: f64 = 1e-8;

/// Upper-triangular U with U U^dagger = rho, found bottom-up; its adjoint
/// is the lower-triangular MLE starting point.
fn reverse_cholesky(rho: &ComplexMatrix) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(4);
    for b in (0..4).rev() {
        let mut diag = rho.get(b, b).re;
        for c in (b + 1)..4 {
            diag -= u.get(b, c).norm_sqr();
        }
        let ubb = diag.max(1e-300).sqrt();
        u.set(b, b, Complex64::new(ubb, 0.0));
        for a in 0..b {
            let mut acc = rho.get(a, b);
            for c in (b + 1)..4 {
                acc -= u.get(a, c) * u.get(b, c).conj();
            }
            u.set(a, b, acc / ubb);
        }
    }
    u
}

/// 16 real parameters of a lower-triangular T, diagonal real.
fn pack_t(t: &ComplexMatrix) -> [f64; 16] {
    let mut params = [0.0; 16];
    let mut slot = 0;
    for row in 0..4 {
        for col in 0..row {
            let e = t.get(row, col);
            params[slot] = e.re;
            params[slot + 1] = e.im;
            slot += 2;
        }
        params[slot] = t.get(row, row).re;
        slot += 1;
    }
    params
}

fn rho_of_params(params: &[f64]) -> ComplexMatrix {
    let mut t = ComplexMatrix::zeros(4);
    let mut slot = 0;
    for row in 0..4 {
        for col in 0..row {
            t.set(row, col, Complex64::new(params[slot], params[slot + 1]));
            slot += 2;
        }
        t.set(row, row, Complex64::new(params[slot], 0.0));
        slot += 1;
    }
    // T^dagger T, normalized to unit trace.
    let mut rho = ComplexMatrix::zeros(4);
    let mut trace = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::ZERO;
            for k in i.max(j)..4 {
                acc += t.get(k, i).conj() * t.get(k, j);
            }
            rho.set(i, j, acc);
            if i == j {
                trace += acc.re;
            }
        }
    }
    rho.scale_re(1.0 / trace.max(1e-300))
}

/// Poisson log-likelihood sum_s (k_s ln mu_s - mu_s), up to the
/// count-factorial constant.
fn log_likelihood(counts: &[f64; 36], rho: &ComplexMatrix, n: f64) -> f64 {
    let mut ll = 0.0;
    for ia in 0..6 {
        for ib in 0..6 {
            let mu = (n * setting_probability(rho, ia, ib)).max(1e-12);
            let k = counts[6 * ia + ib];
            ll += k * mu.ln() - mu;
        }
    }
    ll
}

/// Outcome of a tomographic reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub rho_linear: ComplexMatrix,
    pub rho_physical: DensityMatrix,
    pub log_likelihood: f64,
    pub fidelity_vs_reference: Option<f64>,
    pub converged: bool,
}

/// Maximum-likelihood reconstruction over rho(T) = T^dagger T / Tr, T
/// lower-triangular, warm-started from the projected linear inversion.
pub fn mle_reconstruct(
    data: &TomographyDataset,
    reference: Option<&DensityMatrix>,
) -> Result<ReconstructionResult> {
    let counts = data.counts_in_order()?;
    let n = data.n_nominal as f64;
    let rho_linear = linear_inversion_from_rates(&counts);
    let start = project_physical(&rho_linear)?;

    // A strictly positive floor keeps the triangular factor well defined
    // for rank-deficient starts.
    let floored = start
        .matrix()
        .scale_re(1.0 - 4.0 * MLE_FLOOR)
        .add(&ComplexMatrix::identity(4).scale_re(MLE_FLOOR))
        .expect("same dim");
    let t0 = reverse_cholesky(&floored).adjoint();
    let params0 = pack_t(&t0);

    let total: f64 = counts.iter().sum::<f64>();
    let scale = total.max(1.0);
    let mut objective = |params: &[f64]| {
        let rho = rho_of_params(params);
        let value = -log_likelihood(&counts, &rho, n) / scale;
        if value.is_finite() {
            value
        } else {
            1e300
        }
    };
    let OptimResult {
        x: best,
        converged,
        ..
    } = nelder_mead(
        &mut objective,
        &params0,
        &[0.02; 16],
        1e-10,
        MLE_BUDGET,
    );

    let rho_physical = DensityMatrix::new(rho_of_params(&best))?;
    let ll = log_likelihood(&counts, rho_physical.matrix(), n);
    Ok(ReconstructionResult {
        fidelity_vs_reference: reference.map(|r| fidelity(&rho_physical, r)),
        rho_linear,
        rho_physical,
        log_likelihood: ll,
        converged,
    })
}

fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    let mut spec = hermitian_eig(m).expect("Hermitian by construction");
    for lambda in &mut spec.eigenvalues {
        *lambda = lambda.max(0.0).sqrt();
    }
    spec.reconstruct()
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to
/// [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let root = sqrt_psd(rho.matrix());
    let inner = root
        .mul(sigma.matrix())
        .and_then(|m| m.mul(&root))
        .expect("same dim");
    let spec = hermitian_eig(&inner.symmetrized()).expect("symmetrized input");
    let trace: f64 = spec.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    (trace * trace).clamp(0.0, 1.0)
}
