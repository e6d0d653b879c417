//! Two-qubit density matrices and the state families under study.
//!
//! Basis ordering is |00>, |01>, |10>, |11> with the first factor belonging
//! to qubit A; horizontal polarization maps to 0 and vertical to 1. All
//! constructors build their matrices entrywise so exact zeros stay exact.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, partial_trace, ComplexMatrix, ComplexVector};

/// Trace and hermiticity tolerance for accepting a candidate matrix.
pub const STATE_TOL: f64 = 1e-10;

/// Below this, a negative eigenvalue is treated as an exact zero and the
/// matrix is kept untouched; between this and `-STATE_TOL` the spectrum is
/// clipped to zero and renormalized (float noise at construction).
const EXACT_ZERO_TOL: f64 = 1e-14;

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::ParamRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

/// Validated two-qubit density matrix: Hermitian, unit trace, positive
/// semidefinite (all within 1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates and wraps a 4x4 matrix.
    ///
    /// The matrix is symmetrized when its hermiticity defect is within
    /// tolerance. Eigenvalues in `[-1e-10, -1e-14)` are clipped to zero and
    /// the spectrum renormalized; anything more negative is rejected.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::Dimension(m.dim()));
        }
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let m = m.symmetrized();
        let trace = m.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let spec = hermitian_eig(&m)?;
        let min_eig = *spec
            .eigenvalues
            .last()
            .expect("4x4 spectrum cannot be empty");
        if min_eig < -STATE_TOL {
            return Err(Error::NotPositive { min_eig });
        }
        if min_eig < -EXACT_ZERO_TOL {
            let clipped: Vec<f64> = spec.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let renormalized = crate::linalg::HermitianSpectrum {
                eigenvalues: clipped.iter().map(|&x| x / total).collect(),
                eigenvectors: spec.eigenvectors,
            };
            return Ok(Self {
                m: renormalized.reconstruct(),
            });
        }
        Ok(Self { m })
    }

    /// Projector onto a normalized pure state.
    pub fn from_pure(ket: &ComplexVector) -> Result<Self> {
        if ket.dim() != 4 {
            return Err(Error::Dimension(ket.dim()));
        }
        Self::new(ket.normalized().outer())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m.get(row, col)
    }

    /// Tr(rho^2); 1 for pure states, 1/4 for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        let f = self.m.frobenius_norm();
        f * f
    }

    /// Reduced state of qubit A (traces out B).
    pub fn reduced_a(&self) -> ComplexMatrix {
        partial_trace(&self.m, &[0]).expect("valid selector")
    }

    /// Reduced state of qubit B (traces out A).
    pub fn reduced_b(&self) -> ComplexMatrix {
        partial_trace(&self.m, &[1]).expect("valid selector")
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.m)
            .expect("validated state stays Hermitian")
            .eigenvalues
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.m.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Relative phase of the |11> branch in a Bell-like superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "plus" | "+" | "+1" => Ok(Sign::Plus),
            "minus" | "-" | "-1" => Ok(Sign::Minus),
            other => Err(format!("unknown sign '{other}' (expected plus or minus)")),
        }
    }
}

/// Ket sqrt(p)|00> +/- sqrt(1-p)|11>.
pub fn bell_phi_ket(p: f64, sign: Sign) -> Result<ComplexVector> {
    check_range("p", p, 0.0, 1.0)?;
    ComplexVector::new(vec![
        Complex64::new(p.sqrt(), 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(sign.as_f64() * (1.0 - p).sqrt(), 0.0),
    ])
}

/// Pure state sqrt(p)|00> +/- sqrt(1-p)|11>; p = 1/2 gives the Bell states
/// Phi+ / Phi-.
pub fn bell_phi(p: f64, sign: Sign) -> Result<DensityMatrix> {
    let ket = bell_phi_ket(p, sign)?;
    let mut m = ComplexMatrix::zeros(4);
    let a = p;
    let b = 1.0 - p;
    let c = sign.as_f64() * (p * (1.0 - p)).sqrt();
    m.set(0, 0, Complex64::new(a, 0.0));
    m.set(3, 3, Complex64::new(b, 0.0));
    m.set(0, 3, Complex64::new(c, 0.0));
    m.set(3, 0, Complex64::new(c, 0.0));
    debug_assert!((ket.outer().sub(&m).unwrap().frobenius_norm()) < 1e-14);
    DensityMatrix::new(m)
}

/// Bell state mixed with white noise: (1-eps)|Phi+><Phi+| + eps I/4.
pub fn werner(eps: f64) -> Result<DensityMatrix> {
    check_range("eps", eps, 0.0, 1.0)?;
    let mut m = ComplexMatrix::zeros(4);
    let corner = (1.0 - eps) / 2.0;
    let heavy = corner + eps / 4.0;
    let light = eps / 4.0;
    m.set(0, 0, Complex64::new(heavy, 0.0));
    m.set(1, 1, Complex64::new(light, 0.0));
    m.set(2, 2, Complex64::new(light, 0.0));
    m.set(3, 3, Complex64::new(heavy, 0.0));
    m.set(0, 3, Complex64::new(corner, 0.0));
    m.set(3, 0, Complex64::new(corner, 0.0));
    DensityMatrix::new(m)
}

/// Rank-3 mixture of both Phi Bell states with a |01> population:
/// ((1-a+r)/2)|Phi+><Phi+| + ((1-a-r)/2)|Phi-><Phi-| + a|01><01|.
pub fn mems_ree(a: f64, r: f64) -> Result<DensityMatrix> {
    check_range("a", a, 0.0, 1.0 / 3.0)?;
    check_range("r", r, 0.0, 1.0 - a)?;
    let mut m = ComplexMatrix::zeros(4);
    let diag = (1.0 - a) / 2.0;
    m.set(0, 0, Complex64::new(diag, 0.0));
    m.set(1, 1, Complex64::new(a, 0.0));
    m.set(3, 3, Complex64::new(diag, 0.0));
    m.set(0, 3, Complex64::new(r / 2.0, 0.0));
    m.set(3, 0, Complex64::new(r / 2.0, 0.0));
    DensityMatrix::new(m)
}

/// Phi+/Phi- mixture (1-q)|Phi+><Phi+| + q|Phi-><Phi-| for q in [0, 1/2].
pub fn rho_down(q: f64) -> Result<DensityMatrix> {
    check_range("q", q, 0.0, 0.5)?;
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 0, Complex64::new(0.5, 0.0));
    m.set(3, 3, Complex64::new(0.5, 0.0));
    let corner = (1.0 - 2.0 * q) / 2.0;
    m.set(0, 3, Complex64::new(corner, 0.0));
    m.set(3, 0, Complex64::new(corner, 0.0));
    DensityMatrix::new(m)
}

/// Partially entangled pure state mixed with a |01> population:
/// (1-eps)|phi+(p)><phi+(p)| + eps|01><01|.
pub fn rho_up(eps: f64, p: f64) -> Result<DensityMatrix> {
    check_range("eps", eps, 0.0, 1.0)?;
    check_range("p", p, 0.0, 1.0)?;
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 0, Complex64::new((1.0 - eps) * p, 0.0));
    m.set(1, 1, Complex64::new(eps, 0.0));
    m.set(3, 3, Complex64::new((1.0 - eps) * (1.0 - p), 0.0));
    let corner = (1.0 - eps) * (p * (1.0 - p)).sqrt();
    m.set(0, 3, Complex64::new(corner, 0.0));
    m.set(3, 0, Complex64::new(corner, 0.0));
    DensityMatrix::new(m)
}

/// Parameters of an X-shaped density matrix: populations on the diagonal,
/// coherences on the anti-diagonal corners (0,3) and (1,2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStateParams {
    pub populations: [f64; 4],
    pub coh_outer: Complex64,
    pub coh_inner: Complex64,
}

impl XStateParams {
    /// Parameters with real coherences.
    pub fn real(populations: [f64; 4], coh_outer: f64, coh_inner: f64) -> Self {
        Self {
            populations,
            coh_outer: Complex64::new(coh_outer, 0.0),
            coh_inner: Complex64::new(coh_inner, 0.0),
        }
    }

    /// Parameters reproducing `werner(eps)`.
    pub fn werner(eps: f64) -> Self {
        let corner = (1.0 - eps) / 2.0;
        let heavy = corner + eps / 4.0;
        Self {
            populations: [heavy, eps / 4.0, eps / 4.0, heavy],
            coh_outer: Complex64::new(corner, 0.0),
            coh_inner: Complex64::ZERO,
        }
    }
}

/// Builds the X-state
///
/// ```text
/// [ p0   0    0    c14 ]
/// [ 0    p1   c23  0   ]
/// [ 0    c23* p2   0   ]
/// [ c14* 0    0    p3  ]
/// ```
///
/// requiring unit trace, nonnegative populations and the positivity bounds
/// |c14|^2 <= p0 p3, |c23|^2 <= p1 p2.
pub fn xstate(params: &XStateParams) -> Result<DensityMatrix> {
    let pops = params.populations;
    for (i, &d) in pops.iter().enumerate() {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::Invalid(format!(
                "population {i} = {d} must be finite and nonnegative"
            )));
        }
    }
    let total: f64 = pops.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::BadTrace { trace: total });
    }
    let slack = 1e-12;
    if params.coh_outer.norm_sqr() > pops[0] * pops[3] + slack {
        return Err(Error::CoherenceBound {
            name: "c14",
            value: params.coh_outer.norm(),
            bound: (pops[0] * pops[3]).sqrt(),
        });
    }
    if params.coh_inner.norm_sqr() > pops[1] * pops[2] + slack {
        return Err(Error::CoherenceBound {
            name: "c23",
            value: params.coh_inner.norm(),
            bound: (pops[1] * pops[2]).sqrt(),
        });
    }
    let mut m = ComplexMatrix::zeros(4);
    for i in 0..4 {
        m.set(i, i, Complex64::new(pops[i], 0.0));
    }
    m.set(0, 3, params.coh_outer);
    m.set(3, 0, params.coh_outer.conj());
    m.set(1, 2, params.coh_inner);
    m.set(2, 1, params.coh_inner.conj());
    DensityMatrix::new(m)
}

/// Draws a Hilbert-Schmidt random state G G^dag / Tr(G G^dag) from a
/// square Ginibre matrix with standard complex normal entries.
pub fn random_state(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_from(&mut rng)
}

/// Same as [`random_state`] but drawing from a caller-owned stream.
pub fn random_state_from<R: Rng>(rng: &mut R) -> DensityMatrix {
    let mut g = ComplexMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g.set(i, j, Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
        }
    }
    let gg = g.mul(&g.adjoint()).expect("same dim");
    let m = gg.scale_re(1.0 / gg.trace().re);
    DensityMatrix::new(m).expect("Ginibre product is a valid state")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bell_phi_is_pure_with_expected_marginals() {
        let rho = bell_phi(0.7, Sign::Plus).unwrap();
        assert!(close(rho.purity(), 1.0, 1e-12));
        let spec = hermitian_eig(&rho.reduced_a()).unwrap();
        assert!(close(spec.eigenvalues[0], 0.7, 1e-12));
        assert!(close(spec.eigenvalues[1], 0.3, 1e-12));
    }

    #[test]
    fn bell_phi_rejects_out_of_range() {
        assert!(bell_phi(-0.1, Sign::Plus).is_err());
        assert!(bell_phi(1.1, Sign::Minus).is_err());
    }

    #[test]
    fn werner_matches_explicit_mixture() {
        for &eps in &[0.0, 0.225, 0.426, 0.519, 0.75, 1.0] {
            let got = werner(eps).unwrap();
            let bell = bell_phi(0.5, Sign::Plus).unwrap();
            let want = bell
                .matrix()
                .scale_re(1.0 - eps)
                .add(&ComplexMatrix::identity(4).scale_re(eps / 4.0))
                .unwrap();
            assert!(got.matrix().sub(&want).unwrap().frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn werner_eigenvalues_are_analytic() {
        let rho = werner(0.225).unwrap();
        let eigs = rho.eigenvalues();
        assert!(close(eigs[0], 0.83125, 1e-12));
        for &e in &eigs[1..] {
            assert!(close(e, 0.05625, 1e-12));
        }
    }

    #[test]
    fn mems_ree_spectrum_matches_weights() {
        let rho = mems_ree(0.2, 0.5).unwrap();
        let eigs = rho.eigenvalues();
        let want = [0.65, 0.2, 0.15, 0.0];
        for (g, w) in eigs.iter().zip(want) {
            assert!(close(*g, w, 1e-12), "got {g}, want {w}");
        }
    }

    #[test]
    fn mems_ree_at_a_zero_is_rho_down() {
        for &r in &[0.0, 0.3, 0.8, 1.0] {
            let left = mems_ree(0.0, r).unwrap();
            let right = rho_down((1.0 - r) / 2.0).unwrap();
            assert!(
                left.matrix()
                    .sub(right.matrix())
                    .unwrap()
                    .frobenius_norm()
                    < 1e-14
            );
        }
    }

    #[test]
    fn mems_ree_rejects_negative_weight() {
        // r > 1 - a makes the Phi- weight negative.
        assert!(mems_ree(0.2, 0.85).is_err());
        assert!(mems_ree(0.4, 0.1).is_err());
    }

    #[test]
    fn rho_down_entropy_inputs() {
        let rho = rho_down(0.25).unwrap();
        let eigs = rho.eigenvalues();
        assert!(close(eigs[0], 0.75, 1e-12));
        assert!(close(eigs[1], 0.25, 1e-12));
        assert!(close(eigs[2], 0.0, 1e-12));
    }

    #[test]
    fn rho_up_purity_and_x_pattern() {
        let rho = rho_up(0.1, 0.8).unwrap();
        // (1-eps)^2 + eps^2: the |01> branch is orthogonal to phi+(p), so
        // the cross term vanishes.
        assert!(close(rho.purity(), 0.82, 1e-12));
        // Off-X entries are exactly zero, not merely small.
        let zero_positions = [
            (0, 1),
            (0, 2),
            (1, 0),
            (1, 3),
            (2, 0),
            (2, 3),
            (3, 1),
            (3, 2),
        ];
        for (i, j) in zero_positions {
            assert_eq!(rho.entry(i, j), Complex64::ZERO);
        }
    }

    #[test]
    fn rho_up_extremes() {
        // eps = 0, p = 1 is the product |00><00|.
        let rho = rho_up(0.0, 1.0).unwrap();
        assert!(close(rho.entry(0, 0).re, 1.0, 1e-14));
        // eps = 1 is |01><01| regardless of p.
        let rho = rho_up(1.0, 0.3).unwrap();
        assert!(close(rho.entry(1, 1).re, 1.0, 1e-14));
    }

    #[test]
    fn xstate_reproduces_werner() {
        let got = xstate(&XStateParams::werner(0.3)).unwrap();
        let want = werner(0.3).unwrap();
        assert!(got.matrix().sub(want.matrix()).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn xstate_rejects_coherence_overflow() {
        let params = XStateParams {
            populations: [0.4, 0.1, 0.1, 0.4],
            coh_outer: Complex64::new(0.45, 0.0),
            coh_inner: Complex64::ZERO,
        };
        assert!(matches!(
            xstate(&params),
            Err(Error::CoherenceBound { name: "c14", .. })
        ));
    }

    #[test]
    fn xstate_accepts_saturated_pure_state() {
        let params = XStateParams {
            populations: [0.5, 0.0, 0.0, 0.5],
            coh_outer: Complex64::new(0.5, 0.0),
            coh_inner: Complex64::ZERO,
        };
        let rho = xstate(&params).unwrap();
        assert!(close(rho.purity(), 1.0, 1e-12));
    }

    #[test]
    fn random_state_is_deterministic_per_seed() {
        let a = random_state(99);
        let b = random_state(99);
        assert_eq!(a.matrix().entries(), b.matrix().entries());
        let c = random_state(100);
        assert!(a.matrix().sub(c.matrix()).unwrap().frobenius_norm() > 1e-6);
    }

    #[test]
    fn random_state_mean_purity_matches_ensemble_moment() {
        // Square-Ginibre induced measure: E[Tr rho^2] = 2N/(N^2+1) = 8/17.
        let n = 10_000;
        let mean: f64 = (0..n).map(|i| random_state(i as u64).purity()).sum::<f64>() / n as f64;
        assert!(close(mean, 8.0 / 17.0, 0.01), "mean purity {mean}");
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        // Trace violation.
        let m = ComplexMatrix::identity(4);
        assert!(matches!(DensityMatrix::new(m), Err(Error::BadTrace { .. })));
        // Negative eigenvalue beyond tolerance.
        let mut m = ComplexMatrix::zeros(4);
        m.set(0, 0, Complex64::new(1.1, 0.0));
        m.set(1, 1, Complex64::new(-0.1, 0.0));
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositive { .. })
        ));
        // Hermiticity violation.
        let mut m = ComplexMatrix::zeros(4);
        m.set(0, 0, Complex64::new(1.0, 0.0));
        m.set(0, 1, Complex64::new(0.2, 0.1));
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn density_matrix_clips_construction_noise() {
        // A slightly negative eigenvalue within tolerance gets clipped and
        // the state renormalized.
        let mut m = ComplexMatrix::zeros(4);
        m.set(0, 0, Complex64::new(1.0 + 5e-12, 0.0));
        m.set(1, 1, Complex64::new(-5e-12, 0.0));
        let rho = DensityMatrix::new(m).unwrap();
        let eigs = rho.eigenvalues();
        assert!(eigs.iter().all(|&e| e >= -1e-15));
        assert!(close(rho.matrix().trace().re, 1.0, 1e-12));
    }

    #[test]
    fn state_json_round_trip_is_bit_exact() {
        let rho = random_state(7);
        let json = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&json).unwrap();
        for (a, b) in rho.matrix().entries().iter().zip(back.matrix().entries()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // Schema sanity: dim field and 16 entry pairs.
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["dim"], 4);
        assert_eq!(value["entries"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn deserialization_validates_invariants() {
        let mut bad: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&werner(0.5).unwrap()).unwrap()).unwrap();
        bad["entries"][0] = serde_json::json!([0.9, 0.0]);
        let err = serde_json::from_value::<DensityMatrix>(bad).unwrap_err();
        assert!(err.to_string().contains("trace"));
    }
}
