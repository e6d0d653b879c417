//! State-engineering pipeline: a four-qubit polarization-path resource
//! state, trace over the path qubits, quartz-plate dephasing, and the
//! generation recipes built from those pieces.
//!
//! Qubit order in the four-qubit register is (path_A, path_B, pol_A,
//! pol_B) with the path labels r -> 0 and l -> 1, so the amplitude index
//! is `path_a*8 + path_b*4 + pol_a*2 + pol_b`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, ComplexMatrix};
use crate::states::DensityMatrix;

const NORM_TOL: f64 = 1e-12;

/// Pure state of the two path and two polarization qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct FourQubitState {
    amplitudes: [Complex64; 16],
}

impl FourQubitState {
    /// Validates unit norm within 1e-12.
    pub fn new(amplitudes: [Complex64; 16]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr.sqrt() - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!(
                "four-qubit state norm {} is not 1 within 1e-12",
                norm_sqr.sqrt()
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64; 16] {
        &self.amplitudes
    }

    /// Flat amplitude index of |path_a path_b pol_a pol_b>.
    pub fn index(path_a: usize, path_b: usize, pol_a: usize, pol_b: usize) -> usize {
        debug_assert!(path_a < 2 && path_b < 2 && pol_a < 2 && pol_b < 2);
        path_a * 8 + path_b * 4 + pol_a * 2 + pol_b
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(Error::ParamRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Resource state sqrt(1-eps)|rl>|phi+(p)> + sqrt(eps)|lr>|HV>.
pub fn xi_state(eps: f64, p: f64) -> Result<FourQubitState> {
    xi_state_with_phase(eps, p, 0.0)
}

/// Same resource state with a relative phase e^{i gamma} between the two
/// path branches.
pub fn xi_state_with_phase(eps: f64, p: f64, gamma: f64) -> Result<FourQubitState> {
    check_unit("eps", eps)?;
    check_unit("p", p)?;
    if !gamma.is_finite() {
        return Err(Error::Invalid("path phase gamma must be finite".into()));
    }
    let mut amp = [Complex64::ZERO; 16];
    let main = (1.0 - eps).sqrt();
    // |rl> branch carries |phi+(p)> = sqrt(p)|HH> + sqrt(1-p)|VV>.
    amp[FourQubitState::index(0, 1, 0, 0)] = Complex64::new(main * p.sqrt(), 0.0);
    amp[FourQubitState::index(0, 1, 1, 1)] = Complex64::new(main * (1.0 - p).sqrt(), 0.0);
    // |lr> branch carries |HV>.
    amp[FourQubitState::index(1, 0, 0, 1)] = Complex64::from_polar(eps.sqrt(), gamma);
    FourQubitState::new(amp)
}

/// Reduces the four-qubit state to the polarization pair by tracing out
/// both path qubits.
pub fn trace_path(xi: &FourQubitState) -> DensityMatrix {
    let mut outer = ComplexMatrix::zeros(16);
    for (i, a) in xi.amplitudes.iter().enumerate() {
        for (j, b) in xi.amplitudes.iter().enumerate() {
            outer.set(i, j, a * b.conj());
        }
    }
    let pol = partial_trace(&outer, &[2, 3]).expect("16 -> 4 contraction is valid");
    DensityMatrix::new(pol).expect("reduction of a pure state is a state")
}

/// Which polarization qubit a quartz plate acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephaseTarget {
    A,
    B,
    Both,
}

impl FromStr for DephaseTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Self::A),
            "b" | "B" => Ok(Self::B),
            "both" => Ok(Self::Both),
            other => Err(Error::Invalid(format!(
                "unknown dephasing target {other:?}, expected a, b, or both"
            ))),
        }
    }
}

/// Residual H-V coherence after a quartz plate of dimensionless thickness
/// C, modeled as Gaussian: gamma(C) = exp(-C^2/2).
pub fn coherence_factor(c: f64) -> f64 {
    (-0.5 * c * c).exp()
}

/// Phi+/Phi- mixing weight q = (1 - gamma(C))/2, from 0 at C=0 to 1/2 for
/// thick plates.
pub fn dephasing_weight(c: f64) -> f64 {
    0.5 * (1.0 - coherence_factor(c))
}

/// Damps the H-V coherences of the targeted qubit(s) by gamma(C), leaving
/// populations untouched.
pub fn dephase(rho: &DensityMatrix, c: f64, target: DephaseTarget) -> Result<DensityMatrix> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::ParamRange {
            name: "quartz_C",
            value: c,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let gamma = coherence_factor(c);
    let mut m = ComplexMatrix::zeros(4);
    for row in 0..4 {
        for col in 0..4 {
            let (a, b) = (row / 2, row % 2);
            let (ap, bp) = (col / 2, col % 2);
            let mut factor = 1.0;
            if matches!(target, DephaseTarget::A | DephaseTarget::Both) && a != ap {
                factor *= gamma;
            }
            if matches!(target, DephaseTarget::B | DephaseTarget::Both) && b != bp {
                factor *= gamma;
            }
            m.set(row, col, rho.entry(row, col) * factor);
        }
    }
    DensityMatrix::new(m)
}

/// One of the documented generation procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Up,
    Down,
    Werner,
    MemsRee,
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Self::Up),
            "down" => Ok(Self::Down),
            "werner" => Ok(Self::Werner),
            "mems_ree" | "mems-ree" => Ok(Self::MemsRee),
            other => Err(Error::Invalid(format!(
                "unknown recipe {other:?}, expected up, down, werner, or mems_ree"
            ))),
        }
    }
}

/// Full knob set of the source: attenuator weight eps, waveplate
/// unbalancing p, path phase gamma, and quartz thickness C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub eps: f64,
    pub p: f64,
    pub path_phase_gamma: f64,
    #[serde(rename = "quartz_C")]
    pub quartz_c: f64,
    pub recipe: Recipe,
}

/// Runs a generation recipe and returns the engineered polarization
/// state.
///
/// `up` traces the path out of the resource state; `down` dephases one
/// qubit of the Bell state; `werner` mixes the Bell state with a fully
/// dephased |++> branch; `mems_ree` applies partial one-qubit dephasing
/// to the p=1/2 resource reduction.
pub fn engineer(config: &SourceConfig) -> Result<DensityMatrix> {
    match config.recipe {
        Recipe::Up => {
            let xi = xi_state_with_phase(config.eps, config.p, config.path_phase_gamma)?;
            Ok(trace_path(&xi))
        }
        Recipe::Down => {
            let bell = trace_path(&xi_state_with_phase(0.0, 0.5, config.path_phase_gamma)?);
            dephase(&bell, config.quartz_c, DephaseTarget::A)
        }
        Recipe::Werner => {
            check_unit("eps", config.eps)?;
            let bell = trace_path(&xi_state(0.0, 0.5)?);
            let plus_plus =
                DensityMatrix::new(ComplexMatrix::from_real(4, &[0.25; 16])?)?;
            let branch = dephase(&plus_plus, config.quartz_c, DephaseTarget::Both)?;
            let mixed = bell
                .matrix()
                .scale_re(1.0 - config.eps)
                .add(&branch.matrix().scale_re(config.eps))?;
            DensityMatrix::new(mixed)
        }
        Recipe::MemsRee => {
            if !(0.0..=1.0 / 3.0).contains(&config.eps) {
                return Err(Error::ParamRange {
                    name: "eps",
                    value: config.eps,
                    lo: 0.0,
                    hi: 1.0 / 3.0,
                });
            }
            let reduced = trace_path(&xi_state_with_phase(
                config.eps,
                0.5,
                config.path_phase_gamma,
            )?);
            dephase(&reduced, config.quartz_c, DephaseTarget::A)
        }
    }
}
