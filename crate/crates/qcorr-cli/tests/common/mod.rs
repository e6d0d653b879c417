//! Brute-force references for the optimizer-dependent measures, kept
//! independent of the library's staged search: dense angle scans with
//! recursive zoom, projector algebra written out directly, own
//! closed-form two-level entropy. Only the unconditioned von Neumann
//! entropies are taken from the library (they are optimizer-free and
//! pinned to closed forms by its unit tests).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use qcorr::measures::vn_entropy_state;
use qcorr::DensityMatrix;

fn ket(theta: f64, phi: f64) -> [Complex64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [Complex64::new(c, 0.0), Complex64::from_polar(s, phi)]
}

fn orth(k: &[Complex64; 2]) -> [Complex64; 2] {
    [-k[1].conj(), k[0].conj()]
}

fn plog2p(p: f64) -> f64 {
    if p > 1e-15 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn two_level_entropy(d0: f64, d1: f64, off: Complex64) -> f64 {
    let mean = 0.5 * (d0 + d1);
    let radius = (0.25 * (d0 - d1) * (d0 - d1) + off.norm_sqr()).sqrt();
    plog2p((mean + radius).clamp(0.0, 1.0)) + plog2p((mean - radius).clamp(0.0, 1.0))
}

/// Outcome-averaged entropy of the unmeasured qubit after projecting the
/// measured one onto the basis at (theta, phi).
fn avg_conditional_entropy(
    rho: &DensityMatrix,
    theta: f64,
    phi: f64,
    measure_b: bool,
) -> f64 {
    let k = ket(theta, phi);
    let idx = |kept: usize, measured: usize| {
        if measure_b {
            2 * kept + measured
        } else {
            2 * measured + kept
        }
    };
    let mut total = 0.0;
    for b in [k, orth(&k)] {
        let mut n00 = Complex64::ZERO;
        let mut n01 = Complex64::ZERO;
        let mut n11 = Complex64::ZERO;
        for j in 0..2 {
            for l in 0..2 {
                let w = b[j].conj() * b[l];
                n00 += w * rho.entry(idx(0, j), idx(0, l));
                n01 += w * rho.entry(idx(0, j), idx(1, l));
                n11 += w * rho.entry(idx(1, j), idx(1, l));
            }
        }
        let p = (n00.re + n11.re).max(0.0);
        if p > 1e-15 {
            total += p * two_level_entropy(n00.re / p, n11.re / p, n01 / p);
        }
    }
    total
}

/// Dense 192x192 scan over the measurement sphere followed by
/// span-halving zooms around the best point.
pub fn oracle_min_conditional_entropy(rho: &DensityMatrix, measure_b: bool) -> f64 {
    let n = 192;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=n {
        let theta = PI * i as f64 / n as f64;
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            let v = avg_conditional_entropy(rho, theta, phi, measure_b);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let mut span_t = 2.0 * PI / n as f64;
    let mut span_p = 2.0 * TAU / n as f64;
    for _ in 0..14 {
        let (_, ct, cp) = best;
        for i in -6i32..=6 {
            for j in -6i32..=6 {
                let theta = ct + span_t * i as f64 / 6.0;
                let phi = cp + span_p * j as f64 / 6.0;
                let v = avg_conditional_entropy(rho, theta, phi, measure_b);
                if v < best.0 {
                    best = (v, theta, phi);
                }
            }
        }
        span_t *= 0.5;
        span_p *= 0.5;
    }
    best.0
}

fn reduced_entropy(rho: &DensityMatrix, system_b: bool) -> f64 {
    let mut d0 = Complex64::ZERO;
    let mut d1 = Complex64::ZERO;
    let mut off = Complex64::ZERO;
    for t in 0..2 {
        let idx = |kept: usize| {
            if system_b {
                2 * t + kept
            } else {
                2 * kept + t
            }
        };
        d0 += rho.entry(idx(0), idx(0));
        d1 += rho.entry(idx(1), idx(1));
        off += rho.entry(idx(0), idx(1));
    }
    two_level_entropy(d0.re, d1.re, off)
}

/// Left discord (projective measurement on B), via the grid reference.
pub fn oracle_discord_left(rho: &DensityMatrix) -> f64 {
    reduced_entropy(rho, true) - vn_entropy_state(rho)
        + oracle_min_conditional_entropy(rho, true)
}

/// Right discord (projective measurement on A).
pub fn oracle_discord_right(rho: &DensityMatrix) -> f64 {
    reduced_entropy(rho, false) - vn_entropy_state(rho)
        + oracle_min_conditional_entropy(rho, false)
}

fn table_mi(rho: &DensityMatrix, angles: [f64; 4]) -> f64 {
    let a = ket(angles[0], angles[1]);
    let b = ket(angles[2], angles[3]);
    let mut p = [[0.0f64; 2]; 2];
    for (ia, av) in [a, orth(&a)].iter().enumerate() {
        for (ib, bv) in [b, orth(&b)].iter().enumerate() {
            let v = [
                av[0] * bv[0],
                av[0] * bv[1],
                av[1] * bv[0],
                av[1] * bv[1],
            ];
            let mut acc = Complex64::ZERO;
            for r in 0..4 {
                for c in 0..4 {
                    acc += v[r].conj() * rho.entry(r, c) * v[c];
                }
            }
            p[ia][ib] = acc.re.max(0.0);
        }
    }
    let pa = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let pb = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    let mut mi = 0.0;
    for ia in 0..2 {
        for ib in 0..2 {
            if p[ia][ib] > 1e-15 {
                mi += p[ia][ib] * (p[ia][ib] / (pa[ia] * pb[ib])).log2();
            }
        }
    }
    mi
}

/// Maximal outcome-table mutual information over bi-local projective
/// measurements: dense 24^4 scan plus 4D span-halving zooms.
pub fn oracle_classical_mi(rho: &DensityMatrix) -> f64 {
    let n = 24;
    let mut best = (f64::NEG_INFINITY, [0.0f64; 4]);
    for ia in 0..n {
        let ta = PI * ia as f64 / (n - 1) as f64;
        for ja in 0..n {
            let pa = TAU * ja as f64 / n as f64;
            for ib in 0..n {
                let tb = PI * ib as f64 / (n - 1) as f64;
                for jb in 0..n {
                    let pb = TAU * jb as f64 / n as f64;
                    let angles = [ta, pa, tb, pb];
                    let v = table_mi(rho, angles);
                    if v > best.0 {
                        best = (v, angles);
                    }
                }
            }
        }
    }
    let mut spans = [
        2.0 * PI / (n - 1) as f64,
        2.0 * TAU / n as f64,
        2.0 * PI / (n - 1) as f64,
        2.0 * TAU / n as f64,
    ];
    for _ in 0..16 {
        let center = best.1;
        for ia in -3i32..=3 {
            for ja in -3i32..=3 {
                for ib in -3i32..=3 {
                    for jb in -3i32..=3 {
                        let angles = [
                            center[0] + spans[0] * ia as f64 / 3.0,
                            center[1] + spans[1] * ja as f64 / 3.0,
                            center[2] + spans[2] * ib as f64 / 3.0,
                            center[3] + spans[3] * jb as f64 / 3.0,
                        ];
                        let v = table_mi(rho, angles);
                        if v > best.0 {
                            best = (v, angles);
                        }
                    }
                }
            }
        }
        for s in &mut spans {
            *s *= 0.5;
        }
    }
    best.0
}
