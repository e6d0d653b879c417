//! Boundary tracing in the two correlation planes: the maximal symmetric
//! discord reachable at fixed global entropy, the band of A values
//! reachable at fixed symmetric discord, random-state scatters, and
//! Gaussian uncertainty propagation for the calibrated source settings.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, map_slice};
use crate::measures::{
    correlation_report, discord_sym, vn_entropy_state, CorrelationReport,
};
use crate::optim::nelder_mead;
use crate::states::{
    bell_phi, mems_ree, random_state, rho_down, rho_up, werner, xstate, DensityMatrix,
    Sign, XStateParams,
};

/// Entropy-constrained searches weight the constraint residual by this.
const PENALTY_KAPPA: f64 = 1e3;
const REFINE_BUDGET: usize = 1500;

/// Named state family with a real parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Werner,
    BellPhi,
    MemsRee,
    RhoDown,
    RhoUp,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Werner => "werner",
            Family::BellPhi => "bell_phi",
            Family::MemsRee => "mems_ree",
            Family::RhoDown => "rho_down",
            Family::RhoUp => "rho_up",
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Family::Werner => &["eps"],
            Family::BellPhi => &["p"],
            Family::MemsRee => &["a", "r"],
            Family::RhoDown => &["q"],
            Family::RhoUp => &["eps", "p"],
        }
    }

    pub fn construct(&self, params: &[f64]) -> Result<DensityMatrix> {
        let expect = self.param_names().len();
        if params.len() != expect {
            return Err(Error::Invalid(format!(
                "family {} takes {expect} parameters, got {}",
                self.name(),
                params.len()
            )));
        }
        match self {
            Family::Werner => werner(params[0]),
            Family::BellPhi => bell_phi(params[0], Sign::Plus),
            Family::MemsRee => mems_ree(params[0], params[1]),
            Family::RhoDown => rho_down(params[0]),
            Family::RhoUp => rho_up(params[0], params[1]),
        }
    }

    /// Clamps a parameter vector into the family domain (used when
    /// propagating Gaussian perturbations).
    pub fn clip(&self, params: &mut [f64]) {
        match self {
            Family::Werner | Family::BellPhi => params[0] = params[0].clamp(0.0, 1.0),
            Family::RhoDown => params[0] = params[0].clamp(0.0, 0.5),
            Family::MemsRee => {
                params[0] = params[0].clamp(0.0, 1.0 / 3.0);
                params[1] = params[1].clamp(0.0, 1.0 - params[0]);
            }
            Family::RhoUp => {
                params[0] = params[0].clamp(0.0, 1.0);
                params[1] = params[1].clamp(0.0, 1.0);
            }
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "werner" => Ok(Family::Werner),
            "bell_phi" | "bell-phi" => Ok(Family::BellPhi),
            "mems_ree" | "mems-ree" => Ok(Family::MemsRee),
            "rho_down" | "rho-down" => Ok(Family::RhoDown),
            "rho_up" | "rho-up" => Ok(Family::RhoUp),
            other => Err(Error::Invalid(format!(
                "unknown family {other:?}, expected werner, bell_phi, mems_ree, rho_down, or rho_up"
            ))),
        }
    }
}

/// One evaluated state: where it came from and every measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub family: String,
    pub params: Vec<(String, f64)>,
    pub report: CorrelationReport,
}

/// `count` evenly spaced values, inclusive of both ends.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            if i == count - 1 {
                // exact endpoint; the ratio form can overshoot by an ulp
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// Evaluates a family on the cartesian product of named parameter grids,
/// ordered with the last grid fastest.
pub fn sweep_family(family: Family, grids: &[(String, Vec<f64>)]) -> Result<Vec<SweepRecord>> {
    let names = family.param_names();
    if grids.len() != names.len()
        || grids.iter().zip(names.iter()).any(|((g, _), n)| g != n)
    {
        let got: Vec<&str> = grids.iter().map(|(g, _)| g.as_str()).collect();
        return Err(Error::Invalid(format!(
            "family {} expects grids for {names:?}, got {got:?}",
            family.name()
        )));
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for (_, values) in grids {
        if values.is_empty() {
            return Err(Error::Invalid("empty parameter grid".into()));
        }
        let mut next = Vec::with_capacity(points.len() * values.len());
        for stem in &points {
            for &v in values {
                let mut p = stem.clone();
                p.push(v);
                next.push(p);
            }
        }
        points = next;
    }
    // Validate the whole grid before burning optimizer time on it.
    for p in &points {
        family.construct(p)?;
    }
    Ok(map_slice(&points, |p| {
        let rho = family.construct(p).expect("validated above");
        let report = correlation_report(&rho).expect("family states are physical");
        SweepRecord {
            family: family.name().to_string(),
            params: names
                .iter()
                .map(|n| n.to_string())
                .zip(p.iter().copied())
                .collect(),
            report,
        }
    }))
}

/// Full reports for `n` Hilbert-Schmidt-random states; item `i` is built
/// from `seed ^ i` so the scatter is independent of scheduling.
pub fn scatter_random(n: usize, seed: u64) -> Vec<SweepRecord> {
    map_indexed(n, |i| {
        let rho = random_state(seed ^ i as u64);
        let report = correlation_report(&rho).expect("random states are physical");
        SweepRecord {
            family: "random".to_string(),
            params: vec![("index".to_string(), i as f64)],
            report,
        }
    })
}

/// Which quantity the bins partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinAxis {
    Entropy,
    Discord,
}

/// Binning and sampling-effort knobs for the boundary searches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub bin_axis: BinAxis,
    pub bin_count: usize,
    pub samples_per_bin: usize,
    pub seed: u64,
}

impl EnvelopeConfig {
    fn validate(&self, expected: BinAxis) -> Result<()> {
        if self.bin_axis != expected {
            return Err(Error::Invalid(format!(
                "bin axis {:?} does not fit this search",
                self.bin_axis
            )));
        }
        if self.bin_count == 0 || self.samples_per_bin == 0 {
            return Err(Error::Invalid(
                "bin_count and samples_per_bin must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One entropy bin of the maximal-discord boundary. An empty bin keeps
/// `None` rather than an interpolated value. The monotone pass may lift
/// `d_sym` to a higher-entropy neighbor's value; `params` and
/// `s_achieved` always describe the best state found inside the bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeBin {
    pub s_target: f64,
    pub d_sym: Option<f64>,
    pub s_achieved: Option<f64>,
    pub params: Option<XStateParams>,
}

/// Parameters read off a density matrix already in X form.
fn xparams_of(rho: &DensityMatrix) -> XStateParams {
    XStateParams {
        populations: [
            rho.entry(0, 0).re,
            rho.entry(1, 1).re,
            rho.entry(2, 2).re,
            rho.entry(3, 3).re,
        ],
        coh_outer: rho.entry(0, 3),
        coh_inner: rho.entry(1, 2),
    }
}

fn x_entropy_discord(xp: &XStateParams) -> Option<(f64, f64)> {
    let rho = xstate(xp).ok()?;
    let s = vn_entropy_state(&rho);
    let d = discord_sym(&rho).ok()?;
    Some((s, d))
}

/// Smooth unconstrained 6-vector behind an X-state: four squared and
/// normalized population weights plus two sin^2 coherence fractions.
fn xparams_from_vector(x: &[f64]) -> Option<XStateParams> {
    let total: f64 = x[..4].iter().map(|w| w * w).sum();
    if total < 1e-12 {
        return None;
    }
    let pops = [
        x[0] * x[0] / total,
        x[1] * x[1] / total,
        x[2] * x[2] / total,
        x[3] * x[3] / total,
    ];
    let fo = x[4].sin().powi(2);
    let fi = x[5].sin().powi(2);
    Some(XStateParams::real(
        pops,
        fo * (pops[0] * pops[3]).sqrt(),
        fi * (pops[1] * pops[2]).sqrt(),
    ))
}

fn vector_from_xparams(xp: &XStateParams) -> [f64; 6] {
    let p = xp.populations;
    let frac = |coh: f64, bound: f64| -> f64 {
        if bound < 1e-14 {
            0.0
        } else {
            (coh / bound).clamp(0.0, 1.0).sqrt().asin()
        }
    };
    [
        p[0].max(0.0).sqrt(),
        p[1].max(0.0).sqrt(),
        p[2].max(0.0).sqrt(),
        p[3].max(0.0).sqrt(),
        frac(xp.coh_outer.norm(), (p[0] * p[3]).sqrt()),
        frac(xp.coh_inner.norm(), (p[1] * p[2]).sqrt()),
    ]
}

fn random_xparams<R: Rng>(rng: &mut R) -> XStateParams {
    let mut pops = [0.0f64; 4];
    let mut total = 0.0;
    for w in &mut pops {
        let u: f64 = rng.random();
        *w = -u.max(1e-300).ln();
        total += *w;
    }
    for w in &mut pops {
        *w /= total;
    }
    let fo: f64 = rng.random();
    let fi: f64 = rng.random();
    XStateParams::real(
        pops,
        fo * (pops[0] * pops[3]).sqrt(),
        fi * (pops[1] * pops[2]).sqrt(),
    )
}

/// Family members expressed as X-states, used to seed every bin search.
fn family_seed_pool() -> Vec<XStateParams> {
    let mut pool = Vec::new();
    for eps in linspace(0.0, 1.0, 201) {
        pool.push(XStateParams::werner(eps));
    }
    for p in linspace(0.0, 1.0, 101) {
        pool.push(XStateParams::real(
            [p, 0.0, 0.0, 1.0 - p],
            (p * (1.0 - p)).sqrt(),
            0.0,
        ));
    }
    for q in linspace(0.0, 0.5, 101) {
        pool.push(XStateParams::real(
            [0.5, 0.0, 0.0, 0.5],
            0.5 * (1.0 - 2.0 * q),
            0.0,
        ));
    }
    for a in linspace(0.0, 1.0 / 3.0, 41) {
        for r in linspace(0.0, 1.0 - a, 21) {
            pool.push(XStateParams::real(
                [0.5 * (1.0 - a), a, 0.0, 0.5 * (1.0 - a)],
                0.5 * r,
                0.0,
            ));
        }
    }
    for eps in linspace(0.0, 1.0, 31) {
        for p in linspace(0.0, 1.0, 31) {
            pool.push(XStateParams::real(
                [(1.0 - eps) * p, eps, 0.0, (1.0 - eps) * (1.0 - p)],
                (1.0 - eps) * (p * (1.0 - p)).sqrt(),
                0.0,
            ));
        }
    }
    pool
}

/// Maximal symmetric discord per global-entropy bin, searched over
/// X-states seeded by the known families plus random draws, refined by
/// simplex descent on the penalty objective, with a final monotone pass.
pub fn mncms_envelope(config: &EnvelopeConfig) -> Result<Vec<EnvelopeBin>> {
    config.validate(BinAxis::Entropy)?;
    let bins = config.bin_count;
    let halfwidth = 1.0 / bins as f64; // entropy spans [0, 2]
    let pool: Vec<(f64, XStateParams)> = family_seed_pool()
        .into_iter()
        .filter_map(|xp| {
            let rho = xstate(&xp).ok()?;
            Some((vn_entropy_state(&rho), xp))
        })
        .collect();

    let centers: Vec<(usize, f64)> = (0..bins)
        .map(|k| (k, (k as f64 + 0.5) * 2.0 / bins as f64))
        .collect();
    let mut result = map_slice(&centers, |&(k, s_target)| {
        envelope_bin(s_target, halfwidth, &pool, config, k)
    });

    // A boundary that dips below a higher-entropy neighbor is numerical
    // droop; take the running maximum from the high-entropy side.
    let mut running: Option<f64> = None;
    for bin in result.iter_mut().rev() {
        if let Some(d) = bin.d_sym {
            let lifted = running.map_or(d, |r: f64| r.max(d));
            bin.d_sym = Some(lifted);
            running = Some(lifted);
        }
    }
    Ok(result)
}

fn envelope_bin(
    s_target: f64,
    halfwidth: f64,
    pool: &[(f64, XStateParams)],
    config: &EnvelopeConfig,
    bin_index: usize,
) -> EnvelopeBin {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ bin_index as u64);
    let in_bin: Vec<&XStateParams> = pool
        .iter()
        .filter(|(s, _)| (s - s_target).abs() <= halfwidth)
        .map(|(_, xp)| xp)
        .collect();
    let stride = (in_bin.len() / config.samples_per_bin).max(1);
    let mut candidates: Vec<XStateParams> =
        in_bin.iter().step_by(stride).map(|xp| (*xp).clone()).collect();
    for _ in 0..config.samples_per_bin {
        candidates.push(random_xparams(&mut rng));
    }
    // Family branches solved exactly at the bin center; the search must
    // never land below these known feasible points.
    if let Some(p) = mems_ree_extremal(&[s_target], halfwidth)[0].params.as_deref() {
        if let Ok(rho) = mems_ree(p[0], p[1]) {
            candidates.push(xparams_of(&rho));
        }
    }
    if let Some(eps) = werner_eps_for_entropy(s_target) {
        candidates.push(XStateParams::werner(eps));
    }

    let penalty = |s: f64, d: f64| d - PENALTY_KAPPA * (s - s_target) * (s - s_target);
    let mut best: Option<(f64, XStateParams)> = None;
    for xp in &candidates {
        if let Some((s, d)) = x_entropy_discord(xp) {
            let score = penalty(s, d);
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, xp.clone()));
            }
        }
    }
    let Some((_, seed_params)) = best else {
        return EnvelopeBin {
            s_target,
            d_sym: None,
            s_achieved: None,
            params: None,
        };
    };

    let mut objective = |x: &[f64]| -> f64 {
        match xparams_from_vector(x).as_ref().and_then(x_entropy_discord) {
            Some((s, d)) => -penalty(s, d),
            None => 1e6,
        }
    };
    let x0 = vector_from_xparams(&seed_params);
    let run = nelder_mead(
        &mut objective,
        &x0,
        &[0.08, 0.08, 0.08, 0.08, 0.15, 0.15],
        1e-10,
        REFINE_BUDGET,
    );

    let refined = xparams_from_vector(&run.x)
        .as_ref()
        .and_then(|xp| x_entropy_discord(xp).map(|sd| (xp.clone(), sd)));
    let (params, (s, d)) = match refined {
        Some((xp, sd)) if penalty(sd.0, sd.1) >= penalty_of(&seed_params, penalty) => (xp, sd),
        _ => {
            let sd = x_entropy_discord(&seed_params).expect("seed evaluated before");
            (seed_params, sd)
        }
    };
    if (s - s_target).abs() <= halfwidth {
        EnvelopeBin {
            s_target,
            d_sym: Some(d),
            s_achieved: Some(s),
            params: Some(params),
        }
    } else {
        EnvelopeBin {
            s_target,
            d_sym: None,
            s_achieved: None,
            params: None,
        }
    }
}

fn penalty_of(xp: &XStateParams, penalty: impl Fn(f64, f64) -> f64) -> f64 {
    x_entropy_discord(xp).map_or(f64::NEG_INFINITY, |(s, d)| penalty(s, d))
}

/// Best rank-3 family point per entropy target: maximal symmetric discord
/// of `mems_ree(a, r)` under the entropy constraint.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyExtremalPoint {
    pub s_target: f64,
    pub d_sym: Option<f64>,
    pub s_achieved: Option<f64>,
    pub params: Option<Vec<f64>>,
}

/// r solving S(mems_ree(a, r)) = s_target at fixed a; entropy falls
/// strictly as the coherence r grows, so plain bisection suffices. None
/// when the target entropy is outside what this a can reach.
fn mems_r_for_entropy(a: f64, s_target: f64) -> Option<f64> {
    let entropy = |r: f64| vn_entropy_state(&mems_ree(a, r).expect("in domain"));
    let (mut lo, mut hi) = (0.0, 1.0 - a);
    if s_target > entropy(lo) || s_target < entropy(hi) {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid) >= s_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn mems_ree_extremal(s_targets: &[f64], halfwidth: f64) -> Vec<FamilyExtremalPoint> {
    map_slice(s_targets, |&s_target| {
        // Follow the entropy constraint exactly: solve r per a, sweep a,
        // then polish the best a by golden section. Joint (a, r) descent
        // tends to stall against the constraint instead.
        let eval = |a: f64| -> Option<(f64, f64, f64)> {
            let r = mems_r_for_entropy(a, s_target)?;
            let rho = mems_ree(a, r).ok()?;
            Some((discord_sym(&rho).ok()?, a, r))
        };

        let grid = linspace(0.0, 1.0 / 3.0, 161);
        let mut best: Option<(f64, f64, f64)> = None;
        let mut best_idx = 0;
        for (k, &a) in grid.iter().enumerate() {
            if let Some(cand) = eval(a) {
                if best.is_none_or(|b| cand.0 > b.0) {
                    best = Some(cand);
                    best_idx = k;
                }
            }
        }
        let empty = FamilyExtremalPoint {
            s_target,
            d_sym: None,
            s_achieved: None,
            params: None,
        };
        let Some(mut best) = best else {
            return empty;
        };

        let mut lo = grid[best_idx.saturating_sub(1)];
        let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..30 {
            if f1.map_or(f64::NEG_INFINITY, |c| c.0) >= f2.map_or(f64::NEG_INFINITY, |c| c.0) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = eval(x2);
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        for cand in [f1, f2].into_iter().flatten() {
            if cand.0 > best.0 {
                best = cand;
            }
        }

        let (d, a, r) = best;
        let s = vn_entropy_state(&mems_ree(a, r).expect("solved point stays in domain"));
        if (s - s_target).abs() > halfwidth {
            return empty;
        }
        FamilyExtremalPoint {
            s_target,
            d_sym: Some(d),
            s_achieved: Some(s),
            params: Some(vec![a, r]),
        }
    })
}

/// Werner weight whose state has the requested global entropy, by
/// bisection (entropy is strictly increasing in the weight).
pub fn werner_eps_for_entropy(s: f64) -> Option<f64> {
    if !(0.0..=2.0).contains(&s) {
        return None;
    }
    let entropy = |eps: f64| vn_entropy_state(&werner(eps).expect("in range"));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One discord bin of the A-plane band.
#[derive(Debug, Clone, Serialize)]
pub struct AmidBin {
    pub d_target: f64,
    pub a_lower: Option<f64>,
    pub a_upper: Option<f64>,
    pub upper_params: Option<(f64, f64)>,
}

/// A point of the reachable upper boundary in the A-versus-discord plane.
#[derive(Debug, Clone, Serialize)]
pub struct RhoUpEnvelopePoint {
    pub d_target: f64,
    pub a: Option<f64>,
    pub d_achieved: Option<f64>,
    pub eps: Option<f64>,
    pub p: Option<f64>,
}

fn rho_up_measures(eps: f64, p: f64) -> Option<(f64, f64)> {
    let rho = rho_up(eps.clamp(0.0, 1.0), p.clamp(0.0, 1.0)).ok()?;
    let report = correlation_report(&rho).ok()?;
    Some((report.d_sym, report.a))
}

/// Maximizes A over the two-parameter reduction family at each discord
/// target, from a shared coarse scan refined per target.
pub fn rho_up_envelope_at(
    d_targets: &[f64],
    scan_side: usize,
    halfwidth: f64,
) -> Vec<RhoUpEnvelopePoint> {
    let side = scan_side.max(11);
    let grid: Vec<(f64, f64)> = linspace(0.0, 1.0, side)
        .into_iter()
        .flat_map(|eps| {
            linspace(0.0, 1.0, side)
                .into_iter()
                .map(move |p| (eps, p))
        })
        .collect();
    let scan: Vec<(f64, f64, f64, f64)> = map_slice(&grid, |&(eps, p)| {
        let (d, a) = rho_up_measures(eps, p).expect("grid stays in domain");
        (eps, p, d, a)
    });

    map_slice(d_targets, |&d_target| {
        let penalty =
            |d: f64, a: f64| a - PENALTY_KAPPA * (d - d_target) * (d - d_target);
        let seed = scan
            .iter()
            .max_by(|x, y| penalty(x.2, x.3).partial_cmp(&penalty(y.2, y.3)).unwrap())
            .expect("scan is non-empty");
        let mut objective = |x: &[f64]| -> f64 {
            rho_up_measures(x[0], x[1]).map_or(1e6, |(d, a)| -penalty(d, a))
        };
        let run = nelder_mead(
            &mut objective,
            &[seed.0, seed.1],
            &[0.03, 0.03],
            1e-10,
            300,
        );
        let eps = run.x[0].clamp(0.0, 1.0);
        let p = run.x[1].clamp(0.0, 1.0);
        match rho_up_measures(eps, p) {
            Some((d, a)) if (d - d_target).abs() <= halfwidth => RhoUpEnvelopePoint {
                d_target,
                a: Some(a),
                d_achieved: Some(d),
                eps: Some(eps),
                p: Some(p),
            },
            _ => RhoUpEnvelopePoint {
                d_target,
                a: None,
                d_achieved: None,
                eps: None,
                p: None,
            },
        }
    })
}

/// Lower and upper A bounds per symmetric-discord bin: the lower curve
/// from the families expected to sit at A equal to discord, the upper
/// from the two-parameter reduction family scan.
pub fn amid_plane_bounds(config: &EnvelopeConfig) -> Result<Vec<AmidBin>> {
    config.validate(BinAxis::Discord)?;
    let bins = config.bin_count;
    let halfwidth = 0.5 / bins as f64; // discord spans [0, 1]
    let centers: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) / bins as f64).collect();

    let side = ((bins * config.samples_per_bin) as f64).sqrt().ceil() as usize;
    let upper = rho_up_envelope_at(&centers, side.max(21), halfwidth);

    // Lower curve families, each swept densely in one parameter.
    let mut lower_points: Vec<(Family, Vec<f64>)> = Vec::new();
    for p in linspace(0.5, 1.0, 121) {
        lower_points.push((Family::BellPhi, vec![p]));
    }
    for eps in linspace(0.0, 1.0, 241) {
        lower_points.push((Family::Werner, vec![eps]));
    }
    for q in linspace(0.0, 0.5, 121) {
        lower_points.push((Family::RhoDown, vec![q]));
    }
    let evaluated: Vec<(f64, f64)> = map_slice(&lower_points, |(family, params)| {
        let rho = family.construct(params).expect("sweep stays in domain");
        let report = correlation_report(&rho).expect("family state");
        (report.d_sym, report.a)
    });

    let mut lower: Vec<Option<f64>> = vec![None; bins];
    for &(d, a) in &evaluated {
        let k = ((d / (2.0 * halfwidth)) as usize).min(bins - 1);
        lower[k] = Some(lower[k].map_or(a, |cur: f64| cur.min(a)));
    }

    Ok(centers
        .iter()
        .zip(upper)
        .zip(lower)
        .map(|((&d_target, up), lo)| AmidBin {
            d_target,
            a_lower: lo,
            a_upper: up.a,
            upper_params: up.eps.zip(up.p),
        })
        .collect())
}

/// Calibrated source settings (attenuator weight, waveplate unbalancing)
/// and their one-sigma uncertainties.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OperatingPoint {
    pub eps: f64,
    pub sigma_eps: f64,
    pub p: f64,
    pub sigma_p: f64,
}

pub const UP_OPERATING_POINTS: [OperatingPoint; 6] = [
    OperatingPoint { eps: 0.00, sigma_eps: 0.01, p: 0.50, sigma_p: 0.02 },
    OperatingPoint { eps: 0.05, sigma_eps: 0.01, p: 0.70, sigma_p: 0.01 },
    OperatingPoint { eps: 0.10, sigma_eps: 0.01, p: 0.80, sigma_p: 0.01 },
    OperatingPoint { eps: 0.15, sigma_eps: 0.01, p: 0.90, sigma_p: 0.01 },
    OperatingPoint { eps: 0.18, sigma_eps: 0.01, p: 0.95, sigma_p: 0.02 },
    OperatingPoint { eps: 0.20, sigma_eps: 0.01, p: 0.99, sigma_p: 0.02 },
];

/// Sample mean and standard deviation of one measure under parameter
/// noise.
#[derive(Debug, Clone, Serialize)]
pub struct SpreadEntry {
    pub measure: String,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadReport {
    pub family: String,
    pub params: Vec<(String, f64)>,
    pub sigmas: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub entries: Vec<SpreadEntry>,
}

/// Propagates Gaussian parameter uncertainty through the measures:
/// perturbs each parameter, clips into the family domain, and reports
/// mean and standard deviation of S, the symmetric discord, and A.
pub fn monte_carlo_spread(
    family: Family,
    params: &[f64],
    sigmas: &[f64],
    n: usize,
    seed: u64,
) -> Result<SpreadReport> {
    let names = family.param_names();
    if params.len() != names.len() || sigmas.len() != names.len() {
        return Err(Error::Invalid(format!(
            "family {} takes {} parameters",
            family.name(),
            names.len()
        )));
    }
    if let Some(&bad) = sigmas.iter().find(|&&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::Invalid(format!("sigma {bad} must be >= 0")));
    }
    if n == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    family.construct(params)?;

    let samples: Vec<[f64; 3]> = map_indexed(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
        let mut drawn: Vec<f64> = params
            .iter()
            .zip(sigmas.iter())
            .map(|(&p, &s)| {
                let z: f64 = rng.sample(StandardNormal);
                p + s * z
            })
            .collect();
        family.clip(&mut drawn);
        let rho = family.construct(&drawn).expect("clipped into domain");
        let report = correlation_report(&rho).expect("family state");
        [report.s, report.d_sym, report.a]
    });

    let entries = ["S", "D_sym", "A"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n as f64;
            let var = if n > 1 {
                samples
                    .iter()
                    .map(|s| (s[k] - mean) * (s[k] - mean))
                    .sum::<f64>()
                    / (n - 1) as f64
            } else {
                0.0
            };
            SpreadEntry {
                measure: (*name).to_string(),
                mean,
                stddev: var.sqrt(),
            }
        })
        .collect();

    Ok(SpreadReport {
        family: family.name().to_string(),
        params: names
            .iter()
            .map(|n| n.to_string())
            .zip(params.iter().copied())
            .collect(),
        sigmas: sigmas.to_vec(),
        n,
        seed,
        entries,
    })
}

fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV of sweep records with the fixed column contract: family, the
/// parameters, then S, D_left, D_right, D_sym, I_c, A.
pub fn records_csv(records: &[SweepRecord]) -> Result<String> {
    let Some(first) = records.first() else {
        return Ok(String::new());
    };
    let names: Vec<&str> = first.params.iter().map(|(n, _)| n.as_str()).collect();
    let mut out = String::from("family");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",S,D_left,D_right,D_sym,I_c,A\n");
    for rec in records {
        let rec_names: Vec<&str> = rec.params.iter().map(|(n, _)| n.as_str()).collect();
        if rec_names != names {
            return Err(Error::Invalid(
                "sweep records with mixed parameter sets cannot share a CSV".into(),
            ));
        }
        out.push_str(&rec.family);
        for (_, v) in &rec.params {
            out.push(',');
            out.push_str(&sig(*v));
        }
        let r = &rec.report;
        for v in [r.s, r.d_left, r.d_right, r.d_sym, r.i_c, r.a] {
            out.push(',');
            out.push_str(&sig(v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV of the entropy-binned discord boundary; absent bins keep empty
/// cells.
pub fn envelope_csv(bins: &[EnvelopeBin]) -> String {
    let mut out = String::from(
        "s_target,d_sym,s_achieved,pop_hh,pop_hv,pop_vh,pop_vv,coh_outer,coh_inner\n",
    );
    for bin in bins {
        out.push_str(&sig(bin.s_target));
        for v in [bin.d_sym, bin.s_achieved] {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&sig(v));
            }
        }
        for k in 0..6 {
            out.push(',');
            if let Some(xp) = &bin.params {
                let v = match k {
                    0..=3 => xp.populations[k],
                    4 => xp.coh_outer.re,
                    _ => xp.coh_inner.re,
                };
                out.push_str(&sig(v));
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of the discord-binned A band; absent bounds keep empty cells.
pub fn amid_bounds_csv(bins: &[AmidBin]) -> String {
    let mut out = String::from("d_target,a_lower,a_upper,eps,p\n");
    for bin in bins {
        out.push_str(&sig(bin.d_target));
        let (eps, p) = bin
            .upper_params
            .map_or((None, None), |(e, p)| (Some(e), Some(p)));
        for v in [bin.a_lower, bin.a_upper, eps, p] {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&sig(v));
            }
        }
        out.push('\n');
    }
    out
}
