//! Batch front end: state construction, measure evaluation, plane and
//! family sweeps, source simulation, and tomography, with JSON for
//! states/configs/reports and CSV for sweeps. Fixed seeds make every
//! invocation byte-identical, independent of `--jobs`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use qcorr::exec::run_with_jobs;
use qcorr::frontier::{
    amid_bounds_csv, amid_plane_bounds, envelope_csv, linspace, mncms_envelope,
    monte_carlo_spread, records_csv, scatter_random, sweep_family, BinAxis,
    EnvelopeConfig, Family,
};
use qcorr::measures::correlation_report;
use qcorr::source::{engineer, Recipe, SourceConfig};
use qcorr::states::{
    bell_phi, mems_ree, random_state, rho_down, rho_up, werner, xstate, Sign,
    XStateParams,
};
use qcorr::tomography::{mle_reconstruct, simulate_counts, TomographyDataset};
use qcorr::DensityMatrix;

#[derive(Parser)]
#[command(
    name = "qcorr",
    version,
    about = "Two-qubit correlation measures, plane boundaries, source simulation, and tomography"
)]
struct Cli {
    /// Worker threads for parallel commands (falls back to all cores).
    #[arg(long, global = true, env = "QCORR_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every correlation measure of a stored state.
    Measure {
        /// State JSON produced by family, source, or tomo-fit.
        #[arg(long)]
        state: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a named state and store it as JSON.
    Family(FamilyArgs),
    /// Sweep a family over parameter grids, or trace a plane boundary, as CSV.
    Sweep(SweepArgs),
    /// Evaluate measures on Hilbert-Schmidt-random states, as CSV.
    Scatter {
        /// Number of random states.
        #[arg(long)]
        n: usize,
        /// Base seed; state i derives from seed XOR i.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a source recipe and store the engineered polarization state.
    Source(SourceArgs),
    /// Simulate Poisson tomography counts for a stored state.
    TomoSim {
        #[arg(long)]
        state: PathBuf,
        /// Nominal counts per measurement setting.
        #[arg(long)]
        counts: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a state from tomography counts: linear inversion,
    /// physical projection, then likelihood maximization.
    TomoFit {
        /// Counts JSON produced by tomo-sim.
        #[arg(long)]
        data: PathBuf,
        /// Optional true state; adds a fidelity score to the output.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate Gaussian parameter uncertainty through the measures.
    Spread(SpreadArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// werner, bell-phi, mems-ree, rho-down, rho-up, xstate, or random.
    name: String,
    /// Identity admixture (werner) or crossed-branch weight (rho-up).
    #[arg(long)]
    eps: Option<f64>,
    /// Branch weight for bell-phi and rho-up.
    #[arg(long)]
    p: Option<f64>,
    /// Central population for mems-ree.
    #[arg(long)]
    a: Option<f64>,
    /// Corner coherence for mems-ree.
    #[arg(long)]
    r: Option<f64>,
    /// Mixing weight for rho-down.
    #[arg(long)]
    q: Option<f64>,
    /// Superposition sign for bell-phi: plus or minus.
    #[arg(long)]
    sign: Option<String>,
    /// Four comma-separated diagonal populations for xstate.
    #[arg(long)]
    pops: Option<String>,
    /// Outer coherence for xstate: re or re,im.
    #[arg(long, value_name = "RE[,IM]")]
    coh_outer: Option<String>,
    /// Inner coherence for xstate: re or re,im.
    #[arg(long, value_name = "RE[,IM]")]
    coh_inner: Option<String>,
    /// RNG seed for random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Family to sweep over --grid values.
    #[arg(long, conflicts_with = "plane")]
    family: Option<String>,
    /// Parameter grid name=lo:hi:count or name=value; one per parameter.
    #[arg(long)]
    grid: Vec<String>,
    /// Plane boundary instead of a family: mncms (max discord per
    /// entropy bin) or amid (A band per discord bin).
    #[arg(long)]
    plane: Option<String>,
    /// Bin count for --plane.
    #[arg(long, default_value_t = 40)]
    bins: usize,
    /// Random search candidates per bin for --plane.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// RNG seed; required with --plane.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SourceArgs {
    /// up, down, werner, or mems-ree.
    #[arg(long, conflicts_with = "config")]
    recipe: Option<String>,
    /// Pump leakage (up, werner) or central population (mems-ree).
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Branch weight of the pumped superposition.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Path-interferometer phase in radians.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Quartz dephasing strength C.
    #[arg(long = "quartz-c", default_value_t = 0.0)]
    quartz_c: f64,
    /// Full source configuration JSON; replaces the individual flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpreadArgs {
    /// Family whose parameters carry uncertainty.
    #[arg(long)]
    family: String,
    /// Central value name=value; one per family parameter.
    #[arg(long = "param")]
    params: Vec<String>,
    /// One-sigma width name=value; omitted parameters get 0.
    #[arg(long = "sigma")]
    sigmas: Vec<String>,
    /// Sample count.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Compute(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let jobs = cli.jobs;
    match cli.command {
        Command::Measure { state, out } => {
            let target = OutputTarget::prepare(out)?;
            target.finish(|| {
                let rho = read_state(&state)?;
                let report = run_with_jobs(jobs, || correlation_report(&rho))?;
                to_json(&report)
            })
        }
        Command::Family(args) => {
            let out = args.out.clone();
            let rho = build_family_state(&args)?;
            let target = OutputTarget::prepare(out)?;
            target.finish(|| to_json(&rho))
        }
        Command::Sweep(args) => {
            let plan = SweepPlan::parse(&args)?;
            let target = OutputTarget::prepare(args.out)?;
            target.finish(|| {
                run_with_jobs(jobs, || match &plan {
                    SweepPlan::Family { family, grids } => {
                        let records = sweep_family(*family, grids)?;
                        Ok(records_csv(&records)?)
                    }
                    SweepPlan::Mncms(config) => Ok(envelope_csv(&mncms_envelope(config)?)),
                    SweepPlan::Amid(config) => {
                        Ok(amid_bounds_csv(&amid_plane_bounds(config)?))
                    }
                })
            })
        }
        Command::Scatter { n, seed, out } => {
            let target = OutputTarget::prepare(out)?;
            target.finish(|| {
                let records = run_with_jobs(jobs, || scatter_random(n, seed));
                Ok(records_csv(&records)?)
            })
        }
        Command::Source(args) => {
            let config = source_config(&args)?;
            let target = OutputTarget::prepare(args.out)?;
            target.finish(|| {
                let rho = engineer(&config)?;
                to_json(&rho)
            })
        }
        Command::TomoSim {
            state,
            counts,
            seed,
            out,
        } => {
            let target = OutputTarget::prepare(out)?;
            target.finish(|| {
                let rho = read_state(&state)?;
                let data = simulate_counts(&rho, counts, seed)?;
                to_json(&data)
            })
        }
        Command::TomoFit {
            data,
            reference,
            out,
        } => {
            let target = OutputTarget::prepare(out)?;
            target.finish(|| {
                let text = fs::read_to_string(&data)
                    .with_context(|| format!("reading {}", data.display()))?;
                let dataset: TomographyDataset = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", data.display()))?;
                let reference = reference.as_deref().map(read_state).transpose()?;
                let fit = run_with_jobs(jobs, || {
                    mle_reconstruct(&dataset, reference.as_ref())
                })?;
                to_json(&fit)
            })
        }
        Command::Spread(args) => {
            let (family, params, sigmas) = spread_inputs(&args)?;
            let target = OutputTarget::prepare(args.out)?;
            target.finish(|| {
                let report = run_with_jobs(jobs, || {
                    monte_carlo_spread(family, &params, &sigmas, args.n, args.seed)
                })?;
                to_json(&report)
            })
        }
    }
}

fn read_state(path: &Path) -> anyhow::Result<DensityMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("state file {}", path.display()))
}

/// Rounds every float to 12 significant digits so that emitted numbers
/// are byte-stable and locale-independent.
fn round_floats(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().expect("checked f64");
                let rounded: f64 = format!("{f:.11e}").parse().expect("formatted float");
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *n = num;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(format!("{}\n", serde_json::to_string_pretty(&v)?))
}

/// Output routing with a writability probe taken before any compute, so
/// a bad path fails fast and a failed compute leaves no new file behind.
struct OutputTarget {
    path: Option<PathBuf>,
    existed: bool,
}

impl OutputTarget {
    fn prepare(path: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(p) = &path {
            let existed = p.exists();
            fs::OpenOptions::new()
                .write(true)
                .create(true)
                .open(p)
                .with_context(|| format!("output path {} is not writable", p.display()))?;
            return Ok(Self { path, existed });
        }
        Ok(Self {
            path: None,
            existed: false,
        })
    }

    fn finish(
        self,
        compute: impl FnOnce() -> anyhow::Result<String>,
    ) -> Result<(), Failure> {
        match compute() {
            Ok(content) => match &self.path {
                Some(p) => {
                    fs::write(p, content)
                        .with_context(|| format!("writing {}", p.display()))?;
                    Ok(())
                }
                None => {
                    print!("{content}");
                    Ok(())
                }
            },
            Err(e) => {
                if let Some(p) = &self.path {
                    if !self.existed {
                        let _ = fs::remove_file(p);
                    }
                }
                Err(Failure::Compute(e))
            }
        }
    }
}

fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("expected a number, got {t:?}")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(usage(format!("coherence {s:?} must be re or re,im"))),
    }
}

fn build_family_state(args: &FamilyArgs) -> Result<DensityMatrix, Failure> {
    let set_flags: Vec<&str> = [
        ("eps", args.eps.is_some()),
        ("p", args.p.is_some()),
        ("a", args.a.is_some()),
        ("r", args.r.is_some()),
        ("q", args.q.is_some()),
        ("sign", args.sign.is_some()),
        ("pops", args.pops.is_some()),
        ("coh-outer", args.coh_outer.is_some()),
        ("coh-inner", args.coh_inner.is_some()),
        ("seed", args.seed.is_some()),
    ]
    .iter()
    .filter(|(_, set)| *set)
    .map(|(name, _)| *name)
    .collect();

    let (required, optional): (&[&str], &[&str]) = match args.name.as_str() {
        "werner" => (&["eps"], &[]),
        "bell-phi" | "bell_phi" => (&["p"], &["sign"]),
        "mems-ree" | "mems_ree" => (&["a", "r"], &[]),
        "rho-down" | "rho_down" => (&["q"], &[]),
        "rho-up" | "rho_up" => (&["eps", "p"], &[]),
        "xstate" => (&["pops"], &["coh-outer", "coh-inner"]),
        "random" => (&["seed"], &[]),
        other => {
            return Err(usage(format!(
                "unknown family {other:?}; expected werner, bell-phi, mems-ree, rho-down, rho-up, xstate, or random"
            )))
        }
    };
    for flag in &set_flags {
        if !required.contains(flag) && !optional.contains(flag) {
            return Err(usage(format!(
                "flag --{flag} does not apply to family {}",
                args.name
            )));
        }
    }
    for flag in required {
        if !set_flags.contains(flag) {
            return Err(usage(format!(
                "family {} requires --{flag}",
                args.name
            )));
        }
    }

    let rho = match args.name.as_str() {
        "werner" => werner(args.eps.expect("checked"))?,
        "bell-phi" | "bell_phi" => {
            let sign = match args.sign.as_deref() {
                None | Some("plus") => Sign::Plus,
                Some("minus") => Sign::Minus,
                Some(other) => {
                    return Err(usage(format!("sign {other:?} must be plus or minus")))
                }
            };
            bell_phi(args.p.expect("checked"), sign)?
        }
        "mems-ree" | "mems_ree" => {
            mems_ree(args.a.expect("checked"), args.r.expect("checked"))?
        }
        "rho-down" | "rho_down" => rho_down(args.q.expect("checked"))?,
        "rho-up" | "rho_up" => rho_up(args.eps.expect("checked"), args.p.expect("checked"))?,
        "xstate" => {
            let pops_text = args.pops.as_deref().expect("checked");
            let pops: Vec<f64> = pops_text
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| usage(format!("pops {pops_text:?} must be four numbers")))?;
            let pops: [f64; 4] = pops
                .try_into()
                .map_err(|_| usage("xstate needs exactly four populations"))?;
            let coh_outer = args
                .coh_outer
                .as_deref()
                .map(parse_complex)
                .transpose()?
                .unwrap_or(Complex64::ZERO);
            let coh_inner = args
                .coh_inner
                .as_deref()
                .map(parse_complex)
                .transpose()?
                .unwrap_or(Complex64::ZERO);
            xstate(&XStateParams {
                populations: pops,
                coh_outer,
                coh_inner,
            })?
        }
        "random" => random_state(args.seed.expect("checked")),
        _ => unreachable!("family name validated above"),
    };
    Ok(rho)
}

enum SweepPlan {
    Family {
        family: Family,
        grids: Vec<(String, Vec<f64>)>,
    },
    Mncms(EnvelopeConfig),
    Amid(EnvelopeConfig),
}

impl SweepPlan {
    fn parse(args: &SweepArgs) -> Result<Self, Failure> {
        match (&args.family, &args.plane) {
            (Some(name), None) => {
                let family = Family::from_str(name).map_err(|e| usage(e.to_string()))?;
                if args.grid.is_empty() {
                    return Err(usage("family sweeps need --grid name=lo:hi:count"));
                }
                if args.seed.is_some() {
                    return Err(usage("--seed only applies to --plane sweeps"));
                }
                let grids: Vec<(String, Vec<f64>)> = args
                    .grid
                    .iter()
                    .map(|g| parse_grid(g))
                    .collect::<Result<_, _>>()?;
                let given: Vec<&str> = grids.iter().map(|(n, _)| n.as_str()).collect();
                if given != family.param_names() {
                    return Err(usage(format!(
                        "family {} expects grids for {:?} in order, got {given:?}",
                        family.name(),
                        family.param_names()
                    )));
                }
                Ok(SweepPlan::Family { family, grids })
            }
            (None, Some(plane)) => {
                if !args.grid.is_empty() {
                    return Err(usage("--grid only applies to --family sweeps"));
                }
                let seed = args
                    .seed
                    .ok_or_else(|| usage("--plane sweeps need an explicit --seed"))?;
                let (axis, build): (BinAxis, fn(EnvelopeConfig) -> SweepPlan) =
                    match plane.as_str() {
                        "mncms" => (BinAxis::Entropy, SweepPlan::Mncms),
                        "amid" => (BinAxis::Discord, SweepPlan::Amid),
                        other => {
                            return Err(usage(format!(
                                "unknown plane {other:?}; expected mncms or amid"
                            )))
                        }
                    };
                Ok(build(EnvelopeConfig {
                    bin_axis: axis,
                    bin_count: args.bins,
                    samples_per_bin: args.samples,
                    seed,
                }))
            }
            _ => Err(usage("sweep needs exactly one of --family or --plane")),
        }
    }
}

fn parse_grid(spec: &str) -> Result<(String, Vec<f64>), Failure> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("grid {spec:?} must be name=lo:hi:count or name=value")))?;
    let parts: Vec<&str> = rest.split(':').collect();
    let number = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| usage(format!("grid {spec:?}: {t:?} is not a number")))
    };
    let values = match parts.as_slice() {
        [single] => vec![number(single)?],
        [lo, hi, count] => {
            let count: usize = count
                .parse()
                .map_err(|_| usage(format!("grid {spec:?}: count {count:?} must be an integer")))?;
            if count == 0 {
                return Err(usage(format!("grid {spec:?}: count must be positive")));
            }
            linspace(number(lo)?, number(hi)?, count)
        }
        _ => {
            return Err(usage(format!(
                "grid {spec:?} must be name=lo:hi:count or name=value"
            )))
        }
    };
    Ok((name.to_string(), values))
}

fn source_config(args: &SourceArgs) -> Result<SourceConfig, Failure> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let config = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        return Ok(config);
    }
    let recipe_name = args
        .recipe
        .as_deref()
        .ok_or_else(|| usage("source needs --recipe or --config"))?;
    let recipe = Recipe::from_str(recipe_name).map_err(|e| usage(e.to_string()))?;
    Ok(SourceConfig {
        eps: args.eps,
        p: args.p,
        path_phase_gamma: args.gamma,
        quartz_c: args.quartz_c,
        recipe,
    })
}

fn spread_inputs(args: &SpreadArgs) -> Result<(Family, Vec<f64>, Vec<f64>), Failure> {
    let family = Family::from_str(&args.family).map_err(|e| usage(e.to_string()))?;
    let names = family.param_names();
    let parse_pairs = |specs: &[String], what: &str| -> Result<Vec<(String, f64)>, Failure> {
        specs
            .iter()
            .map(|s| {
                let (name, value) = s
                    .split_once('=')
                    .ok_or_else(|| usage(format!("{what} {s:?} must be name=value")))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| usage(format!("{what} {s:?}: not a number")))?;
                if !names.contains(&name) {
                    return Err(usage(format!(
                        "family {} has no parameter {name:?} (expected {names:?})",
                        family.name()
                    )));
                }
                Ok((name.to_string(), value))
            })
            .collect()
    };
    let params = parse_pairs(&args.params, "param")?;
    let sigmas = parse_pairs(&args.sigmas, "sigma")?;

    let mut centered = Vec::with_capacity(names.len());
    for name in names {
        let matches: Vec<f64> = params
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .collect();
        match matches.as_slice() {
            [v] => centered.push(*v),
            [] => return Err(usage(format!("missing --param {name}=..."))),
            _ => return Err(usage(format!("parameter {name:?} given more than once"))),
        }
    }
    let mut widths = vec![0.0; names.len()];
    for (name, v) in &sigmas {
        let k = names.iter().position(|n| n == name).expect("validated");
        widths[k] = *v;
    }
    Ok((family, centered, widths))
}
