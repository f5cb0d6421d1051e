//! Command-line front end for the `atomdeconv` library.
//!
//! Five subcommands cover the full surface: `estimate-p` (atom mass from a
//! sample file, JSON out), `estimate-f` (density on a grid, CSV out),
//! `rates` (Monte-Carlo risk across sample sizes, CSV plus a JSON slope
//! sidecar), `lowerbound` (chi-square divergence table for the two-point
//! alternative pair, CSV out), and `validate-kernel` (kernel validity
//! constants, JSON out).
//!
//! Exit codes: 0 on success, 2 on a validation error, 3 on a numerical
//! failure (characteristic-function underflow, quadrature that fails its
//! refinement gate, and the like). Every failure prints exactly one
//! `error: ...` line on stderr.
//!
//! A `--config <file>` flag loads defaults from a text file with one
//! `key = value` pair per line (`#` starts a comment); flags given on the
//! command line override the file. Output files are written atomically
//! (temp file plus rename), and identical argv produces byte-identical
//! output. All floating-point output carries 17 significant digits.

#![forbid(unsafe_code)]
// Validation gates are written `!(x > 0.0)` on purpose: the negated
// comparison is false for NaN, so NaN inputs are rejected alongside
// out-of-range ones. Rewriting with `<=` would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand};

use atomdeconv::kernels::{validate_u_kernel, validate_w_kernel};
use atomdeconv::lowerbound::{divergence_csv, divergence_table, DeltaMode};
use atomdeconv::simulate::FitScale;
use atomdeconv::tuning::{epsilon_schedule, theoretical_rate};
use atomdeconv::{
    estimate_f, estimate_p_report, fit_rate, mc_risk_f, mc_risk_p, positive_part_density, Error,
    EstimationConfig, FourierKernel, KernelKind, McConfig, ModelSpec, NoiseModel, PEstimateReport,
    PVariant, Preset, Quantity, RateDescriptor, RateFit, RateScale, RateTarget, Result, Sample,
    SmoothnessClass, TargetDensity,
};

const SUBCOMMANDS: [&str; 5] = [
    "estimate-p",
    "estimate-f",
    "rates",
    "lowerbound",
    "validate-kernel",
];

#[derive(Parser, Debug)]
#[command(
    name = "atomdeconv",
    version,
    about = "Deconvolution of atomic distributions: estimate the atom mass and the continuous \
             density from noisy samples, run Monte-Carlo rate studies, and tabulate the \
             two-alternative divergence diagnostics",
    args_override_self = true
)]
struct Cli {
    /// Config file with one `key = value` per line; command-line flags
    /// override values from the file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker-thread cap for parallel runs (0 = one thread per core).
    /// Results never depend on this value.
    #[arg(long, global = true, env = "ATOMDECONV_THREADS", value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the atom mass p from a sample file; prints JSON with
    /// p_raw, p_clamped, and p_plus.
    #[command(args_override_self = true)]
    EstimateP(EstimatePArgs),
    /// Estimate the continuous density f on a grid; prints `x,density`
    /// CSV.
    #[command(args_override_self = true)]
    EstimateF(EstimateFArgs),
    /// Monte-Carlo risk across sample sizes under a tuning preset; writes
    /// a risk CSV and a JSON sidecar with the fitted log-log slope.
    #[command(args_override_self = true)]
    Rates(RatesArgs),
    /// Chi-square divergence table for the two-point alternative pair;
    /// prints CSV.
    #[command(args_override_self = true)]
    Lowerbound(LowerboundArgs),
    /// Check a kernel's validity constants; prints JSON.
    #[command(args_override_self = true)]
    ValidateKernel(ValidateKernelArgs),
}

#[derive(Args, Debug)]
struct EstimatePArgs {
    /// Sample file: one number per line, optional single header line "x".
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Noise model: gaussian:<sigma> or laplace:<b>.
    #[arg(long, value_name = "SPEC")]
    noise: String,
    /// Atom-side kernel: paper-u, sinc, or poly-w:<alpha>.
    #[arg(long, default_value = "paper-u", value_name = "ID")]
    kernel: String,
    /// Smoothness exponent of the target class.
    #[arg(long, default_value_t = 6.0)]
    alpha: f64,
    /// "auto" derives the bandwidth from the noise classification and
    /// alpha; a number fixes g directly.
    #[arg(long, default_value = "auto", value_name = "auto|G")]
    bandwidth: String,
    /// Truncation level for the clamped estimate (default: the schedule's
    /// level for the sample size).
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Bandwidth constant d entering ordinary smooth schedules.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Simpson subintervals for the frequency integral.
    #[arg(long, default_value_t = 4096, value_name = "N")]
    quad_nodes: usize,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateFArgs {
    /// Sample file: one number per line, optional single header line "x".
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Noise model: gaussian:<sigma> or laplace:<b>.
    #[arg(long, value_name = "SPEC")]
    noise: String,
    /// Atom-side kernel for the internal atom estimate.
    #[arg(long, default_value = "paper-u", value_name = "ID")]
    kernel_u: String,
    /// Density-side kernel (default: poly-w:<alpha>).
    #[arg(long, value_name = "ID")]
    kernel_w: Option<String>,
    /// Smoothness exponent of the target class.
    #[arg(long, default_value_t = 6.0)]
    alpha: f64,
    /// Only "auto" is accepted here; fix bandwidths explicitly with --g
    /// and --h instead.
    #[arg(long, default_value = "auto", value_name = "auto")]
    bandwidth: String,
    /// Atom-estimator bandwidth override.
    #[arg(long)]
    g: Option<f64>,
    /// Density-estimator bandwidth override.
    #[arg(long)]
    h: Option<f64>,
    /// Truncation level override for the internal atom estimate.
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Override the preset's sample-splitting choice.
    #[arg(long, value_name = "BOOL")]
    split: Option<bool>,
    /// Bandwidth constant d entering ordinary smooth schedules.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Simpson subintervals for the frequency integrals.
    #[arg(long, default_value_t = 4096, value_name = "N")]
    quad_nodes: usize,
    /// Evaluation grid lo:hi:step.
    #[arg(
        long,
        default_value = "-10:10:0.02",
        value_name = "LO:HI:STEP",
        allow_hyphen_values = true
    )]
    grid: String,
    /// Clip the estimate at zero.
    #[arg(long, default_value_t = false, action = ArgAction::Set, value_name = "BOOL")]
    positive: bool,
    /// With --positive true: rescale the clipped estimate to unit mass on
    /// the grid.
    #[arg(long, default_value_t = false, action = ArgAction::Set, value_name = "BOOL")]
    renormalize: bool,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// Tuning preset: thm1-ordinary, thm1-supersmooth, thm2-ordinary, or
    /// thm2-supersmooth. The preset decides whether the atom mass or the
    /// density risk is measured.
    #[arg(long, value_name = "NAME")]
    preset: String,
    /// Noise model: gaussian:<sigma> or laplace:<b>.
    #[arg(long, value_name = "SPEC")]
    noise: String,
    /// Continuous target density: std-normal or cauchy.
    #[arg(long, value_name = "NAME")]
    target: String,
    /// Atom mass of the simulated model.
    #[arg(long)]
    p: f64,
    /// Comma-separated sample sizes, strictly increasing.
    #[arg(long, value_name = "N1,N2,...")]
    ns: String,
    /// Monte-Carlo replicates per sample size.
    #[arg(long, default_value_t = 100, value_name = "R")]
    replicates: usize,
    /// Master seed; every (sample size, replicate) pair derives its own
    /// stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Atom-estimate variant entering the risk: raw, clamped, or positive
    /// (atom presets only; density runs always clamp internally).
    #[arg(long, default_value = "clamped", value_name = "NAME")]
    variant: String,
    /// Smoothness exponent of the target class.
    #[arg(long, default_value_t = 6.0)]
    alpha: f64,
    /// Bandwidth constant d entering ordinary smooth schedules.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Atom-side kernel.
    #[arg(long, default_value = "paper-u", value_name = "ID")]
    kernel_u: String,
    /// Density-side kernel (default: poly-w:<alpha>).
    #[arg(long, value_name = "ID")]
    kernel_w: Option<String>,
    /// Simpson subintervals for the frequency integrals.
    #[arg(long, default_value_t = 4096, value_name = "N")]
    quad_nodes: usize,
    /// Integration grid for density risks, lo:hi:step.
    #[arg(
        long,
        default_value = "-10:10:0.02",
        value_name = "LO:HI:STEP",
        allow_hyphen_values = true
    )]
    grid: String,
    /// Risk CSV path; the slope sidecar lands next to it with a .json
    /// extension.
    #[arg(long, default_value = "rates.csv", value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct LowerboundArgs {
    /// Poisson intensity of the null alternative.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Separation exponent of the alternative pair.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Perturbation-size schedule: log (supersmooth scaling) or poly
    /// (ordinary smooth scaling).
    #[arg(long, default_value = "log", value_name = "log|poly")]
    mode: String,
    /// Schedule constant c.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Noise decay exponent entering the poly schedule.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Comma-separated sample sizes.
    #[arg(long, value_name = "N1,N2,...")]
    ns: String,
    /// Noise model whose characteristic function enters the divergence.
    #[arg(long, default_value = "gaussian:1", value_name = "SPEC")]
    noise: String,
    /// Spatial half-width of the divergence quadrature.
    #[arg(long, default_value_t = 50.0)]
    cutoff: f64,
    /// Spatial grid spacing of the divergence quadrature.
    #[arg(long, default_value_t = 0.5)]
    grid_step: f64,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateKernelArgs {
    /// Kernel id: paper-u, sinc, or poly-w:<alpha>.
    #[arg(long, value_name = "ID")]
    kernel: String,
    /// Which role to validate the kernel for: u (atom side) or w (density
    /// side).
    #[arg(long, value_name = "u|w")]
    kind: String,
    /// Exponent the validity constants are certified against.
    #[arg(long, default_value_t = 6.0)]
    alpha: f64,
    /// Resolution of the certification grid.
    #[arg(long, default_value_t = 4096, value_name = "N")]
    grid_size: usize,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

/// Run the CLI on an argv-style vector (element 0 is the program name)
/// and return the process exit code: 0 success, 2 validation error, 3
/// numerical failure.
pub fn run(args: Vec<String>) -> i32 {
    let args = match merge_config_args(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", clap_error_line(&e));
            return 2;
        }
    };
    if let Some(threads) = cli.threads {
        // A global pool may already exist when `run` is called twice in
        // one process; results never depend on the cap, so ignore that.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::EstimateP(a) => cmd_estimate_p(a),
        Command::EstimateF(a) => cmd_estimate_f(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Lowerbound(a) => cmd_lowerbound(a),
        Command::ValidateKernel(a) => cmd_validate_kernel(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

// ---------------------------------------------------------------------
// Subcommand runners
// ---------------------------------------------------------------------

fn cmd_estimate_p(a: &EstimatePArgs) -> Result<()> {
    let noise = NoiseModel::parse(&a.noise)?;
    let kernel = FourierKernel::parse(&a.kernel, KernelKind::AtomKernelU)?;
    let sample = read_sample(&a.input)?;
    let (g, epsilon_default) = resolve_p_bandwidth(&a.bandwidth, sample.n(), a.alpha, &noise, a.d)?;
    let epsilon = a.epsilon.unwrap_or(epsilon_default);
    let report = estimate_p_report(&sample, g, epsilon, &kernel, &noise, a.quad_nodes)?;
    emit(a.output.as_deref(), &p_report_json(&report))
}

/// Resolve `--bandwidth` for the atom estimator: "auto" applies the
/// schedule matching the noise classification; a number fixes `g` and
/// falls back to the generic truncation level for the sample size.
fn resolve_p_bandwidth(
    spec: &str,
    n: usize,
    alpha: f64,
    noise: &NoiseModel,
    d: f64,
) -> Result<(f64, f64)> {
    let trimmed = spec.trim();
    if trimmed == "auto" {
        let class = noise.classification();
        let preset = match class {
            SmoothnessClass::OrdinarySmooth { .. } => Preset::Thm1Ordinary,
            SmoothnessClass::Supersmooth { .. } => Preset::Thm1Supersmooth,
        };
        let schedule = preset.schedule(n, alpha, &class, d)?;
        return Ok((schedule.g, schedule.epsilon));
    }
    let g: f64 = trimmed.parse().map_err(|_| {
        Error::Invalid(format!(
            "bandwidth must be \"auto\" or a number, got {spec:?}"
        ))
    })?;
    Ok((g, epsilon_schedule(n)?))
}

fn cmd_estimate_f(a: &EstimateFArgs) -> Result<()> {
    let noise = NoiseModel::parse(&a.noise)?;
    let u = FourierKernel::parse(&a.kernel_u, KernelKind::AtomKernelU)?;
    let w_spec = match &a.kernel_w {
        Some(s) => s.clone(),
        None => format!("poly-w:{}", a.alpha),
    };
    let w = FourierKernel::parse(&w_spec, KernelKind::DensityKernelW)?;
    let sample = read_sample(&a.input)?;
    let grid = parse_grid(&a.grid)?;

    if a.bandwidth.trim() != "auto" {
        return Err(Error::Invalid(format!(
            "estimate-f accepts only --bandwidth auto; fix bandwidths explicitly with --g and \
             --h (got {:?})",
            a.bandwidth
        )));
    }
    let (g, h, epsilon, split) = match (a.g, a.h, a.epsilon, a.split) {
        (Some(g), Some(h), Some(epsilon), Some(split)) => (g, h, epsilon, split),
        _ => {
            let class = noise.classification();
            let preset = match class {
                SmoothnessClass::OrdinarySmooth { .. } => Preset::Thm2Ordinary,
                SmoothnessClass::Supersmooth { .. } => Preset::Thm2Supersmooth,
            };
            let sched = preset.schedule(sample.n(), a.alpha, &class, a.d)?;
            (
                a.g.unwrap_or(sched.g),
                a.h.unwrap_or(sched.h),
                a.epsilon.unwrap_or(sched.epsilon),
                a.split.unwrap_or(sched.split),
            )
        }
    };
    let config = EstimationConfig {
        g,
        h,
        epsilon,
        split,
        quad_nodes: a.quad_nodes,
    };

    let mut estimate = estimate_f(&sample, &config, &w, &u, &noise, &grid)?;
    if a.positive {
        estimate = positive_part_density(&estimate, a.renormalize)?;
    } else if a.renormalize {
        return Err(Error::Invalid(
            "--renormalize true requires --positive true".into(),
        ));
    }

    let mut out = String::from("x,density\n");
    for (x, v) in estimate.grid().iter().zip(estimate.values()) {
        out.push_str(&format!("{},{}\n", ff(*x), ff(*v)));
    }
    emit(a.output.as_deref(), &out)
}

fn cmd_rates(a: &RatesArgs) -> Result<()> {
    let preset = Preset::parse(&a.preset)?;
    let noise = NoiseModel::parse(&a.noise)?;
    let class = noise.classification();
    let target = TargetDensity::parse(&a.target, a.alpha)?;
    let spec = ModelSpec::new(a.p, target, noise)?;
    let ns = parse_ns(&a.ns)?;
    let variant = parse_variant(&a.variant)?;
    let u = FourierKernel::parse(&a.kernel_u, KernelKind::AtomKernelU)?;
    let w_spec = match &a.kernel_w {
        Some(s) => s.clone(),
        None => format!("poly-w:{}", a.alpha),
    };
    let w = FourierKernel::parse(&w_spec, KernelKind::DensityKernelW)?;

    let sidecar_path = a.output.with_extension("json");
    if sidecar_path == a.output {
        return Err(Error::Invalid(format!(
            "rates output {:?} collides with its .json sidecar; use a different extension",
            a.output
        )));
    }

    let mc = McConfig {
        preset,
        alpha: a.alpha,
        d: a.d,
        quad_nodes: a.quad_nodes,
        u,
        w,
    };
    let quantity = preset.quantity();
    let report = match quantity {
        Quantity::AtomP => mc_risk_p(&spec, &ns, a.replicates, &mc, variant, a.seed)?,
        Quantity::DensityF => {
            let grid = parse_grid(&a.grid)?;
            mc_risk_f(&spec, &ns, a.replicates, &mc, &grid, a.seed)?
        }
    };

    let theory = theoretical_rate(&RateTarget {
        alpha: a.alpha,
        noise_class: class,
        quantity,
    })?;
    let fit = if report.rows.len() >= 3 {
        let scale = match theory.scale {
            RateScale::PowerOfN => FitScale::PolyInN,
            RateScale::PowerOfLogN => FitScale::LogInN,
        };
        Some(fit_rate(&report, scale)?)
    } else {
        None
    };

    atomic_write(&a.output, &report.to_csv())?;
    atomic_write(
        &sidecar_path,
        &rates_sidecar_json(preset, quantity, a.seed, variant, theory, fit.as_ref()),
    )
}

fn cmd_lowerbound(a: &LowerboundArgs) -> Result<()> {
    let noise = NoiseModel::parse(&a.noise)?;
    let mode = match a.mode.trim() {
        "log" => DeltaMode::SupersmoothLog,
        "poly" => DeltaMode::OrdinaryPoly,
        other => {
            return Err(Error::Invalid(format!(
                "unknown schedule mode {other:?}; expected log or poly"
            )))
        }
    };
    let ns = parse_ns(&a.ns)?;
    let rows = divergence_table(
        a.lambda,
        a.alpha,
        &ns,
        mode,
        a.c,
        a.beta,
        &|t| noise.cf(t),
        a.cutoff,
        a.grid_step,
    )?;
    emit(a.output.as_deref(), &divergence_csv(&rows))
}

fn cmd_validate_kernel(a: &ValidateKernelArgs) -> Result<()> {
    let json = match a.kind.trim() {
        "u" => {
            let kernel = FourierKernel::parse(&a.kernel, KernelKind::AtomKernelU)?;
            let v = validate_u_kernel(&kernel, a.alpha, a.grid_size)?;
            validity_json(a.kernel.trim(), "u", v.alpha, v.u_bound)
        }
        "w" => {
            let kernel = FourierKernel::parse(&a.kernel, KernelKind::DensityKernelW)?;
            let v = validate_w_kernel(&kernel, a.alpha, a.grid_size)?;
            validity_json(a.kernel.trim(), "w", v.alpha, v.w_bound)
        }
        other => {
            return Err(Error::Invalid(format!(
                "unknown kernel role {other:?}; expected u or w"
            )))
        }
    };
    emit(a.output.as_deref(), &json)
}

// ---------------------------------------------------------------------
// Config-file merging
// ---------------------------------------------------------------------

/// Pull every `--config <file>` / `--config=<file>` occurrence out of
/// argv (the last one wins) and splice the file's `key = value` pairs in
/// as `--key value` flags directly after the subcommand token. Explicit
/// flags come later in argv, so they override the file.
fn merge_config_args(args: Vec<String>) -> Result<Vec<String>> {
    let mut kept: Vec<String> = Vec::with_capacity(args.len());
    let mut config: Option<PathBuf> = None;
    let mut i = 0;
    while i < args.len() {
        let tok = &args[i];
        if i > 0 && tok == "--config" {
            if i + 1 >= args.len() {
                return Err(Error::Invalid("--config requires a file path".into()));
            }
            config = Some(PathBuf::from(&args[i + 1]));
            i += 2;
            continue;
        }
        if i > 0 {
            if let Some(rest) = tok.strip_prefix("--config=") {
                config = Some(PathBuf::from(rest));
                i += 1;
                continue;
            }
        }
        kept.push(tok.clone());
        i += 1;
    }
    let Some(path) = config else {
        return Ok(kept);
    };
    let flags = config_flags(&path)?;

    // Find the subcommand token: the first known subcommand name that is
    // not the value of the only value-taking flag legal before it
    // (--threads).
    let mut sub_idx = None;
    let mut j = 1;
    while j < kept.len() {
        if kept[j] == "--threads" {
            j += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&kept[j].as_str()) {
            sub_idx = Some(j);
            break;
        }
        j += 1;
    }
    // Without a subcommand, let clap produce its usage error.
    let Some(idx) = sub_idx else {
        return Ok(kept);
    };

    let mut merged = kept[..=idx].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&kept[idx + 1..]);
    Ok(merged)
}

/// Parse a config file into a flat `--key value` flag list, preserving
/// line order.
fn config_flags(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Invalid(format!(
                "{}:{}: expected `key = value`, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Invalid(format!(
                "{}:{}: expected `key = value`, got {line:?}",
                path.display(),
                lineno + 1
            )));
        }
        if key == "config" {
            return Err(Error::Invalid(format!(
                "{}:{}: config files cannot nest --config",
                path.display(),
                lineno + 1
            )));
        }
        flags.push(format!("--{key}"));
        flags.push(value.to_string());
    }
    Ok(flags)
}

// ---------------------------------------------------------------------
// Parsing and output helpers
// ---------------------------------------------------------------------

/// Read a sample file: one number per line, optional single header line
/// "x", blank lines ignored.
fn read_sample(path: &Path) -> Result<Sample> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line == "x") {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Invalid(format!(
                "{}:{}: cannot parse {line:?} as a number",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    Sample::new(values)
}

/// Parse `lo:hi:step` into the grid `lo, lo+step, ..., hi`; the span must
/// be a whole multiple of the step.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Invalid(format!(
            "grid must be lo:hi:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("cannot parse grid component {p:?}")))
        })
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !lo.is_finite() || !hi.is_finite() || !step.is_finite() || !(step > 0.0) || !(hi > lo) {
        return Err(Error::Invalid(format!(
            "grid needs finite lo < hi and step > 0, got {spec:?}"
        )));
    }
    let count = (hi - lo) / step;
    let m = count.round();
    if m < 1.0 || (count - m).abs() > 1e-9 * count.max(1.0) {
        return Err(Error::Invalid(format!(
            "grid span must be a whole multiple of step, got {spec:?}"
        )));
    }
    Ok((0..=m as usize).map(|k| lo + k as f64 * step).collect())
}

/// Parse a comma-separated sample-size list.
fn parse_ns(s: &str) -> Result<Vec<usize>> {
    let mut ns = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        ns.push(part.parse().map_err(|_| {
            Error::Invalid(format!("cannot parse sample size {part:?}"))
        })?);
    }
    if ns.is_empty() {
        return Err(Error::Invalid("at least one sample size is required".into()));
    }
    Ok(ns)
}

fn parse_variant(s: &str) -> Result<PVariant> {
    match s.trim() {
        "raw" => Ok(PVariant::Raw),
        "clamped" => Ok(PVariant::Clamped),
        "positive" => Ok(PVariant::Positive),
        other => Err(Error::Invalid(format!(
            "unknown variant {other:?}; expected raw, clamped, or positive"
        ))),
    }
}

fn variant_name(v: PVariant) -> &'static str {
    match v {
        PVariant::Raw => "raw",
        PVariant::Clamped => "clamped",
        PVariant::Positive => "positive",
    }
}

fn quantity_name(q: Quantity) -> &'static str {
    match q {
        Quantity::AtomP => "atom-p",
        Quantity::DensityF => "density-f",
    }
}

fn scale_name(s: RateScale) -> &'static str {
    match s {
        RateScale::PowerOfN => "power-of-n",
        RateScale::PowerOfLogN => "power-of-log-n",
    }
}

/// Float formatting used in every output: 17 significant digits, so
/// parsing the text back recovers the exact bits.
fn ff(x: f64) -> String {
    format!("{x:.16e}")
}

fn p_report_json(r: &PEstimateReport) -> String {
    format!(
        "{{\n  \"p_raw\": {},\n  \"p_clamped\": {},\n  \"p_plus\": {},\n  \"g\": {},\n  \
         \"epsilon\": {},\n  \"n\": {}\n}}\n",
        ff(r.p_raw),
        ff(r.p_clamped),
        ff(r.p_plus),
        ff(r.g),
        ff(r.epsilon),
        r.n
    )
}

fn validity_json(kernel: &str, kind: &str, alpha: f64, bound: f64) -> String {
    format!(
        "{{\n  \"kernel\": \"{}\",\n  \"kind\": \"{}\",\n  \"alpha\": {},\n  \"bound\": {}\n}}\n",
        kernel,
        kind,
        ff(alpha),
        ff(bound)
    )
}

fn rates_sidecar_json(
    preset: Preset,
    quantity: Quantity,
    seed: u64,
    variant: PVariant,
    theory: RateDescriptor,
    fit: Option<&RateFit>,
) -> String {
    let fit_json = match fit {
        Some(f) => format!(
            "{{\n    \"slope\": {},\n    \"intercept\": {},\n    \"r_squared\": {}\n  }}",
            ff(f.slope),
            ff(f.intercept),
            ff(f.r_squared)
        ),
        None => "null".to_string(),
    };
    format!(
        "{{\n  \"preset\": \"{}\",\n  \"quantity\": \"{}\",\n  \"seed\": {},\n  \"variant\": \
         \"{}\",\n  \"theory\": {{\n    \"scale\": \"{}\",\n    \"exponent\": {}\n  }},\n  \
         \"fit\": {}\n}}\n",
        preset.name(),
        quantity_name(quantity),
        seed,
        variant_name(variant),
        scale_name(theory.scale),
        ff(theory.exponent),
        fit_json
    )
}

/// Write to stdout, or atomically to a file.
fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(path) => atomic_write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Write via a temp file in the destination directory plus rename, so a
/// failed run never leaves a truncated output.
fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Invalid(format!("output path {path:?} has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name, std::process::id()));
    if let Err(e) = fs::write(&tmp, contents) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Collapse a clap diagnostic to its message lines (everything before the
/// usage section) on a single line.
fn clap_error_line(e: &clap::Error) -> String {
    let rendered = e.render().to_string();
    let mut parts: Vec<&str> = Vec::new();
    for line in rendered.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("Usage:") {
            break;
        }
        if trimmed.is_empty() {
            continue;
        }
        parts.push(trimmed);
    }
    if parts.is_empty() {
        "error: invalid arguments".into()
    } else {
        parts.join(" ")
    }
}
