mod config;
mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use attocell_core::interference::closed_form_moments;
use attocell_core::link;
use attocell_core::mcsim::{self, McConfig, DEFAULT_ORACLE_RADIUS};
use attocell_core::sweep::{self, run_sweep};
use attocell_core::{
    LatticeSpec, MomentMethod, ReceiverPos, SweepMethod, SystemParams, Truncation,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{OutputFormat, PlotFormat, RunConfig, SystemSection};

/// Interference, error-probability and goodput planning for TDMA LiFi attocells.
#[derive(Debug, Parser)]
#[command(name = "attocell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Link metrics at one receiver position
    Metrics(MetricsArgs),
    /// Evaluate a grid and write a CSV (and optional plots)
    Sweep(SweepArgs),
    /// Find the reuse factor with the largest goodput
    Optimize(OptimizeArgs),
    /// Check the closed forms and the Monte Carlo oracle
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    ClosedForm,
    ExactSum,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepMethodArg {
    ClosedForm,
    ExactSum,
    Both,
}

impl From<SweepMethodArg> for SweepMethod {
    fn from(m: SweepMethodArg) -> Self {
        match m {
            SweepMethodArg::ClosedForm => SweepMethod::ClosedForm,
            SweepMethodArg::ExactSum => SweepMethod::ExactSum,
            SweepMethodArg::Both => SweepMethod::Both,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// TOML manifest with [system], [sweep] and [output] sections
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    system: SystemSection,
}

#[derive(Debug, Args)]
struct Evaluation {
    /// How the interference moments are computed
    #[arg(long, value_enum, default_value = "closed-form")]
    method: MethodArg,
    /// Fourier series order: `auto` or `u,v`
    #[arg(long, default_value = "auto", value_parser = parse_order)]
    order: Truncation,
    /// Lattice radius of the exact sum
    #[arg(long, default_value_t = attocell_core::lattice::DEFAULT_EXACT_RADIUS,
          value_parser = clap::value_parser!(u32).range(1..))]
    exact_radius: u32,
}

impl Evaluation {
    fn method(&self) -> MomentMethod {
        match self.method {
            MethodArg::ClosedForm => MomentMethod::ClosedForm(self.order),
            MethodArg::ExactSum => MomentMethod::ExactSum {
                radius: self.exact_radius,
            },
        }
    }
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Height-to-spacing ratio h/a (spacing is 1 m)
    #[arg(long, default_value_t = 3.0)]
    h_over_a: f64,
    /// TDMA reuse factor
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Receiver x offset from the tagged LED, m
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zx: f64,
    /// Receiver y offset from the tagged LED, m
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zy: f64,
    #[command(flatten)]
    eval: Evaluation,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 3.0)]
    h_over_a: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    k_min: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    k_max: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zy: f64,
    #[command(flatten)]
    eval: Evaluation,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Inclusive K range such as `1..15`
    #[arg(long)]
    k_range: Option<String>,
    /// Comma-separated h/a ratios
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Receiver position `x,y` in metres; repeat for several
    #[arg(long = "pos", value_parser = parse_pos, allow_hyphen_values = true)]
    positions: Vec<ReceiverPos>,
    #[arg(long, value_enum)]
    method: Option<SweepMethodArg>,
    /// Fourier series order: `auto` or `u,v`
    #[arg(long)]
    order: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    exact_radius: Option<u32>,
    /// Add Monte Carlo columns
    #[arg(long)]
    with_mc: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n_slots: Option<u64>,
    #[arg(long)]
    oracle_radius: Option<u32>,
    /// Output CSV path
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, value_enum)]
    plot_format: Option<PlotFormat>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Monte Carlo slots per configuration
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    n_slots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

fn parse_order(s: &str) -> Result<Truncation, String> {
    config::parse_order(s).map_err(|e| format!("{e:#}"))
}

fn parse_pos(s: &str) -> Result<ReceiverPos, String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(ReceiverPos::new(x, y))
}

/// Failure classes with their exit codes.
enum Failure {
    /// Bad flags, config or environment: exit 2.
    Usage(anyhow::Error),
    /// Domain or I/O failure: exit 1.
    Runtime(anyhow::Error),
}

impl From<attocell_core::Error> for Failure {
    fn from(e: attocell_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Metrics(a) => cmd_metrics(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Validate(a) => cmd_validate(a),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ATTOCELL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(anyhow!("ATTOCELL_THREADS=`{raw}` is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    Ok(())
}

fn load(common: &Common) -> Result<(RunConfig, SystemParams), Failure> {
    let file = match &common.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    let sp = file.system.merge(&common.system).params();
    sp.validate()?;
    Ok((file, sp))
}

fn geometry(
    ratio: f64,
    k: u32,
    sp: &SystemParams,
) -> Result<(LatticeSpec, attocell_core::DerivedParams), Failure> {
    let spec = LatticeSpec::new(1.0, ratio, k)?;
    let derived = sp.derive(ratio)?;
    Ok((spec, derived))
}

fn cmd_metrics(a: MetricsArgs) -> Outcome {
    let (_, sp) = load(&a.common)?;
    let (spec, derived) = geometry(a.h_over_a, a.k, &sp)?;
    let pos = ReceiverPos::new(a.zx, a.zy);
    let m = link::metrics(pos, &spec, &sp, &derived, a.eval.method())?;
    println!(
        "{:>8} {:>4} {:>10} {:>10} {:>12} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}",
        "h_over_a",
        "K",
        "z_x",
        "z_y",
        "method",
        "mu",
        "sigma1_sq",
        "p_e",
        "gamma",
        "r_spectral",
        "r_reported",
        "goodput",
        "d"
    );
    println!(
        "{:>8} {:>4} {:>10} {:>10} {:>12} {:>18.10e} {:>18.10e} {:>18.10e} {:>18.10e} {:>18.10e} {:>18.10e} {:>18.10e} {:>18.10e}",
        a.h_over_a,
        a.k,
        a.zx,
        a.zy,
        m.moments.method.tag(),
        m.moments.mean,
        m.moments.variance,
        m.p_e,
        m.gamma,
        m.r_spectral,
        m.r_reported,
        m.goodput,
        m.d
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(a: OptimizeArgs) -> Outcome {
    let (_, sp) = load(&a.common)?;
    let (spec, derived) = geometry(a.h_over_a, 1, &sp)?;
    let pos = ReceiverPos::new(a.zx, a.zy);
    let r = link::optimize_k(pos, &spec, &sp, &derived, a.eval.method(), a.k_min, a.k_max)?;
    println!("h_over_a = {}", a.h_over_a);
    println!("K* = {}", r.k_star);
    println!("G* = {:.10e} bit/s", r.g_star);
    println!(
        "{:>4} {:>18} {:>18} {:>18}",
        "K", "p_e", "r_reported", "goodput"
    );
    for (k, m) in &r.trace {
        println!(
            "{k:>4} {:>18.10e} {:>18.10e} {:>18.10e}",
            m.p_e, m.r_reported, m.goodput
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let (file, sp) = load(&a.common)?;
    let mut section = file.sweep;
    if let Some(r) = a.k_range {
        section.k_values = None;
        section.k_range = Some(r);
    }
    if a.ratios.is_some() {
        section.ha_ratios = a.ratios;
    }
    if !a.positions.is_empty() {
        section.positions = Some(a.positions.iter().map(|p| [p.x, p.y]).collect());
    }
    if let Some(m) = a.method {
        section.method = Some(m.into());
    }
    if a.order.is_some() {
        section.order = a.order;
    }
    if a.exact_radius.is_some() {
        section.exact_radius = a.exact_radius;
    }
    if a.with_mc {
        section.with_mc = Some(true);
    }
    section.seed = a.seed.or(section.seed);
    section.n_slots = a.n_slots.or(section.n_slots);
    section.oracle_radius = a.oracle_radius.or(section.oracle_radius);
    let spec = section.spec().map_err(Failure::Usage)?;
    spec.validate().map_err(|e| Failure::Usage(e.into()))?;

    let output = a
        .output
        .or(file.output.path)
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let format = a.format.or(file.output.format).unwrap_or_default();
    let plot_format = a
        .plot_format
        .or(file.output.plot_format)
        .unwrap_or_default();

    let result = run_sweep(&spec, &sp)?;
    let mut csv = Vec::new();
    sweep::write_csv(&mut csv, &spec, &sp, &result).map_err(|e| Failure::Runtime(e.into()))?;
    write_atomic(&output, &csv).map_err(Failure::Runtime)?;
    eprintln!("wrote {} rows to {}", result.rows.len(), output.display());

    if format == OutputFormat::CsvPlot {
        for (path, body) in plot::render_all(&output, &spec, &result, plot_format) {
            write_atomic(&path, body.as_bytes()).map_err(Failure::Runtime)?;
            eprintln!("wrote {}", path.display());
        }
    }
    let failed = result.failures().count();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} rows failed; see the error column",
            result.rows.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(bytes)
        .and_then(|()| tmp.flush())
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

struct Check {
    name: String,
    verdict: Verdict,
    detail: String,
}

fn check(name: String, ok: bool, detail: String) -> Check {
    Check {
        name,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn cmd_validate(a: ValidateArgs) -> Outcome {
    let (_, sp) = load(&a.common)?;
    let mut checks = Vec::new();
    let radius = attocell_core::lattice::DEFAULT_EXACT_RADIUS;

    for ratio in [3.0, 5.0, 7.0] {
        for k in [1, 4, 8, 15] {
            let (spec, derived) = geometry(ratio, k, &sp)?;
            let a_k = spec.active_spacing();
            for (fx, fy) in [(0.0, 0.0), (0.25, 0.25)] {
                let pos = ReceiverPos::new(fx * a_k, fy * a_k);
                let cf = closed_form_moments(pos, &spec, &derived, Truncation::Adaptive)?;
                let ex = MomentMethod::ExactSum { radius }.evaluate(pos, &spec, &derived)?;
                // the exact sum omits terms beyond `radius`; bound them by the integral of r^-β
                let beta = derived.decay_exponent;
                let tail = 1.2 * 2.0 * std::f64::consts::PI * derived.mean_prefactor
                    / ((beta - 2.0) * a_k.powf(beta) * f64::from(radius).powf(beta - 2.0))
                    / ex.mean;
                let em = rel(cf.mean, ex.mean);
                let ev = rel(cf.variance, ex.variance);
                checks.push(check(
                    format!("moments h/a={ratio} K={k} z=({:.2},{:.2})", pos.x, pos.y),
                    em <= 1e-5 + tail && ev <= 1e-5,
                    format!("mean {em:.1e} (tail {tail:.1e}), variance {ev:.1e}"),
                ));
            }
        }
    }

    let inconclusive = 4.0 * (2.0 / a.n_slots as f64).sqrt() > 0.05;
    let mc = McConfig {
        n_slots: a.n_slots,
        seed: a.seed,
        oracle_radius: DEFAULT_ORACLE_RADIUS,
        ..McConfig::default()
    };
    for (ratio, k) in [(3.0, 5), (5.0, 8), (7.0, 9)] {
        let (spec, derived) = geometry(ratio, k, &sp)?;
        let pos = ReceiverPos::ORIGIN;
        let r = mcsim::simulate(pos, &spec, &sp, &derived, &mc)?;
        let truncated = MomentMethod::ExactSum {
            radius: mc.oracle_radius.max(1),
        }
        .evaluate(pos, &spec, &derived)?;
        let m = link::metrics(pos, &spec, &sp, &derived, MomentMethod::default())?;
        let z = (r.emp_mean - truncated.mean) / r.stderr_mean;
        let ev = rel(r.emp_var, truncated.variance);
        let ok = z.abs() <= 4.0 && ev <= 0.05 && r.emp_ser <= m.p_e + 4.0 * r.stderr_ser;
        let detail = format!(
            "mean {z:+.2} stderr, variance {:.2}%, SER {:.4} vs bound {:.4}",
            100.0 * ev,
            r.emp_ser,
            m.p_e
        );
        let name = format!("monte carlo h/a={ratio} K={k}");
        checks.push(if inconclusive {
            Check {
                name,
                verdict: Verdict::Inconclusive,
                detail: format!(
                    "{detail} ({} slots cannot resolve the 5% variance tolerance)",
                    a.n_slots
                ),
            }
        } else {
            check(name, ok, detail)
        });
    }

    let mut failed = Vec::new();
    for c in &checks {
        let tag = match c.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "SKIP",
        };
        println!("{tag}  {:<40} {}", c.name, c.detail);
        match c.verdict {
            Verdict::Fail => failed.push(c.name.clone()),
            Verdict::Inconclusive => eprintln!("warning: {} inconclusive", c.name),
            Verdict::Pass => {}
        }
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Failure::Runtime(anyhow!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
