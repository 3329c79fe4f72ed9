//! `qltf`: quasi-linear transfer function tables, frequency ranges,
//! Duffing simulation and fingerprint comparison from the command line.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 usage or malformed input,
//! 3 numerical blow-up, 4 comparison threshold exceeded.

mod config;
mod formats;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qltf::discrete::{dqltf, BinTransfer, DqltfOptions, DEFAULT_DQLTF_TAU};
use qltf::freq_range::{
    band_output_range, band_output_range_nonneg_with, brute_force_multitone_freqs_with, multitone_output_freqs_with,
    Band, NonnegVariant,
};
use qltf::multitone::{compare_fingerprints, qltf_with, QltfOptions, DEFAULT_CANCELLATION_TAU};
use qltf::simulator::{export_phase_portrait, simulate_duffing, Forcing, SimConfig};
use qltf::{Diagnostic, Error};

use config::{freq_tolerance, ModelArgs, ModelKind, RunConfig, SignalArgs};
use formats::{fmt_num, parse_f64_list, read_samples, round_sig, DqltfDoc, KernelDoc, QltfDoc};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_THRESHOLD: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "qltf", version, about = "Quasi-linear transfer function analysis of Volterra systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Order-n QLTF of a model under a multitone input.
    Qltf(QltfCmd),
    /// Output frequency ranges of an order-n subsystem.
    #[command(subcommand)]
    Range(RangeCmd),
    /// Integrate the Duffing oscillator under multitone forcing (RK4).
    Simulate(SimulateCmd),
    /// Discrete (DFT-bin) QLTF of a sampled record.
    Discrete(DiscreteCmd),
    /// Compare two QLTF tables frequency by frequency.
    Compare(CompareCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Significant digits in printed numbers.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    precision: u8,
}

impl OutputArgs {
    fn digits(&self) -> usize {
        self.precision as usize
    }

    fn open(&self) -> Result<Box<dyn Write>> {
        open_output(self.output.as_deref())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Debug, Args)]
struct QltfCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    signal: SignalArgs,
    /// Nonlinear order n >= 1.
    #[arg(long)]
    order: Option<usize>,
    /// Relative threshold on |U_n| below which a frequency leaves the domain.
    #[arg(long, default_value_t = DEFAULT_CANCELLATION_TAU)]
    tau: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum RangeCmd {
    /// Interval union reached by a band-limited input on [a, b].
    Band(BandCmd),
    /// Frequency set reached by a multitone input.
    Tones(TonesCmd),
}

#[derive(Debug, Args)]
struct BandCmd {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    order: usize,
    /// Only the non-negative part.
    #[arg(long)]
    nonneg: bool,
    /// With --nonneg, use the uncorrected index range k = 0..n-1.
    #[arg(long = "paper-literal-62", requires = "nonneg")]
    paper_literal: bool,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    precision: u8,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TonesCmd {
    /// Comma-separated positive tone frequencies (rad/s).
    #[arg(long)]
    freqs: String,
    #[arg(long)]
    order: usize,
    /// Print the signed set instead of its non-negative half.
    #[arg(long)]
    full: bool,
    /// Cross-check against brute-force enumeration of signed tuples.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    precision: u8,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    t1: f64,
    /// Step size (s).
    #[arg(long, default_value_t = 0.005)]
    h: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    y0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    v0: f64,
    /// Also write `y,v` pairs to this file.
    #[arg(long)]
    phase_portrait: Option<PathBuf>,
    /// Leading fraction of samples left out of the phase portrait.
    #[arg(long, default_value_t = 0.0)]
    skip: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct DiscreteCmd {
    /// Sample file: header `T=<interval>`, then one sample per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    order: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_DQLTF_TAU)]
    tau: f64,
    /// Frequencies (rad/s) expected to fall on bins; off-bin ones are warned about.
    #[arg(long)]
    analysis_freqs: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareCmd {
    baseline: PathBuf,
    probe: PathBuf,
    /// Exit with status 4 when some |mag_ratio - 1| exceeds this.
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warn: {msg}");
}

fn report_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        warn(d);
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        bail!("--tau must be a non-negative number, got {tau}");
    }
    Ok(())
}

fn run_qltf(cmd: &QltfCmd) -> Result<u8> {
    check_tau(cmd.tau)?;
    let cfg = RunConfig::resolve(&cmd.model, &cmd.signal, cmd.order)?;
    let order = cfg.order()?;
    let freq_tol = freq_tolerance()?;
    let Some(signal) = cfg.signal(freq_tol)? else {
        bail!("at least one tone is required (--tones or a run file)");
    };
    let h = cfg.transfer_function(order)?;
    let table = qltf_with(&signal, &h, &QltfOptions { tau: cmd.tau, freq_tol })?;
    report_diagnostics(&table.diagnostics);
    let doc = QltfDoc::from_table(&table, cmd.out.digits());
    let mut out = cmd.out.open()?;
    match cmd.out.format {
        Format::Csv => doc.write_csv(&mut out)?,
        Format::Json => doc.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(0)
}

fn run_band(cmd: &BandCmd) -> Result<u8> {
    let band = Band::new(cmd.a, cmd.b)?;
    let range = if cmd.nonneg {
        let variant = if cmd.paper_literal { NonnegVariant::PaperLiteral } else { NonnegVariant::Corrected };
        band_output_range_nonneg_with(&band, cmd.order, variant)?
    } else {
        band_output_range(&band, cmd.order)?
    };
    let digits = cmd.precision as usize;
    let mut out = open_output(cmd.output.as_deref())?;
    for (lo, hi) in range.as_pairs() {
        writeln!(out, "{},{}", fmt_num(lo, digits), fmt_num(hi, digits))?;
    }
    out.flush()?;
    Ok(0)
}

fn run_tones(cmd: &TonesCmd) -> Result<u8> {
    let w = parse_f64_list(&cmd.freqs)?;
    let tol = freq_tolerance()?;
    let nonneg = multitone_output_freqs_with(&w, cmd.order, tol)?;
    if cmd.oracle {
        let brute = brute_force_multitone_freqs_with(&w, cmd.order, tol)?;
        if !nonneg.approx_eq(&brute) {
            bail!("recursion and brute-force enumeration disagree ({} vs {} frequencies)", nonneg.len(), brute.len());
        }
        eprintln!("oracle: brute-force enumeration agrees ({} frequencies)", nonneg.len());
    }
    let set = if cmd.full { nonneg.mirrored() } else { nonneg };
    let digits = cmd.precision as usize;
    let mut out = open_output(cmd.output.as_deref())?;
    for &v in set.values() {
        writeln!(out, "{}", fmt_num(v, digits))?;
    }
    out.flush()?;
    Ok(0)
}

fn run_simulate(cmd: &SimulateCmd) -> Result<u8> {
    let cfg = RunConfig::resolve(&cmd.model, &cmd.signal, None)?;
    if cfg.model_kind() != ModelKind::Duffing {
        bail!("simulate supports only --model duffing");
    }
    let dp = cfg.duffing()?;
    let forcing = match cfg.signal(freq_tolerance()?)? {
        Some(sig) => Forcing::Multitone(sig),
        None => Forcing::None,
    };
    let sim = SimConfig::new(cmd.t0, cmd.t1, cmd.h, cmd.y0, cmd.v0)?;
    let traj = simulate_duffing(&dp, &forcing, &sim)?;
    let d = cmd.out.digits();
    let r = |x: f64| round_sig(x, d);

    let mut out = cmd.out.open()?;
    match cmd.out.format {
        Format::Csv => {
            writeln!(
                out,
                "# wn={} zeta={} eps2={} eps3={} t0={} t1={} h={} y0={} v0={}",
                dp.wn, dp.zeta, dp.eps2, dp.eps3, sim.t_start, sim.t_end, sim.step, sim.y0, sim.v0
            )?;
            writeln!(out, "t,y,v")?;
            for i in 0..traj.len() {
                writeln!(out, "{},{},{}", r(traj.t[i]), r(traj.y[i]), r(traj.v[i]))?;
            }
        }
        Format::Json => {
            let round = |xs: &[f64]| xs.iter().map(|&x| r(x)).collect::<Vec<_>>();
            let doc = serde_json::json!({
                "params": dp,
                "config": sim,
                "t": round(&traj.t),
                "y": round(&traj.y),
                "v": round(&traj.v),
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;

    if let Some(path) = &cmd.phase_portrait {
        let pairs = export_phase_portrait(&traj, cmd.skip)?;
        let mut pp = open_output(Some(path))?;
        writeln!(pp, "y,v")?;
        for (y, v) in pairs {
            writeln!(pp, "{},{}", r(y), r(v))?;
        }
        pp.flush()?;
    }
    Ok(0)
}

fn run_discrete(cmd: &DiscreteCmd) -> Result<u8> {
    check_tau(cmd.tau)?;
    let file = File::open(&cmd.input).with_context(|| format!("opening {}", cmd.input.display()))?;
    let u = read_samples(file).with_context(|| format!("reading {}", cmd.input.display()))?;
    let analysis_freqs = match &cmd.analysis_freqs {
        Some(s) => parse_f64_list(s)?,
        None => Vec::new(),
    };
    let opts = DqltfOptions { tau: cmd.tau, analysis_freqs };
    let cfg = RunConfig::resolve(&cmd.model, &SignalArgs::default(), Some(cmd.order))?;
    let table = match cfg.model_kind() {
        ModelKind::KernelFile => {
            let (kernel, t) = KernelDoc::load(cfg.kernel_path()?)?;
            if kernel.order() != cmd.order {
                bail!("kernel file has order {}, but --order is {}", kernel.order(), cmd.order);
            }
            if (t - u.sample_interval).abs() > 1e-12 * t.abs().max(u.sample_interval.abs()) {
                warn(format!(
                    "kernel sample_interval {t} differs from the input's T={}; using the input's",
                    u.sample_interval
                ));
            }
            dqltf(BinTransfer::Kernel(&kernel), &u, &opts)?
        }
        ModelKind::Duffing => {
            let h = cfg.duffing()?.gfrf(cmd.order)?;
            dqltf(BinTransfer::Evaluator(&h), &u, &opts)?
        }
    };
    report_diagnostics(&table.diagnostics);
    let doc = DqltfDoc::from_table(&table, cmd.out.digits());
    let mut out = cmd.out.open()?;
    match cmd.out.format {
        Format::Csv => doc.write_csv(&mut out)?,
        Format::Json => doc.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(0)
}

fn run_compare(cmd: &CompareCmd) -> Result<u8> {
    if let Some(t) = cmd.threshold {
        if !(t.is_finite() && t >= 0.0) {
            bail!("--threshold must be a non-negative number, got {t}");
        }
    }
    let baseline = QltfDoc::read_path(&cmd.baseline)?;
    let probe = QltfDoc::read_path(&cmd.probe)?;
    let tol = freq_tolerance()?;
    let scale = |d: &QltfDoc| d.rows.iter().map(|r| &r.omega).copied().fold(0.0f64, |m, w| m.max(w.abs()));
    // Printed frequencies carry only `precision` digits, so match on that scale too.
    let abs_tol = tol.absolute(scale(&baseline).max(scale(&probe))).max(1e-6 * scale(&baseline).max(1.0));
    let report = compare_fingerprints(&baseline.to_table(abs_tol), &probe.to_table(abs_tol))?;
    let unmatched = baseline.rows.len().max(probe.rows.len()) - report.rows.len();
    if unmatched > 0 {
        warn(format!("{unmatched} frequencies appear in only one table and were skipped"));
    }

    let d = cmd.out.digits();
    let mut out = cmd.out.open()?;
    match cmd.out.format {
        Format::Csv => {
            writeln!(out, "omega,mag_ratio,phase_delta_deg")?;
            for r in &report.rows {
                writeln!(out, "{},{},{}", fmt_num(r.omega, d), fmt_num(r.mag_ratio, d), fmt_num(r.phase_delta_deg, d))?;
            }
            writeln!(out, "# max_mag_deviation={}", fmt_num(report.max_mag_deviation, d))?;
            writeln!(out, "# max_phase_deviation_deg={}", fmt_num(report.max_phase_deviation_deg, d))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;

    if let Some(t) = cmd.threshold {
        if report.exceeds(t) {
            eprintln!("error: magnitude deviation {} exceeds threshold {t}", fmt_num(report.max_mag_deviation, d));
            return Ok(EXIT_THRESHOLD);
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::BlowUp { .. } => EXIT_BLOW_UP,
                Error::Pole { .. } | Error::GuardExceeded { .. } => EXIT_RUNTIME,
                _ => EXIT_USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<io::Error>() {
            return if e.kind() == io::ErrorKind::NotFound { EXIT_USAGE } else { EXIT_RUNTIME };
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Qltf(c) => run_qltf(c),
        Command::Range(RangeCmd::Band(c)) => run_band(c),
        Command::Range(RangeCmd::Tones(c)) => run_tones(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Discrete(c) => run_discrete(c),
        Command::Compare(c) => run_compare(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
