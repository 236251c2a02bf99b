use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sumprod_core::energy::{self, RepHistogram};
use sumprod_core::families::{generate, FamilySpec};
use sumprod_core::incidence::{self, check_config};
use sumprod_core::setfile::{format_set, read_set_file};
use sumprod_core::stats;
use sumprod_core::{Error, FiniteRealSet, SetOp};
use sumprod_harness::quantities::compute_quantities;
use sumprod_harness::report::{to_value, Meta};
use sumprod_harness::sweep::{sweep, trend_csv, Family, SweepConfig};
use sumprod_harness::verify::{decompose, verify_suite, DecomposeMode};
use sumprod_harness::{Caps, ExponentTable, Format, Report};

#[derive(Parser)]
#[command(name = "sumprod", version, about = "Exact sum-product statistics, checks and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Input set file: one rational per line, `#` comments.
    #[arg(long, global = true)]
    set: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest σ grid `|A||B||C|`.
    #[arg(long, global = true, default_value_t = Caps::default().sigma)]
    cap_sigma: usize,
    /// Largest `max(|P|, |B|)` for solution counts.
    #[arg(long, global = true, default_value_t = Caps::default().sols)]
    cap_sols: usize,
    /// Largest number of point/line membership tests.
    #[arg(long, global = true, default_value_t = Caps::default().incidence)]
    cap_incidence: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Sum,
    Diff,
    Prod,
    Quot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Main,
    Partition,
    Fourth,
}

#[derive(Clone, Copy, ValueEnum)]
enum IncidenceArg {
    Elekes,
    Dstar,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a family member and write it as a set file.
    Gen {
        /// ap | gp | balog_wooley | random_subset
        #[arg(long, required_unless_present = "spec")]
        family: Option<String>,
        /// Number of elements.
        #[arg(long, required_unless_present = "spec")]
        n: Option<usize>,
        /// Full family spec as JSON, e.g. `{"kind":"ap","n":5,"start":"1","step":"3"}`.
        #[arg(long, conflicts_with_all = ["family", "n"])]
        spec: Option<String>,
    },
    /// Set sizes, energies, expander quantities and soft ratios.
    Stats,
    /// One energy moment of a pair of sets.
    Energy {
        #[arg(long, value_enum)]
        op: OpArg,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=4))]
        moment: u32,
        /// Second set (default: the `--set` file itself).
        #[arg(long)]
        with: Option<PathBuf>,
    },
    /// Decomposition certificate with postcondition checks.
    Decompose {
        #[arg(long, value_enum, default_value_t = ModeArg::Main)]
        mode: ModeArg,
    },
    /// Run every exact check on a set.
    Verify,
    /// Incidence count against the Szemerédi–Trotter bound.
    Incidence {
        #[arg(long, value_enum)]
        config: IncidenceArg,
        /// Random configurations: largest point count.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Random configurations: largest line count.
        #[arg(long, default_value_t = 200)]
        lines: usize,
        /// Popularity threshold for the covering configuration.
        #[arg(long, default_value_t = 1)]
        tau: u64,
    },
    /// Quantities, decompositions and soft ratios across sizes.
    Sweep {
        /// Comma-separated families.
        #[arg(long, value_delimiter = ',', default_value = "ap")]
        family: Vec<String>,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        sizes: Vec<usize>,
        /// Skip the decompositions.
        #[arg(long)]
        no_decompose: bool,
    },
}

enum Failure {
    Error(Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ResourceLimit { .. } => 3,
        Error::Invariant(_) => 1,
        _ => 2,
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Input { line: 0, message: format!("{}: {e}", path.display()) }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_set(common: &Common) -> Result<(FiniteRealSet, serde_json::Value), Error> {
    let path = common.set.as_ref().ok_or_else(|| Error::Config("this command needs --set FILE".into()))?;
    let set = read_set_file(path)?;
    let input = json!({ "set_file": path.display().to_string(), "n": set.len(), "set": set });
    Ok((set, input))
}

fn emit(common: &Common, report: &Report) -> Result<(), Failure> {
    let format = match common.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    write_output(common.out.as_deref(), &report.emit(format))?;
    let failed = report.failures().count();
    if failed > 0 {
        for f in report.failures() {
            eprintln!("exact check failed: {} ({} vs {})", f.name, f.lhs, f.rhs);
        }
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let caps = Caps { sigma: common.cap_sigma, sols: common.cap_sols, incidence: common.cap_incidence };
    let table = ExponentTable::standard();
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    let mut meta = Meta::new(Some(common.seed), caps);
    match &cli.command {
        Command::Gen { family, n, spec } => {
            let spec: FamilySpec = match spec {
                Some(text) => serde_json::from_str(text).map_err(|e| Error::Config(format!("--spec: {e}")))?,
                None => {
                    let family: Family = family.as_deref().unwrap_or_default().parse()?;
                    family.spec(n.unwrap_or_default(), common.seed)?
                }
            };
            let set = generate(&spec)?;
            write_output(common.out.as_deref(), &format_set(&set))?;
            Ok(())
        }
        Command::Stats => {
            let (a, input) = load_set(common)?;
            let f = meta.time("quantities", || compute_quantities(&a, &table))?;
            let mut report = Report::new(input, meta);
            report.quantities = f.quantities;
            report.soft_checks = f.soft_checks;
            emit(common, &report)
        }
        Command::Energy { op, moment, with } => {
            let (a, mut input) = load_set(common)?;
            let b = match with {
                Some(p) => read_set_file(p)?,
                None => a.clone(),
            };
            input["with"] = json!(b);
            let op = match op {
                OpArg::Sum => SetOp::Sum,
                OpArg::Diff => SetOp::Diff,
                OpArg::Prod => SetOp::Prod,
                OpArg::Quot => SetOp::Quot,
            };
            let hist = meta.time("histogram", || RepHistogram::build(&a, &b, op))?;
            let value = energy::energy(&a, &b, op, *moment)?.value;
            let mut report = Report::new(input, meta);
            report.quantities.insert("op".into(), json!(op.name()));
            report.quantities.insert("moment".into(), json!(moment));
            report.quantities.insert("energy".into(), json!(value.to_string()));
            report.quantities.insert("support".into(), json!(hist.support_len()));
            report.quantities.insert("max_representation".into(), json!(hist.max_count()));
            let levels: Vec<_> =
                hist.dyadic_levels().into_iter().map(|(t, s)| json!({ "t": t, "size": s.len() })).collect();
            report.quantities.insert("dyadic_levels".into(), json!(levels));
            report.push_check(sumprod_core::checks::ExactCheck::eq(
                "mass_identity",
                hist.total_mass(),
                a.len() * b.len(),
            ));
            emit(common, &report)
        }
        Command::Decompose { mode } => {
            let (a, input) = load_set(common)?;
            let mode = match mode {
                ModeArg::Main => DecomposeMode::Main,
                ModeArg::Partition => DecomposeMode::Partition,
                ModeArg::Fourth => DecomposeMode::Fourth,
            };
            let d = meta.time("decompose", || decompose(&a, mode, &caps, &table))?;
            let mut report = Report::new(input, meta);
            report.quantities.insert(mode.key().into(), d.summary);
            report.certificates.insert(mode.key().into(), d.certificate);
            d.checks.into_iter().for_each(|c| report.push_check(c));
            report.soft_checks = d.soft_checks;
            emit(common, &report)
        }
        Command::Verify => {
            let (a, input) = load_set(common)?;
            let mut report = verify_suite(&a, &caps, common.seed, &table)?;
            report.input = input;
            emit(common, &report)
        }
        Command::Incidence { config, points, lines, tau } => {
            let (cfg, input) = match config {
                IncidenceArg::Random => (
                    incidence::random_config(common.seed, *points, *lines),
                    json!({ "config": "random", "seed": common.seed, "max_points": points, "max_lines": lines }),
                ),
                IncidenceArg::Elekes => {
                    let (a, mut input) = load_set(common)?;
                    input["config"] = json!("elekes");
                    (incidence::elekes_config(&a)?, input)
                }
                IncidenceArg::Dstar => {
                    let (a, mut input) = load_set(common)?;
                    let w = stats::product_witness(&a, &a)?;
                    input["config"] = json!("dstar");
                    input["tau"] = json!(tau);
                    (incidence::dstar_config(&w.q, &w.r, &a, &a, w.t, *tau)?, input)
                }
            };
            let c = meta.time("count", || check_config(&cfg, Some(caps.incidence as u128)))?;
            let mut report = Report::new(input, meta);
            report.quantities.insert("incidences".into(), to_value(&c));
            report.push_check(sumprod_core::checks::ExactCheck::flag(
                "incidence.floor",
                c.floor_holds,
                format!("{} ≥ {}", c.count, c.floor),
            ));
            report.push_check(sumprod_core::checks::ExactCheck::flag(
                "incidence.szemeredi_trotter",
                c.bound_holds,
                format!("{} ≤ {}", c.count, c.bound.approx),
            ));
            emit(common, &report)
        }
        Command::Sweep { family, sizes, no_decompose } => {
            let families = family.iter().map(|f| f.parse()).collect::<Result<Vec<Family>, _>>()?;
            let mut cfg = SweepConfig::new(families, sizes.clone(), common.seed);
            cfg.decompose = !no_decompose;
            cfg.caps = caps;
            let report = sweep(&cfg, &table)?;
            match common.format {
                FormatArg::Json => emit(common, &report),
                FormatArg::Csv => {
                    write_output(common.out.as_deref(), &trend_csv(&report))?;
                    match report.failures().count() {
                        0 => Ok(()),
                        k => Err(Failure::Checks(k)),
                    }
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(k)) => {
            eprintln!("{k} exact check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
