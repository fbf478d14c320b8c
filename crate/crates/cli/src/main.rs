use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use unreal_core::approx::horn_export;
use unreal_core::cegis::{equations, initial_example, CheckReport};
use unreal_core::frontend::specialize;
use unreal_core::{
    check_unrealizable, parse_examples, parse_problem, run_cegis, Backend, CegisConfig, CheckResult, Error,
    ExampleSet, IlpSolver, PredicateDomain, Problem, Verdict, VerdictKind,
};

const EXIT_UNREALIZABLE: u8 = 0;
const EXIT_REALIZABLE: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "unreal", version, about = "Prove SyGuS problems unrealizable from examples")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full CEGIS with random examples.
    Check {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
        #[command(flatten)]
        cegis: CegisOpts,
    },
    /// One unrealizability check on the given examples.
    CheckExamples {
        file: PathBuf,
        #[arg(long)]
        examples: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Write the Horn-clause encoding for the given examples.
    ExportHorn {
        file: PathBuf,
        #[arg(long)]
        examples: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the grammar flow equations for the given examples.
    DumpEquations {
        file: PathBuf,
        #[arg(long)]
        examples: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sl,
    Predabs,
    HornExport,
}

#[derive(Args)]
struct CommonOpts {
    #[arg(long, value_enum, default_value = "sl")]
    mode: Mode,
    /// Predicate set for predabs: parity, sign or mod:K.
    #[arg(long, default_value = "parity")]
    predicates: String,
    /// Print the verdict as JSON.
    #[arg(long)]
    json: bool,
    /// Write ILP queries as SMT-LIB2 files into this directory.
    #[arg(long)]
    export_smt: Option<PathBuf>,
    /// Wall-clock budget of one unrealizability check.
    #[arg(long, default_value_t = 60.0)]
    budget_seconds: f64,
    /// Output file for --mode horn-export.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CegisOpts {
    /// Random seed; UNREAL_SEED is used when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Interleave synthesis and checking deterministically (default).
    #[arg(long, conflicts_with = "parallel")]
    sequential: bool,
    /// Race synthesis and checking on threads.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value_t = 20)]
    max_term_size: usize,
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
}

fn load(path: &Path) -> Result<Problem, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_problem(&text)?)
}

fn examples(p: &Problem, text: &str) -> Result<ExampleSet, Error> {
    parse_examples(text, &p.variables).map_err(Error::Usage)
}

fn backend(opts: &CommonOpts) -> Result<Backend, Error> {
    Ok(match opts.mode {
        Mode::Predabs => Backend::PredAbs(PredicateDomain::parse(&opts.predicates).map_err(Error::Usage)?),
        _ => Backend::SemiLinear,
    })
}

fn exit_code(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::Unrealizable => EXIT_UNREALIZABLE,
        VerdictKind::Realizable => EXIT_REALIZABLE,
        VerdictKind::Unknown => EXIT_UNKNOWN,
    }
}

fn print_verdict(v: &Verdict, json: bool) {
    for line in &v.trace {
        log::info!("{line}");
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&v.to_json()).expect("serializable"));
        return;
    }
    let kind = match v.kind {
        VerdictKind::Unrealizable => "Unrealizable",
        VerdictKind::Realizable => "Realizable",
        VerdictKind::Unknown => "Unknown",
    };
    println!("{kind}");
    if let Some(w) = &v.witness {
        println!("witness: {} ({})", w.to_sexpr(), v.validation.unwrap_or("unverified"));
    }
    if let Some(r) = &v.reason {
        println!("reason: {r}");
    }
    let ex: Vec<String> = v
        .examples
        .iter()
        .map(|i| {
            let kv: Vec<String> = v.variables.iter().zip(i).map(|(x, n)| format!("{x}={n}")).collect();
            kv.join(",")
        })
        .collect();
    println!("examples: {}", ex.join(";"));
    println!("iterations: {}", v.iterations);
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn horn(p: &Problem, e: &ExampleSet, out: Option<&Path>) -> Result<u8, Error> {
    let ps = specialize(&p.spec, e);
    write_out(out, &horn_export(&p.grammar, e, &ps)?)?;
    Ok(0)
}

fn solver(opts: &CommonOpts) -> Result<IlpSolver, Error> {
    let s = IlpSolver::default();
    Ok(match &opts.export_smt {
        Some(d) => {
            fs::create_dir_all(d)?;
            s.with_export(d.clone())
        }
        None => s,
    })
}

fn budget(opts: &CommonOpts) -> Result<Duration, Error> {
    Duration::try_from_secs_f64(opts.budget_seconds)
        .map_err(|_| Error::Usage("--budget-seconds must be a non-negative number".into()))
}

fn check_examples(p: &Problem, e: &ExampleSet, opts: &CommonOpts, interrupt: Arc<AtomicBool>) -> Result<u8, Error> {
    if opts.mode == Mode::HornExport {
        return horn(p, e, opts.out.as_deref());
    }
    let backend = backend(opts)?;
    let oracle = solver(opts)?.with_cancel(interrupt);
    let report: CheckReport = check_unrealizable(&p.grammar, &p.spec, e, &backend, &oracle)?;
    if let (Some(dir), Some(q)) = (&opts.export_smt, &report.query_smt) {
        fs::write(dir.join("query.smt2"), q)?;
    }
    let (kind, reason) = match &report.result {
        CheckResult::Unrealizable => (VerdictKind::Unrealizable, None),
        CheckResult::Realizable(_) => (VerdictKind::Realizable, None),
        CheckResult::Unknown(r) => (VerdictKind::Unknown, Some(r.clone())),
    };
    let mut trace = report.stats.trace.clone();
    trace.push(format!("n(Start) = {}", report.start_value));
    let v = Verdict {
        kind,
        witness: None,
        validation: None,
        reason,
        variables: p.variables.clone(),
        examples: e.inputs().to_vec(),
        iterations: 1,
        trace,
    };
    print_verdict(&v, opts.json);
    Ok(exit_code(kind))
}

fn run(cli: Cli, interrupt: Arc<AtomicBool>) -> Result<u8, Error> {
    match cli.command {
        Command::Check { file, opts, cegis } => {
            let p = load(&file)?;
            let seed = match cegis.seed {
                Some(s) => s,
                None => match std::env::var("UNREAL_SEED") {
                    Ok(s) => s.trim().parse().map_err(|_| Error::Usage(format!("UNREAL_SEED is not a number: {s}")))?,
                    Err(_) => 0,
                },
            };
            let cfg = CegisConfig {
                seed,
                backend: backend(&opts)?,
                parallel: cegis.parallel,
                check_budget: budget(&opts)?,
                max_term_size: cegis.max_term_size,
                max_rounds: cegis.max_rounds,
                export_dir: opts.export_smt.clone(),
                interrupt: Some(interrupt),
                ..CegisConfig::default()
            };
            if opts.mode == Mode::HornExport {
                let first = initial_example(p.variables.len(), seed);
                let e = ExampleSet::new(p.variables.clone(), vec![first]).map_err(Error::from)?;
                return horn(&p, &e, opts.out.as_deref());
            }
            if let Some(d) = &opts.export_smt {
                fs::create_dir_all(d)?;
            }
            let v = run_cegis(&p, &cfg);
            print_verdict(&v, opts.json);
            Ok(exit_code(v.kind))
        }
        Command::CheckExamples { file, examples: ex, opts } => {
            let p = load(&file)?;
            let e = examples(&p, &ex)?;
            check_examples(&p, &e, &opts, interrupt)
        }
        Command::ExportHorn { file, examples: ex, out } => {
            let p = load(&file)?;
            let e = examples(&p, &ex)?;
            horn(&p, &e, out.as_deref())
        }
        Command::DumpEquations { file, examples: ex } => {
            let p = load(&file)?;
            let e = examples(&p, &ex)?;
            let sys = equations(&p.grammar, &e).map_err(unreal_core::cegis::CheckError::from)?;
            print!("{}", sys.dump());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&interrupt);
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    match run(cli, interrupt) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
