use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use orbifold_geodesics::figure;
use orbifold_geodesics::scenario::{self, ScenarioError};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INVALID: u8 = 2;

/// Closed geodesics in good orbifolds and horizontal periodic geodesics of
/// simple Riemannian foliations, by double curve shortening.
#[derive(Parser, Debug)]
#[command(name = "orbigeo", version)]
struct Cli {
    /// Seed for randomized initial curves and numeric oracles.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Iteration budget for the shortening.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Tolerance override, e.g. `--tol node_disp_tol=1e-9` (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol, global = true)]
    tol: Vec<(String, f64)>,
    /// Print progress information on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write result.json and trace.csv.
    Run {
        scenario: PathBuf,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print analytic and brute-force reference values for a scenario.
    Oracle {
        scenario: PathBuf,
        /// Also write oracle.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit the iteration trace of a stored run.
    Trace {
        run_dir: PathBuf,
        /// Write the trace to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a stored 1D or 2D run as SVG.
    ExportFigure {
        run_dir: PathBuf,
        /// Output file (default: <run_dir>/figure.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run many scenarios in parallel, one output subdirectory each.
    Batch {
        /// Scenario files or directories of *.json scenarios.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => eprintln!("error: {e}"),
        _ => {}
    }
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_FAIL,
        message: message.to_string(),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<scenario::Prepared, Failure> {
    let mut s = scenario::load_scenario(path)?;
    scenario::apply_overrides(&mut s, cli.seed, cli.max_iter, &cli.tol)?;
    Ok(scenario::prepare(s)?)
}

fn run_one(cli: &Cli, path: &Path, out: Option<&Path>) -> Result<(u8, String), Failure> {
    let prepared = load(cli, path)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| scenario::default_run_dir(&prepared.scenario.name));
    let output = scenario::execute(&prepared).map_err(fail)?;
    scenario::write_run(&dir, &output).map_err(|e| fail(format!("cannot write {}: {e}", dir.display())))?;
    let r = &output.report;
    let oracle = r
        .oracle
        .as_ref()
        .map(|o| format!(" oracle={:.16e} |diff|={:.3e}", o.value, o.abs_diff))
        .unwrap_or_default();
    let line = format!(
        "{}: {}{} length={:.16e} iterations={}{} -> {}",
        r.scenario,
        r.status,
        if r.certified { "" } else { " (not certified)" },
        r.length,
        r.iterations,
        oracle,
        dir.display()
    );
    Ok((r.exit_code() as u8, line))
}

fn scenario_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| Failure {
                code: EXIT_INVALID,
                message: format!("cannot list {}: {e}", p.display()),
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn batch(cli: &Cli, paths: &[PathBuf], out: &Path) -> Result<u8, Failure> {
    let files = scenario_files(paths)?;
    let mut names = BTreeSet::new();
    for f in &files {
        let s = scenario::load_scenario(f)?;
        if !names.insert(s.name.clone()) {
            return Err(Failure {
                code: EXIT_INVALID,
                message: format!("scenario name `{}` is used twice", s.name),
            });
        }
    }
    let results: Vec<Result<(u8, String), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .map(|f| {
                scope.spawn(move || {
                    let name = scenario::load_scenario(f)?.name;
                    run_one(cli, f, Some(&out.join(name)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut code = EXIT_OK;
    for (f, r) in files.iter().zip(results) {
        match r {
            Ok((c, line)) => {
                emit(&format!("{line}\n"));
                code = code.max(c);
            }
            Err(e) => {
                eprintln!("{}: {}", f.display(), e.message);
                code = code.max(e.code);
            }
        }
    }
    Ok(code)
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Run { scenario: path, out } => {
            let (code, line) = run_one(cli, path, out.as_deref())?;
            emit(&format!("{line}\n"));
            Ok(code)
        }
        Command::Oracle { scenario: path, out } => {
            let prepared = load(cli, path)?;
            let report = scenario::oracle(&prepared).map_err(fail)?;
            let text = scenario::to_json(&report);
            if let Some(dir) = out {
                fs::create_dir_all(dir)
                    .and_then(|_| fs::write(dir.join("oracle.json"), &text))
                    .map_err(|e| fail(format!("cannot write {}: {e}", dir.display())))?;
            }
            emit(&text);
            Ok(EXIT_OK)
        }
        Command::Trace { run_dir, out } => {
            let path = run_dir.join(scenario::TRACE_FILE);
            let text = fs::read_to_string(&path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
            let rows = scenario::parse_trace_csv(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            let text = scenario::trace_csv(&rows);
            match out {
                Some(file) => fs::write(file, text).map_err(|e| fail(format!("cannot write {}: {e}", file.display())))?,
                None => emit(&text),
            }
            Ok(EXIT_OK)
        }
        Command::ExportFigure { run_dir, out } => {
            let report = scenario::read_report(run_dir).map_err(fail)?;
            let svg = figure::render_svg(&report).map_err(fail)?;
            let file = out.clone().unwrap_or_else(|| run_dir.join("figure.svg"));
            fs::write(&file, svg).map_err(|e| fail(format!("cannot write {}: {e}", file.display())))?;
            emit(&format!("{}\n", file.display()));
            Ok(EXIT_OK)
        }
        Command::Batch { paths, out } => batch(cli, paths, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { LevelFilter::Info } else { LevelFilter::Warn })
        .init();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
