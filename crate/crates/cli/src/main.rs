use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdspec::dynamics::simulate;
use cdspec::ltl::{parse_formula_checked, Formula, PsiOptions};
use cdspec::safety::compute_margins;
use cdspec::scenario::{load_scenario, Scenario};
use cdspec::trace_io::{deviation_csv, eigenvalue_csv, read_trace_file, write_trace_file, TraceMetadata};
use cdspec::verify::{verify, VerifyRequest};
use cdspec::Exec;

const EXIT_IO: u8 = 1;
const EXIT_SIMULATION: u8 = 2;
const EXIT_VIOLATED: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "cdspec", version, about = "Simulate and verify continuum-deformation multi-agent coordination")]
struct Cli {
    /// Run every batch operation on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trace CSV plus a metadata sidecar.
    Simulate {
        scenario: PathBuf,
        /// Output trace CSV; metadata goes to <out>.meta.json.
        #[arg(short, long)]
        out: PathBuf,
        /// Step size in seconds (default: scenario's sim.h).
        #[arg(long)]
        h: Option<f64>,
        /// Final time in seconds (default: scenario's sim.tf).
        #[arg(long)]
        tf: Option<f64>,
    },
    /// Check a trace against the requirement formulas and safety certificates.
    Verify {
        scenario: PathBuf,
        trace: PathBuf,
        /// Requirement indices to check, e.g. 1,3,psi5 (default: all eight).
        #[arg(long, value_delimiter = ',', value_parser = parse_psi)]
        psi: Vec<usize>,
        /// Extra formulas, one per line, optionally prefixed with `name =`.
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Tighten every margin by this amount.
        #[arg(long, default_value_t = 0.0)]
        margin_inflate: f64,
        /// Use open (strict) simplex containment.
        #[arg(long)]
        strict: bool,
        /// Write deviation and eigenvalue time series into this directory.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Print the separation margins of the initial formation.
    Margins { scenario: PathBuf },
    /// Print each follower's communication weights.
    Weights { scenario: PathBuf },
}

fn parse_psi(s: &str) -> Result<usize, String> {
    let digits = s.trim().trim_start_matches("psi");
    match digits.parse::<usize>() {
        Ok(k) if (1..=8).contains(&k) => Ok(k),
        _ => Err(format!("'{s}' is not one of 1..8")),
    }
}

struct Failure(u8, String);

type CmdResult = Result<u8, Failure>;

fn io_fail(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_IO, e.to_string())
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(io_fail)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_fail(format!("{}: {e}", path.display())))
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn cmd_simulate(scenario_path: &Path, out: &Path, h: Option<f64>, tf: Option<f64>) -> CmdResult {
    let scenario = load(scenario_path)?;
    let sim = scenario.sim();
    let h = h.unwrap_or(sim.h);
    let trace = simulate(&scenario, h, tf.unwrap_or(sim.tf)).map_err(|e| Failure(EXIT_SIMULATION, format!("simulation failed: {e}")))?;
    write_trace_file(&trace, out).map_err(io_fail)?;
    let meta = TraceMetadata::of(&trace, h, Some(scenario_path.display().to_string()));
    write_text(&meta_path(out), &serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
    eprintln!("wrote {} samples × {} agents to {}", trace.len(), trace.n_agents(), out.display());
    Ok(0)
}

fn read_formula_file(path: &Path, scenario: &Scenario) -> Result<Vec<(String, Formula)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_fail(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, body) = match line.split_once('=') {
            Some((lhs, rhs)) if !lhs.trim().is_empty() && lhs.trim().chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') => {
                (lhs.trim().to_string(), rhs)
            }
            _ => (format!("custom{}", out.len() + 1), line),
        };
        let f = parse_formula_checked(body, scenario.n_agents(), scenario.dim())
            .map_err(|e| io_fail(format!("{}:{}: {e}", path.display(), line_no + 1)))?;
        out.push((name, f));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    scenario_path: &Path,
    trace_path: &Path,
    psi: Vec<usize>,
    formula_file: Option<&Path>,
    report_path: Option<&Path>,
    inflate: f64,
    strict: bool,
    plot_data: Option<&Path>,
    exec: Exec,
) -> CmdResult {
    let scenario = load(scenario_path)?;
    let trace = read_trace_file(trace_path, scenario.leaders(), exec).map_err(io_fail)?;
    let custom = match formula_file {
        Some(p) => read_formula_file(p, &scenario)?,
        None => Vec::new(),
    };
    let psi = if psi.is_empty() && custom.is_empty() { (1..=8).collect() } else { psi };
    let request = VerifyRequest {
        psi,
        custom,
        options: PsiOptions { strict, inflate },
        exec,
    };
    let report = verify(&scenario, &trace, &request).map_err(io_fail)?;

    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match report_path {
        Some(p) => write_text(p, &json)?,
        None => println!("{json}"),
    }
    if let Some(dir) = plot_data {
        fs::create_dir_all(dir).map_err(|e| io_fail(format!("{}: {e}", dir.display())))?;
        write_text(&dir.join("deviation.csv"), &deviation_csv(&trace))?;
        write_text(&dir.join("eigenvalues.csv"), &eigenvalue_csv(&trace))?;
    }
    for f in &report.formulas {
        let mark = if f.satisfied { "satisfied" } else { "VIOLATED" };
        eprint!("{}: {mark}", f.name);
        if let Some(w) = &f.witness {
            eprint!(" at t = {} ({})", w.t, w.atom);
        }
        if let Some(d) = &f.detail {
            eprint!(": {d}");
        }
        eprintln!();
    }
    Ok(if report.satisfied { 0 } else { EXIT_VIOLATED })
}

fn cmd_margins(scenario_path: &Path) -> CmdResult {
    let scenario = load(scenario_path)?;
    let margins = compute_margins(&scenario).map_err(io_fail)?;
    println!("{}", serde_json::to_string_pretty(&margins).expect("margins serialize"));
    if margins.feasible {
        Ok(0)
    } else {
        eprintln!(
            "infeasible: deviation bound {} exceeds delta_max {:.6}",
            margins.deviation_bound, margins.delta_max
        );
        Ok(EXIT_INFEASIBLE)
    }
}

fn cmd_weights(scenario_path: &Path) -> CmdResult {
    let scenario = load(scenario_path)?;
    let k = scenario.dim() + 1;
    let mut head = vec!["i".to_string()];
    head.extend((1..=k).map(|j| format!("i{j}")));
    head.extend((1..=k).map(|j| format!("w_i,i{j}")));
    println!("{}", head.iter().map(|h| format!("{h:>10}")).collect::<String>());
    for row in scenario.weights().rows() {
        let mut line = format!("{:>10}", row.id);
        line.extend(row.neighbors.iter().map(|n| format!("{n:>10}")));
        line.extend(row.weights.iter().map(|w| format!("{:>10.4}", w)));
        println!("{line}");
        if row.weights.iter().any(|&w| w < 0.0) {
            eprintln!("warning: follower {} has a negative weight; it lies outside its in-neighbor simplex", row.id);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let result = match &cli.command {
        Command::Simulate { scenario, out, h, tf } => cmd_simulate(scenario, out, *h, *tf),
        Command::Verify {
            scenario,
            trace,
            psi,
            formula_file,
            report,
            margin_inflate,
            strict,
            plot_data,
        } => cmd_verify(
            scenario,
            trace,
            psi.clone(),
            formula_file.as_deref(),
            report.as_deref(),
            *margin_inflate,
            *strict,
            plot_data.as_deref(),
            exec,
        ),
        Command::Margins { scenario } => cmd_margins(scenario),
        Command::Weights { scenario } => cmd_weights(scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
