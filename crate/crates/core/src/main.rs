use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morselab::assemble::assemble_blocks;
use morselab::harness::{
    build_domain, build_partition_for, build_potential, convergence_study, run_scenario,
    run_suite, Scenario, ScenarioConfig, ScenarioReport,
};
use morselab::maslov::branch_trace;
use morselab::Error;

#[derive(Parser)]
#[command(name = "morselab", version, about = "Discrete Morse-index identity checker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one named scenario and report every identity check.
    Verify {
        scenario: String,
        /// TOML scenario config; built-in defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the JSON report and any trace files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write eigenvalue-branch traces along the DtN pencil as CSV.
        #[arg(long)]
        emit_traces: bool,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run randomized cross-checked cases; abort on the first violation.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Grid-refinement study against the closed-form continuum answer.
    Converge {
        scenario: String,
        /// Comma-separated grid sizes, strictly increasing.
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
}

const EXIT_PASS: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_INDETERMINATE: u8 = 2;

fn print_report(report: &ScenarioReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
        return;
    }
    println!("scenario: {}", report.scenario);
    for e in &report.indices {
        println!("  index  {:<24} Mor = {:<4} Mor0 = {:<4} dim ker = {}", e.name, e.mor, e.mor0, e.n_zero);
    }
    for c in &report.checks {
        let rel = match c.relation.as_str() {
            "le" => "<=",
            "lt" => "<",
            _ => "=",
        };
        println!(
            "  {} {:<72} {} {} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.lhs,
            rel,
            c.rhs
        );
    }
    for n in &report.notes {
        println!("  note   {n}");
    }
    if report.indeterminate {
        println!("  INDETERMINATE (guard-band pivot persisted through jitter retries)");
    }
    println!("result: {}", if report.pass { "pass" } else { "fail" });
}

fn write_out(dir: &PathBuf, name: &str, contents: &str) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(name), contents).map_err(|e| Error::Config(e.to_string()))
}

/// Scenarios whose config describes a two-sided block decomposition, for
/// which a branch trace of t ↦ Λ₁ + t²Λ₂ is meaningful.
fn has_blocks(s: Scenario) -> bool {
    matches!(
        s,
        Scenario::Mormas | Scenario::Dnbracket | Scenario::Doubled1d | Scenario::Homotopy
    )
}

fn emit_trace_csv(cfg: &ScenarioConfig, dir: &Option<PathBuf>) -> Result<(), Error> {
    let domain = build_domain(&cfg.domain)?;
    let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
    let partition = build_partition_for(&domain, &cfg.partition)?;
    let blocks = assemble_blocks(&domain, &v, &partition, cfg.numerics.lambda)?;
    let trace = branch_trace(&blocks, cfg.numerics.t_grid)?;
    let mut csv = String::from("t");
    if let Some((_, first)) = trace.first() {
        for i in 0..first.len() {
            csv.push_str(&format!(",branch_{i}"));
        }
    }
    csv.push('\n');
    for (t, eigs) in &trace {
        csv.push_str(&format!("{t:.12e}"));
        for e in eigs {
            csv.push_str(&format!(",{e:.12e}"));
        }
        csv.push('\n');
    }
    let dir = dir.clone().unwrap_or_else(|| PathBuf::from("."));
    write_out(&dir, &format!("{}_branches.csv", cfg.scenario.name()), &csv)?;
    eprintln!("wrote {}/{}_branches.csv", dir.display(), cfg.scenario.name());
    Ok(())
}

fn cmd_verify(
    scenario: &str,
    config: &Option<PathBuf>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
    emit_traces: bool,
    json: bool,
) -> Result<u8, Error> {
    let scenario = Scenario::parse(scenario)?;
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(e.to_string()))?;
            let cfg = ScenarioConfig::from_toml(&text)?;
            if cfg.scenario != scenario {
                return Err(Error::Config(format!(
                    "config names scenario '{}' but '{}' was requested",
                    cfg.scenario, scenario
                )));
            }
            cfg
        }
        None => ScenarioConfig::default_for(scenario),
    };
    if let Some(s) = seed {
        cfg.numerics.seed = s;
    }
    let report = run_scenario(&cfg)?;
    print_report(&report, json);
    if let Some(dir) = out {
        write_out(
            dir,
            &format!("{}_report.json", report.scenario),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    if emit_traces {
        if has_blocks(scenario) {
            emit_trace_csv(&cfg, out)?;
        } else {
            eprintln!("no pencil trace defined for scenario '{scenario}'");
        }
    }
    Ok(if report.indeterminate {
        EXIT_INDETERMINATE
    } else if report.pass {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    })
}

fn cmd_suite(seed: u64, count: usize, out: &Option<PathBuf>, json: bool) -> Result<u8, Error> {
    let report = run_suite(seed, count)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for c in &report.cases {
            println!(
                "  {} case {:<4} {:<12} {} checks{}",
                if c.pass { "PASS" } else { "FAIL" },
                c.case,
                c.scenario,
                c.checks,
                if c.indeterminate { " (indeterminate)" } else { "" }
            );
        }
        println!(
            "suite: {}/{} cases passed, {} checks total",
            report.passed_cases, report.count, report.total_checks
        );
    }
    if let Some(dir) = out {
        write_out(
            dir,
            "suite_report.json",
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    Ok(if report.pass {
        EXIT_PASS
    } else if report.cases.iter().any(|c| c.indeterminate) {
        EXIT_INDETERMINATE
    } else {
        EXIT_VIOLATION
    })
}

fn cmd_converge(scenario: &str, n: &[usize], json: bool) -> Result<u8, Error> {
    let table = convergence_study(Scenario::parse(scenario)?, n)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&table).expect("table serializes"));
    } else {
        println!("scenario: {}", table.scenario);
        for r in &table.rows {
            println!(
                "  N = {:<6} value = {:<4} continuum = {:<4} {}",
                r.n,
                r.value,
                r.continuum,
                if r.matches { "match" } else { "off" }
            );
        }
        match table.stable_from {
            Some(n) => println!("stable from N = {n}"),
            None => println!("not stable on the listed grids"),
        }
    }
    Ok(if table.rows.iter().all(|r| r.matches) { EXIT_PASS } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Verify { scenario, config, seed, out, emit_traces, json } => {
            cmd_verify(scenario, config, *seed, out, *emit_traces, *json)
        }
        Cmd::Suite { seed, count, out, json } => cmd_suite(*seed, *count, out, *json),
        Cmd::Converge { scenario, n, json } => cmd_converge(scenario, n, *json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Error::Indeterminate(x)) => {
            eprintln!("indeterminate: pivot magnitude {x:.3e} inside the guard band");
            ExitCode::from(EXIT_INDETERMINATE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
