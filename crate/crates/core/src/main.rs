//! Command-line front end: solve instance files, run benchmark sweeps,
//! run randomized self-checks, and fit power-law approximations.
//!
//! Exit codes: 0 success, 1 solver or suite failure, 2 unreadable or
//! malformed input, 3 semantically invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use smartfill::baselines::{equal_split, fit_power, hesrpt_approx, hesrpt_power};
use smartfill::experiment::{format_sig, rows_to_csv, run_experiment, ExperimentSpec, BUILTIN_IDS};
use smartfill::instance::{parse_instance, InstanceError, ParsedInstance};
use smartfill::scheduler::{linearity_check, smartfill, verify_cdr, ScheduleResult};
use smartfill::verification::{
    cdr_suite, gwf_suite, linearity_suite, oracle_suite, FamilyKind, SuiteReport,
};

#[derive(Parser)]
#[command(
    name = "smartfill",
    version,
    about = "Bandwidth schedules for parallel jobs with concave speedup"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and print the schedule.
    Solve {
        /// Path to a JSON instance file.
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Smartfill)]
        policy: PolicyArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
        /// Re-check ratio invariants and objective linearity on the output.
        #[arg(long)]
        verify: bool,
        /// Write to a file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark sweep (built-in id or spec file) and emit CSV.
    Experiment {
        /// One of power_equivalence, log_comparison, sqrt_comparison, or a
        /// path to a JSON experiment spec.
        spec: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run randomized self-check suites.
    Verify {
        /// One of all, gwf, oracle, cdr, linearity.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Rounds per family (suite defaults when omitted).
        #[arg(long)]
        trials: Option<usize>,
        /// Oracle instance size (2 or 3; both when omitted).
        #[arg(long)]
        m: Option<usize>,
        /// Restrict to one family: power, shifted_power, log, saturating,
        /// inverted_shift, sum.
        #[arg(long)]
        family: Option<String>,
    },
    /// Fit a power-law stand-in for an instance's speedup function.
    Fit {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Smartfill,
    Hesrpt,
    Equal,
}

impl PolicyArg {
    fn name(&self) -> &'static str {
        match self {
            PolicyArg::Smartfill => "smartfill",
            PolicyArg::Hesrpt => "hesrpt",
            PolicyArg::Equal => "equal",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve {
            instance,
            policy,
            format,
            verify,
            output,
        } => cmd_solve(&instance, policy, format, verify, output.as_deref()),
        Command::Experiment { spec, output } => cmd_experiment(&spec, output.as_deref()),
        Command::Verify {
            suite,
            seed,
            trials,
            m,
            family,
        } => cmd_verify(&suite, seed, trials, m, family.as_deref()),
        Command::Fit { instance, format } => cmd_fit(&instance, format),
    };
    ExitCode::from(code)
}

fn load_instance(path: &Path) -> Result<ParsedInstance, u8> {
    match parse_instance(path) {
        Ok(parsed) => {
            if parsed.instance.was_reordered() {
                eprintln!("warning: jobs re-sorted by size (descending) and weight (ascending)");
            }
            if parsed.instance.was_perturbed() {
                eprintln!(
                    "warning: tied job sizes perturbed by a relative 1e-12 to order completions"
                );
            }
            Ok(parsed)
        }
        Err(err @ (InstanceError::Io { .. } | InstanceError::Parse(_))) => {
            eprintln!("error: {err}");
            Err(2)
        }
        Err(err @ InstanceError::Validation(_)) => {
            eprintln!("error: {err}");
            Err(3)
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> u8 {
    match output {
        None => {
            print!("{text}");
            0
        }
        Some(path) => match fs::write(path, text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                1
            }
        },
    }
}

fn cmd_solve(
    path: &Path,
    policy: PolicyArg,
    format: FormatArg,
    verify: bool,
    output: Option<&Path>,
) -> u8 {
    let parsed = match load_instance(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let inst = &parsed.instance;

    let solved = match policy {
        PolicyArg::Smartfill => smartfill(inst).map_err(|e| e.to_string()),
        PolicyArg::Hesrpt => {
            if inst.speedup().is_power() {
                hesrpt_power(inst).map_err(|e| e.to_string())
            } else {
                fit_power(inst.speedup())
                    .and_then(|fit| hesrpt_approx(inst, &fit))
                    .map_err(|e| e.to_string())
            }
        }
        PolicyArg::Equal => equal_split(inst).map_err(|e| e.to_string()),
    };
    let solved = match solved {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };

    let verification = verify.then(|| {
        let cdr = verify_cdr(inst, &solved);
        let residual = linearity_check(inst, &solved).map(|l| l.residual).ok();
        (cdr.violations.len(), residual)
    });

    let text = match format {
        FormatArg::Table => render_table(&parsed, policy, &solved, verification),
        FormatArg::Csv => render_csv(&solved, verification),
    };
    emit(&text, output)
}

fn render_table(
    parsed: &ParsedInstance,
    policy: PolicyArg,
    solved: &ScheduleResult,
    verification: Option<(usize, Option<f64>)>,
) -> String {
    let inst = &parsed.instance;
    let m = inst.job_count();
    let mut out = String::new();
    if let Some(label) = &parsed.label {
        out.push_str(&format!("instance: {label}\n"));
    }
    out.push_str(&format!("policy: {}\n", policy.name()));
    out.push_str(&format!("jobs: {m}, bandwidth: {}\n\n", inst.bandwidth()));

    let a = solved.coefficients.as_deref();
    let c = solved.cdr_constants.as_deref();
    out.push_str("job        size      weight  completion    duration");
    if a.is_some() {
        out.push_str("     coeff_a       cdr_c");
    }
    out.push('\n');
    for i in 0..m {
        out.push_str(&format!(
            "{:<4} {:>9.4} {:>11.6} {:>11.6} {:>11.6}",
            i + 1,
            inst.reported_sizes()[i],
            inst.weights()[i],
            solved.completion_times[i],
            solved.durations[i],
        ));
        if let (Some(a), Some(c)) = (a, c) {
            out.push_str(&format!(" {:>11.6} {:>11.6}", a[i], c[i]));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "\nobjective J = {}\n",
        format_sig(solved.objective)
    ));

    out.push_str(
        "\nallocation rates theta[job][interval] (interval j ends at job j's completion):\n",
    );
    for i in 0..m {
        let row: Vec<String> = (0..m)
            .map(|j| format!("{:>9.4}", solved.matrix.get(i, j)))
            .collect();
        out.push_str(&format!("job {:<3} {}\n", i + 1, row.join(" ")));
    }

    if let Some((violations, residual)) = verification {
        out.push_str(&format!("\nverification: ratio violations = {violations}"));
        match residual {
            Some(r) => out.push_str(&format!(", linearity residual = {r:.3e}\n")),
            None => out.push_str(", linearity residual = n/a\n"),
        }
    }
    out
}

fn render_csv(solved: &ScheduleResult, verification: Option<(usize, Option<f64>)>) -> String {
    let m = solved.completion_times.len();
    let mut out = String::from("record,i,j,value\n");
    out.push_str(&format!("objective,,,{}\n", format_sig(solved.objective)));
    for i in 0..m {
        out.push_str(&format!(
            "completion,{},,{}\n",
            i + 1,
            format_sig(solved.completion_times[i])
        ));
    }
    for j in 0..m {
        out.push_str(&format!(
            "duration,{},,{}\n",
            j + 1,
            format_sig(solved.durations[j])
        ));
    }
    if let Some(a) = &solved.coefficients {
        for (i, value) in a.iter().enumerate() {
            out.push_str(&format!("coeff_a,{},,{}\n", i + 1, format_sig(*value)));
        }
    }
    if let Some(c) = &solved.cdr_constants {
        for (i, value) in c.iter().enumerate() {
            out.push_str(&format!("cdr_c,{},,{}\n", i + 1, format_sig(*value)));
        }
    }
    for i in 0..m {
        for j in i..m {
            out.push_str(&format!(
                "theta,{},{},{}\n",
                i + 1,
                j + 1,
                format_sig(solved.matrix.get(i, j))
            ));
        }
    }
    if let Some((violations, residual)) = verification {
        out.push_str(&format!("cdr_violations,,,{violations}\n"));
        if let Some(r) = residual {
            out.push_str(&format!("linearity_residual,,,{}\n", format_sig(r)));
        }
    }
    out
}

fn cmd_experiment(spec_arg: &str, output: Option<&Path>) -> u8 {
    let spec = if BUILTIN_IDS.contains(&spec_arg) {
        ExperimentSpec::builtin(spec_arg).unwrap()
    } else {
        let text = match fs::read_to_string(spec_arg) {
            Ok(t) => t,
            Err(e) => {
                eprintln!(
                    "error: {spec_arg} is neither a built-in experiment ({}) nor a readable spec file: {e}",
                    BUILTIN_IDS.join(", ")
                );
                return 2;
            }
        };
        match ExperimentSpec::from_json(&text) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    };
    match run_experiment(&spec) {
        Ok(rows) => emit(&rows_to_csv(&rows), output),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_verify(
    suite: &str,
    seed: u64,
    trials: Option<usize>,
    m: Option<usize>,
    family: Option<&str>,
) -> u8 {
    let family = match family {
        None => None,
        Some(name) => match FamilyKind::parse(name) {
            Some(kind) => Some(kind),
            None => {
                eprintln!("error: unknown family {name}");
                return 2;
            }
        },
    };

    let mut reports: Vec<SuiteReport> = Vec::new();
    match suite {
        "all" => {
            reports.push(gwf_suite(seed, trials.unwrap_or(30), family));
            reports.push(oracle_suite(seed, trials.unwrap_or(10), 2, family));
            reports.push(oracle_suite(seed, trials.unwrap_or(5), 3, family));
            reports.push(cdr_suite(seed, trials.unwrap_or(8), 12, family));
            reports.push(linearity_suite(seed, trials.unwrap_or(4), family));
        }
        "gwf" => reports.push(gwf_suite(seed, trials.unwrap_or(30), family)),
        "oracle" => match m {
            Some(size @ (2 | 3)) => {
                reports.push(oracle_suite(seed, trials.unwrap_or(10), size, family))
            }
            Some(other) => {
                eprintln!("error: oracle suite supports --m 2 or --m 3, got {other}");
                return 2;
            }
            None => {
                reports.push(oracle_suite(seed, trials.unwrap_or(10), 2, family));
                reports.push(oracle_suite(seed, trials.unwrap_or(5), 3, family));
            }
        },
        "cdr" => reports.push(cdr_suite(
            seed,
            trials.unwrap_or(8),
            m.unwrap_or(12),
            family,
        )),
        "linearity" => reports.push(linearity_suite(seed, trials.unwrap_or(4), family)),
        other => {
            eprintln!("error: unknown suite {other} (expected all, gwf, oracle, cdr, linearity)");
            return 2;
        }
    }

    let mut failed = false;
    for report in &reports {
        println!(
            "{}: {}/{} passed",
            report.name,
            report.passed(),
            report.trials
        );
        for failure in report.failures.iter().take(5) {
            println!("  FAIL {failure}");
            failed = true;
        }
        if report.failures.len() > 5 {
            println!("  ... {} more failures", report.failures.len() - 5);
        }
    }
    if failed {
        1
    } else {
        0
    }
}

fn cmd_fit(path: &Path, format: FormatArg) -> u8 {
    let parsed = match load_instance(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match fit_power(parsed.instance.speedup()) {
        Ok(fit) => {
            match format {
                FormatArg::Table => {
                    println!(
                        "power fit over (0, {}]: a = {:.6}, p = {:.6}",
                        parsed.instance.bandwidth(),
                        fit.a,
                        fit.p
                    )
                }
                FormatArg::Csv => println!("a,p\n{},{}", format_sig(fit.a), format_sig(fit.p)),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
