use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tube_core::boundary::{boundary_scan, normal_form, BoundaryOptions, SequenceSpec, Verdict as ScanVerdict};
use tube_core::experiments::{run_suite, suite_names, write_report, ExperimentConfig, ExperimentReport};
use tube_core::psh::{moment_map, phi};
use tube_core::quotient::{gram_map, gram_rank, DEFAULT_RANK_TOL};
use tube_core::reduction::{orbit_minimize, ReductionOptions};
use tube_core::{Error, TuplePoint};

/// Numerical experiments on the extended future tube.
#[derive(Parser)]
#[command(name = "tube", version)]
struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite from a JSON config file.
    Run { config: PathBuf },
    /// Run every registered suite with its default sample count.
    RunAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the number of randomized cases per suite.
        #[arg(long)]
        samples: Option<usize>,
        /// Write one report per suite into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate phi at a point.
    Phi { point: PathBuf },
    /// Evaluate the moment map at a point.
    Moment { point: PathBuf },
    /// Minimize phi over the complexified orbit directions.
    Reduce { point: PathBuf },
    /// Gram matrix and its rank.
    Gram { point: PathBuf },
    /// Unitary normal form of every component.
    NormalForm { point: PathBuf },
    /// Scan a sequence of points for boundary behaviour.
    Scan { sequence: PathBuf },
}

/// Failures that map to exit status 2.
struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Usage> {
    std::fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_point(path: &Path) -> Result<TuplePoint, Usage> {
    serde_json::from_str(&read(path)?).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn emit(json_mode: bool, value: serde_json::Value, text: String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    } else {
        println!("{text}");
    }
}

fn summary_line(r: &ExperimentReport) -> String {
    format!(
        "{:<26} {:<4}  pass {:>5}  fail {:>3}  inconclusive {:>3}  {:>8.2}s",
        r.config.suite,
        if r.passed() { "PASS" } else { "FAIL" },
        r.aggregate.pass_count,
        r.aggregate.fail_count,
        r.aggregate.inconclusive_count,
        r.aggregate.wall_time_seconds
    )
}

fn failing_cases(r: &ExperimentReport) -> String {
    r.records
        .iter()
        .filter(|rec| rec.status != tube_core::experiments::Status::Pass)
        .take(5)
        .map(|rec| format!("  {} #{} {:?}: {}", rec.case, rec.index, rec.status, rec.data))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: Cli) -> Result<bool, Usage> {
    let js = cli.json;
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let report = run_suite(&cfg)?;
            let mut text = summary_line(&report);
            if !report.passed() {
                text.push('\n');
                text.push_str(&failing_cases(&report));
            }
            emit(js, serde_json::to_value(&report).expect("serializable"), text);
            Ok(report.passed())
        }
        Command::RunAll { seed, samples, out_dir } => {
            let mut all_ok = true;
            let mut reports = Vec::new();
            for name in suite_names() {
                let mut cfg = ExperimentConfig::new(name, seed);
                cfg.samples = samples;
                cfg.apply_env()?;
                let report = run_suite(&cfg)?;
                if let Some(dir) = &out_dir {
                    write_report(&report, &dir.join(format!("{name}.json")))?;
                }
                all_ok &= report.passed();
                if !js {
                    println!("{}", summary_line(&report));
                    if !report.passed() {
                        println!("{}", failing_cases(&report));
                    }
                }
                reports.push(report);
            }
            if js {
                println!("{}", serde_json::to_string_pretty(&reports).expect("serializable"));
            }
            Ok(all_ok)
        }
        Command::Phi { point } => {
            let z = read_point(&point)?;
            let v = phi(&z)?;
            emit(js, json!({ "phi": v }), format!("{v}"));
            Ok(true)
        }
        Command::Moment { point } => {
            let z = read_point(&point)?;
            let m = moment_map(&z)?;
            let text = format!(
                "moment {}\nnorm {:e}",
                m.0.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" "),
                m.norm()
            );
            emit(js, json!({ "moment": m, "norm": m.norm() }), text);
            Ok(true)
        }
        Command::Reduce { point } => {
            let z = read_point(&point)?;
            let r = orbit_minimize(&z, &ReductionOptions::default())?;
            let text = format!(
                "phi_min {}\nmoment_norm {:e}\nconverged {}\niterations {}",
                r.phi_min, r.moment_norm, r.converged, r.iterations
            );
            emit(js, serde_json::to_value(&r).expect("serializable"), text);
            Ok(r.converged)
        }
        Command::Gram { point } => {
            let z = read_point(&point)?;
            let g = gram_map(&z);
            let rank = gram_rank(&g, DEFAULT_RANK_TOL)?;
            let text = g
                .to_rows()
                .iter()
                .map(|row| row.iter().map(|[re, im]| format!("({re:+.6e} {im:+.6e}i)")).collect::<Vec<_>>().join(" "))
                .chain(std::iter::once(format!("rank {rank}")))
                .collect::<Vec<_>>()
                .join("\n");
            emit(js, json!({ "gram": g.to_rows(), "rank": rank }), text);
            Ok(true)
        }
        Command::NormalForm { point } => {
            let z = read_point(&point)?;
            let forms = z.iter().map(normal_form).collect::<Result<Vec<_>, _>>()?;
            let text = forms
                .iter()
                .enumerate()
                .map(|(j, nf)| format!("component {j}: r = {}\n  u = {:?}\n  x = {:?}", nf.r, nf.u, nf.x))
                .collect::<Vec<_>>()
                .join("\n");
            emit(js, json!(forms), text);
            Ok(true)
        }
        Command::Scan { sequence } => {
            let spec = SequenceSpec::parse(&read(&sequence)?)?;
            let rep = boundary_scan(&spec, &BoundaryOptions::default())?;
            let ok = rep.weak_exhaustion != ScanVerdict::Fails && rep.exhaustion_mod_real != ScanVerdict::Fails;
            let text = format!(
                "points {}\ngram converges {}\nboundary approached {}\nweak exhaustion {:?}\nexhaustion mod real form {:?}",
                rep.entries.len(),
                rep.gram_converges,
                rep.boundary_approached,
                rep.weak_exhaustion,
                rep.exhaustion_mod_real
            );
            emit(js, serde_json::to_value(&rep).expect("serializable"), text);
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
