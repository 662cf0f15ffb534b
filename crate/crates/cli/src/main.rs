use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulegauge::diagnostics::{Diagnostic, Level};
use rulegauge::ingest::{discover_files, IngestConfig};
use rulegauge::model::{validate_scenario, Rule};
use rulegauge::rgsf::{parse_scenario_unchecked, write_scenario, FILE_EXTENSION};
use rulegauge::rules::{RayCombiner, SafetyDistanceConfig, SpeedLimitConfig};
use rulegauge::synth::{generate_with_truth, Planted, SynthSpec};
use rulegauge::{run, AnalysisConfig, RunConfig};

#[derive(Parser)]
#[command(name = "rulegauge", version, about = "Rule conformity of recorded drivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score scenarios and write per-rule reports.
    Analyze(AnalyzeArgs),
    /// Check scenario files against the format invariants.
    Validate(ValidateArgs),
    /// Generate synthetic scenarios with known conformity.
    Synth(SynthArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scenario files or directories (searched for *.rgsf.json).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "dist,speed")]
    rules: Vec<Rule>,
    #[arg(long, default_value_t = 1.0)]
    sample_hz: f64,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 5.0)]
    min_speed_kmh: f64,
    /// Heading gate as a percentage of pi.
    #[arg(long, default_value_t = 20.0)]
    heading_dev_pct: f64,
    #[arg(long, default_value_t = 10.0)]
    lane_dist_m: f64,
    #[arg(long, default_value_t = 0.8)]
    speed_floor_frac: f64,
    #[arg(long, default_value_t = 3.0)]
    horizon_s: f64,
    #[arg(long, value_enum, default_value = "min")]
    ray_combiner: CombinerArg,
    /// Also require the obstructing vehicle to exceed the minimum speed.
    #[arg(long)]
    exclude_slow_leads: bool,
    /// Defaults to the number of available cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Abort on the first unreadable or invalid scenario.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CombinerArg {
    Min,
    Mean,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    scenarios: usize,
    #[arg(long, default_value_t = 10)]
    vehicles: usize,
    #[arg(long, default_value_t = 9.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 10.0)]
    sample_hz: f64,
    /// const:R, uniform:A,B or mix:P,A,B
    #[arg(long, default_value = "const:1")]
    plant_dist: Planted,
    #[arg(long, default_value = "const:1")]
    plant_speed: Planted,
    #[arg(long, default_value_t = 13.4112)]
    speed_limit_mps: f64,
    #[arg(long, default_value_t = 3.0)]
    horizon_s: f64,
    #[arg(long)]
    out: PathBuf,
}

fn emit_all(diags: &[Diagnostic]) {
    let mut err = io::stderr().lock();
    for d in diags {
        let _ = d.emit(&mut err);
    }
}

fn fail(code: u8, kind: &str, message: impl Into<String>) -> ExitCode {
    emit_all(&[Diagnostic::new(Level::Error, kind, message)]);
    ExitCode::from(code)
}

fn analyze(a: AnalyzeArgs) -> ExitCode {
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut rules = a.rules;
    rules.sort();
    rules.dedup();
    let cfg = RunConfig {
        analysis: AnalysisConfig {
            rules,
            dist: SafetyDistanceConfig {
                horizon_s: a.horizon_s,
                min_speed_mps: a.min_speed_kmh / 3.6,
                max_heading_dev_rad: a.heading_dev_pct / 100.0 * PI,
                combiner: match a.ray_combiner {
                    CombinerArg::Min => RayCombiner::Min,
                    CombinerArg::Mean => RayCombiner::Mean,
                },
                exclude_slow_leads: a.exclude_slow_leads,
            },
            speed: SpeedLimitConfig {
                max_lane_dist_m: a.lane_dist_m,
                min_fraction_of_limit: a.speed_floor_frac,
            },
        },
        ingest: IngestConfig {
            input_paths: a.input,
            target_rate_hz: a.sample_hz,
            strict: a.strict,
        },
        histogram_bins: a.bins,
        output_dir: a.out,
        workers,
        seed: a.seed,
    };
    match run(&cfg) {
        Ok(outcome) => {
            emit_all(&outcome.diagnostics);
            let mut out = io::stdout().lock();
            for r in &outcome.reports {
                let _ = writeln!(
                    out,
                    "{}\tmean={:.6}\tscenarios={}\tdrivers={}\tsamples={}",
                    r.rule, r.dataset_mean, r.scenario_count, r.driver_count, r.sample_count
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            emit_all(e.diagnostics());
            let kind = match e.exit_code() {
                2 => "config_error",
                3 => "strict_parse_failure",
                _ => "io_error",
            };
            fail(e.exit_code() as u8, kind, e.to_string())
        }
    }
}

fn validate(a: ValidateArgs) -> ExitCode {
    let files = match discover_files(&a.input) {
        Ok(f) if f.is_empty() => return fail(2, "config_error", "no scenarios found"),
        Ok(f) => f,
        Err(e) => return fail(2, "config_error", e.to_string()),
    };
    let mut bad = 0usize;
    let mut diags = Vec::new();
    for path in &files {
        let shown = path.display().to_string();
        let problems: Vec<Diagnostic> = match fs::read(path) {
            Err(e) => vec![Diagnostic::new(Level::Error, "io_error", e.to_string())],
            Ok(bytes) => match parse_scenario_unchecked(&bytes) {
                Err(e) => vec![Diagnostic::new(Level::Error, "invalid_document", e.to_string())],
                Ok(s) => validate_scenario(&s)
                    .into_iter()
                    .map(|v| {
                        Diagnostic::new(Level::Error, "violation", format!("{}: {}", v.path, v.message))
                    })
                    .collect(),
            },
        };
        if !problems.is_empty() {
            bad += 1;
        }
        diags.extend(problems.into_iter().map(|d| d.with_path(shown.clone())));
    }
    emit_all(&diags);
    println!("{} file(s) checked, {} invalid", files.len(), bad);
    if bad == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn synth(a: SynthArgs) -> ExitCode {
    let spec = SynthSpec {
        seed: a.seed,
        n_scenarios: a.scenarios,
        n_vehicles: a.vehicles,
        duration_s: a.duration_s,
        sample_rate_hz: a.sample_hz,
        planted_dist: a.plant_dist,
        planted_speed: a.plant_speed,
        speed_limit_mps: a.speed_limit_mps,
        horizon_s: a.horizon_s,
        ..SynthSpec::default()
    };
    let generated = match generate_with_truth(&spec) {
        Ok(g) => g,
        Err(e) => return fail(2, "config_error", e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(&a.out) {
        return fail(1, "io_error", format!("{}: {e}", a.out.display()));
    }
    let mut truth = String::from("scenario_id,vehicle_id,dist_rc,speed_rc\n");
    for g in &generated {
        let bytes = write_scenario(&g.scenario).expect("generated scenarios are valid");
        let path = a.out.join(format!("{}{FILE_EXTENSION}", g.scenario.scenario_id));
        if let Err(e) = write_file(&path, &bytes) {
            return fail(1, "io_error", e);
        }
        for p in &g.planted {
            truth.push_str(&format!(
                "{},{},{},{}\n",
                g.scenario.scenario_id, p.vehicle_id, p.dist_rc, p.speed_rc
            ));
        }
    }
    if let Err(e) = write_file(&a.out.join("planted.csv"), truth.as_bytes()) {
        return fail(1, "io_error", e);
    }
    println!("{} scenario(s) written to {}", generated.len(), a.out.display());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Validate(a) => validate(a),
        Command::Synth(a) => synth(a),
    }
}
