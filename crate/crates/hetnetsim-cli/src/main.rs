use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetnetsim::scenario::ScenarioError;
use hetnetsim::{collect_kpis, parse_scenario, EventLog, Scenario};

/// Deterministic simulator for joint radio resource management in
/// heterogeneous cellular + WLAN networks.
#[derive(Parser)]
#[command(name = "hetnetsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every violated invariant.
    Validate { file: PathBuf },
    /// Run a scenario; writes kpi.json, events.csv and scenario.json.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Apply a named hysteresis preset from `handover.presets`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run once per value of one numeric scenario parameter; writes sweep.csv
    /// and one subdirectory per value.
    Sweep {
        file: PathBuf,
        /// Dotted parameter path, e.g. `handover.score_margin`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Recompute the KPI report from an event log.
    Report {
        events: PathBuf,
        /// Scenario the log was produced from (default: scenario.json next to the log).
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

/// Exit status 1: the input is well-formed I/O but fails domain checks.
/// Exit status 2: I/O or usage problems.
enum Failure {
    Domain(String),
    Io(String),
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Run { file, seed, preset, out } => run(&file, seed, preset.as_deref(), &out),
        Command::Sweep { file, axis, values, preset, out } => {
            parse_values(&values).and_then(|values| sweep(&file, &axis, &values, preset.as_deref(), &out))
        }
        Command::Report { events, scenario } => report(&events, scenario.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_scenario(&text).map_err(|e| scenario_failure(path, e))
}

fn scenario_failure(path: &Path, e: ScenarioError) -> Failure {
    match e {
        ScenarioError::Invalid(violations) => {
            let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
            Failure::Domain(format!("{}: {} violation(s)\n{}", path.display(), violations.len(), lines.join("\n")))
        }
        other => Failure::Domain(format!("{}: {other}", path.display())),
    }
}

fn with_preset(s: Scenario, preset: Option<&str>, path: &Path) -> Result<Scenario, Failure> {
    match preset {
        Some(name) => s.with_preset(name).map_err(|e| scenario_failure(path, e)),
        None => Ok(s),
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<(), Failure> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Failure::io(&target, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644)).map_err(|e| Failure::io(&target, e))?;
    }
    tmp.persist(&target).map_err(|e| Failure::io(&target, e.error))?;
    Ok(())
}

fn validate(file: &Path) -> Result<(), Failure> {
    let s = load(file)?;
    println!(
        "ok: {} ({} sites, {} cells, {} hotspots, {} users, {} epochs)",
        s.name,
        s.sites.len(),
        s.num_cells(),
        s.hotspots.len(),
        s.population.num_users,
        s.duration_epochs
    );
    Ok(())
}

fn run(file: &Path, seed: Option<u64>, preset: Option<&str>, out: &Path) -> Result<(), Failure> {
    let mut s = with_preset(load(file)?, preset, file)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let output = hetnetsim::run(&s).map_err(|e| Failure::Domain(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    write_atomic(out, "events.csv", output.log.to_csv_string().as_bytes())?;
    write_atomic(out, "scenario.json", format!("{}\n", s.to_json()).as_bytes())?;
    write_atomic(out, "kpi.json", output.report.to_json().as_bytes())?;
    print!("{}", output.report.summary());
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|_| Failure::Io(format!("--values: {v:?} is not a number"))))
        .collect()
}

fn thread_limit() -> Result<Option<usize>, Failure> {
    match std::env::var("HETNETSIM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Io(format!("HETNETSIM_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn sweep(file: &Path, axis: &str, values: &[f64], preset: Option<&str>, out: &Path) -> Result<(), Failure> {
    let s = with_preset(load(file)?, preset, file)?;
    let threads = thread_limit()?;
    let created = !out.exists();
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let result = sweep_into(&s, axis, values, threads, out);
    if result.is_err() && created {
        let _ = fs::remove_dir_all(out);
    }
    result
}

fn sweep_into(s: &Scenario, axis: &str, values: &[f64], threads: Option<usize>, out: &Path) -> Result<(), Failure> {
    let points = hetnetsim::sweep(s, axis, values, threads).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut csv = String::from("value,ho_attempts,hosr,signalling_total,blocking\n");
    for p in &points {
        let r = &p.report;
        let hosr = r.hosr.map(|h| h.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", p.value, r.ho_attempts, hosr, r.signalling_total(), r.new_call_blocking));
    }
    for (i, p) in points.iter().enumerate() {
        let dir = out.join(format!("{i:03}_{}", p.value));
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        write_atomic(&dir, "kpi.json", p.report.to_json().as_bytes())?;
    }
    write_atomic(out, "sweep.csv", csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn report(events: &Path, scenario: Option<&Path>) -> Result<(), Failure> {
    let scenario_path = match scenario {
        Some(p) => p.to_path_buf(),
        None => events.parent().unwrap_or(Path::new(".")).join("scenario.json"),
    };
    let s = load(&scenario_path)?;
    let file = fs::File::open(events).map_err(|e| Failure::io(events, e))?;
    let log = EventLog::read_csv(std::io::BufReader::new(file)).map_err(|e| match e {
        hetnetsim::kpi::LogError::Io(e) => Failure::io(events, e),
        other => Failure::Domain(format!("{}: {other}", events.display())),
    })?;
    let report = collect_kpis(&log, &s).map_err(|e| Failure::Domain(format!("{}: {e}", events.display())))?;
    print!("{}", report.to_json());
    Ok(())
}
