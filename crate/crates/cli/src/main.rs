use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use equipart::experiments::{
    collect_manifests, compute, run_scenario, run_sweep, RunManifest, RunStatus, ScenarioConfig, ScenarioKind,
};
use equipart::par;

#[derive(Parser)]
#[command(name = "equipart", version, about = "Run equipartition experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the full modal system.
    Simulate(RunArgs),
    /// Integrate the averaged gradient flow.
    Average(RunArgs),
    /// Run a lemma/proposition harness (gradient, oscillatory or harness scenarios).
    Verify(RunArgs),
    /// Run every point of the scenario's [sweep] grid.
    Sweep(RunArgs),
    /// Aggregate the manifests found below --out.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the metrics of a scenario without writing files.
    Check(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the scenario's output_dir or runs/<id>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl RunArgs {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = ScenarioConfig::load(&self.config).map_err(|e| e.to_string())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            cfg.output_dir
                .as_ref()
                .map(PathBuf::from)
                .unwrap_or_else(|| Path::new("runs").join(&cfg.id))
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate(a) => single(&a, &[ScenarioKind::Full]),
        Command::Average(a) => single(&a, &[ScenarioKind::Averaged]),
        Command::Verify(a) => single(&a, &[ScenarioKind::Gradient, ScenarioKind::Oscillatory, ScenarioKind::Harness]),
        Command::Sweep(a) => sweep(&a),
        Command::Report { out } => report(&out),
        Command::Check(a) => check(&a),
    };
    ExitCode::from(code)
}

fn fail(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    2
}

fn single(args: &RunArgs, kinds: &[ScenarioKind]) -> u8 {
    let cfg = match args.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if !kinds.contains(&cfg.kind) {
        let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
        return fail(format!(
            "scenario {:?} has kind {}, this subcommand runs {}",
            cfg.id,
            cfg.kind.name(),
            names.join(" | ")
        ));
    }
    let dir = args.out_dir(&cfg);
    match par::with_threads(args.threads, || run_scenario(&cfg, &dir)) {
        Ok(m) => {
            print_manifest(&m, &dir);
            m.status.exit_code() as u8
        }
        Err(e) => fail(e),
    }
}

fn sweep(args: &RunArgs) -> u8 {
    let cfg = match args.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let dir = args.out_dir(&cfg);
    let results = match par::with_threads(args.threads, || run_sweep(&cfg, &dir)) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut code = 0u8;
    for r in results {
        match r {
            Ok(m) => {
                let sub = dir.join(&m.id);
                print_manifest(&m, &sub);
                code = code.max(m.status.exit_code() as u8);
            }
            Err(e) => code = code.max(fail(e)),
        }
    }
    code
}

fn check(args: &RunArgs) -> u8 {
    let cfg = match args.load() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match par::with_threads(args.threads, || compute(&cfg)) {
        Ok(c) => {
            for (k, v) in &c.metrics.values {
                println!("{k} = {v:?}");
            }
            for n in &c.metrics.notes {
                println!("note: {n}");
            }
            match c.failure {
                Some(f) => fail(f),
                None => 0,
            }
        }
        Err(e) => fail(e),
    }
}

fn print_manifest(m: &RunManifest, dir: &Path) {
    println!("{} -> {}", m.id, dir.display());
    for c in &m.criteria {
        println!("  {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    if let Some(f) = &m.failure {
        println!("  ERROR {f}");
    }
}

fn report(root: &Path) -> u8 {
    let rows = match collect_manifests(root) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if rows.is_empty() {
        return fail(format!("no manifests below {}", root.display()));
    }
    let mut code = 0u8;
    for r in &rows {
        let passed = r.criteria.iter().filter(|c| c.pass).count();
        let status = match r.status {
            RunStatus::Passed => "passed",
            RunStatus::CriteriaFailed => "criteria_failed",
            RunStatus::Error => "error",
        };
        println!(
            "{:<40} {:<16} {}/{} criteria{}",
            r.id,
            status,
            passed,
            r.criteria.len(),
            if r.checksums_ok { "" } else { "  CHECKSUM MISMATCH" }
        );
        let c = if r.checksums_ok { r.status.exit_code() as u8 } else { 2 };
        code = code.max(c);
    }
    let json = match serde_json::to_string_pretty(&rows) {
        Ok(j) => j + "\n",
        Err(e) => return fail(e),
    };
    if let Err(e) = std::fs::write(root.join("report.json"), json) {
        return fail(e);
    }
    code
}
