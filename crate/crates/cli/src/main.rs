use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frobsym::{catalog, emit_report, load_manifold_spec_file, run_battery, CliError, Format, ManifoldSpec, Report, RunOptions};

#[derive(Parser)]
#[command(name = "frobsym", version, about = "Residual checks for Frobenius, Hessian, paracomplex and Poisson structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a spec file.
    Check {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the built-in specs, or run one of them (`all` runs every entry
    /// except negative controls).
    Catalog {
        name: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Human,
    Machine,
}

#[derive(Args)]
struct RunArgs {
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// Base step of the finite-difference oracle.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Override the spec seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Human)]
    report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report every runtime as 0 so that output is byte-stable.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions, String> {
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(format!("--tol-scale must be positive, got {}", self.tol_scale));
        }
        if let Some(h) = self.fd_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(format!("--fd-step must be positive, got {h}"));
            }
        }
        Ok(RunOptions { tol_scale: self.tol_scale, fd_step: self.fd_step, threads: None })
    }

    fn run(&self, specs: Vec<ManifoldSpec>) -> Result<bool, String> {
        let opts = self.options()?;
        let format = match self.report {
            ReportFormat::Human => Format::Human,
            ReportFormat::Machine => Format::Machine,
        };
        let mut text = String::new();
        let mut passed = true;
        for mut spec in specs {
            if let Some(seed) = self.seed {
                spec.seed = seed;
            }
            let mut report: Report = run_battery(&spec, &opts);
            if self.no_timing {
                report = report.without_timing();
            }
            passed &= report.passed();
            text.push_str(&emit_report(&report, format));
        }
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?,
        }
        Ok(passed)
    }
}

fn catalog_specs(name: &str) -> Result<Vec<ManifoldSpec>, CliError> {
    if name == "all" {
        return catalog::ENTRIES
            .iter()
            .filter(|e| !e.negative_control)
            .map(|e| frobsym::load_manifold_spec(e.text).map_err(CliError::from))
            .collect();
    }
    let spec = catalog::load(name).ok_or_else(|| CliError::UnknownEntry(name.to_string()))??;
    Ok(vec![spec])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { spec, run } => load_manifold_spec_file(spec).map_err(|e| e.to_string()).and_then(|s| run.run(vec![s])),
        Command::Catalog { name: None, .. } => {
            for e in catalog::ENTRIES {
                let note = if e.negative_control { "  (negative control)" } else { "" };
                println!("{}{note}", e.name);
            }
            Ok(true)
        }
        Command::Catalog { name: Some(name), run } => catalog_specs(name).map_err(|e| e.to_string()).and_then(|s| run.run(s)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("frobsym: {msg}");
            ExitCode::from(2)
        }
    }
}
