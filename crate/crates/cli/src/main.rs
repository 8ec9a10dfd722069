use clap::{Parser, Subcommand};
use ricci_lab_cli::config::RunConfig;
use ricci_lab_cli::sweep::{sweep, SweepGrid};
use ricci_lab_cli::{output_root, plots, run, LabError, EXIT_PASS, EXIT_USAGE, EXIT_VERDICT};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Weighted curvature estimates along Ricci flow: runs, sweeps and plot data.
#[derive(Debug, Parser)]
#[command(name = "ricci-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one configuration and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory; defaults to $RICCI_LAB_OUTPUT_ROOT/<output.dir or name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cartesian sweep of a base configuration over a parameter grid.
    Sweep {
        base: PathBuf,
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write two-column plot files for a finished run.
    EmitPlots { manifest: PathBuf },
    /// Parse and check a configuration without running it.
    ValidateConfig { config: PathBuf },
}

fn run_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| output_root().join(cfg.output.dir.clone().unwrap_or_else(|| cfg.name.clone())))
}

fn execute(cli: Cli) -> Result<i32, LabError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = run_dir(&cfg, out);
            let outcome = run(&cfg, &dir)?;
            let m = &outcome.manifest;
            println!(
                "{}: {:?}, {} pass, {} fail, {} not rendered -> {}",
                m.name,
                m.status,
                m.summary.pass,
                m.summary.fail,
                m.summary.not_rendered,
                dir.display()
            );
            for n in &m.notes {
                println!("note: {n}");
            }
            Ok(outcome.exit_code())
        }
        Command::Sweep { base, grid, out } => {
            let cfg = RunConfig::load(&base)?;
            let text = std::fs::read_to_string(&grid).map_err(|e| LabError::io(&grid, e))?;
            let g = SweepGrid::from_toml(&text)?;
            let dir = out.unwrap_or_else(|| output_root().join(format!("{}-sweep", cfg.name)));
            let results = sweep(&cfg, &g, &dir)?;
            let failed = results.iter().filter(|r| r.exit_code != EXIT_PASS).count();
            println!("{} cells, {failed} not passing -> {}", results.len(), dir.display());
            Ok(if failed == 0 { EXIT_PASS } else { EXIT_VERDICT })
        }
        Command::EmitPlots { manifest } => {
            let out = plots::emit_plots(Path::new(&manifest))?;
            for f in &out.files {
                println!("{f}");
            }
            for n in &out.notes {
                println!("note: {n}");
            }
            Ok(EXIT_PASS)
        }
        Command::ValidateConfig { config } => {
            let cfg = RunConfig::load(&config)?;
            let res = cfg.validate()?;
            println!(
                "{}: valid; V = {}, T = {}, {} (r, s) pairs",
                cfg.name,
                res.v,
                res.horizon,
                res.pairs.len()
            );
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
