use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eosq::config::{load_config, load_preset, preset_names, ENV_PREFIX};
use eosq::{Command, Error, ScenarioConfig};

/// Electro-optic sampling statistics: sweeps, distributions and tables as CSV.
#[derive(Parser)]
#[command(name = "eosq", version, after_help = env_help())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Γ and its parts over the waveplate phase θ.
    SweepTheta(Common),
    /// Γ at θ = π/2 with the detected band restricted around ω̃.
    SpectralFilter(Common),
    /// Signal probability distribution at the configured θ.
    Distribution(Common),
    /// One-standard-deviation polar contour over the quadrature phase.
    Contour(Common),
    /// THz-field distribution from the θ = π/2 signal by deconvolution.
    Reconstruct(Common),
    /// χ⁽²⁾ values over the THz band.
    Chi2Table(Common),
    /// Detection windows D, D_q, D_casc over Ω.
    Windows(Common),
    /// Print the resolved configuration and its hash.
    ShowConfig(Common),
    /// List the shipped presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Relative quadrature tolerance, overriding `tolerances.rel`.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn env_help() -> String {
    format!(
        "Config keys can be overridden with {ENV_PREFIX}<SECTION>__<KEY>, \
         e.g. {ENV_PREFIX}PROBE__NU_C_THZ=260.\n\
         Exit codes: 0 success, 2 configuration error, 3 convergence failure, \
         4 reconstruction refused."
    )
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => load_preset(name)?,
            (None, None) => {
                return Err(Error::Validation(vec![
                    "pass --config <path> or --preset <name>".into(),
                ]))
            }
        };
        if let Some(rel) = self.tolerance {
            if !(rel > 0.0 && rel < 1.0) {
                return Err(Error::Validation(vec![format!(
                    "--tolerance must lie in (0, 1), got {rel}"
                )]));
            }
            cfg.tolerances.rel = rel;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Validation(vec![format!("--threads: {e}")]))?;
        }
        Ok(cfg)
    }
}

fn execute(cmd: Command, common: &Common) -> Result<(), Error> {
    let cfg = common.load()?;
    let table = eosq::run(cmd, &cfg)?;
    let path = eosq::write_table(&table, &cfg, &cfg.output.dir)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::SweepTheta(c) => execute(Command::SweepTheta, c),
        Cmd::SpectralFilter(c) => execute(Command::SpectralFilter, c),
        Cmd::Distribution(c) => execute(Command::Distribution, c),
        Cmd::Contour(c) => execute(Command::Contour, c),
        Cmd::Reconstruct(c) => execute(Command::Reconstruct, c),
        Cmd::Chi2Table(c) => execute(Command::Chi2Table, c),
        Cmd::Windows(c) => execute(Command::Windows, c),
        Cmd::ShowConfig(c) => c.load().map(|cfg| {
            println!("# config_sha256: {}", cfg.hash());
            print!("{}", cfg.to_toml());
        }),
        Cmd::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
