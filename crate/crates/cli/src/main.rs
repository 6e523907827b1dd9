//! `pev` command-line driver.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 invariant
//! violation.

mod commands;
mod manifest;
mod run_config;
mod tolerances;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pev::PevError;

use commands::{Ctx, Status};
use run_config::ScanSection;
use tolerances::{parse_override, Tols};

#[derive(Parser)]
#[command(name = "pev", version, about = "Projection-evolution simulations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// NAME=VALUE, repeatable.
    #[arg(long, global = true)]
    tolerance: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Channel, density and spectral invariant suites.
    Validate,
    /// Sample a path through the configured families.
    Evolve {
        /// Also aggregate branch frequencies over this many paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Temporal double-slit probability grid.
    Doubleslit {
        /// full, temporal or spatial.
        #[arg(long)]
        factor: Option<String>,
        /// pion, approx or exact.
        #[arg(long)]
        which: Option<String>,
        /// Time with unit suffix, e.g. `1e-7s`.
        #[arg(long)]
        epsilon_t: Option<String>,
        /// Nodes per axis.
        #[arg(long)]
        n: Option<usize>,
        /// Energy with unit suffix, e.g. `0.1eV`.
        #[arg(long)]
        half_span: Option<String>,
    },
    /// Time/energy and mass uncertainty sweep.
    Uncertainty,
    /// Light-cone probabilities of configured packets.
    Causality,
}

fn exit_code(e: &PevError) -> u8 {
    use PevError::*;
    match e {
        QuadratureFailure { .. }
        | DegenerateGrid
        | AllBranchesZero { .. }
        | ZeroProbabilityBranch { .. } => 3,
        NotHermitian { .. } | NotUnitary { .. } | InvalidDensity(_) => 4,
        _ => 2,
    }
}

fn build(cli: &Cli) -> pev::Result<Ctx> {
    let loaded = run_config::load(cli.common.config.as_deref())?;
    let mut config = loaded.config;
    if let Some(s) = cli.common.seed {
        config.seed = Some(s);
    }
    for t in &cli.common.tolerance {
        let (k, v) = parse_override(t)?;
        config.tolerances.insert(k, v);
    }
    match &cli.cmd {
        Cmd::Evolve { paths: Some(n) } => {
            if let Some(sys) = config.system.as_mut() {
                sys.paths = Some(*n);
            }
        }
        Cmd::Doubleslit {
            factor,
            which,
            epsilon_t,
            n,
            half_span,
        } => {
            let scan = config.scan.get_or_insert_with(ScanSection::default);
            scan.factor = factor.clone().or(scan.factor.take());
            scan.which = which.clone().or(scan.which.take());
            scan.n = n.or(scan.n);
            scan.half_span = half_span.clone().or(scan.half_span.take());
            if let Some(e) = epsilon_t {
                let ds = config.doubleslit.get_or_insert_with(Default::default);
                ds.epsilon_t = Some(e.clone());
            }
        }
        _ => {}
    }
    // File references become absolute so the effective config written next
    // to the outputs can be rerun from anywhere.
    if let Some(sys) = config.system.as_mut() {
        let base = std::fs::canonicalize(&loaded.base_dir).unwrap_or(loaded.base_dir.clone());
        let resolve = |v: &mut String| {
            if !v.trim_start().starts_with('[') {
                *v = base.join(v.as_str()).display().to_string();
            }
        };
        resolve(&mut sys.families);
        sys.rho0.iter_mut().for_each(resolve);
        sys.observables.iter_mut().for_each(resolve);
    }
    let tols = Tols::from_map(&config.tolerances)?;
    // `--out` is not part of the effective config, so runs into different
    // directories hash identically.
    let out = match &cli.common.out {
        Some(o) => o.clone(),
        None => PathBuf::from(config.out.clone().unwrap_or_else(|| "out".into())),
    };
    let seed = config.seed.unwrap_or(0);
    Ok(Ctx {
        config,
        base_dir: loaded.base_dir,
        source: loaded.source,
        out,
        seed,
        tols,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = build(&cli).and_then(|ctx| match cli.cmd {
        Cmd::Validate => commands::validate(&ctx),
        Cmd::Evolve { .. } => commands::evolve(&ctx),
        Cmd::Doubleslit { .. } => commands::doubleslit(&ctx),
        Cmd::Uncertainty => commands::uncertainty(&ctx),
        Cmd::Causality => commands::causality(&ctx),
    });
    match run {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violated(msg)) => {
            eprintln!("invariant violated:\n{}", msg.trim_end());
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
