//! Command-line front end: argument parsing, configuration resolution,
//! thread control and run manifests. The simulations live in
//! `fluctwave_core`; [`commands`] adapts them to files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{read_config_file, resolve, Resolved, Values};
use output::{Format, OutputDir, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] fluctwave_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Model(_) | Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fluctwave", version, about = "Fluctuating-wave path simulations and biprism fringe statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate fluctuating-solution trajectories along Brownian paths
    Paths {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: PathsArgs,
    },
    /// Run the self-checks and write a pass/fail report
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: VerifyArgs,
    },
    /// Compare Monte Carlo Feynman–Kac estimates with the finite-difference solution
    FeynmanKac {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: FeynmanKacArgs,
    },
    /// Sample bright-spot positions behind an electron biprism
    Biprism {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: BiprismArgs,
    },
    /// Closed-form spread and fringe-count estimate
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: EstimateArgs,
    },
    /// Re-run a command from its manifest
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// csv or json, for tabular outputs
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// key=value file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// hbar = m = charge = 1
    #[arg(long)]
    pub natural: bool,
    #[arg(long)]
    pub hbar: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long)]
    pub charge: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("seed", self.seed.map(|s| s.to_string())),
            ("format", self.format.clone()),
            ("natural", self.natural.then(|| "true".to_string())),
            ("hbar", self.hbar.clone()),
            ("mass", self.mass.clone()),
            ("charge", self.charge.clone()),
        ]
    }
}

/// Declares a flag struct whose fields override configuration keys:
/// `field: "flag-name" => "key"`.
macro_rules! flag_struct {
    ($name:ident { $($field:ident : $flag:literal => $key:literal),* $(,)? }) => {
        #[derive(Debug, Args)]
        pub struct $name {
            $(
                #[arg(long = $flag)]
                pub $field: Option<String>,
            )*
        }

        impl $name {
            fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
                vec![$(($key, self.$field.clone())),*]
            }
        }
    };
}

flag_struct!(PathsArgs {
    potential: "potential" => "potential",
    psi0: "psi0" => "psi0",
    dpsi_dx: "dpsi-dx" => "dpsi_dx",
    v_x: "v-x" => "v_x",
    t0: "t0" => "t0",
    t: "t" => "t",
    n_steps: "n-steps" => "n_steps",
    n_paths: "n-paths" => "n_paths",
    x0: "x0" => "x0",
    branch: "branch" => "branch",
});

flag_struct!(VerifyArgs {
    check: "check" => "check",
    n: "n" => "n",
    n_paths: "n-paths" => "n_paths",
    replicates: "replicates" => "replicates",
    dt: "dt" => "dt",
});

flag_struct!(FeynmanKacArgs {
    potential: "potential" => "potential",
    psi0: "psi0" => "psi0",
    t: "t" => "t",
    n_steps: "n-steps" => "n_steps",
    n_paths: "n-paths" => "n_paths",
    probes: "probes" => "probes",
    pde_half_width: "pde-half-width" => "pde_half_width",
    pde_nx: "pde-nx" => "pde_nx",
    pde_nt: "pde-nt" => "pde_nt",
});

flag_struct!(BiprismArgs {
    kz: "kz" => "kz",
    vz: "vz" => "vz",
    l: "L" => "L",
    fringe_width_th: "fringe-width-th" => "fringe_width_th",
    fringe_width_exp: "fringe-width-exp" => "fringe_width_exp",
    coherence: "coherence" => "coherence",
    a: "a" => "a",
    aperture: "aperture" => "aperture",
    n: "n" => "n",
    noise: "noise" => "noise",
    filament: "filament" => "filament",
    z_extent: "z-extent" => "z_extent",
    z_steps: "z-steps" => "z_steps",
});

flag_struct!(EstimateArgs {
    kz: "kz" => "kz",
    vz: "vz" => "vz",
    l: "L" => "L",
    fringe_width_th: "fringe-width-th" => "fringe_width_th",
    fringe_width_exp: "fringe-width-exp" => "fringe_width_exp",
    coherence: "coherence" => "coherence",
    aperture: "aperture" => "aperture",
});

/// What a finished run reports back to `main`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: String,
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    /// false when a requested check failed
    pub passed: bool,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (name, common, flags) = match &cli.command {
        Command::Paths { common, args } => ("paths", common, args.overrides()),
        Command::Verify { common, args } => ("verify", common, args.overrides()),
        Command::FeynmanKac { common, args } => ("feynman-kac", common, args.overrides()),
        Command::Biprism { common, args } => ("biprism", common, args.overrides()),
        Command::Estimate { common, args } => ("estimate", common, args.overrides()),
        Command::Replay { manifest, out_dir, threads } => return replay(manifest, out_dir, *threads),
    };
    let file = match &common.config {
        Some(p) => read_config_file(p)?,
        None => Vec::new(),
    };
    let mut all = common.overrides();
    all.extend(flags);
    let specs = commands::specs(name).expect("registered command");
    let resolved = resolve(&specs, &file, &all)?;
    execute(name, resolved, &common.out_dir, common.threads)
}

/// Runs `manifest.command` with `manifest.config`.
pub fn replay(manifest: &Path, out_dir: &Path, threads: Option<usize>) -> Result<Outcome, CliError> {
    let m = RunManifest::read(manifest)?;
    if m.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}, replaying with {}", m.version, env!("CARGO_PKG_VERSION"));
    }
    let specs = commands::specs(&m.command)
        .ok_or_else(|| CliError::Usage(format!("unknown command `{}` in manifest", m.command)))?;
    let file: Vec<(String, String)> = m.config.into_iter().collect();
    let resolved = resolve(&specs, &file, &[])?;
    execute(&m.command, resolved, out_dir, threads)
}

fn execute(name: &str, mut resolved: Resolved, out_dir: &Path, threads: Option<usize>) -> Result<Outcome, CliError> {
    commands::finalize(name, &mut resolved)?;
    let values = Values(&resolved);
    let format: Format = values.parse("format")?;
    let seed: u64 = values.parse("seed")?;
    let mut out = OutputDir::new(out_dir, format)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    let passed = pool.install(|| commands::execute(name, &values, &mut out))?;
    out.manifest(name, &resolved, seed)?;
    Ok(Outcome { command: name.to_string(), out_dir: out_dir.to_path_buf(), outputs: out.written, passed })
}
