//! Command-line front end: argument parsing, config merging and exit codes.

mod commands;
mod config;

pub use commands::order_preserving_correlation;
pub use config::{parse_list, parse_metrics, FieldSource, FieldSpec, RunConfig};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

/// Exit code for bad input or configuration.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for internal failures.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "visrecon", version, about = "Score and sweep scalar-field visualizations by reconstruction error")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Global seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "VISRECON_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// INI run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode plain colormapped renderings of a 2D field with every colormap.
    #[command(name = "colormap-eval-2d")]
    ColormapEval2d {
        /// Field file (.csv or .vrgf); defaults to a seeded synthetic terrain.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Directory of colormap JSON files; defaults to the bundled set.
        #[arg(long)]
        colormap_dir: Option<PathBuf>,
    },
    /// Decode a shaded heightfield rendering with several color metrics.
    #[command(name = "colormap-eval-3d")]
    ColormapEval3d {
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        colormap_dir: Option<PathBuf>,
        /// Comma-separated subset of de1976, de2000, ab, hue.
        #[arg(long)]
        metrics: Option<String>,
    },
    /// Compare reconstruction-based isovalue selection with reference selectors.
    IsovalueSelect {
        #[arg(long, conflicts_with = "synth_seed")]
        field: Option<PathBuf>,
        /// Seed of the synthetic ten-Gaussian field.
        #[arg(long)]
        synth_seed: Option<u64>,
        /// Number of evenly spaced candidates.
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Score camera angles by fitting a radiance field to views of a mesh.
    ViewpointEval {
        /// OBJ mesh; defaults to the bundled teapot-like mesh.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Comma-separated azimuths in degrees.
        #[arg(long)]
        azimuths: Option<String>,
        /// Comma-separated elevations in degrees.
        #[arg(long)]
        elevations: Option<String>,
    },
    /// Sweep isovalue, colormap, azimuth and elevation on a 3D field.
    Sweep {
        /// Ignore results journaled by an earlier run in the output directory.
        #[arg(long)]
        fresh: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ColormapEval2d { .. } => "colormap-eval-2d",
            Command::ColormapEval3d { .. } => "colormap-eval-3d",
            Command::IsovalueSelect { .. } => "isovalue-select",
            Command::ViewpointEval { .. } => "viewpoint-eval",
            Command::Sweep { .. } => "sweep",
        }
    }
}

fn check_file(p: &Path) -> Result<PathBuf> {
    if p.exists() {
        Ok(p.to_path_buf())
    } else {
        Err(Error::Config(format!("{} does not exist", p.display())))
    }
}

/// Config file merged with command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(&check_file(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.common.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.common.parallelism {
        cfg.parallelism = p;
    }
    if let Some(o) = &cli.common.out {
        cfg.out = Some(o.clone());
    }
    match &cli.command {
        Command::ColormapEval2d { field, colormap_dir } | Command::ColormapEval3d { field, colormap_dir, .. } => {
            if let Some(f) = field {
                cfg.field.path = Some(check_file(f)?);
                cfg.field.source = Some(FieldSource::File);
            }
            if let Some(d) = colormap_dir {
                cfg.colormap_dir = Some(d.clone());
            }
            if let Command::ColormapEval3d { metrics: Some(m), .. } = &cli.command {
                cfg.metrics = parse_metrics(m)?;
            }
        }
        Command::IsovalueSelect { field, synth_seed, k } => {
            if let Some(f) = field {
                cfg.field.path = Some(check_file(f)?);
                cfg.field.source = Some(FieldSource::File);
            }
            if let Some(s) = synth_seed {
                cfg.field.synth_seed = Some(*s);
                cfg.field.source = Some(FieldSource::Synth);
            }
            if let Some(k) = k {
                cfg.k = *k;
            }
        }
        Command::ViewpointEval { mesh, azimuths, elevations } => {
            if let Some(m) = mesh {
                cfg.mesh = Some(check_file(m)?);
            }
            if let Some(a) = azimuths {
                cfg.view_azimuths = parse_list("cli", "azimuths", a)?;
            }
            if let Some(e) = elevations {
                cfg.view_elevations = parse_list("cli", "elevations", e)?;
            }
        }
        Command::Sweep { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the parsed command and returns its summary line.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = resolve_config(cli)?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(cli.command.name()));
    std::fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::ColormapEval2d { .. } => commands::colormap_eval_2d(&cfg, &out),
        Command::ColormapEval3d { .. } => commands::colormap_eval_3d(&cfg, &cfg.metrics, &out),
        Command::IsovalueSelect { .. } => commands::isovalue_select(&cfg, cfg.k, &out),
        Command::ViewpointEval { .. } => commands::viewpoint_eval(&cfg, &out),
        Command::Sweep { fresh } => commands::sweep(&cfg, *fresh, &out),
    })
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_INTERNAL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["visrecon", "isovalue-select", "--seed", "3", "-k", "5", "--synth-seed", "7"]).unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.seed, cfg.k, cfg.field.synth_seed), (3, 5, Some(7)));
        assert_eq!(cli.command.name(), "isovalue-select");
    }

    #[test]
    fn missing_inputs_are_input_errors() {
        let cli = Cli::try_parse_from(["visrecon", "viewpoint-eval", "--mesh", "/no/such.obj"]).unwrap();
        let e = resolve_config(&cli).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_INPUT);
        let cli = Cli::try_parse_from(["visrecon", "colormap-eval-3d", "--metrics", "luma"]).unwrap();
        assert_eq!(exit_code(&resolve_config(&cli).unwrap_err()), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Png("x".into())), EXIT_INTERNAL);
    }
}
