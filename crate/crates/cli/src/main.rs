//! `pspec`: DAE-structured pseudospectra and transient-growth bounds from the
//! command line.
//!
//! Every subcommand prints a JSON summary on stdout and, with `--out`, also
//! writes it (plus CSV dumps and SVG plots as selected by `--format`) into
//! the output directory together with the canonical `config.toml`.
//! Exit codes: 0 success, 2 input error, 3 numerical failure; on failure a
//! JSON error document is printed instead of the summary.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dae_pspec::io::{self, ErrorDocument, MuPolicy, OutputFormat, RunConfig};
use dae_pspec::pseudospectra::FieldKind;
use dae_pspec::{Error, Execution, Result};

#[derive(Parser, Debug)]
#[command(name = "pspec", version, about = "Pseudospectra and transient growth of DAE matrix pencils")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each overrides the matching field of
/// `--config` when given.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix Market file holding A.
    #[arg(long = "A", value_name = "PATH")]
    a: Option<PathBuf>,
    /// Matrix Market file holding E.
    #[arg(long = "E", value_name = "PATH")]
    e: Option<PathBuf>,
    /// Hermitian positive definite weight H of the norm ||x||_H.
    #[arg(long = "H", value_name = "PATH")]
    h: Option<PathBuf>,
    /// `auto` or `RE,IM`.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Number of infinite eigenvalues, overriding detection.
    #[arg(long)]
    d: Option<usize>,
    /// `re0,re1,im0,im1,nx,ny`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma-separated epsilon levels.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    nt: Option<usize>,
    /// Projection subspace dimension.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if self.a.is_some() {
            cfg.a = self.a.clone();
        }
        if self.e.is_some() {
            cfg.e = self.e.clone();
        }
        if self.h.is_some() {
            cfg.h = self.h.clone();
        }
        if let Some(m) = &self.mu {
            cfg.mu = m.parse::<MuPolicy>()?;
        }
        if self.d.is_some() {
            cfg.d = self.d;
        }
        if let Some(g) = &self.grid {
            cfg.grid = Some(io::parse_grid(g)?);
        }
        if let Some(e) = &self.eps {
            cfg.eps = io::parse_f64_list(e)?;
        }
        if let Some(t) = self.tmax {
            cfg.tmax = t;
        }
        if let Some(n) = self.nt {
            cfg.nt = n;
        }
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if let Some(f) = &self.format {
            cfg.formats = f.split(',').map(str::parse::<OutputFormat>).collect::<Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ordered Schur split: d, index, shift and finite spectrum.
    Decompose(Common),
    /// Field sigma_min(zI - M) on a grid (or a classical pencil field).
    Grid {
        #[command(flatten)]
        common: Common,
        /// dae, gen1 or ruhe.
        #[arg(long, default_value = "dae")]
        kind: FieldKind,
    },
    /// Level curves of the field at every epsilon.
    Contours(Common),
    /// Numerical range boundary and numerical abscissa.
    Nr {
        #[command(flatten)]
        common: Common,
        /// Number of boundary directions.
        #[arg(long, default_value_t = 256)]
        directions: usize,
    },
    /// Pseudospectral abscissa for every epsilon.
    Abscissa(Common),
    /// Kreiss constant sup alpha_eps / eps.
    Kreiss(Common),
    /// Lower and upper bounds on ||e^{tM}|| over the time grid.
    Bounds(Common),
    /// Realized growth: ||e^{tM}||, its peak and the worst initial state.
    Transient(Common),
    /// Difference equation E x_{k+1} = A x_k: power norms and pseudospectral radii.
    Discrete {
        #[command(flatten)]
        common: Common,
        /// Largest power k.
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Fields of (A, E) and of row-transformed pencils (TA, TE).
    Compare {
        #[command(flatten)]
        common: Common,
        /// Matrix Market file of an invertible row transform T (repeatable).
        #[arg(long = "T", value_name = "PATH")]
        transforms: Vec<PathBuf>,
    },
    /// Krylov–Schur projection onto k dominant finite modes.
    Project(Common),
    /// Write a seeded saddle-point pencil as A.mtx and E.mtx.
    GenSaddle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nv: usize,
        #[arg(long)]
        np: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
    },
}

/// Apply `PSPEC_THREADS` to the global pool.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("PSPEC_THREADS must be a positive integer, got '{v}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let exec = Execution::default();
    let (cfg, output) = match cli.command {
        Command::Decompose(c) => {
            let cfg = c.resolve()?;
            let o = commands::decompose(&cfg)?;
            (cfg, o)
        }
        Command::Grid { common, kind } => {
            let cfg = common.resolve()?;
            let o = commands::grid(&cfg, kind, exec)?;
            (cfg, o)
        }
        Command::Contours(c) => {
            let cfg = c.resolve()?;
            let o = commands::contours(&cfg, exec)?;
            (cfg, o)
        }
        Command::Nr { common, directions } => {
            let cfg = common.resolve()?;
            let o = commands::numerical_range(&cfg, directions)?;
            (cfg, o)
        }
        Command::Abscissa(c) => {
            let cfg = c.resolve()?;
            let o = commands::abscissa(&cfg, exec)?;
            (cfg, o)
        }
        Command::Kreiss(c) => {
            let cfg = c.resolve()?;
            let o = commands::kreiss(&cfg, exec)?;
            (cfg, o)
        }
        Command::Bounds(c) => {
            let cfg = c.resolve()?;
            let o = commands::bounds(&cfg, exec)?;
            (cfg, o)
        }
        Command::Transient(c) => {
            let cfg = c.resolve()?;
            let o = commands::transient(&cfg, exec)?;
            (cfg, o)
        }
        Command::Discrete { common, steps } => {
            let cfg = common.resolve()?;
            let o = commands::discrete(&cfg, steps, exec)?;
            (cfg, o)
        }
        Command::Compare { common, transforms } => {
            let cfg = common.resolve()?;
            let o = commands::compare(&cfg, &transforms, exec)?;
            (cfg, o)
        }
        Command::Project(c) => {
            let cfg = c.resolve()?;
            let o = commands::project(&cfg, exec)?;
            (cfg, o)
        }
        Command::GenSaddle { common, nv, np, density } => {
            let cfg = common.resolve()?;
            let o = commands::gen_saddle(&cfg, nv, np, density)?;
            (cfg, o)
        }
    };
    output.emit(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = ErrorDocument::new(&e);
            eprintln!("pspec: {e}");
            match io::to_json(&doc) {
                Ok(s) => print!("{s}"),
                Err(_) => println!("{{\"error\":{{\"message\":\"{e}\"}}}}"),
            }
            ExitCode::from(doc.error.exit_code as u8)
        }
    }
}
