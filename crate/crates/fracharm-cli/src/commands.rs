//! Subcommand definitions and their mapping onto experiments.

use crate::checks::Outcome;
use crate::config::{ConfigFile, Resolver};
use crate::experiments::*;
use crate::output::write_all;
use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fracharm", version, about = "Experiments for mixed local, nonlocal and Caputo operators")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key = value config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides $FRACHARM_OUT and the config file)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for sampled pairs and dictionaries
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mittag-Leffler curves, eigenproblem residuals and identities
    Figure1 {
        /// right end of the time axis
        #[arg(long)]
        t_max: Option<f64>,
        /// samples per curve
        #[arg(long)]
        points: Option<usize>,
        /// small-t window for the initial slope fit
        #[arg(long)]
        slope_lo: Option<f64>,
        #[arg(long)]
        slope_hi: Option<f64>,
        /// grid points for the eigen residual
        #[arg(long)]
        residual_points: Option<usize>,
        /// Gauss-Jacobi nodes per Caputo integral
        #[arg(long)]
        caputo_nodes: Option<usize>,
    },
    /// Green kernels of the ball and a Dirichlet solve
    Green {
        /// random (x, y) pairs for the recursion fit
        #[arg(long)]
        pairs: Option<usize>,
        /// pairs compared between series and quadrature kernels
        #[arg(long)]
        agree_pairs: Option<usize>,
        /// interior points for the solve residual (0 skips the solve)
        #[arg(long)]
        dirichlet_points: Option<usize>,
    },
    /// First Dirichlet eigenpair of the fractional Laplacian
    Eigen {
        /// fractional order
        #[arg(long)]
        s: Option<f64>,
        /// dimension (1 or 2)
        #[arg(long)]
        n: Option<usize>,
        /// radial basis size
        #[arg(long)]
        basis: Option<usize>,
        /// random test functions for the weak form
        #[arg(long)]
        tests: Option<usize>,
    },
    /// Boundary and initial-time scaling limits
    Asymp {
        /// largest distance on the geometric ladder
        #[arg(long)]
        ladder_hi: Option<f64>,
        /// smallest distance on the ladder
        #[arg(long)]
        ladder_lo: Option<f64>,
        #[arg(long)]
        ladder_points: Option<usize>,
        /// boundary directions probed (n = 2)
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Rank of the jet matrix for the toy operator
    Span {
        /// jet order K
        #[arg(long)]
        k: Option<usize>,
        /// dictionary size as a multiple of K'
        #[arg(long)]
        oversample: Option<usize>,
        /// offset scale ε for block centres and initial points
        #[arg(long)]
        eps: Option<f64>,
        /// blocks whose PDE residual is checked
        #[arg(long)]
        block_checks: Option<usize>,
    },
    /// Approximation ladder for f(x, t) = t
    Approx {
        /// C^ell norm of the error
        #[arg(long)]
        ell: Option<usize>,
        /// comma-separated scales eta
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
        /// offset scale ε for block centres and initial points
        #[arg(long)]
        eps: Option<f64>,
        /// dictionary size as a multiple of K'
        #[arg(long)]
        oversample: Option<usize>,
        /// relative singular-value cutoff
        #[arg(long)]
        rank_tol: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Figure1 { .. } => "figure1",
            Command::Green { .. } => "green",
            Command::Eigen { .. } => "eigen",
            Command::Asymp { .. } => "asymp",
            Command::Span { .. } => "span",
            Command::Approx { .. } => "approx",
        }
    }
}

pub struct RunResult {
    pub outcome: Outcome,
    pub manifest: PathBuf,
}

/// Resolve settings, run the experiments and write the artifacts.
pub fn run(cli: &Cli) -> Result<RunResult> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let r = Resolver::new(&file);
    let seed = r.seed(cli.common.seed)?;
    let dir = r.out_dir(cli.common.out.clone());
    let outcome = execute(&cli.command, &r, seed)?;
    let manifest = write_all(&dir, cli.command.name(), seed, &r.inputs(), &outcome)?;
    Ok(RunResult { outcome, manifest })
}

pub fn execute(cmd: &Command, r: &Resolver, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    match cmd {
        Command::Figure1 { t_max, points, slope_lo, slope_hi, residual_points, caputo_nodes } => {
            let d = Figure1Params::default();
            let p = Figure1Params {
                t_max: r.f64("t_max", *t_max, d.t_max, 1e-3..=5.0)?,
                points: r.usize("points", *points, d.points, 2..=100_000)?,
                slope_lo: r.f64("slope_lo", *slope_lo, d.slope_lo, 1e-14..=1e-2)?,
                slope_hi: r.f64("slope_hi", *slope_hi, d.slope_hi, 1e-14..=1e-2)?,
            };
            if p.slope_lo >= p.slope_hi {
                anyhow::bail!("slope_lo must be below slope_hi");
            }
            let dm = MlEigenParams::default();
            let q = MlEigenParams {
                residual_points: r.usize("residual_points", *residual_points, dm.residual_points, 2..=1000)?,
                caputo_nodes: r.usize("caputo_nodes", *caputo_nodes, dm.caputo_nodes, 8..=512)?,
            };
            out.merge(figure1(&p)?);
            out.merge(ml_eigen(&q)?);
            out.merge(identities()?);
        }
        Command::Green { pairs, agree_pairs, dirichlet_points } => {
            let d = GreenRunParams::default();
            let p = GreenRunParams {
                pairs: r.usize("pairs", *pairs, d.pairs, 1..=10_000_000)?,
                agree_pairs: r.usize("agree_pairs", *agree_pairs, d.agree_pairs, 1..=100_000)?,
                dirichlet_points: r.usize("dirichlet_points", *dirichlet_points, d.dirichlet_points, 0..=50)?,
                seed,
            };
            out.merge(green_kernels(&p)?);
            out.merge(dirichlet_residual(&p)?);
        }
        Command::Eigen { s, n, basis, tests } => {
            let d = EigenRunParams::default();
            let p = EigenRunParams {
                s: r.f64("s", *s, d.s, 0.05..=3.0)?,
                n: r.usize("n", *n, d.n, 1..=2)?,
                basis: r.usize("basis", *basis, d.basis, 4..=40)?,
                tests: r.usize("tests", *tests, d.tests, 0..=10_000)?,
                seed,
            };
            out.merge(eigen(&p)?);
        }
        Command::Asymp { ladder_hi, ladder_lo, ladder_points, directions } => {
            let d = AsympParams::default();
            let p = AsympParams {
                ladder_hi: r.f64("ladder_hi", *ladder_hi, d.ladder_hi, 1e-8..=0.5)?,
                ladder_lo: r.f64("ladder_lo", *ladder_lo, d.ladder_lo, 1e-8..=0.5)?,
                ladder_points: r.usize("ladder_points", *ladder_points, d.ladder_points, 4..=64)?,
                directions: r.usize("directions", *directions, d.directions, 1..=32)?,
            };
            if p.ladder_lo >= p.ladder_hi {
                anyhow::bail!("ladder_lo must be below ladder_hi");
            }
            out.merge(boundary_exponents(&p)?);
            out.merge(boundary_limit(&p)?);
            out.merge(time_scaling()?);
        }
        Command::Span { k, oversample, eps, block_checks } => {
            let d = SpanParams::default();
            let p = SpanParams {
                k: r.usize("k", *k, d.k, 1..=4)?,
                oversample: r.usize("oversample", *oversample, d.oversample, 1..=32)?,
                eps: r.f64("eps", *eps, d.eps, 1e-4..=1.0)?,
                block_checks: r.usize("block_checks", *block_checks, d.block_checks, 0..=1000)?,
                seed,
            };
            out.merge(span(&p)?);
        }
        Command::Approx { ell, etas, eps, oversample, rank_tol } => {
            let d = ApproxParams::default();
            let p = ApproxParams {
                ell: r.usize("ell", *ell, d.ell, 0..=2)?,
                etas: r.f64_list("etas", etas.clone(), &d.etas, 1e-4..=1.0)?,
                eps: r.f64("eps", *eps, d.eps, 1e-3..=2.0)?,
                oversample: r.usize("oversample", *oversample, d.oversample, 1..=32)?,
                rank_tol: r.f64("rank_tol", *rank_tol, d.rank_tol, 1e-15..=1e-4)?,
                seed,
            };
            out.merge(approx(&p)?);
        }
    }
    Ok(out)
}
