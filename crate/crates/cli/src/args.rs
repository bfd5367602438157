use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueHint};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "pshkit",
    version,
    about = "Envelopes, strict approximation and hulls for plurisubharmonic-type subequations on grids"
)]
pub struct Cli {
    /// File of `key=value` lines (keys are long flag names); flags win
    #[arg(long, global = true, value_hint = ValueHint::FilePath)]
    pub config: Option<PathBuf>,
    /// Also write the JSON-lines report to this file
    #[arg(long, global = true, value_hint = ValueHint::FilePath)]
    pub log: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = ".", value_hint = ValueHint::DirPath)]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Largest subharmonic minorant of an obstacle
    Envelope(EnvelopeArgs),
    /// Exhaustion-based strict approximation sequence
    Approximate(ApproximateArgs),
    /// Hull of a compact lattice set
    Hull(HullArgs),
    /// Monotonicity, membership and comparison audits
    AuditJet(AuditJetArgs),
    /// Duality, positivity and nesting audits of a spec
    AuditSpec(AuditSpecArgs),
    /// Strictify a field against an exhaustion and optionally mollify it
    Smooth(SmoothArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    /// Sup-norm residual at which iteration stops
    #[arg(long)]
    pub tol: Option<f64>,
    /// Complex directions (or frames) per point
    #[arg(long)]
    pub directions: Option<usize>,
    /// Samples per circle
    #[arg(long)]
    pub circle_samples: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// `sor` or `jacobi`
    #[arg(long)]
    pub iteration: Option<String>,
    /// Fixed SOR relaxation factor
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnvelopeArgs {
    /// Mask file; must match the obstacle's lattice and mask
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub grid: Option<PathBuf>,
    /// Obstacle field
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub g: Option<PathBuf>,
    /// Boundary data (defaults to the obstacle)
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub phi: Option<PathBuf>,
    #[arg(long, default_value = "psh")]
    pub spec: String,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ApproximateArgs {
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub u: Option<PathBuf>,
    /// Strictly subharmonic exhaustion
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub rho: Option<PathBuf>,
    #[arg(long, default_value = "psh")]
    pub spec: String,
    /// Comma-separated slopes
    #[arg(long, default_value = "1,2,3,4,5")]
    pub k: String,
    /// Comma-separated strictification parameters (default 0.5·2^-j)
    #[arg(long)]
    pub eps: Option<String>,
    /// Mask file whose Interior points form the compact reporting set
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub compact: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub audit_tol: f64,
    /// Slack of the strictness audit (default c1 h² + c2/D)
    #[arg(long)]
    pub strict_slack: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub ladder_step: f64,
    /// Only build the convex reparametrisation of the `t ψ` samples in this file
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub chi_samples: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HullArgs {
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub grid: Option<PathBuf>,
    /// Mask file on the grid's lattice; its Interior points form K
    #[arg(long = "K", value_hint = ValueHint::FilePath)]
    pub k: Option<PathBuf>,
    #[arg(long, default_value = "psh")]
    pub spec: String,
    #[arg(long, default_value_t = pshkit_core::hull::DEFAULT_THETA)]
    pub theta: f64,
    /// `radial`: compare with the extremal function of a centred ball
    #[arg(long)]
    pub oracle: Option<String>,
    /// Radius of the ball domain assumed by the radial oracle
    #[arg(long, default_value_t = 1.0)]
    pub oracle_radius: f64,
    #[arg(long, default_value_t = 0.05)]
    pub oracle_tol: f64,
    /// Also compare with the hull of the strictified smoothed family
    #[arg(long)]
    pub agreement: bool,
    /// Exhaustion for the agreement run (default |x|² − max |x|²)
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub rho: Option<PathBuf>,
    /// Smoothing radius (default 8h)
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Width of the excluded collar (default 8h)
    #[arg(long)]
    pub collar: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AuditSpecArgs {
    #[arg(long)]
    pub spec: Option<String>,
    /// Complex dimension (taken from --grid when given)
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Jets with |margin| at most this are left out of the double-dual check
    #[arg(long, default_value_t = 1e-6)]
    pub tau: f64,
    /// Check Σ_{m+1} ⊆ Σ_m for all m < n
    #[arg(long)]
    pub nesting: bool,
    /// Check that the cone equals its dual on samples
    #[arg(long)]
    pub self_dual: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AuditJetArgs {
    #[arg(long)]
    pub spec: Option<String>,
    /// Monotonicity cone M in F + M ⊆ F (defaults to --spec)
    #[arg(long)]
    pub cone: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Jet `r; p1 p2 …; a11 a12 … (row-major)` whose margin is reported
    #[arg(long)]
    pub jet: Option<String>,
    /// Random (u, v) pairs for the comparison check (needs --grid)
    #[arg(long, default_value_t = 0)]
    pub pairs: usize,
    /// Tolerance of the subharmonicity audits of the pairs
    #[arg(long, default_value_t = 1e-8)]
    pub ctol: f64,
    /// Tolerance of max_Int(u + v) ≤ max_∂(u + v)
    #[arg(long, default_value_t = 1e-6)]
    pub comparison_tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SmoothArgs {
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub u: Option<PathBuf>,
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub rho: Option<PathBuf>,
    #[arg(long, default_value = "psh")]
    pub spec: String,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Mask file whose Interior points are audited (default all Interior)
    #[arg(long, value_hint = ValueHint::FilePath)]
    pub compact: Option<PathBuf>,
    /// Mollifier radius; without it the field is only strictified
    #[arg(long)]
    pub radius: Option<f64>,
    /// Allowed shortfall of the strictness audit below ε·c₀ (default c1 h² + c2/D)
    #[arg(long)]
    pub strict_slack: Option<f64>,
}
