//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "billiard", version, about = "Specular billiards in non-convex cylinders")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Scene file.
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scene seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Stop tracing after this much time
    #[arg(long, global = true, conflicts_with = "horizon_length")]
    pub horizon_time: Option<f64>,
    /// Stop tracing after this much cross-section path length
    #[arg(long, global = true)]
    pub horizon_length: Option<f64>,
    /// Incidence below which a hit counts as grazing
    #[arg(long, global = true)]
    pub eps_grazing: Option<f64>,
    /// Maximum bounces per trajectory
    #[arg(long, global = true)]
    pub bounce_cap: Option<usize>,
    /// Grid resolution `NxM`.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "BILLIARD_THREADS")]
    pub threads: Option<usize>,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let n = a.trim().parse::<usize>().map_err(|e| format!("bad grid `{s}`: {e}"))?;
    let m = b.trim().parse::<usize>().map_err(|e| format!("bad grid `{s}`: {e}"))?;
    if n == 0 || m == 0 {
        return Err(format!("grid dimensions must be positive, got `{s}`"));
    }
    Ok((n, m))
}

pub fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("`{s}`: {e}"))?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(s)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_list::<2>(s)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Concave, convex and inflection pieces of every boundary curve.
    Classify,
    /// Bounce sequence of one trajectory.
    Trace(TraceArgs),
    /// Bounce counts over a grid of positions and directions.
    Count(CountArgs),
    /// Sticky grazing points: the worked example and detection
    #[command(subcommand)]
    Sticky(StickyCommand),
    /// Backward rays launched tangentially from every inflection point.
    Atlas(AtlasArgs),
    /// Bounce-map derivatives and determinants against finite differences
    #[command(subcommand)]
    Jacobian(JacobianCommand),
    /// Change-of-variable determinant over a sweep of velocities and times.
    CovCheck(CovArgs),
    /// Particle transport and linear kinetic solvers
    #[command(subcommand)]
    Kinetic(KineticCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Trace(_) => "trace",
            Command::Count(_) => "count",
            Command::Sticky(StickyCommand::Build(_)) => "sticky build",
            Command::Sticky(StickyCommand::Detect(_)) => "sticky detect",
            Command::Atlas(_) => "atlas",
            Command::Jacobian(JacobianCommand::Check(_)) => "jacobian check",
            Command::Jacobian(JacobianCommand::Det(_)) => "jacobian det",
            Command::Jacobian(JacobianCommand::Chain(_)) => "jacobian chain",
            Command::CovCheck(_) => "cov-check",
            Command::Kinetic(KineticCommand::Conserve(_)) => "kinetic conserve",
            Command::Kinetic(KineticCommand::Decay(_)) => "kinetic decay",
            Command::Kinetic(KineticCommand::Duhamel(_)) => "kinetic duhamel",
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TraceArgs {
    /// Start `x1,x2,x3` with `x2` axial.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub position: [f64; 3],
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub velocity: [f64; 3],
    /// Trace backward in time regardless of the scene.
    #[arg(long)]
    pub backward: bool,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CountArgs {
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

#[derive(Debug, Subcommand)]
pub enum StickyCommand {
    /// Build the parabola example and test its family for concurrence.
    Build(StickyBuildArgs),
    /// Tangent launch families from every concave interval of the scene.
    Detect(StickyDetectArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct StickyBuildArgs {
    #[arg(long, default_value_t = 0.05)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Integrate the arc from `X(0) = x0` instead of taking the envelope.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct StickyDetectArgs {
    /// Bounce whose chords are tested.
    #[arg(long, default_value_t = 1)]
    pub bounce: usize,
    /// Launches per concave interval.
    #[arg(long, default_value_t = 64)]
    pub launches: usize,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AtlasArgs {
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Path length per ray; defaults to twice the diameter.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum JacobianCommand {
    /// Every bounce-map derivative against finite differences.
    Check(CorpusArgs),
    /// Per-bounce determinants.
    Det(CorpusArgs),
    /// Chained determinants against their closed forms.
    Chain(CorpusArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CorpusArgs {
    /// Sampled phases.
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
    /// Non-grazing bounces per phase.
    #[arg(long, default_value_t = 3)]
    pub bounces: usize,
    /// Minimum `|v . n| / |v|` at every bounce.
    #[arg(long, default_value_t = 0.1)]
    pub min_incidence: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CovArgs {
    /// Sampled base phases.
    #[arg(long, default_value_t = 4)]
    pub phases: usize,
    /// Time `s` before the phase time.
    #[arg(long, default_value_t = 0.2)]
    pub lag: f64,
    /// `s'` ranges over `(s - span, s)`.
    #[arg(long, default_value_t = 3.0)]
    pub span: f64,
    /// Cross-section speed of `u`.
    #[arg(long, default_value_t = 0.8)]
    pub speed: f64,
    /// Axial component of `u`.
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub axial: f64,
}

#[derive(Debug, Subcommand)]
pub enum KineticCommand {
    /// Free transport of a sampled ensemble with conservation diagnostics.
    Conserve(ConserveArgs),
    /// Gain-free relaxation along characteristics.
    Decay(KineticArgs),
    /// Picard iteration of the gain model against explicit stepping.
    Duhamel(DuhamelArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisChoice {
    Detect,
    Origin,
    Off,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ConserveArgs {
    #[arg(long, default_value_t = 10_000)]
    pub particles: usize,
    #[arg(long, default_value_t = 2000.0)]
    pub duration: f64,
    /// Cross-section speed band `lo,hi` of the sampled Maxwellian.
    #[arg(long, value_parser = parse_pair, default_value = "1,1.5")]
    pub band: [f64; 2],
    /// Centre for the angular momentum: detected axis, the origin, or none.
    #[arg(long, value_enum, default_value_t = AxisChoice::Detect)]
    pub axis: AxisChoice,
    /// Also write the initial and final ensembles.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialChoice {
    Constant,
    Maxwellian,
    Tilted,
    Swirl,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct KineticArgs {
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long, default_value_t = 2)]
    pub speeds: usize,
    #[arg(long, value_parser = parse_pair, default_value = "0.1,0.3")]
    pub band: [f64; 2],
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub nu0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value_t = InitialChoice::Maxwellian)]
    pub initial: InitialChoice,
    /// Constant value or perturbation amplitude of the initial datum.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DuhamelArgs {
    #[command(flatten)]
    pub grid: KineticArgs,
    #[arg(long, default_value_t = 8)]
    pub iterations: usize,
    /// CFL number of the reference stepper.
    #[arg(long, default_value_t = 0.2)]
    pub cfl: f64,
    /// Relative sup-norm tolerance against the reference.
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
}
