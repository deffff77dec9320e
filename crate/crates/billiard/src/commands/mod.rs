//! Subcommand implementations. Each returns whether its checks passed and
//! the options it resolved, for the manifest.

mod geometry;
pub mod jacobian;
mod kinetic;
mod sticky;

use std::sync::Arc;
use std::time::Instant;

use billiard_core::geometry::GeometryError;
use billiard_core::grazing::GrazingError;
use billiard_core::jacobians::JacobianError;
use billiard_core::kinetic::KineticError;
use billiard_core::trajectory::{TraceError, TraceOptions};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cli::{Cli, Command, GlobalArgs, JacobianCommand, KineticCommand, StickyCommand};
use crate::manifest::{sha256_hex, RunManifest};
use crate::output::Outputs;
use crate::scene::{parse_scene_str, Scene, SceneError, ToleranceSettings, TraceSettings};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Jacobian(#[from] JacobianError),
    #[error(transparent)]
    Grazing(#[from] GrazingError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot start worker threads: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CommandError {
    /// Stable identifier printed with the message.
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::Scene(SceneError::Parse { .. }) => "scene-parse",
            CommandError::Scene(SceneError::Validation(_)) => "scene-invalid",
            CommandError::Scene(SceneError::Io(_)) => "scene-io",
            CommandError::Usage(_) => "usage",
            CommandError::Io(_) => "io",
            CommandError::Csv(_) => "csv",
            CommandError::Trace(_) => "trace",
            CommandError::Jacobian(_) => "jacobian",
            CommandError::Grazing(_) => "grazing",
            CommandError::Kinetic(_) => "kinetic",
            CommandError::Geometry(_) => "geometry",
            CommandError::Threads(_) => "threads",
        }
    }
}

/// Check result and resolved command options.
pub struct Outcome {
    pub passed: bool,
    pub options: Value,
}

impl Outcome {
    fn new(passed: bool, options: impl serde::Serialize) -> Self {
        Self { passed, options: serde_json::to_value(options).unwrap_or(Value::Null) }
    }
}

pub struct Context<'a> {
    pub global: &'a GlobalArgs,
    scene: Option<Arc<Scene>>,
    pub out: Outputs,
    pub(crate) pool: rayon::ThreadPool,
}

impl Context<'_> {
    pub fn scene(&self) -> Result<Arc<Scene>, CommandError> {
        self.scene.clone().ok_or_else(|| CommandError::Usage("this command needs --scene".into()))
    }

    pub fn seed(&self) -> u64 {
        self.global.seed.or(self.scene.as_ref().map(|s| s.config.seed)).unwrap_or(0)
    }

    /// Scene trace settings with the command-line overrides applied.
    pub fn trace_settings(&self) -> TraceSettings {
        let mut t = self.scene.as_ref().map(|s| s.config.trace.clone()).unwrap_or_default();
        if let Some(h) = self.global.horizon_time {
            t.horizon_time = Some(h);
            t.horizon_length = None;
        }
        if let Some(l) = self.global.horizon_length {
            t.horizon_length = Some(l);
            t.horizon_time = None;
        }
        if let Some(e) = self.global.eps_grazing {
            t.eps_grazing = e;
        }
        if let Some(c) = self.global.bounce_cap {
            t.bounce_cap = c;
        }
        t
    }

    pub fn trace_options(&self) -> TraceOptions {
        self.trace_settings().options()
    }

    pub fn tolerances(&self) -> ToleranceSettings {
        self.scene.as_ref().map(|s| s.config.tolerances.clone()).unwrap_or_default()
    }

    /// Maps `f` over `items` on the worker pool, keeping input order.
    pub fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        use rayon::prelude::*;
        self.pool.install(|| items.par_iter().map(&f).collect())
    }
}

fn dispatch(cli: &Cli, ctx: &mut Context) -> Result<Outcome, CommandError> {
    match &cli.command {
        Command::Classify => geometry::classify(ctx),
        Command::Trace(a) => geometry::trace(ctx, a),
        Command::Count(a) => geometry::count(ctx, a),
        Command::Atlas(a) => geometry::atlas(ctx, a),
        Command::Sticky(StickyCommand::Build(a)) => sticky::build(ctx, a),
        Command::Sticky(StickyCommand::Detect(a)) => sticky::detect(ctx, a),
        Command::Jacobian(JacobianCommand::Check(a)) => jacobian::check(ctx, a),
        Command::Jacobian(JacobianCommand::Det(a)) => jacobian::det(ctx, a),
        Command::Jacobian(JacobianCommand::Chain(a)) => jacobian::chain(ctx, a),
        Command::CovCheck(a) => jacobian::cov_check(ctx, a),
        Command::Kinetic(KineticCommand::Conserve(a)) => kinetic::conserve(ctx, a),
        Command::Kinetic(KineticCommand::Decay(a)) => kinetic::decay(ctx, a),
        Command::Kinetic(KineticCommand::Duhamel(a)) => kinetic::duhamel(ctx, a),
    }
}

/// Runs one command and writes its manifest. `Ok(false)` means a check
/// failed; the outputs are still complete.
pub fn run(cli: &Cli) -> Result<bool, CommandError> {
    let start = Instant::now();
    let global = &cli.global;
    let out = Outputs::new(&global.out)?;
    let mut manifest = RunManifest {
        command: cli.command.name().to_owned(),
        scene: global.scene.as_ref().map(|p| p.display().to_string()),
        scene_hash: None,
        options: Value::Null,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        wall_time_s: 0.0,
        outputs: Vec::new(),
        status: "error".into(),
    };
    let result = (|| {
        let scene = match &global.scene {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(SceneError::Io)?;
                manifest.scene_hash = Some(sha256_hex(&bytes));
                let text =
                    String::from_utf8(bytes).map_err(|_| SceneError::Validation("scene file is not UTF-8".into()))?;
                Some(Arc::new(parse_scene_str(&text)?.build()?))
            }
            None => None,
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(global.threads.unwrap_or(0)).build()?;
        let mut ctx = Context { global, scene, out, pool };
        let outcome = dispatch(cli, &mut ctx);
        manifest.outputs = ctx.out.written().to_vec();
        manifest.options = json!({
            "global": global,
            "seed": ctx.seed(),
            "scene": ctx.scene.as_ref().map(|s| s.config.clone()),
            "trace": ctx.trace_settings(),
            "tolerances": ctx.tolerances(),
            "command": outcome.as_ref().map(|o| o.options.clone()).unwrap_or(Value::Null),
        });
        outcome
    })();
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.status = match &result {
        Ok(o) if o.passed => "pass",
        Ok(_) => "fail",
        Err(_) => "error",
    }
    .into();
    manifest.write(&global.out)?;
    result.map(|o| o.passed)
}
