//! Default numerical tolerances. Every knob that a caller can override lives
//! in an options struct; these are the values used when nothing is said.

/// Curvature magnitude treated as zero, in 1/length.
pub const KAPPA_TOL: f64 = 1e-10;

/// Minimum number of curvature samples per curve; raised to `64 * M` for
/// curves with `M` harmonics.
pub const KAPPA_SAMPLES: usize = 1024;

/// Width of the parameter bracket at which inflection bisection stops.
pub const KAPPA_BISECT_WIDTH: f64 = 1e-12;

/// Regularity floor on `|a'(tau)|`, relative to the curve size.
pub const REGULARITY_FLOOR: f64 = 1e-12;

/// Grazing threshold: an event with `|v . n| <= EPS_GRAZING * |v|` grazes.
pub const EPS_GRAZING: f64 = 1e-10;

/// Parameter window around the launch point excluded from the next hit.
pub const TAU_WINDOW: f64 = 1e-7;

/// Minimum flight length (relative to the domain diameter) of a valid hit.
pub const S_FLOOR: f64 = 1e-9;

/// Intersection residual target, relative to the domain diameter.
pub const RESIDUAL: f64 = 1e-11;

/// Line-to-curve clearance (relative to the diameter) below which a local
/// extremum of the offset function is certified as a tangency.
pub const TOUCH: f64 = 1e-12;

/// Parameter half-width of the window that identifies an inflection point.
pub const INFLECTION_WINDOW: f64 = 1e-7;

/// Default bounce cap.
pub const BOUNCE_CAP: usize = 1_000_000;

/// Sticky-point tolerance relative to the scene diameter.
pub const STICKY_TOL: f64 = 1e-6;

/// Condition number above which a family of lines counts as near-parallel.
pub const STICKY_CONDITION: f64 = 1e8;

/// Fraction of a concave interval trimmed at each end before launching.
pub const INFLECTION_MARGIN: f64 = 0.01;

/// Floor on the transversality components.
pub const RHO_FLOOR: f64 = 1e-8;

/// Floor on the change-of-variable determinant.
pub const EPS_PRIME: f64 = 1e-8;

/// Base finite-difference step, multiplied by the natural scale of the
/// perturbed variable.
pub const FD_STEP: f64 = 1e-6;

/// Relative tolerance and absolute floor for analytic-vs-finite-difference
/// comparisons.
pub const FD_REL_TOL: f64 = 1e-5;
pub const FD_ABS_FLOOR: f64 = 1e-9;

/// Newton condition number above which the tangency fallback is used.
pub const NEWTON_CONDITION: f64 = 1e8;
