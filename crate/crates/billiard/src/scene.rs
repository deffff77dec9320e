//! Scene files: line-oriented `[section]` headers and `key = value` pairs.
//!
//! ```text
//! seed = 7
//!
//! [domain]
//! kind = annulus
//! r_out = 1.0
//! r_in = 0.3
//! height = 2.0
//!
//! [trace]
//! direction = backward
//! horizon_length = 10
//! ```
//!
//! Values are numbers, bare words, or bracketed comma-separated numbers.
//! `#` starts a comment. Sandbox arcs come from repeated `[arc]` sections
//! and Fourier holes from repeated `[hole]` sections.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use billiard_core::geometry::{AnalyticCurve, Domain, GeometryError, GraphSide, Orientation};
use billiard_core::grazing::{build_sticky_example, ArcConstruction, StickyExample};
use billiard_core::tolerances;
use billiard_core::trajectory::{Direction, Horizon, TraceOptions};
use billiard_core::Vec2;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("cannot read scene: {0}")]
    Io(#[from] std::io::Error),
}

impl SceneError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self::Parse { line, column, message: message.into() }
    }
}

impl From<GeometryError> for SceneError {
    fn from(e: GeometryError) -> Self {
        Self::Validation(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Number(f64),
    Word(String),
    List(Vec<f64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(_) => f.write_str("a number"),
            Value::Word(_) => f.write_str("a word"),
            Value::List(_) => f.write_str("a list"),
        }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: Value,
    line: usize,
    column: usize,
}

/// Key-value pairs of one section, consumed as they are read so leftovers
/// can be reported as unknown.
#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, (usize, Entry)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key).map(|(_, e)| e)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, SceneError> {
        match self.take(key) {
            None => Ok(None),
            Some(Entry { value: Value::Number(x), .. }) => Ok(Some(x)),
            Some(e) => Err(SceneError::at(e.line, e.column, format!("`{key}` expects a number, found {}", e.value))),
        }
    }

    fn required(&mut self, key: &str) -> Result<f64, SceneError> {
        self.number(key)?.ok_or_else(|| SceneError::at(self.line, 1, format!("[{}] needs `{key}`", self.name)))
    }

    fn count(&mut self, key: &str) -> Result<Option<u64>, SceneError> {
        let line = self.entries.get(key).map(|(_, e)| (e.line, e.column));
        match self.number(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(Some(x as u64)),
            Some(_) => {
                let (l, c) = line.unwrap_or((self.line, 1));
                Err(SceneError::at(l, c, format!("`{key}` expects a non-negative integer")))
            }
        }
    }

    fn word(&mut self, key: &str) -> Result<Option<(String, usize, usize)>, SceneError> {
        match self.take(key) {
            None => Ok(None),
            Some(Entry { value: Value::Word(w), line, column }) => Ok(Some((w, line, column))),
            Some(e) => Err(SceneError::at(e.line, e.column, format!("`{key}` expects a word, found {}", e.value))),
        }
    }

    fn list(&mut self, key: &str, len: Option<usize>) -> Result<Option<Vec<f64>>, SceneError> {
        match self.take(key) {
            None => Ok(None),
            Some(Entry { value: Value::List(v), line, column }) => match len {
                Some(n) if v.len() != n => {
                    Err(SceneError::at(line, column, format!("`{key}` expects {n} values, found {}", v.len())))
                }
                _ => Ok(Some(v)),
            },
            Some(e) => Err(SceneError::at(e.line, e.column, format!("`{key}` expects a list, found {}", e.value))),
        }
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>, SceneError> {
        Ok(self.list(key, Some(2))?.map(|v| (v[0], v[1])))
    }

    /// Fails on the first key nobody asked for.
    fn finish(self) -> Result<(), SceneError> {
        match self.entries.into_iter().min_by_key(|(_, (order, _))| *order) {
            None => Ok(()),
            Some((key, (_, e))) => {
                Err(SceneError::at(e.line, e.column, format!("unknown key `{key}` in [{}]", self.name)))
            }
        }
    }
}

fn parse_value(text: &str, line: usize, column: usize) -> Result<Value, SceneError> {
    if let Some(rest) = text.strip_prefix('[') {
        let inner =
            rest.strip_suffix(']').ok_or_else(|| SceneError::at(line, column + text.len(), "unterminated list"))?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let mut offset = column + 1;
        let mut out = Vec::new();
        for item in inner.split(',') {
            let lead = item.len() - item.trim_start().len();
            let item_col = offset + lead;
            let t = item.trim();
            out.push(t.parse::<f64>().map_err(|_| SceneError::at(line, item_col, format!("`{t}` is not a number")))?);
            offset += item.len() + 1;
        }
        return Ok(Value::List(out));
    }
    if text.ends_with(']') {
        return Err(SceneError::at(line, column, "list is missing its opening `[`"));
    }
    let starts_numeric = text.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.');
    if starts_numeric {
        return text
            .parse::<f64>()
            .map(Value::Number)
            .map_err(|_| SceneError::at(line, column, format!("`{text}` is not a number")));
    }
    if text.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        Ok(Value::Word(text.to_owned()))
    } else {
        Err(SceneError::at(line, column, format!("cannot read value `{text}`")))
    }
}

const SECTIONS: [&str; 5] = ["domain", "trace", "tolerances", "arc", "hole"];

fn split_sections(text: &str) -> Result<(Section, Vec<Section>), SceneError> {
    let mut prologue = Section { name: "top level".into(), line: 1, entries: BTreeMap::new() };
    let mut sections: Vec<Section> = Vec::new();
    let mut order = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            if trimmed.contains('=') {
                return Err(SceneError::at(line, indent + 1, "expected `[section]` or `key = value`"));
            }
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| SceneError::at(line, indent + trimmed.len() + 1, "section header is missing `]`"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(SceneError::at(line, indent + 2, format!("unknown section [{name}]")));
            }
            let repeatable = matches!(name, "arc" | "hole");
            if !repeatable && sections.iter().any(|s| s.name == name) {
                return Err(SceneError::at(line, indent + 2, format!("section [{name}] appears twice")));
            }
            sections.push(Section { name: name.to_owned(), line, entries: BTreeMap::new() });
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(SceneError::at(line, indent + 1, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(SceneError::at(line, indent + 1, format!("invalid key `{key}`")));
        }
        let raw_value = &content[eq + 1..];
        let value_text = raw_value.trim();
        let value_col = eq + 2 + (raw_value.len() - raw_value.trim_start().len());
        if value_text.is_empty() {
            return Err(SceneError::at(line, value_col, format!("`{key}` has no value")));
        }
        let value = parse_value(value_text, line, value_col)?;
        let target = sections.last_mut().unwrap_or(&mut prologue);
        let entry = Entry { value, line, column: indent + 1 };
        if target.entries.insert(key.to_owned(), (order, entry)).is_some() {
            return Err(SceneError::at(line, indent + 1, format!("duplicate key `{key}`")));
        }
        order += 1;
    }
    Ok((prologue, sections))
}

/// One closed Fourier curve: `a0 + sum cos_m cos(m tau) + sin_m sin(m tau)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierSpec {
    pub center: (f64, f64),
    pub cos_x: Vec<f64>,
    pub cos_y: Vec<f64>,
    pub sin_x: Vec<f64>,
    pub sin_y: Vec<f64>,
}

impl FourierSpec {
    fn read(s: &mut Section) -> Result<Self, SceneError> {
        let line = s.line;
        let mut list =
            |k: &str| s.list(k, None)?.ok_or_else(|| SceneError::at(line, 1, format!("Fourier curve needs `{k}`")));
        let (cos_x, cos_y, sin_x, sin_y) = (list("cos_x")?, list("cos_y")?, list("sin_x")?, list("sin_y")?);
        let center = s.pair("center")?.unwrap_or((0.0, 0.0));
        let m = cos_x.len();
        if [cos_y.len(), sin_x.len(), sin_y.len()].iter().any(|&n| n != m) {
            return Err(SceneError::at(line, 1, "Fourier lists must all have the same length"));
        }
        Ok(Self { center, cos_x, cos_y, sin_x, sin_y })
    }

    pub fn curve(&self, orientation: Orientation) -> Result<AnalyticCurve, GeometryError> {
        let zip = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(&a, &b)| Vec2::new(a, b)).collect();
        AnalyticCurve::fourier(
            Vec2::new(self.center.0, self.center.1),
            zip(&self.cos_x, &self.cos_y),
            zip(&self.sin_x, &self.sin_y),
            orientation,
        )
    }
}

/// Polynomial graph arc `y = sum c_i x^i` over `range`, with the domain on
/// `side`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArcSpec {
    pub coeffs: Vec<f64>,
    pub range: (f64, f64),
    pub above: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    Disk {
        radius: f64,
    },
    Annulus {
        r_out: f64,
        r_in: f64,
    },
    #[serde(rename = "polar-cos3")]
    Polar {
        amplitude: f64,
        lobes: usize,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Fourier {
        outer: FourierSpec,
        holes: Vec<FourierSpec>,
    },
    Sandbox {
        arcs: Vec<ArcSpec>,
    },
    /// The parabola scene with a sticky arc; `x0` selects integration from
    /// `X(0) = x0` instead of the envelope.
    StickyParabola {
        delta_max: f64,
        samples: usize,
        x0: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceDirection {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSettings {
    pub direction: TraceDirection,
    pub horizon_time: Option<f64>,
    pub horizon_length: Option<f64>,
    pub eps_grazing: f64,
    pub bounce_cap: usize,
    pub band: Option<(f64, f64)>,
}

impl Default for TraceSettings {
    fn default() -> Self {
        let d = TraceOptions::default();
        Self {
            direction: TraceDirection::Forward,
            horizon_time: None,
            horizon_length: None,
            eps_grazing: d.eps_grazing,
            bounce_cap: d.bounce_cap,
            band: None,
        }
    }
}

impl TraceSettings {
    pub fn horizon(&self) -> Horizon {
        match (self.horizon_time, self.horizon_length) {
            (Some(t), _) => Horizon::Time(t),
            (None, Some(l)) => Horizon::Length(l),
            (None, None) => Horizon::Unbounded,
        }
    }

    pub fn options(&self) -> TraceOptions {
        let mut o = match self.direction {
            TraceDirection::Forward => TraceOptions::forward(),
            TraceDirection::Backward => TraceOptions::backward(),
        };
        o.eps_grazing = self.eps_grazing;
        o.bounce_cap = self.bounce_cap;
        if let Some(b) = self.band {
            o.speed_band = b;
        }
        o.with_horizon(self.horizon())
    }

    pub fn direction(&self) -> Direction {
        self.options().direction
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceSettings {
    pub sticky_tol: f64,
    pub fd_step: f64,
    pub fd_rel_tol: f64,
    pub eps_prime: f64,
    pub delta2: f64,
    pub cov_window: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self {
            sticky_tol: tolerances::STICKY_TOL,
            fd_step: tolerances::FD_STEP,
            fd_rel_tol: tolerances::FD_REL_TOL,
            eps_prime: tolerances::EPS_PRIME,
            delta2: 1e-3,
            cov_window: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneConfig {
    pub domain: DomainSpec,
    /// Axial period `H`.
    pub height: f64,
    pub seed: u64,
    pub trace: TraceSettings,
    pub tolerances: ToleranceSettings,
}

/// A built scene; `sticky` is set for the sticky parabola.
#[derive(Clone, Debug)]
pub struct Scene {
    pub config: SceneConfig,
    pub domain: Domain,
    pub sticky: Option<StickyExample>,
}

pub fn parse_scene(path: &Path) -> Result<SceneConfig, SceneError> {
    parse_scene_str(&std::fs::read_to_string(path)?)
}

pub fn parse_scene_str(text: &str) -> Result<SceneConfig, SceneError> {
    let (mut top, sections) = split_sections(text)?;
    let seed = top.count("seed")?.unwrap_or(0);
    top.finish()?;

    let mut domain_section = None;
    let mut trace = TraceSettings::default();
    let mut tol = ToleranceSettings::default();
    let (mut arcs, mut holes) = (Vec::new(), Vec::new());
    for mut s in sections {
        match s.name.as_str() {
            "domain" => {
                domain_section = Some(s);
                continue;
            }
            "trace" => read_trace(&mut s, &mut trace)?,
            "tolerances" => read_tolerances(&mut s, &mut tol)?,
            "arc" => arcs.push(read_arc(&mut s)?),
            "hole" => holes.push((s.line, FourierSpec::read(&mut s)?)),
            _ => unreachable!("section names are checked while splitting"),
        }
        s.finish()?;
    }
    let mut d = domain_section.ok_or_else(|| SceneError::at(1, 1, "scene has no [domain] section"))?;
    let (kind, kl, kc) = d.word("kind")?.ok_or_else(|| SceneError::at(d.line, 1, "[domain] needs `kind`"))?;
    let height = d.number("height")?.unwrap_or(1.0);
    let domain = match kind.as_str() {
        "disk" => DomainSpec::Disk { radius: d.required("radius")? },
        "annulus" => DomainSpec::Annulus { r_out: d.required("r_out")?, r_in: d.required("r_in")? },
        "polar-cos3" => {
            DomainSpec::Polar { amplitude: d.required("amplitude")?, lobes: d.count("lobes")?.unwrap_or(3) as usize }
        }
        "ellipse" => DomainSpec::Ellipse { a: d.required("a")?, b: d.required("b")? },
        "fourier" => DomainSpec::Fourier { outer: FourierSpec::read(&mut d)?, holes: Vec::new() },
        "sandbox" => DomainSpec::Sandbox { arcs: Vec::new() },
        "sticky-parabola" => DomainSpec::StickyParabola {
            delta_max: d.number("delta_max")?.unwrap_or(0.05),
            samples: d.count("samples")?.unwrap_or(200) as usize,
            x0: d.number("x0")?,
        },
        other => return Err(SceneError::at(kl, kc, format!("unknown domain kind `{other}`"))),
    };
    d.finish()?;
    let domain = match domain {
        DomainSpec::Fourier { outer, .. } => {
            DomainSpec::Fourier { outer, holes: holes.drain(..).map(|(_, h)| h).collect() }
        }
        DomainSpec::Sandbox { .. } => DomainSpec::Sandbox { arcs: std::mem::take(&mut arcs) },
        other => other,
    };
    if let Some((line, _)) = holes.first() {
        return Err(SceneError::at(*line, 1, "[hole] sections need a fourier domain"));
    }
    if !arcs.is_empty() {
        return Err(SceneError::Validation("[arc] sections need a sandbox domain".into()));
    }
    Ok(SceneConfig { domain, height, seed, trace, tolerances: tol })
}

fn read_trace(s: &mut Section, t: &mut TraceSettings) -> Result<(), SceneError> {
    if let Some((w, l, c)) = s.word("direction")? {
        t.direction = match w.as_str() {
            "forward" => TraceDirection::Forward,
            "backward" => TraceDirection::Backward,
            _ => return Err(SceneError::at(l, c, format!("direction must be forward or backward, not `{w}`"))),
        };
    }
    t.horizon_time = s.number("horizon_time")?;
    t.horizon_length = s.number("horizon_length")?;
    if t.horizon_time.is_some() && t.horizon_length.is_some() {
        return Err(SceneError::at(s.line, 1, "give either horizon_time or horizon_length, not both"));
    }
    if let Some(x) = s.number("eps_grazing")? {
        t.eps_grazing = x;
    }
    if let Some(x) = s.count("bounce_cap")? {
        t.bounce_cap = x as usize;
    }
    t.band = s.pair("band")?;
    Ok(())
}

fn read_tolerances(s: &mut Section, t: &mut ToleranceSettings) -> Result<(), SceneError> {
    let fields: [(&str, &mut f64); 6] = [
        ("sticky_tol", &mut t.sticky_tol),
        ("fd_step", &mut t.fd_step),
        ("fd_rel_tol", &mut t.fd_rel_tol),
        ("eps_prime", &mut t.eps_prime),
        ("delta2", &mut t.delta2),
        ("cov_window", &mut t.cov_window),
    ];
    for (key, slot) in fields {
        if let Some(x) = s.number(key)? {
            *slot = x;
        }
    }
    Ok(())
}

fn read_arc(s: &mut Section) -> Result<ArcSpec, SceneError> {
    let line = s.line;
    let coeffs = s.list("coeffs", None)?.ok_or_else(|| SceneError::at(line, 1, "[arc] needs `coeffs`"))?;
    let range = s.pair("range")?.ok_or_else(|| SceneError::at(line, 1, "[arc] needs `range`"))?;
    let above = match s.word("side")? {
        None => true,
        Some((w, _, _)) if w == "above" => true,
        Some((w, _, _)) if w == "below" => false,
        Some((w, l, c)) => return Err(SceneError::at(l, c, format!("side must be above or below, not `{w}`"))),
    };
    Ok(ArcSpec { coeffs, range, above })
}

fn positive(name: &str, x: f64) -> Result<(), SceneError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SceneError::Validation(format!("{name} must be positive and finite, got {x}")))
    }
}

impl SceneConfig {
    /// Builds the domain, checking the invariants of each kind.
    pub fn build(&self) -> Result<Scene, SceneError> {
        positive("height", self.height)?;
        let mut sticky = None;
        let domain = match &self.domain {
            DomainSpec::Disk { radius } => {
                positive("radius", *radius)?;
                Domain::disk(*radius)?
            }
            DomainSpec::Annulus { r_out, r_in } => {
                positive("r_in", *r_in)?;
                if !(r_in < r_out) {
                    return Err(SceneError::Validation(format!(
                        "annulus needs r_in < r_out, got r_in = {r_in}, r_out = {r_out}"
                    )));
                }
                Domain::annulus(*r_out, *r_in)?
            }
            DomainSpec::Polar { amplitude, lobes } => {
                if !(amplitude.abs() < 1.0) || *lobes == 0 {
                    return Err(SceneError::Validation(format!(
                        "polar curve needs |amplitude| < 1 and at least one lobe, got {amplitude} and {lobes}"
                    )));
                }
                Domain::polar(*amplitude, *lobes)?
            }
            DomainSpec::Ellipse { a, b } => {
                positive("a", *a)?;
                positive("b", *b)?;
                Domain::ellipse(*a, *b)?
            }
            DomainSpec::Fourier { outer, holes } => {
                let outer = outer.curve(Orientation::CounterClockwise)?;
                let holes = holes.iter().map(|h| h.curve(Orientation::Clockwise)).collect::<Result<Vec<_>, _>>()?;
                Domain::new(outer, holes)?
            }
            DomainSpec::Sandbox { arcs } => {
                let arcs = arcs
                    .iter()
                    .map(|a| {
                        let side = if a.above { GraphSide::Above } else { GraphSide::Below };
                        AnalyticCurve::graph(a.coeffs.clone(), a.range.0, a.range.1, side)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Domain::sandbox(arcs)?
            }
            DomainSpec::StickyParabola { delta_max, samples, x0 } => {
                let construction = match x0 {
                    Some(x0) => ArcConstruction::Integrated { x0: *x0 },
                    None => ArcConstruction::Envelope,
                };
                let example = build_sticky_example(*delta_max, *samples, construction)
                    .map_err(|e| SceneError::Validation(e.to_string()))?;
                let domain = example.domain.clone();
                sticky = Some(example);
                domain
            }
        };
        let domain = domain.with_height(self.height)?;
        Ok(Scene { config: self.clone(), domain, sticky })
    }
}
