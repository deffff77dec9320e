//! CSV and SVG files in the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use billiard_core::geometry::Domain;
use billiard_core::trajectory::GrazingClass;
use billiard_core::Vec2;

/// Cell text for CSV output. Floats use the shortest representation that
/// parses back to the same value.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for u64 {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_owned()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::Cell::cell(&$x)),*]
    };
}

/// Files written by one run, in order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_owned(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            debug_assert_eq!(r.len(), header.len(), "{name}");
            w.write_record(r)?;
        }
        w.flush()?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn text(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.written.push(name.to_owned());
        Ok(())
    }
}

pub const VIEWPORT: f64 = 1024.0;

pub fn class_color(class: GrazingClass) -> &'static str {
    match class {
        GrazingClass::NonGrazing => "#7f7f7f",
        GrazingClass::Concave => "#d62728",
        GrazingClass::Convex => "#1f77b4",
        GrazingClass::InflectionOutward => "#2ca02c",
        GrazingClass::InflectionInward => "#9467bd",
    }
}

/// Drawing on a fixed square viewport, scaled so the scene's bounding box
/// fills 90% of it.
pub struct Svg {
    center: Vec2,
    scale: f64,
    body: String,
}

impl Svg {
    pub fn new(domain: &Domain) -> Self {
        let (lo, hi) = domain.bounds();
        let extent = (hi - lo).max().max(1e-12);
        let mut svg = Self { center: (lo + hi) * 0.5, scale: 0.9 * VIEWPORT / extent, body: String::new() };
        svg.boundary(domain);
        svg
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let q = (p - self.center) * self.scale;
        (0.5 * VIEWPORT + q.x, 0.5 * VIEWPORT - q.y)
    }

    fn boundary(&mut self, domain: &Domain) {
        for c in domain.curves() {
            let mut pts: Vec<Vec2> = c.samples(512).into_iter().map(|t| c.point(t)).collect();
            if c.is_closed() {
                pts.push(pts[0]);
            }
            self.polyline(&pts, "#000000", 2.0);
        }
    }

    pub fn polyline(&mut self, pts: &[Vec2], color: &str, width: f64) {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "" } else { " " });
        }
        let _ = writeln!(self.body, r#"<polyline points="{d}" fill="none" stroke="{color}" stroke-width="{width}"/>"#);
    }

    pub fn dot(&mut self, p: Vec2, radius: f64, color: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}" fill="{color}"/>"#);
    }

    pub fn cross(&mut self, p: Vec2, size: f64, color: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.3},{:.3}L{:.3},{:.3}M{:.3},{:.3}L{:.3},{:.3}" stroke="{color}" stroke-width="2"/>"#,
            x - size,
            y - size,
            x + size,
            y + size,
            x - size,
            y + size,
            x + size,
            y - size
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{v}\" height=\"{v}\" viewBox=\"0 0 {v} {v}\">\n\
             <rect width=\"{v}\" height=\"{v}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            v = VIEWPORT
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300, 6.0, f64::MIN_POSITIVE] {
            assert_eq!(x.cell().parse::<f64>().unwrap(), x);
        }
        assert_eq!(None::<f64>.cell(), "");
    }

    #[test]
    fn svg_fits_the_viewport() {
        let d = Domain::disk(2.0).unwrap();
        let mut s = Svg::new(&d);
        s.cross(Vec2::new(2.0, 0.0), 4.0, "red");
        // the bounding box is centred and its longer side spans 90% of the square
        let (lo, hi) = d.bounds();
        let (a, b) = (s.map(lo), s.map(hi));
        assert!(((a.0 + b.0) / 2.0 - 512.0).abs() < 1e-9 && ((a.1 + b.1) / 2.0 - 512.0).abs() < 1e-9);
        assert!(((b.0 - a.0).max(a.1 - b.1) - 921.6).abs() < 1e-9);
        assert!(b.1 < a.1);
        let text = s.finish();
        assert!(text.starts_with("<svg") && text.contains("viewBox=\"0 0 1024 1024\""));
    }
}
