use alloc::vec::Vec;

use super::KineticError;
use crate::geometry::{Domain, Location};
use crate::math::{Vec2, TAU};

/// Initial data `f0(x, v)` on the cross section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialDatum {
    Constant(f64),
    /// `exp(-|v|^2 / 2)`.
    Maxwellian,
    /// `exp(-|v|^2 / 2) (1 + amplitude * x1 / diam)`.
    Tilted {
        amplitude: f64,
    },
    /// `exp(-|v|^2 / 2) (1 + amplitude * cos(theta_v - x3 / diam))`, varying in
    /// both position and direction.
    Swirl {
        amplitude: f64,
    },
}

impl InitialDatum {
    pub fn eval(&self, x: Vec2, v: Vec2, diameter: f64) -> f64 {
        let mu = (-0.5 * v.norm_squared()).exp();
        match *self {
            Self::Constant(c) => c,
            Self::Maxwellian => mu,
            Self::Tilted { amplitude } => mu * (1.0 + amplitude * x.x / diameter),
            Self::Swirl { amplitude } => mu * (1.0 + amplitude * (v.y.atan2(v.x) - x.y / diameter).cos()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Constant(_) => "constant",
            Self::Maxwellian => "maxwellian",
            Self::Tilted { .. } => "tilted",
            Self::Swirl { .. } => "swirl",
        }
    }
}

/// Resolution and model parameters of a phase-space grid: cell centres of
/// an `nx x ny` box over the cross section, `directions` velocity angles
/// offset by half a cell, and `speeds` uniform speeds over `band`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticGrid {
    pub nx: usize,
    pub ny: usize,
    pub directions: usize,
    pub speeds: usize,
    pub band: (f64, f64),
    /// Number of time intervals over `[0, T]`.
    pub steps: usize,
    pub nu0: f64,
    /// Gain integrates over grid velocities with `|u| <= cutoff`.
    pub cutoff: f64,
    pub initial: InitialDatum,
}

impl Default for KineticGrid {
    fn default() -> Self {
        Self {
            nx: 8,
            ny: 8,
            directions: 8,
            speeds: 2,
            band: (0.1, 0.3),
            steps: 10,
            nu0: 1.0,
            cutoff: 0.3,
            initial: InitialDatum::Maxwellian,
        }
    }
}

impl KineticGrid {
    pub fn validate(&self) -> Result<(), KineticError> {
        if self.nx < 2 || self.ny < 2 || self.directions < 2 || self.speeds < 2 || self.steps < 1 {
            return Err(KineticError::InvalidGrid("need at least two nodes per axis and one step"));
        }
        if !(self.band.0 > 0.0 && self.band.1 > self.band.0 && self.band.1.is_finite()) {
            return Err(KineticError::InvalidGrid("speed band must be positive and increasing"));
        }
        if !(self.nu0 >= 0.0) || !(self.cutoff >= 0.0) {
            return Err(KineticError::InvalidGrid("nu0 and cutoff must be non-negative"));
        }
        Ok(())
    }

    pub fn velocities(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.directions * self.speeds);
        for j in 0..self.directions {
            let (s, c) = self.angle(j).sin_cos();
            for k in 0..self.speeds {
                out.push(Vec2::new(c, s) * self.speed(k));
            }
        }
        out
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * (j as f64 + 0.5) / self.directions as f64
    }

    pub fn speed(&self, k: usize) -> f64 {
        self.band.0 + (self.band.1 - self.band.0) * k as f64 / (self.speeds - 1) as f64
    }

    /// Quadrature weight of velocity node `(j, k)` for `int_{|u| <= cutoff} du`:
    /// trapezoid in speed times `|u|` times the angular cell.
    pub fn gain_weight(&self, k: usize) -> f64 {
        let s = self.speed(k);
        if s > self.cutoff * (1.0 + 1e-12) {
            return 0.0;
        }
        let h = (self.band.1 - self.band.0) / (self.speeds - 1) as f64;
        let trap = if k == 0 || k + 1 == self.speeds { 0.5 * h } else { h };
        trap * s * TAU / self.directions as f64
    }

    pub fn velocity_count(&self) -> usize {
        self.directions * self.speeds
    }
}

/// Cell-centre grid on the bounding box with an inside mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceGrid {
    pub nx: usize,
    pub ny: usize,
    pub lo: Vec2,
    pub h: Vec2,
    pub inside: Vec<bool>,
}

impl SpaceGrid {
    pub fn new(domain: &Domain, nx: usize, ny: usize) -> Result<Self, KineticError> {
        if domain.is_sandbox() {
            return Err(KineticError::Sandbox);
        }
        let (lo, hi) = domain.bounds();
        let h = Vec2::new((hi.x - lo.x) / nx as f64, (hi.y - lo.y) / ny as f64);
        let mut grid = Self { nx, ny, lo, h, inside: Vec::with_capacity(nx * ny) };
        for c in 0..nx * ny {
            let x = grid.center(c);
            grid.inside.push(domain.locate(x, 0.0) == Location::Inside);
        }
        if !grid.inside.contains(&true) {
            return Err(KineticError::NoInteriorNodes);
        }
        Ok(grid)
    }

    pub fn center(&self, cell: usize) -> Vec2 {
        let (i, j) = (cell % self.nx, cell / self.nx);
        self.lo + Vec2::new((i as f64 + 0.5) * self.h.x, (j as f64 + 0.5) * self.h.y)
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nx * self.ny).filter(|&c| self.inside[c])
    }

    /// Bilinear interpolation of cell values at `y`, with the weights of
    /// cells outside the domain dropped and the rest renormalised. Falls
    /// back to the nearest inside cell.
    pub fn interpolate(&self, values: &[f64], y: Vec2) -> f64 {
        let u = (y - self.lo).component_div(&self.h) - Vec2::new(0.5, 0.5);
        let i0 = (u.x.floor() as isize).clamp(0, self.nx as isize - 2) as usize;
        let j0 = (u.y.floor() as isize).clamp(0, self.ny as isize - 2) as usize;
        let fx = (u.x - i0 as f64).clamp(0.0, 1.0);
        let fy = (u.y - j0 as f64).clamp(0.0, 1.0);
        let (mut acc, mut total) = (0.0, 0.0);
        for (di, dj, w) in
            [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)]
        {
            let c = (j0 + dj) * self.nx + i0 + di;
            if self.inside[c] && w > 0.0 {
                acc += w * values[c];
                total += w;
            }
        }
        if total > 0.0 {
            return acc / total;
        }
        let nearest = self
            .cells()
            .min_by(|&a, &b| (self.center(a) - y).norm_squared().total_cmp(&(self.center(b) - y).norm_squared()))
            .expect("grid has an inside cell");
        values[nearest]
    }
}

/// One phase-space node: inside cell and velocity index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub cell: usize,
    pub velocity: usize,
    pub x: Vec2,
    pub v: Vec2,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_the_band() {
        let g = KineticGrid { speeds: 5, band: (0.5, 1.0), cutoff: 1.0, ..Default::default() };
        let area: f64 = (0..g.speeds).map(|k| g.gain_weight(k)).sum::<f64>() * g.directions as f64;
        // trapezoid is exact on the linear integrand 2 pi s
        assert!((area - core::f64::consts::PI * (1.0 - 0.25)).abs() < 1e-14);
        let off = KineticGrid { cutoff: 0.0, ..g };
        assert!((0..off.speeds).all(|k| off.gain_weight(k) == 0.0));
    }

    #[test]
    fn interpolation_reproduces_linear_fields_inside() {
        let d = Domain::ellipse(2.0, 1.0).unwrap();
        let s = SpaceGrid::new(&d, 8, 8).unwrap();
        let f = |x: Vec2| 1.0 + 0.3 * x.x - 0.2 * x.y;
        let values: Vec<f64> = (0..64).map(|c| f(s.center(c))).collect();
        let y = s.center(3 * 8 + 3) * 0.7 + s.center(4 * 8 + 4) * 0.3;
        assert!((s.interpolate(&values, y) - f(y)).abs() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(KineticGrid::default().validate().is_ok());
        assert!(KineticGrid { nx: 1, ..Default::default() }.validate().is_err());
        assert!(KineticGrid { band: (0.3, 0.1), ..Default::default() }.validate().is_err());
    }
}
