//! Uniform grids on the half-space (and on the full line for interior runs).
//!
//! Nodes are stored tangential-major: index = it * points_normal + in.
//! Trapezoid axes carry half weights at both end nodes; periodic axes carry
//! uniform weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or vector with a tangential and a normal component.
/// One-dimensional objects only use `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub t: f64,
    pub n: f64,
}

impl Coord {
    pub const ZERO: Coord = Coord { t: 0.0, n: 0.0 };

    pub fn normal(n: f64) -> Self {
        Coord { t: 0.0, n }
    }

    pub fn new(t: f64, n: f64) -> Self {
        Coord { t, n }
    }

    pub fn norm_sq(self) -> f64 {
        self.t * self.t + self.n * self.n
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Coord { t: self.t * s, n: self.n * s }
    }

    pub fn dot(self, o: Coord) -> f64 {
        self.t * o.t + self.n * o.n
    }
}

impl std::ops::Add for Coord {
    type Output = Coord;
    fn add(self, o: Coord) -> Coord {
        Coord { t: self.t + o.t, n: self.n + o.n }
    }
}

impl std::ops::Sub for Coord {
    type Output = Coord;
    fn sub(self, o: Coord) -> Coord {
        Coord { t: self.t - o.t, n: self.n - o.n }
    }
}

impl std::ops::Neg for Coord {
    type Output = Coord;
    fn neg(self) -> Coord {
        Coord { t: -self.t, n: -self.n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AxisKind {
    Trapezoid,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    /// Length covered by the nodes (trapezoid) or the period (periodic).
    pub extent: f64,
    pub points: usize,
    pub spacing: f64,
    pub kind: AxisKind,
}

impl Axis {
    pub fn trapezoid(start: f64, extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        Ok(Axis {
            start,
            extent,
            points,
            spacing: extent / (points - 1) as f64,
            kind: AxisKind::Trapezoid,
        })
    }

    /// `points` equally spaced nodes on a circle of length `period`, starting at `start`.
    pub fn periodic(start: f64, period: f64, points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if points < 1 {
            return Err(Error::InvalidGrid("periodic axis needs a point".into()));
        }
        Ok(Axis {
            start,
            extent: period,
            points,
            spacing: period / points as f64,
            kind: AxisKind::Periodic,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        match self.kind {
            AxisKind::Trapezoid if i + 1 == self.points => self.start + self.extent,
            _ => self.start + i as f64 * self.spacing,
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self.kind {
            AxisKind::Trapezoid if i == 0 || i + 1 == self.points => 0.5 * self.spacing,
            _ => self.spacing,
        }
    }

    pub fn end(&self) -> f64 {
        match self.kind {
            AxisKind::Trapezoid => self.start + self.extent,
            AxisKind::Periodic => self.start + self.extent - self.spacing,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }
}

/// Smallest point count whose spacing on `extent` does not exceed `max_spacing`.
pub fn points_for_spacing(extent: f64, max_spacing: f64) -> usize {
    let cells = (extent / max_spacing * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    cells + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// x_n >= 0, the normal axis starts at the boundary.
    HalfSpace,
    /// Interior computations; the normal axis is just a coordinate axis.
    FullSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    domain: Domain,
    normal: Axis,
    tangential: Option<Axis>,
    #[serde(skip)]
    nodes: Vec<Coord>,
    #[serde(skip)]
    weights: Vec<f64>,
}

/// Build a half-space grid on [0, L_n] (dim 1) or [-L_t, L_t] x [0, L_n] (dim 2).
///
/// `points` is (normal, tangential); the tangential count is ignored for dim 1.
pub fn make_grid(
    dim: usize,
    normal_extent: f64,
    tangential_extent: Option<f64>,
    points: (usize, Option<usize>),
) -> Result<Grid> {
    match dim {
        1 => Grid::half_line(normal_extent, points.0),
        2 => {
            let lt = tangential_extent
                .ok_or_else(|| Error::InvalidGrid("dim 2 needs a tangential extent".into()))?;
            let nt = points
                .1
                .ok_or_else(|| Error::InvalidGrid("dim 2 needs a tangential point count".into()))?;
            Grid::half_space(normal_extent, lt, points.0, nt)
        }
        d => Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {d}"))),
    }
}

impl Grid {
    fn build(dim: usize, domain: Domain, normal: Axis, tangential: Option<Axis>) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match &tangential {
            None => {
                for i in 0..normal.points {
                    nodes.push(Coord::normal(normal.node(i)));
                    weights.push(normal.weight(i));
                }
            }
            Some(tan) => {
                for it in 0..tan.points {
                    for i in 0..normal.points {
                        nodes.push(Coord::new(tan.node(it), normal.node(i)));
                        weights.push(tan.weight(it) * normal.weight(i));
                    }
                }
            }
        }
        Grid { dim, domain, normal, tangential, nodes, weights }
    }

    /// [0, L_n] with `points` nodes.
    pub fn half_line(normal_extent: f64, points: usize) -> Result<Self> {
        let normal = Axis::trapezoid(0.0, normal_extent, points)?;
        Ok(Self::build(1, Domain::HalfSpace, normal, None))
    }

    /// [-L_t, L_t] x [0, L_n].
    pub fn half_space(
        normal_extent: f64,
        tangential_extent: f64,
        points_normal: usize,
        points_tangential: usize,
    ) -> Result<Self> {
        let normal = Axis::trapezoid(0.0, normal_extent, points_normal)?;
        let tan = Axis::trapezoid(-tangential_extent, 2.0 * tangential_extent, points_tangential)?;
        Ok(Self::build(2, Domain::HalfSpace, normal, Some(tan)))
    }

    /// The full line [-L, L], used for interior (boundaryless) experiments.
    pub fn full_line(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {half_width}")));
        }
        let normal = Axis::trapezoid(-half_width, 2.0 * half_width, points)?;
        Ok(Self::build(1, Domain::FullSpace, normal, None))
    }

    /// A single periodic axis; used for the covariable fibre of the interior
    /// symbol representation.
    pub fn periodic_line(start: f64, period: f64, points: usize) -> Result<Self> {
        let normal = Axis::periodic(start, period, points)?;
        Ok(Self::build(1, Domain::FullSpace, normal, None))
    }

    /// A periodic square [start, start + period)^2; the two-dimensional fibre.
    pub fn periodic_plane(start: f64, period: f64, points: usize) -> Result<Self> {
        let normal = Axis::periodic(start, period, points)?;
        let tan = Axis::periodic(start, period, points)?;
        Ok(Self::build(2, Domain::FullSpace, normal, Some(tan)))
    }

    /// Grid of the requested shape whose spacing does not exceed `max_spacing`.
    pub fn with_max_spacing(
        dim: usize,
        domain: Domain,
        normal_extent: f64,
        tangential_extent: Option<f64>,
        max_spacing: f64,
    ) -> Result<Self> {
        if !(max_spacing.is_finite() && max_spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {max_spacing}")));
        }
        match (dim, domain) {
            (1, Domain::HalfSpace) => {
                Self::half_line(normal_extent, points_for_spacing(normal_extent, max_spacing))
            }
            (1, Domain::FullSpace) => Self::full_line(
                normal_extent,
                points_for_spacing(2.0 * normal_extent, max_spacing),
            ),
            (2, Domain::HalfSpace) => {
                let lt = tangential_extent
                    .ok_or_else(|| Error::InvalidGrid("dim 2 needs a tangential extent".into()))?;
                Self::half_space(
                    normal_extent,
                    lt,
                    points_for_spacing(normal_extent, max_spacing),
                    points_for_spacing(2.0 * lt, max_spacing),
                )
            }
            (d, dom) => Err(Error::InvalidGrid(format!("unsupported grid: dim {d}, {dom:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn normal(&self) -> &Axis {
        &self.normal
    }

    pub fn tangential(&self) -> Option<&Axis> {
        self.tangential.as_ref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Coord] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        let t = self.tangential.as_ref().map_or(0.0, |a| a.spacing);
        self.normal.spacing.max(t)
    }

    /// Lebesgue measure of the truncated box.
    pub fn measure(&self) -> f64 {
        self.normal.extent * self.tangential.as_ref().map_or(1.0, |a| a.extent)
    }

    /// Indices of nodes at least `guard` away from every artificial edge of the
    /// truncated box. The boundary x_n = 0 of a half-space is not artificial.
    pub fn window(&self, guard: f64) -> Vec<usize> {
        let n_lo = match self.domain {
            Domain::HalfSpace => f64::NEG_INFINITY,
            Domain::FullSpace => self.normal.start + guard,
        };
        let n_hi = self.normal.end() - guard;
        let (t_lo, t_hi) = match &self.tangential {
            Some(a) => (a.start + guard, a.end() - guard),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.n >= n_lo && c.n <= n_hi && c.t >= t_lo && c.t <= t_hi)
            .map(|(i, _)| i)
            .collect()
    }

    /// Restore the derived node and weight tables after deserialization.
    pub fn rebuilt(self) -> Self {
        Self::build(self.dim, self.domain, self.normal, self.tangential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_trapezoid() {
        let g = make_grid(1, 1.0, None, (2, None)).unwrap();
        assert_eq!(g.nodes().iter().map(|c| c.n).collect::<Vec<_>>(), vec![0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn uniform_trapezoid() {
        let g = make_grid(1, 4.0, None, (5, None)).unwrap();
        assert_eq!(g.normal().spacing, 1.0);
        assert_eq!(g.weights(), &[0.5, 1.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn box_measure_dim2() {
        let g = make_grid(2, 8.0, Some(8.0), (65, Some(129))).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 128.0).abs() <= 1e-12 * 128.0);
        assert_eq!(g.len(), 65 * 129);
        assert_eq!(g.normal().spacing * 64.0, 8.0);
        assert_eq!(g.tangential().unwrap().spacing * 128.0, 16.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(make_grid(1, 1.0, None, (1, None)).is_err());
        assert!(make_grid(1, 0.0, None, (4, None)).is_err());
        assert!(make_grid(1, -2.0, None, (4, None)).is_err());
        assert!(make_grid(2, 1.0, None, (4, Some(4))).is_err());
        assert!(make_grid(3, 1.0, None, (4, None)).is_err());
    }

    #[test]
    fn periodic_weights_are_uniform() {
        let g = Grid::periodic_line(-4.0, 8.0, 16).unwrap();
        assert!(g.weights().iter().all(|&w| w == 0.5));
        assert_eq!(g.normal().end(), 3.5);
    }

    #[test]
    fn window_keeps_boundary_side() {
        let g = Grid::half_line(4.0, 5).unwrap();
        assert_eq!(g.window(1.5), vec![0, 1, 2]);
        let f = Grid::full_line(2.0, 5).unwrap();
        assert_eq!(f.window(1.0), vec![1, 2, 3]);
    }

    #[test]
    fn spacing_helper_respects_bound() {
        for (l, h) in [(16.0, 1.0 / 64.0), (3.0, 0.7), (1.0, 1.0)] {
            let n = points_for_spacing(l, h);
            assert!(l / (n - 1) as f64 <= h * (1.0 + 1e-12));
            assert!(n == 2 || l / (n - 2) as f64 > h);
        }
    }
}
