//! Observation windows, point patterns and distance grids.

use crate::error::{Error, Result};

/// Boundary behaviour of a rectangular window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Plane,
    /// Periodic boundary in both axes.
    Torus,
}

/// Axis-aligned rectangular observation window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    topology: Topology,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, topology: Topology) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::domain(format!(
                "invalid window extents [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            topology,
        })
    }

    /// The unit square with periodic boundary.
    pub fn unit_torus() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0, Topology::Torus).unwrap()
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0, Topology::Plane).unwrap()
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn min_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    /// Closed-rectangle membership test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Maps a coordinate pair into the window by periodic wrapping.
    pub fn wrap(&self, x: f64, y: f64) -> Point {
        let wrap_axis = |v: f64, lo: f64, w: f64| {
            let mut u = (v - lo).rem_euclid(w);
            // rem_euclid can return w for tiny negative inputs
            if u >= w {
                u = 0.0;
            }
            lo + u
        };
        Point::new(
            wrap_axis(x, self.x_min, self.width()),
            wrap_axis(y, self.y_min, self.height()),
        )
    }

    /// Per-axis separation (|dx|, |dy|) under the window metric.
    #[inline]
    pub fn separation(&self, a: Point, b: Point) -> (f64, f64) {
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if self.topology == Topology::Torus {
            dx = dx.min(self.width() - dx);
            dy = dy.min(self.height() - dy);
        }
        (dx, dy)
    }

    /// Distance without the membership check.
    #[inline]
    pub fn distance_unchecked(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = self.separation(a, b);
        dx.hypot(dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Euclidean distance in the plane, wrap-around distance on the torus.
pub fn pairwise_distance(window: &Window, a: Point, b: Point) -> Result<f64> {
    for p in [a, b] {
        if !window.contains(p) {
            return Err(Error::domain(format!(
                "point ({}, {}) lies outside the window",
                p.x, p.y
            )));
        }
    }
    Ok(window.distance_unchecked(a, b))
}

/// Point locations in a window with optional multitype labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPattern {
    window: Window,
    points: Vec<Point>,
    labels: Option<Vec<u32>>,
}

impl PointPattern {
    pub fn new(window: Window, points: Vec<Point>) -> Result<Self> {
        Self::with_labels(window, points, None)
    }

    pub fn with_labels(window: Window, points: Vec<Point>, labels: Option<Vec<u32>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !window.contains(*p)) {
            return Err(Error::domain(format!(
                "point {i} at ({}, {}) lies outside the window",
                points[i].x, points[i].y
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != points.len() {
                return Err(Error::domain(format!(
                    "{} labels supplied for {} points",
                    labels.len(),
                    points.len()
                )));
            }
            if labels.iter().any(|&l| l == 0) {
                return Err(Error::domain("type labels start at 1"));
            }
        }
        Ok(Self {
            window,
            points,
            labels,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Estimated intensity n / area.
    pub fn intensity(&self) -> f64 {
        self.len() as f64 / self.window.area()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.window.distance_unchecked(self.points[i], self.points[j])
    }

    /// Indices of points carrying label `t`.
    pub fn indices_of_type(&self, t: u32) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::domain("multitype statistic requires type labels"))?;
        Ok(labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == t)
            .map(|(i, _)| i)
            .collect())
    }
}

/// Strictly increasing positive distances at which curves are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceGrid {
    r: Vec<f64>,
}

impl DistanceGrid {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::domain("distance grid is empty"));
        }
        if r.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::domain("distances must be positive and finite"));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("distance grid must be strictly increasing"));
        }
        Ok(Self { r })
    }

    /// `count` equally spaced distances from `r_max / count` to `r_max`.
    pub fn regular(r_max: f64, count: usize) -> Result<Self> {
        if count == 0 || !(r_max > 0.0) {
            return Err(Error::domain("regular grid needs count >= 1 and r_max > 0"));
        }
        let step = r_max / count as f64;
        Self::new((1..=count).map(|k| k as f64 * step).collect())
    }

    /// 100 distances up to a quarter of the shortest window side.
    pub fn default_for(window: &Window) -> Self {
        Self::regular(window.min_side() / 4.0, 100).unwrap()
    }

    /// Checks the grid against the window: r_max must not exceed half the shortest side.
    pub fn validate_for(&self, window: &Window) -> Result<()> {
        let max = self.max();
        if max > window.min_side() / 2.0 {
            return Err(Error::domain(format!(
                "largest distance {max} exceeds half the shortest window side {}",
                window.min_side() / 2.0
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.r.last().unwrap()
    }
}
