use crate::error::{Error, Result};
use crate::geometry::{DistanceGrid, PointPattern, Topology};

use super::kernel::Kernel;

/// Edge correction factor applied to each ordered pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeRule {
    /// No correction; only valid on a torus.
    NoneTorus,
    /// Translation correction ν(W) / ν(W ∩ W_{x'−x}) on plane rectangles.
    Translation,
}

impl EdgeRule {
    pub fn name(self) -> &'static str {
        match self {
            EdgeRule::NoneTorus => "none_torus",
            EdgeRule::Translation => "translation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "none_torus" => Some(EdgeRule::NoneTorus),
            "translation" => Some(EdgeRule::Translation),
            _ => None,
        }
    }
}

/// Denominator of the normalising constant ĉ_t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChatRule {
    /// Σ_x Σ_x' ℓ / n², diagonal terms included.
    #[default]
    AllPairs,
    /// Σ_{x≠x'} ℓ / (n(n−1)).
    DistinctPairs,
}

/// How mean-normalised (correlation-type) characteristics divide by the mean curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MeanNormalization {
    /// Integrated numerator over the scalar ∫ μ̂_h μ̂_l dt.
    #[default]
    Scalar,
    /// Divide by μ̂_h(t) μ̂_l(t) at each t, then integrate.
    Pointwise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationConfig {
    pub kernel: Kernel,
    /// Defaults to 0.15 / √λ̂.
    pub bandwidth: Option<f64>,
    /// Defaults to no correction on a torus and translation on the plane.
    pub edge: Option<EdgeRule>,
    /// Defaults to [`DistanceGrid::default_for`] the window.
    pub grid: Option<DistanceGrid>,
    /// Integer time shift applied to the second mark (0 = concurrent).
    pub lag: usize,
    pub chat: ChatRule,
    pub normalization: MeanNormalization,
    /// Also report the pre-integration (r, t) values.
    pub keep_pointwise: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Epanechnikov,
            bandwidth: None,
            edge: None,
            grid: None,
            lag: 0,
            chat: ChatRule::AllPairs,
            normalization: MeanNormalization::Scalar,
            keep_pointwise: false,
        }
    }
}

/// Rule-of-thumb bandwidth 0.15 / √λ.
pub fn default_bandwidth(intensity: f64) -> f64 {
    0.15 / intensity.sqrt()
}

/// Configuration with every default filled in for a given pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub edge: EdgeRule,
    pub grid: DistanceGrid,
    pub lag: usize,
    pub chat: ChatRule,
    pub normalization: MeanNormalization,
    pub keep_pointwise: bool,
}

impl EstimationConfig {
    pub fn resolve(&self, pattern: &PointPattern) -> Result<ResolvedConfig> {
        let window = pattern.window();
        let bandwidth = match self.bandwidth {
            Some(b) => b,
            None if pattern.is_empty() => {
                return Err(Error::domain("default bandwidth needs a nonempty pattern"))
            }
            None => default_bandwidth(pattern.intensity()),
        };
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let edge = match (self.edge, window.topology()) {
            (None, Topology::Torus) => EdgeRule::NoneTorus,
            (None, Topology::Plane) => EdgeRule::Translation,
            (Some(EdgeRule::NoneTorus), Topology::Plane) => {
                return Err(Error::domain("edge rule none_torus requires a torus window"))
            }
            (Some(EdgeRule::Translation), Topology::Torus) => {
                return Err(Error::domain("translation correction applies to plane windows only"))
            }
            (Some(e), _) => e,
        };
        let grid = self
            .grid
            .clone()
            .unwrap_or_else(|| DistanceGrid::default_for(window));
        grid.validate_for(window)?;
        Ok(ResolvedConfig {
            kernel: self.kernel,
            bandwidth,
            edge,
            grid,
            lag: self.lag,
            chat: self.chat,
            normalization: self.normalization,
            keep_pointwise: self.keep_pointwise,
        })
    }
}

impl ResolvedConfig {
    /// Freezes every resolved choice so the same values apply to other patterns.
    pub fn to_config(&self) -> EstimationConfig {
        EstimationConfig {
            kernel: self.kernel,
            bandwidth: Some(self.bandwidth),
            edge: Some(self.edge),
            grid: Some(self.grid.clone()),
            lag: self.lag,
            chat: self.chat,
            normalization: self.normalization,
            keep_pointwise: self.keep_pointwise,
        }
    }
}
