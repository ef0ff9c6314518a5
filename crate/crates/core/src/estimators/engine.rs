use crate::error::{Error, Result};
use crate::geometry::{DistanceGrid, PointPattern};

use super::config::{EstimationConfig, ResolvedConfig};
use super::curve::{CurveKind, SummaryCurve, TypePair};
use super::pairs::PairTable;

/// Which points may act as the first or second member of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Subset {
    #[default]
    All,
    /// Points carrying this type label.
    Type(u32),
    /// A single point, for localised characteristics.
    Point(usize),
}

/// Restriction of the ordered pairs entering a sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct PairSelection {
    pub first: Subset,
    pub second: Subset,
}

impl PairSelection {
    pub const ALL: PairSelection = PairSelection {
        first: Subset::All,
        second: Subset::All,
    };

    pub fn cross(i: u32, j: u32) -> Self {
        Self {
            first: Subset::Type(i),
            second: Subset::Type(j),
        }
    }

    pub fn dot(i: u32) -> Self {
        Self {
            first: Subset::Type(i),
            second: Subset::All,
        }
    }

    pub fn local(u: usize) -> Self {
        Self {
            first: Subset::Point(u),
            second: Subset::All,
        }
    }

    pub fn is_all(&self) -> bool {
        *self == Self::ALL
    }

    pub(crate) fn type_pair(&self) -> Option<TypePair> {
        match (self.first, self.second) {
            (Subset::Type(i), Subset::Type(j)) => Some(TypePair::Cross(i, j)),
            (Subset::Type(i), Subset::All) => Some(TypePair::Dot(i)),
            _ => None,
        }
    }
}

/// Membership masks for a [`PairSelection`] resolved against a pattern.
#[derive(Clone, Debug)]
pub(crate) struct Members {
    pub first: Vec<bool>,
    pub second: Vec<bool>,
    pub n_first: usize,
    pub n_second: usize,
}

impl Members {
    pub fn resolve(pattern: &PointPattern, sel: &PairSelection) -> Result<Self> {
        let mask = |s: Subset| -> Result<Vec<bool>> {
            let n = pattern.len();
            Ok(match s {
                Subset::All => vec![true; n],
                Subset::Type(t) => {
                    let idx = pattern.indices_of_type(t)?;
                    let mut m = vec![false; n];
                    idx.into_iter().for_each(|i| m[i] = true);
                    m
                }
                Subset::Point(u) => {
                    if u >= n {
                        return Err(Error::domain(format!(
                            "local point index {u} out of range for {n} points"
                        )));
                    }
                    let mut m = vec![false; n];
                    m[u] = true;
                    m
                }
            })
        };
        let first = mask(sel.first)?;
        let second = mask(sel.second)?;
        let n_first = first.iter().filter(|&&b| b).count();
        let n_second = second.iter().filter(|&&b| b).count();
        if n_first == 0 || n_second == 0 {
            return Err(Error::domain(
                "selected point type is empty, its intensity estimate is zero",
            ));
        }
        Ok(Self {
            first,
            second,
            n_first,
            n_second,
        })
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.first[i] && self.second[j]
    }
}

/// Pattern-level precomputation shared by every characteristic: the pair
/// table and the ground product density ρ̂⁽²⁾.
#[derive(Clone, Debug)]
pub struct Estimator {
    pattern: PointPattern,
    cfg: ResolvedConfig,
    pub(crate) table: PairTable,
    ground: Vec<f64>,
}

impl Estimator {
    pub fn new(pattern: &PointPattern, cfg: &EstimationConfig) -> Result<Self> {
        if pattern.len() < 2 {
            return Err(Error::domain(format!(
                "second-order estimation needs at least two points, got {}",
                pattern.len()
            )));
        }
        let cfg = cfg.resolve(pattern)?;
        let table = PairTable::build(pattern, &cfg);
        let ground = table.density(|_, _| 1.0, |_, _| true);
        Ok(Self {
            pattern: pattern.clone(),
            cfg,
            table,
            ground,
        })
    }

    pub fn pattern(&self) -> &PointPattern {
        &self.pattern
    }

    pub fn config(&self) -> &ResolvedConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &DistanceGrid {
        &self.cfg.grid
    }

    pub fn n(&self) -> usize {
        self.pattern.len()
    }

    pub fn area(&self) -> f64 {
        self.table.area()
    }

    pub fn intensity(&self) -> f64 {
        self.pattern.intensity()
    }

    /// ρ̂⁽²⁾(r) of the ground pattern.
    pub fn ground_density(&self) -> &[f64] {
        &self.ground
    }

    pub(crate) fn members(&self, sel: &PairSelection) -> Result<Members> {
        Members::resolve(&self.pattern, sel)
    }

    pub(crate) fn curve(&self, kind: CurveKind, values: Vec<f64>) -> SummaryCurve {
        SummaryCurve::new(kind, self.cfg.grid.clone(), values)
    }
}

/// Kernel estimate of the second-order product density of the ground pattern.
pub fn estimate_ground_product_density(pattern: &PointPattern, cfg: &EstimationConfig) -> Result<SummaryCurve> {
    let est = Estimator::new(pattern, cfg)?;
    Ok(est.curve(CurveKind::RhoGround, est.ground.clone()))
}
