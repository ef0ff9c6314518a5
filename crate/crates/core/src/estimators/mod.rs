//! Kernel second-order estimators, nearest-neighbour indices and
//! mark-weighted K / L / pair correlation functions.

mod characteristics;
mod config;
mod curve;
mod engine;
mod kernel;
mod lmatrix;
mod nn;
mod pairs;

pub use characteristics::{Characteristic, Normalization, Prepared, StatisticRequest, UBase, Weight};
pub use config::{default_bandwidth, ChatRule, EdgeRule, EstimationConfig, MeanNormalization, ResolvedConfig};
pub use curve::{CurveKind, SummaryCurve, TypePair};
pub use engine::{estimate_ground_product_density, Estimator, PairSelection, Subset};
pub use kernel::Kernel;
pub use lmatrix::LMatrix;
pub use nn::{estimate_indices, estimate_knn_indices, estimate_nn_indices, IndexReport, KnnIndices, NnIndices};

use crate::error::Result;
use crate::geometry::PointPattern;
use crate::marks::FunctionalMarkSet;
use crate::testfn::TestFunction;

/// ρ̂⁽²⁾_t: the product density with each ordered pair weighted by ℓ(t_f).
pub fn estimate_tf_product_density(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    func: TestFunction,
    cfg: &EstimationConfig,
) -> Result<SummaryCurve> {
    let req = StatisticRequest::new(Characteristic::TfProductDensity(func), h, l);
    Estimator::new(pattern, cfg)?.estimate(marks, &req)
}

/// Ratio estimator (ρ̂⁽²⁾_t / ρ̂⁽²⁾) / normaliser for an arbitrary test function.
pub fn estimate_kappa_generic(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    func: TestFunction,
    normalization: Normalization,
    cfg: &EstimationConfig,
) -> Result<SummaryCurve> {
    let req = StatisticRequest::new(Characteristic::Kappa { func, normalization }, h, l);
    Estimator::new(pattern, cfg)?.estimate(marks, &req)
}

#[allow(non_snake_case)]
pub fn estimate_U(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    base: UBase,
    cfg: &EstimationConfig,
) -> Result<SummaryCurve> {
    let req = StatisticRequest::new(Characteristic::U(base), h, l);
    Estimator::new(pattern, cfg)?.estimate(marks, &req)
}

/// Mark-weighted K and L on the selected ordered pairs.
#[allow(non_snake_case)]
pub fn estimate_markweighted_K(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    weight: Weight,
    selection: PairSelection,
    cfg: &EstimationConfig,
) -> Result<(SummaryCurve, SummaryCurve)> {
    let est = Estimator::new(pattern, cfg)?;
    let k = est.estimate(
        marks,
        &StatisticRequest::new(Characteristic::MarkWeightedK(weight), h, l).with_selection(selection),
    )?;
    let mut lcurve = k.clone();
    lcurve.kind = CurveKind::LTf;
    lcurve.values = k.values.iter().map(|v| (v / std::f64::consts::PI).sqrt()).collect();
    Ok((k, lcurve))
}

pub fn estimate_markweighted_pcf(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    weight: Weight,
    selection: PairSelection,
    cfg: &EstimationConfig,
) -> Result<SummaryCurve> {
    let req = StatisticRequest::new(Characteristic::MarkWeightedPcf(weight), h, l).with_selection(selection);
    Estimator::new(pattern, cfg)?.estimate(marks, &req)
}
