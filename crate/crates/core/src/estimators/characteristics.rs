//! Kernel-ratio characteristics (variogram, correlation, differentiation,
//! covariances, r-mark functions, U) and mark-weighted g / K / L.

use std::borrow::Cow;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::marks::{functional_mean, FunctionalMarkSet, TimeGrid};
use crate::testfn::{MarkPairFunction, PairTest, TestFunction};

use super::config::MeanNormalization;
use super::curve::{CurveKind, SummaryCurve};
use super::engine::{Estimator, Members, PairSelection};
use super::lmatrix::LMatrix;

/// Pair weight of a mark-weighted second-order characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// Every pair counts once: the classical ground characteristic.
    Unit,
    Test(TestFunction),
}

/// Characteristic substituted for κ_hl in U(r).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UBase {
    KappaHl,
    KappaHDot,
    KappaDotL,
    GammaHl,
    TauHl,
}

/// Denominator of the generic ratio estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// ĉ_t of the same test function.
    CHat,
    /// No normalisation: the conditional mean of the test function.
    Unit,
    /// μ̂_h μ̂_l
    MeanProduct,
    /// μ̂_h
    MeanH,
    /// μ̂_l
    MeanL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Characteristic {
    /// γ̂_hl, normalised by ĉ_t.
    MarkVariogram,
    MarkVariogramRaw,
    /// κ̂_hl
    MarkCorrelation,
    /// τ̂_hl
    Differentiation,
    /// ĉ_hl, the conditional mean product.
    MeanProduct,
    CovStoyan,
    CovCressie,
    /// Isham correlation with the variances as printed: the auto-covariance
    /// of each channel between the two points of a pair.
    Isham,
    /// Isham correlation with Palm-conditional variances
    /// E[f(∘)²] − E[f(∘)]², a Pearson correlation bounded by one.
    IshamConditional,
    Beisbart,
    /// κ̂_h•
    RMarkH,
    /// κ̂_•l
    RMarkL,
    U(UBase),
    Kappa {
        func: TestFunction,
        normalization: Normalization,
    },
    /// ρ̂⁽²⁾_t
    TfProductDensity(TestFunction),
    MarkWeightedPcf(Weight),
    MarkWeightedK(Weight),
    MarkWeightedL(Weight),
    /// ρ̂⁽²⁾ of the ground pattern.
    GroundProductDensity,
    GroundPcf,
    GroundK,
    /// K̂(r) − πr²
    GroundKCentered,
}

impl Characteristic {
    pub fn kind(self) -> CurveKind {
        use Characteristic::*;
        match self {
            MarkVariogram => CurveKind::GammaHl,
            MarkVariogramRaw => CurveKind::GammaHlRaw,
            MarkCorrelation => CurveKind::KappaHl,
            Differentiation => CurveKind::TauHl,
            MeanProduct => CurveKind::CHl,
            CovStoyan => CurveKind::CovSto,
            CovCressie => CurveKind::CovCre,
            Isham => CurveKind::CorrIsh,
            IshamConditional => CurveKind::CorrIshCond,
            Beisbart => CurveKind::KappaBei,
            RMarkH => CurveKind::KappaHDot,
            RMarkL => CurveKind::KappaDotL,
            U(_) => CurveKind::U,
            Kappa { .. } => CurveKind::KappaTf,
            TfProductDensity(_) => CurveKind::RhoTf,
            MarkWeightedPcf(_) => CurveKind::GTf,
            MarkWeightedK(_) => CurveKind::KTf,
            MarkWeightedL(_) => CurveKind::LTf,
            GroundProductDensity => CurveKind::RhoGround,
            GroundPcf => CurveKind::GGround,
            GroundK => CurveKind::KGround,
            GroundKCentered => CurveKind::KGroundCentered,
        }
    }

    /// True when the characteristic depends only on point locations.
    pub fn is_points_only(self) -> bool {
        matches!(
            self,
            Characteristic::GroundProductDensity
                | Characteristic::GroundPcf
                | Characteristic::GroundK
                | Characteristic::GroundKCentered
        ) || matches!(
            self,
            Characteristic::MarkWeightedPcf(Weight::Unit)
                | Characteristic::MarkWeightedK(Weight::Unit)
                | Characteristic::MarkWeightedL(Weight::Unit)
        )
    }

    fn allows_selection(self) -> bool {
        matches!(
            self,
            Characteristic::MarkWeightedPcf(_)
                | Characteristic::MarkWeightedK(_)
                | Characteristic::MarkWeightedL(_)
        )
    }

    /// Ratio form (test function, normalisation) when the characteristic is one.
    fn as_kappa(self) -> Option<(TestFunction, Normalization)> {
        use Characteristic::*;
        use TestFunction::*;
        Some(match self {
            MarkVariogram => (HalfSquaredDiff, Normalization::CHat),
            MarkVariogramRaw => (HalfSquaredDiff, Normalization::Unit),
            MarkCorrelation => (Product, Normalization::MeanProduct),
            MeanProduct => (Product, Normalization::Unit),
            RMarkH => (Left, Normalization::MeanH),
            RMarkL => (Right, Normalization::MeanL),
            Kappa { func, normalization } => (func, normalization),
            _ => return None,
        })
    }

    /// Test functions whose ℓ-matrix the characteristic reads.
    fn lmatrix_needs(self) -> Vec<TestFunction> {
        use Characteristic::*;
        use TestFunction::*;
        if let Some((f, _)) = self.as_kappa() {
            return vec![f];
        }
        match self {
            Differentiation => vec![Ratio],
            CovStoyan => vec![Product],
            U(base) => match base {
                UBase::KappaHl => vec![Product],
                UBase::KappaHDot => vec![Left],
                UBase::KappaDotL => vec![Right],
                UBase::GammaHl => vec![HalfSquaredDiff],
                UBase::TauHl => vec![Ratio],
            },
            TfProductDensity(f) => vec![f],
            MarkWeightedPcf(Weight::Test(f))
            | MarkWeightedK(Weight::Test(f))
            | MarkWeightedL(Weight::Test(f)) => vec![f],
            _ => vec![],
        }
    }
}

/// A characteristic with its channels and pair restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StatisticRequest {
    pub characteristic: Characteristic,
    pub h: usize,
    pub l: usize,
    pub selection: PairSelection,
}

impl StatisticRequest {
    pub fn new(characteristic: Characteristic, h: usize, l: usize) -> Self {
        Self {
            characteristic,
            h,
            l,
            selection: PairSelection::ALL,
        }
    }

    pub fn points_only(characteristic: Characteristic) -> Self {
        Self::new(characteristic, 0, 0)
    }

    pub fn with_selection(mut self, selection: PairSelection) -> Self {
        self.selection = selection;
        self
    }
}

/// Permutation-invariant quantities for one request: ℓ-matrices, ĉ_t,
/// mean curves and pair memberships.
#[derive(Clone, Debug)]
pub struct Prepared {
    request: StatisticRequest,
    grid: TimeGrid,
    mean_h: Vec<f64>,
    mean_l: Vec<f64>,
    lmats: Vec<(TestFunction, LMatrix, f64)>,
    members: Option<Members>,
}

impl Prepared {
    fn lmat(&self, f: TestFunction) -> (&LMatrix, f64) {
        let (_, m, c) = self
            .lmats
            .iter()
            .find(|(g, _, _)| *g == f)
            .expect("l-matrix prepared for this request");
        (m, *c)
    }

    pub fn request(&self) -> &StatisticRequest {
        &self.request
    }

    /// ĉ_t for test function `f` on channels (h, l), if prepared.
    pub fn chat(&self, f: TestFunction) -> Option<f64> {
        self.lmats.iter().find(|(g, _, _)| *g == f).map(|(_, _, c)| *c)
    }

    /// Time grid of the (lag-aligned) pointwise values.
    pub fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn int_mean_product(&self) -> f64 {
        let prod: Vec<f64> = self.mean_h.iter().zip(&self.mean_l).map(|(a, b)| a * b).collect();
        self.grid.integrate_unchecked(&prod)
    }
}

/// Divides by a normalising constant; 0/0 is reported as 0.
fn guarded_div(v: f64, c: f64) -> Result<f64> {
    if c != 0.0 {
        Ok(v / c)
    } else if v == 0.0 || v.is_nan() {
        Ok(if v == 0.0 { 0.0 } else { f64::NAN })
    } else {
        Err(Error::domain("normalising constant is zero"))
    }
}

fn transpose(flat: &[f64], nr: usize, nt: usize) -> Vec<Vec<f64>> {
    (0..nt)
        .map(|t| (0..nr).map(|r| flat[r * nt + t]).collect())
        .collect()
}

impl Estimator {
    /// Builds the permutation-invariant part of a request.
    pub fn prepare(&self, marks: &FunctionalMarkSet, request: &StatisticRequest) -> Result<Prepared> {
        let ch = request.characteristic;
        if !request.selection.is_all() && !ch.allows_selection() {
            return Err(Error::domain(
                "type and local restrictions apply to mark-weighted g, K and L only",
            ));
        }
        let members = if ch.allows_selection() {
            Some(self.members(&request.selection)?)
        } else {
            None
        };
        if ch.is_points_only() {
            return Ok(Prepared {
                request: *request,
                grid: TimeGrid::scalar(),
                mean_h: vec![],
                mean_l: vec![],
                lmats: vec![],
                members,
            });
        }
        if marks.n_points() != self.n() {
            return Err(Error::domain(format!(
                "mark set has {} points, pattern has {}",
                marks.n_points(),
                self.n()
            )));
        }
        let lag = self.config().lag;
        let base = PairTest::new(TestFunction::Product, request.h, request.l).with_lag(lag);
        base.check(marks)?;
        let grid = base.grid(marks);
        let mh = functional_mean(marks, request.h)?;
        let ml = functional_mean(marks, request.l)?;
        let tl = grid.len();
        let mean_h = mh[lag..lag + tl].to_vec();
        let mean_l = ml[..tl].to_vec();
        let mut lmats = Vec::new();
        for f in ch.lmatrix_needs() {
            let lm = LMatrix::build(marks, &PairTest::new(f, request.h, request.l).with_lag(lag))?;
            let c = lm.chat(self.config().chat);
            lmats.push((f, lm, c));
        }
        Ok(Prepared {
            request: *request,
            grid,
            mean_h,
            mean_l,
            lmats,
            members,
        })
    }

    /// Evaluates a prepared request; `perm` relabels marks (point i takes the
    /// marks of point `perm[i]`).
    pub fn evaluate(
        &self,
        marks: &FunctionalMarkSet,
        prep: &Prepared,
        perm: Option<&[usize]>,
    ) -> Result<SummaryCurve> {
        let req = prep.request;
        let ch = req.characteristic;
        let keep = self.config().keep_pointwise && perm.is_none();
        let view: Cow<FunctionalMarkSet> = match perm {
            Some(p) if !ch.is_points_only() => Cow::Owned(marks.permuted(p)),
            _ => Cow::Borrowed(marks),
        };
        let (values, pointwise) = self.compute(&view, prep, perm, keep)?;
        let mut curve = self.curve(ch.kind(), values);
        if !ch.is_points_only() {
            curve.channels = Some((req.h, req.l));
        }
        curve.types = req.selection.type_pair();
        curve.pointwise = pointwise.map(|pw| transpose(&pw, self.grid().len(), prep.grid.len()));
        Ok(curve)
    }

    /// Prepares and evaluates in one step.
    pub fn estimate(&self, marks: &FunctionalMarkSet, request: &StatisticRequest) -> Result<SummaryCurve> {
        let prep = self.prepare(marks, request)?;
        self.evaluate(marks, &prep, None)
    }

    /// Theoretical reference under independent marks (and CSR for points-only curves).
    pub fn theoretical(&self, prep: &Prepared) -> Option<Vec<f64>> {
        use Characteristic::*;
        let r = self.grid().values();
        let constant = |v: f64| Some(vec![v; r.len()]);
        let pointwise = self.config().normalization == MeanNormalization::Pointwise;
        let mean_ref = if pointwise { prep.grid.measure() } else { 1.0 };
        let kappa_ref = |f: TestFunction, n: Normalization| -> Option<f64> {
            Some(match n {
                Normalization::CHat => 1.0,
                Normalization::Unit => match f {
                    TestFunction::Product => prep.int_mean_product(),
                    _ => prep.chat(f)?,
                },
                _ => mean_ref,
            })
        };
        match prep.request.characteristic {
            ch @ (MarkVariogram | MarkVariogramRaw | MarkCorrelation | MeanProduct | RMarkH
            | RMarkL | Kappa { .. }) => {
                let (f, n) = ch.as_kappa().unwrap();
                constant(kappa_ref(f, n)?)
            }
            Differentiation => constant(prep.grid.measure() - prep.chat(TestFunction::Ratio)?),
            CovStoyan | CovCressie | Isham | IshamConditional => constant(0.0),
            Beisbart => constant(prep.grid.measure()),
            U(base) => {
                let b = match base {
                    UBase::KappaHl | UBase::KappaHDot | UBase::KappaDotL => mean_ref,
                    UBase::GammaHl => 1.0,
                    UBase::TauHl => prep.grid.measure() - prep.chat(TestFunction::Ratio)?,
                };
                let lambda = self.intensity();
                constant(lambda * lambda * b)
            }
            TfProductDensity(_) => None,
            GroundProductDensity => {
                let lambda = self.intensity();
                constant(lambda * lambda)
            }
            MarkWeightedPcf(_) | GroundPcf => constant(1.0),
            MarkWeightedK(_) | GroundK => Some(r.iter().map(|r| PI * r * r).collect()),
            MarkWeightedL(_) => Some(r.to_vec()),
            GroundKCentered => constant(0.0),
        }
    }

    /// Conditional mean N_f(r) / ρ̂⁽²⁾(r) from an ℓ-matrix.
    fn ratio_from_lmatrix(&self, lm: &LMatrix, perm: Option<&[usize]>) -> Vec<f64> {
        let num = match perm {
            Some(p) => self.table.density(|i, j| lm.get(p[i], p[j]), |_, _| true),
            None => self.table.density(|i, j| lm.get(i, j), |_, _| true),
        };
        self.divide_by_ground(num)
    }

    fn divide_by_ground(&self, num: Vec<f64>) -> Vec<f64> {
        num.into_iter()
            .zip(self.ground_density())
            .map(|(n, &g)| if g > 0.0 { n / g } else { f64::NAN })
            .collect()
    }

    /// Pointwise conditional means indexed `[r * T + t]`.
    fn ratio_pointwise(&self, marks: &FunctionalMarkSet, f: TestFunction, h: usize, l: usize) -> Result<Vec<f64>> {
        let test = PairTest::new(f, h, l).with_lag(self.config().lag);
        let tl = test.grid(marks).len();
        let num = self.table.density_pointwise(marks, &test, tl, |_, _| true)?;
        Ok(self.over_ground(num, tl))
    }

    fn integrate_rows(&self, pw: &[f64], grid: &TimeGrid) -> Vec<f64> {
        pw.chunks(grid.len())
            .map(|row| grid.integrate_unchecked(row))
            .collect()
    }

    fn compute(
        &self,
        marks: &FunctionalMarkSet,
        prep: &Prepared,
        perm: Option<&[usize]>,
        keep: bool,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        use Characteristic::*;
        let req = prep.request;
        let (h, l) = (req.h, req.l);
        let grid = &prep.grid;
        let tl = grid.len();
        let nr = self.grid().len();

        if let Some((f, n)) = req.characteristic.as_kappa() {
            return self.kappa(marks, prep, f, n, perm, keep);
        }
        match req.characteristic {
            Differentiation => {
                let (lm, _) = prep.lmat(TestFunction::Ratio);
                let m = self.ratio_from_lmatrix(lm, perm);
                let span = grid.measure();
                let values = m.iter().map(|v| span - v).collect();
                let pw = if keep {
                    let mut p = self.ratio_pointwise(marks, TestFunction::Ratio, h, l)?;
                    p.iter_mut().for_each(|v| *v = 1.0 - *v);
                    Some(p)
                } else {
                    None
                };
                Ok((values, pw))
            }
            CovStoyan => {
                let (lm, _) = prep.lmat(TestFunction::Product);
                let m = self.ratio_from_lmatrix(lm, perm);
                let c = prep.int_mean_product();
                let values = m.iter().map(|v| v - c).collect();
                let pw = if keep {
                    let mut p = self.ratio_pointwise(marks, TestFunction::Product, h, l)?;
                    for row in p.chunks_mut(tl) {
                        for (k, v) in row.iter_mut().enumerate() {
                            *v -= prep.mean_h[k] * prep.mean_l[k];
                        }
                    }
                    Some(p)
                } else {
                    None
                };
                Ok((values, pw))
            }
            CovCressie => {
                let pw = self.cressie_pointwise(marks, h, l)?;
                Ok((self.integrate_rows(&pw, grid), keep.then_some(pw)))
            }
            Isham | IshamConditional => {
                let pw = self.isham_pointwise(marks, h, l, req.characteristic == IshamConditional)?;
                Ok((self.integrate_rows(&pw, grid), keep.then_some(pw)))
            }
            Beisbart => {
                let m4 = self.ratio_pointwise(marks, TestFunction::Left, h, l)?;
                let m5 = self.ratio_pointwise(marks, TestFunction::Right, h, l)?;
                let denom: Vec<f64> = prep.mean_h.iter().zip(&prep.mean_l).map(|(a, b)| a + b).collect();
                if denom.iter().any(|&d| d == 0.0) {
                    return Err(Error::domain("sum of mean marks vanishes at some time point"));
                }
                let mut pw = vec![0.0; nr * tl];
                for (idx, v) in pw.iter_mut().enumerate() {
                    *v = (m4[idx] + m5[idx]) / denom[idx % tl];
                }
                Ok((self.integrate_rows(&pw, grid), keep.then_some(pw)))
            }
            U(base) => {
                let (f, n) = match base {
                    UBase::KappaHl => (TestFunction::Product, Normalization::MeanProduct),
                    UBase::KappaHDot => (TestFunction::Left, Normalization::MeanH),
                    UBase::KappaDotL => (TestFunction::Right, Normalization::MeanL),
                    UBase::GammaHl => (TestFunction::HalfSquaredDiff, Normalization::CHat),
                    UBase::TauHl => (TestFunction::Ratio, Normalization::Unit),
                };
                let (mut values, mut pw) = self.kappa(marks, prep, f, n, perm, keep)?;
                if base == UBase::TauHl {
                    let span = grid.measure();
                    values.iter_mut().for_each(|v| *v = span - *v);
                    if let Some(p) = pw.as_mut() {
                        p.iter_mut().for_each(|v| *v = 1.0 - *v);
                    }
                }
                let ground = self.ground_density();
                for (r, v) in values.iter_mut().enumerate() {
                    *v = if ground[r] > 0.0 { ground[r] * *v } else { 0.0 };
                }
                if let Some(p) = pw.as_mut() {
                    for (r, row) in p.chunks_mut(tl).enumerate() {
                        row.iter_mut()
                            .for_each(|v| *v = if ground[r] > 0.0 { ground[r] * *v } else { 0.0 });
                    }
                }
                Ok((values, pw))
            }
            TfProductDensity(f) => {
                let (lm, _) = prep.lmat(f);
                let values = match perm {
                    Some(p) => self.table.density(|i, j| lm.get(p[i], p[j]), |_, _| true),
                    None => self.table.density(|i, j| lm.get(i, j), |_, _| true),
                };
                let pw = if keep {
                    let test = PairTest::new(f, h, l).with_lag(self.config().lag);
                    Some(self.table.density_pointwise(marks, &test, tl, |_, _| true)?)
                } else {
                    None
                };
                Ok((values, pw))
            }
            MarkWeightedPcf(w) => {
                let members = prep.members.as_ref().unwrap();
                let (num, c) = self.weighted_sum(prep, w, perm, members, false);
                let scale = self.area() * self.area() / (members.n_first * members.n_second) as f64;
                let values = num
                    .into_iter()
                    .map(|v| guarded_div(v * scale, c))
                    .collect::<Result<_>>()?;
                Ok((values, None))
            }
            MarkWeightedK(w) | MarkWeightedL(w) => {
                let members = prep.members.as_ref().unwrap();
                let (cum, c) = self.weighted_sum(prep, w, perm, members, true);
                let scale = self.area() / (members.n_first * members.n_second) as f64;
                let mut values: Vec<f64> = cum
                    .into_iter()
                    .map(|v| guarded_div(v * scale, c))
                    .collect::<Result<_>>()?;
                if matches!(req.characteristic, MarkWeightedL(_)) {
                    values.iter_mut().for_each(|v| *v = (*v / PI).sqrt());
                }
                Ok((values, None))
            }
            GroundProductDensity => Ok((self.ground_density().to_vec(), None)),
            GroundPcf => {
                let lambda = self.intensity();
                let values = self.ground_density().iter().map(|g| g / (lambda * lambda)).collect();
                Ok((values, None))
            }
            GroundK | GroundKCentered => {
                let n = self.n() as f64;
                let scale = self.area() / (n * n);
                let mut values: Vec<f64> = self
                    .table
                    .cumulative(|_, _| 1.0, |_, _| true)
                    .into_iter()
                    .map(|v| v * scale)
                    .collect();
                if req.characteristic == GroundKCentered {
                    for (v, r) in values.iter_mut().zip(self.grid().values()) {
                        *v -= PI * r * r;
                    }
                }
                Ok((values, None))
            }
            MarkVariogram | MarkVariogramRaw | MarkCorrelation | MeanProduct | RMarkH | RMarkL
            | Kappa { .. } => unreachable!("handled by the ratio branch"),
        }
    }

    /// Selected weighted sum (density or cumulative) and its normaliser ĉ_t.
    fn weighted_sum(
        &self,
        prep: &Prepared,
        w: Weight,
        perm: Option<&[usize]>,
        members: &Members,
        cumulative: bool,
    ) -> (Vec<f64>, f64) {
        let select = |i: usize, j: usize| members.contains(i, j);
        match w {
            Weight::Unit => {
                let v = if cumulative {
                    self.table.cumulative(|_, _| 1.0, select)
                } else {
                    self.table.density(|_, _| 1.0, select)
                };
                (v, 1.0)
            }
            Weight::Test(f) => {
                let (lm, c) = prep.lmat(f);
                let v = match (perm, cumulative) {
                    (Some(p), true) => self.table.cumulative(|i, j| lm.get(p[i], p[j]), select),
                    (Some(p), false) => self.table.density(|i, j| lm.get(p[i], p[j]), select),
                    (None, true) => self.table.cumulative(|i, j| lm.get(i, j), select),
                    (None, false) => self.table.density(|i, j| lm.get(i, j), select),
                };
                (v, c)
            }
        }
    }

    fn kappa(
        &self,
        marks: &FunctionalMarkSet,
        prep: &Prepared,
        f: TestFunction,
        n: Normalization,
        perm: Option<&[usize]>,
        keep: bool,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        let (h, l) = (prep.request.h, prep.request.l);
        let grid = &prep.grid;
        let tl = grid.len();
        let mean_normalized = matches!(
            n,
            Normalization::MeanProduct | Normalization::MeanH | Normalization::MeanL
        );
        if mean_normalized && self.config().normalization == MeanNormalization::Pointwise {
            let denom: Vec<f64> = (0..tl)
                .map(|k| match n {
                    Normalization::MeanProduct => prep.mean_h[k] * prep.mean_l[k],
                    Normalization::MeanH => prep.mean_h[k],
                    _ => prep.mean_l[k],
                })
                .collect();
            if denom.iter().any(|&d| d == 0.0) {
                return Err(Error::domain("mean mark curve vanishes at some time point"));
            }
            let mut pw = self.ratio_pointwise(marks, f, h, l)?;
            for row in pw.chunks_mut(tl) {
                for (v, d) in row.iter_mut().zip(&denom) {
                    *v /= d;
                }
            }
            return Ok((self.integrate_rows(&pw, grid), keep.then_some(pw)));
        }
        let (lm, chat) = prep.lmat(f);
        let c = match n {
            Normalization::CHat => chat,
            Normalization::Unit => 1.0,
            Normalization::MeanProduct => prep.int_mean_product(),
            Normalization::MeanH => grid.integrate_unchecked(&prep.mean_h),
            Normalization::MeanL => grid.integrate_unchecked(&prep.mean_l),
        };
        let values = self
            .ratio_from_lmatrix(lm, perm)
            .into_iter()
            .map(|v| guarded_div(v, c))
            .collect::<Result<Vec<_>>>()?;
        let pw = if keep {
            let p = self.ratio_pointwise(marks, f, h, l)?;
            Some(p.into_iter().map(|v| guarded_div(v, c)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok((values, pw))
    }

    fn cressie_pointwise(&self, marks: &FunctionalMarkSet, h: usize, l: usize) -> Result<Vec<f64>> {
        let lag = self.config().lag;
        let left = PairTest::new(TestFunction::Left, h, l).with_lag(lag);
        let right = PairTest::new(TestFunction::Right, h, l).with_lag(lag);
        let m4 = self.ratio_pointwise(marks, TestFunction::Left, h, l)?;
        let m5 = self.ratio_pointwise(marks, TestFunction::Right, h, l)?;
        let tl = left.grid(marks).len();
        let num = self.table.centred_product_pointwise(marks, (&left, &m4), (&right, &m5), tl)?;
        Ok(self.over_ground(num, tl))
    }

    /// Divides `[r * tl + t]` rows by ρ̂(r); NaN where ρ̂ vanishes.
    fn over_ground(&self, mut v: Vec<f64>, tl: usize) -> Vec<f64> {
        for (r, &g) in self.ground_density().iter().enumerate() {
            for x in &mut v[r * tl..(r + 1) * tl] {
                *x = if g > 0.0 { *x / g } else { f64::NAN };
            }
        }
        v
    }

    /// Pointwise Isham correlation. Time points where either channel is
    /// constant across all points contribute zero; negative variance
    /// products leave the entry undefined.
    fn isham_pointwise(&self, marks: &FunctionalMarkSet, h: usize, l: usize, conditional: bool) -> Result<Vec<f64>> {
        let lag = self.config().lag;
        let tl = marks.n_times() - lag;
        let constant_at = |c: usize, k: usize| {
            let v = marks.curve(0, c)[k];
            (1..marks.n_points()).all(|i| marks.curve(i, c)[k] == v)
        };
        let degenerate: Vec<bool> = (0..tl)
            .map(|k| {
                constant_at(h, k + lag) || constant_at(h, k) || constant_at(l, k + lag) || constant_at(l, k)
            })
            .collect();
        if degenerate.iter().all(|&d| d) {
            return Err(Error::domain(
                "Isham correlation is undefined: a mark channel has zero variance",
            ));
        }
        let cov = self.cressie_pointwise(marks, h, l)?;
        let (var_h, var_l) = if conditional {
            (self.palm_variance(marks, h, l, true)?, self.palm_variance(marks, h, l, false)?)
        } else {
            (self.cressie_pointwise(marks, h, h)?, self.cressie_pointwise(marks, l, l)?)
        };
        let mut out = vec![0.0; cov.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            if degenerate[idx % tl] {
                *o = if cov[idx].is_nan() { f64::NAN } else { 0.0 };
                continue;
            }
            let prod = var_h[idx] * var_l[idx];
            *o = if prod > 0.0 { cov[idx] / prod.sqrt() } else { f64::NAN };
        }
        Ok(out)
    }

    /// Palm variance E_r[(f − E_r[f])²] of the first point's channel h
    /// (`first`) or the second point's channel l, pointwise `[r * T + t]`.
    fn palm_variance(&self, marks: &FunctionalMarkSet, h: usize, l: usize, first: bool) -> Result<Vec<f64>> {
        let side = if first { TestFunction::Left } else { TestFunction::Right };
        let test = PairTest::new(side, h, l).with_lag(self.config().lag);
        let m1 = self.ratio_pointwise(marks, side, h, l)?;
        let tl = test.grid(marks).len();
        let num = self.table.centred_product_pointwise(marks, (&test, &m1), (&test, &m1), tl)?;
        Ok(self.over_ground(num, tl))
    }
}
