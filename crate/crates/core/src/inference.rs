//! Pointwise Monte-Carlo rank envelopes for random labelling and CSR.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::estimators::{CurveKind, EstimationConfig, Estimator, StatisticRequest, SummaryCurve};
use crate::geometry::{DistanceGrid, PointPattern};
use crate::marks::FunctionalMarkSet;
use crate::simulate::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullModel {
    RandomLabeling,
    Csr,
}

impl NullModel {
    pub fn name(self) -> &'static str {
        match self {
            NullModel::RandomLabeling => "random_labeling",
            NullModel::Csr => "csr",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "random_labeling" => Some(NullModel::RandomLabeling),
            "csr" => Some(NullModel::Csr),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnvelopeOptions {
    pub nsim: usize,
    /// Rank of the envelope values: k-th smallest and k-th largest.
    pub k_env: usize,
    pub seed: u64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            nsim: 199,
            k_env: 5,
            seed: 1,
        }
    }
}

impl EnvelopeOptions {
    fn validate(&self) -> Result<()> {
        if self.k_env == 0 {
            return Err(Error::domain("envelope rank must be at least 1"));
        }
        if self.nsim < 2 * self.k_env {
            return Err(Error::domain(format!(
                "nsim = {} must be at least 2 * k_env = {}",
                self.nsim,
                2 * self.k_env
            )));
        }
        Ok(())
    }
}

/// Observed curve with its pointwise rank envelope. `NaN` marks r values where
/// the observed statistic is undefined or fewer than k_env simulations are.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeBand {
    pub kind: CurveKind,
    pub r: DistanceGrid,
    pub observed: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub theoretical: Option<Vec<f64>>,
    pub nsim: usize,
    pub k_env: usize,
    pub null: NullModel,
    pub channels: Option<(usize, usize)>,
}

impl EnvelopeBand {
    /// Fraction of defined grid points where the observed value lies outside the band.
    pub fn exit_fraction(&self) -> f64 {
        let (mut out, mut defined) = (0usize, 0usize);
        for k in 0..self.observed.len() {
            let (o, lo, hi) = (self.observed[k], self.lower[k], self.upper[k]);
            if o.is_finite() && lo.is_finite() && hi.is_finite() {
                defined += 1;
                if o < lo || o > hi {
                    out += 1;
                }
            }
        }
        if defined == 0 {
            0.0
        } else {
            out as f64 / defined as f64
        }
    }

    pub fn is_inside(&self, k: usize) -> bool {
        self.observed[k] >= self.lower[k] && self.observed[k] <= self.upper[k]
    }

    pub fn as_curve(&self) -> SummaryCurve {
        let mut c = SummaryCurve::new(self.kind, self.r.clone(), self.observed.clone());
        c.channels = self.channels;
        c
    }
}

/// k-th smallest and k-th largest finite values at each r.
fn rank_bounds(sims: &[Vec<f64>], nr: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lower = vec![f64::NAN; nr];
    let mut upper = vec![f64::NAN; nr];
    let mut col = Vec::with_capacity(sims.len());
    for r in 0..nr {
        col.clear();
        col.extend(sims.iter().map(|s| s[r]).filter(|v| v.is_finite()));
        if col.len() < k {
            continue;
        }
        col.sort_by(f64::total_cmp);
        lower[r] = col[k - 1];
        upper[r] = col[col.len() - k];
    }
    (lower, upper)
}

fn run_sims<F>(nsim: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..nsim).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..nsim).map(f).collect()
    }
}

/// Uniform permutation of point indices for simulation `sim`.
pub fn label_permutation(n: usize, seed: u64, sim: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, sim as u64));
    perm
}

impl Estimator {
    /// Random-labelling envelope: locations fixed, whole mark tuples permuted.
    pub fn random_label_envelope(
        &self,
        marks: &FunctionalMarkSet,
        request: &StatisticRequest,
        opts: &EnvelopeOptions,
    ) -> Result<EnvelopeBand> {
        opts.validate()?;
        if marks.n_points() == 0 {
            return Err(Error::domain("random labelling needs a nonempty mark set"));
        }
        let prep = self.prepare(marks, request)?;
        let observed = self.evaluate(marks, &prep, None)?;
        let n = self.n();
        let sims = run_sims(opts.nsim, |s| {
            let perm = label_permutation(n, opts.seed, s);
            Ok(self.evaluate(marks, &prep, Some(&perm))?.values)
        })?;
        let (lower, upper) = rank_bounds(&sims, observed.values.len(), opts.k_env);
        Ok(EnvelopeBand {
            kind: observed.kind,
            r: observed.r.clone(),
            theoretical: self.theoretical(&prep),
            channels: observed.channels,
            observed: observed.values,
            lower,
            upper,
            nsim: opts.nsim,
            k_env: opts.k_env,
            null: NullModel::RandomLabeling,
        })
    }

    /// CSR envelope from Poisson patterns with the observed intensity; the
    /// bandwidth and grid stay fixed at the values resolved for the observed pattern.
    pub fn csr_envelope(&self, request: &StatisticRequest, opts: &EnvelopeOptions) -> Result<EnvelopeBand> {
        opts.validate()?;
        if !request.characteristic.is_points_only() {
            return Err(Error::domain("CSR envelopes apply to points-only statistics"));
        }
        let empty = FunctionalMarkSet::from_scalars(&[vec![]])?;
        let prep = self.prepare(&empty, request)?;
        let observed = self.evaluate(&empty, &prep, None)?;
        let window = *self.pattern().window();
        let lambda = self.intensity();
        let frozen = self.config().to_config();
        let nr = observed.values.len();
        let sims = run_sims(opts.nsim, |s| {
            let mut rng = stream_rng(opts.seed, s as u64);
            let sim = crate::simulate::poisson_in(&mut rng, &window, lambda)?;
            if sim.len() < 2 {
                return Ok(vec![f64::NAN; nr]);
            }
            let est = Estimator::new(&sim, &frozen)?;
            let prep = est.prepare(&empty, request)?;
            Ok(est.evaluate(&empty, &prep, None)?.values)
        })?;
        let (lower, upper) = rank_bounds(&sims, nr, opts.k_env);
        Ok(EnvelopeBand {
            kind: observed.kind,
            r: observed.r.clone(),
            theoretical: self.theoretical(&prep),
            channels: None,
            observed: observed.values,
            lower,
            upper,
            nsim: opts.nsim,
            k_env: opts.k_env,
            null: NullModel::Csr,
        })
    }
}

pub fn random_label_envelope(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    request: &StatisticRequest,
    cfg: &EstimationConfig,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeBand> {
    Estimator::new(pattern, cfg)?.random_label_envelope(marks, request, opts)
}

pub fn csr_envelope(
    pattern: &PointPattern,
    request: &StatisticRequest,
    cfg: &EstimationConfig,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeBand> {
    Estimator::new(pattern, cfg)?.csr_envelope(request, opts)
}
