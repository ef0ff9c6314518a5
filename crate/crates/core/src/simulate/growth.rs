use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::PointPattern;
use crate::marks::{FunctionalMarkSet, TimeGrid};

use super::rng::stream_rng;

/// Stream of the starting-value draws. Point samplers use the low streams,
/// so a seed shared with the pattern still gives marks independent of it.
const INITIAL_STREAM: u64 = 0x696e_6974;

/// Wiring of the interaction function into the two growth equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthMode {
    /// No interaction: the constant c is ignored.
    Independent,
    /// Both channels receive the interaction increment.
    Positive,
    /// Only channel h receives the interaction increment.
    Negative,
}

impl GrowthMode {
    pub fn name(self) -> &'static str {
        match self {
            GrowthMode::Independent => "independent",
            GrowthMode::Positive => "positive",
            GrowthMode::Negative => "negative",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "independent" => Some(GrowthMode::Independent),
            "positive" => Some(GrowthMode::Positive),
            "negative" => Some(GrowthMode::Negative),
            _ => None,
        }
    }
}

/// Starting values f_h(0), f_l(0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialValues {
    Constant { h: f64, l: f64 },
    /// Independent uniform draws on [lo, hi) per point and channel.
    Uniform { lo: f64, hi: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthParams {
    pub s_h: f64,
    pub s_l: f64,
    pub beta_h: f64,
    pub beta_l: f64,
    /// Interaction distance D.
    pub d: f64,
    /// Interaction constant c.
    pub c: f64,
    pub mode: GrowthMode,
    pub dt: f64,
    pub steps: usize,
    pub initial: InitialValues,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            s_h: 5.0,
            s_l: 5.0,
            beta_h: 0.05,
            beta_l: 0.2,
            d: 0.05,
            c: 0.0,
            mode: GrowthMode::Independent,
            dt: 0.1,
            steps: 100,
            initial: InitialValues::Constant { h: 0.1, l: 0.1 },
        }
    }
}

impl GrowthParams {
    /// Simulation-study parameters for a mode: c = 0.5 for the interacting modes.
    pub fn scenario(mode: GrowthMode) -> Self {
        Self {
            c: if mode == GrowthMode::Independent { 0.0 } else { 0.5 },
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("S_h", self.s_h),
            ("S_l", self.s_l),
            ("beta_h", self.beta_h),
            ("beta_l", self.beta_l),
            ("dt", self.dt),
            ("D", self.d),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!(
                "interaction constant c must be nonnegative, got {}",
                self.c
            )));
        }
        if self.steps == 0 {
            return Err(Error::domain("growth simulation needs at least one step"));
        }
        match self.initial {
            InitialValues::Constant { h, l } => {
                if !(h.is_finite() && l.is_finite() && h >= 0.0 && l >= 0.0) {
                    return Err(Error::domain("initial values must be finite and nonnegative"));
                }
            }
            InitialValues::Uniform { lo, hi, .. } => {
                if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(Error::domain(format!(
                        "uniform initial range must satisfy 0 <= lo < hi, got [{lo}, {hi})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Interaction constants (J_h, J_l).
    fn couplings(&self) -> (f64, f64) {
        match self.mode {
            GrowthMode::Independent => (0.0, 0.0),
            GrowthMode::Positive => (self.c, self.c),
            GrowthMode::Negative => (self.c, 0.0),
        }
    }
}

/// Euler iteration of logistic growth (channel h) and immigration-death
/// growth (channel l) plus a constant increment c per neighbour closer than D.
/// Channel 0 holds f_h, channel 1 holds f_l.
pub fn simulate_growth_marks(pattern: &PointPattern, params: &GrowthParams) -> Result<FunctionalMarkSet> {
    params.validate()?;
    let n = pattern.len();
    if n == 0 {
        return Err(Error::domain("growth simulation needs a nonempty pattern"));
    }
    let neighbours: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && pattern.distance(i, j) < params.d).count() as f64)
        .collect();
    let (mut fh, mut fl): (Vec<f64>, Vec<f64>) = match params.initial {
        InitialValues::Constant { h, l } => (vec![h; n], vec![l; n]),
        InitialValues::Uniform { lo, hi, seed } => {
            let mut rng = stream_rng(seed, INITIAL_STREAM);
            (0..n)
                .map(|_| {
                    let a = lo + (hi - lo) * rng.random::<f64>();
                    let b = lo + (hi - lo) * rng.random::<f64>();
                    (a, b)
                })
                .unzip()
        }
    };
    let (jh, jl) = params.couplings();
    let dt = params.dt;
    let tlen = params.steps + 1;
    let mut h_curves = vec![Vec::with_capacity(tlen); n];
    let mut l_curves = vec![Vec::with_capacity(tlen); n];
    for i in 0..n {
        h_curves[i].push(fh[i]);
        l_curves[i].push(fl[i]);
    }
    for _ in 0..params.steps {
        for i in 0..n {
            let h = fh[i];
            let l = fl[i];
            fh[i] = h + params.beta_h * h * (1.0 - h / params.s_h) * dt + jh * neighbours[i] * dt;
            fl[i] = l + params.beta_l * (1.0 - l / params.s_l) * dt + jl * neighbours[i] * dt;
            if !(fh[i] >= 0.0 && fl[i] >= 0.0 && fh[i].is_finite() && fl[i].is_finite()) {
                return Err(Error::domain(format!(
                    "growth step overshoots to a negative or non-finite value; use dt < 1/beta_h = {}",
                    1.0 / params.beta_h
                )));
            }
            h_curves[i].push(fh[i]);
            l_curves[i].push(fl[i]);
        }
    }
    let grid = TimeGrid::new((0..tlen).map(|k| k as f64 * dt).collect())?;
    FunctionalMarkSet::from_channels(grid, &[h_curves, l_curves])
}
