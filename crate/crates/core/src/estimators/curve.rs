use crate::geometry::DistanceGrid;

/// Identifies which characteristic a [`SummaryCurve`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CurveKind {
    GammaHl,
    /// Mark variogram without the ĉ_t normalisation.
    GammaHlRaw,
    KappaHl,
    TauHl,
    CovSto,
    CovCre,
    CorrIsh,
    /// Isham correlation with Palm-conditional variances.
    CorrIshCond,
    KappaBei,
    CHl,
    KappaHDot,
    KappaDotL,
    /// Generic ratio estimator for an arbitrary test function.
    KappaTf,
    GTf,
    KTf,
    LTf,
    U,
    GGround,
    KGround,
    /// Ripley's K minus the Poisson reference πr².
    KGroundCentered,
    /// Second-order product density of the ground pattern.
    RhoGround,
    /// Test-function weighted product density.
    RhoTf,
}

impl CurveKind {
    pub fn id(self) -> &'static str {
        match self {
            CurveKind::GammaHl => "gamma_hl",
            CurveKind::GammaHlRaw => "gamma_hl_raw",
            CurveKind::KappaHl => "kappa_hl",
            CurveKind::TauHl => "tau_hl",
            CurveKind::CovSto => "cov_sto",
            CurveKind::CovCre => "cov_cre",
            CurveKind::CorrIsh => "corr_ish",
            CurveKind::CorrIshCond => "corr_ish_cond",
            CurveKind::KappaBei => "kappa_bei",
            CurveKind::CHl => "c_hl",
            CurveKind::KappaHDot => "kappa_hdot",
            CurveKind::KappaDotL => "kappa_dotl",
            CurveKind::KappaTf => "kappa_tf",
            CurveKind::GTf => "g_tf",
            CurveKind::KTf => "K_tf",
            CurveKind::LTf => "L_tf",
            CurveKind::U => "U",
            CurveKind::GGround => "g_ground",
            CurveKind::KGround => "K_ground",
            CurveKind::KGroundCentered => "K_ground_centered",
            CurveKind::RhoGround => "rho_ground",
            CurveKind::RhoTf => "rho_tf",
        }
    }
}

/// Multitype restriction recorded on a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypePair {
    Cross(u32, u32),
    Dot(u32),
}

/// A characteristic evaluated on a distance grid. `NaN` marks undefined entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCurve {
    pub kind: CurveKind,
    pub r: DistanceGrid,
    pub values: Vec<f64>,
    pub channels: Option<(usize, usize)>,
    pub types: Option<TypePair>,
    /// Pre-integration values indexed `[t][r]`, when requested.
    pub pointwise: Option<Vec<Vec<f64>>>,
}

impl SummaryCurve {
    pub fn new(kind: CurveKind, r: DistanceGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(r.len(), values.len());
        Self {
            kind,
            r,
            values,
            channels: None,
            types: None,
            pointwise: None,
        }
    }

    pub fn with_channels(mut self, h: usize, l: usize) -> Self {
        self.channels = Some((h, l));
        self
    }

    pub fn is_defined(&self, k: usize) -> bool {
        self.values[k].is_finite()
    }

    /// Number of grid points where the value is defined.
    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }
}
