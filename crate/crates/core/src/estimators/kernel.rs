use std::f64::consts::PI;

/// Smoothing kernel used in the product-density sums. Every variant has unit mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Kernel {
    /// 3/(4b) (1 − (u/b)²) on |u| ≤ b.
    #[default]
    Epanechnikov,
    /// 1/(2b) on |u| ≤ b.
    Box,
    /// Gaussian with standard deviation b, cut at ±4b and renormalised.
    GaussianTruncated,
}

/// P(|Z| ≤ 4) for a standard normal Z, i.e. erf(2√2).
const GAUSS_MASS_4SD: f64 = 0.999_936_657_516_333_8;
const GAUSS_CUT: f64 = 4.0;

impl Kernel {
    /// Half-width of the support for bandwidth `b`.
    #[inline]
    pub fn support(self, b: f64) -> f64 {
        match self {
            Kernel::Epanechnikov | Kernel::Box => b,
            Kernel::GaussianTruncated => GAUSS_CUT * b,
        }
    }

    #[inline]
    pub fn eval(self, u: f64, b: f64) -> f64 {
        let z = u / b;
        match self {
            Kernel::Epanechnikov => {
                if z.abs() <= 1.0 {
                    0.75 * (1.0 - z * z) / b
                } else {
                    0.0
                }
            }
            Kernel::Box => {
                if z.abs() <= 1.0 {
                    0.5 / b
                } else {
                    0.0
                }
            }
            Kernel::GaussianTruncated => {
                if z.abs() <= GAUSS_CUT {
                    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * b * GAUSS_MASS_4SD)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Box => "box",
            Kernel::GaussianTruncated => "gaussian_truncated",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Kernel::Epanechnikov, Kernel::Box, Kernel::GaussianTruncated]
            .into_iter()
            .find(|k| k.name() == s)
    }
}
