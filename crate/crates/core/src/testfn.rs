//! Test functions on pairs of mark values and their time integrals.

use crate::error::{Error, Result};
use crate::marks::{FunctionalMarkSet, TimeGrid};

/// Pointwise test function applied to a pair of mark values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// ½(a − b)², the variogram test function.
    HalfSquaredDiff,
    /// min(a, b) / max(a, b), defined for strictly positive marks.
    Ratio,
    /// a · b
    Product,
    /// a
    Left,
    /// b
    Right,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] = [
        TestFunction::HalfSquaredDiff,
        TestFunction::Ratio,
        TestFunction::Product,
        TestFunction::Left,
        TestFunction::Right,
    ];

    #[inline]
    pub fn eval(self, a: f64, b: f64) -> Result<f64> {
        Ok(match self {
            TestFunction::HalfSquaredDiff => 0.5 * (a - b) * (a - b),
            TestFunction::Ratio => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::domain("ratio test requires strictly positive marks"));
                }
                a.min(b) / a.max(b)
            }
            TestFunction::Product => a * b,
            TestFunction::Left => a,
            TestFunction::Right => b,
        })
    }

    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            TestFunction::HalfSquaredDiff | TestFunction::Ratio | TestFunction::Product
        )
    }

    pub fn short_name(self) -> &'static str {
        match self {
            TestFunction::HalfSquaredDiff => "t1",
            TestFunction::Ratio => "t2",
            TestFunction::Product => "t3",
            TestFunction::Left => "t4",
            TestFunction::Right => "t5",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.short_name() == s)
    }
}

/// Which point supplies the second argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pairing {
    /// A second point at distance r.
    Pair,
    /// The nearest neighbour of the first point.
    NearestNeighbour,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TestFunctionKind {
    pub func: TestFunction,
    pub pairing: Pairing,
}

impl TestFunctionKind {
    pub const fn pair(func: TestFunction) -> Self {
        Self {
            func,
            pairing: Pairing::Pair,
        }
    }

    pub const fn nearest_neighbour(func: TestFunction) -> Self {
        Self {
            func,
            pairing: Pairing::NearestNeighbour,
        }
    }
}

/// Evaluates a test function on two mark values.
pub fn eval_testfn(kind: TestFunctionKind, a: f64, b: f64) -> Result<f64> {
    kind.func.eval(a, b)
}

/// Integral over the time grid of the pointwise test function.
///
/// With `lag = s > 0` the first curve at `t_k` is compared with the second
/// curve at `t_{k-s}`, integrated over `t_s .. t_{T-1}`.
pub fn eval_testfn_integrated(
    kind: TestFunctionKind,
    fa: &[f64],
    fb: &[f64],
    grid: &TimeGrid,
    lag: usize,
) -> Result<f64> {
    if fa.len() != grid.len() || fb.len() != grid.len() {
        return Err(Error::domain("curve length does not match the time grid"));
    }
    if lag >= grid.len() {
        return Err(Error::domain(format!(
            "time lag {lag} must be smaller than the grid length {}",
            grid.len()
        )));
    }
    let mut values = vec![0.0; grid.len() - lag];
    lagged_pointwise(kind.func, fa, fb, lag, &mut values)?;
    if lag == 0 {
        Ok(grid.integrate_unchecked(&values))
    } else {
        Ok(grid.tail(lag).integrate_unchecked(&values))
    }
}

#[inline]
fn lagged_pointwise(f: TestFunction, fa: &[f64], fb: &[f64], lag: usize, out: &mut [f64]) -> Result<()> {
    for (k, o) in out.iter_mut().enumerate() {
        *o = f.eval(fa[k + lag], fb[k])?;
    }
    Ok(())
}

/// A function of the full marks of an ordered point pair, sampled on a time grid.
///
/// Estimators only need pointwise values for every ordered pair; the
/// integrated value ℓ is their trapezoid integral on [`Self::grid`].
pub trait MarkPairFunction: Sync {
    /// Grid on which [`Self::pointwise`] is sampled.
    fn grid(&self, marks: &FunctionalMarkSet) -> TimeGrid;

    /// Validates channels against the mark set.
    fn check(&self, marks: &FunctionalMarkSet) -> Result<()>;

    /// Writes the pointwise values for the ordered pair (i, j).
    fn pointwise(&self, marks: &FunctionalMarkSet, i: usize, j: usize, out: &mut [f64]) -> Result<()>;
}

/// A two-channel test function: first argument channel `h` at point i,
/// second argument channel `l` at point j.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairTest {
    pub func: TestFunction,
    pub h: usize,
    pub l: usize,
    pub lag: usize,
}

impl PairTest {
    pub const fn new(func: TestFunction, h: usize, l: usize) -> Self {
        Self { func, h, l, lag: 0 }
    }

    pub const fn with_lag(mut self, lag: usize) -> Self {
        self.lag = lag;
        self
    }
}

impl MarkPairFunction for PairTest {
    fn grid(&self, marks: &FunctionalMarkSet) -> TimeGrid {
        if self.lag == 0 {
            marks.grid().clone()
        } else {
            marks.grid().tail(self.lag)
        }
    }

    fn check(&self, marks: &FunctionalMarkSet) -> Result<()> {
        marks.check_channel(self.h)?;
        marks.check_channel(self.l)?;
        if self.lag >= marks.n_times() {
            return Err(Error::domain(format!(
                "time lag {} must be smaller than the grid length {}",
                self.lag,
                marks.n_times()
            )));
        }
        Ok(())
    }

    #[inline]
    fn pointwise(&self, marks: &FunctionalMarkSet, i: usize, j: usize, out: &mut [f64]) -> Result<()> {
        lagged_pointwise(
            self.func,
            marks.curve(i, self.h),
            marks.curve(j, self.l),
            self.lag,
            out,
        )
    }
}

/// How the right-hand channel set enters a multi-function test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    /// Apply the base function to the mean of the right channels.
    MeanOfOthers,
    /// Sum the base function over each right channel.
    PairwiseSum,
}

/// Test function relating channel `d` at the origin to a set of channels
/// at the displaced point (three or more channels).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiTestFunctionSpec {
    base: TestFunction,
    combine: Combine,
    left: usize,
    right: Vec<usize>,
}

impl MultiTestFunctionSpec {
    /// `base` must be the variogram or product test function. The right set may
    /// contain the left channel (relating `d` to all channels) but no duplicates.
    pub fn new(base: TestFunction, combine: Combine, left: usize, right: Vec<usize>) -> Result<Self> {
        if !matches!(base, TestFunction::HalfSquaredDiff | TestFunction::Product) {
            return Err(Error::domain(
                "multi-function test functions are built on t1 or t3",
            ));
        }
        if right.is_empty() {
            return Err(Error::domain("right channel set is empty"));
        }
        let mut sorted = right.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("duplicate channel in right channel set"));
        }
        Ok(Self {
            base,
            combine,
            left,
            right,
        })
    }

    pub fn base(&self) -> TestFunction {
        self.base
    }

    pub fn combine(&self) -> Combine {
        self.combine
    }

    fn check_channels(&self, p: usize) -> Result<()> {
        if p < 3 {
            return Err(Error::domain(format!(
                "multi-function test functions need at least three channels, got {p}"
            )));
        }
        if let Some(&bad) = std::iter::once(&self.left)
            .chain(&self.right)
            .find(|&&c| c >= p)
        {
            return Err(Error::domain(format!("channel {bad} out of range for {p} channels")));
        }
        Ok(())
    }

    /// Evaluates at one time point; `origin[c]` and `displaced[c]` are the
    /// values of channel c at the two points.
    pub fn eval(&self, origin: &[f64], displaced: &[f64]) -> Result<f64> {
        self.check_channels(origin.len().min(displaced.len()))?;
        Ok(self.eval_unchecked(origin[self.left], |c| displaced[c]))
    }

    #[inline]
    fn eval_unchecked(&self, a: f64, displaced: impl Fn(usize) -> f64) -> f64 {
        // base is t1 or t3, neither can fail
        match self.combine {
            Combine::MeanOfOthers => {
                let mean =
                    self.right.iter().map(|&c| displaced(c)).sum::<f64>() / self.right.len() as f64;
                self.base.eval(a, mean).unwrap()
            }
            Combine::PairwiseSum => self
                .right
                .iter()
                .map(|&c| self.base.eval(a, displaced(c)).unwrap())
                .sum(),
        }
    }
}

/// Multi-function test function at a single time point.
pub fn eval_multifunction_testfn(spec: &MultiTestFunctionSpec, origin: &[f64], displaced: &[f64]) -> Result<f64> {
    spec.eval(origin, displaced)
}

impl MarkPairFunction for MultiTestFunctionSpec {
    fn grid(&self, marks: &FunctionalMarkSet) -> TimeGrid {
        marks.grid().clone()
    }

    fn check(&self, marks: &FunctionalMarkSet) -> Result<()> {
        self.check_channels(marks.n_channels())
    }

    fn pointwise(&self, marks: &FunctionalMarkSet, i: usize, j: usize, out: &mut [f64]) -> Result<()> {
        let a = marks.curve(i, self.left);
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.eval_unchecked(a[k], |c| marks.curve(j, c)[k]);
        }
        Ok(())
    }
}

/// Integrated value ℓ of a pair function for the ordered pair (i, j).
pub fn integrated_pair_value(
    f: &dyn MarkPairFunction,
    marks: &FunctionalMarkSet,
    i: usize,
    j: usize,
) -> Result<f64> {
    f.check(marks)?;
    let grid = f.grid(marks);
    let mut buf = vec![0.0; grid.len()];
    f.pointwise(marks, i, j, &mut buf)?;
    Ok(grid.integrate_unchecked(&buf))
}
