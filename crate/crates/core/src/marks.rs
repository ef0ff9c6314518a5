//! Time grids and function-valued marks sampled on them.

use crate::error::{Error, Result};

/// Shared sampling grid of the mark curves.
///
/// A single sample degenerates to scalar marks: integration returns the
/// sample itself.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::domain("time grid needs at least one sample"));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("time grid contains non-finite values"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("time grid must be strictly increasing"));
        }
        let weights = trapezoid_weights(&t);
        Ok(Self { t, weights })
    }

    /// `count` equally spaced samples on `[a, b]`.
    pub fn uniform(a: f64, b: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::domain("time grid needs at least one sample")),
            1 => Self::new(vec![a]),
            _ => {
                let step = (b - a) / (count - 1) as f64;
                Self::new((0..count).map(|k| a + k as f64 * step).collect())
            }
        }
    }

    /// Single-sample grid for scalar marks.
    pub fn scalar() -> Self {
        Self::new(vec![0.0]).unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Quadrature weights; `integrate` is the dot product with these.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of the constant 1: the span for T >= 2, one for scalar grids.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Trapezoid rule on the grid without length checks.
    #[inline]
    pub fn integrate_unchecked(&self, samples: &[f64]) -> f64 {
        samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s * w)
            .sum()
    }

    /// Trapezoid rule over the sub-grid `t[start..]`, used for lagged comparisons.
    pub(crate) fn tail(&self, start: usize) -> TimeGrid {
        TimeGrid::new(self.t[start..].to_vec()).unwrap()
    }
}

fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let half = 0.5 * (t[k + 1] - t[k]);
        w[k] += half;
        w[k + 1] += half;
    }
    w
}

/// Trapezoidal integral of `samples` over `grid`.
pub fn integrate_over_t(samples: &[f64], grid: &TimeGrid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::domain(format!(
            "{} samples supplied for a grid of length {}",
            samples.len(),
            grid.len()
        )));
    }
    Ok(grid.integrate_unchecked(samples))
}

/// n x p x T array of mark curves on one shared time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalMarkSet {
    grid: TimeGrid,
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl FunctionalMarkSet {
    /// `values` is laid out point-major, then channel, then time.
    pub fn new(grid: TimeGrid, n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("mark set needs at least one channel"));
        }
        if values.len() != n * p * grid.len() {
            return Err(Error::domain(format!(
                "expected {} values for n={n}, p={p}, T={}, got {}",
                n * p * grid.len(),
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("mark values must be finite"));
        }
        Ok(Self { grid, n, p, values })
    }

    /// Builds a set from per-channel curve lists `channels[h][i]`.
    pub fn from_channels(grid: TimeGrid, channels: &[Vec<Vec<f64>>]) -> Result<Self> {
        let p = channels.len();
        if p == 0 {
            return Err(Error::domain("mark set needs at least one channel"));
        }
        let n = channels[0].len();
        let t = grid.len();
        let mut values = Vec::with_capacity(n * p * t);
        for i in 0..n {
            for (h, ch) in channels.iter().enumerate() {
                let curve = ch.get(i).ok_or_else(|| {
                    Error::domain(format!("channel {h} has {} curves, expected {n}", ch.len()))
                })?;
                if curve.len() != t {
                    return Err(Error::domain(format!(
                        "curve of point {i}, channel {h} has {} samples, grid has {t}",
                        curve.len()
                    )));
                }
                values.extend_from_slice(curve);
            }
        }
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::domain("channels disagree on the number of points"));
        }
        Self::new(grid, n, p, values)
    }

    /// Scalar marks as a single-sample grid, `columns[h][i]`.
    pub fn from_scalars(columns: &[Vec<f64>]) -> Result<Self> {
        let channels: Vec<Vec<Vec<f64>>> = columns
            .iter()
            .map(|c| c.iter().map(|&v| vec![v]).collect())
            .collect();
        Self::from_channels(TimeGrid::scalar(), &channels)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn n_channels(&self) -> usize {
        self.p
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn curve(&self, point: usize, channel: usize) -> &[f64] {
        let t = self.grid.len();
        let start = (point * self.p + channel) * t;
        &self.values[start..start + t]
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn check_channel(&self, h: usize) -> Result<()> {
        if h >= self.p {
            return Err(Error::domain(format!(
                "channel {h} out of range for {} channels",
                self.p
            )));
        }
        Ok(())
    }

    /// Reorders whole mark tuples: point `i` receives the marks of `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.n);
        let block = self.p * self.grid.len();
        let mut values = Vec::with_capacity(self.values.len());
        for &src in perm {
            values.extend_from_slice(&self.values[src * block..(src + 1) * block]);
        }
        Self {
            grid: self.grid.clone(),
            n: self.n,
            p: self.p,
            values,
        }
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        for &h in channels {
            self.check_channel(h)?;
        }
        let mut values = Vec::with_capacity(self.n * channels.len() * self.grid.len());
        for i in 0..self.n {
            for &h in channels {
                values.extend_from_slice(self.curve(i, h));
            }
        }
        Self::new(self.grid.clone(), self.n, channels.len(), values)
    }

    /// Applies `f` to every sample of channel `h`.
    pub fn map_channel(&self, h: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.check_channel(h)?;
        let t = self.grid.len();
        let mut values = self.values.clone();
        for i in 0..self.n {
            let start = (i * self.p + h) * t;
            for v in &mut values[start..start + t] {
                *v = f(*v);
            }
        }
        Self::new(self.grid.clone(), self.n, self.p, values)
    }

    /// True when every point carries the same curve in channel `h`.
    pub fn is_constant_channel(&self, h: usize) -> bool {
        if self.n == 0 {
            return true;
        }
        let first = self.curve(0, h);
        (1..self.n).all(|i| self.curve(i, h) == first)
    }
}

/// Pointwise empirical mean curve of channel `h`.
pub fn functional_mean(marks: &FunctionalMarkSet, h: usize) -> Result<Vec<f64>> {
    marks.check_channel(h)?;
    if marks.n_points() == 0 {
        return Err(Error::domain("functional mean of an empty pattern"));
    }
    let n = marks.n_points();
    let mut mean = vec![0.0; marks.n_times()];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(marks.curve(i, h)) {
            *m += v;
        }
    }
    let inv = 1.0 / n as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn constant_integrates_to_span() {
        let g = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let v = integrate_over_t(&[1.0; 11], &g).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_is_exact() {
        let g = TimeGrid::uniform(0.0, 1.0, 101).unwrap();
        let v = integrate_over_t(g.values(), &g).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_matches_simpson_oracle() {
        let g = TimeGrid::uniform(0.0, 1.0, 101).unwrap();
        let s: Vec<f64> = g.values().iter().map(|t| t * t).collect();
        let v = integrate_over_t(&s, &g).unwrap();
        let oracle = simpson(|t| t * t, 0.0, 1.0, 100_000);
        assert!((v - oracle).abs() < 1e-4);
    }

    #[test]
    fn scalar_grid_returns_sample() {
        let g = TimeGrid::scalar();
        assert_eq!(integrate_over_t(&[3.25], &g).unwrap(), 3.25);
        assert_eq!(g.measure(), 1.0);
    }

    #[test]
    fn nonuniform_grid_weights() {
        let g = TimeGrid::new(vec![0.0, 0.1, 0.5, 2.0]).unwrap();
        let s: Vec<f64> = g.values().iter().map(|t| 3.0 * t + 1.0).collect();
        // exact integral of 3t + 1 over [0, 2]
        assert!((integrate_over_t(&s, &g).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let g = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        assert!(integrate_over_t(&[1.0, 2.0], &g).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![]).is_err());
    }

    #[test]
    fn mean_of_two_constants() {
        let g = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        let m = FunctionalMarkSet::from_channels(g, &[vec![vec![2.0; 4], vec![4.0; 4]]]).unwrap();
        assert_eq!(functional_mean(&m, 0).unwrap(), vec![3.0; 4]);
    }

    #[test]
    fn mean_of_single_point_is_identity() {
        let g = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let m = FunctionalMarkSet::from_channels(g, &[vec![vec![0.5, -1.0, 7.0]]]).unwrap();
        assert_eq!(functional_mean(&m, 0).unwrap(), vec![0.5, -1.0, 7.0]);
    }

    #[test]
    fn mean_matches_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t = 6;
        let g = TimeGrid::uniform(0.0, 2.0, t).unwrap();
        let curves: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..t).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let m = FunctionalMarkSet::from_channels(g, &[curves.clone(), curves.clone()]).unwrap();
        let mean = functional_mean(&m, 1).unwrap();
        for k in 0..t {
            let mut acc = 0.0;
            for c in &curves {
                acc += c[k];
            }
            assert!((mean[k] - acc / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_bad_channel_errors() {
        let g = TimeGrid::uniform(0.0, 1.0, 2).unwrap();
        let m = FunctionalMarkSet::new(g.clone(), 0, 1, vec![]).unwrap();
        assert!(functional_mean(&m, 0).is_err());
        let m = FunctionalMarkSet::new(g, 1, 1, vec![1.0, 2.0]).unwrap();
        assert!(functional_mean(&m, 1).is_err());
    }

    #[test]
    fn permutation_moves_whole_tuples() {
        let g = TimeGrid::scalar();
        let m = FunctionalMarkSet::from_scalars(&[vec![1.0, 2.0, 3.0], vec![10.0, 20.0, 30.0]]).unwrap();
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.curve(0, 0), &[3.0]);
        assert_eq!(p.curve(0, 1), &[30.0]);
        assert_eq!(p.curve(1, 1), &[10.0]);
        assert_eq!(p.grid(), &g);
    }

    proptest! {
        #[test]
        fn integration_is_linear(
            a in prop::collection::vec(-10.0..10.0f64, 7),
            b in prop::collection::vec(-10.0..10.0f64, 7),
            alpha in -5.0..5.0f64,
        ) {
            let g = TimeGrid::new(vec![0.0, 0.3, 0.4, 1.0, 1.7, 2.0, 3.5]).unwrap();
            let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
            let lhs = integrate_over_t(&combo, &g).unwrap();
            let rhs = alpha * integrate_over_t(&a, &g).unwrap() + integrate_over_t(&b, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn mean_commutes_with_affine_maps(
            vals in prop::collection::vec(-10.0..10.0f64, 12),
            alpha in -3.0..3.0f64,
            beta in -3.0..3.0f64,
        ) {
            let g = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
            let m = FunctionalMarkSet::new(g, 4, 1, vals).unwrap();
            let mapped = m.map_channel(0, |v| alpha * v + beta).unwrap();
            let lhs = functional_mean(&mapped, 0).unwrap();
            let rhs = functional_mean(&m, 0).unwrap();
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - (alpha * r + beta)).abs() < 1e-12);
            }
        }
    }
}
