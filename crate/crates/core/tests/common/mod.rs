//! Brute-force reference implementations used by the integration tests.
//!
//! Everything here is written from the estimator definitions with plain
//! double loops over point pairs. Nothing is shared with the library apart
//! from the input types, so agreement is a real cross-check.
#![allow(dead_code)]

use std::f64::consts::PI;

use fmark::estimators::{EstimationConfig, Kernel};
use fmark::geometry::{DistanceGrid, Point, PointPattern, Topology, Window};
use fmark::marks::{FunctionalMarkSet, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OKernel {
    Epa,
    Box,
    Gauss,
}

/// A pattern with marks held in plain nested vectors.
#[derive(Clone, Debug)]
pub struct Case {
    pub width: f64,
    pub height: f64,
    pub torus: bool,
    pub xy: Vec<(f64, f64)>,
    pub labels: Vec<u32>,
    /// marks[i][c][k]
    pub marks: Vec<Vec<Vec<f64>>>,
    pub t: Vec<f64>,
    pub kernel: OKernel,
    pub b: f64,
    pub r: Vec<f64>,
}

impl Case {
    pub fn n(&self) -> usize {
        self.xy.len()
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn pattern(&self) -> PointPattern {
        let topo = if self.torus { Topology::Torus } else { Topology::Plane };
        let w = Window::new(0.0, self.width, 0.0, self.height, topo).unwrap();
        let pts = self.xy.iter().map(|&(x, y)| Point::new(x, y)).collect();
        PointPattern::with_labels(w, pts, Some(self.labels.clone())).unwrap()
    }

    pub fn mark_set(&self) -> FunctionalMarkSet {
        let p = self.marks[0].len();
        let channels: Vec<Vec<Vec<f64>>> = (0..p)
            .map(|c| self.marks.iter().map(|m| m[c].clone()).collect())
            .collect();
        FunctionalMarkSet::from_channels(TimeGrid::new(self.t.clone()).unwrap(), &channels).unwrap()
    }

    pub fn config(&self) -> EstimationConfig {
        EstimationConfig {
            kernel: match self.kernel {
                OKernel::Epa => Kernel::Epanechnikov,
                OKernel::Box => Kernel::Box,
                OKernel::Gauss => Kernel::GaussianTruncated,
            },
            bandwidth: Some(self.b),
            grid: Some(DistanceGrid::new(self.r.clone()).unwrap()),
            ..Default::default()
        }
    }

    pub fn sep(&self, i: usize, j: usize) -> (f64, f64) {
        let mut dx = (self.xy[i].0 - self.xy[j].0).abs();
        let mut dy = (self.xy[i].1 - self.xy[j].1).abs();
        if self.torus {
            // nearest of the periodic copies
            let mut best = f64::INFINITY;
            let (mut bx, mut by) = (dx, dy);
            for sx in [-1.0, 0.0, 1.0] {
                for sy in [-1.0, 0.0, 1.0] {
                    let ex = self.xy[i].0 - self.xy[j].0 + sx * self.width;
                    let ey = self.xy[i].1 - self.xy[j].1 + sy * self.height;
                    let d = ex * ex + ey * ey;
                    if d < best {
                        best = d;
                        bx = ex.abs();
                        by = ey.abs();
                    }
                }
            }
            dx = bx;
            dy = by;
        }
        (dx, dy)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (dx, dy) = self.sep(i, j);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn edge(&self, i: usize, j: usize) -> f64 {
        if self.torus {
            1.0
        } else {
            let (dx, dy) = self.sep(i, j);
            self.area() / ((self.width - dx) * (self.height - dy))
        }
    }

    pub fn kern(&self, u: f64) -> f64 {
        kernel_value(self.kernel, u, self.b)
    }

    pub fn trap(&self, f: &[f64]) -> f64 {
        trapezoid(&self.t, f)
    }

    pub fn span(&self) -> f64 {
        self.trap(&vec![1.0; self.t.len()])
    }

    pub fn mean(&self, c: usize) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.t.len())
            .map(|k| self.marks.iter().map(|m| m[c][k]).sum::<f64>() / n)
            .collect()
    }

    pub fn int_mean_product(&self, h: usize, l: usize) -> f64 {
        let (mh, ml) = (self.mean(h), self.mean(l));
        let p: Vec<f64> = mh.iter().zip(&ml).map(|(a, b)| a * b).collect();
        self.trap(&p)
    }

    /// Pointwise test function value at time index k.
    pub fn tf(&self, f: Tf, i: usize, j: usize, h: usize, l: usize, k: usize) -> f64 {
        let a = self.marks[i][h][k];
        let b = self.marks[j][l][k];
        match f {
            Tf::T1 => 0.5 * (a - b).powi(2),
            Tf::T2 => {
                if a < b {
                    a / b
                } else {
                    b / a
                }
            }
            Tf::T3 => a * b,
            Tf::T4 => a,
            Tf::T5 => b,
        }
    }

    pub fn ell(&self, f: Tf, i: usize, j: usize, h: usize, l: usize) -> f64 {
        let s: Vec<f64> = (0..self.t.len()).map(|k| self.tf(f, i, j, h, l, k)).collect();
        self.trap(&s)
    }

    pub fn chat(&self, f: Tf, h: usize, l: usize) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.ell(f, i, j, h, l);
            }
        }
        s / (n * n) as f64
    }

    /// Σ_{i≠j, sel} w(i,j) κ_b(d − r) e / (2π r A) at every grid distance.
    pub fn kernel_sum(&self, w: impl Fn(usize, usize) -> f64, sel: impl Fn(usize, usize) -> bool) -> Vec<f64> {
        let n = self.n();
        self.r
            .iter()
            .map(|&r| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j && sel(i, j) {
                            s += w(i, j) * self.kern(self.dist(i, j) - r) * self.edge(i, j);
                        }
                    }
                }
                s / (2.0 * PI * r * self.area())
            })
            .collect()
    }

    pub fn rho2(&self) -> Vec<f64> {
        self.kernel_sum(|_, _| 1.0, |_, _| true)
    }

    pub fn rho_t(&self, f: Tf, h: usize, l: usize) -> Vec<f64> {
        self.kernel_sum(|i, j| self.ell(f, i, j, h, l), |_, _| true)
    }

    /// Conditional mean of ℓ(t_f): ρ̂_t / ρ̂, NaN where ρ̂ vanishes.
    pub fn cond(&self, f: Tf, h: usize, l: usize) -> Vec<f64> {
        div(&self.rho_t(f, h, l), &self.rho2())
    }

    /// Pointwise conditional mean, `[r][k]`.
    pub fn cond_pw(&self, f: Tf, h: usize, l: usize) -> Vec<Vec<f64>> {
        let rho = self.rho2();
        (0..self.t.len())
            .map(|k| {
                let num = self.kernel_sum(|i, j| self.tf(f, i, j, h, l, k), |_, _| true);
                div(&num, &rho)
            })
            .fold(vec![vec![]; self.r.len()], |mut acc, col| {
                for (row, v) in acc.iter_mut().zip(col) {
                    row.push(v);
                }
                acc
            })
    }

    pub fn gamma(&self, h: usize, l: usize) -> Vec<f64> {
        let c = self.chat(Tf::T1, h, l);
        self.cond(Tf::T1, h, l).iter().map(|v| v / c).collect()
    }

    pub fn kappa(&self, h: usize, l: usize) -> Vec<f64> {
        let c = self.int_mean_product(h, l);
        self.cond(Tf::T3, h, l).iter().map(|v| v / c).collect()
    }

    pub fn tau(&self, h: usize, l: usize) -> Vec<f64> {
        let s = self.span();
        self.cond(Tf::T2, h, l).iter().map(|v| s - v).collect()
    }

    pub fn cov_sto(&self, h: usize, l: usize) -> Vec<f64> {
        let c = self.int_mean_product(h, l);
        self.cond(Tf::T3, h, l).iter().map(|v| v - c).collect()
    }

    /// Kernel-weighted covariance of a(i, j) and b(i, j) over ordered pairs
    /// at distance r_q and time index k, centred in a first pass.
    fn weighted_cov(&self, q: usize, a: impl Fn(usize, usize) -> f64, b: impl Fn(usize, usize) -> f64) -> f64 {
        let n = self.n();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let w = self.kern(self.dist(i, j) - self.r[q]) * self.edge(i, j);
                    terms.push((w, a(i, j), b(i, j)));
                }
            }
        }
        let w: f64 = terms.iter().map(|t| t.0).sum();
        if w <= 0.0 {
            return f64::NAN;
        }
        let ma = terms.iter().map(|t| t.0 * t.1).sum::<f64>() / w;
        let mb = terms.iter().map(|t| t.0 * t.2).sum::<f64>() / w;
        terms.iter().map(|t| t.0 * (t.1 - ma) * (t.2 - mb)).sum::<f64>() / w
    }

    /// Pointwise covariance of f_h(x) and f_l(x') over pairs, `[r][k]`.
    fn cressie_pw(&self, h: usize, l: usize) -> Vec<Vec<f64>> {
        (0..self.r.len())
            .map(|q| {
                (0..self.t.len())
                    .map(|k| self.weighted_cov(q, |i, _| self.marks[i][h][k], |_, j| self.marks[j][l][k]))
                    .collect()
            })
            .collect()
    }

    pub fn cov_cre(&self, h: usize, l: usize) -> Vec<f64> {
        self.cressie_pw(h, l).iter().map(|row| self.trap(row)).collect()
    }

    fn isham_from(&self, cov: &[Vec<f64>], vh: &[Vec<f64>], vl: &[Vec<f64>]) -> Vec<f64> {
        (0..self.r.len())
            .map(|q| {
                let row: Vec<f64> = (0..self.t.len())
                    .map(|k| {
                        let p = vh[q][k] * vl[q][k];
                        if p > 0.0 {
                            cov[q][k] / p.sqrt()
                        } else {
                            f64::NAN
                        }
                    })
                    .collect();
                self.trap(&row)
            })
            .collect()
    }

    pub fn isham(&self, h: usize, l: usize) -> Vec<f64> {
        self.isham_from(&self.cressie_pw(h, l), &self.cressie_pw(h, h), &self.cressie_pw(l, l))
    }

    /// Isham correlation with the Palm variances of f_h(x) and f_l(x').
    pub fn isham_cond(&self, h: usize, l: usize) -> Vec<f64> {
        let var = |c: usize, first: bool| -> Vec<Vec<f64>> {
            (0..self.r.len())
                .map(|q| {
                    (0..self.t.len())
                        .map(|k| {
                            let f = |i: usize, j: usize| self.marks[if first { i } else { j }][c][k];
                            self.weighted_cov(q, f, f)
                        })
                        .collect()
                })
                .collect()
        };
        self.isham_from(&self.cressie_pw(h, l), &var(h, true), &var(l, false))
    }

    pub fn beisbart(&self, h: usize, l: usize) -> Vec<f64> {
        let m4 = self.cond_pw(Tf::T4, h, l);
        let m5 = self.cond_pw(Tf::T5, h, l);
        let (mh, ml) = (self.mean(h), self.mean(l));
        (0..self.r.len())
            .map(|q| {
                let row: Vec<f64> = (0..self.t.len())
                    .map(|k| (m4[q][k] + m5[q][k]) / (mh[k] + ml[k]))
                    .collect();
                self.trap(&row)
            })
            .collect()
    }

    pub fn r_mark_h(&self, h: usize, l: usize) -> Vec<f64> {
        let c = self.trap(&self.mean(h));
        self.cond(Tf::T4, h, l).iter().map(|v| v / c).collect()
    }

    pub fn r_mark_l(&self, h: usize, l: usize) -> Vec<f64> {
        let c = self.trap(&self.mean(l));
        self.cond(Tf::T5, h, l).iter().map(|v| v / c).collect()
    }

    /// λ̂² ĝ · base = ρ̂ · base, zero where ρ̂ vanishes.
    pub fn u(&self, base: &[f64]) -> Vec<f64> {
        self.rho2()
            .iter()
            .zip(base)
            .map(|(g, b)| if *g > 0.0 { g * b } else { 0.0 })
            .collect()
    }

    fn members(&self, sel: Sel) -> (Vec<bool>, Vec<bool>) {
        let n = self.n();
        match sel {
            Sel::All => (vec![true; n], vec![true; n]),
            Sel::Cross(a, b) => (
                self.labels.iter().map(|&x| x == a).collect(),
                self.labels.iter().map(|&x| x == b).collect(),
            ),
            Sel::Dot(a) => (self.labels.iter().map(|&x| x == a).collect(), vec![true; n]),
            Sel::Local(u) => ((0..n).map(|i| i == u).collect(), vec![true; n]),
        }
    }

    fn lambda_pair(&self, sel: Sel) -> f64 {
        let (f, s) = self.members(sel);
        let nf = f.iter().filter(|&&b| b).count() as f64;
        let ns = s.iter().filter(|&&b| b).count() as f64;
        nf * ns / (self.area() * self.area())
    }

    /// Mark-weighted g with weight ℓ(t_f) (unit weight when `f` is None).
    pub fn mw_pcf(&self, f: Option<Tf>, h: usize, l: usize, sel: Sel) -> Vec<f64> {
        let (a, b) = self.members(sel);
        let c = f.map_or(1.0, |f| self.chat(f, h, l));
        let w = |i: usize, j: usize| f.map_or(1.0, |f| self.ell(f, i, j, h, l));
        let lam = self.lambda_pair(sel);
        self.kernel_sum(w, |i, j| a[i] && b[j])
            .iter()
            .map(|v| v / (lam * c))
            .collect()
    }

    pub fn mw_k(&self, f: Option<Tf>, h: usize, l: usize, sel: Sel) -> Vec<f64> {
        let (a, b) = self.members(sel);
        let c = f.map_or(1.0, |f| self.chat(f, h, l));
        let lam = self.lambda_pair(sel);
        let n = self.n();
        self.r
            .iter()
            .map(|&r| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j && a[i] && b[j] && self.dist(i, j) <= r {
                            let w = f.map_or(1.0, |f| self.ell(f, i, j, h, l));
                            s += w * self.edge(i, j);
                        }
                    }
                }
                s / self.area() / (lam * c)
            })
            .collect()
    }

    /// Neighbours of i sorted by distance, ties to the lower index.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.n()).filter(|&j| j != i).collect();
        v.sort_by(|&a, &b| {
            self.dist(i, a)
                .partial_cmp(&self.dist(i, b))
                .unwrap()
                .then(a.cmp(&b))
        });
        v
    }

    /// (γ^nn, κ^nn, c^nn, τ^nn)
    pub fn nn(&self, h: usize, l: usize) -> (f64, f64, f64, f64) {
        let n = self.n() as f64;
        let (mut g, mut c, mut t) = (0.0, 0.0, 0.0);
        for i in 0..self.n() {
            let z = self.neighbours(i)[0];
            g += self.ell(Tf::T1, i, z, h, l);
            c += self.ell(Tf::T3, i, z, h, l);
            t += self.ell(Tf::T2, i, z, h, l);
        }
        let c = c / n;
        (
            g / n / self.chat(Tf::T1, h, l),
            c / self.int_mean_product(h, l),
            c,
            self.span() - t / n,
        )
    }

    /// (K_k, Γ_k, D_k)
    pub fn knn(&self, h: usize, l: usize, k: usize) -> (f64, f64, f64) {
        let n = self.n() as f64;
        let (mh, ml) = (self.mean(h), self.mean(l));
        let nt = self.t.len();
        let (mut kk, mut gg, mut dd) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        for i in 0..self.n() {
            for &z in &self.neighbours(i)[..k] {
                for q in 0..nt {
                    let a = self.marks[i][h][q];
                    let b = self.marks[z][l][q];
                    kk[q] += a * b / (mh[q] * ml[q]) / (k as f64 * n);
                    gg[q] += 0.5 * (a - b) * (a - b) / (k as f64 * n);
                    dd[q] += if a > b { 1.0 } else { 0.0 } / (k as f64 * n);
                }
            }
        }
        let s = self.span();
        (self.trap(&kk) / s, self.trap(&gg), self.trap(&dd) / s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tf {
    T1,
    T2,
    T3,
    T4,
    T5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sel {
    All,
    Cross(u32, u32),
    Dot(u32),
    Local(usize),
}

pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    if t.len() == 1 {
        return f[0];
    }
    (1..t.len()).map(|k| (t[k] - t[k - 1]) * (f[k] + f[k - 1]) / 2.0).sum()
}

fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| if *y > 0.0 { x / y } else { f64::NAN })
        .collect()
}

/// Normalising constant of the truncated Gaussian, by composite Simpson.
fn gauss_mass() -> f64 {
    let m = 200_000;
    let h = 8.0 / m as f64;
    let f = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let mut s = f(-4.0) + f(4.0);
    for q in 1..m {
        s += if q % 2 == 1 { 4.0 } else { 2.0 } * f(-4.0 + q as f64 * h);
    }
    s * h / 3.0
}

pub fn kernel_value(k: OKernel, u: f64, b: f64) -> f64 {
    let z = u / b;
    match k {
        OKernel::Epa if z.abs() <= 1.0 => 3.0 / (4.0 * b) * (1.0 - z * z),
        OKernel::Box if z.abs() <= 1.0 => 1.0 / (2.0 * b),
        OKernel::Gauss if z.abs() <= 4.0 => {
            thread_local!(static MASS: f64 = gauss_mass());
            let m = MASS.with(|m| *m);
            (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * b) / m
        }
        _ => 0.0,
    }
}

/// Small random case: n ≤ 10, p = 2, T ≤ 5, strictly positive marks,
/// both type labels present.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let torus = rng.random_bool(0.5);
    let (width, height) = if rng.random_bool(0.5) {
        (1.0, 1.0)
    } else {
        (rng.random_range(0.6..1.5), rng.random_range(0.6..1.5))
    };
    let n = rng.random_range(3..=10);
    let xy: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..width), rng.random_range(0.0..height)))
        .collect();
    let labels: Vec<u32> = (0..n)
        .map(|i| if i < 2 { i as u32 + 1 } else { rng.random_range(1..=2) })
        .collect();
    let nt = rng.random_range(1..=5);
    let mut t = vec![rng.random_range(-1.0..1.0)];
    for _ in 1..nt {
        let last = *t.last().unwrap();
        t.push(last + rng.random_range(0.1..1.0));
    }
    let marks = (0..n)
        .map(|_| {
            (0..2)
                .map(|_| (0..nt).map(|_| rng.random_range(0.2..3.0)).collect())
                .collect()
        })
        .collect();
    let kernel = [OKernel::Epa, OKernel::Box, OKernel::Gauss][rng.random_range(0..3)];
    let half = 0.49 * width.min(height);
    let b = rng.random_range(0.05..0.2);
    let nr = 15;
    let r = (1..=nr).map(|q| half * q as f64 / nr as f64).collect();
    Case {
        width,
        height,
        torus,
        xy,
        labels,
        marks,
        t,
        kernel,
        b,
        r,
    }
}

/// Largest relative deviation between two curves. Entries are scaled by
/// the larger of their own magnitude and the curve magnitude, so sign
/// changes through zero do not blow up; NaN must match NaN.
pub fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    max_rel_err_floor(got, want, 0.0)
}

/// As [`max_rel_err`] with the scale raised to at least `floor`. Correlation
/// coefficients use a floor of one: they are ratios of O(1) moments, and when
/// the true value is zero both sides carry only cancellation noise.
pub fn max_rel_err_floor(got: &[f64], want: &[f64], floor: f64) -> f64 {
    assert_eq!(got.len(), want.len(), "length mismatch");
    let scale = want
        .iter()
        .filter(|v| v.is_finite())
        .fold(floor, |m, v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .map(|(g, w)| {
            if w.is_nan() || g.is_nan() {
                if w.is_nan() && g.is_nan() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                let d = (g - w).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d / g.abs().max(w.abs()).max(scale)
                }
            }
        })
        .fold(0.0, f64::max)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    max_rel_err(&[a], &[b])
}

pub fn lib_tf(f: Tf) -> fmark::testfn::TestFunction {
    use fmark::testfn::TestFunction::*;
    match f {
        Tf::T1 => HalfSquaredDiff,
        Tf::T2 => Ratio,
        Tf::T3 => Product,
        Tf::T4 => Left,
        Tf::T5 => Right,
    }
}

fn lib_sel(s: Sel) -> fmark::estimators::PairSelection {
    use fmark::estimators::PairSelection;
    match s {
        Sel::All => PairSelection::ALL,
        Sel::Cross(a, b) => PairSelection::cross(a, b),
        Sel::Dot(a) => PairSelection::dot(a),
        Sel::Local(u) => PairSelection::local(u),
    }
}

/// Runs every estimator of the library on `case` and returns the largest
/// relative deviation from the oracle for each, labelled.
pub fn compare_all(case: &Case) -> Vec<(String, f64)> {
    use fmark::estimators::{
        estimate_indices, Characteristic as C, Estimator, Normalization, StatisticRequest, UBase, Weight,
    };

    let pattern = case.pattern();
    let marks = case.mark_set();
    let cfg = case.config();
    let est = Estimator::new(&pattern, &cfg).unwrap();
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut check = |name: String, got: &[f64], want: &[f64]| {
        let floor = if name.starts_with("corr_ish") { 1.0 } else { 0.0 };
        out.push((name, max_rel_err_floor(got, want, floor)))
    };
    let curve = |ch: C, h: usize, l: usize, sel: Sel| -> Vec<f64> {
        est.estimate(&marks, &StatisticRequest::new(ch, h, l).with_selection(lib_sel(sel)))
            .unwrap_or_else(|e| panic!("{ch:?} ({h},{l}) {sel:?}: {e}"))
            .values
    };

    let rho = case.rho2();
    let lam = case.n() as f64 / case.area();
    check("rho_ground".into(), &curve(C::GroundProductDensity, 0, 0, Sel::All), &rho);
    let g: Vec<f64> = rho.iter().map(|v| v / (lam * lam)).collect();
    check("g_ground".into(), &curve(C::GroundPcf, 0, 0, Sel::All), &g);
    let k = case.mw_k(None, 0, 0, Sel::All);
    check("K_ground".into(), &curve(C::GroundK, 0, 0, Sel::All), &k);
    let kc: Vec<f64> = k.iter().zip(&case.r).map(|(k, r)| k - PI * r * r).collect();
    check("K_ground_centered".into(), &curve(C::GroundKCentered, 0, 0, Sel::All), &kc);

    for (h, l) in [(0, 1), (1, 0), (0, 0)] {
        let tag = |s: &str| format!("{s}[{h},{l}]");
        for f in [Tf::T1, Tf::T2, Tf::T3, Tf::T4, Tf::T5] {
            check(
                tag(&format!("rho_tf {f:?}")),
                &curve(C::TfProductDensity(lib_tf(f)), h, l, Sel::All),
                &case.rho_t(f, h, l),
            );
        }
        let gamma = case.gamma(h, l);
        let kappa = case.kappa(h, l);
        let tau = case.tau(h, l);
        let rh = case.r_mark_h(h, l);
        let rl = case.r_mark_l(h, l);
        check(tag("gamma"), &curve(C::MarkVariogram, h, l, Sel::All), &gamma);
        check(tag("gamma_raw"), &curve(C::MarkVariogramRaw, h, l, Sel::All), &case.cond(Tf::T1, h, l));
        check(tag("kappa"), &curve(C::MarkCorrelation, h, l, Sel::All), &kappa);
        check(tag("tau"), &curve(C::Differentiation, h, l, Sel::All), &tau);
        check(tag("c_hl"), &curve(C::MeanProduct, h, l, Sel::All), &case.cond(Tf::T3, h, l));
        check(tag("cov_sto"), &curve(C::CovStoyan, h, l, Sel::All), &case.cov_sto(h, l));
        check(tag("cov_cre"), &curve(C::CovCressie, h, l, Sel::All), &case.cov_cre(h, l));
        check(tag("corr_ish"), &curve(C::Isham, h, l, Sel::All), &case.isham(h, l));
        check(tag("corr_ish_cond"), &curve(C::IshamConditional, h, l, Sel::All), &case.isham_cond(h, l));
        check(tag("kappa_bei"), &curve(C::Beisbart, h, l, Sel::All), &case.beisbart(h, l));
        check(tag("kappa_hdot"), &curve(C::RMarkH, h, l, Sel::All), &rh);
        check(tag("kappa_dotl"), &curve(C::RMarkL, h, l, Sel::All), &rl);
        let generic = curve(
            C::Kappa {
                func: lib_tf(Tf::T4),
                normalization: Normalization::CHat,
            },
            h,
            l,
            Sel::All,
        );
        let c4 = case.chat(Tf::T4, h, l);
        let want: Vec<f64> = case.cond(Tf::T4, h, l).iter().map(|v| v / c4).collect();
        check(tag("kappa_tf t4/chat"), &generic, &want);

        for (base, b) in [
            (UBase::KappaHl, &kappa),
            (UBase::KappaHDot, &rh),
            (UBase::KappaDotL, &rl),
            (UBase::GammaHl, &gamma),
            (UBase::TauHl, &tau),
        ] {
            check(tag(&format!("U {base:?}")), &curve(C::U(base), h, l, Sel::All), &case.u(b));
        }

        let sels = [
            Sel::All,
            Sel::Cross(1, 2),
            Sel::Cross(2, 1),
            Sel::Cross(1, 1),
            Sel::Dot(2),
            Sel::Local(case.n() / 2),
        ];
        for sel in sels {
            for f in [None, Some(Tf::T3), Some(Tf::T4), Some(Tf::T5), Some(Tf::T1), Some(Tf::T2)] {
                let w = f.map_or(Weight::Unit, |f| Weight::Test(lib_tf(f)));
                let kk = case.mw_k(f, h, l, sel);
                let ll: Vec<f64> = kk.iter().map(|v| (v / PI).sqrt()).collect();
                let name = |s: &str| tag(&format!("{s} {f:?} {sel:?}"));
                check(name("K_tf"), &curve(C::MarkWeightedK(w), h, l, sel), &kk);
                check(name("L_tf"), &curve(C::MarkWeightedL(w), h, l, sel), &ll);
                check(name("g_tf"), &curve(C::MarkWeightedPcf(w), h, l, sel), &case.mw_pcf(f, h, l, sel));
            }
        }

        let kmax = 3.min(case.n() - 1);
        let rep = estimate_indices(&pattern, &marks, h, l, Some(kmax), &cfg).unwrap();
        let (gn, kn, cn, tn) = case.nn(h, l);
        check(tag("gamma_nn"), &[rep.nn.gamma_nn], &[gn]);
        check(tag("kappa_nn"), &[rep.nn.kappa_nn], &[kn]);
        check(tag("c_nn"), &[rep.nn.c_nn], &[cn]);
        check(tag("tau_nn"), &[rep.nn.tau_nn.unwrap()], &[tn]);
        let knn = rep.knn.unwrap();
        for kk in 1..=kmax {
            let (a, b, c) = case.knn(h, l, kk);
            check(tag(&format!("K_k k={kk}")), &[knn.kappa_k[kk - 1]], &[a]);
            check(tag(&format!("Gamma_k k={kk}")), &[knn.gamma_k[kk - 1]], &[b]);
            check(tag(&format!("D_k k={kk}")), &[knn.d_k[kk - 1]], &[c]);
        }
    }
    out
}
