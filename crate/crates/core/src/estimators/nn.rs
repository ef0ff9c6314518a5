//! Nearest-neighbour and k-nearest-neighbour mark indices.

use crate::error::{Error, Result};
use crate::geometry::PointPattern;
use crate::marks::{functional_mean, FunctionalMarkSet, TimeGrid};
use crate::testfn::{MarkPairFunction, PairTest, TestFunction};

use super::config::EstimationConfig;
use super::lmatrix::LMatrix;

/// Global nearest-neighbour indices.
#[derive(Clone, Debug, PartialEq)]
pub struct NnIndices {
    pub gamma_nn: f64,
    pub kappa_nn: f64,
    pub c_nn: f64,
    /// `None` when the marks are not strictly positive.
    pub tau_nn: Option<f64>,
}

/// k-NN indices for k = 1..=k_max (entry k−1 holds order k).
#[derive(Clone, Debug, PartialEq)]
pub struct KnnIndices {
    pub kappa_k: Vec<f64>,
    pub gamma_k: Vec<f64>,
    pub d_k: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub nn: NnIndices,
    pub knn: Option<KnnIndices>,
}

/// Neighbours of every point ordered by distance, ties by lower index.
fn neighbour_lists(pattern: &PointPattern, k: usize) -> Vec<Vec<usize>> {
    let n = pattern.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (pattern.distance(i, j), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

fn check_inputs(pattern: &PointPattern, marks: &FunctionalMarkSet, needed: usize) -> Result<()> {
    if pattern.len() < needed {
        return Err(Error::domain(format!(
            "neighbour indices need at least {needed} points, got {}",
            pattern.len()
        )));
    }
    if marks.n_points() != pattern.len() {
        return Err(Error::domain(format!(
            "mark set has {} points, pattern has {}",
            marks.n_points(),
            pattern.len()
        )));
    }
    Ok(())
}

struct Aligned {
    grid: TimeGrid,
    mean_h: Vec<f64>,
    mean_l: Vec<f64>,
}

fn aligned(marks: &FunctionalMarkSet, test: &PairTest) -> Result<Aligned> {
    test.check(marks)?;
    let grid = test.grid(marks);
    let tl = grid.len();
    let mh = functional_mean(marks, test.h)?;
    let ml = functional_mean(marks, test.l)?;
    Ok(Aligned {
        mean_h: mh[test.lag..test.lag + tl].to_vec(),
        mean_l: ml[..tl].to_vec(),
        grid,
    })
}

fn integrated(marks: &FunctionalMarkSet, test: &PairTest, grid: &TimeGrid, i: usize, j: usize, buf: &mut [f64]) -> Result<f64> {
    test.pointwise(marks, i, j, buf)?;
    Ok(grid.integrate_unchecked(buf))
}

fn all_positive(marks: &FunctionalMarkSet, h: usize, l: usize) -> bool {
    (0..marks.n_points()).all(|i| {
        marks.curve(i, h).iter().all(|&v| v > 0.0) && marks.curve(i, l).iter().all(|&v| v > 0.0)
    })
}

/// γ̂^nn, κ̂^nn, ĉ^nn and τ̂^nn using each point's nearest neighbour.
pub fn estimate_nn_indices(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    cfg: &EstimationConfig,
) -> Result<NnIndices> {
    check_inputs(pattern, marks, 2)?;
    let lag = cfg.lag;
    let t1 = PairTest::new(TestFunction::HalfSquaredDiff, h, l).with_lag(lag);
    let t3 = PairTest::new(TestFunction::Product, h, l).with_lag(lag);
    let t2 = PairTest::new(TestFunction::Ratio, h, l).with_lag(lag);
    let al = aligned(marks, &t3)?;
    let n = pattern.len();
    let nn = neighbour_lists(pattern, 1);
    let positive = all_positive(marks, h, l);

    let mut buf = vec![0.0; al.grid.len()];
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for (i, z) in nn.iter().enumerate() {
        let z = z[0];
        s1 += integrated(marks, &t1, &al.grid, i, z, &mut buf)?;
        s3 += integrated(marks, &t3, &al.grid, i, z, &mut buf)?;
        if positive {
            s2 += integrated(marks, &t2, &al.grid, i, z, &mut buf)?;
        }
    }
    let nf = n as f64;
    let chat = LMatrix::build(marks, &t1)?.chat(cfg.chat);
    let gamma_num = s1 / nf;
    let gamma_nn = if chat != 0.0 {
        gamma_num / chat
    } else if gamma_num == 0.0 {
        0.0
    } else {
        return Err(Error::domain("normalising constant is zero"));
    };
    let prod: Vec<f64> = al.mean_h.iter().zip(&al.mean_l).map(|(a, b)| a * b).collect();
    let denom = al.grid.integrate_unchecked(&prod);
    if denom == 0.0 {
        return Err(Error::domain("integrated mean product is zero"));
    }
    let c_nn = s3 / nf;
    Ok(NnIndices {
        gamma_nn,
        kappa_nn: c_nn / denom,
        c_nn,
        tau_nn: positive.then(|| al.grid.measure() - s2 / nf),
    })
}

/// K_k, Γ_k and D_k for k = 1..=k_max. K_k and D_k are averaged over the
/// time domain so that both are on the scale of their pointwise versions.
pub fn estimate_knn_indices(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    k_max: usize,
    cfg: &EstimationConfig,
) -> Result<KnnIndices> {
    if k_max == 0 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    check_inputs(pattern, marks, k_max + 1)?;
    let lag = cfg.lag;
    let t3 = PairTest::new(TestFunction::Product, h, l).with_lag(lag);
    let al = aligned(marks, &t3)?;
    let tl = al.grid.len();
    let prod: Vec<f64> = al.mean_h.iter().zip(&al.mean_l).map(|(a, b)| a * b).collect();
    if prod.iter().any(|&v| v == 0.0) {
        return Err(Error::domain("mean mark product vanishes at some time point"));
    }
    let lists = neighbour_lists(pattern, k_max);
    let n = pattern.len() as f64;

    // running per-point sums over the first v neighbours, pointwise in t
    let mut kap = vec![vec![0.0; tl]; k_max];
    let mut gam = vec![vec![0.0; tl]; k_max];
    let mut dom = vec![vec![0.0; tl]; k_max];
    for (i, zs) in lists.iter().enumerate() {
        let fh = &marks.curve(i, h)[lag..];
        let mut acc_k = vec![0.0; tl];
        let mut acc_g = vec![0.0; tl];
        let mut acc_d = vec![0.0; tl];
        for (v, &z) in zs.iter().enumerate() {
            let fl = marks.curve(z, l);
            for t in 0..tl {
                let (a, b) = (fh[t], fl[t]);
                acc_k[t] += a * b;
                acc_g[t] += 0.5 * (a - b) * (a - b);
                acc_d[t] += if a > b { 1.0 } else { 0.0 };
            }
            let k = (v + 1) as f64;
            for t in 0..tl {
                kap[v][t] += acc_k[t] / k;
                gam[v][t] += acc_g[t] / k;
                dom[v][t] += acc_d[t] / k;
            }
        }
    }
    let span = al.grid.measure();
    let mut out = KnnIndices {
        kappa_k: Vec::with_capacity(k_max),
        gamma_k: Vec::with_capacity(k_max),
        d_k: Vec::with_capacity(k_max),
    };
    for v in 0..k_max {
        let kt: Vec<f64> = kap[v].iter().zip(&prod).map(|(s, p)| s / n / p).collect();
        let gt: Vec<f64> = gam[v].iter().map(|s| s / n).collect();
        let dt: Vec<f64> = dom[v].iter().map(|s| s / n).collect();
        out.kappa_k.push(al.grid.integrate_unchecked(&kt) / span);
        out.gamma_k.push(al.grid.integrate_unchecked(&gt));
        out.d_k.push(al.grid.integrate_unchecked(&dt) / span);
    }
    Ok(out)
}

/// Both index families in one report.
pub fn estimate_indices(
    pattern: &PointPattern,
    marks: &FunctionalMarkSet,
    h: usize,
    l: usize,
    k_max: Option<usize>,
    cfg: &EstimationConfig,
) -> Result<IndexReport> {
    Ok(IndexReport {
        nn: estimate_nn_indices(pattern, marks, h, l, cfg)?,
        knn: k_max
            .map(|k| estimate_knn_indices(pattern, marks, h, l, k, cfg))
            .transpose()?,
    })
}
