//! Ordered point pairs close enough to contribute to some distance bin.

use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::PointPattern;
use crate::testfn::MarkPairFunction;
use crate::marks::FunctionalMarkSet;

use super::config::{EdgeRule, ResolvedConfig};

#[derive(Clone, Copy, Debug)]
pub(crate) struct PairEntry {
    pub i: u32,
    pub j: u32,
    pub edge: f64,
    /// First grid index with r >= distance; `r.len()` when beyond the grid.
    pub k_bin: u32,
}

/// Kernel weights κ_b(‖x−x′‖ − r)·e for every ordered pair and distance bin,
/// stored sparsely (only bins inside the kernel support).
#[derive(Clone, Debug)]
pub(crate) struct PairTable {
    area: f64,
    r: Vec<f64>,
    /// 1 / (2π r ν(W))
    prefactor: Vec<f64>,
    pairs: Vec<PairEntry>,
    offsets: Vec<usize>,
    bins: Vec<u32>,
    weights: Vec<f64>,
}

impl PairTable {
    pub fn build(pattern: &PointPattern, cfg: &ResolvedConfig) -> Self {
        let window = pattern.window();
        let area = window.area();
        let r = cfg.grid.values().to_vec();
        let support = cfg.kernel.support(cfg.bandwidth);
        let cutoff = cfg.grid.max() + support;
        let prefactor = r.iter().map(|&r| 1.0 / (2.0 * PI * r * area)).collect();

        let mut pairs = Vec::new();
        let mut offsets = vec![0];
        let mut bins = Vec::new();
        let mut weights = Vec::new();
        let pts = pattern.points();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let (dx, dy) = window.separation(pts[i], pts[j]);
                let d = dx.hypot(dy);
                if d > cutoff {
                    continue;
                }
                let edge = match cfg.edge {
                    EdgeRule::NoneTorus => 1.0,
                    EdgeRule::Translation => {
                        area / ((window.width() - dx) * (window.height() - dy))
                    }
                };
                let lo = r.partition_point(|&rv| rv < d - support);
                let hi = r.partition_point(|&rv| rv <= d + support);
                for (b, &rv) in r.iter().enumerate().take(hi).skip(lo) {
                    let w = cfg.kernel.eval(d - rv, cfg.bandwidth);
                    if w > 0.0 {
                        bins.push(b as u32);
                        weights.push(w * edge);
                    }
                }
                let k_bin = r.partition_point(|&rv| rv < d) as u32;
                pairs.push(PairEntry {
                    i: i as u32,
                    j: j as u32,
                    edge,
                    k_bin,
                });
                offsets.push(bins.len());
            }
        }
        Self {
            area,
            r,
            prefactor,
            pairs,
            offsets,
            bins,
            weights,
        }
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// (1/(2πrν)) Σ_{i≠j, selected} value(i, j) κ_b(d_ij − r) e_ij
    pub fn density(
        &self,
        value: impl Fn(usize, usize) -> f64,
        select: impl Fn(usize, usize) -> bool,
    ) -> Vec<f64> {
        let mut acc = vec![0.0; self.r.len()];
        for (p, pair) in self.pairs.iter().enumerate() {
            let (i, j) = (pair.i as usize, pair.j as usize);
            if !select(i, j) {
                continue;
            }
            let v = value(i, j);
            for k in self.offsets[p]..self.offsets[p + 1] {
                acc[self.bins[k] as usize] += v * self.weights[k];
            }
        }
        acc.iter_mut()
            .zip(&self.prefactor)
            .for_each(|(a, f)| *a *= f);
        acc
    }

    /// Density with pointwise-in-time weights; result indexed `[r * tlen + t]`.
    pub fn density_pointwise(
        &self,
        marks: &FunctionalMarkSet,
        f: &dyn MarkPairFunction,
        tlen: usize,
        select: impl Fn(usize, usize) -> bool,
    ) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.r.len() * tlen];
        let mut buf = vec![0.0; tlen];
        for (p, pair) in self.pairs.iter().enumerate() {
            let (i, j) = (pair.i as usize, pair.j as usize);
            if !select(i, j) || self.offsets[p] == self.offsets[p + 1] {
                continue;
            }
            f.pointwise(marks, i, j, &mut buf)?;
            for k in self.offsets[p]..self.offsets[p + 1] {
                let b = self.bins[k] as usize;
                let w = self.weights[k];
                for (a, v) in acc[b * tlen..(b + 1) * tlen].iter_mut().zip(&buf) {
                    *a += v * w;
                }
            }
        }
        for (b, f) in self.prefactor.iter().enumerate() {
            acc[b * tlen..(b + 1) * tlen].iter_mut().for_each(|a| *a *= f);
        }
        Ok(acc)
    }

    /// Like [`Self::density_pointwise`] for the product (a − ā)(b − b̄), where
    /// the centres ā, b̄ are given per `[r * tlen + t]`. Centring each term
    /// before summing avoids the cancellation in E[ab] − E[a]E[b].
    pub fn centred_product_pointwise(
        &self,
        marks: &FunctionalMarkSet,
        (a, a_mean): (&dyn MarkPairFunction, &[f64]),
        (b, b_mean): (&dyn MarkPairFunction, &[f64]),
        tlen: usize,
    ) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.r.len() * tlen];
        let mut buf_a = vec![0.0; tlen];
        let mut buf_b = vec![0.0; tlen];
        for (p, pair) in self.pairs.iter().enumerate() {
            if self.offsets[p] == self.offsets[p + 1] {
                continue;
            }
            let (i, j) = (pair.i as usize, pair.j as usize);
            a.pointwise(marks, i, j, &mut buf_a)?;
            b.pointwise(marks, i, j, &mut buf_b)?;
            for k in self.offsets[p]..self.offsets[p + 1] {
                let row = self.bins[k] as usize * tlen..(self.bins[k] as usize + 1) * tlen;
                let w = self.weights[k];
                let centres = a_mean[row.clone()].iter().zip(&b_mean[row.clone()]);
                for (acc, ((va, vb), (ca, cb))) in acc[row].iter_mut().zip(buf_a.iter().zip(&buf_b).zip(centres)) {
                    *acc += w * (va - ca) * (vb - cb);
                }
            }
        }
        for (b, f) in self.prefactor.iter().enumerate() {
            acc[b * tlen..(b + 1) * tlen].iter_mut().for_each(|a| *a *= f);
        }
        Ok(acc)
    }

    /// Σ_{i≠j, selected} value(i, j) e_ij 1{d_ij ≤ r}, unscaled.
    pub fn cumulative(
        &self,
        value: impl Fn(usize, usize) -> f64,
        select: impl Fn(usize, usize) -> bool,
    ) -> Vec<f64> {
        let nb = self.r.len();
        let mut acc = vec![0.0; nb];
        for pair in &self.pairs {
            let (i, j) = (pair.i as usize, pair.j as usize);
            if (pair.k_bin as usize) < nb && select(i, j) {
                acc[pair.k_bin as usize] += value(i, j) * pair.edge;
            }
        }
        for b in 1..nb {
            acc[b] += acc[b - 1];
        }
        acc
    }
}
