use crate::error::Result;
use crate::marks::FunctionalMarkSet;
use crate::testfn::MarkPairFunction;

use super::config::ChatRule;

/// n × n table of integrated pair values ℓ(t(f(x_i), f(x_j))), diagonal included.
///
/// Built once in O(n²T) and reused across distance bins and label permutations.
#[derive(Clone, Debug, PartialEq)]
pub struct LMatrix {
    n: usize,
    data: Vec<f64>,
}

impl LMatrix {
    pub fn build(marks: &FunctionalMarkSet, f: &dyn MarkPairFunction) -> Result<Self> {
        f.check(marks)?;
        let n = marks.n_points();
        let grid = f.grid(marks);
        let tlen = grid.len();
        let row = |i: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0.0; tlen];
            let mut out = Vec::with_capacity(n);
            for j in 0..n {
                f.pointwise(marks, i, j, &mut buf)?;
                out.push(grid.integrate_unchecked(&buf));
            }
            Ok(out)
        };
        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(row).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<f64>> = (0..n).map(row).collect::<Result<_>>()?;
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Normalising constant ĉ_t.
    pub fn chat(&self, rule: ChatRule) -> f64 {
        let n = self.n as f64;
        match rule {
            ChatRule::AllPairs => self.data.iter().sum::<f64>() / (n * n),
            ChatRule::DistinctPairs => {
                let diag: f64 = (0..self.n).map(|i| self.get(i, i)).sum();
                (self.data.iter().sum::<f64>() - diag) / (n * (n - 1.0))
            }
        }
    }
}
