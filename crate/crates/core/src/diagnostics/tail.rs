use serde::{Deserialize, Serialize};

use super::report::seed_label;
use super::{check_samples, grid_check, merge_seeds, CsvRow, Estimate};
use crate::rng::run_chunks;
use crate::samplers::PathSource;
use crate::Result;

/// Hit counts of `M_t / sqrt(t) > a` on a `(t, a)` grid, reported as
/// `a^2 P(M_t / sqrt(t) > a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub law: String,
    pub t_grid: Vec<usize>,
    pub a_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub samples: Vec<u64>,
    pub hits: Vec<Vec<u64>>,
}

impl TailCurve {
    pub fn empty(law: &str, t_grid: &[usize], a_grid: &[f64]) -> Self {
        Self {
            law: law.to_string(),
            t_grid: t_grid.to_vec(),
            a_grid: a_grid.to_vec(),
            seeds: Vec::new(),
            samples: vec![0; t_grid.len()],
            hits: vec![vec![0; a_grid.len()]; t_grid.len()],
        }
    }

    /// `a^2 p` with `a^2 sqrt(p (1-p) / n)`.
    pub fn get(&self, i: usize, j: usize) -> Estimate {
        let n = self.samples[i];
        let a2 = self.a_grid[j] * self.a_grid[j];
        let p = if n == 0 { 0.0 } else { self.hits[i][j] as f64 / n as f64 };
        let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
        Estimate { estimate: a2 * p, stderr: a2 * se, samples: n }
    }

    /// One-sided 95% upper bound on `a^2 P(...)` when no sample exceeded
    /// (rule of three), `None` otherwise.
    pub fn zero_hit_bound(&self, i: usize, j: usize) -> Option<f64> {
        (self.hits[i][j] == 0 && self.samples[i] > 0)
            .then(|| self.a_grid[j] * self.a_grid[j] * 3.0 / self.samples[i] as f64)
    }

    /// `sup_t a^2 P(M_t / sqrt(t) > a)` over the configured `t` grid, per `a`.
    pub fn sup_over_grid(&self) -> Vec<f64> {
        (0..self.a_grid.len())
            .map(|j| (0..self.t_grid.len()).map(|i| self.get(i, j).estimate).fold(0.0, f64::max))
            .collect()
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        grid_check("law", self.law == other.law)?;
        grid_check("t grid", self.t_grid == other.t_grid)?;
        grid_check("a grid", self.a_grid == other.a_grid)?;
        Ok(Self {
            law: self.law.clone(),
            t_grid: self.t_grid.clone(),
            a_grid: self.a_grid.clone(),
            seeds: merge_seeds(&self.seeds, &other.seeds),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            hits: self
                .hits
                .iter()
                .zip(&other.hits)
                .map(|(x, y)| x.iter().zip(y).map(|(a, b)| a + b).collect())
                .collect(),
        })
    }

    pub fn rows(&self) -> Vec<CsvRow> {
        let seed = seed_label(&self.seeds);
        let mut rows = Vec::new();
        for (i, &t) in self.t_grid.iter().enumerate() {
            for (j, &a) in self.a_grid.iter().enumerate() {
                let e = self.get(i, j);
                rows.push(CsvRow {
                    law: self.law.clone(),
                    n_or_t: t,
                    param: a,
                    estimate: e.estimate,
                    stderr: e.stderr,
                    samples: e.samples,
                    seed: seed.clone(),
                    exact: None,
                });
            }
        }
        rows
    }
}

/// Monte Carlo tail curve of the paths produced by `source`.
pub fn estimate_tail(
    source: &dyn PathSource,
    t_grid: &[usize],
    a_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<TailCurve> {
    check_samples(samples)?;
    let mut curve = TailCurve::empty(&source.label(), t_grid, a_grid);
    curve.seeds = vec![seed];
    for (i, &t) in t_grid.iter().enumerate() {
        let chunks = run_chunks(samples, seed, i as u32, |len, rng| -> Result<Vec<u64>> {
            let mut hits = vec![0u64; a_grid.len()];
            for _ in 0..len {
                let y = source.sample(t, rng)?.max_abs() / (t as f64).sqrt();
                for (h, &a) in hits.iter_mut().zip(a_grid) {
                    *h += u64::from(y > a);
                }
            }
            Ok(hits)
        });
        for c in chunks {
            for (h, x) in curve.hits[i].iter_mut().zip(c?) {
                *h += x;
            }
        }
        curve.samples[i] = samples as u64;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regeneration::{TentFamily, TentSource};

    #[test]
    fn tent_tail_is_flat() {
        let source = TentSource(TentFamily::new(1.0).unwrap());
        let curve = estimate_tail(&source, &[16, 64], &[1.0, 2.0, 4.0, 1e6], 20_000, 5).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let e = curve.get(i, j);
                if j == 0 {
                    // P(A > 1) = 1 exactly, so no spread
                    assert_eq!(e.estimate, 1.0);
                } else {
                    assert!(e.within(1.0, 4.0), "{e:?}");
                }
            }
            assert_eq!(curve.get(i, 3).estimate, 0.0);
            assert!(curve.zero_hit_bound(i, 3).unwrap() > 0.0);
            assert!(curve.zero_hit_bound(i, 1).is_none());
        }
    }
}
