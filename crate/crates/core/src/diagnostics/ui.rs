use serde::{Deserialize, Serialize};

use super::report::seed_label;
use super::{check_samples, grid_check, merge_cells, merge_seeds, CsvRow, Estimate, MeanAcc};
use crate::lattice_dp::{DpTables, ExactTail, LawKind, UI_TAIL_EXACT_CAP};
use crate::rng::run_chunks;
use crate::samplers::PathSource;
use crate::Result;

/// Estimates of `E[(M_n^2/n) 1{M_n^2/n > K}]` on an `(n, K)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiCurve {
    pub law: String,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `cells[i][j]` accumulates the summand at `n_grid[i]`, `k_grid[j]`.
    pub cells: Vec<Vec<MeanAcc>>,
    /// Exact values where the DP is affordable.
    pub exact: Vec<Vec<Option<ExactTail>>>,
}

impl UiCurve {
    pub fn empty(law: &str, n_grid: &[usize], k_grid: &[f64]) -> Self {
        Self {
            law: law.to_string(),
            n_grid: n_grid.to_vec(),
            k_grid: k_grid.to_vec(),
            seeds: Vec::new(),
            cells: vec![vec![MeanAcc::default(); k_grid.len()]; n_grid.len()],
            exact: vec![vec![None; k_grid.len()]; n_grid.len()],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Estimate {
        self.cells[i][j].estimate()
    }

    /// `(estimate - exact) / sd`, with `sd` from the exact variance of one
    /// summand. A sample with no exceedance has zero empirical spread, so
    /// the exact spread is the honest yardstick.
    pub fn exact_z_score(&self, i: usize, j: usize) -> Option<f64> {
        let exact = self.exact[i][j]?;
        let acc = &self.cells[i][j];
        let sd = (exact.variance() / acc.count as f64).sqrt();
        let diff = acc.mean() - exact.mean;
        Some(if sd == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sd
        })
    }

    /// Whether every row is non-increasing in `K` (the grid must be sorted).
    pub fn is_monotone_in_k(&self) -> bool {
        let sorted = self.k_grid.windows(2).all(|w| w[0] <= w[1]);
        sorted && self.cells.iter().all(|row| row.windows(2).all(|w| w[1].mean() <= w[0].mean()))
    }

    /// Largest estimate over the configured `n` grid, per `K`.
    pub fn sup_over_grid(&self) -> Vec<f64> {
        (0..self.k_grid.len()).map(|j| self.cells.iter().map(|row| row[j].mean()).fold(0.0, f64::max)).collect()
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        grid_check("law", self.law == other.law)?;
        grid_check("n grid", self.n_grid == other.n_grid)?;
        grid_check("K grid", self.k_grid == other.k_grid)?;
        let exact = self
            .exact
            .iter()
            .zip(&other.exact)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.or(*y)).collect())
            .collect();
        Ok(Self {
            law: self.law.clone(),
            n_grid: self.n_grid.clone(),
            k_grid: self.k_grid.clone(),
            seeds: merge_seeds(&self.seeds, &other.seeds),
            cells: merge_cells(&self.cells, &other.cells),
            exact,
        })
    }

    pub fn rows(&self) -> Vec<CsvRow> {
        let seed = seed_label(&self.seeds);
        let mut rows = Vec::new();
        for (i, &n) in self.n_grid.iter().enumerate() {
            for (j, &k) in self.k_grid.iter().enumerate() {
                let e = self.get(i, j);
                rows.push(CsvRow {
                    law: self.law.clone(),
                    n_or_t: n,
                    param: k,
                    estimate: e.estimate,
                    stderr: e.stderr,
                    samples: e.samples,
                    seed: seed.clone(),
                    exact: self.exact[i][j].map(|t| t.mean),
                });
            }
        }
        rows
    }
}

/// Monte Carlo UI curve. When `exact` names tables and a law kind, the exact
/// value is attached for every `n <= UI_TAIL_EXACT_CAP` within the horizon.
pub fn estimate_ui(
    source: &dyn PathSource,
    n_grid: &[usize],
    k_grid: &[f64],
    samples: usize,
    seed: u64,
    exact: Option<(&DpTables, LawKind)>,
) -> Result<UiCurve> {
    check_samples(samples)?;
    let mut curve = UiCurve::empty(&source.label(), n_grid, k_grid);
    curve.seeds = vec![seed];
    for (i, &n) in n_grid.iter().enumerate() {
        let chunks = run_chunks(samples, seed, i as u32, |len, rng| -> Result<Vec<MeanAcc>> {
            let mut accs = vec![MeanAcc::default(); k_grid.len()];
            for _ in 0..len {
                let m = source.sample(n, rng)?.max_abs();
                let y = m * m / n as f64;
                for (acc, &k) in accs.iter_mut().zip(k_grid) {
                    acc.push(if y > k { y } else { 0.0 });
                }
            }
            Ok(accs)
        });
        for c in chunks {
            let c = c?;
            for (cell, acc) in curve.cells[i].iter_mut().zip(&c) {
                *cell = cell.merge(acc);
            }
        }
        if let Some((tables, kind)) = exact {
            if n <= UI_TAIL_EXACT_CAP && n <= tables.horizon() {
                let tails = tables.max_tail(kind, n)?;
                for (j, &k) in k_grid.iter().enumerate() {
                    curve.exact[i][j] = Some(crate::lattice_dp::ui_tail_from_max_tail(&tails, n, k));
                }
            }
        }
    }
    Ok(curve)
}
