use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::report::seed_label;
use super::{check_samples, grid_check, merge_seeds, CsvRow, Estimate};
use crate::rng::run_chunks;
use crate::samplers::{PathSource, RescaledPath};
use crate::{Error, Result};

/// `Gamma(delta)(f) = sup_{|s - t| <= delta} |f(t) - f(s)|`, exactly.
///
/// For a piecewise-linear `f` the supremum is attained either at two knots
/// or at a knot and a point exactly `delta` away from it.
pub fn modulus(path: &RescaledPath, delta: f64) -> f64 {
    segment_modulus(path.knots(), delta * path.pieces() as f64)
}

/// The modulus restricted to pairs `s, t` with no epoch strictly between
/// them. `epochs` are knot indices.
pub fn restricted_modulus(path: &RescaledPath, epochs: &[usize], delta: f64) -> f64 {
    let knots = path.knots();
    let d = delta * path.pieces() as f64;
    let mut cuts: Vec<usize> = epochs.iter().copied().filter(|&e| e < knots.len()).collect();
    cuts.push(0);
    cuts.push(knots.len() - 1);
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| segment_modulus(&knots[w[0]..=w[1]], d)).fold(0.0, f64::max)
}

/// Modulus of the linear interpolation of `knots` (unit spacing) over pairs at
/// distance at most `d`.
fn segment_modulus(knots: &[f64], d: f64) -> f64 {
    let len = knots.len();
    if len < 2 || d <= 0.0 {
        return 0.0;
    }
    let last = (len - 1) as f64;
    let w = ((d + 1e-9).floor() as usize).min(len - 1);
    let mut best = 0.0f64;

    // knot pairs: largest range over every window of w + 1 knots
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    for j in 0..len {
        while maxq.back().is_some_and(|&k| knots[k] <= knots[j]) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&k| knots[k] >= knots[j]) {
            minq.pop_back();
        }
        minq.push_back(j);
        let start = j.saturating_sub(w);
        while maxq[0] < start {
            maxq.pop_front();
        }
        while minq[0] < start {
            minq.pop_front();
        }
        best = best.max(knots[maxq[0]] - knots[minq[0]]);
    }

    // a knot against the point exactly d away
    let interp = |x: f64| {
        let i = (x.floor() as usize).min(len - 2);
        let frac = x - i as f64;
        knots[i] + frac * (knots[i + 1] - knots[i])
    };
    if d < last {
        for (i, &v) in knots.iter().enumerate() {
            let x = i as f64;
            if x + d <= last {
                best = best.max((interp(x + d) - v).abs());
            }
            if x - d >= 0.0 {
                best = best.max((interp(x - d) - v).abs());
            }
        }
    }
    best
}

/// Exceedance counts of `Gamma(delta) > eta` per `(N, delta)`, and optionally
/// of the epoch-restricted modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub law: String,
    pub n_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    pub eta: f64,
    pub seeds: Vec<u64>,
    pub samples: Vec<u64>,
    pub exceed: Vec<Vec<u64>>,
    pub restricted: Option<Vec<Vec<u64>>>,
}

fn fraction(hits: u64, n: u64) -> Estimate {
    let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
    Estimate { estimate: p, stderr: se, samples: n }
}

fn add_counts(a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

impl ModulusReport {
    pub fn empty(law: &str, n_grid: &[usize], delta_grid: &[f64], eta: f64, restricted: bool) -> Self {
        let zeros = vec![vec![0; delta_grid.len()]; n_grid.len()];
        Self {
            law: law.to_string(),
            n_grid: n_grid.to_vec(),
            delta_grid: delta_grid.to_vec(),
            eta,
            seeds: Vec::new(),
            samples: vec![0; n_grid.len()],
            restricted: restricted.then(|| zeros.clone()),
            exceed: zeros,
        }
    }

    /// `P(Gamma(delta) > eta)` at `n_grid[i]`, `delta_grid[j]`.
    pub fn get(&self, i: usize, j: usize) -> Estimate {
        fraction(self.exceed[i][j], self.samples[i])
    }

    pub fn get_restricted(&self, i: usize, j: usize) -> Option<Estimate> {
        self.restricted.as_ref().map(|r| fraction(r[i][j], self.samples[i]))
    }

    /// Whether exceedance is non-decreasing in `delta` on every row, after
    /// sorting the grid.
    pub fn is_monotone_in_delta(&self) -> bool {
        let mut order: Vec<usize> = (0..self.delta_grid.len()).collect();
        order.sort_by(|&a, &b| self.delta_grid[a].total_cmp(&self.delta_grid[b]));
        self.exceed.iter().all(|row| order.windows(2).all(|w| row[w[0]] <= row[w[1]]))
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        grid_check("law", self.law == other.law)?;
        grid_check("N grid", self.n_grid == other.n_grid)?;
        grid_check("delta grid", self.delta_grid == other.delta_grid)?;
        grid_check("eta", self.eta == other.eta)?;
        grid_check("restricted flag", self.restricted.is_some() == other.restricted.is_some())?;
        Ok(Self {
            law: self.law.clone(),
            n_grid: self.n_grid.clone(),
            delta_grid: self.delta_grid.clone(),
            eta: self.eta,
            seeds: merge_seeds(&self.seeds, &other.seeds),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            exceed: add_counts(&self.exceed, &other.exceed),
            restricted: match (&self.restricted, &other.restricted) {
                (Some(a), Some(b)) => Some(add_counts(a, b)),
                _ => None,
            },
        })
    }

    /// One row per `(N, delta)`; restricted rows carry the law suffix
    /// `:restricted`.
    pub fn rows(&self) -> Vec<CsvRow> {
        let seed = seed_label(&self.seeds);
        let mut rows = Vec::new();
        let mut emit = |law: String, e: Estimate, n: usize, delta: f64| {
            rows.push(CsvRow {
                law,
                n_or_t: n,
                param: delta,
                estimate: e.estimate,
                stderr: e.stderr,
                samples: e.samples,
                seed: seed.clone(),
                exact: None,
            })
        };
        for (i, &n) in self.n_grid.iter().enumerate() {
            for (j, &delta) in self.delta_grid.iter().enumerate() {
                emit(self.law.clone(), self.get(i, j), n, delta);
            }
        }
        if self.restricted.is_some() {
            for (i, &n) in self.n_grid.iter().enumerate() {
                for (j, &delta) in self.delta_grid.iter().enumerate() {
                    emit(format!("{}:restricted", self.law), self.get_restricted(i, j).unwrap(), n, delta);
                }
            }
        }
        rows
    }
}

/// Monte Carlo exceedance of the modulus. The restricted variant needs paths
/// that record their regeneration epochs.
pub fn estimate_modulus(
    source: &dyn PathSource,
    n_grid: &[usize],
    delta_grid: &[f64],
    eta: f64,
    samples: usize,
    seed: u64,
    restricted: bool,
) -> Result<ModulusReport> {
    check_samples(samples)?;
    let mut report = ModulusReport::empty(&source.label(), n_grid, delta_grid, eta, restricted);
    report.seeds = vec![seed];
    let k = delta_grid.len();
    for (i, &n) in n_grid.iter().enumerate() {
        let chunks = run_chunks(samples, seed, i as u32, |len, rng| -> Result<(Vec<u64>, Vec<u64>)> {
            let mut full = vec![0u64; k];
            let mut restr = vec![0u64; k];
            for _ in 0..len {
                let path = source.sample(n, rng)?;
                let scaled = path.rescale();
                for (j, &delta) in delta_grid.iter().enumerate() {
                    full[j] += u64::from(modulus(&scaled, delta) > eta);
                    if restricted {
                        let epochs = path
                            .epochs()
                            .ok_or_else(|| Error::DomainError("restricted modulus needs regeneration epochs".into()))?;
                        restr[j] += u64::from(restricted_modulus(&scaled, epochs, delta) > eta);
                    }
                }
            }
            Ok((full, restr))
        });
        for c in chunks {
            let (full, restr) = c?;
            for (a, b) in report.exceed[i].iter_mut().zip(full) {
                *a += b;
            }
            if let Some(r) = report.restricted.as_mut() {
                for (a, b) in r[i].iter_mut().zip(restr) {
                    *a += b;
                }
            }
        }
        report.samples[i] = samples as u64;
    }
    Ok(report)
}
