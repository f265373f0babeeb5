//! Monte Carlo diagnostics: uniform-integrability tails of `M_n^2/n`, tail
//! scaling `a^2 P(M_t/sqrt(t) > a)`, exceedance of the continuity modulus,
//! and endpoint goodness of fit.
//!
//! Every report keeps raw sums rather than averages, so reports from
//! independent batches merge by addition. Error bars are normal-approximation
//! standard errors.

mod gof;
mod modulus;
mod report;
mod tail;
mod ui;

pub use gof::{endpoint_gof, kolmogorov_p_value, ks_distribution_vs_reference, ks_statistic, GofReport, Reference};
pub use modulus::{estimate_modulus, modulus, restricted_modulus, ModulusReport};
pub use report::{write_csv, CsvRow};
pub use tail::{estimate_tail, TailCurve};
pub use ui::{estimate_ui, UiCurve};

use serde::{Deserialize, Serialize};

use crate::lattice_dp::DpTables;
use crate::rng::run_chunks;
use crate::samplers::sample_path;
use crate::{Error, Result, StepLaw};

/// Smallest Monte Carlo sample accepted by the estimators.
pub const MIN_SAMPLES: usize = 10_000;

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::DomainError(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(())
}

/// Running sums of a scalar summand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAcc {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    pub fn push(&mut self, y: f64) {
        self.count += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean from the sample variance.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { estimate: self.mean(), stderr: self.stderr(), samples: self.count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// `|estimate - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.stderr
    }
}

fn merge_cells(a: &[Vec<MeanAcc>], b: &[Vec<MeanAcc>]) -> Vec<Vec<MeanAcc>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.merge(q)).collect()).collect()
}

fn merge_seeds(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut s: Vec<u64> = a.iter().chain(b).copied().collect();
    s.sort_unstable();
    s
}

fn grid_check(what: &str, same: bool) -> Result<()> {
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(what.to_string()))
    }
}

/// Fraction of free paths of length `n` whose last zero is at most `n/2`.
/// For symmetric walks this tends to 1/2 (arcsine law).
pub fn estimate_last_zero(law: &StepLaw, n: usize, samples: usize, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    let tables: Option<&DpTables> = None;
    let chunks = run_chunks(samples, seed, 0, |len, rng| -> Result<MeanAcc> {
        let mut acc = MeanAcc::default();
        for _ in 0..len {
            let p = sample_path(law, crate::LawKind::Free, n, rng, tables)?;
            let last = p.values().iter().rposition(|v| *v == 0.0).unwrap_or(0);
            acc.push(if last <= n / 2 { 1.0 } else { 0.0 });
        }
        Ok(acc)
    });
    let mut total = MeanAcc::default();
    for c in chunks {
        total = total.merge(&c?);
    }
    Ok(total.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_acc_pooling() {
        let mut a = MeanAcc::default();
        let mut b = MeanAcc::default();
        for y in [1.0, 2.0, 3.0] {
            a.push(y);
        }
        for y in [5.0, 7.0, 9.0] {
            b.push(y);
        }
        let m = a.merge(&b);
        assert_eq!(m.mean(), (a.mean() + b.mean()) / 2.0);
        assert_eq!(a.merge(&b), b.merge(&a));
        assert_eq!(a.merge(&MeanAcc::default()), a);
        assert!((a.stderr() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn small_samples_rejected() {
        assert!(estimate_last_zero(&StepLaw::lazy(), 10, 10, 1).is_err());
    }
}
