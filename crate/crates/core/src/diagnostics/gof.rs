use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::check_samples;
use crate::rng::run_chunks;
use crate::samplers::PathSource;
use crate::{Error, Result};

/// Limit law of the normalised endpoint `s_N / (sigma sqrt(N))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Standard normal: free walks.
    Normal,
    /// Density `x exp(-x^2/2)` on `x > 0`: meanders.
    Rayleigh,
}

impl Reference {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Reference::Normal => Normal::standard().cdf(x),
            Reference::Rayleigh => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-0.5 * x * x).exp_m1()
                }
            }
        }
    }
}

impl std::str::FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Reference::Normal),
            "rayleigh" => Ok(Reference::Rayleigh),
            _ => Err(Error::DomainError(format!("unknown reference law {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n: usize,
    pub samples: u64,
    pub reference: Reference,
    pub ks: f64,
    /// Asymptotic Kolmogorov p-value; conservative for lattice data, whose
    /// ties make the statistic stochastically smaller.
    pub p_value: f64,
}

/// `sup_x |F(x) - G(x)|` for a discrete law `(atom, mass)` against a continuous
/// CDF. Both one-sided limits of the step function are checked at each atom.
pub fn ks_distribution_vs_reference(atoms: &[(f64, f64)], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|a| a.1).sum();
    let mut below = 0.0;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let mut mass = 0.0;
        while i < sorted.len() && sorted[i].0 == x {
            mass += sorted[i].1;
            i += 1;
        }
        let g = cdf(x);
        d = d.max((below / total - g).abs());
        below += mass;
        d = d.max((below / total - g).abs());
    }
    d
}

/// One-sample KS distance of `data` to `cdf`, handling ties.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let atoms: Vec<(f64, f64)> = data.iter().map(|x| (*x, 1.0)).collect();
    ks_distribution_vs_reference(&atoms, cdf)
}

/// `P(K > sqrt(n) D)` under the Kolmogorov limit law, with the usual
/// finite-sample correction of the argument.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS distance of `s_n / (sigma sqrt(n))` to `reference` over Monte Carlo
/// endpoints.
pub fn endpoint_gof(
    source: &dyn PathSource,
    n: usize,
    samples: usize,
    reference: Reference,
    seed: u64,
) -> Result<GofReport> {
    check_samples(samples)?;
    let scale = (source.step_variance() * n as f64).sqrt();
    let chunks = run_chunks(samples, seed, 0, |len, rng| -> Result<Vec<f64>> {
        (0..len).map(|_| Ok(source.sample(n, rng)?.endpoint() / scale)).collect()
    });
    let mut data = Vec::with_capacity(samples);
    for c in chunks {
        data.extend(c?);
    }
    let ks = ks_statistic(&data, |x| reference.cdf(x));
    Ok(GofReport { n, samples: samples as u64, reference, ks, p_value: kolmogorov_p_value(ks, samples) })
}
