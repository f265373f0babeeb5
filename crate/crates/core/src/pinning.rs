//! Pinning and wetting models: partition functions by a log-domain renewal
//! recursion over the last zero, backward sampling of the zero set, and
//! full-path sampling by filling the gaps with conditioned excursions.
//!
//! Discrete laws reweight each visit to 0 at site `n` by `exp(xi_n)`.
//! Gaussian laws use a Dirac mass `xi_n delta_0` at each site, so the weight
//! of pinning site `n` is `xi_n` itself and the bulk weight of a gap of
//! length `t` is the density `f_t(0)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::lattice_dp::{DpTables, LawKind, TableSelection};
use crate::regeneration::{assemble_with_epochs, RegenerationScheme, WalkFamily};
use crate::rng::{stream, StreamRng};
use crate::samplers::{Path, PathSource};
use crate::weight::Weight;
use crate::{Error, Result, StepLaw};

/// Site rewards `xi_1, ..., xi_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    xi: Vec<f64>,
}

impl Environment {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = xi.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::DomainError(format!("xi_{} = {v} is not finite", i + 1)));
        }
        Ok(Self { xi })
    }

    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Parses one real per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xi = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            xi.push(
                line.parse().map_err(|_| Error::DomainError(format!("environment line {}: {line:?}", lineno + 1)))?,
            );
        }
        Self::new(xi)
    }

    /// Sites `1..=N`, stored from index 0.
    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `xi_n` for `n >= 1`.
    pub fn site(&self, n: usize) -> f64 {
        self.xi[n - 1]
    }

    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.xi.len() {
            return Err(Error::DomainError(format!("environment has {} sites, {n} requested", self.xi.len())));
        }
        Ok(Self { xi: self.xi[..n].to_vec() })
    }
}

/// An iid environment drawn from a named distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IidEnvironment {
    /// `constant [v]`, `normal [mean, sd]`, `uniform [low, high]` or
    /// `bernoulli [p, value]` (value with probability p, else 0).
    pub dist: String,
    pub params: Vec<f64>,
    pub seed: u64,
}

impl IidEnvironment {
    pub fn generate(&self, n: usize) -> Result<Environment> {
        let bad = || Error::DomainError(format!("bad parameters {:?} for {}", self.params, self.dist));
        let mut rng = stream(self.seed, u64::MAX);
        let p = &self.params;
        let xi: Vec<f64> = match (self.dist.as_str(), p.as_slice()) {
            ("constant", [v]) => vec![*v; n],
            ("normal", [m, s]) => {
                let d = Normal::new(*m, *s).map_err(|_| bad())?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            ("uniform", [a, b]) => {
                let d = Uniform::new_inclusive(*a, *b).map_err(|_| bad())?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            ("bernoulli", [q, v]) if (0.0..=1.0).contains(q) => {
                (0..n).map(|_| if rng.random::<f64>() < *q { *v } else { 0.0 }).collect()
            }
            _ => return Err(bad()),
        };
        Environment::new(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Pinning,
    Wetting,
    PinningConstrained,
    WettingConstrained,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::Pinning, Variant::Wetting, Variant::PinningConstrained, Variant::WettingConstrained];

    pub fn is_wetting(self) -> bool {
        matches!(self, Variant::Wetting | Variant::WettingConstrained)
    }

    pub fn is_constrained(self) -> bool {
        matches!(self, Variant::PinningConstrained | Variant::WettingConstrained)
    }

    /// Law of the excursions between consecutive zeros.
    pub fn bulk_kind(self) -> LawKind {
        if self.is_wetting() {
            LawKind::Excursion
        } else {
            LawKind::AvoidZeroBridge
        }
    }

    /// Law of the piece after the last zero, for free-endpoint variants.
    pub fn final_kind(self) -> LawKind {
        if self.is_wetting() {
            LawKind::Meander
        } else {
            LawKind::AvoidZero
        }
    }

    /// Lattice tables needed to build and sample the model.
    pub fn required_tables(self) -> TableSelection {
        TableSelection::of(&[self.bulk_kind(), self.final_kind()])
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pinning => "pinning",
            Variant::Wetting => "wetting",
            Variant::PinningConstrained => "pinning_constrained",
            Variant::WettingConstrained => "wetting_constrained",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::DomainError(format!("unknown variant {s:?}")))
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Renewal partition function with linear weights: `z(0) = 1`,
/// `z(j) = w_j sum_t k(t) z(j-t)`, then `z(N)` if constrained and
/// `sum_j z(j) fin(N-j)` otherwise. `k` and `fin` are indexed by length
/// (`k[0]` unused) and `w` by site (`w[0]` unused).
pub fn renewal_partition<P: Weight>(k: &[P], fin: &[P], w: &[P], constrained: bool) -> P {
    let n = w.len() - 1;
    let mut z = vec![P::one()];
    for j in 1..=n {
        let acc = (1..=j).fold(P::zero(), |acc, t| acc + k[t].clone() * z[j - t].clone());
        z.push(w[j].clone() * acc);
    }
    if constrained {
        z[n].clone()
    } else {
        (0..=n).fold(P::zero(), |acc, j| acc + z[j].clone() * fin[n - j].clone())
    }
}

/// A pinning or wetting model of fixed length, with its renewal DP vectors.
#[derive(Debug, Clone)]
pub struct PinningModel {
    law: StepLaw,
    variant: Variant,
    env: Environment,
    n: usize,
    tables: Option<Arc<DpTables>>,
    /// Log site weights, index 1..=n.
    log_w: Vec<f64>,
    /// Log bulk gap weights, index 1..=n.
    log_k: Vec<f64>,
    /// Log final-piece weights, index 0..=n.
    log_fin: Vec<f64>,
    log_z: Vec<f64>,
    log_partition: f64,
}

impl PinningModel {
    /// Builds the model on the first `n` sites of `env`. Lattice laws need
    /// `tables` with horizon at least `n` holding
    /// [`Variant::required_tables`].
    pub fn new(
        law: &StepLaw,
        variant: Variant,
        env: &Environment,
        n: usize,
        tables: Option<Arc<DpTables>>,
    ) -> Result<Self> {
        let env = env.truncate(n)?;
        let mut log_w = vec![0.0; n + 1];
        let mut log_k = vec![f64::NEG_INFINITY; n + 1];
        let mut log_fin = vec![0.0; n + 1];
        match law {
            StepLaw::Lattice(_) => {
                let t = tables.as_deref().ok_or(Error::MissingTable("pinning on a lattice needs DP tables"))?;
                if t.horizon() < n {
                    return Err(Error::HorizonExceeded { n, horizon: t.horizon() });
                }
                for j in 1..=n {
                    log_w[j] = env.site(j);
                }
                let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                for m in 0..=n {
                    if variant.is_wetting() {
                        if m > 0 {
                            log_k[m] = ln(t.h(m, 0)?);
                        }
                        if !variant.is_constrained() {
                            log_fin[m] = ln(t.q(m, 0)?);
                        }
                    } else {
                        if m > 0 {
                            log_k[m] = ln(t.t_pmf(m)?);
                        }
                        if !variant.is_constrained() {
                            log_fin[m] = ln(t.r(m, 0)?);
                        }
                    }
                }
            }
            StepLaw::Gaussian(_) => {
                for j in 1..=n {
                    let xi = env.site(j);
                    if xi < 0.0 {
                        return Err(Error::NegativeXiContinuous { site: j, value: xi });
                    }
                    log_w[j] = xi.ln();
                }
                let var = law.variance();
                let mut log_q = 0.0;
                for m in 0..=n {
                    if m > 0 {
                        // density of S_m at 0; a positive excursion keeps one
                        // cyclic shift in m
                        let dens = -0.5 * (2.0 * PI * var * m as f64).ln();
                        log_k[m] = if variant.is_wetting() { dens - (m as f64).ln() } else { dens };
                        log_q += ((2 * m - 1) as f64 / (2 * m) as f64).ln();
                    }
                    if variant.is_wetting() {
                        // P(S_1 > 0, ..., S_m > 0) = binom(2m, m) / 4^m
                        log_fin[m] = log_q;
                    }
                }
            }
        }
        if variant.is_constrained() {
            log_fin = vec![f64::NEG_INFINITY; n + 1];
            log_fin[0] = 0.0;
        }

        let mut log_z = vec![0.0; n + 1];
        for j in 1..=n {
            log_z[j] = log_w[j] + log_sum_exp((1..=j).map(|t| log_k[t] + log_z[j - t]));
        }
        let log_partition = log_sum_exp((0..=n).map(|j| log_z[j] + log_fin[n - j]));
        if log_partition == f64::NEG_INFINITY {
            return Err(Error::UnsupportedLength { kind: variant.bulk_kind(), n, period: law.period(), n0: law.n0() });
        }
        Ok(Self { law: law.clone(), variant, env, n, tables, log_w, log_k, log_fin, log_z, log_partition })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn law(&self) -> &StepLaw {
        &self.law
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn partition(&self) -> f64 {
        self.log_partition.exp()
    }

    /// `log z(j)`: total weight of paths on `[0, j]` with a zero at `j`.
    pub fn log_z(&self) -> &[f64] {
        &self.log_z
    }

    /// Exact `P(s_j = 0)` for `j = 0..=N`.
    pub fn zero_marginals(&self) -> Vec<f64> {
        let n = self.n;
        // log b(j): weight of the continuation after a zero at j
        let mut log_b = vec![f64::NEG_INFINITY; n + 1];
        for j in (0..=n).rev() {
            let jumps = (1..=n - j).map(|t| self.log_k[t] + self.log_w[j + t] + log_b[j + t]);
            log_b[j] = log_sum_exp(std::iter::once(self.log_fin[n - j]).chain(jumps));
        }
        (0..=n).map(|j| (self.log_z[j] + log_b[j] - self.log_partition).exp()).collect()
    }

    /// Samples the zero set backwards from the right boundary. The result is
    /// increasing, starts at 0 and ends at `N` for constrained variants.
    pub fn sample_zero_set<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.n;
        let last = if self.variant.is_constrained() {
            n
        } else {
            let weights = (0..=n).map(|j| self.log_z[j] + self.log_fin[n - j] - self.log_partition);
            pick(weights, rng.random())
        };
        let mut zeros = vec![last];
        let mut j = last;
        while j > 0 {
            let base = self.log_w[j] - self.log_z[j];
            let t = 1 + pick((1..=j).map(|t| base + self.log_k[t] + self.log_z[j - t]), rng.random());
            j -= t;
            zeros.push(j);
        }
        zeros.reverse();
        zeros
    }

    /// Samples a full path: zero set first, then independent excursions.
    pub fn sample_path(&self, rng: &mut StreamRng) -> Result<Path> {
        let zeros = self.sample_zero_set(rng);
        let family =
            WalkFamily::new(&self.law, self.variant.bulk_kind(), self.variant.final_kind(), self.tables.as_deref())?;
        assemble_with_epochs(&family, zeros, self.n, rng)
    }
}

/// Index drawn from normalised log-weights by a forward scan, stopping as soon
/// as the cumulative mass passes `u`. Rounding leftovers go to the last index
/// with positive weight.
fn pick(log_weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, lw) in log_weights.enumerate() {
        if lw == f64::NEG_INFINITY {
            continue;
        }
        last = i;
        acc += lw.exp();
        if u < acc {
            return i;
        }
    }
    last
}

/// The zero set of a pinning model as a regeneration scheme.
pub struct PinningZeroSet<'a>(pub &'a PinningModel);

impl RegenerationScheme for PinningZeroSet<'_> {
    fn label(&self) -> String {
        format!("{}_zero_set", self.0.variant)
    }

    fn sample_epochs(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
        if n != self.0.n {
            return Err(Error::DomainError(format!("model has length {}, asked for {n}", self.0.n)));
        }
        Ok(self.0.sample_zero_set(rng))
    }
}

/// Pinning models for several lengths over one environment, as a path source.
pub struct PinningSource {
    models: BTreeMap<usize, PinningModel>,
    variance: f64,
}

impl PinningSource {
    pub fn new(
        law: &StepLaw,
        variant: Variant,
        env: &Environment,
        lengths: &[usize],
        tables: Option<Arc<DpTables>>,
    ) -> Result<Self> {
        let models = lengths
            .iter()
            .map(|&n| PinningModel::new(law, variant, env, n, tables.clone()).map(|m| (n, m)))
            .collect::<Result<_>>()?;
        Ok(Self { models, variance: law.variance() })
    }

    pub fn model(&self, n: usize) -> Option<&PinningModel> {
        self.models.get(&n)
    }
}

impl PathSource for PinningSource {
    fn label(&self) -> String {
        self.models.values().next().map(|m| m.variant.to_string()).unwrap_or_default()
    }

    fn step_variance(&self) -> f64 {
        self.variance
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Path> {
        self.models
            .get(&n)
            .ok_or_else(|| Error::DomainError(format!("no pinning model of length {n}")))?
            .sample_path(rng)
    }
}

/// `Z` by enumerating every lattice path of length `n`. Exponential cost.
pub fn brute_force_partition(law: &StepLaw, variant: Variant, env: &Environment) -> Result<f64> {
    let lattice = law.as_lattice()?;
    let n = env.len();
    let total = (lattice.offsets().len() as f64).powi(n as i32);
    if total > crate::lattice_dp::ORACLE_PATH_BUDGET as f64 {
        return Err(Error::BudgetExceeded(format!("{total} paths")));
    }
    let support: Vec<(i64, f64)> = lattice.offsets().iter().copied().zip(lattice.probs().iter().copied()).collect();
    fn walk(support: &[(i64, f64)], env: &Environment, variant: Variant, i: usize, x: i64, weight: f64, acc: &mut f64) {
        let n = env.len();
        if i == n {
            if !variant.is_constrained() || x == 0 {
                *acc += weight;
            }
            return;
        }
        for (s, p) in support {
            let y = x + s;
            if variant.is_wetting() && y < 0 {
                continue;
            }
            let w = if y == 0 { weight * p * env.site(i + 1).exp() } else { weight * p };
            walk(support, env, variant, i + 1, y, w, acc);
        }
    }
    let mut acc = 0.0;
    walk(&support, env, variant, 0, 0, 1.0, &mut acc);
    Ok(acc)
}
