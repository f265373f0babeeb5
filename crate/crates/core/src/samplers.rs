//! Exact path samplers for the six conditioned laws and the diffusive
//! rescaling operator.
//!
//! Lattice laws are drawn step by step from the h-transform kernels of
//! [`DpTables`]; no rejection is involved. Gaussian laws use iid sums, the
//! sequential Gaussian bridge, and rejection for the positive conditionings.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::lattice_dp::{DpTables, LawKind};
use crate::rng::StreamRng;
use crate::{Error, Result, StepLaw};

/// A trajectory `(s_0, ..., s_N)` with `s_0 = 0`. Lattice paths hold integer
/// values, stored exactly as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    values: Vec<f64>,
    kind: Option<LawKind>,
    lattice: bool,
    /// Regeneration epochs, when the path was assembled from excursions.
    epochs: Option<Vec<usize>>,
    seed: Option<u64>,
}

impl Path {
    pub fn new(values: Vec<f64>, kind: Option<LawKind>, lattice: bool) -> Self {
        debug_assert!(!values.is_empty());
        Self { values, kind, lattice, epochs: None, seed: None }
    }

    pub fn from_lattice(values: &[i64], kind: Option<LawKind>) -> Self {
        Self::new(values.iter().map(|v| *v as f64).collect(), kind, true)
    }

    pub fn with_epochs(mut self, epochs: Vec<usize>) -> Self {
        self.epochs = Some(epochs);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> Option<LawKind> {
        self.kind
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    pub fn epochs(&self) -> Option<&[usize]> {
        self.epochs.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn endpoint(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `M_N = max_i |s_i|`.
    pub fn max_abs(&self) -> f64 {
        path_max(self)
    }

    /// Integer values of a lattice path.
    pub fn lattice_values(&self) -> Option<Vec<i64>> {
        self.lattice.then(|| self.values.iter().map(|v| *v as i64).collect())
    }

    pub fn rescale(&self) -> RescaledPath {
        rescale(self)
    }

    /// Checks `s_0 = 0` and the pathwise constraints of the path's law kind.
    pub fn validate(&self) -> Result<()> {
        if self.values[0] != 0.0 {
            return Err(Error::DomainError(format!("path starts at {}", self.values[0])));
        }
        if self.lattice && self.values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::DomainError("lattice path has non-integer values".into()));
        }
        if let Some(kind) = self.kind {
            let n = self.len();
            for (i, v) in self.values.iter().enumerate().skip(1) {
                // continuous paths cannot sit exactly at zero except where pinned
                let ok = if self.lattice { kind.admits(n - i, *v as i64) } else { continuous_admits(kind, n - i, *v) };
                if !ok {
                    return Err(Error::DomainError(format!("{kind} path violates its constraint at step {i}")));
                }
            }
        }
        if let Some(epochs) = &self.epochs {
            for &t in epochs {
                if self.values.get(t) != Some(&0.0) {
                    return Err(Error::DomainError(format!("path does not vanish at epoch {t}")));
                }
            }
        }
        Ok(())
    }
}

fn continuous_admits(kind: LawKind, remaining: usize, v: f64) -> bool {
    match kind {
        LawKind::Free | LawKind::AvoidZero => true,
        LawKind::Bridge | LawKind::AvoidZeroBridge => remaining > 0 || v == 0.0,
        LawKind::Meander => v > 0.0,
        LawKind::Excursion => {
            if remaining == 0 {
                v == 0.0
            } else {
                v > 0.0
            }
        }
    }
}

/// `M_N = max_{0 <= i <= N} |s_i|`.
pub fn path_max(path: &Path) -> f64 {
    path.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// The linear interpolation of `s_{Nt} / sqrt(N)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    knots: Vec<f64>,
    scale: f64,
}

impl RescaledPath {
    pub fn from_knots(knots: Vec<f64>) -> Self {
        let scale = ((knots.len() - 1) as f64).sqrt();
        Self { knots, scale }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `sqrt(N)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of linear pieces `N`.
    pub fn pieces(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let n = self.pieces();
        let pos = t * n as f64;
        let i = (pos.floor() as usize).min(n.saturating_sub(1));
        if n == 0 {
            return self.knots[0];
        }
        let frac = pos - i as f64;
        self.knots[i] + frac * (self.knots[i + 1] - self.knots[i])
    }

    pub fn sup_norm(&self) -> f64 {
        self.knots.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn rescale(path: &Path) -> RescaledPath {
    let n = path.len().max(1) as f64;
    let scale = n.sqrt();
    RescaledPath { knots: path.values.iter().map(|v| v / scale).collect(), scale }
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    /// Proposal cap for the Gaussian rejection samplers.
    pub max_attempts: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { max_attempts: 1_000_000 }
    }
}

/// Draws one path of length `n` from `kind`. Lattice laws need `tables`
/// covering `n` and holding the table of `kind`.
pub fn sample_path<R: Rng + ?Sized>(
    law: &StepLaw,
    kind: LawKind,
    n: usize,
    rng: &mut R,
    tables: Option<&DpTables>,
) -> Result<Path> {
    sample_path_with(law, kind, n, rng, tables, SamplerOptions::default())
}

pub fn sample_path_with<R: Rng + ?Sized>(
    law: &StepLaw,
    kind: LawKind,
    n: usize,
    rng: &mut R,
    tables: Option<&DpTables>,
    options: SamplerOptions,
) -> Result<Path> {
    match law {
        StepLaw::Lattice(_) => {
            if kind == LawKind::Free {
                return Ok(free_path(law, n, rng, true, kind));
            }
            let tables = tables.ok_or(Error::MissingTable("lattice sampling needs DP tables"))?;
            lattice_path(tables, kind, n, rng)
        }
        StepLaw::Gaussian(_) => gaussian_path(law, kind, n, rng, options),
    }
}

fn free_path<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R, lattice: bool, kind: LawKind) -> Path {
    let mut values = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n {
        x += law.sample_step(rng);
        values.push(x);
    }
    Path::new(values, Some(kind), lattice)
}

fn lattice_path<R: Rng + ?Sized>(tables: &DpTables, kind: LawKind, n: usize, rng: &mut R) -> Result<Path> {
    if n > tables.horizon() {
        return Err(Error::HorizonExceeded { n, horizon: tables.horizon() });
    }
    if !tables.has_table(kind) {
        // surfaces the MissingTable error
        tables.conditioning_weight(kind, 0, 0)?;
    }
    let slot = kind.slot().expect("free handled by caller");
    // pinned lengths are decided by the tables themselves: a first-return gap
    // can be reachable below the law's n0
    if *tables.weight_unchecked(slot, n, 0) == 0.0 {
        let law = tables.law();
        return Err(if kind.pins_endpoint() {
            Error::UnsupportedLength { kind, n, period: law.period(), n0: law.n0() }
        } else {
            Error::UnreachableState { kind, n, i: 0, x: 0 }
        });
    }
    let support = tables.support();
    let mut weights = vec![0.0; support.len()];
    let mut values = Vec::with_capacity(n + 1);
    let mut x = 0i64;
    values.push(0.0);
    for i in 0..n {
        let remaining = n - i - 1;
        let mut total = 0.0;
        for (w, (s, p)) in weights.iter_mut().zip(support) {
            let y = x + s;
            *w = if kind.admits(remaining, y) { p * *tables.weight_unchecked(slot, remaining, y) } else { 0.0 };
            total += *w;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (j, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                pick = Some(j);
                if u < *w {
                    break;
                }
                u -= w;
            }
        }
        let j = pick.ok_or(Error::UnreachableState { kind, n, i, x })?;
        x += support[j].0;
        values.push(x as f64);
    }
    Ok(Path::new(values, Some(kind), true))
}

fn gaussian_path<R: Rng + ?Sized>(
    law: &StepLaw,
    kind: LawKind,
    n: usize,
    rng: &mut R,
    options: SamplerOptions,
) -> Result<Path> {
    let sigma = law.sigma();
    match kind {
        // P(S_i = 0) = 0, so avoiding zero is no conditioning at all
        LawKind::Free | LawKind::AvoidZero => Ok(free_path(law, n, rng, false, kind)),
        LawKind::Bridge | LawKind::AvoidZeroBridge => {
            Ok(Path::new(gaussian_bridge(sigma, n, rng, |_, _| true).expect("unconstrained"), Some(kind), false))
        }
        LawKind::Meander => {
            for _ in 0..options.max_attempts {
                let mut values = Vec::with_capacity(n + 1);
                values.push(0.0);
                let mut x = 0.0;
                let mut ok = true;
                for _ in 0..n {
                    x += sigma * rng.sample::<f64, _>(StandardNormal);
                    if x <= 0.0 {
                        ok = false;
                        break;
                    }
                    values.push(x);
                }
                if ok {
                    return Ok(Path::new(values, Some(kind), false));
                }
            }
            Err(Error::RejectionBudgetExhausted {
                kind,
                n,
                attempts: options.max_attempts,
                expected_acceptance: meander_acceptance(n),
            })
        }
        LawKind::Excursion => {
            for _ in 0..options.max_attempts {
                if let Some(values) = gaussian_bridge(sigma, n, rng, |remaining, x| remaining == 0 || x > 0.0) {
                    return Ok(Path::new(values, Some(kind), false));
                }
            }
            Err(Error::RejectionBudgetExhausted {
                kind,
                n,
                attempts: options.max_attempts,
                expected_acceptance: 1.0 / n as f64,
            })
        }
    }
}

/// `P(S_1 > 0, ..., S_n > 0) = binom(2n, n) / 4^n` for symmetric continuous
/// steps.
pub fn meander_acceptance(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64)
}

/// Sequential Gaussian bridge: with `m` steps left at `x`, the next value is
/// normal with mean `x (m-1)/m` and variance `sigma^2 (m-1)/m`. Returns `None`
/// as soon as `keep(remaining, value)` fails.
fn gaussian_bridge<R: Rng + ?Sized>(
    sigma: f64,
    n: usize,
    rng: &mut R,
    keep: impl Fn(usize, f64) -> bool,
) -> Option<Vec<f64>> {
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut x = 0.0;
    for i in 0..n {
        let m = (n - i) as f64;
        let frac = (m - 1.0) / m;
        x = if i + 1 == n { 0.0 } else { x * frac + sigma * frac.sqrt() * rng.sample::<f64, _>(StandardNormal) };
        if !keep(n - i - 1, x) {
            return None;
        }
        values.push(x);
    }
    Some(values)
}

/// Something that produces paths of a requested length: a conditioned walk,
/// a regeneration construction, or a pinning model.
pub trait PathSource: Sync {
    fn label(&self) -> String;

    /// Variance of one step, used to normalise endpoint statistics.
    fn step_variance(&self) -> f64 {
        1.0
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Path>;
}

/// A step law together with the conditioning to apply.
pub struct WalkSource<'a> {
    pub law: &'a StepLaw,
    pub kind: LawKind,
    pub tables: Option<&'a DpTables>,
    pub options: SamplerOptions,
}

impl<'a> WalkSource<'a> {
    pub fn new(law: &'a StepLaw, kind: LawKind, tables: Option<&'a DpTables>) -> Self {
        Self { law, kind, tables, options: SamplerOptions::default() }
    }
}

impl PathSource for WalkSource<'_> {
    fn label(&self) -> String {
        self.kind.name().to_string()
    }

    fn step_variance(&self) -> f64 {
        self.law.variance()
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Path> {
        sample_path_with(self.law, self.kind, n, rng, self.tables, self.options)
    }
}

/// Writes paths one per line after a `# law_kind N seed` header.
pub fn dump_paths<W: Write>(mut out: W, label: &str, n: usize, seed: u64, paths: &[Path]) -> io::Result<()> {
    writeln!(out, "# {label} {n} {seed}")?;
    for p in paths {
        let line: Vec<String> = p
            .values()
            .iter()
            .map(|v| if p.is_lattice() { format!("{}", *v as i64) } else { format!("{v:.17e}") })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
