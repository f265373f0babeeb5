//! Exact probability tables for lattice walks and the h-transform kernels of
//! the conditioned laws.
//!
//! Every conditioned law is a Doob h-transform of the free walk. For a path of
//! length `n` sitting at `x` after `i` steps, with `m = n - i` steps left, the
//! relevant harmonic weight is
//!
//! | kind                | weight `H_m(x)`                                   |
//! |---------------------|---------------------------------------------------|
//! | `free`              | 1                                                 |
//! | `bridge`            | `f_m(-x) = P_x(S_m = 0)`                          |
//! | `meander`           | `q_m(x) = P(x+S_1 > 0, ..., x+S_m > 0)`           |
//! | `excursion`         | `h_m(x) = P_x(S_1 > 0, ..., S_{m-1} > 0, S_m = 0)` |
//! | `avoid_zero`        | `r_m(x) = P_x(S_1 != 0, ..., S_m != 0)`           |
//! | `avoid_zero_bridge` | `P_x(T = m)`, `T` the first hitting time of 0     |
//!
//! and the one-step kernel is `p(y - x) 1{y admissible} H_{m-1}(y) / H_m(x)`.
//! Tables are stored row by row over the exact reachable window (outside it the
//! weight is a known constant), so memory is `O(n^2 * step range)`.

mod analysis;
pub mod cache;
mod oracle;
mod table;

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use analysis::{ui_tail_from_max_tail, ExactTail, Functional, FunctionalValue, RatioRow, UI_TAIL_EXACT_CAP};
pub use oracle::{brute_force_oracle, oracle_mismatches, PathLaw, ORACLE_PATH_BUDGET};

use crate::steplaw::{FromStep, StepLaw};
use crate::weight::Weight;
use crate::{Error, Result};
use table::{Row, Table};

/// The six path laws: free walk, bridge, meander, excursion, and the two
/// laws conditioned to avoid zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Free,
    Bridge,
    Meander,
    Excursion,
    AvoidZero,
    AvoidZeroBridge,
}

impl LawKind {
    pub const ALL: [LawKind; 6] = [
        LawKind::Free,
        LawKind::Bridge,
        LawKind::Meander,
        LawKind::Excursion,
        LawKind::AvoidZero,
        LawKind::AvoidZeroBridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawKind::Free => "free",
            LawKind::Bridge => "bridge",
            LawKind::Meander => "meander",
            LawKind::Excursion => "excursion",
            LawKind::AvoidZero => "avoid_zero",
            LawKind::AvoidZeroBridge => "avoid_zero_bridge",
        }
    }

    /// Laws that condition on `S_n = 0`.
    pub fn pins_endpoint(self) -> bool {
        matches!(self, LawKind::Bridge | LawKind::Excursion | LawKind::AvoidZeroBridge)
    }

    /// Laws confined to the positive half-line.
    pub fn is_positive(self) -> bool {
        matches!(self, LawKind::Meander | LawKind::Excursion)
    }

    /// Whether position `y` is allowed at a time with `remaining` steps left
    /// (`remaining == 0` is the endpoint). Applies to times `1..=n`.
    #[inline]
    pub fn admits(self, remaining: usize, y: i64) -> bool {
        match self {
            LawKind::Free => true,
            LawKind::Bridge => remaining > 0 || y == 0,
            LawKind::Meander => y > 0,
            LawKind::Excursion => {
                if remaining == 0 {
                    y == 0
                } else {
                    y > 0
                }
            }
            LawKind::AvoidZero => y != 0,
            LawKind::AvoidZeroBridge => {
                if remaining == 0 {
                    y == 0
                } else {
                    y != 0
                }
            }
        }
    }

    pub(crate) fn slot(self) -> Option<usize> {
        match self {
            LawKind::Free => None,
            LawKind::Bridge => Some(0),
            LawKind::Meander => Some(1),
            LawKind::Excursion => Some(2),
            LawKind::AvoidZero => Some(3),
            LawKind::AvoidZeroBridge => Some(4),
        }
    }

    fn table_name(self) -> &'static str {
        match self {
            LawKind::Free => "none",
            LawKind::Bridge => "f",
            LawKind::Meander => "q",
            LawKind::Excursion => "h",
            LawKind::AvoidZero => "r",
            LawKind::AvoidZeroBridge => "first_hit",
        }
    }

    /// Weight outside the stored window.
    fn outside_weight<P: Weight>(self) -> P {
        match self {
            LawKind::Meander | LawKind::AvoidZero => P::one(),
            _ => P::zero(),
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LawKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::DomainError(format!("unknown law kind {s:?}")))
    }
}

/// Which h-transform tables to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TableSelection(u8);

impl TableSelection {
    pub fn none() -> Self {
        Self(0)
    }

    pub fn all() -> Self {
        Self(0b11111)
    }

    pub fn of(kinds: &[LawKind]) -> Self {
        kinds.iter().fold(Self::none(), |s, k| s.with(*k))
    }

    pub fn with(self, kind: LawKind) -> Self {
        match kind.slot() {
            Some(i) => Self(self.0 | 1 << i),
            None => self,
        }
    }

    pub fn contains(self, kind: LawKind) -> bool {
        kind.slot().is_none_or(|i| self.0 & (1 << i) != 0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0b11111)
    }
}

const DEFAULT_BUDGET_MB: u64 = 3072;
pub const MEMORY_ENV: &str = "CONDWALK_DP_MEMORY_MB";

pub fn memory_budget_mb() -> u64 {
    std::env::var(MEMORY_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_BUDGET_MB)
}

/// Exact DP tables for a lattice law up to a horizon.
#[derive(Debug, Clone)]
pub struct DpTables<P = f64> {
    law: StepLaw,
    horizon: usize,
    support: Vec<(i64, P)>,
    tables: [Option<Table<P>>; 5],
    t_pmf: Vec<P>,
}

impl DpTables<f64> {
    /// Builds every table up to `n_max`.
    pub fn build(law: &StepLaw, n_max: usize) -> Result<Self> {
        Self::build_with(law, n_max, TableSelection::all())
    }

    pub fn build_with(law: &StepLaw, n_max: usize, selection: TableSelection) -> Result<Self> {
        Self::build_generic(law, n_max, selection, std::mem::size_of::<f64>() as u64)
    }
}

impl DpTables<BigRational> {
    /// Exact rational tables, for oracle comparisons at small horizons.
    pub fn build_exact(law: &StepLaw, n_max: usize) -> Result<Self> {
        Self::build_generic(law, n_max, TableSelection::all(), 128)
    }
}

impl<P: Weight + FromStep> DpTables<P> {
    fn build_generic(law: &StepLaw, n_max: usize, selection: TableSelection, entry_bytes: u64) -> Result<Self> {
        let lattice = law.as_lattice()?;
        let lo = lattice.min_offset();
        let hi = lattice.max_offset();
        let support = lattice.support::<P>();

        let n = n_max as u64;
        let rows_total = |width: u64| n * (n + 1) / 2 * width + n;
        let mut entries = (n + 1) * (hi - lo) as u64 + 1; // forward window for t_pmf
        for kind in LawKind::ALL {
            if kind != LawKind::Free && selection.contains(kind) {
                let width = if kind.is_positive() { (-lo) as u64 } else { (hi - lo) as u64 };
                entries += rows_total(width);
            }
        }
        let needed_mb = entries.saturating_mul(entry_bytes) >> 20;
        let budget_mb = memory_budget_mb();
        if needed_mb > budget_mb {
            return Err(Error::BudgetExceeded(format!(
                "tables to horizon {n_max} need ~{needed_mb} MiB, budget is {budget_mb} MiB (set {MEMORY_ENV})"
            )));
        }

        let mut tables: [Option<Table<P>>; 5] = Default::default();
        for kind in LawKind::ALL {
            if let Some(slot) = kind.slot() {
                if selection.contains(kind) {
                    tables[slot] = Some(backward_table(&support, kind, n_max, lo, hi));
                }
            }
        }
        let t_pmf = first_return_pmf(&support, n_max, lo, hi);
        Ok(Self { law: law.clone(), horizon: n_max, support, tables, t_pmf })
    }
}

/// `H_m(x)` for `m = 0..=n_max` by the backward recursion
/// `H_m(x) = sum_s p(s) 1{x+s admissible} H_{m-1}(x+s)`, with `H_0 = 1`.
fn backward_table<P: Weight>(support: &[(i64, P)], kind: LawKind, n_max: usize, lo: i64, hi: i64) -> Table<P> {
    let mut rows = Vec::with_capacity(n_max + 1);
    rows.push(Row::constant(P::one()));
    for m in 1..=n_max {
        let mi = m as i64;
        let (start, end) = if kind.is_positive() { (0, -mi * lo) } else { (-mi * hi, -mi * lo) };
        let prev: &Row<P> = &rows[m - 1];
        let vals: Vec<P> = (start..=end)
            .map(|x| {
                let mut acc = P::zero();
                for (s, p) in support {
                    let y = x + s;
                    if kind.admits(m - 1, y) {
                        let w = prev.get(y);
                        if !w.is_zero() {
                            acc = acc + p.clone() * w.clone();
                        }
                    }
                }
                acc
            })
            .collect();
        let outside = kind.outside_weight::<P>();
        let below = if kind.is_positive() { P::zero() } else { outside.clone() };
        rows.push(Row { start, vals, below, above: outside });
    }
    Table { rows }
}

/// `P(T = n)` for `n = 0..=n_max` by forward propagation of the mass that has
/// not yet returned to zero.
fn first_return_pmf<P: Weight>(support: &[(i64, P)], n_max: usize, lo: i64, hi: i64) -> Vec<P> {
    let offset = n_max as i64 * -lo;
    let width = (n_max as i64 * (hi - lo) + 1) as usize;
    let mut mass = vec![P::zero(); width];
    let mut next = vec![P::zero(); width];
    mass[offset as usize] = P::one();
    let mut pmf = vec![P::zero(); n_max + 1];
    let (mut a, mut b) = (0i64, 0i64); // active window of positions
    for k in 1..=n_max {
        let (na, nb) = (a + lo, b + hi);
        for y in na..=nb {
            next[(y + offset) as usize] = P::zero();
        }
        for x in a..=b {
            let m = &mass[(x + offset) as usize];
            if m.is_zero() {
                continue;
            }
            for (s, p) in support {
                let idx = (x + s + offset) as usize;
                next[idx] = next[idx].clone() + m.clone() * p.clone();
            }
        }
        let zero = (offset) as usize;
        pmf[k] = std::mem::replace(&mut next[zero], P::zero());
        for x in a..=b {
            mass[(x + offset) as usize] = P::zero();
        }
        std::mem::swap(&mut mass, &mut next);
        a = na;
        b = nb;
    }
    pmf
}

impl<P: Weight> DpTables<P> {
    pub fn law(&self) -> &StepLaw {
        &self.law
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn support(&self) -> &[(i64, P)] {
        &self.support
    }

    pub fn selection(&self) -> TableSelection {
        LawKind::ALL
            .into_iter()
            .filter(|k| k.slot().is_some_and(|i| self.tables[i].is_some()))
            .fold(TableSelection::none(), TableSelection::with)
    }

    pub fn has_table(&self, kind: LawKind) -> bool {
        kind.slot().is_none_or(|i| self.tables[i].is_some())
    }

    fn table(&self, kind: LawKind) -> Result<Option<&Table<P>>> {
        match kind.slot() {
            None => Ok(None),
            Some(i) => self.tables[i].as_ref().map(Some).ok_or(Error::MissingTable(kind.table_name())),
        }
    }

    fn check_horizon(&self, n: usize) -> Result<()> {
        if n > self.horizon {
            return Err(Error::HorizonExceeded { n, horizon: self.horizon });
        }
        Ok(())
    }

    /// Errors unless the law `kind` is defined at length `n`.
    pub fn check_length(&self, kind: LawKind, n: usize) -> Result<()> {
        if kind.pins_endpoint() && !self.law.supports_bridge_length(n) {
            return Err(Error::UnsupportedLength { kind, n, period: self.law.period(), n0: self.law.n0() });
        }
        Ok(())
    }

    /// The h-transform weight `H_m(x)` of `kind` (see the module docs).
    pub fn conditioning_weight(&self, kind: LawKind, m: usize, x: i64) -> Result<P> {
        self.check_horizon(m)?;
        Ok(match self.table(kind)? {
            None => P::one(),
            Some(t) => t.get(m, x).clone(),
        })
    }

    /// Unchecked `H_m(x)`; the table must exist and `m <= horizon`.
    #[inline]
    pub(crate) fn weight_unchecked(&self, slot: usize, m: usize, x: i64) -> &P {
        self.tables[slot].as_ref().expect("table checked by caller").get(m, x)
    }

    /// `f_n(x) = P(S_n = x)`.
    pub fn f(&self, n: usize, x: i64) -> Result<P> {
        if n == 0 {
            self.check_horizon(0)?;
            return Ok(if x == 0 { P::one() } else { P::zero() });
        }
        self.conditioning_weight(LawKind::Bridge, n, -x)
    }

    /// `q_m(x) = P(x + S_1 > 0, ..., x + S_m > 0)` for `x >= 0`.
    pub fn q(&self, m: usize, x: i64) -> Result<P> {
        self.conditioning_weight(LawKind::Meander, m, x)
    }

    /// `h_m(x) = P_x(S_1 > 0, ..., S_{m-1} > 0, S_m = 0)` for `m >= 1`, `x >= 0`.
    pub fn h(&self, m: usize, x: i64) -> Result<P> {
        if m == 0 {
            return Err(Error::DomainError("h_m is defined for m >= 1".into()));
        }
        self.conditioning_weight(LawKind::Excursion, m, x)
    }

    /// `r_m(x) = P_x(S_1 != 0, ..., S_m != 0)`.
    pub fn r(&self, m: usize, x: i64) -> Result<P> {
        self.conditioning_weight(LawKind::AvoidZero, m, x)
    }

    /// `P_x(T = m)` for `m >= 1`.
    pub fn first_hit(&self, m: usize, x: i64) -> Result<P> {
        if m == 0 {
            return Err(Error::DomainError("first hitting time is >= 1".into()));
        }
        self.conditioning_weight(LawKind::AvoidZeroBridge, m, x)
    }

    /// `P(T = n)` with `T = min{n >= 1 : S_n = 0}` started from 0.
    pub fn t_pmf(&self, n: usize) -> Result<P> {
        self.check_horizon(n)?;
        Ok(self.t_pmf[n].clone())
    }

    pub fn t_pmf_slice(&self) -> &[P] {
        &self.t_pmf
    }

    /// `P(T > n) = 1 - sum_{k <= n} P(T = k)`.
    pub fn t_survival(&self, n: usize) -> Result<P> {
        self.check_horizon(n)?;
        Ok(self.t_pmf[..=n].iter().fold(P::one(), |acc, p| acc - p.clone()))
    }

    /// Exact law of `S_{i+1}` given `S_i = x` under the law `kind` of length `n`.
    pub fn kernel(&self, kind: LawKind, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.check_horizon(n)?;
        self.check_length(kind, n)?;
        if i >= n {
            return Err(Error::DomainError(format!("step index {i} must be below length {n}")));
        }
        let table = self.table(kind)?;
        let m = n - i;
        let weight = |m: usize, y: i64| table.map_or(P::one(), |t| t.get(m, y).clone());
        let denom = weight(m, x);
        if denom.is_zero() || (i == 0 && x != 0) || (i > 0 && !kind.admits(m, x)) {
            return Err(Error::UnreachableState { kind, n, i, x });
        }
        let mut out = Vec::with_capacity(self.support.len());
        for (s, p) in &self.support {
            let y = x + s;
            if !kind.admits(m - 1, y) {
                continue;
            }
            let w = p.clone() * weight(m - 1, y);
            if !w.is_zero() {
                out.push((y, w / denom.clone()));
            }
        }
        Ok(out)
    }

    pub fn meander_kernel(&self, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.kernel(LawKind::Meander, n, i, x)
    }

    pub fn bridge_kernel(&self, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.kernel(LawKind::Bridge, n, i, x)
    }

    pub fn excursion_kernel(&self, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.kernel(LawKind::Excursion, n, i, x)
    }

    pub fn avoidzero_kernel(&self, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.kernel(LawKind::AvoidZero, n, i, x)
    }

    pub fn avoidzero_bridge_kernel(&self, n: usize, i: usize, x: i64) -> Result<Vec<(i64, P)>> {
        self.kernel(LawKind::AvoidZeroBridge, n, i, x)
    }

    /// Marginal laws of `S_0, ..., S_n` obtained by chaining the kernels.
    pub fn kernel_marginals(&self, kind: LawKind, n: usize) -> Result<Vec<Vec<(i64, P)>>> {
        let mut marginals = vec![vec![(0i64, P::one())]];
        for i in 0..n {
            let mut next: std::collections::BTreeMap<i64, P> = Default::default();
            for (x, px) in &marginals[i] {
                for (y, k) in self.kernel(kind, n, i, *x)? {
                    let e = next.entry(y).or_insert_with(P::zero);
                    *e = e.clone() + px.clone() * k;
                }
            }
            marginals.push(next.into_iter().collect());
        }
        Ok(marginals)
    }

    /// Probability of a whole path as the product of its kernel transitions.
    pub fn path_probability(&self, kind: LawKind, path: &[i64]) -> Result<P> {
        if path.first() != Some(&0) {
            return Ok(P::zero());
        }
        let n = path.len() - 1;
        let mut prob = P::one();
        for i in 0..n {
            let kernel = self.kernel(kind, n, i, path[i])?;
            match kernel.into_iter().find(|(y, _)| *y == path[i + 1]) {
                Some((_, k)) => prob = prob * k,
                None => return Ok(P::zero()),
            }
        }
        Ok(prob)
    }

    pub(crate) fn table_rows(&self, kind: LawKind) -> Option<&Table<P>> {
        kind.slot().and_then(|i| self.tables[i].as_ref())
    }
}
