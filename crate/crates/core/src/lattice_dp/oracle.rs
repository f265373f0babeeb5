//! Brute-force path enumeration with exact rational weights.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{DpTables, LawKind};
use crate::{Error, Result, StepLaw};

/// Maximum number of enumerated step sequences.
pub const ORACLE_PATH_BUDGET: u64 = 10_000_000;
const ORACLE_MAX_LEN: usize = 12;

/// An exact, normalised law on paths `(s_0, ..., s_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLaw {
    kind: LawKind,
    n: usize,
    paths: Vec<(Vec<i64>, BigRational)>,
    /// Probability of the conditioning event under the free walk.
    conditioning: BigRational,
}

impl PathLaw {
    pub fn kind(&self) -> LawKind {
        self.kind
    }

    /// Path length `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of paths with positive probability.
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[(Vec<i64>, BigRational)] {
        &self.paths
    }

    pub fn conditioning_probability(&self) -> &BigRational {
        &self.conditioning
    }

    pub fn total_mass(&self) -> BigRational {
        self.paths.iter().map(|(_, w)| w.clone()).sum()
    }

    pub fn probability_of(&self, path: &[i64]) -> BigRational {
        self.paths.iter().find(|(p, _)| p == path).map_or_else(BigRational::zero, |(_, w)| w.clone())
    }

    /// Law of `S_i` for each `i = 0..=n`.
    pub fn marginals(&self) -> Vec<Vec<(i64, BigRational)>> {
        (0..=self.n)
            .map(|i| {
                let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
                for (p, w) in &self.paths {
                    let e = acc.entry(p[i]).or_insert_with(BigRational::zero);
                    *e += w;
                }
                acc.into_iter().collect()
            })
            .collect()
    }
}

/// Enumerates every step sequence of length `n` and conditions on the event
/// defining `kind`.
pub fn brute_force_oracle(law: &StepLaw, n: usize, kind: LawKind) -> Result<PathLaw> {
    let lattice = law.as_lattice()?;
    let offsets = lattice.offsets();
    let probs = lattice.exact_probs();
    let count = (offsets.len() as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if n > ORACLE_MAX_LEN || count > ORACLE_PATH_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "oracle enumeration of {} ^ {n} paths exceeds the budget",
            offsets.len()
        )));
    }
    if kind.pins_endpoint() && !law.supports_bridge_length(n) {
        return Err(Error::UnsupportedLength { kind, n, period: law.period(), n0: law.n0() });
    }

    let mut digits = vec![0usize; n];
    let mut paths = Vec::new();
    let mut total = BigRational::zero();
    'outer: loop {
        let mut path = Vec::with_capacity(n + 1);
        path.push(0i64);
        let mut weight = BigRational::one();
        let mut admissible = true;
        for (i, d) in digits.iter().enumerate() {
            let y = path[i] + offsets[*d];
            if !kind.admits(n - i - 1, y) {
                admissible = false;
                break;
            }
            path.push(y);
            weight *= &probs[*d];
        }
        if admissible {
            total += &weight;
            paths.push((path, weight));
        }
        // odometer increment
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < offsets.len() {
                continue 'outer;
            }
            *d = 0;
        }
        break;
    }
    if total.is_zero() {
        return Err(Error::UnreachableState { kind, n, i: 0, x: 0 });
    }
    for (_, w) in &mut paths {
        *w /= &total;
    }
    Ok(PathLaw { kind, n, paths, conditioning: total })
}

/// Compares the exact h-transform kernels in `tables` with enumeration for
/// `kind` at length `n`. Returns the number of disagreements (one for the
/// marginals, one per path) and the number of paths checked. A length at
/// which the law is undefined agrees when both sides reject it.
pub fn oracle_mismatches(tables: &DpTables<BigRational>, kind: LawKind, n: usize) -> Result<(u64, usize)> {
    let undefined = |e: &Error| matches!(e, Error::UnsupportedLength { .. } | Error::UnreachableState { .. });
    let oracle = match brute_force_oracle(tables.law(), n, kind) {
        Ok(o) => o,
        Err(e) if undefined(&e) => {
            return Ok((u64::from(tables.kernel_marginals(kind, n).is_ok()), 0));
        }
        Err(e) => return Err(e),
    };
    let strip = |m: Vec<Vec<(i64, BigRational)>>| -> Vec<Vec<(i64, BigRational)>> {
        m.into_iter().map(|row| row.into_iter().filter(|(_, p)| !p.is_zero()).collect()).collect()
    };
    let mut mismatches = u64::from(strip(tables.kernel_marginals(kind, n)?) != strip(oracle.marginals()));
    for (path, p) in oracle.paths() {
        if &tables.path_probability(kind, path)? != p {
            mismatches += 1;
        }
    }
    Ok((mismatches, oracle.len()))
}
