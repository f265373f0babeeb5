//! Zero-mean, finite-variance increment laws.

use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::weight::{parse_rational, rational_from_f64, Weight};
use crate::{Error, Result};

/// A probability as written in a config: a string is read as an exact
/// rational (`"1/4"`, `"0.25"`), a number as a float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbLiteral {
    Exact(String),
    Float(f64),
}

/// Unvalidated step description, as read from an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Lattice {
        support: Vec<(i64, ProbLiteral)>,
    },
    Gaussian {
        sigma: f64,
    },
    /// `{-1: 1/4, 0: 1/2, 1: 1/4}`
    Lazy,
    /// `{-1: 1/2, 1: 1/2}`
    Simple,
    /// Symmetric law with `P(X = ±k) ∝ k^(-exponent)` for `1 <= k <= k_max`.
    PowerTail {
        exponent: f64,
        k_max: i64,
    },
}

#[derive(Debug, Clone)]
pub enum StepLaw {
    Lattice(LatticeLaw),
    Gaussian(GaussianLaw),
}

#[derive(Debug, Clone)]
pub struct LatticeLaw {
    offsets: Vec<i64>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    variance: f64,
    period: usize,
    n0: usize,
    index: WeightedIndex<f64>,
}

#[derive(Debug, Clone)]
pub struct GaussianLaw {
    sigma: f64,
    normal: Normal<f64>,
}

impl StepLaw {
    pub fn lazy() -> Self {
        Self::validate(&StepSpec::Lazy).expect("lazy walk is valid")
    }

    pub fn simple() -> Self {
        Self::validate(&StepSpec::Simple).expect("simple walk is valid")
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::validate(&StepSpec::Gaussian { sigma })
    }

    pub fn validate(spec: &StepSpec) -> Result<Self> {
        match spec {
            StepSpec::Gaussian { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(if *sigma == 0.0 {
                        Error::DegenerateVariance
                    } else {
                        Error::InvalidLaw(format!("sigma must be positive and finite, got {sigma}"))
                    });
                }
                let normal = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidLaw(e.to_string()))?;
                Ok(StepLaw::Gaussian(GaussianLaw { sigma: *sigma, normal }))
            }
            StepSpec::Lazy => Self::from_exact(&[(-1, "1/4"), (0, "1/2"), (1, "1/4")]),
            StepSpec::Simple => Self::from_exact(&[(-1, "1/2"), (1, "1/2")]),
            StepSpec::PowerTail { exponent, k_max } => {
                if *k_max < 1 || !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidLaw(format!(
                        "power tail needs k_max >= 1 and a positive exponent, got {k_max}, {exponent}"
                    )));
                }
                let weights: Vec<f64> = (1..=*k_max).map(|k| (k as f64).powf(-exponent)).collect();
                let total = 2.0 * weights.iter().sum::<f64>();
                let mut support = Vec::with_capacity(2 * weights.len());
                for (k, w) in weights.iter().enumerate().rev() {
                    support.push((-(k as i64 + 1), w / total));
                }
                for (k, w) in weights.iter().enumerate() {
                    support.push((k as i64 + 1, w / total));
                }
                LatticeLaw::new(support.into_iter().map(|(s, p)| (s, p, None)).collect()).map(StepLaw::Lattice)
            }
            StepSpec::Lattice { support } => {
                let mut entries = Vec::with_capacity(support.len());
                for (offset, lit) in support {
                    let (p, exact) = match lit {
                        ProbLiteral::Float(p) => (*p, None),
                        ProbLiteral::Exact(s) => {
                            let r = parse_rational(s)
                                .ok_or_else(|| Error::InvalidLaw(format!("cannot parse probability {s:?}")))?;
                            (Weight::to_f64(&r), Some(r))
                        }
                    };
                    entries.push((*offset, p, exact));
                }
                LatticeLaw::new(entries).map(StepLaw::Lattice)
            }
        }
    }

    fn from_exact(support: &[(i64, &str)]) -> Result<Self> {
        let entries = support
            .iter()
            .map(|(s, p)| {
                let r = parse_rational(p).expect("literal");
                (*s, Weight::to_f64(&r), Some(r))
            })
            .collect();
        LatticeLaw::new(entries).map(StepLaw::Lattice)
    }

    pub fn variance(&self) -> f64 {
        match self {
            StepLaw::Lattice(l) => l.variance,
            StepLaw::Gaussian(g) => g.sigma * g.sigma,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn period(&self) -> usize {
        match self {
            StepLaw::Lattice(l) => l.period,
            StepLaw::Gaussian(_) => 1,
        }
    }

    pub fn n0(&self) -> usize {
        match self {
            StepLaw::Lattice(l) => l.n0,
            StepLaw::Gaussian(_) => 1,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, StepLaw::Lattice(_))
    }

    pub fn as_lattice(&self) -> Result<&LatticeLaw> {
        match self {
            StepLaw::Lattice(l) => Ok(l),
            StepLaw::Gaussian(_) => Err(Error::NotLattice),
        }
    }

    /// Whether bridge-type conditioning (`S_n = 0`) is defined at length `n`.
    pub fn supports_bridge_length(&self, n: usize) -> bool {
        n >= self.n0() && n.is_multiple_of(self.period())
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            StepLaw::Lattice(l) => l.offsets[l.index.sample(rng)] as f64,
            StepLaw::Gaussian(g) => g.normal.sample(rng),
        }
    }

    /// Stable hex digest of the law, used as a cache and manifest key.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_string().as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLaw::Gaussian(g) => write!(f, "gaussian(sigma={:e})", g.sigma),
            StepLaw::Lattice(l) => {
                write!(f, "lattice(")?;
                for (i, (s, p)) in l.offsets.iter().zip(&l.probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    match &l.exact {
                        Some(exact) => write!(f, "{s}:{}", exact[i])?,
                        None => write!(f, "{s}:{p:e}")?,
                    }
                }
                write!(f, ")")
            }
        }
    }
}

impl LatticeLaw {
    fn new(mut entries: Vec<(i64, f64, Option<BigRational>)>) -> Result<Self> {
        entries.retain(|(_, p, exact)| match exact {
            Some(r) => !r.is_zero(),
            None => *p != 0.0,
        });
        if entries.is_empty() {
            return Err(Error::EmptySupport);
        }
        entries.sort_by_key(|e| e.0);
        // merge duplicate offsets
        let mut merged: Vec<(i64, f64, Option<BigRational>)> = Vec::with_capacity(entries.len());
        for (s, p, r) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == s => {
                    last.1 += p;
                    last.2 = match (last.2.take(), r) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                }
                _ => merged.push((s, p, r)),
            }
        }
        let all_exact = merged.iter().all(|e| e.2.is_some());
        for (s, p, r) in &merged {
            let negative = match r {
                Some(r) => *r < BigRational::zero(),
                None => *p < 0.0,
            };
            if negative || !p.is_finite() {
                return Err(Error::InvalidLaw(format!("probability of step {s} is {p}")));
            }
        }

        let offsets: Vec<i64> = merged.iter().map(|e| e.0).collect();
        let probs: Vec<f64> = merged.iter().map(|e| e.1).collect();
        let exact = if all_exact {
            let rs: Vec<BigRational> = merged.into_iter().map(|e| e.2.unwrap()).collect();
            let total: BigRational = rs.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
            }
            let mean: BigRational =
                offsets.iter().zip(&rs).map(|(s, r)| BigRational::from_integer((*s).into()) * r).sum();
            if !mean.is_zero() {
                return Err(Error::NonZeroMean(mean.to_string()));
            }
            Some(rs)
        } else {
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
            }
            let mean: f64 = offsets.iter().zip(&probs).map(|(s, p)| *s as f64 * p).sum();
            if mean.abs() >= 1e-12 {
                return Err(Error::NonZeroMean(mean.to_string()));
            }
            None
        };

        let variance: f64 = offsets.iter().zip(&probs).map(|(s, p)| (*s as f64).powi(2) * p).sum();
        if variance <= 0.0 {
            return Err(Error::DegenerateVariance);
        }
        let (period, n0) = return_structure(&offsets);
        let index = WeightedIndex::new(&probs).map_err(|e| Error::InvalidLaw(e.to_string()))?;
        Ok(Self { offsets, probs, exact, variance, period, n0, index })
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_offset(&self) -> i64 {
        self.offsets[0]
    }

    pub fn max_offset(&self) -> i64 {
        *self.offsets.last().unwrap()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact step probabilities; float laws are converted digit-for-digit
    /// (every finite double is a dyadic rational).
    pub fn exact_probs(&self) -> Vec<BigRational> {
        match &self.exact {
            Some(rs) => rs.clone(),
            None => self.probs.iter().map(|p| rational_from_f64(*p)).collect(),
        }
    }

    pub fn support<P: Weight + FromStep>(&self) -> Vec<(i64, P)> {
        P::support_of(self)
    }
}

/// Conversion from a lattice law into the weight type of a DP backend.
pub trait FromStep: Sized {
    fn support_of(law: &LatticeLaw) -> Vec<(i64, Self)>;
}

impl FromStep for f64 {
    fn support_of(law: &LatticeLaw) -> Vec<(i64, f64)> {
        law.offsets.iter().copied().zip(law.probs.iter().copied()).collect()
    }
}

impl FromStep for BigRational {
    fn support_of(law: &LatticeLaw) -> Vec<(i64, BigRational)> {
        law.offsets.iter().copied().zip(law.exact_probs()).collect()
    }
}

/// Period and `n0` of the return times to zero.
///
/// Any zero-sum multiset of steps can be ordered so that its partial sums stay
/// in `[min + 1, max]`, so return times can be read off a walk confined to that
/// window. The returning lengths form a numerical semigroup (scaled by the
/// period); we scan far enough past its conductor to see it.
fn return_structure(offsets: &[i64]) -> (usize, usize) {
    let lo = offsets[0];
    let hi = *offsets.last().unwrap();
    let width = (hi - lo).max(1) as usize;
    let bound = 2 * width * width + 2 * width + 8;
    let base = lo + 1;
    let slots = (hi - base + 1) as usize;
    let mut cur = vec![false; slots];
    let mut next = vec![false; slots];
    cur[(-base) as usize] = true;
    let mut returns = Vec::new();
    for n in 1..=bound {
        next.iter_mut().for_each(|b| *b = false);
        for (i, _) in cur.iter().enumerate().filter(|(_, b)| **b) {
            let x = base + i as i64;
            for s in offsets {
                let y = x + s;
                if y >= base && y <= hi {
                    next[(y - base) as usize] = true;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if cur[(-base) as usize] {
            returns.push(n);
        }
    }
    let period = returns.iter().fold(0usize, |g, n| g.gcd(n));
    // smallest n0 with every multiple of the period in [n0, bound] a return
    let mut n0 = *returns.last().unwrap();
    for w in returns.windows(2).rev() {
        if w[1] - w[0] == period {
            n0 = w[0];
        } else {
            break;
        }
    }
    (period, n0)
}
