//! Path measures built from regeneration epochs: sample a random set
//! `0 = t_1 < ... < t_n <= N`, fill each gap with an independent bulk
//! excursion pinned to zero at both ends, and fill `[t_n, N]` with a final
//! excursion that is only pinned at its start.
//!
//! Also home of the tent counterexample, a bulk family whose heights have
//! tail exactly `eta / a^2`.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use crate::lattice_dp::{DpTables, LawKind};
use crate::rng::{run_chunks, StreamRng};
use crate::samplers::{sample_path_with, Path, PathSource, SamplerOptions};
use crate::{Error, Result, StepLaw};

/// A law on subsets of `{0, ..., N}` that contain 0.
pub trait RegenerationScheme: Sync {
    fn label(&self) -> String;

    /// Sorted epochs, starting with 0, all at most `n`.
    fn sample_epochs(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<usize>>;
}

/// Always `{0}`: the whole path is one final excursion.
#[derive(Debug, Clone, Copy, Default)]
pub struct Singleton;

/// Always `{0, N}`: the whole path is one bulk excursion.
#[derive(Debug, Clone, Copy, Default)]
pub struct EndpointPair;

/// All multiples of `step` up to `N`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub step: usize,
}

/// A homogeneous renewal process with iid gaps.
#[derive(Debug, Clone)]
pub struct Renewal {
    gaps: Vec<usize>,
    index: WeightedIndex<f64>,
}

impl RegenerationScheme for Singleton {
    fn label(&self) -> String {
        "singleton".into()
    }

    fn sample_epochs(&self, _n: usize, _rng: &mut StreamRng) -> Result<Vec<usize>> {
        Ok(vec![0])
    }
}

impl RegenerationScheme for EndpointPair {
    fn label(&self) -> String {
        "endpoint_pair".into()
    }

    fn sample_epochs(&self, n: usize, _rng: &mut StreamRng) -> Result<Vec<usize>> {
        Ok(if n == 0 { vec![0] } else { vec![0, n] })
    }
}

impl Grid {
    pub fn new(step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::DomainError("grid step must be positive".into()));
        }
        Ok(Self { step })
    }
}

impl RegenerationScheme for Grid {
    fn label(&self) -> String {
        format!("grid_{}", self.step)
    }

    fn sample_epochs(&self, n: usize, _rng: &mut StreamRng) -> Result<Vec<usize>> {
        Ok((0..=n).step_by(self.step).collect())
    }
}

impl Renewal {
    /// `pmf` lists `(gap, probability)` pairs with positive gaps.
    pub fn new(pmf: &[(usize, f64)]) -> Result<Self> {
        if pmf.iter().any(|(g, p)| *g == 0 || !p.is_finite() || *p < 0.0) {
            return Err(Error::DomainError("renewal gaps must be positive with nonnegative weights".into()));
        }
        let index = WeightedIndex::new(pmf.iter().map(|(_, p)| *p))
            .map_err(|e| Error::DomainError(format!("renewal gap law: {e}")))?;
        Ok(Self { gaps: pmf.iter().map(|(g, _)| *g).collect(), index })
    }
}

impl RegenerationScheme for Renewal {
    fn label(&self) -> String {
        "renewal".into()
    }

    fn sample_epochs(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
        let mut epochs = vec![0];
        let mut t = 0;
        loop {
            t += self.gaps[self.index.sample(rng)];
            if t > n {
                return Ok(epochs);
            }
            epochs.push(t);
        }
    }
}

/// Bulk laws `P_t^bulk` (pinned at both ends) and final laws `P_t^rig`
/// (pinned at the start), indexed by the excursion length `t`.
pub trait ExcursionFamily: Sync {
    fn label(&self) -> String;

    fn is_lattice(&self) -> bool;

    fn bulk(&self, t: usize, rng: &mut StreamRng) -> Result<Path>;

    fn rig(&self, t: usize, rng: &mut StreamRng) -> Result<Path>;
}

/// Excursions drawn from conditioned random walks.
pub struct WalkFamily<'a> {
    pub law: &'a StepLaw,
    pub bulk: LawKind,
    pub rig: LawKind,
    pub tables: Option<&'a DpTables>,
    pub options: SamplerOptions,
}

impl<'a> WalkFamily<'a> {
    pub fn new(law: &'a StepLaw, bulk: LawKind, rig: LawKind, tables: Option<&'a DpTables>) -> Result<Self> {
        if !bulk.pins_endpoint() {
            return Err(Error::UnsupportedKind { kind: bulk });
        }
        Ok(Self { law, bulk, rig, tables, options: SamplerOptions::default() })
    }

    fn draw(&self, kind: LawKind, t: usize, rng: &mut StreamRng) -> Result<Path> {
        sample_path_with(self.law, kind, t, rng, self.tables, self.options).map_err(|e| match e {
            Error::UnsupportedLength { .. } | Error::UnreachableState { .. } => Error::MissingExcursionLength(t),
            other => other,
        })
    }
}

impl ExcursionFamily for WalkFamily<'_> {
    fn label(&self) -> String {
        format!("{}/{}", self.bulk, self.rig)
    }

    fn is_lattice(&self) -> bool {
        self.law.is_lattice()
    }

    fn bulk(&self, t: usize, rng: &mut StreamRng) -> Result<Path> {
        self.draw(self.bulk, t, rng)
    }

    fn rig(&self, t: usize, rng: &mut StreamRng) -> Result<Path> {
        self.draw(self.rig, t, rng)
    }
}

/// Tent-shaped excursions: height `A sqrt(t)` at the midpoint knot, linear
/// down to 0 at both ends, with `P(A > a) = min(1, eta / a^2)`.
#[derive(Debug, Clone, Copy)]
pub struct TentFamily {
    eta: f64,
}

impl TentFamily {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::DomainError(format!("tent parameter must be positive, got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `P(A > a)`.
    pub fn height_tail(&self, a: f64) -> f64 {
        if a <= 0.0 {
            1.0
        } else {
            (self.eta / (a * a)).min(1.0)
        }
    }

    pub fn sample_height<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // U in (0, 1] keeps A finite
        let u = 1.0 - rng.random::<f64>();
        (self.eta / u).sqrt()
    }

    /// Tent of length `t >= 2` with height `a sqrt(t)`.
    pub fn tent(t: usize, a: f64) -> Result<Path> {
        if t < 2 {
            return Err(Error::MissingExcursionLength(t));
        }
        let peak = a * (t as f64).sqrt();
        let half = (t / 2) as f64;
        let values = (0..=t).map(|i| peak * i.min(t - i) as f64 / half).collect();
        Ok(Path::new(values, None, false))
    }
}

impl ExcursionFamily for TentFamily {
    fn label(&self) -> String {
        format!("tent_{}", self.eta)
    }

    fn is_lattice(&self) -> bool {
        false
    }

    fn bulk(&self, t: usize, rng: &mut StreamRng) -> Result<Path> {
        let a = self.sample_height(rng);
        Self::tent(t, a)
    }

    fn rig(&self, t: usize, rng: &mut StreamRng) -> Result<Path> {
        self.bulk(t, rng)
    }
}

/// Samples epochs from `scheme`, then independent excursions from `family`,
/// and concatenates them. The returned path records its epochs.
pub fn assemble(
    scheme: &dyn RegenerationScheme,
    family: &dyn ExcursionFamily,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Path> {
    let epochs = scheme.sample_epochs(n, rng)?;
    assemble_with_epochs(family, epochs, n, rng)
}

/// Fills the gaps of a given epoch set.
pub fn assemble_with_epochs(
    family: &dyn ExcursionFamily,
    epochs: Vec<usize>,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Path> {
    if epochs.first() != Some(&0) || epochs.windows(2).any(|w| w[0] >= w[1]) || *epochs.last().unwrap() > n {
        return Err(Error::DomainError("epochs must be increasing, start at 0 and end by N".into()));
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    for w in epochs.windows(2) {
        let piece = family.bulk(w[1] - w[0], rng)?;
        values.extend_from_slice(&piece.values()[1..]);
    }
    let last = *epochs.last().unwrap();
    if last < n {
        let piece = family.rig(n - last, rng)?;
        values.extend_from_slice(&piece.values()[1..]);
    }
    debug_assert_eq!(values.len(), n + 1);
    Ok(Path::new(values, None, family.is_lattice()).with_epochs(epochs))
}

/// A regeneration construction viewed as a path source.
pub struct AssembledSource<'a> {
    pub scheme: &'a dyn RegenerationScheme,
    pub family: &'a dyn ExcursionFamily,
    pub step_variance: f64,
}

impl PathSource for AssembledSource<'_> {
    fn label(&self) -> String {
        format!("{}+{}", self.scheme.label(), self.family.label())
    }

    fn step_variance(&self) -> f64 {
        self.step_variance
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Path> {
        assemble(self.scheme, self.family, n, rng)
    }
}

/// Bulk excursions of the tent family as a path source, for tail scans.
pub struct TentSource(pub TentFamily);

impl PathSource for TentSource {
    fn label(&self) -> String {
        self.0.label()
    }

    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Path> {
        self.0.bulk(n, rng)
    }
}

/// `1 - (1 - eta/a^2)^(a^2)`: the probability that the rescaled path built
/// from `a^2` tent blocks on a grid leaves `[-1, 1]`.
pub fn counterexample_probability(eta: f64, a: u64) -> Result<f64> {
    let a2 = (a as f64) * (a as f64);
    if !(eta.is_finite() && eta > 0.0) || a2 < eta {
        return Err(Error::DomainError(format!("need a >= sqrt(eta), got a = {a}, eta = {eta}")));
    }
    let p = eta / a2;
    if p >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(a2 * (-p).ln_1p()).exp_m1())
}

/// Monte Carlo estimate of [`counterexample_probability`] over assembled
/// grid paths with blocks of length `t`. Returns `(estimate, stderr)`.
pub fn counterexample_monte_carlo(eta: f64, a: u64, t: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let family = TentFamily::new(eta)?;
    let scheme = Grid::new(t)?;
    let blocks = (a * a) as usize;
    let n = blocks * t;
    let counts = run_chunks(samples, seed, 0, |len, rng| -> Result<usize> {
        let mut hits = 0;
        for _ in 0..len {
            let path = assemble(&scheme, &family, n, rng)?;
            if path.rescale().sup_norm() > 1.0 {
                hits += 1;
            }
        }
        Ok(hits)
    });
    let hits: usize = counts.into_iter().sum::<Result<usize>>()?;
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn counterexample_examples() {
        assert_eq!(counterexample_probability(1.0, 1).unwrap(), 1.0);
        let v = counterexample_probability(0.5, 10).unwrap();
        assert!((v - (1.0 - 0.995f64.powi(100))).abs() < 1e-14);
        let big = counterexample_probability(1.0, 10_000).unwrap();
        assert!((big - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
        assert!(matches!(counterexample_probability(4.0, 1), Err(Error::DomainError(_))));
    }

    #[test]
    fn tent_shape() {
        let p = TentFamily::tent(4, 1.0).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 2.0, 1.0, 0.0]);
        let odd = TentFamily::tent(5, 1.0).unwrap();
        assert!((odd.max_abs() - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(odd.endpoint(), 0.0);
        assert!(TentFamily::tent(1, 1.0).is_err());
    }

    #[test]
    fn tent_height_tail() {
        let fam = TentFamily::new(1.0).unwrap();
        let mut rng = stream(1, 0);
        let n = 200_000;
        let hits = (0..n).filter(|_| fam.sample_height(&mut rng) > 4.0).count();
        let p = hits as f64 / n as f64;
        let se = (fam.height_tail(4.0) * (1.0 - fam.height_tail(4.0)) / n as f64).sqrt();
        assert!((p - 1.0 / 16.0).abs() < 4.0 * se);
        assert_eq!(fam.height_tail(0.5), 1.0);
    }

    #[test]
    fn grid_paths_vanish_on_multiples() {
        let law = StepLaw::lazy();
        let tables = DpTables::build(&law, 64).unwrap();
        let family = WalkFamily::new(&law, LawKind::Excursion, LawKind::Meander, Some(&tables)).unwrap();
        let scheme = Grid::new(8).unwrap();
        let mut rng = stream(2, 0);
        for n in [64, 60] {
            let p = assemble(&scheme, &family, n, &mut rng).unwrap();
            p.validate().unwrap();
            for k in (0..=n).step_by(8) {
                assert_eq!(p.values()[k], 0.0);
            }
            assert!(p.values().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn singleton_and_pair() {
        let law = StepLaw::lazy();
        let tables = DpTables::build(&law, 16).unwrap();
        let family = WalkFamily::new(&law, LawKind::Excursion, LawKind::Meander, Some(&tables)).unwrap();
        let mut rng = stream(3, 0);
        let p = assemble(&Singleton, &family, 16, &mut rng).unwrap();
        assert!(p.values()[1..].iter().all(|v| *v > 0.0));
        let q = assemble(&EndpointPair, &family, 16, &mut rng).unwrap();
        assert_eq!(q.endpoint(), 0.0);
        assert_eq!(q.epochs(), Some(&[0, 16][..]));
    }

    #[test]
    fn missing_length_is_reported() {
        let law = StepLaw::simple();
        let tables = DpTables::build(&law, 16).unwrap();
        let family = WalkFamily::new(&law, LawKind::Excursion, LawKind::Meander, Some(&tables)).unwrap();
        let mut rng = stream(4, 0);
        let err = assemble(&Grid::new(3).unwrap(), &family, 9, &mut rng).unwrap_err();
        assert_eq!(err, Error::MissingExcursionLength(3));
        assert!(WalkFamily::new(&law, LawKind::Meander, LawKind::Meander, None).is_err());
    }

    #[test]
    fn renewal_epochs() {
        let r = Renewal::new(&[(2, 1.0), (3, 1.0)]).unwrap();
        let mut rng = stream(5, 0);
        for _ in 0..100 {
            let e = r.sample_epochs(20, &mut rng).unwrap();
            assert_eq!(e[0], 0);
            assert!(e.windows(2).all(|w| matches!(w[1] - w[0], 2 | 3)));
            assert!(20 - e.last().unwrap() < 3);
        }
        assert!(Renewal::new(&[(0, 1.0)]).is_err());
    }

    #[test]
    fn small_counterexample_monte_carlo() {
        let exact = counterexample_probability(1.0, 2).unwrap();
        let (est, se) = counterexample_monte_carlo(1.0, 2, 8, 20_000, 11).unwrap();
        assert!((est - exact).abs() < 3.5 * se, "{est} vs {exact}");
    }
}
