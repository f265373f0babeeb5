//! Exact functionals of the conditioned laws: endpoint law, law of the
//! absolute maximum, first-return asymptotics and return-ratio scans.

use serde::{Deserialize, Serialize};

use super::{DpTables, LawKind};
use crate::weight::Weight;
use crate::{Error, Result};

/// Largest length for which the exact law of `M_n` is computed (`O(n^3)` work).
pub const UI_TAIL_EXACT_CAP: usize = 512;

/// `E[Y 1{Y > K}]` and `E[Y^2 1{Y > K}]` for `Y = M_n^2 / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactTail {
    pub k: f64,
    pub mean: f64,
    pub second_moment: f64,
}

impl ExactTail {
    /// Variance of one summand `Y 1{Y > K}`; sets the Monte Carlo error bar.
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    /// `max_x n P_x(T = n) / P_x(T > n)` over `x >= 0`.
    pub sup: f64,
    pub argmax: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `E[S_n^2 / (sigma^2 n)]`
    EndpointSecondMoment,
    EndpointDistribution,
    /// `E[(M_n^2/n) 1{M_n^2/n > K}]`
    UiTail(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalValue {
    Scalar(f64),
    Distribution(Vec<(i64, f64)>),
}

impl<P: Weight> DpTables<P> {
    /// Propagates the unnormalised mass of admissible paths. Mass that would
    /// leave `[-band, band]` is handed to `on_exit(step, position, mass)`
    /// instead of being kept.
    fn forward_masses(
        &self,
        kind: LawKind,
        n: usize,
        band: Option<i64>,
        mut on_exit: impl FnMut(usize, i64, P),
    ) -> (i64, Vec<P>) {
        let mut start = 0i64;
        let mut mass = vec![P::one()];
        for i in 1..=n {
            let remaining = n - i;
            let lo = self.support.first().map_or(0, |s| s.0);
            let hi = self.support.last().map_or(0, |s| s.0);
            let new_start = start + lo;
            let mut next = vec![P::zero(); mass.len() + (hi - lo) as usize];
            for (j, m) in mass.iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                let x = start + j as i64;
                for (s, p) in &self.support {
                    let y = x + s;
                    if !kind.admits(remaining, y) {
                        continue;
                    }
                    let w = m.clone() * p.clone();
                    if band.is_some_and(|b| y.abs() > b) {
                        on_exit(i, y, w);
                        continue;
                    }
                    let idx = (y - new_start) as usize;
                    next[idx] = next[idx].clone() + w;
                }
            }
            // trim exact zeros at both ends
            let first = next.iter().position(|v| !v.is_zero());
            match first {
                None => return (0, Vec::new()),
                Some(f) => {
                    let last = next.iter().rposition(|v| !v.is_zero()).unwrap();
                    next.truncate(last + 1);
                    next.drain(..f);
                    start = new_start + f as i64;
                    mass = next;
                }
            }
        }
        (start, mass)
    }

    fn partition(&self, kind: LawKind, n: usize) -> Result<P> {
        self.check_length(kind, n)?;
        let (_, mass) = self.forward_masses(kind, n, None, |_, _, _| {});
        let z = mass.into_iter().fold(P::zero(), |a, b| a + b);
        if z.is_zero() {
            return Err(Error::UnreachableState { kind, n, i: 0, x: 0 });
        }
        Ok(z)
    }

    /// Exact law of `S_n` under `kind`. Needs no tables beyond the law.
    pub fn endpoint_distribution_exact(&self, kind: LawKind, n: usize) -> Result<Vec<(i64, P)>> {
        self.check_length(kind, n)?;
        let (start, mass) = self.forward_masses(kind, n, None, |_, _, _| {});
        let z = mass.iter().cloned().fold(P::zero(), |a, b| a + b);
        if z.is_zero() {
            return Err(Error::UnreachableState { kind, n, i: 0, x: 0 });
        }
        Ok(mass
            .into_iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(j, m)| (start + j as i64, m / z.clone()))
            .collect())
    }

    pub fn endpoint_distribution(&self, kind: LawKind, n: usize) -> Result<Vec<(i64, f64)>> {
        Ok(self.endpoint_distribution_exact(kind, n)?.into_iter().map(|(x, p)| (x, p.to_f64())).collect())
    }

    /// `E[S_n^2] / (sigma^2 n)` under `kind`.
    pub fn endpoint_second_moment(&self, kind: LawKind, n: usize) -> Result<f64> {
        let dist = self.endpoint_distribution(kind, n)?;
        let m2: f64 = dist.iter().map(|(x, p)| (*x as f64).powi(2) * p).sum();
        Ok(m2 / (self.law.variance() * n as f64))
    }

    /// `P(M_n > m)` for `m = 0, 1, ...` until it vanishes, where
    /// `M_n = max_i |S_i|` under `kind`.
    ///
    /// Each tail is accumulated from the first exit of `[-m, m]`, weighted by
    /// the h-transform weight of the exit state, so small tails carry no
    /// cancellation error.
    pub fn max_tail(&self, kind: LawKind, n: usize) -> Result<Vec<f64>> {
        if n > UI_TAIL_EXACT_CAP {
            return Err(Error::BudgetExceeded(format!(
                "exact law of the maximum is capped at n = {UI_TAIL_EXACT_CAP}, got {n}"
            )));
        }
        self.check_horizon(n)?;
        self.check_length(kind, n)?;
        let slot = kind.slot();
        if let Some(s) = slot {
            if self.tables[s].is_none() {
                return Err(Error::MissingTable(kind.table_name()));
            }
        }
        let z = match slot {
            None => P::one(),
            Some(s) => self.weight_unchecked(s, n, 0).clone(),
        };
        if z.is_zero() {
            return Err(Error::UnreachableState { kind, n, i: 0, x: 0 });
        }
        let z = z.to_f64();
        let lo = self.support.first().map_or(0, |s| s.0);
        let hi = self.support.last().map_or(0, |s| s.0);
        let reach = n as i64 * hi.max(-lo);
        let mut tails = Vec::with_capacity(reach as usize);
        for m in 0..reach {
            let mut exit = 0.0;
            self.forward_masses(kind, n, Some(m), |i, y, w| {
                let h = match slot {
                    None => 1.0,
                    Some(s) => self.weight_unchecked(s, n - i, y).to_f64(),
                };
                exit += w.to_f64() * h;
            });
            let t = exit / z;
            tails.push(t);
            if t == 0.0 {
                break;
            }
        }
        Ok(tails)
    }

    /// Exact `E[(M_n^2/n) 1{M_n^2/n > K}]` (and the second moment) under `kind`.
    pub fn ui_tail(&self, kind: LawKind, n: usize, k: f64) -> Result<ExactTail> {
        let tails = self.max_tail(kind, n)?;
        Ok(ui_tail_from_max_tail(&tails, n, k))
    }

    pub fn exact_law_moments(&self, kind: LawKind, n: usize, functional: Functional) -> Result<FunctionalValue> {
        Ok(match functional {
            Functional::EndpointSecondMoment => FunctionalValue::Scalar(self.endpoint_second_moment(kind, n)?),
            Functional::EndpointDistribution => FunctionalValue::Distribution(self.endpoint_distribution(kind, n)?),
            Functional::UiTail(k) => FunctionalValue::Scalar(self.ui_tail(kind, n, k)?.mean),
        })
    }

    /// `n^{3/2} P(T = n)` on a grid; tends to `sigma / sqrt(2 pi)`.
    pub fn first_return_asymptotic_check(&self, n_grid: &[usize]) -> Result<Vec<(usize, f64)>> {
        n_grid.iter().map(|&n| Ok((n, (n as f64).powf(1.5) * self.t_pmf(n)?.to_f64()))).collect()
    }

    /// Per `n`, the supremum over `x >= 0` of `n P_x(T = n) / P_x(T > n)`.
    pub fn ratio_bound_scan(&self, n_grid: &[usize]) -> Result<Vec<RatioRow>> {
        let lo = self.support.first().map_or(0, |s| s.0);
        let mut rows = Vec::with_capacity(n_grid.len());
        for &n in n_grid {
            if n == 0 {
                return Err(Error::DomainError("ratio scan needs n >= 1".into()));
            }
            let mut best = RatioRow { n, sup: 0.0, argmax: 0 };
            for x in 0..=(n as i64 * -lo) {
                let hit = self.first_hit(n, x)?.to_f64();
                let survive = self.r(n, x)?.to_f64();
                if hit == 0.0 || survive == 0.0 {
                    continue;
                }
                let ratio = n as f64 * hit / survive;
                if ratio > best.sup {
                    best = RatioRow { n, sup: ratio, argmax: x };
                }
            }
            rows.push(best);
        }
        Ok(rows)
    }

    /// Exact `P(last zero of S_0..S_n is <= cutoff)` for the free walk.
    pub fn last_zero_cdf(&self, n: usize, cutoff: usize) -> Result<f64> {
        self.check_horizon(n)?;
        let mut total = 0.0;
        for k in 0..=cutoff.min(n) {
            let at_zero = self.f(k, 0)?.to_f64();
            if at_zero == 0.0 {
                continue;
            }
            total += at_zero * self.r(n - k, 0)?.to_f64();
        }
        Ok(total)
    }

    /// Total conditioning mass `P(conditioning event)` of `kind` at length `n`.
    pub fn conditioning_probability(&self, kind: LawKind, n: usize) -> Result<P> {
        self.partition(kind, n)
    }
}

/// Summation by parts: for `g(m) = (m^2/n)^p`,
/// `E[g(M) 1{M >= a}] = g(a) P(M > a-1) + sum_{m > a} (g(m) - g(m-1)) P(M > m-1)`.
pub fn ui_tail_from_max_tail(tails: &[f64], n: usize, k: f64) -> ExactTail {
    let nf = n as f64;
    let tail_at = |m: i64| if m < 0 { 1.0 } else { tails.get(m as usize).copied().unwrap_or(0.0) };
    // smallest a with a^2 > K n
    let mut a = (k * nf).max(0.0).sqrt().floor() as i64;
    while (a * a) as f64 <= k * nf {
        a += 1;
    }
    let mut mean = 0.0;
    let mut second = 0.0;
    let y = |m: i64| (m * m) as f64 / nf;
    mean += y(a) * tail_at(a - 1);
    second += y(a).powi(2) * tail_at(a - 1);
    let mut m = a + 1;
    while ((m - 1) as usize) < tails.len() {
        let t = tail_at(m - 1);
        if t == 0.0 {
            break;
        }
        mean += (y(m) - y(m - 1)) * t;
        second += (y(m).powi(2) - y(m - 1).powi(2)) * t;
        m += 1;
    }
    ExactTail { k, mean, second_moment: second }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_dp::{brute_force_oracle, TableSelection};
    use crate::StepLaw;
    use num_rational::BigRational;

    #[test]
    fn free_second_moment_is_one() {
        let t = DpTables::build_with(&StepLaw::lazy(), 200, TableSelection::none()).unwrap();
        for n in [1, 7, 200] {
            let m = t.endpoint_second_moment(LawKind::Free, n).unwrap();
            assert!((m - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn meander_endpoint_law_small_n() {
        let t = DpTables::build_exact(&StepLaw::lazy(), 2).unwrap();
        let d = t.endpoint_distribution_exact(LawKind::Meander, 2).unwrap();
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(d, vec![(1, third.clone() * BigRational::from_integer(2.into())), (2, third)]);
    }

    #[test]
    fn max_law_matches_enumeration() {
        let law = StepLaw::lazy();
        let n = 7;
        let t = DpTables::build(&law, n).unwrap();
        for kind in LawKind::ALL {
            let tails = t.max_tail(kind, n).unwrap();
            let oracle = brute_force_oracle(&law, n, kind).unwrap();
            for (m, tail) in tails.iter().enumerate() {
                let exact: f64 = oracle
                    .paths()
                    .iter()
                    .filter(|(p, _)| p.iter().map(|v| v.abs()).max().unwrap() > m as i64)
                    .map(|(_, w)| crate::weight::Weight::to_f64(w))
                    .sum();
                assert!((tail - exact).abs() < 1e-14, "{kind} m={m}: {tail} vs {exact}");
            }
        }
    }

    #[test]
    fn ui_tail_by_parts_matches_direct_sum() {
        let law = StepLaw::lazy();
        let n = 9;
        let t = DpTables::build(&law, n).unwrap();
        for kind in LawKind::ALL {
            let oracle = brute_force_oracle(&law, n, kind).unwrap();
            for k in [0.0, 0.5, 1.0, 2.0, 5.0] {
                let exact = t.ui_tail(kind, n, k).unwrap();
                let (mut mean, mut second) = (0.0, 0.0);
                for (p, w) in oracle.paths() {
                    let m = p.iter().map(|v| v.abs()).max().unwrap() as f64;
                    let y = m * m / n as f64;
                    if y > k {
                        mean += y * crate::weight::Weight::to_f64(w);
                        second += y * y * crate::weight::Weight::to_f64(w);
                    }
                }
                assert!((exact.mean - mean).abs() < 1e-12, "{kind} K={k}");
                assert!((exact.second_moment - second).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ui_tail_cap() {
        let t = DpTables::build_with(&StepLaw::lazy(), 600, TableSelection::none()).unwrap();
        assert!(matches!(t.ui_tail(LawKind::Free, 513, 1.0), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn first_return_at_one() {
        let t = DpTables::build_with(&StepLaw::lazy(), 4, TableSelection::none()).unwrap();
        assert_eq!(t.first_return_asymptotic_check(&[1]).unwrap(), vec![(1, 0.5)]);
    }

    #[test]
    fn ratio_scan_is_finite() {
        let t = DpTables::build_with(
            &StepLaw::lazy(),
            64,
            TableSelection::of(&[LawKind::AvoidZero, LawKind::AvoidZeroBridge]),
        )
        .unwrap();
        let rows = t.ratio_bound_scan(&[8, 16, 32, 64]).unwrap();
        for row in rows {
            assert!(row.sup.is_finite() && row.sup > 0.0);
        }
        // from beyond reach the walk cannot hit zero at time n
        assert_eq!(t.first_hit(8, 9).unwrap(), 0.0);
    }

    #[test]
    fn last_zero_cdf_is_half_for_lazy_walk() {
        // lazy walk: P(T > m) = P(S_m = 0), so the last-zero law is symmetric
        let t = DpTables::build_with(&StepLaw::lazy(), 64, TableSelection::of(&[LawKind::AvoidZero, LawKind::Bridge]))
            .unwrap();
        let p = t.last_zero_cdf(64, 32).unwrap();
        let u32 = t.f(32, 0).unwrap();
        assert!((p - 0.5 - u32 * u32 / 2.0).abs() < 1e-12);
    }
}
