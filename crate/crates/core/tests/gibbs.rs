//! Exact checks of the regeneration construction of pinning and wetting
//! models against the Boltzmann reweighting of the free walk.

use num_rational::BigRational;
use num_traits::{One, Zero};

use condwalk::lattice_dp::brute_force_oracle;
use condwalk::pinning::{renewal_partition, Variant};
use condwalk::{DpTables, LawKind, StepLaw};

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Probability of `path` under the regeneration construction: zero-set law
/// from the renewal weights, then independent excursions.
fn assembled_probability(
    tables: &DpTables<BigRational>,
    variant: Variant,
    w: &[BigRational],
    z: &BigRational,
    path: &[i64],
) -> BigRational {
    let n = path.len() - 1;
    let zeros: Vec<usize> = (0..=n).filter(|&i| path[i] == 0).collect();
    let gap_weight = |t: usize| {
        if variant.is_wetting() {
            tables.h(t, 0).unwrap()
        } else {
            tables.t_pmf(t).unwrap()
        }
    };
    let mut p = BigRational::one();
    for pair in zeros.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        p *= &w[b] * gap_weight(b - a);
        p *= tables.path_probability(variant.bulk_kind(), &path[a..=b]).unwrap();
    }
    let last = *zeros.last().unwrap();
    if last < n {
        if variant.is_constrained() {
            return BigRational::zero();
        }
        let m = n - last;
        let fin = if variant.is_wetting() { tables.q(m, 0).unwrap() } else { tables.t_survival(m).unwrap() };
        p *= fin;
        p *= tables.path_probability(variant.final_kind(), &path[last..]).unwrap();
    }
    p / z
}

#[test]
fn gibbs_consistency_is_exact() {
    let law = StepLaw::lazy();
    let n_max = 9;
    let tables = DpTables::build_exact(&law, n_max).unwrap();
    let k_pin = tables.t_pmf_slice().to_vec();
    let k_wet: Vec<BigRational> =
        (0..=n_max).map(|t| if t == 0 { BigRational::zero() } else { tables.h(t, 0).unwrap() }).collect();
    let fin_pin: Vec<BigRational> = (0..=n_max).map(|m| tables.t_survival(m).unwrap()).collect();
    let fin_wet: Vec<BigRational> = (0..=n_max).map(|m| tables.q(m, 0).unwrap()).collect();

    for n in [1, 2, 5, n_max] {
        // site weights exp(xi_j), chosen rational
        let w: Vec<BigRational> = (0..=n).map(|j| r(1 + (j as i64 * 7) % 5, 2 + (j as i64 % 3))).collect();
        let free = brute_force_oracle(&law, n, LawKind::Free).unwrap();
        for variant in Variant::ALL {
            let (k, fin) = if variant.is_wetting() { (&k_wet, &fin_wet) } else { (&k_pin, &fin_pin) };
            let z = renewal_partition(&k[..=n], &fin[..=n], &w, variant.is_constrained());

            let mut boltzmann_total = BigRational::zero();
            let mut assembled_total = BigRational::zero();
            for (path, p) in free.paths() {
                let admissible = (!variant.is_wetting() || path.iter().all(|x| *x >= 0))
                    && (!variant.is_constrained() || path[n] == 0);
                let a = assembled_probability(&tables, variant, &w, &z, path);
                if !admissible {
                    assert!(a.is_zero(), "{variant}: inadmissible path {path:?} has mass");
                    continue;
                }
                let mut b = p.clone();
                for j in 1..=n {
                    if path[j] == 0 {
                        b *= &w[j];
                    }
                }
                b /= &z;
                assert_eq!(a, b, "{variant}, n = {n}, path {path:?}");
                boltzmann_total += b;
                assembled_total += a;
            }
            assert!(boltzmann_total.is_one(), "{variant}, n = {n}");
            assert!(assembled_total.is_one());
        }
    }
}

#[test]
fn zero_field_zero_set_is_the_free_zero_set() {
    use condwalk::pinning::{Environment, PinningModel};
    use std::sync::Arc;
    let law = StepLaw::lazy();
    let n = 8;
    let tables = Arc::new(DpTables::build(&law, n).unwrap());
    let model =
        PinningModel::new(&law, Variant::Pinning, &Environment::constant(0.0, n).unwrap(), n, Some(tables)).unwrap();
    let marg = model.zero_marginals();
    let free = brute_force_oracle(&law, n, LawKind::Free).unwrap();
    for (j, row) in free.marginals().iter().enumerate() {
        let p0 = row.iter().find(|(x, _)| *x == 0).map(|(_, p)| {
            use num_traits::ToPrimitive;
            p.to_f64().unwrap()
        });
        assert!((marg[j] - p0.unwrap_or(0.0)).abs() < 1e-14, "site {j}");
    }
}
