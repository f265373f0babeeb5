use std::sync::Arc;

use proptest::prelude::*;

use condwalk::diagnostics::{modulus, restricted_modulus, MeanAcc, UiCurve};
use condwalk::pinning::{brute_force_partition, Environment, PinningModel, Variant};
use condwalk::regeneration::counterexample_probability;
use condwalk::rng::stream;
use condwalk::samplers::Path;
use condwalk::steplaw::ProbLiteral;
use condwalk::{DpTables, LawKind, StepLaw, StepSpec};

/// Brute-force modulus on the grid of mesh `1/(8N)`; exact when `delta` lies
/// on that grid, since every candidate extremum does.
fn dense_modulus(path: &Path, steps: usize) -> f64 {
    let r = path.rescale();
    let n = path.len();
    let m = 8 * n;
    let vals: Vec<f64> = (0..=m).map(|k| r.eval(k as f64 / m as f64)).collect();
    let mut best = 0.0f64;
    for i in 0..=m {
        for j in i..=(i + steps).min(m) {
            best = best.max((vals[j] - vals[i]).abs());
        }
    }
    best
}

fn lattice_law() -> impl Strategy<Value = StepLaw> {
    // offsets -2..=2 with integer weights whose mean vanishes by construction
    (1u32..5, 1u32..5, 0u32..4, 0u32..4).prop_map(|(a, b, c, d)| {
        let support = vec![(-2, a + d), (-1, b), (0, c), (1, b + 2 * a), (2, d)];
        let total: u32 = support.iter().map(|s| s.1).sum();
        let spec = StepSpec::Lattice {
            support: support
                .into_iter()
                .filter(|s| s.1 > 0)
                .map(|(x, w)| (x, ProbLiteral::Exact(format!("{w}/{total}"))))
                .collect(),
        };
        StepLaw::validate(&spec).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn modulus_matches_dense_grid(
        steps in proptest::collection::vec(-3i64..=3, 1..=64),
        frac in 0.0f64..1.0,
    ) {
        let mut values = vec![0i64];
        for s in &steps {
            values.push(values.last().unwrap() + s);
        }
        let path = Path::from_lattice(&values, None);
        let n = path.len();
        let grid_steps = ((frac * (8 * n) as f64).round() as usize).max(1);
        let delta = grid_steps as f64 / (8 * n) as f64;
        let exact = modulus(&path.rescale(), delta);
        let dense = dense_modulus(&path, grid_steps);
        prop_assert!((exact - dense).abs() <= 1e-12, "{exact} vs {dense}");
    }

    #[test]
    fn restricted_modulus_bounds_full(
        steps in proptest::collection::vec(-2i64..=2, 2..=40),
        cut in proptest::collection::vec(any::<bool>(), 40),
        delta in 0.01f64..1.0,
    ) {
        // force zeros at chosen epochs by resetting the walk there
        let mut values = vec![0i64];
        let mut epochs = vec![0usize];
        for (i, s) in steps.iter().enumerate() {
            let next = if cut[i] { epochs.push(i + 1); 0 } else { values.last().unwrap() + s };
            values.push(next);
        }
        let path = Path::from_lattice(&values, None);
        let r = path.rescale();
        let full = modulus(&r, delta);
        let restricted = restricted_modulus(&r, &epochs, delta);
        prop_assert!(restricted <= full + 1e-12);
        prop_assert!(full <= 2.0 * restricted + 1e-12);
    }

    #[test]
    fn modulus_is_monotone_in_delta(
        steps in proptest::collection::vec(-3i64..=3, 1..=64),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let mut values = vec![0i64];
        for s in &steps {
            values.push(values.last().unwrap() + s);
        }
        let r = Path::from_lattice(&values, None).rescale();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(modulus(&r, lo) <= modulus(&r, hi) + 1e-12);
    }

    #[test]
    fn kernels_are_stochastic(law in lattice_law(), n in 1usize..12, seed in any::<u64>()) {
        let tables = DpTables::build(&law, 12).unwrap();
        for kind in LawKind::ALL {
            if tables.check_length(kind, n).is_err() || tables.conditioning_weight(kind, n, 0).map_or(true, |w| w == 0.0) {
                continue;
            }
            // walk a sampled path and check every kernel on the way
            let path = condwalk::samplers::sample_path(&law, kind, n, &mut stream(seed, 0), Some(&tables)).unwrap();
            path.validate().unwrap();
            let xs = path.lattice_values().unwrap();
            for i in 0..n {
                let k = tables.kernel(kind, n, i, xs[i]).unwrap();
                let total: f64 = k.iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() < 1e-9, "{kind} n={n} i={i}: {total}");
            }
        }
    }

    #[test]
    fn partition_is_monotone_in_each_site(
        xi in proptest::collection::vec(-3.0f64..3.0, 1..=10),
        site in 0usize..10,
        bump in 0.01f64..2.0,
    ) {
        let law = StepLaw::lazy();
        let n = xi.len();
        let site = site % n;
        let tables = Arc::new(DpTables::build(&law, n).unwrap());
        let mut raised = xi.clone();
        raised[site] += bump;
        for variant in Variant::ALL {
            let z = |x: &[f64]| {
                PinningModel::new(&law, variant, &Environment::new(x.to_vec()).unwrap(), n, Some(tables.clone()))
                    .unwrap()
                    .partition()
            };
            prop_assert!(z(&raised) >= z(&xi) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn partition_matches_enumeration(xi in proptest::collection::vec(-4.0f64..4.0, 1..=9)) {
        let law = StepLaw::lazy();
        let n = xi.len();
        let tables = Arc::new(DpTables::build(&law, n).unwrap());
        let env = Environment::new(xi).unwrap();
        for variant in Variant::ALL {
            let z = PinningModel::new(&law, variant, &env, n, Some(tables.clone())).unwrap().partition();
            let b = brute_force_partition(&law, variant, &env).unwrap();
            prop_assert!((z - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn merge_is_commutative_with_identity(
        xs in proptest::collection::vec(0.0f64..10.0, 0..50),
        ys in proptest::collection::vec(0.0f64..10.0, 0..50),
    ) {
        let fill = |v: &[f64]| {
            let mut c = UiCurve::empty("free", &[4], &[0.0, 1.0]);
            for &x in v {
                c.cells[0][0].push(x);
                c.cells[0][1].push(if x > 1.0 { x } else { 0.0 });
            }
            c
        };
        let (a, b) = (fill(&xs), fill(&ys));
        prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
        prop_assert_eq!(a.merge(&UiCurve::empty("free", &[4], &[0.0, 1.0])).unwrap(), a.clone());
        let mut all = MeanAcc::default();
        for &x in xs.iter().chain(&ys) {
            all.push(x);
        }
        let m = a.merge(&b).unwrap();
        prop_assert_eq!(m.cells[0][0].count, all.count);
        prop_assert!((m.cells[0][0].mean() - all.mean()).abs() < 1e-12);
    }

    #[test]
    fn counterexample_is_a_probability(eta in 0.01f64..10.0, a in 1u64..200) {
        match counterexample_probability(eta, a) {
            Ok(p) => prop_assert!((0.0..=1.0).contains(&p)),
            Err(_) => prop_assert!(((a * a) as f64) < eta),
        }
    }

    #[test]
    fn rescaling_interpolates(values in proptest::collection::vec(-50i64..50, 2..40), t in 0.0f64..=1.0) {
        let mut v = values;
        v[0] = 0;
        let p = Path::from_lattice(&v, None);
        let r = p.rescale();
        let n = p.len() as f64;
        for (i, x) in v.iter().enumerate() {
            prop_assert!((r.eval(i as f64 / n) - *x as f64 / n.sqrt()).abs() < 1e-12);
        }
        let y = r.eval(t);
        prop_assert!(y.abs() <= r.sup_norm() + 1e-12);
    }
}
