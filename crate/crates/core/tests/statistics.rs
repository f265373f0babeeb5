//! Monte Carlo checks of samplers, regeneration and diagnostics against exact
//! values. Every test uses a fixed seed.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::ToPrimitive;

use condwalk::diagnostics::{endpoint_gof, estimate_tail, estimate_ui, Reference};
use condwalk::lattice_dp::brute_force_oracle;
use condwalk::pinning::{Environment, PinningModel, Variant};
use condwalk::regeneration::{assemble, EndpointPair, Grid, Singleton, TentFamily, TentSource, WalkFamily};
use condwalk::rng::stream;
use condwalk::samplers::{sample_path, WalkSource};
use condwalk::{DpTables, LawKind, StepLaw, TableSelection};

#[test]
fn free_ui_tail_is_small_and_matches_exact() {
    let law = StepLaw::lazy();
    let tables = DpTables::build_with(&law, 256, TableSelection::none()).unwrap();
    let source = WalkSource::new(&law, LawKind::Free, None);
    let curve = estimate_ui(&source, &[256], &[0.0, 4.0, 25.0], 20_000, 1, Some((&tables, LawKind::Free))).unwrap();
    assert!(curve.get(0, 2).estimate < 0.01);
    assert!(curve.exact[0][2].unwrap().mean < 0.01);
    for j in 0..3 {
        assert!(curve.exact_z_score(0, j).unwrap().abs() <= 3.0);
    }
}

#[test]
fn excursion_tail_scaling_decreases() {
    let law = StepLaw::lazy();
    let tables = DpTables::build_with(&law, 256, TableSelection::of(&[LawKind::Excursion])).unwrap();
    let source = WalkSource::new(&law, LawKind::Excursion, Some(&tables));
    // sigma^2 = 1/2, so a = 2 and beyond are already deep in the tail
    let curve = estimate_tail(&source, &[64, 256], &[0.5, 1.0, 2.0, 4.0, 8.0], 10_000, 2).unwrap();
    let sup = curve.sup_over_grid();
    assert!(sup[0] > sup[1] && sup[1] > sup[2], "{sup:?}");
    assert!(sup[2] >= sup[3] && sup[3] >= sup[4], "{sup:?}");
    assert!(curve.zero_hit_bound(0, 4).is_some());
}

#[test]
fn tent_tail_sits_at_eta() {
    let source = TentSource(TentFamily::new(1.0).unwrap());
    let curve = estimate_tail(&source, &[63, 64], &[2.0, 4.0, 8.0], 40_000, 3).unwrap();
    for i in 0..2 {
        for j in 0..3 {
            assert!(curve.get(i, j).within(1.0, 3.0), "{:?}", curve.get(i, j));
        }
    }
}

#[test]
fn endpoint_goodness_of_fit() {
    let law = StepLaw::lazy();
    let n = 4096;
    let free = WalkSource::new(&law, LawKind::Free, None);
    let normal = endpoint_gof(&free, n, 100_000, Reference::Normal, 4).unwrap();
    assert!(normal.ks < 0.02, "{normal:?}");
    let wrong = endpoint_gof(&free, n, 10_000, Reference::Rayleigh, 4).unwrap();
    assert!(wrong.ks > 0.1, "{wrong:?}");

    let tables = DpTables::build_with(&law, n, TableSelection::of(&[LawKind::Meander])).unwrap();
    let meander = WalkSource::new(&law, LawKind::Meander, Some(&tables));
    let rayleigh = endpoint_gof(&meander, n, 100_000, Reference::Rayleigh, 5).unwrap();
    assert!(rayleigh.ks < 0.02, "{rayleigh:?}");
}

#[test]
fn gaussian_meander_endpoint_is_rayleigh() {
    let law = StepLaw::gaussian(1.5).unwrap();
    let meander = WalkSource::new(&law, LawKind::Meander, None);
    let report = endpoint_gof(&meander, 256, 10_000, Reference::Rayleigh, 6).unwrap();
    assert!(report.ks < 0.03, "{report:?}");
    let mut rng = stream(1, 1);
    for _ in 0..100 {
        let e = sample_path(&law, LawKind::Excursion, 64, &mut rng, None).unwrap();
        assert_eq!(e.endpoint(), 0.0);
        assert!(e.values()[1..64].iter().all(|v| *v > 0.0));
    }
}

#[test]
fn grid_block_maxima_are_uncorrelated() {
    let law = StepLaw::lazy();
    let tables = DpTables::build(&law, 16).unwrap();
    let family = WalkFamily::new(&law, LawKind::Excursion, LawKind::Meander, Some(&tables)).unwrap();
    let scheme = Grid::new(16).unwrap();
    let samples = 100_000;
    let mut rng = stream(7, 0);
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let p = assemble(&scheme, &family, 64, &mut rng).unwrap();
        let v = p.values();
        let x = v[..=16].iter().fold(0.0f64, |m, a| m.max(*a));
        let y = v[16..=32].iter().fold(0.0f64, |m, a| m.max(*a));
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let n = samples as f64;
    let cov = sxy / n - sx * sy / (n * n);
    let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
    assert!(corr.abs() < 3.0 / n.sqrt(), "correlation {corr}");
}

fn frequencies(paths: impl Iterator<Item = Vec<i64>>) -> (HashMap<Vec<i64>, usize>, usize) {
    let mut counts = HashMap::new();
    let mut total = 0;
    for p in paths {
        *counts.entry(p).or_insert(0) += 1;
        total += 1;
    }
    (counts, total)
}

#[test]
fn singleton_and_pair_reproduce_the_excursion_laws() {
    let law = StepLaw::lazy();
    let n = 5;
    let tables = DpTables::build(&law, n).unwrap();
    let family = WalkFamily::new(&law, LawKind::Excursion, LawKind::Meander, Some(&tables)).unwrap();
    let mut rng = stream(8, 0);
    for (scheme, kind) in [
        (&Singleton as &dyn condwalk::regeneration::RegenerationScheme, LawKind::Meander),
        (&EndpointPair, LawKind::Excursion),
    ] {
        let (counts, total) = frequencies(
            (0..100_000).map(|_| assemble(scheme, &family, n, &mut rng).unwrap().lattice_values().unwrap()),
        );
        let oracle = brute_force_oracle(&law, n, kind).unwrap();
        assert_eq!(counts.len(), oracle.len());
        for (path, w) in oracle.paths() {
            let p = w.to_f64().unwrap();
            let f = counts[path] as f64 / total as f64;
            assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / total as f64).sqrt(), "{kind} {path:?}");
        }
    }
}

#[test]
fn pinning_zero_sets() {
    let law = StepLaw::lazy();
    let n = 10;
    let tables = Arc::new(DpTables::build(&law, n).unwrap());

    let strong =
        PinningModel::new(&law, Variant::Pinning, &Environment::constant(50.0, n).unwrap(), n, Some(tables.clone()))
            .unwrap();
    let mut rng = stream(9, 0);
    let full: Vec<usize> = (0..=n).collect();
    let hits = (0..10_000).filter(|_| strong.sample_zero_set(&mut rng) == full).count();
    assert!(hits as f64 / 10_000.0 >= 0.999);

    let env = Environment::new(vec![0.5, -1.0, 2.0, 0.0, -0.3, 1.2, 0.7, -2.0, 0.1, 1.0]).unwrap();
    for variant in [Variant::Pinning, Variant::WettingConstrained] {
        let model = PinningModel::new(&law, variant, &env, n, Some(tables.clone())).unwrap();
        let exact = model.zero_marginals();
        let samples = 1_000_000;
        let mut counts = vec![0usize; n + 1];
        let mut rng = stream(10, variant as u64);
        for _ in 0..samples {
            for z in model.sample_zero_set(&mut rng) {
                counts[z] += 1;
            }
        }
        for j in 1..=n {
            let p = exact[j];
            let f = counts[j] as f64 / samples as f64;
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!((f - p).abs() <= 3.0 * se + 1e-12, "{variant} site {j}: {f} vs {p}");
        }
    }
}

#[test]
fn gaussian_pinning_paths() {
    let law = StepLaw::gaussian(1.0).unwrap();
    let env = Environment::constant(2.0, 200).unwrap();
    let mut rng = stream(11, 0);
    for variant in Variant::ALL {
        let m = PinningModel::new(&law, variant, &env, 200, None).unwrap();
        for _ in 0..20 {
            let p = m.sample_path(&mut rng).unwrap();
            let zeros: Vec<usize> = (0..=200).filter(|&i| p.values()[i] == 0.0).collect();
            assert_eq!(p.epochs().unwrap(), &zeros[..]);
            if variant.is_wetting() {
                assert!(p.values().iter().all(|v| *v >= 0.0));
            }
            if variant.is_constrained() {
                assert_eq!(p.endpoint(), 0.0);
            }
        }
    }
}
