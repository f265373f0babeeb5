use condwalk_demo::{meander_endpoint, pinning_sample, rescaled_paths, MAX_N};

#[test]
fn paths_have_the_requested_shape() {
    for step in ["lazy", "simple", "gaussian"] {
        let v = rescaled_paths("excursion", step, 64, 3, 5).unwrap();
        assert_eq!(v.len(), 3 * 65);
        for p in v.chunks(65) {
            assert_eq!(p[0], 0.0);
            assert_eq!(p[64], 0.0);
            assert!(p[1..64].iter().all(|x| *x > 0.0), "{step}");
        }
    }
    assert_eq!(
        rescaled_paths("meander", "lazy", 32, 2, 9).unwrap(),
        rescaled_paths("meander", "lazy", 32, 2, 9).unwrap()
    );
}

#[test]
fn bad_inputs_are_errors() {
    assert!(rescaled_paths("snake", "lazy", 8, 1, 0).is_err());
    assert!(rescaled_paths("free", "cauchy", 8, 1, 0).is_err());
    assert!(rescaled_paths("free", "lazy", MAX_N + 1, 1, 0).is_err());
    assert!(pinning_sample(0.0, "pinned", 8, 0).is_err());
}

#[test]
fn meander_endpoint_is_close_to_rayleigh() {
    let v = meander_endpoint(1024).unwrap();
    let ks = *v.last().unwrap();
    let mass: f64 = v[..v.len() - 1].chunks(2).map(|a| a[1]).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    assert!(ks < 0.03, "ks = {ks}");
}

#[test]
fn pinning_paths_respect_their_variant() {
    let v = pinning_sample(1.0, "wetting_constrained", 200, 4).unwrap();
    let path = &v[..201];
    assert!(path.iter().all(|x| *x >= 0.0));
    assert_eq!(path[200], 0.0);
    let zero_field = pinning_sample(0.0, "pinning", 50, 4).unwrap();
    assert!(zero_field[51].abs() < 1e-12, "log Z = {}", zero_field[51]);
}
