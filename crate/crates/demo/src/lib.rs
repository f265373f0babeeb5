//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exported: drawing conditioned walks, the exact
//! meander endpoint law against Rayleigh, and pinning/wetting paths. Each
//! has a plain Rust counterpart so it can be tested natively.

use std::str::FromStr;
use std::sync::Arc;

use wasm_bindgen::prelude::*;

use condwalk::diagnostics::{ks_distribution_vs_reference, Reference};
use condwalk::pinning::{Environment, PinningModel, Variant};
use condwalk::rng::stream;
use condwalk::samplers::sample_path;
use condwalk::{DpTables, Error, LawKind, Result, StepLaw, TableSelection};

/// Largest length the demo accepts; DP tables grow as `n^2`.
pub const MAX_N: usize = 2048;

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::DomainError(format!("length must be in 1..={MAX_N}, got {n}")));
    }
    Ok(())
}

fn step_law(step: &str) -> Result<StepLaw> {
    match step {
        "lazy" => Ok(StepLaw::lazy()),
        "simple" => Ok(StepLaw::simple()),
        "gaussian" => StepLaw::gaussian(1.0),
        other => Err(Error::DomainError(format!("unknown step law `{other}`"))),
    }
}

/// `count` paths of `kind`, each rescaled to `s_i / (sigma sqrt(n))` and
/// concatenated: `count * (n + 1)` values.
pub fn rescaled_paths(kind: &str, step: &str, n: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    check_n(n)?;
    let kind = LawKind::from_str(kind)?;
    let law = step_law(step)?;
    let tables =
        if law.is_lattice() { Some(DpTables::build_with(&law, n, TableSelection::of(&[kind]))?) } else { None };
    let scale = (law.variance() * n as f64).sqrt();
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(count * (n + 1));
    for _ in 0..count {
        let p = sample_path(&law, kind, n, &mut rng, tables.as_ref())?;
        out.extend(p.values().iter().map(|v| v / scale));
    }
    Ok(out)
}

/// Exact law of `S_n / (sigma sqrt(n))` for the lazy-walk meander as
/// `[x0, p0, x1, p1, ...]`, followed by its KS distance to Rayleigh.
pub fn meander_endpoint(n: usize) -> Result<Vec<f64>> {
    check_n(n)?;
    let law = StepLaw::lazy();
    let tables = DpTables::build_with(&law, n, TableSelection::of(&[LawKind::Meander]))?;
    let scale = (law.variance() * n as f64).sqrt();
    let atoms: Vec<(f64, f64)> =
        tables.endpoint_distribution(LawKind::Meander, n)?.into_iter().map(|(x, p)| (x as f64 / scale, p)).collect();
    let ks = ks_distribution_vs_reference(&atoms, |x| Reference::Rayleigh.cdf(x));
    let mut out: Vec<f64> = atoms.iter().flat_map(|(x, p)| [*x, *p]).collect();
    out.push(ks);
    Ok(out)
}

/// One lazy-walk path of a pinning or wetting model with constant reward
/// `beta`, rescaled like [`rescaled_paths`], followed by `log Z_N`.
pub fn pinning_sample(beta: f64, variant: &str, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_n(n)?;
    let variant = Variant::from_str(variant)?;
    let law = StepLaw::lazy();
    let tables = Arc::new(DpTables::build_with(&law, n, variant.required_tables())?);
    let model = PinningModel::new(&law, variant, &Environment::constant(beta, n)?, n, Some(tables))?;
    let path = model.sample_path(&mut stream(seed, 0))?;
    let scale = (law.variance() * n as f64).sqrt();
    let mut out: Vec<f64> = path.values().iter().map(|v| v / scale).collect();
    out.push(model.log_partition());
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn sample_paths(
    kind: &str,
    step: &str,
    n: usize,
    count: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    rescaled_paths(kind, step, n, count, u64::from(seed)).map_err(js)
}

#[wasm_bindgen]
pub fn meander_endpoint_law(n: usize) -> std::result::Result<Vec<f64>, JsError> {
    meander_endpoint(n).map_err(js)
}

#[wasm_bindgen]
pub fn pinning_path(beta: f64, variant: &str, n: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    pinning_sample(beta, variant, n, u64::from(seed)).map_err(js)
}
