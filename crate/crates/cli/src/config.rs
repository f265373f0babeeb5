//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 20240611
//! out = "results/ui"        # optional, default "out"
//! step = { kind = "lazy" }  # optional, default lazy walk
//!
//! [experiment]
//! name = "ui_curve"
//! source = { type = "walk", kind = "meander" }
//! n = [256, 1024, 4096]
//! k = [1, 2, 5, 10, 25]
//! samples = 100000
//! ```
//!
//! Unknown keys are rejected at every level.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use condwalk::diagnostics::{Reference, MIN_SAMPLES};
use condwalk::pinning::{Environment, IidEnvironment, Variant};
use condwalk::regeneration::{Grid, Renewal, TentFamily};
use condwalk::{LawKind, StepLaw, StepSpec};

pub const FORMAT: &str = "toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Directory for cached DP tables.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "lazy")]
    pub step: StepSpec,
    pub experiment: Experiment,
}

fn lazy() -> StepSpec {
    StepSpec::Lazy
}

fn yes() -> bool {
    true
}

fn oracle_n_max() -> usize {
    8
}

fn pinning_n_max() -> usize {
    12
}

fn environments() -> usize {
    100
}

fn free() -> LawKind {
    LawKind::Free
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// `E[(M_n^2/n) 1{M_n^2/n > K}]` on an `(n, K)` grid.
    UiCurve {
        source: SourceSpec,
        n: Vec<usize>,
        k: Vec<f64>,
        samples: usize,
        /// Attach exact DP values where affordable.
        #[serde(default = "yes")]
        exact: bool,
    },
    /// `a^2 P(M_t / sqrt(t) > a)` on a `(t, a)` grid.
    TailCurve { source: SourceSpec, t: Vec<usize>, a: Vec<f64>, samples: usize },
    /// `P(Gamma(delta) > eta)` on an `(n, delta)` grid.
    Modulus {
        source: SourceSpec,
        n: Vec<usize>,
        delta: Vec<f64>,
        eta: f64,
        samples: usize,
        #[serde(default)]
        restricted: bool,
    },
    /// KS distance of the rescaled endpoint to a limit law.
    EndpointGof { source: SourceSpec, n: Vec<usize>, samples: usize, reference: Reference },
    /// Grid regeneration with tent excursions: exact exit probability vs Monte Carlo.
    Counterexample { eta: f64, a: Vec<u64>, block: usize, samples: usize },
    /// `log Z_N` of pinning and wetting models.
    PinningPartition {
        variants: Vec<Variant>,
        environment: EnvSpec,
        n: Vec<usize>,
        /// Lengths up to this are also enumerated path by path.
        #[serde(default = "pinning_n_max")]
        brute_force_max: usize,
    },
    /// `max_x n P_x(T = n) / P_x(T > n)` per `n`.
    RatioScan { n: Vec<usize> },
    /// `n^{3/2} P(T = n)` per `n`.
    KestenScan { n: Vec<usize> },
    /// Exact DP vs enumeration for every law kind, and renewal vs enumeration
    /// for pinning partition functions.
    OracleSuite {
        #[serde(default = "oracle_n_max")]
        n_max: usize,
        #[serde(default = "pinning_n_max")]
        pinning_n_max: usize,
        #[serde(default = "environments")]
        environments: usize,
    },
    /// UI tails of a heavy-tailed finite-variance law next to the baseline `step`.
    SlowUiDemo {
        heavy: StepSpec,
        #[serde(default = "free")]
        kind: LawKind,
        n: Vec<usize>,
        k: Vec<f64>,
        samples: usize,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::UiCurve { .. } => "ui_curve",
            Experiment::TailCurve { .. } => "tail_curve",
            Experiment::Modulus { .. } => "modulus",
            Experiment::EndpointGof { .. } => "endpoint_gof",
            Experiment::Counterexample { .. } => "counterexample",
            Experiment::PinningPartition { .. } => "pinning_partition",
            Experiment::RatioScan { .. } => "ratio_scan",
            Experiment::KestenScan { .. } => "kesten_scan",
            Experiment::OracleSuite { .. } => "oracle_suite",
            Experiment::SlowUiDemo { .. } => "slow_ui_demo",
        }
    }

    fn source(&self) -> Option<&SourceSpec> {
        match self {
            Experiment::UiCurve { source, .. }
            | Experiment::TailCurve { source, .. }
            | Experiment::Modulus { source, .. }
            | Experiment::EndpointGof { source, .. } => Some(source),
            _ => None,
        }
    }

    fn environment(&self) -> Option<&EnvSpec> {
        match self {
            Experiment::PinningPartition { environment, .. } => Some(environment),
            _ => match self.source() {
                Some(SourceSpec::Pinning { environment, .. }) => Some(environment),
                _ => None,
            },
        }
    }

    /// Largest path length the experiment touches.
    pub fn horizon(&self) -> usize {
        let max = |v: &[usize]| v.iter().copied().max().unwrap_or(0);
        match self {
            Experiment::UiCurve { n, .. }
            | Experiment::Modulus { n, .. }
            | Experiment::EndpointGof { n, .. }
            | Experiment::PinningPartition { n, .. }
            | Experiment::RatioScan { n }
            | Experiment::KestenScan { n }
            | Experiment::SlowUiDemo { n, .. } => max(n),
            Experiment::TailCurve { t, .. } => max(t),
            Experiment::Counterexample { a, block, .. } => {
                a.iter().map(|a| (a * a) as usize * block).max().unwrap_or(0)
            }
            Experiment::OracleSuite { n_max, pinning_n_max, .. } => (*n_max).max(*pinning_n_max),
        }
    }
}

/// What the Monte Carlo experiments sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// A conditioned random walk of the configured step law.
    Walk { kind: LawKind },
    /// Excursions concatenated between regeneration epochs.
    Assembled { scheme: SchemeSpec, family: FamilySpec },
    /// Single tent excursions with heights `sqrt(eta / U)`.
    Tent { eta: f64 },
    /// Paths of a pinning or wetting model.
    Pinning { variant: Variant, environment: EnvSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Singleton,
    EndpointPair,
    Grid {
        step: usize,
    },
    /// iid gaps with the listed `[gap, probability]` pairs.
    Renewal {
        gaps: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Walk { bulk: LawKind, rig: LawKind },
    Tent { eta: f64 },
}

/// Quenched environment `xi_1, xi_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Constant(f64),
    Values(Vec<f64>),
    /// One value per line, `#` comments; relative to the config file.
    File(PathBuf),
    Iid(IidEnvironment),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn from_core(context: &str) -> impl Fn(condwalk::Error) -> ConfigError + '_ {
    move |e| ConfigError(format!("{context}: {e}"))
}

/// Everything derived from a config before any sampling starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub law: StepLaw,
    pub heavy: Option<StepLaw>,
    pub environment: Option<Environment>,
    pub cache_dir: Option<PathBuf>,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

fn grid<T: PartialOrd + Copy + fmt::Debug>(name: &str, v: &[T], ok: impl Fn(T) -> bool) -> Result<(), ConfigError> {
    if v.is_empty() {
        return invalid(format!("grid `{name}` is empty"));
    }
    if let Some(bad) = v.iter().find(|x| !ok(**x)) {
        return invalid(format!("grid `{name}` has invalid entry {bad:?}"));
    }
    Ok(())
}

fn positive(x: usize) -> bool {
    x > 0
}

fn samples_ok(samples: usize) -> Result<(), ConfigError> {
    if samples < MIN_SAMPLES {
        return invalid(format!("samples must be at least {MIN_SAMPLES}, got {samples}"));
    }
    Ok(())
}

fn require_lattice(law: &StepLaw, what: &str) -> Result<(), ConfigError> {
    if !law.is_lattice() {
        return invalid(format!("{what} needs a lattice step law"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Schema and semantic checks. `base` resolves relative environment files.
    pub fn prepare(&self, base: &Path) -> Result<Prepared, ConfigError> {
        let law = StepLaw::validate(&self.step).map_err(from_core("step"))?;
        if self.threads == Some(0) {
            return invalid("threads must be positive");
        }
        let horizon = self.experiment.horizon();
        let environment = match self.experiment.environment() {
            Some(spec) => Some(load_environment(spec, base, horizon)?),
            None => None,
        };
        if let (Some(env), false) = (&environment, law.is_lattice()) {
            if let Some((i, v)) = env.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
                return invalid(format!("continuous pinning needs nonnegative rewards, xi_{} = {v}", i + 1));
            }
        }
        if let Some(source) = self.experiment.source() {
            check_source(source)?;
        }
        let mut heavy = None;
        match &self.experiment {
            Experiment::UiCurve { n, k, samples, .. } => {
                grid("n", n, positive)?;
                grid("k", k, |k: f64| k.is_finite() && k >= 0.0)?;
                samples_ok(*samples)?;
            }
            Experiment::TailCurve { t, a, samples, .. } => {
                grid("t", t, positive)?;
                grid("a", a, |a: f64| a.is_finite() && a > 0.0)?;
                samples_ok(*samples)?;
            }
            Experiment::Modulus { source, n, delta, eta, samples, restricted } => {
                grid("n", n, positive)?;
                grid("delta", delta, |d: f64| d > 0.0 && d <= 1.0)?;
                if !(eta.is_finite() && *eta > 0.0) {
                    return invalid("eta must be positive");
                }
                if *restricted && matches!(source, SourceSpec::Walk { .. } | SourceSpec::Tent { .. }) {
                    return invalid("the restricted modulus needs a source with regeneration epochs");
                }
                samples_ok(*samples)?;
            }
            Experiment::EndpointGof { n, samples, .. } => {
                grid("n", n, positive)?;
                samples_ok(*samples)?;
            }
            Experiment::Counterexample { eta, a, block, samples } => {
                TentFamily::new(*eta).map_err(from_core("eta"))?;
                grid("a", a, |a: u64| (a * a) as f64 >= *eta)?;
                if *block < 2 {
                    return invalid("block must be at least 2");
                }
                samples_ok(*samples)?;
            }
            Experiment::PinningPartition { variants, n, .. } => {
                if variants.is_empty() {
                    return invalid("variants is empty");
                }
                grid("n", n, positive)?;
            }
            Experiment::RatioScan { n } | Experiment::KestenScan { n } => {
                require_lattice(&law, self.experiment.name())?;
                grid("n", n, positive)?;
            }
            Experiment::OracleSuite { n_max, pinning_n_max, environments } => {
                require_lattice(&law, "oracle_suite")?;
                if *n_max == 0 || *pinning_n_max == 0 || *environments == 0 {
                    return invalid("oracle_suite sizes must be positive");
                }
            }
            Experiment::SlowUiDemo { heavy: spec, n, k, samples, .. } => {
                let h = StepLaw::validate(spec).map_err(from_core("heavy"))?;
                require_lattice(&law, "slow_ui_demo")?;
                require_lattice(&h, "slow_ui_demo")?;
                grid("n", n, positive)?;
                grid("k", k, |k: f64| k.is_finite() && k >= 0.0)?;
                samples_ok(*samples)?;
                heavy = Some(h);
            }
        }
        Ok(Prepared { law, heavy, environment, cache_dir: self.cache_dir.as_ref().map(|d| base.join(d)) })
    }
}

fn check_source(source: &SourceSpec) -> Result<(), ConfigError> {
    match source {
        SourceSpec::Walk { .. } => Ok(()),
        SourceSpec::Tent { eta } => TentFamily::new(*eta).map(|_| ()).map_err(from_core("tent")),
        SourceSpec::Pinning { .. } => Ok(()),
        SourceSpec::Assembled { scheme, family } => {
            match scheme {
                SchemeSpec::Grid { step } => {
                    Grid::new(*step).map_err(from_core("grid"))?;
                }
                SchemeSpec::Renewal { gaps } => {
                    Renewal::new(gaps).map_err(from_core("renewal"))?;
                }
                SchemeSpec::Singleton | SchemeSpec::EndpointPair => {}
            }
            match family {
                FamilySpec::Tent { eta } => TentFamily::new(*eta).map(|_| ()).map_err(from_core("tent")),
                FamilySpec::Walk { bulk, rig } => {
                    if !bulk.pins_endpoint() {
                        return invalid(format!("bulk law {bulk} does not end at 0"));
                    }
                    if rig.pins_endpoint() {
                        return invalid(format!("final law {rig} must leave its endpoint free"));
                    }
                    Ok(())
                }
            }
        }
    }
}

fn load_environment(spec: &EnvSpec, base: &Path, horizon: usize) -> Result<Environment, ConfigError> {
    let env = match spec {
        EnvSpec::Constant(v) => Environment::constant(*v, horizon).map_err(from_core("environment"))?,
        EnvSpec::Values(v) => Environment::new(v.clone()).map_err(from_core("environment"))?,
        EnvSpec::Iid(iid) => iid.generate(horizon).map_err(from_core("environment"))?,
        EnvSpec::File(path) => {
            let path = base.join(path);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError(format!("environment file {}: {e}", path.display())))?;
            Environment::parse(&text).map_err(from_core("environment file"))?
        }
    };
    if env.len() < horizon {
        return invalid(format!("environment has {} sites, experiment needs {horizon}", env.len()));
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UI: &str = r#"
        seed = 7
        [experiment]
        name = "ui_curve"
        source = { type = "walk", kind = "meander" }
        n = [256, 1024]
        k = [1, 2.5]
        samples = 10000
    "#;

    #[test]
    fn parses_with_defaults() {
        let c = parse(UI).unwrap();
        assert_eq!(c.step, StepSpec::Lazy);
        assert_eq!(c.experiment.name(), "ui_curve");
        assert_eq!(c.experiment.horizon(), 1024);
        match &c.experiment {
            Experiment::UiCurve { k, exact, .. } => {
                assert_eq!(k, &[1.0, 2.5]);
                assert!(exact);
            }
            _ => unreachable!(),
        }
        c.prepare(Path::new(".")).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(&UI.replace("seed = 7", "seed = 7\ncolour = 1")).is_err());
        assert!(parse(&UI.replace("samples = 10000", "samples = 10000\nbins = 3")).is_err());
        assert!(parse(&UI.replace("kind = \"meander\"", "kind = \"meander\", extra = 1")).is_err());
        assert!(parse(&UI.replace("ui_curve", "ui_curves")).is_err());
    }

    #[test]
    fn semantic_checks() {
        let small = parse(&UI.replace("10000", "10")).unwrap();
        assert!(small.prepare(Path::new(".")).unwrap_err().0.contains("samples"));
        let empty = parse(&UI.replace("[256, 1024]", "[]")).unwrap();
        assert!(empty.prepare(Path::new(".")).is_err());
        let gauss = parse(
            "seed = 1\nstep = { kind = \"gaussian\", sigma = 1.0 }\n[experiment]\nname = \"kesten_scan\"\nn = [10]\n",
        )
        .unwrap();
        assert!(gauss.prepare(Path::new(".")).unwrap_err().0.contains("lattice"));
    }

    #[test]
    fn lattice_support_and_environments() {
        let text = r#"
            seed = 1
            step = { kind = "lattice", support = [[-1, "1/4"], [0, "1/2"], [1, 0.25]] }
            [experiment]
            name = "pinning_partition"
            variants = ["pinning", "wetting_constrained"]
            environment = { iid = { dist = "normal", params = [0, 1], seed = 3 } }
            n = [4, 8]
        "#;
        let c = parse(text).unwrap();
        let p = c.prepare(Path::new(".")).unwrap();
        assert_eq!(p.environment.unwrap().len(), 8);

        let short = text.replace("{ iid = { dist = \"normal\", params = [0, 1], seed = 3 } }", "{ values = [1, 2] }");
        assert!(parse(&short).unwrap().prepare(Path::new(".")).unwrap_err().0.contains("sites"));
    }
}
