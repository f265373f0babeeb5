//! End-to-end runs of the `condwalk` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use condwalk::regeneration::counterexample_probability;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_condwalk"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, args: &[&str]) -> Output {
    bin().arg("run").arg(config).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const UI: &str = r#"
seed = 42
[experiment]
name = "ui_curve"
source = { type = "walk", kind = "meander" }
n = [16, 64, 128]
k = [1, 2, 5, 10, 25]
samples = 10000
"#;

#[test]
fn ui_curve_writes_one_row_per_grid_point_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ui.toml", UI);
    let out = dir.path().join("a");
    let res = run(&cfg, &["--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(out.join("ui_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "law,n_or_t,K_or_a_or_delta,estimate,stderr,samples,seed,exact");
    assert_eq!(lines.count(), 15);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_format"], "toml");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["rng_splitting_rule"].as_str().unwrap().contains("ChaCha8"));
    assert!(manifest["versions"]["condwalk"].is_string());

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ui_curve.json")).unwrap()).unwrap();
    assert_eq!(sidecar["summary"]["curve"]["monotone_in_k"], true);
    assert!(sidecar["summary"]["note"].as_str().unwrap().contains("configured grid"));
}

#[test]
fn same_seed_gives_identical_bytes_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ui.toml", UI);
    let read = |sub: &str, args: &[&str]| {
        let out = dir.path().join(sub);
        let mut all = vec!["--out", out.to_str().unwrap()];
        all.extend_from_slice(args);
        assert_eq!(code(&run(&cfg, &all)), 0);
        (fs::read(out.join("ui_curve.csv")).unwrap(), fs::read(out.join("manifest.json")).unwrap())
    };
    let a = read("a", &["--threads", "1"]);
    let b = read("b", &["--threads", "3"]);
    let c = read("c", &[]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = read("d", &["--seed", "43"]);
    assert_ne!(a.0, d.0);
    assert!(String::from_utf8(d.0).unwrap().contains(",43,"));
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        UI.replace("seed = 42", "seed = 42\nverbose = true"),
        UI.replace("samples = 10000", "samples = 100"),
        UI.replace("kind = \"meander\"", "kind = \"snake\""),
        UI.replace("[16, 64, 128]", "[]"),
        "seed = 1\n[experiment]\nname = \"ratio_scan\"\nn = [8]\nstep = 3\n".to_string(),
        "not toml at all [".to_string(),
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.toml"), body);
        let v = bin().arg("validate").arg(&cfg).output().unwrap();
        assert_eq!(code(&v), 2, "case {i}: {}", String::from_utf8_lossy(&v.stderr));
        assert_eq!(code(&run(&cfg, &["--out", dir.path().to_str().unwrap()])), 2, "case {i}");
    }
    assert_eq!(code(&bin().arg("validate").arg(dir.path().join("missing.toml")).output().unwrap()), 2);
    let ok = write_config(dir.path(), "ok.toml", UI);
    assert_eq!(code(&bin().arg("validate").arg(&ok).output().unwrap()), 0);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 2);
}

#[test]
fn budget_failure_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.toml", &UI.replace("[16, 64, 128]", "[4096]"));
    let res = bin()
        .env(condwalk::lattice_dp::MEMORY_ENV, "1")
        .arg("run")
        .arg(&cfg)
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&res), 1, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("budget"));
}

#[test]
fn oracle_suite_passes_for_lazy_and_simple_walks() {
    let dir = tempfile::tempdir().unwrap();
    for step in ["lazy", "simple"] {
        let body = format!(
            "seed = 1\nstep = {{ kind = \"{step}\" }}\n[experiment]\nname = \"oracle_suite\"\n\
             n_max = 6\npinning_n_max = 8\nenvironments = 16\n"
        );
        let cfg = write_config(dir.path(), &format!("{step}.toml"), &body);
        let out = dir.path().join(step);
        let res = run(&cfg, &["--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0, "{step}: {}", String::from_utf8_lossy(&res.stderr));
        let csv = fs::read_to_string(out.join("oracle_suite.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6 * 6 + 4);
    }
}

#[test]
fn counterexample_reports_exact_and_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let body = "seed = 9\n[experiment]\nname = \"counterexample\"\neta = 1.0\na = [2, 4]\nblock = 8\nsamples = 10000\n";
    let cfg = write_config(dir.path(), "ce.toml", body);
    let out = dir.path().join("ce");
    assert_eq!(code(&run(&cfg, &["--out", out.to_str().unwrap()])), 0);
    let csv = fs::read_to_string(out.join("counterexample.csv")).unwrap();
    for (line, a) in csv.lines().skip(1).zip([2u64, 4]) {
        let f: Vec<&str> = line.split(',').collect();
        let (est, se, exact): (f64, f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap(), f[7].parse().unwrap());
        assert_eq!(exact, counterexample_probability(1.0, a).unwrap());
        assert!((est - exact).abs() <= 4.0 * se, "a = {a}: {est} vs {exact}");
    }
}

#[test]
fn environment_files_resolve_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    let env: String = (1..=10).map(|i| format!("{}\n", (i as f64 * 0.37).sin())).collect();
    fs::write(sub.join("xi.txt"), format!("# quenched field\n{env}")).unwrap();
    let body = "seed = 2\nout = \"res\"\n[experiment]\nname = \"pinning_partition\"\n\
                variants = [\"pinning\", \"wetting\"]\nenvironment = { file = \"xi.txt\" }\nn = [5, 10]\n";
    let cfg = write_config(&sub, "pin.toml", body);
    let res = run(&cfg, &[]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(sub.join("res").join("pinning_partition.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (log_z, exact): (f64, f64) = (f[3].parse().unwrap(), f[7].parse().unwrap());
        assert!((log_z - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{line}");
    }

    let short = write_config(&sub, "short.toml", &body.replace("[5, 10]", "[5, 11]"));
    assert_eq!(code(&bin().arg("validate").arg(&short).output().unwrap()), 2);
}

#[test]
fn slow_ui_demo_labels_both_laws() {
    let dir = tempfile::tempdir().unwrap();
    let body = "seed = 3\n[experiment]\nname = \"slow_ui_demo\"\n\
                heavy = { kind = \"power_tail\", exponent = 3.5, k_max = 8 }\nn = [32]\nk = [1, 4]\nsamples = 10000\n";
    let cfg = write_config(dir.path(), "slow.toml", body);
    let out = dir.path().join("slow");
    assert_eq!(code(&run(&cfg, &["--out", out.to_str().unwrap()])), 0);
    let csv = fs::read_to_string(out.join("slow_ui_demo.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("baseline:free,")).count(), 2);
    assert_eq!(csv.lines().filter(|l| l.starts_with("heavy:free,")).count(), 2);
}

#[test]
fn regeneration_and_gaussian_sources_run() {
    let dir = tempfile::tempdir().unwrap();
    let bodies = [
        "seed = 4\n[experiment]\nname = \"modulus\"\nn = [64]\ndelta = [0.5, 0.1]\neta = 0.5\nsamples = 10000\n\
         restricted = true\n\
         source = { type = \"assembled\", scheme = { type = \"grid\", step = 16 }, \
                    family = { type = \"walk\", bulk = \"excursion\", rig = \"meander\" } }\n",
        "seed = 4\nstep = { kind = \"gaussian\", sigma = 2.0 }\n[experiment]\nname = \"endpoint_gof\"\n\
         source = { type = \"walk\", kind = \"meander\" }\nn = [64]\nsamples = 10000\nreference = \"rayleigh\"\n",
        "seed = 4\n[experiment]\nname = \"tail_curve\"\nt = [20]\na = [1, 2]\nsamples = 10000\n\
         source = { type = \"assembled\", scheme = { type = \"renewal\", gaps = [[2, 0.5], [4, 0.5]] }, \
                    family = { type = \"tent\", eta = 1.0 } }\n",
    ];
    for (i, body) in bodies.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("s{i}.toml"), body);
        let res = run(&cfg, &["--out", dir.path().join(format!("s{i}")).to_str().unwrap()]);
        assert_eq!(code(&res), 0, "case {i}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let gof = fs::read_to_string(dir.path().join("s1").join("endpoint_gof.csv")).unwrap();
    let ks: f64 = gof.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(ks < 0.05, "ks = {ks}");
}
