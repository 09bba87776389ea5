use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shockadj_cli::{ExperimentConfig, RunManifest, MANIFEST_FILE};

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, sub: &str, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shockadj"));
    cmd.arg("--config").arg(config).arg("--out").arg(out).arg(sub);
    cmd.env_remove("SHOCKADJ_WORKERS");
    if let Some(w) = workers {
        cmd.env("SHOCKADJ_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(ext))
        .collect();
    v.sort();
    v
}

#[test]
fn scalar_single_eps_solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n[sweep]\neps = [0.01]\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, "solve", None).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, "solve", None).status.code(), Some(0));
    let csvs = files_with_ext(&a, ".csv");
    assert_eq!(csvs, ["adjoint_00.csv", "primal_00.csv"]);
    for f in csvs.iter().chain(&files_with_ext(&a, ".ckpt")) {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = manifest(&a);
    assert!(m.verify(&a).is_empty());
    assert_eq!(m.files.len(), 3);
    assert!(m.stages["solve"].converged);
    assert!(m.stages["solve"].metrics["jacobian_check_max_error"] < 1e-6);
    let header = std::fs::read_to_string(a.join("primal_00.csv")).unwrap();
    assert!(header.starts_with("x,w0,epsilon\n"));
}

#[test]
fn euler_sweep_writes_ten_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"euler-nozzle\"\n");
    let out = dir.path().join("o");
    let o = run(&cfg, &out, "solve", Some("2"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_with_ext(&out, ".csv").len(), 10);
    let m = manifest(&out);
    assert!(m.stages.values().all(|s| s.converged));
    assert_eq!((m.workers.count, m.workers.source.as_str()), (2, "env"));
}

#[test]
fn low_kappa_warns_and_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n[sweep]\neps = [0.01]\nkappa = 3\n");
    let out = dir.path().join("o");
    assert_eq!(run(&cfg, &out, "solve", None).status.code(), Some(0));
    let m = manifest(&out);
    assert!(m.stages["solve"].warnings.iter().any(|w| w.contains("under-resolved")));
}

#[test]
fn config_errors_exit_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    for (i, body) in [
        "[model]\nname = \"scalar\"\n[sweep]\neps = []\n",
        "[model]\nname = \"scalar\"\n[sweep]\nepz = [0.01]\n",
        "[model]\nname = \"scalar\"\n[sweep]\neps = [0.01, 0.02]\n",
        "[model]\nname = \"burgers\"\n",
        "[model]\nname = \"scalar\"\n[euler]\ngamma = 1.4\n",
        "[model]\nname = \"scalar\"\n[sweep]\nbc_policy = \"linearized-characteristic\"\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("c{i}.toml"), body);
        let out = dir.path().join(format!("o{i}"));
        assert_eq!(run(&cfg, &out, "check-ibc", None).status.code(), Some(2), "{body}");
        assert!(!out.exists());
    }
    let cfg = write_config(dir.path(), "ok.toml", "[model]\nname = \"scalar\"\n[sweep]\neps = [0.01]\n");
    let o = run(&cfg, &dir.path().join("w"), "solve", Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_ibc_needs_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n[sweep]\neps = [0.01, 0.005]\n");
    assert_eq!(run(&cfg, &dir.path().join("o"), "check-ibc", None).status.code(), Some(2));
}

#[test]
fn euler_divergence_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"euler-nozzle\"\n[sweep]\neps = [0.01, 0.001]\nkappa = 1\n");
    let out = dir.path().join("o");
    assert_eq!(run(&cfg, &out, "solve", None).status.code(), Some(3));
    assert!(out.join("primal_00.csv").exists());
    let m = manifest(&out);
    assert!(!m.stages["solve"].converged);
    assert!(m.stages["solve"].failure.as_deref().unwrap().contains("Newton"));
    assert!(m.verify(&out).is_empty());
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn scalar_all_meets_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n");
    let out = dir.path().join("o");
    let o = run(&cfg, &out, "all", None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = std::fs::read_to_string(out.join("fit.csv")).unwrap();
    let slope: f64 = column(&fit, "slope")[0].parse().unwrap();
    assert!((0.8..=1.2).contains(&slope));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("viscous residual slope"));

    let ibc = std::fs::read_to_string(out.join("ibc_sweep.csv")).unwrap();
    let last: Vec<f64> = ["residual_theta_0.01", "residual_theta_0.05", "residual_theta_0.1"]
        .iter()
        .map(|c| column(&ibc, c).last().unwrap().parse().unwrap())
        .collect();
    let (lo, hi) = last.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo - 1.0 <= 0.2, "{last:?}");

    let budget = std::fs::read_to_string(out.join("budget.csv")).unwrap();
    let eff: f64 = column(&budget, "effectivity").last().unwrap().parse().unwrap();
    assert!((0.9..=1.1).contains(&eff));
    let ratios: Vec<f64> = column(&budget, "defect_over_nu").iter().map(|v| v.parse::<f64>().unwrap().abs()).collect();
    assert!(ratios[ratios.len() - 5..].windows(2).all(|p| p[1] < p[0]));

    let m = manifest(&out);
    assert!(m.verify(&out).is_empty());
    for f in ["ibc_sweep.csv", "fit.csv", "budget.csv", "budget_fit.csv", "primal_06.csv"] {
        assert!(m.files.contains_key(f), "{f}");
    }
    for s in ["solve", "check-ibc", "error-representation"] {
        assert!(m.stages[s].converged && m.stages[s].failure.is_none(), "{s}");
    }
}

#[test]
fn single_nu_marks_fit_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n[perturbation]\nnu = [0.01]\n");
    let out = dir.path().join("o");
    assert_eq!(run(&cfg, &out, "error-representation", None).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out.join("budget.csv")).unwrap().lines().count(), 2);
    let fit = std::fs::read_to_string(out.join("budget_fit.csv")).unwrap();
    assert!(column(&fit, "slope").iter().all(|s| s == "n/a"));
}

#[test]
fn pre_asymptotic_sweep_fails_threshold_with_exit_four() {
    // Three large ε values sit before the O(ε) regime, so the fitted slope is off.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[model]\nname = \"scalar\"\n[sweep]\neps = [0.05, 0.045, 0.04]\n");
    let out = dir.path().join("o");
    assert_eq!(run(&cfg, &out, "check-ibc", None).status.code(), Some(4));
    let m = manifest(&out);
    let stage = &m.stages["check-ibc"];
    assert!(stage.converged);
    assert!(stage.failure.as_deref().unwrap().contains("slope"));
    assert!(m.files.contains_key("ibc_sweep.csv") && m.verify(&out).is_empty());
}

#[test]
fn config_round_trips_through_the_library() {
    let cfg = ExperimentConfig::parse(
        "[model]\nname = \"euler-nozzle\"\n[euler]\np0 = 0.77\n[sweep]\neps0 = 0.01\nfactor = 0.5\ncount = 3\n[run]\nseed = 9\nworkers = 3\n",
    )
    .unwrap();
    assert_eq!(cfg.eps_list().unwrap(), vec![0.01, 0.005, 0.0025]);
    assert_eq!(cfg.seed(), 9);
    assert!(ExperimentConfig::parse("[model]\nname = \"scalar\"\n[sweep]\neps0 = 0.01\n").is_err());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["scalar.toml", "euler.toml"] {
        let cfg = ExperimentConfig::load(&dir.join(name)).unwrap();
        assert!(cfg.eps_list().unwrap().len() >= 3, "{name}");
    }
}
