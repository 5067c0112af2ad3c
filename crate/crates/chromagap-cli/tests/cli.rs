use std::path::{Path, PathBuf};
use std::process::Command;

use chromagap::dkkms::magic_square;
use chromagap::qop::{mermin_peres, verify_assignment, AssignmentJson, QuantumAssignment};
use chromagap::relstruct::{RelStructure, StructureJson};
use chromagap_cli::{pipeline_thm14_machinery, pipeline_thm15, Config};

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("chromagap-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn load<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chromagap"))
}

#[test]
fn config_parses_keys() {
    let c = Config::parse("# run\nseed = 9\nbudget = none\nsample=500\nspectral_gap = 1e-6\nsinkhorn_residual = 1e-10\nfull = true\n").unwrap();
    assert_eq!(c.seed, 9);
    assert_eq!(c.budget, None);
    assert_eq!(c.sample, 500);
    assert!(c.full);
    assert_eq!(c.tolerances.spectral_gap, 1e-6);
    assert_eq!(c.tolerances.row, 1e-10);
    assert_eq!(Config::parse("").unwrap(), Config::default());
    assert!(Config::parse("colour = red").is_err());
    assert!(Config::parse("seed 4").is_err());
    assert!(Config::parse("threads = 0").is_err());
}

#[test]
fn machinery_reports_reproduce() {
    let cfg = Config { seed: 3, ..Config::default() };
    let a = pipeline_thm14_machinery(&cfg, 2, None).unwrap();
    let b = pipeline_thm14_machinery(&cfg, 2, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let ks: Vec<usize> = a.ledger.iter().map(|(_, k)| *k).collect();
    assert_eq!(ks, vec![20, 20, 10, 10, 4, 1, 1]);
    let one = pipeline_thm14_machinery(&cfg, 1, None).unwrap();
    assert!(one.passed);
    assert_eq!(one.chromatic_bounds, vec!["χ(δ^1K4) = 4".to_string()]);
    let err = pipeline_thm14_machinery(&cfg, 3, None).unwrap_err();
    assert!(matches!(err.downcast_ref::<chromagap::Error>(), Some(chromagap::Error::SizeBudgetExceeded(_))));
}

#[test]
fn stored_witnesses_reverify() {
    let dir = scratch("witness");
    let rep = pipeline_thm14_machinery(&Config::default(), 2, Some(&dir)).unwrap();
    assert!(dir.join("report.json").exists());
    let mut checked = 0;
    for st in &rep.stages {
        let Some(stem) = st.witnesses.iter().find_map(|w| w.strip_suffix(".assignment.json")) else { continue };
        let x = RelStructure::from_json(&load::<StructureJson>(&dir.join(format!("{stem}.x.json")))).unwrap();
        let y = RelStructure::from_json(&load::<StructureJson>(&dir.join(format!("{stem}.y.json")))).unwrap();
        let q = QuantumAssignment::from_json(&load::<AssignmentJson>(&dir.join(format!("{stem}.assignment.json")))).unwrap();
        assert!(verify_assignment(&x, &y, &q, st.k.unwrap()).unwrap().passed(), "{}", st.name);
        checked += 1;
    }
    assert_eq!(checked, 6);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn full_and_sampled_agree() {
    let sampled = pipeline_thm15(&Config::default(), None).unwrap();
    let full = pipeline_thm15(&Config { full: true, ..Config::default() }, None).unwrap();
    assert!(sampled.passed && full.passed);
    let eta = |r: &chromagap_cli::PipelineReport| r.stage("eta").unwrap().verdict.clone();
    assert_eq!(eta(&sampled), "perfect 0-compatible, dim 4");
    assert_eq!(eta(&sampled), eta(&full));
    assert!(sampled.stage("eta").unwrap().sampled && !full.stage("eta").unwrap().sampled);
    // rows only meet columns, so the colouring graph is bipartite at this size
    assert!(sampled.flags.iter().any(|f| f.contains("bipartite")));
    assert!(sampled.flags.iter().any(|f| f.contains("1152/2304 commutation")));
}

#[test]
fn corrupted_strategy_is_rejected() {
    let dir = scratch("corrupt");
    let csp = dir.join("square.json");
    std::fs::write(&csp, serde_json::to_string(&magic_square().to_csp().unwrap().to_json()).unwrap()).unwrap();
    let good = dir.join("good.json");
    let mp = mermin_peres();
    std::fs::write(&good, serde_json::to_string(&mp.cell_assignment.to_json()).unwrap()).unwrap();
    let ok = bin().args(["qverify", "--csp"]).arg(&csp).arg("--assignment").arg(&good).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let mut bad = mp.cell_assignment.clone();
    let (p0, p1) = (bad.projector("a11", "0"), bad.projector("a11", "1"));
    bad.insert("a11", "0", p1);
    bad.insert("a11", "1", p0);
    let badp = dir.join("bad.json");
    std::fs::write(&badp, serde_json::to_string(&bad.to_json()).unwrap()).unwrap();
    let out = bin().args(["qverify", "--csp"]).arg(&csp).arg("--assignment").arg(&badp).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    let witness = &v["product_violations"][0];
    assert!(witness["vars"].as_array().unwrap().iter().any(|x| x == "a11"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn subcommands_round_trip() {
    let dir = scratch("sub");
    let k4 = dir.join("k4.json");
    std::fs::write(&k4, serde_json::to_string(&chromagap::relstruct::clique(4).to_json()).unwrap()).unwrap();
    let d1 = dir.join("d1.json");
    assert!(bin().arg("linedigraph").arg(&k4).arg("-o").arg(&d1).status().unwrap().success());
    let d2 = dir.join("d2.json");
    assert!(bin().arg("linedigraph").arg(&d1).arg("-o").arg(&d2).status().unwrap().success());
    let out = bin().arg("chromatic").arg(&d2).args(["--cap", "4"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["chromatic_number"], 3);

    let out = bin().args(["transition", "--d", "2"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["unit_multiplicity"], 1);
    assert_eq!(v["states"], 16);

    let sys = dir.join("square.txt");
    std::fs::write(&sys, magic_square().to_text()).unwrap();
    let rho = dir.join("rho.json");
    assert!(bin().arg("rho").arg(&sys).arg("-o").arg(&rho).status().unwrap().success());
    let out = bin().arg("classify").arg(&rho).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["d_to_d"]["d"], 2);

    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "budget = 10\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("chromatic").arg(&d2).args(["--cap", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    std::fs::remove_dir_all(dir).unwrap();
}
