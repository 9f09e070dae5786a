use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpdisk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WARPDISK_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn density_check_passes_and_fails() {
    let dir = TempDir::new().unwrap();
    let ok = run(&["density-check", "--kind", "log-e0", "--assert"], &dir.path().join("log"));
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let rep = json(&dir.path().join("log/density_check.json"));
    assert_eq!(rep["report"]["cond_c"]["pass"], true);
    assert!(dir.path().join("log/density_check.config.toml").exists());

    let table = dir.path().join("half.csv");
    fs::write(&table, "r,f\n0,0\n1,0.5\n").unwrap();
    let args = ["density-check", "--kind", "table", "--table", table.to_str().unwrap()];
    let soft = run(&args, &dir.path().join("half"));
    assert_eq!(code(&soft), 0);
    assert!(String::from_utf8_lossy(&soft.stdout).contains("FAIL"));
    let hard = run(&[&args[..], &["--assert"]].concat(), &dir.path().join("half"));
    assert_eq!(code(&hard), 1);
    let rep = json(&dir.path().join("half/density_check.json"));
    assert_eq!(rep["report"]["cond_b"]["pass"], false);
    assert!(rep["report"]["cond_b"]["witness"].as_f64().unwrap() > 0.0);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[density]\nkind = \"flat\"\ntolerance = 1\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "density-check"], dir.path());
    assert_eq!(code(&o), 2);
    let diag: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(diag["error"], "config");

    assert_eq!(code(&run(&["density-check", "--kind", "cone", "--beta", "-1"], dir.path())), 2);
    assert_eq!(code(&run(&["density-check", "--kind", "table"], dir.path())), 2);
    assert_eq!(code(&run(&["plateau-solve", "--shape", "point", "--radius", "1"], dir.path())), 2);
    assert_eq!(code(&run(&["distortion", "--alphas", "0.5", "--pairs", "4"], dir.path())), 2);
    assert_eq!(code(&run(&["distortion", "--k", "0", "--pairs", "4"], dir.path())), 2);
}

#[test]
fn outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["chordarc-verify", "--samples", "50", "--vertices", "64", "--seed", "7", "--assert"];
    for sub in ["a", "b"] {
        assert_eq!(code(&run(&args, &dir.path().join(sub))), 0);
    }
    let a = fs::read(dir.path().join("a/chordarc_verify.json")).unwrap();
    let b = fs::read(dir.path().join("b/chordarc_verify.json")).unwrap();
    assert_eq!(a, b);

    let args = ["distance-table", "--kind", "cone", "--beta", "9.42477796076938", "--pairs", "40", "--seed", "3", "--assert"];
    for (sub, jobs) in [("c", "1"), ("d", "3")] {
        let o = run(&[&args[..], &["--jobs", jobs]].concat(), &dir.path().join(sub));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    let c = fs::read_to_string(dir.path().join("c/distance_table.csv")).unwrap();
    assert_eq!(c, fs::read_to_string(dir.path().join("d/distance_table.csv")).unwrap());
    assert!(c.starts_with("r1,theta1,r2,theta2,distance,kind,clairaut_c,residual,cone_distance\n"));
    assert_eq!(c.lines().count(), 41);
}

#[test]
fn plateau_solve_writes_reusable_artifacts() {
    let dir = TempDir::new().unwrap();
    let args = ["plateau-solve", "--shape", "point", "--h", "0.1", "--init", "mobius", "--mobius-a", "0.3", "--max-iter", "30"];
    let o = run(&[&args[..], &["--jobs", "1"]].concat(), &dir.path().join("a"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[&args[..], &["--jobs", "2"]].concat(), &dir.path().join("b"));
    assert_eq!(code(&o), 0);
    for f in ["plateau_state.json", "plateau_trace.csv", "plateau_report.json", "plateau_mesh.txt"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let trace = fs::read_to_string(dir.path().join("a/plateau_trace.csv")).unwrap();
    assert!(trace.starts_with("iter,dirichlet,reshetnyak,area,conformality_defect\n"));
    let rep = json(&dir.path().join("a/plateau_report.json"));
    assert!(rep["energy"]["dirichlet"].as_f64().unwrap() <= rep["initial"]["dirichlet"].as_f64().unwrap());
    let state = json(&dir.path().join("a/plateau_state.json"));
    assert!(state["images"].is_array() && state["increments"].is_array());

    // the written mesh is accepted back, and a config file supplies the rest
    let cfg = dir.path().join("run.toml");
    let mesh = dir.path().join("a/plateau_mesh.txt");
    fs::write(
        &cfg,
        format!(
            "[plateau]\nshape = {{ kind = \"point\" }}\nmesh = {:?}\ninit = {{ kind = \"reference\" }}\n[plateau.solver]\nmax_iter = 5\n",
            mesh.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "plateau-solve"], &dir.path().join("c"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&mesh).unwrap(), fs::read(dir.path().join("c/plateau_mesh.txt")).unwrap());
    let echoed = fs::read_to_string(dir.path().join("c/plateau.config.toml")).unwrap();
    assert!(echoed.contains("max_iter = 5"));
}

#[test]
fn surgery_reports_a_thin_fiber() {
    let dir = TempDir::new().unwrap();
    let o = run(&["surgery", "--h", "0.05"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&dir.path().join("surgery_report.json"));
    assert_eq!(rep["fiber"]["connected"], true);
    assert!(rep["fiber"]["inscribed_radius"].as_f64().unwrap() < 0.05);
    assert!(rep["boundary_residual"].as_f64().unwrap() < 1e-10);
    let verdict = json(&dir.path().join("surgery.verdict.json"));
    assert!(verdict["pass"].is_boolean());
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_warpdisk"))
        .args(["density-check", "--kind", "flat"])
        .env("WARPDISK_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("density_check.json").exists());
}

#[test]
fn iso_scan_on_a_flat_disk() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("iso.toml");
    fs::write(&cfg, "[iso]\nalphas = [0.5, 0.1]\n[iso.optimizer]\nm = 12\nrestarts = 2\nmax_iter = 200\ns_grid = 6\nball_centers = [0.4]\nball_fractions = [0.5]\nball_grid = { n_r = 16, n_theta = 16 }\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "iso-scan", "--kind", "flat", "--assert"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("iso_scan.csv")).unwrap();
    assert!(csv.starts_with("alpha,beta,C_hat,family,area,length,epsilon_hat,seed\n"));
    assert_eq!(csv.lines().count(), 3);
}
