use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const PEAKS: &str = "var x in [-3,3]; var y in [-3,3];
obj: 3*(1-x)^2*exp(-x^2-(y+1)^2) - 10*(x/5 - x^3 - y^5)*exp(-x^2-y^2) - exp(-(x+1)^2-y^2)/3;
";

fn subdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiv")).args(args).env_remove("SUBDIV_THREADS").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// CSV rows with the `wall_ms` column (always last) removed.
fn without_wall(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn solve_peaks_file() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "peaks.prob", PEAKS);
    let o = subdiv(&["solve", &f, "--bounder", "mvf", "--subdomains", "1024"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("status      optimal"), "{out}");
    let ub: f64 = out.lines().find_map(|l| l.strip_prefix("ub")).unwrap().trim().parse().unwrap();
    assert!((ub + 6.5511).abs() < 1e-3, "{ub}");
}

#[test]
fn syntax_error_exits_1_with_position() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.prob", "var x in [0,1]\nobj: x + * 2\n");
    let o = subdiv(&["solve", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2, column 10"), "{}", stderr(&o));
}

#[test]
fn infeasible_exits_3() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "infeasible.prob", "var x in [-1,1]\nobj: x\ncon g: 1 + x^2 <= 0\n");
    let o = subdiv(&["solve", &f]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).contains("infeasible"));
}

#[test]
fn budget_exhaustion_exits_2() {
    let o = subdiv(&["solve", "peaks", "--bounder", "nie", "--subdomains", "1", "--max-iter", "5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("max_iter"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(subdiv(&["solve", "/no/such/file.prob"]).status.code(), Some(1));
    assert_eq!(subdiv(&["solve", "peaks", "--bounder", "taylor"]).status.code(), Some(1));
    assert_eq!(subdiv(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(subdiv(&["solve", "peaks", "--eps-abs", "0"]).status.code(), Some(1));
    assert_eq!(subdiv(&["--help"]).status.code(), Some(0));
}

#[test]
fn list_names_builtins() {
    let o = subdiv(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in ["peaks", "alpine", "stybtang", "kinetic-ode"] {
        assert!(out.contains(name), "{out}");
    }
}

#[test]
fn history_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (log, threads) in [(&a, "1"), (&b, "3")] {
        let o = subdiv(&["solve", "peaks", "--subdomains", "256", "--threads", threads, "--log", log.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let rows = without_wall(&a);
    assert_eq!(rows[0], "iteration,nodes_open,lb,ub,gap");
    assert!(rows.len() > 1);
    assert_eq!(rows, without_wall(&b));
}

#[test]
fn bench_sweep_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = subdiv(&["bench", "peaks", "--bounders", "mvf", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("problem,bounder,partition,subdomains,root_lb,iterations,status,wall_ms"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    let counts: Vec<usize> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(counts, [1, 4, 16, 64, 256, 1024]);
    let root_lb: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(root_lb.windows(2).all(|w| w[1] >= w[0]), "{root_lb:?}");
    assert!(rows.iter().all(|r| r[6] == "optimal"));
}

#[test]
fn bench_single_interval_has_both_bounders() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.prob", "var x in [-1,2]; obj: x^2 - x");
    let o = subdiv(&["bench", &f, "--subdomains", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("q,nie,adaptive,1,") && rows[1].starts_with("q,mvf,adaptive,1,"), "{out}");
}

#[test]
fn bench_stybtang_iterations_fall_with_subdomains() {
    let o = subdiv(&["bench", "stybtang2", "--subdomains", "64,1024", "--bounders", "mvf"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let iters: Vec<usize> = out.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(iters.len(), 2);
    assert!(iters[1] <= iters[0], "{iters:?}");
}

#[test]
fn ann_problem_file_with_weights() {
    let dir = TempDir::new().unwrap();
    write(&dir, "net.json", r#"[{"W": [[2.0]], "b": [-1.0], "activation": "tanh"}]"#);
    let f = write(&dir, "ann.prob", "var x in [-1,1]\nann n = mlp(\"net.json\", x)\nobj: n\n");
    let o = subdiv(&["solve", &f]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ub: f64 = stdout(&o).lines().find_map(|l| l.strip_prefix("ub")).unwrap().trim().parse().unwrap();
    assert!((ub - (-3f64).tanh()).abs() < 1e-4, "{ub}");
}

#[test]
fn builtin_network_uses_bundled_weights() {
    let o = subdiv(&["solve", "peaks-ann-err", "--subdomains", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = subdiv(&["solve", "kinetic-ode"]);
    assert_eq!(o.status.code(), Some(1));
}
