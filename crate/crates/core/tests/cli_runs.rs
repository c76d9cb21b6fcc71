use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_acsplit");

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "\
# tiny strong run
T = 1
dx = 1/32
dt_list = 2^-3, 2^-4, 2^-5, 2^-6, 2^-7, 2^-8
n_replicas = 40
method = M3
master_seed = 99
";

#[test]
fn missing_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["strong"], &dir.path().join("nope.cfg"), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "T = 1\n\nmethod = M7\n");
    let out = dir.path().join("out");
    let o = run(&["strong"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(!out.exists());

    let cfg = write_config(dir.path(), "dup.cfg", "T = 1\nwidth = 3\n");
    let o = run(&["lemmas"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn lemmas_command_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.cfg", "lemma_cases = 20000\n");
    let out = dir.path().join("out");
    let o = run(&["lemmas", "--check"], &cfg, &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let csv = std::fs::read_to_string(out.join("lemmas.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# acsplit "));
    assert_eq!(lines[1], "lemma,cases,violations,worst_margin");
    assert_eq!(lines.len(), 6);
    for l in &lines[2..] {
        assert_eq!(l.split(',').nth(2), Some("0"), "{l}");
    }
    assert!(out.join("summary.txt").exists());
}

#[test]
fn strong_csv_shape_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["strong"], &cfg, &a).status.code(), Some(0));
    let threaded = write_config(dir.path(), "t.cfg", &format!("{SMALL}threads = 3\n"));
    assert_eq!(run(&["strong"], &threaded, &b).status.code(), Some(0));
    let ca = std::fs::read(a.join("strong.csv")).unwrap();
    let cb = std::fs::read(b.join("strong.csv")).unwrap();
    assert_eq!(ca, cb);

    let text = String::from_utf8(ca).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("command=strong") && lines[0].contains("seed=99"));
    assert_eq!(lines[1], "dt,estimate,stderr,n_valid,n_blowup");
    let rows: Vec<&str> = lines
        .iter()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .copied()
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert!(cols[1].parse::<f64>().unwrap() > 0.0);
        assert_eq!(cols[4], "0");
    }
    let slope: f64 = lines
        .last()
        .unwrap()
        .strip_prefix("# slope=")
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope > 0.2 && slope < 0.8, "{slope}");

    let c = dir.path().join("c");
    assert_eq!(
        run(&["strong", "--seed", "100"], &cfg, &c).status.code(),
        Some(0)
    );
    let cc = std::fs::read_to_string(c.join("strong.csv")).unwrap();
    assert!(cc.lines().next().unwrap().contains("seed=100"));
    assert_ne!(cc, text);
}

#[test]
fn simulate_and_localize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.cfg",
        "n_interior = 7\ndt_list = 1/8, 1/16\nn_replicas = 20\nx0 = sine:0.5\nsnapshot_times = 0, 0.5, 1\n",
    );
    let out = dir.path().join("sim");
    assert_eq!(run(&["simulate"], &cfg, &out).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t,x,value");
    assert_eq!(data.len(), 1 + 3 * 7);

    let out = dir.path().join("loc");
    assert_eq!(
        run(&["localize", "--check"], &cfg, &out).status.code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(out.join("localize.csv")).unwrap();
    assert!(csv.contains("# dt=6.25"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn weak_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.cfg",
        "dx = 1/16\ndt_list = 2^-2, 2^-3, 2^-4\nn_replicas = 50\n",
    );
    let out = dir.path().join("w");
    assert_eq!(run(&["weak"], &cfg, &out).status.code(), Some(0));
    let t = std::fs::read_to_string(out.join("weak_telescoped.csv")).unwrap();
    assert!(t.contains("dt,estimate,stderr,levels"));
    assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(out.join("weak.csv").exists());
}

#[test]
fn failing_check_exits_1() {
    // too few rows for a slope fit, so the strong check cannot pass
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.cfg",
        "dx = 1/8\ndt_list = 1/4, 1/8\nn_replicas = 10\n",
    );
    let out = dir.path().join("f");
    assert_eq!(
        run(&["strong", "--check"], &cfg, &out).status.code(),
        Some(1)
    );
    assert!(out.join("strong.csv").exists());
    let out2 = dir.path().join("g");
    assert_eq!(run(&["strong"], &cfg, &out2).status.code(), Some(0));
}
