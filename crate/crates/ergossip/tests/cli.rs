use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ergossip"));
    c.env_remove("ERGOSSIP_THREADS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn graph_and_analysis_commands() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(p, &["graph", "--kind", "barbell", "--clique-size", "5", "--out", "g.edges"]);
    assert!(read(p.join("g.edges")).starts_with("10 21\n"));

    let s = ok(p, &["resistance", "--graph", "g.edges", "--out", "R.csv"]);
    assert!(s.contains("edge resistance sum 9"));
    let r = read(p.join("R.csv"));
    assert!(r.starts_with("i,j,R\n"));
    let bridge: f64 = r
        .lines()
        .find_map(|l| l.strip_prefix("5,6,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((bridge - 1.0).abs() < 1e-12);
    assert_eq!(r.lines().count(), 1 + 45);

    ok(p, &["spectrum", "--graph", "g.edges", "--scheme", "resistance", "--out", "spec.csv"]);
    let spec = read(p.join("spec.csv"));
    assert_eq!(spec.lines().count(), 11);
    assert!(spec.lines().nth(9).unwrap().starts_with("9,0.98826968"));

    let c = ok(p, &["conductance", "--graph", "g.edges", "--scheme", "uniform", "--bruteforce", "--clique-size", "5"]);
    assert!(c.contains("phi_bruteforce 0.004"));
    assert!(c.contains("argmin 1 2 3 4 5"));
    assert!(c.contains("phi_closed_form 0.004"));

    let b = ok(p, &["bounds", "--graph", "g.edges", "--scheme", "resistance", "--eps", "0.01"]);
    assert!(b.contains("averaging_time_ticks [195.14"));
    assert!(b.contains("diameter 3"));
}

#[test]
fn stochastic_outputs_are_byte_identical() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(p, &["graph", "--kind", "small_world", "--nodes", "12", "--seed", "3", "--out", "g.edges"]);
    for (tag, threads) in [("a", "1"), ("b", "2")] {
        ok(p, &["--seed", "42", "--threads", threads, "gossip", "--graph", "g.edges", "--scheme", "resistance", "--trials", "120", "--out", &format!("t{tag}.csv")]);
        ok(p, &["--seed", "7", "drk", "--graph", "g.edges", "--iters", "3000", "--trace", &format!("d{tag}.csv")]);
        ok(p, &["--seed", "3", "optim", "--graph", "g.edges", "--flavor", "resistance_extra", "--instances", "2", "--rounds", "50", "--out", &format!("o{tag}.csv")]);
    }
    for f in ["t", "d", "o"] {
        assert_eq!(
            std::fs::read(p.join(format!("{f}a.csv"))).unwrap(),
            std::fs::read(p.join(format!("{f}b.csv"))).unwrap()
        );
    }
    let t = read(p.join("ta.csv"));
    assert!(t.starts_with("trial,k_hit,final_error\n0,"));
    assert!(!t.contains('\r'));
    assert!(read(p.join("oa.csv")).starts_with("instance,round,subopt,fval,consensus_violation\n0,0,"));
}

#[test]
fn gossip_trace_and_plotdata() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(p, &["graph", "--kind", "barbell", "--clique-size", "4", "--out", "g.edges"]);
    ok(p, &["--seed", "1", "gossip", "--graph", "g.edges", "--scheme", "metropolis", "--trace", "run.csv"]);
    let run_csv = read(p.join("run.csv"));
    let mut lines = run_csv.lines();
    assert_eq!(lines.next(), Some("k,edge_i,edge_j,rel_error"));
    assert_eq!(lines.next(), Some("0,,,1"));
    let pd = ok(p, &["plotdata", "--csv", "run.csv", "--columns", "k,rel_error", "--transform", "log"]);
    assert!(pd.starts_with("# k rel_error\n0 0\n"));
    let bad = run(p, &["plotdata", "--csv", "run.csv", "--columns", "k,nope"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("missing column `nope`"));
}

#[test]
fn global_out_dir_and_thread_override() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(p, &["--out-dir", "nested/dir", "graph", "--kind", "complete", "--nodes", "4", "--out", "k4.edges"]);
    assert!(p.join("nested/dir/k4.edges").exists());

    let out = bin()
        .current_dir(p)
        .env("ERGOSSIP_THREADS", "zero")
        .args(["graph", "--kind", "complete", "--nodes", "4", "--out", "x.edges"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ERGOSSIP_THREADS"));
    let out = bin()
        .current_dir(p)
        .env("ERGOSSIP_THREADS", "2")
        .args(["--threads", "0", "graph", "--kind", "complete", "--nodes", "4", "--out", "y.edges"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn bad_inputs_are_reported() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    std::fs::write(p.join("bad.edges"), "3 2\n1 2 1\n2 9 1\n").unwrap();
    let out = run(p, &["spectrum", "--graph", "bad.edges", "--scheme", "uniform", "--out", "s.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.edges:3"));
    std::fs::write(p.join("split.edges"), "4 2\n1 2 1\n3 4 1\n").unwrap();
    let out = run(p, &["spectrum", "--graph", "split.edges", "--scheme", "uniform", "--out", "s.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));
    let out = run(p, &["graph", "--kind", "barbell", "--out", "g.edges"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--clique-size"));
    ok(p, &["graph", "--kind", "barbell", "--clique-size", "3", "--out", "g.edges"]);
    let out = run(p, &["optim", "--graph", "g.edges", "--flavor", "uniform_dpga", "--out", "m.csv"]);
    assert!(!out.status.success());
}

#[test]
fn empty_parameter_list_writes_nothing() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    std::fs::write(p.join("e.cfg"), "experiment=result2_barbell\nclique_sizes=\nout_dir=res\n").unwrap();
    let out = run(p, &["experiment", "--config", "e.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("clique_sizes"));
    assert!(!p.join("res").exists());
}

#[test]
fn conductance_experiment_columns_agree() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    std::fs::write(
        p.join("e.cfg"),
        "experiment=result1_cbarbell\nclique_sizes=4\nclique_counts=2,3,4\nout_dir=res\nchecks=false\n",
    )
    .unwrap();
    ok(p, &["experiment", "--config", "e.cfg"]);
    let csv = read(p.join("res/result1_cbarbell.csv"));
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|x| x == name).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let diff: f64 = rec[col("abs_diff")].parse().unwrap();
        assert!(diff <= 1e-12, "{rec:?}");
        assert_eq!(&rec[col("argmin_matches")], "true");
        rows += 1;
    }
    assert_eq!(rows, 6);
    assert!(read(p.join("res/summary.txt")).ends_with("status ok\n"));
}

#[test]
fn summary_reports_checks_and_exit_status() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    std::fs::write(
        p.join("ok.cfg"),
        "experiment=result3_bounds\nnode_counts=10\ninstances=2\nclique_sizes=3\nout_dir=ok\n",
    )
    .unwrap();
    let s = ok(p, &["--seed", "9", "experiment", "--config", "ok.cfg"]);
    assert!(s.contains("PASS  7 diameter_and_hitting_time_bounds"));
    assert!(s.contains("PASS  8 foster_and_barbell_resistances"));
    for f in ["diameter.csv", "hitting.csv", "mixing.csv", "foster.csv", "summary.txt"] {
        assert!(p.join("ok").join(f).exists(), "{f}");
    }

    // The c-barbell experiment reports criterion 2, which fails on the path
    // instance, so the run must exit nonzero after writing everything.
    std::fs::write(p.join("bad.cfg"), "experiment=result1_cbarbell\nout_dir=bad\n").unwrap();
    let out = run(p, &["experiment", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    let summary = read(p.join("bad/summary.txt"));
    assert!(summary.contains("FAIL  2 cbarbell_conductance_bruteforce"));
    assert!(summary.contains("PASS  3 cheeger_sandwich"));
    assert!(summary.ends_with("status failed\n"));
    assert!(p.join("bad/result1_cbarbell.csv").exists());
}

#[test]
fn experiment_outputs_are_reproducible() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    for dir in ["a", "b"] {
        std::fs::write(
            p.join(format!("{dir}.cfg")),
            format!("experiment=result2_barbell\nclique_sizes=3,4\ntrials=100\neps=0.05\nout_dir={dir}\nchecks=false\nseed=11\n"),
        )
        .unwrap();
        ok(p, &["experiment", "--config", &format!("{dir}.cfg")]);
    }
    for f in ["barbell.csv", "barbell_trials.csv", "spectra.csv", "barbell.dat"] {
        assert_eq!(read(p.join("a").join(f)), read(p.join("b").join(f)), "{f}");
    }
}
