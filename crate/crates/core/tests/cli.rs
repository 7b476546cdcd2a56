use std::path::Path;
use std::process::{Command, Output};

fn ternhash(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ternhash"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = stdout(&ternhash(d, &[
        "synth", "--classes", "4", "--bits", "16", "--per-class", "25", "--seed", "1", "--out", "f.trnh",
    ]));
    assert!(s.contains("samples: 100"));
    let s = stdout(&ternhash(d, &["fit", "--features", "f.trnh", "--bins", "40", "--out", "t.trnt"]));
    assert!(s.contains("bits: 16") && s.contains("logic: kleene"));
    stdout(&ternhash(d, &["encode", "--features", "f.trnh", "--thresholds", "t.trnt", "--out", "c.trnc"]));
    stdout(&ternhash(d, &["encode", "--features", "f.trnh", "--mode", "binary", "--out", "b.trnc"]));

    let ter = stdout(&ternhash(d, &["eval", "--queries", "c.trnc", "--database", "c.trnc", "--k", "10", "--exhaustive"]));
    assert!(ter.contains("metric: kleene"));
    assert!(ter.contains("ambiguity_mode: exhaustive"));
    let bin = stdout(&ternhash(d, &["eval", "--queries", "b.trnc", "--database", "b.trnc", "--hist-out", "h.csv"]));
    assert!(bin.contains("metric: binary"));
    let hist = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert!(hist.starts_with("distance,pos,neg"));

    let h = stdout(&ternhash(d, &["hist", "--queries", "c.trnc", "--database", "c.trnc", "--metric", "luka"]));
    assert!(h.starts_with("distance,pos,neg"));

    // Binary codes with a ternary metric is a parameter error.
    let o = ternhash(d, &["eval", "--queries", "b.trnc", "--database", "b.trnc", "--metric", "kleene"]);
    assert_eq!(o.status.code(), Some(8));
}

#[test]
fn convert_between_csv_and_binary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout(&ternhash(d, &["synth", "--classes", "3", "--bits", "5", "--per-class", "10", "--out", "a.trnh"]));
    stdout(&ternhash(d, &["convert", "--input", "a.trnh", "--output", "a.csv"]));
    stdout(&ternhash(d, &["convert", "--input", "a.csv", "--output", "b.trnh"]));
    assert_eq!(std::fs::read(d.join("a.trnh")).unwrap(), std::fs::read(d.join("b.trnh")).unwrap());
    // Fitting straight from CSV works too.
    stdout(&ternhash(d, &["fit", "--features", "a.csv", "--out", "t.trnt"]));
}

#[test]
fn help_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = ternhash(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout);
    for sub in ["synth", "fit", "encode", "eval", "hist", "bench", "convert"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    assert_eq!(ternhash(dir.path(), &["eval", "--help"]).status.code(), Some(0));
    assert_eq!(ternhash(dir.path(), &["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(ternhash(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ternhash(d, &["fit", "--features", "missing.trnh", "--out", "t.trnt"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    std::fs::write(d.join("junk.trnh"), b"nope nope nope").unwrap();
    assert_eq!(ternhash(d, &["fit", "--features", "junk.trnh", "--out", "t.trnt"]).status.code(), Some(4));
    stdout(&ternhash(d, &["synth", "--bits", "4", "--per-class", "5", "--out", "f.trnh"]));
    assert_eq!(ternhash(d, &["fit", "--features", "f.trnh", "--bins", "1", "--out", "t.trnt"]).status.code(), Some(8));
    assert_eq!(ternhash(d, &["synth", "--classes", "1", "--out", "x.trnh"]).status.code(), Some(8));
}

#[test]
fn small_bench_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = stdout(&ternhash(dir.path(), &["bench", "--kind", "kleene", "--length", "64", "--n-db", "200", "--reps", "2"]));
    assert!(s.contains("kleene"));
    let table = stdout(&ternhash(dir.path(), &["bench", "--length", "16", "--length", "32", "--n-db", "100", "--reps", "1"]));
    assert!(table.contains("16") && table.contains("matmul"));
}
