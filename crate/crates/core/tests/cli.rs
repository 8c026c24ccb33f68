use std::path::Path;
use std::process::{Command, Output};

use mirp::harness::{read_main_csv, STAGE_HEADER};

fn mirp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirp")).args(args).output().expect("binary runs")
}

fn gen_toy(dir: &Path) -> String {
    let path = dir.join("toy.json");
    let out = mirp(&["gen-toy", "--seed", "4", "--consumers", "2", "--horizon", "12", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_reports_dumps_and_a_valid_solution() {
    let dir = tempfile::tempdir().unwrap();
    let toy = gen_toy(dir.path());
    let out_dir = dir.path().join("out");
    let beam = dir.path().join("beam.csv");
    let ils = dir.path().join("ils.csv");
    let out = mirp(&[
        "solve", "--instance", &toy, "--seed", "3", "--beam-width", "8", "--ils-iterations", "40",
        "--best-known", "80.20", "--out", out_dir.to_str().unwrap(),
        "--dump-beam", beam.to_str().unwrap(), "--dump-ils", ils.to_str().unwrap(), "--trace",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("total time"));

    let rows = read_main_csv(std::fs::File::open(out_dir.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].beam_width, 8);
    assert!(rows[0].best_gap.unwrap() >= 0.0);
    let stages = std::fs::read_to_string(out_dir.join("stages.csv")).unwrap();
    assert_eq!(stages.lines().next().unwrap(), STAGE_HEADER.join(","));
    assert!(stages.lines().nth(1).unwrap().contains(",3,ils,"));
    assert!(std::fs::read_to_string(&beam).unwrap().starts_with("level,node,score,pool_best"));
    assert_eq!(std::fs::read_to_string(&ils).unwrap().lines().count(), 41);
    assert!(out_dir.join("trace.txt").exists());

    let sol = out_dir.join("solution.txt");
    let check = mirp(&["validate", &toy, sol.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&check.stdout).contains("status             clean"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let toy = gen_toy(dir.path());
    let missing = dir.path().join("missing.json");
    assert_eq!(mirp(&["solve", "--instance", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mirp(&["solve", "--instance", &toy, "--beam-width", "0"]).status.code(), Some(2));
    assert_eq!(mirp(&["solve", "--instance", &toy, "--stage", "xyz"]).status.code(), Some(2));
    assert_eq!(mirp(&["sweep", "--param", "n", "--values", "2", "--inverse-n", "4"]).status.code(), Some(2));
}

#[test]
fn validate_flags_a_parity_breaking_solution() {
    let dir = tempfile::tempdir().unwrap();
    let toy = gen_toy(dir.path());
    let sol = dir.path().join("bad.txt");
    // the vessel starts empty, so a consumer call first breaks alternation
    std::fs::write(&sol, "1,0\n").unwrap();
    let out = mirp(&["validate", &toy, sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("VIOLATIONS"));
    std::fs::write(&sol, "zero,0\n").unwrap();
    assert_eq!(mirp(&["validate", &toy, sol.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let toy = gen_toy(dir.path());
    let table = dir.path().join("sweep.csv");
    let out = mirp(&[
        "sweep", "--param", "w", "--values", "2,3", "--instance", &toy, "--seeds", "2",
        "--beam-width", "4", "--stage", "bs", "--out", table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("Statistic,w=2,w=3\nAverage,"));
    assert_eq!(text.lines().count(), 3);
}
