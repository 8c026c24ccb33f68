//! Runs beam search, local search and ILS over several seeds and writes the
//! three report files to a temporary directory.

use mirp::beam::BeamConfig;
use mirp::harness::{run, toy_suite, write_reports, RunConfig, Stage};

fn main() {
    let inst = toy_suite().swap_remove(3);
    let cfg = RunConfig {
        beam: BeamConfig { beam_width: 50, ..BeamConfig::default() },
        seeds: (1..=4).collect(),
        ..RunConfig::default()
    };
    let record = run(&inst, &cfg).unwrap();
    for s in &record.seeds {
        let costs: Vec<String> = [Stage::Bs, Stage::Ls, Stage::Ils].iter().map(|&st| s.stage(st).unwrap().cost.to_string()).collect();
        println!("seed {}: {}", s.seed, costs.join(" -> "));
    }
    let dir = std::env::temp_dir().join("mirp-staged-pipeline");
    let paths = write_reports(std::slice::from_ref(&record), &dir).unwrap();
    println!("{}", std::fs::read_to_string(paths.main).unwrap());
}
