//! Sweeps the number of greedy samples while keeping the completion budget
//! fixed.

use mirp::beam::BeamConfig;
use mirp::harness::{sweep, toy_suite, RunConfig, Stage, SweepConfig, SweepParam};

fn main() {
    let instances: Vec<_> = toy_suite().into_iter().take(6).map(|i| (i, None)).collect();
    let cfg = SweepConfig {
        param: SweepParam::Q,
        values: vec![1, 2, 3, 4],
        inverse_n: Some(24),
        base: RunConfig {
            beam: BeamConfig::default(),
            stage: Stage::Bs,
            seeds: (1..=3).collect(),
            record_wall_time: false,
            ..RunConfig::default()
        },
    };
    let table = sweep(&instances, &cfg).unwrap();
    println!("beam widths {:?}", table.beam_widths);
    table.write_csv(std::io::stdout().lock()).unwrap();
}
