//! Runs the beam search constructor and prints per-level statistics.

use mirp::beam::{run_beam_search, BeamConfig};
use mirp::greedy::complete_deterministic;
use mirp::instance::generate_toy;
use mirp::solution::Solution;

fn main() {
    let inst = generate_toy(9, 2, 14).unwrap();
    let cfg = BeamConfig { beam_width: 20, max_children: 2, seed: 1, ..BeamConfig::default() };
    let out = run_beam_search(&inst, &cfg);

    for l in &out.levels {
        println!("level {:>2}: {:>2} nodes, {:>3} completions, pool best {}", l.level, l.scores.len(), l.completions, l.pool_best);
    }
    let greedy = complete_deterministic(&Solution::new(), &inst);
    println!("beam best {} ({} pool members), deterministic greedy {}", out.best_cost(), out.pool.len(), greedy.evaluation().unwrap().total_cost);
}
