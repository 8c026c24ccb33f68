//! Runs iterated local search from the greedy solution and shows the
//! acceptance schedule.

use mirp::greedy::complete_deterministic;
use mirp::ils::{run_ils, IlsConfig};
use mirp::instance::generate_toy;
use mirp::solution::Solution;

fn main() {
    let inst = generate_toy(5, 2, 14).unwrap();
    let start = complete_deterministic(&Solution::new(), &inst);
    let cfg = IlsConfig { iterations: 200, seed: 3, ..IlsConfig::default() };
    let out = run_ils(&start, &inst, &cfg);

    for it in out.trace.iter().filter(|it| it.iter % 20 == 0) {
        println!("iter {:>3}  current {:>9}  best {:>9}  T {:>8.2}", it.iter, it.current_cost, it.best_cost, it.temperature);
    }
    let accepted = out.trace.iter().filter(|it| it.accepted).count();
    let restored = out.trace.iter().filter(|it| it.restored).count();
    println!("{accepted} accepted, {restored} restores");
    println!("{} -> {}", start.evaluation().unwrap().total_cost, out.best_cost());
}
