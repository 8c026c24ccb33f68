//! Improves a greedy solution with randomized variable neighbourhood descent.

use mirp::evaluator::evaluate;
use mirp::greedy::complete_deterministic;
use mirp::instance::generate_toy;
use mirp::localsearch::{rvnd_with_stats, useful_moves, Neighborhood};
use mirp::solution::Solution;

fn main() {
    let inst = generate_toy(3, 2, 12).unwrap();
    let mut start = complete_deterministic(&Solution::new(), &inst);
    let before = evaluate(&mut start, &inst);
    for nb in Neighborhood::ALL {
        println!("{nb:?}: {} candidate moves", useful_moves(nb, &start, &inst).len());
    }
    let (best, stats) = rvnd_with_stats(&start, &inst, 7);
    println!(
        "{before} -> {} after {} improvement(s) and {} evaluations",
        best.evaluation().unwrap().total_cost,
        stats.improvements,
        stats.evaluations
    );
}
