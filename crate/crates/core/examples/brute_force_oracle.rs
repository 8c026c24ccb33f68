//! Solves small toys exactly and compares the greedy against the optimum.

use mirp::greedy::complete_deterministic;
use mirp::harness::{toy1, toy_suite};
use mirp::solution::Solution;
use mirp::validator::brute_force_optimum;

fn main() {
    for inst in std::iter::once(toy1()).chain(toy_suite().into_iter().take(5)) {
        let opt = brute_force_optimum(&inst, usize::MAX).unwrap();
        let greedy = complete_deterministic(&Solution::new(), &inst);
        println!(
            "{:<16} optimum {:>9} ({} calls, {} nodes)  greedy {:>9}",
            inst.meta.name,
            opt.cost,
            opt.best.len(),
            opt.nodes,
            greedy.evaluation().unwrap().total_cost
        );
    }
}
