//! Completes an empty solution with the deterministic greedy, then scores a
//! partial solution with randomized completions.

use mirp::greedy::{complete_deterministic, priority_order, score_partial, GreedyConfig};
use mirp::instance::generate_toy;
use mirp::solution::Solution;

fn main() {
    let inst = generate_toy(5, 2, 14).unwrap();
    let det = complete_deterministic(&Solution::new(), &inst);
    println!("deterministic greedy: {} calls, cost {}", det.len(), det.evaluation().unwrap().total_cost);
    print!("{}", det.to_text());

    let partial = Solution::from_calls(det.calls()[..2].to_vec(), &inst).unwrap();
    println!("next calls by priority: {:?}", priority_order(&partial, &inst));
    let score = score_partial(&partial, &inst, &GreedyConfig { q: 5, ..GreedyConfig::default() }, 42);
    println!("five completions {:?} -> median {}", score.costs.iter().map(|c| c.to_string()).collect::<Vec<_>>(), score.median);
}
