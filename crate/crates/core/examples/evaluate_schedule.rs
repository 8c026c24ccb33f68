//! Evaluates a hand-written call sequence on the reference toy and prints the
//! cost breakdown and the per-period trace.

use mirp::evaluator::{evaluate_full, write_trace};
use mirp::harness::toy1;
use mirp::solution::{Call, Solution};

fn main() {
    let inst = toy1();
    // producer 0, consumer 1, one vessel: two round trips
    let calls = [(0, 0), (1, 0), (0, 0), (1, 0)].map(|(p, v)| Call::new(p, v));
    let s = Solution::from_calls(calls.to_vec(), &inst).expect("calls alternate");
    let e = evaluate_full(&s, &inst);

    println!("routing {}  penalty {}  reward {}  total {}", e.routing_cost, e.penalty_cost, e.reward_credit, e.total_cost);
    println!("{} call(s) past the horizon, fleet finishes at {}", e.truncated_count, e.fleet_finish);
    write_trace(&e, std::io::stdout().lock()).unwrap();
}
