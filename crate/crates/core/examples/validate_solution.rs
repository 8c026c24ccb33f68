//! Maps a schedule onto the time-expanded network and checks it.

use mirp::evaluator::evaluate_full;
use mirp::greedy::complete_deterministic;
use mirp::instance::generate_toy;
use mirp::solution::Solution;
use mirp::validator::{check, schedule_to_arcflow, ArcKind};

fn main() {
    let inst = generate_toy(6, 2, 12).unwrap();
    let s = complete_deterministic(&Solution::new(), &inst);
    let flow = schedule_to_arcflow(&s, &evaluate_full(&s, &inst), &inst).unwrap();
    for kind in [ArcKind::Source, ArcKind::Operation, ArcKind::InterRegional, ArcKind::Ballast, ArcKind::Waiting, ArcKind::Sink] {
        println!("{kind:?}: {} arcs", flow.of_kind(kind).count());
    }
    println!("{}", check(&s, &inst));
}
