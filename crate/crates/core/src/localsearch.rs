//! Neighbourhood moves over call sequences and the randomized variable
//! neighbourhood descent driver.

use std::fmt;

use rand::seq::SliceRandom;

use crate::evaluator::evaluate;
use crate::instance::{Instance, PortKind};
use crate::seeding::{self, SolverRng};
use crate::solution::{Call, Solution, SolutionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Neighborhood {
    Swap,
    Relocate,
    Replace,
    Insert,
    Remove,
    SwapPort,
}

impl Neighborhood {
    pub const ALL: [Neighborhood; 6] = [
        Neighborhood::Swap,
        Neighborhood::Relocate,
        Neighborhood::Replace,
        Neighborhood::Insert,
        Neighborhood::Remove,
        Neighborhood::SwapPort,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// Exchange the calls at two positions.
    Swap { i: usize, j: usize },
    /// Take the call at `from` out and reinsert it so that it ends up at `to`.
    Relocate { from: usize, to: usize },
    /// Send the call at `i` to another port of the same kind.
    Replace { i: usize, port: usize },
    /// Append a load/discharge pair for `vessel`, in the order its load state
    /// requires.
    Insert { vessel: usize, producer: usize, consumer: usize },
    /// Drop the call at `i` and the next call of the same vessel.
    Remove { i: usize },
    /// Exchange the ports of two same-kind calls of different vessels.
    SwapPort { i: usize, j: usize },
}

impl Move {
    pub fn neighborhood(&self) -> Neighborhood {
        match self {
            Move::Swap { .. } => Neighborhood::Swap,
            Move::Relocate { .. } => Neighborhood::Relocate,
            Move::Replace { .. } => Neighborhood::Replace,
            Move::Insert { .. } => Neighborhood::Insert,
            Move::Remove { .. } => Neighborhood::Remove,
            Move::SwapPort { .. } => Neighborhood::SwapPort,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::Swap { i, j } => write!(f, "swap({i},{j})"),
            Move::Relocate { from, to } => write!(f, "relocate({from}->{to})"),
            Move::Replace { i, port } => write!(f, "replace({i},P{port})"),
            Move::Insert { vessel, producer, consumer } => {
                write!(f, "insert(V{vessel},P{producer},P{consumer})")
            }
            Move::Remove { i } => write!(f, "remove({i})"),
            Move::SwapPort { i, j } => write!(f, "swap_port({i},{j})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoveError {
    #[error("{0} has out-of-range operands")]
    OutOfRange(Move),
    #[error("{0} is not applicable: {1}")]
    NotApplicable(Move, &'static str),
    #[error("{0} breaks load/discharge alternation: {1}")]
    Parity(Move, SolutionError),
}

/// Returns the solution obtained by applying `m` to `s`. The evaluation cache
/// is kept valid up to the first touched position.
pub fn apply_move(s: &Solution, m: Move, inst: &Instance) -> Result<Solution, MoveError> {
    let n = s.len();
    let calls = s.calls();
    let range = |k: usize| if k < n { Ok(()) } else { Err(MoveError::OutOfRange(m)) };
    let mut out = s.clone();
    match m {
        Move::Swap { i, j } => {
            range(i)?;
            range(j)?;
            let (a, b) = (calls[i], calls[j]);
            out.swap_positions(i, j);
            out.check_vessel_parity(&dedup(a.vessel, b.vessel), inst)
                .map_err(|e| MoveError::Parity(m, e))?;
        }
        Move::Relocate { from, to } => {
            range(from)?;
            range(to)?;
            out.relocate(from, to);
            out.check_vessel_parity(&[calls[from].vessel], inst)
                .map_err(|e| MoveError::Parity(m, e))?;
        }
        Move::Replace { i, port } => {
            range(i)?;
            if port >= inst.num_ports() {
                return Err(MoveError::OutOfRange(m));
            }
            if inst.kind(port) != inst.kind(calls[i].port) {
                return Err(MoveError::NotApplicable(m, "port kinds differ"));
            }
            out.set_port(i, port);
        }
        Move::Insert { vessel, producer, consumer } => {
            if vessel >= inst.num_vessels() || producer >= inst.num_ports() || consumer >= inst.num_ports() {
                return Err(MoveError::OutOfRange(m));
            }
            if inst.kind(producer) != PortKind::Production || inst.kind(consumer) != PortKind::Consumption {
                return Err(MoveError::NotApplicable(m, "needs a producer and a consumer"));
            }
            let pair = match s.next_kind(vessel, inst) {
                PortKind::Production => [producer, consumer],
                PortKind::Consumption => [consumer, producer],
            };
            for p in pair {
                out.append(Call::new(p, vessel), inst)
                    .map_err(|e| MoveError::Parity(m, e))?;
            }
        }
        Move::Remove { i } => {
            range(i)?;
            let Some(k) = s.next_vessel(i) else {
                return Err(MoveError::NotApplicable(m, "vessel has no later call"));
            };
            out.remove_positions(&[i, k]);
        }
        Move::SwapPort { i, j } => {
            range(i)?;
            range(j)?;
            let (a, b) = (calls[i], calls[j]);
            if a.vessel == b.vessel {
                return Err(MoveError::NotApplicable(m, "same vessel"));
            }
            if a.port == b.port || inst.kind(a.port) != inst.kind(b.port) {
                return Err(MoveError::NotApplicable(m, "needs distinct ports of one kind"));
            }
            out.set_port(i, b.port);
            out.set_port(j, a.port);
        }
    }
    Ok(out)
}

fn dedup(a: usize, b: usize) -> Vec<usize> {
    if a == b {
        vec![a]
    } else {
        vec![a, b]
    }
}

fn before(p: Option<usize>, bound: usize) -> bool {
    p.is_none_or(|p| p < bound)
}

fn after(p: Option<usize>, bound: usize) -> bool {
    p.is_none_or(|p| p > bound)
}

/// True when `m` only reorders calls that share neither a port nor a vessel
/// with anything they pass over, which leaves every timing and cost unchanged.
pub fn is_redundant(s: &Solution, m: Move) -> bool {
    match m {
        Move::Swap { i, j } => {
            if i == j || s.calls()[i] == s.calls()[j] {
                return true;
            }
            let (i, j) = (i.min(j), i.max(j));
            after(s.next_port(i), j)
                && after(s.next_vessel(i), j)
                && before(s.prev_port(j), i)
                && before(s.prev_vessel(j), i)
        }
        Move::Relocate { from, to } => {
            if from < to {
                after(s.next_port(from), to) && after(s.next_vessel(from), to)
            } else if to < from {
                before(s.prev_port(from), to) && before(s.prev_vessel(from), to)
            } else {
                true
            }
        }
        _ => false,
    }
}

/// Every structurally possible move of one neighbourhood; parity is checked
/// when the move is applied.
pub fn candidate_moves(nb: Neighborhood, s: &Solution, inst: &Instance) -> Vec<Move> {
    let n = s.len();
    let calls = s.calls();
    let mut out = Vec::new();
    match nb {
        Neighborhood::Swap => {
            for i in 0..n {
                for j in i + 1..n {
                    out.push(Move::Swap { i, j });
                }
            }
        }
        Neighborhood::Relocate => {
            for from in 0..n {
                for to in 0..n {
                    if from != to {
                        out.push(Move::Relocate { from, to });
                    }
                }
            }
        }
        Neighborhood::Replace => {
            for (i, c) in calls.iter().enumerate() {
                for port in inst.ports_of_kind(inst.kind(c.port)) {
                    if port != c.port {
                        out.push(Move::Replace { i, port });
                    }
                }
            }
        }
        Neighborhood::Insert => {
            for vessel in 0..inst.num_vessels() {
                for producer in inst.ports_of_kind(PortKind::Production) {
                    for consumer in inst.ports_of_kind(PortKind::Consumption) {
                        out.push(Move::Insert { vessel, producer, consumer });
                    }
                }
            }
        }
        Neighborhood::Remove => {
            for i in 0..n {
                if s.next_vessel(i).is_some() {
                    out.push(Move::Remove { i });
                }
            }
        }
        Neighborhood::SwapPort => {
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (calls[i], calls[j]);
                    if a.vessel != b.vessel && a.port != b.port && inst.kind(a.port) == inst.kind(b.port) {
                        out.push(Move::SwapPort { i, j });
                    }
                }
            }
        }
    }
    out
}

/// Candidate moves that survive the redundancy filter.
pub fn useful_moves(nb: Neighborhood, s: &Solution, inst: &Instance) -> Vec<Move> {
    let mut moves = candidate_moves(nb, s, inst);
    moves.retain(|&m| !is_redundant(s, m));
    moves
}

/// A uniformly random applicable, non-redundant move of `nb` together with
/// the resulting solution.
pub fn random_move(nb: Neighborhood, s: &Solution, inst: &Instance, rng: &mut SolverRng) -> Option<(Move, Solution)> {
    let mut moves = useful_moves(nb, s, inst);
    moves.shuffle(rng);
    moves
        .into_iter()
        .find_map(|m| apply_move(s, m, inst).ok().map(|t| (m, t)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RvndStats {
    pub improvements: usize,
    pub evaluations: usize,
}

/// Randomized variable neighbourhood descent with first improvement.
pub fn rvnd(s: &Solution, inst: &Instance, seed: u64) -> Solution {
    rvnd_with_stats(s, inst, seed).0
}

pub fn rvnd_with_stats(s: &Solution, inst: &Instance, seed: u64) -> (Solution, RvndStats) {
    let mut rng = seeding::rng(seed);
    let mut cur = s.clone();
    let mut cur_cost = evaluate(&mut cur, inst);
    let mut stats = RvndStats::default();
    'restart: loop {
        let mut order = Neighborhood::ALL;
        order.shuffle(&mut rng);
        for nb in order {
            let mut moves = useful_moves(nb, &cur, inst);
            moves.shuffle(&mut rng);
            for m in moves {
                let Ok(mut cand) = apply_move(&cur, m, inst) else {
                    continue;
                };
                stats.evaluations += 1;
                let cost = evaluate(&mut cand, inst);
                if cost < cur_cost {
                    cur = cand;
                    cur_cost = cost;
                    stats.improvements += 1;
                    continue 'restart;
                }
            }
        }
        break;
    }
    (cur, stats)
}
