//! Independent checks of evaluated solutions against the time-expanded
//! arc-flow formulation, and an exhaustive optimum for tiny instances.
//!
//! Nodes are port-time pairs `(j, t)` for `t = 0..=T` plus a virtual source
//! and sink, with one commodity per vessel class. A vessel enters at its
//! ready node, travels between ports on loaded (towards a consumer) or ballast
//! (towards a producer) arcs, waits at anchor on waiting arcs, occupies a berth
//! on an operation arc `(j, start) -> (j, end)`, and leaves through the sink
//! from the node where its last operation ends.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::evaluator::{evaluate, evaluate_full, leg_cost, Breach, EvalResult, ScheduledCall, Timeline};
use crate::instance::{Instance, PortKind};
use crate::money::Money;
use crate::solution::{Call, Solution};

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Source,
    At { port: usize, t: usize },
    Sink,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Source => write!(f, "source"),
            Node::At { port, t } => write!(f, "(P{port},{t})"),
            Node::Sink => write!(f, "sink"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Source,
    Sink,
    Waiting,
    Operation,
    /// Loaded leg towards a consumer.
    InterRegional,
    /// Empty leg towards a producer.
    Ballast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub kind: ArcKind,
    pub class: usize,
    pub vessel: usize,
    pub from: Node,
    pub to: Node,
    pub flow: i64,
    pub cost: Money,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArcFlow {
    pub arcs: Vec<Arc>,
}

impl ArcFlow {
    pub fn of_kind(&self, kind: ArcKind) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(move |a| a.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidatorError {
    #[error("evaluation does not describe the solution (call {0})")]
    StaleEvaluation(usize),
    #[error("search space exceeds {limit} nodes")]
    SearchSpaceTooLarge { limit: u64 },
}

/// Converts an evaluated solution into vessel paths through the arc-flow
/// network. Truncated calls are left out.
pub fn schedule_to_arcflow(s: &Solution, eval: &EvalResult, inst: &Instance) -> Result<ArcFlow, ValidatorError> {
    if eval.schedule.len() != s.len() {
        return Err(ValidatorError::StaleEvaluation(eval.schedule.len().min(s.len())));
    }
    if let Some(i) = (0..s.len()).find(|&i| eval.schedule[i].call() != s.calls()[i]) {
        return Err(ValidatorError::StaleEvaluation(i));
    }
    Ok(build_arcs(&eval.schedule, inst))
}

fn build_arcs(schedule: &[ScheduledCall], inst: &Instance) -> ArcFlow {
    let mut arcs = Vec::new();
    for (v, vessel) in inst.vessels.iter().enumerate() {
        let class = vessel.class;
        let mut push = |kind, from, to, cost| {
            arcs.push(Arc {
                kind,
                class,
                vessel: v,
                from,
                to,
                flow: 1,
                cost,
            })
        };
        let mut at = (vessel.start_port, vessel.ready_time);
        push(ArcKind::Source, Node::Source, node(at), Money::ZERO);
        for sc in schedule.iter().filter(|sc| sc.vessel == v && !sc.truncated) {
            if sc.port != at.0 {
                let kind = match inst.kind(sc.port) {
                    PortKind::Consumption => ArcKind::InterRegional,
                    PortKind::Production => ArcKind::Ballast,
                };
                let leg = leg_cost(inst, v, at.0, sc.port) - Money::from_f64(inst.ports[sc.port].port_fee);
                push(kind, node(at), node((sc.port, sc.arrival)), leg);
            }
            for t in sc.arrival..sc.berth_start {
                push(ArcKind::Waiting, node((sc.port, t)), node((sc.port, t + 1)), Money::ZERO);
            }
            push(
                ArcKind::Operation,
                node((sc.port, sc.berth_start)),
                node((sc.port, sc.berth_end)),
                Money::from_f64(inst.ports[sc.port].port_fee),
            );
            at = (sc.port, sc.berth_end);
        }
        push(ArcKind::Sink, node(at), Node::Sink, Money::ZERO);
    }
    ArcFlow { arcs }
}

fn node((port, t): (usize, usize)) -> Node {
    Node::At { port, t }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResidual {
    pub class: usize,
    pub node: Node,
    /// Inflow minus outflow, after accounting for source supply and sink demand.
    pub residual: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryResidual {
    pub port: usize,
    pub t: usize,
    /// Recomputed stock at the end of period `t`.
    pub inventory: f64,
    /// Distance outside the bounds, or from the evaluator's stock.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BerthResidual {
    pub port: usize,
    pub t: usize,
    /// Vessels operating beyond the berth limit.
    pub excess: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorReport {
    pub flow_balance_residuals: Vec<FlowResidual>,
    pub inventory_residuals: Vec<InventoryResidual>,
    pub berth_residuals: Vec<BerthResidual>,
    pub domain_violations: Vec<String>,
    /// Model objective (negative total cost).
    pub objective: Money,
    pub evaluator_total: Money,
    pub matches_evaluator: bool,
}

impl ValidatorReport {
    pub fn is_clean(&self) -> bool {
        self.flow_balance_residuals.is_empty()
            && self.inventory_residuals.is_empty()
            && self.berth_residuals.is_empty()
            && self.domain_violations.is_empty()
            && self.matches_evaluator
    }

    pub fn objective_gap(&self) -> Money {
        (self.objective + self.evaluator_total).abs()
    }
}

impl fmt::Display for ValidatorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objective          {}", self.objective)?;
        writeln!(f, "evaluator total    {}", self.evaluator_total)?;
        writeln!(f, "matches evaluator  {} (difference {})", self.matches_evaluator, self.objective_gap())?;
        writeln!(f, "flow balance       {} residual(s)", self.flow_balance_residuals.len())?;
        for r in &self.flow_balance_residuals {
            writeln!(f, "  class {} at {}: {}", r.class, r.node, r.residual)?;
        }
        writeln!(f, "inventory          {} residual(s)", self.inventory_residuals.len())?;
        for r in &self.inventory_residuals {
            writeln!(f, "  P{} period {}: stock {} off by {}", r.port, r.t, r.inventory, r.amount)?;
        }
        writeln!(f, "berths             {} residual(s)", self.berth_residuals.len())?;
        for r in &self.berth_residuals {
            writeln!(f, "  P{} period {}: {} over the limit", r.port, r.t, r.excess)?;
        }
        writeln!(f, "domain             {} violation(s)", self.domain_violations.len())?;
        for d in &self.domain_violations {
            writeln!(f, "  {d}")?;
        }
        write!(f, "status             {}", if self.is_clean() { "clean" } else { "VIOLATIONS" })
    }
}

/// Evaluates `s` from scratch and checks the result.
pub fn check(s: &Solution, inst: &Instance) -> ValidatorReport {
    let eval = evaluate_full(s, inst);
    check_schedule(s, &eval, inst).expect("fresh evaluation matches its solution")
}

/// Checks an evaluation as given, so corrupted schedules can be inspected.
pub fn check_schedule(s: &Solution, eval: &EvalResult, inst: &Instance) -> Result<ValidatorReport, ValidatorError> {
    let flow = schedule_to_arcflow(s, eval, inst)?;
    let t_len = inst.horizon;
    let mut domain = Vec::new();

    // flow conservation per class
    let mut supply = vec![0i64; inst.vessel_classes.len()];
    for v in &inst.vessels {
        supply[v.class] += 1;
    }
    let mut balance: BTreeMap<(usize, Node), i64> = BTreeMap::new();
    for a in &flow.arcs {
        *balance.entry((a.class, a.from)).or_default() -= a.flow;
        *balance.entry((a.class, a.to)).or_default() += a.flow;
    }
    for (c, &n) in supply.iter().enumerate() {
        *balance.entry((c, Node::Source)).or_default() += n;
        *balance.entry((c, Node::Sink)).or_default() -= n;
    }
    let flow_balance_residuals = balance
        .into_iter()
        .filter(|&(_, r)| r != 0)
        .map(|((class, node), residual)| FlowResidual { class, node, residual })
        .collect();

    // arc domains and timing
    for a in &flow.arcs {
        if a.flow < 0 {
            domain.push(format!("negative flow on {:?} arc {} -> {}", a.kind, a.from, a.to));
        }
        if matches!(a.kind, ArcKind::InterRegional | ArcKind::Ballast) && !(0..=1).contains(&a.flow) {
            domain.push(format!("non-binary travel flow on {} -> {}", a.from, a.to));
        }
        for n in [a.from, a.to] {
            if let Node::At { t, .. } = n {
                if t > t_len {
                    domain.push(format!("{:?} arc of V{} reaches {} beyond the horizon", a.kind, a.vessel, n));
                }
            }
        }
        if let (Node::At { port: p, t: s }, Node::At { port: q, t: e }) = (a.from, a.to) {
            let expected = match a.kind {
                ArcKind::Waiting => Some(1),
                ArcKind::Operation => Some(inst.op_duration),
                ArcKind::InterRegional | ArcKind::Ballast => Some(inst.travel(a.vessel, p, q)),
                _ => None,
            };
            if expected.is_some_and(|d| e != s + d) {
                domain.push(format!("{:?} arc of V{} {} -> {} has the wrong duration", a.kind, a.vessel, a.from, a.to));
            }
        }
    }

    // berth occupancy
    let mut occupancy = vec![vec![0u32; t_len]; inst.num_ports()];
    let mut transfers = vec![vec![0.0f64; t_len + 1]; inst.num_ports()];
    for a in flow.of_kind(ArcKind::Operation) {
        let (Node::At { port, t: s }, Node::At { t: e, .. }) = (a.from, a.to) else {
            continue;
        };
        for o in occupancy[port].iter_mut().take(e.min(t_len)).skip(s) {
            *o += a.flow as u32;
        }
        if e <= t_len {
            let q = inst.vessel_classes[a.class].capacity * a.flow as f64;
            transfers[port][e] += match inst.kind(port) {
                PortKind::Production => -q,
                PortKind::Consumption => q,
            };
        }
    }
    let mut berth_residuals = Vec::new();
    for (j, port) in inst.ports.iter().enumerate() {
        for (t, &n) in occupancy[j].iter().enumerate() {
            if n > port.berth_limit {
                berth_residuals.push(BerthResidual {
                    port: j,
                    t,
                    excess: n - port.berth_limit,
                });
            }
        }
    }

    // inventory balance with the evaluator's spot charter
    let mut inventory_residuals = Vec::new();
    let mut penalty = Money::ZERO;
    for (j, port) in inst.ports.iter().enumerate() {
        let mut s = port.inv_init;
        for t in 0..t_len {
            let alpha = eval.spot_charter[j][t];
            if alpha < -TOL {
                domain.push(format!("negative spot charter at P{j} period {t}"));
            }
            let correction = match eval.breach[j][t] {
                Some(Breach::Shortfall) => alpha,
                Some(Breach::Overflow) => -alpha,
                None => {
                    if alpha.abs() > TOL {
                        domain.push(format!("spot charter without breach at P{j} period {t}"));
                    }
                    0.0
                }
            };
            s += port.kind.sign() * port.rate[t] + transfers[j][t + 1] + correction;
            let outside = (port.inv_min[t] - s).max(s - port.inv_max[t]);
            let mismatch = (s - eval.inventory[j][t + 1]).abs();
            let amount = outside.max(mismatch);
            if amount > TOL {
                inventory_residuals.push(InventoryResidual { port: j, t, inventory: s, amount });
            }
            penalty += Money::from_f64(port.penalty[t] * alpha);
        }
    }

    // objective: arc costs, spot charter penalties and the early-finish reward
    let routing: Money = flow.arcs.iter().map(|a| a.cost * a.flow).sum();
    let finish = flow
        .of_kind(ArcKind::Sink)
        .filter_map(|a| match a.from {
            Node::At { t, .. } => Some(t),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let reward = Money::from_f64(inst.reward_early_finish * t_len.saturating_sub(finish) as f64);
    let objective = -(routing + penalty - reward);
    let matches_evaluator = (objective + eval.total_cost).abs() <= Money::from_cents(1);

    Ok(ValidatorReport {
        flow_balance_residuals,
        inventory_residuals,
        berth_residuals,
        domain_violations: domain,
        objective,
        evaluator_total: eval.total_cost,
        matches_evaluator,
    })
}

// --- exhaustive optimum ------------------------------------------------------

pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct BruteForce {
    pub best: Solution,
    pub cost: Money,
    /// Sequences evaluated.
    pub nodes: u64,
}

/// Minimum-cost sequence among all parity-valid sequences of at most
/// `max_calls` non-truncated calls. Sequences that differ only by reordering
/// calls with no port or vessel in common are enumerated once. Ties resolve to
/// the lexicographically smallest sequence.
pub fn brute_force_optimum(inst: &Instance, max_calls: usize) -> Result<BruteForce, ValidatorError> {
    brute_force_with_limit(inst, max_calls, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_with_limit(inst: &Instance, max_calls: usize, limit: u64) -> Result<BruteForce, ValidatorError> {
    let counter = AtomicU64::new(1);
    let mut root = Solution::new();
    let root_cost = evaluate(&mut root, inst);

    let firsts = children(&root, inst);
    let results: Vec<Option<(Money, Vec<Call>)>> = if max_calls == 0 {
        Vec::new()
    } else {
        firsts
            .par_iter()
            .map(|&c| {
                let mut s = root.clone();
                s.push_raw(c);
                let mut best = None;
                dfs(&mut s, inst, max_calls, limit, &counter, &mut best);
                best
            })
            .collect()
    };
    if counter.load(Ordering::Relaxed) > limit {
        return Err(ValidatorError::SearchSpaceTooLarge { limit });
    }
    let mut best = (root_cost, Vec::new());
    for r in results.into_iter().flatten() {
        if r < best {
            best = r;
        }
    }
    let mut sol = Solution::from_calls(best.1, inst).expect("enumerated sequences are parity-valid");
    evaluate(&mut sol, inst);
    Ok(BruteForce {
        best: sol,
        cost: best.0,
        nodes: counter.load(Ordering::Relaxed),
    })
}

/// Calls that extend `s` without truncation, in lexicographic order.
fn children(s: &Solution, inst: &Instance) -> Vec<Call> {
    let eval = s.evaluation().expect("search nodes are evaluated");
    let tl = Timeline::replay(inst, &eval.schedule);
    let last = s.calls().last().copied();
    let mut out = Vec::new();
    for port in 0..inst.num_ports() {
        for vessel in 0..inst.num_vessels() {
            let c = Call::new(port, vessel);
            if !s.can_append(c, inst) || tl.probe(c).berth_end > inst.horizon {
                continue;
            }
            // of two adjacent independent calls only the ordered pair is kept
            if last.is_some_and(|l| !l.conflicts(&c) && c < l) {
                continue;
            }
            out.push(c);
        }
    }
    out
}

fn dfs(
    s: &mut Solution,
    inst: &Instance,
    max_calls: usize,
    limit: u64,
    counter: &AtomicU64,
    best: &mut Option<(Money, Vec<Call>)>,
) {
    if counter.fetch_add(1, Ordering::Relaxed) >= limit {
        return;
    }
    let cost = evaluate(s, inst);
    let better = match best {
        None => true,
        Some((c, calls)) => (cost, s.calls()) < (*c, calls.as_slice()),
    };
    if better {
        *best = Some((cost, s.calls().to_vec()));
    }
    if s.len() >= max_calls {
        return;
    }
    for c in children(s, inst) {
        let mut next = s.clone();
        next.push_raw(c);
        dfs(&mut next, inst, max_calls, limit, counter, best);
    }
}
