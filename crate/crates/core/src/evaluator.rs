//! Schedule and cost simulation of a call sequence.
//!
//! Calls are processed in sequence order. A vessel arrives at
//! `previous berth_end + travel_time` (its first call departs from the start
//! port at `ready_time`), waits until every earlier call at the same port has
//! started and a berth is free for `op_duration` periods, and transfers a full
//! load at `berth_end`. Inventories are then simulated period by period; any
//! excursion beyond a bound is bought back as spot charter at that period's
//! penalty and the inventory is clamped. Calls ending after the horizon are
//! truncated and contribute nothing.

use std::io::{self, BufRead, Write};

use crate::instance::{Instance, PortKind};
use crate::money::Money;
use crate::solution::{Call, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledCall {
    pub port: usize,
    pub vessel: usize,
    pub arrival: usize,
    pub berth_start: usize,
    pub berth_end: usize,
    pub truncated: bool,
}

impl ScheduledCall {
    pub fn call(&self) -> Call {
        Call::new(self.port, self.vessel)
    }
}

/// Direction of an inventory excursion that was bought back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breach {
    /// Inventory would have fallen below the minimum; α units were supplied.
    Shortfall,
    /// Inventory would have exceeded the maximum; α units were removed.
    Overflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub schedule: Vec<ScheduledCall>,
    /// `inventory[port][k]` is the stock at time point `k` (`k = 0` is the
    /// initial inventory, `k = t + 1` the end of period `t`).
    pub inventory: Vec<Vec<f64>>,
    /// Spot charter α per port and period, always ≥ 0.
    pub spot_charter: Vec<Vec<f64>>,
    pub breach: Vec<Vec<Option<Breach>>>,
    pub routing_cost: Money,
    pub penalty_cost: Money,
    pub reward_credit: Money,
    pub total_cost: Money,
    pub truncated_count: usize,
    /// Latest finishing time over the fleet (an unused vessel finishes at its
    /// ready time).
    pub fleet_finish: usize,
}

impl EvalResult {
    /// First period at `port` with a spot-charter purchase, if any.
    pub fn first_breach(&self, port: usize) -> Option<usize> {
        self.breach[port].iter().position(Option::is_some)
    }
}

/// Berth occupancy, FIFO order and vessel positions of a partially scheduled
/// sequence.
#[derive(Debug, Clone)]
pub struct Timeline<'a> {
    inst: &'a Instance,
    occupancy: Vec<Vec<u32>>,
    port_last_start: Vec<Option<usize>>,
    port_last_end: Vec<Option<usize>>,
    /// (port, time) where each vessel becomes free.
    vessel_at: Vec<(usize, usize)>,
}

/// Timing of a prospective call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub arrival: usize,
    pub berth_start: usize,
    pub berth_end: usize,
}

impl<'a> Timeline<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Timeline {
            inst,
            occupancy: vec![vec![0; inst.horizon + 1]; inst.num_ports()],
            port_last_start: vec![None; inst.num_ports()],
            port_last_end: vec![None; inst.num_ports()],
            vessel_at: inst
                .vessels
                .iter()
                .map(|v| (v.start_port, v.ready_time))
                .collect(),
        }
    }

    /// Rebuilds the state after an already computed schedule.
    pub fn replay(inst: &'a Instance, schedule: &[ScheduledCall]) -> Self {
        let mut tl = Timeline::new(inst);
        for sc in schedule {
            tl.commit(
                sc.call(),
                Slot {
                    arrival: sc.arrival,
                    berth_start: sc.berth_start,
                    berth_end: sc.berth_end,
                },
            );
        }
        tl
    }

    fn berth_free(&self, port: usize, start: usize, end: usize) -> bool {
        let limit = self.inst.ports[port].berth_limit;
        let occ = &self.occupancy[port];
        (start..end).all(|k| occ.get(k).copied().unwrap_or(0) < limit)
    }

    pub fn probe(&self, call: Call) -> Slot {
        let (at, free_from) = self.vessel_at[call.vessel];
        let arrival = free_from + self.inst.travel(call.vessel, at, call.port);
        let dur = self.inst.op_duration;
        let mut start = arrival.max(self.port_last_start[call.port].unwrap_or(0));
        while !self.berth_free(call.port, start, start + dur) {
            start += 1;
        }
        Slot {
            arrival,
            berth_start: start,
            berth_end: start + dur,
        }
    }

    pub fn commit(&mut self, call: Call, slot: Slot) {
        let occ = &mut self.occupancy[call.port];
        if occ.len() < slot.berth_end {
            occ.resize(slot.berth_end, 0);
        }
        for o in &mut occ[slot.berth_start..slot.berth_end] {
            *o += 1;
        }
        self.port_last_start[call.port] = Some(slot.berth_start);
        self.port_last_end[call.port] = Some(slot.berth_end);
        self.vessel_at[call.vessel] = (call.port, slot.berth_end);
    }

    pub fn schedule(&mut self, call: Call) -> ScheduledCall {
        let slot = self.probe(call);
        self.commit(call, slot);
        ScheduledCall {
            port: call.port,
            vessel: call.vessel,
            arrival: slot.arrival,
            berth_start: slot.berth_start,
            berth_end: slot.berth_end,
            truncated: slot.berth_end > self.inst.horizon,
        }
    }

    /// End of the last operation scheduled at `port`.
    pub fn port_last_end(&self, port: usize) -> Option<usize> {
        self.port_last_end[port]
    }

    /// Where and when `vessel` becomes free.
    pub fn vessel_position(&self, vessel: usize) -> (usize, usize) {
        self.vessel_at[vessel]
    }
}

/// Reference path: simulates the whole sequence from scratch.
pub fn evaluate_full(s: &Solution, inst: &Instance) -> EvalResult {
    let mut tl = Timeline::new(inst);
    let schedule: Vec<ScheduledCall> = s.calls().iter().map(|&c| tl.schedule(c)).collect();
    let inv = simulate_inventory(inst, &schedule, None);
    assemble(inst, schedule, inv)
}

/// Which route `evaluate_incremental` actually took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPath {
    Incremental { change_point: usize },
    /// No usable cache; the full simulation ran instead.
    FullFallback,
}

/// Re-evaluates `s` reusing its cached evaluation for positions before
/// `change_point`. The result is identical to [`evaluate_full`].
pub fn evaluate_incremental(s: &Solution, inst: &Instance, change_point: usize) -> (EvalResult, EvalPath) {
    let Some((cached, valid_prefix)) = s.cache_with_change_point() else {
        return (evaluate_full(s, inst), EvalPath::FullFallback);
    };
    let c = change_point.min(valid_prefix).min(cached.schedule.len()).min(s.len());
    let prefix_matches = cached.schedule[..c]
        .iter()
        .zip(s.calls())
        .all(|(sc, call)| sc.call() == *call);
    if !prefix_matches
        || cached.inventory.len() != inst.num_ports()
        || cached.spot_charter.first().map(Vec::len) != Some(inst.horizon)
    {
        return (evaluate_full(s, inst), EvalPath::FullFallback);
    }

    let mut tl = Timeline::replay(inst, &cached.schedule[..c]);
    let mut schedule = Vec::with_capacity(s.len());
    schedule.extend_from_slice(&cached.schedule[..c]);
    for &call in &s.calls()[c..] {
        schedule.push(tl.schedule(call));
    }

    // Inventories are untouched before the earliest transfer that moved.
    let earliest = |xs: &[ScheduledCall]| {
        xs.iter()
            .filter(|sc| !sc.truncated)
            .map(|sc| sc.berth_end)
            .min()
    };
    let tmin = [earliest(&cached.schedule[c..]), earliest(&schedule[c..])]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(inst.horizon + 1);
    let inv = simulate_inventory(inst, &schedule, Some((cached, tmin)));
    (assemble(inst, schedule, inv), EvalPath::Incremental { change_point: c })
}

/// Evaluates `s` through its cache and stores the result.
pub fn evaluate(s: &mut Solution, inst: &Instance) -> Money {
    if let Some(e) = s.evaluation() {
        return e.total_cost;
    }
    let (eval, _) = evaluate_incremental(s, inst, s.change_point());
    let cost = eval.total_cost;
    s.store_evaluation(eval);
    cost
}

/// Cost of an evaluated solution; evaluates when needed.
pub fn cost_of(s: &mut Solution, inst: &Instance) -> Money {
    evaluate(s, inst)
}

struct InventoryState {
    inventory: Vec<Vec<f64>>,
    spot_charter: Vec<Vec<f64>>,
    breach: Vec<Vec<Option<Breach>>>,
    penalty_cost: Money,
}

fn simulate_inventory(
    inst: &Instance,
    schedule: &[ScheduledCall],
    reuse: Option<(&EvalResult, usize)>,
) -> InventoryState {
    let t_len = inst.horizon;
    let n = inst.num_ports();
    let mut transfers = vec![vec![0.0f64; t_len + 1]; n];
    for sc in schedule.iter().filter(|sc| !sc.truncated) {
        let q = inst.capacity(sc.vessel);
        transfers[sc.port][sc.berth_end] += match inst.kind(sc.port) {
            PortKind::Production => -q,
            PortKind::Consumption => q,
        };
    }

    let (mut inventory, mut spot_charter, mut breach, first_period) = match reuse {
        Some((cached, tmin)) if tmin >= 1 => {
            let first = (tmin - 1).min(t_len);
            (
                cached.inventory.clone(),
                cached.spot_charter.clone(),
                cached.breach.clone(),
                first,
            )
        }
        _ => (
            inst.ports
                .iter()
                .map(|p| {
                    let mut v = vec![0.0; t_len + 1];
                    v[0] = p.inv_init;
                    v
                })
                .collect(),
            vec![vec![0.0; t_len]; n],
            vec![vec![None; t_len]; n],
            0,
        ),
    };

    let mut penalty_cost = Money::ZERO;
    for (j, port) in inst.ports.iter().enumerate() {
        let sign = port.kind.sign();
        for t in first_period..t_len {
            let raw = inventory[j][t] + sign * port.rate[t] + transfers[j][t + 1];
            let (level, alpha, kind) = if raw > port.inv_max[t] {
                (port.inv_max[t], raw - port.inv_max[t], Some(Breach::Overflow))
            } else if raw < port.inv_min[t] {
                (port.inv_min[t], port.inv_min[t] - raw, Some(Breach::Shortfall))
            } else {
                (raw, 0.0, None)
            };
            inventory[j][t + 1] = level;
            spot_charter[j][t] = alpha;
            breach[j][t] = kind;
        }
        for t in 0..t_len {
            if breach[j][t].is_some() {
                penalty_cost += Money::from_f64(port.penalty[t] * spot_charter[j][t]);
            }
        }
    }
    InventoryState {
        inventory,
        spot_charter,
        breach,
        penalty_cost,
    }
}

/// Distance and fee charges of one non-truncated call reached from `from`.
pub fn leg_cost(inst: &Instance, vessel: usize, from: usize, to: usize) -> Money {
    let port = &inst.ports[to];
    let mut cost = Money::from_f64(port.port_fee);
    if from != to {
        let class = inst.class_of(vessel);
        let factor = match port.kind {
            PortKind::Production => 1.0 - class.ballast_discount,
            PortKind::Consumption => 1.0,
        };
        cost += Money::from_f64(class.cost_per_km * inst.distance_km[from][to] * factor);
    }
    cost
}

fn assemble(inst: &Instance, schedule: Vec<ScheduledCall>, inv: InventoryState) -> EvalResult {
    let mut at: Vec<usize> = inst.vessels.iter().map(|v| v.start_port).collect();
    let mut finish: Vec<usize> = inst.vessels.iter().map(|v| v.ready_time).collect();
    let mut routing = Money::ZERO;
    let mut truncated_count = 0;
    for sc in &schedule {
        if sc.truncated {
            truncated_count += 1;
            continue;
        }
        routing += leg_cost(inst, sc.vessel, at[sc.vessel], sc.port);
        at[sc.vessel] = sc.port;
        finish[sc.vessel] = sc.berth_end;
    }
    let fleet_finish = finish.iter().copied().max().unwrap_or(0);
    let idle = inst.horizon.saturating_sub(fleet_finish);
    let reward = Money::from_f64(inst.reward_early_finish * idle as f64);
    EvalResult {
        schedule,
        inventory: inv.inventory,
        spot_charter: inv.spot_charter,
        breach: inv.breach,
        routing_cost: routing,
        penalty_cost: inv.penalty_cost,
        reward_credit: reward,
        total_cost: routing + inv.penalty_cost - reward,
        truncated_count,
        fleet_finish,
    }
}

// --- gap ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("best-known objective must be positive, got {0}")]
pub struct GapError(pub f64);

/// Relative deviation from a best-known objective, in percent, rounded to two
/// decimals.
pub fn gap_percent(cost: f64, best_known: f64) -> Result<f64, GapError> {
    if best_known.is_nan() || best_known <= 0.0 {
        return Err(GapError(best_known));
    }
    let raw = 100.0 * (cost - best_known) / best_known;
    let rounded = (raw * 100.0).round() / 100.0;
    // never report -0.00
    Ok(if rounded == 0.0 { 0.0 } else { rounded })
}

pub fn format_gap(gap: f64) -> String {
    let s = format!("{gap:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

// --- trace -------------------------------------------------------------------

pub const TRACE_PERIOD_HEADER: &str = "# periods: t,port,inventory,alpha";
pub const TRACE_CALL_HEADER: &str = "# calls: call_idx,vessel,port,arrival,start,end";

/// Writes the per-period inventory lines followed by the per-call timing
/// lines. `inventory` is the stock at the end of period `t`.
pub fn write_trace(eval: &EvalResult, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{TRACE_PERIOD_HEADER}")?;
    let periods = eval.spot_charter.first().map_or(0, Vec::len);
    for t in 0..periods {
        for j in 0..eval.inventory.len() {
            writeln!(
                out,
                "{t},{j},{},{}",
                eval.inventory[j][t + 1],
                eval.spot_charter[j][t]
            )?;
        }
    }
    writeln!(out, "{TRACE_CALL_HEADER}")?;
    for (i, sc) in eval.schedule.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            sc.vessel, sc.port, sc.arrival, sc.berth_start, sc.berth_end
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePeriod {
    pub t: usize,
    pub port: usize,
    pub inventory: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCall {
    pub index: usize,
    pub vessel: usize,
    pub port: usize,
    pub arrival: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub periods: Vec<TracePeriod>,
    pub calls: Vec<TraceCall>,
}

pub fn read_trace(input: impl BufRead) -> io::Result<Trace> {
    let bad = |n: usize, l: &str| io::Error::new(io::ErrorKind::InvalidData, format!("trace line {n}: `{l}`"));
    let mut trace = Trace::default();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        match f.len() {
            4 => {
                let p = |k: usize| f[k].parse::<usize>().map_err(|_| bad(n + 1, line));
                let q = |k: usize| f[k].parse::<f64>().map_err(|_| bad(n + 1, line));
                trace.periods.push(TracePeriod {
                    t: p(0)?,
                    port: p(1)?,
                    inventory: q(2)?,
                    alpha: q(3)?,
                });
            }
            6 => {
                let p = |k: usize| f[k].parse::<usize>().map_err(|_| bad(n + 1, line));
                trace.calls.push(TraceCall {
                    index: p(0)?,
                    vessel: p(1)?,
                    port: p(2)?,
                    arrival: p(3)?,
                    start: p(4)?,
                    end: p(5)?,
                });
            }
            _ => return Err(bad(n + 1, line)),
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_toy;

    fn toy1() -> Instance {
        generate_toy(1, 1, 12).unwrap()
    }

    fn sol(inst: &Instance, calls: &[(usize, usize)]) -> Solution {
        Solution::from_calls(calls.iter().map(|&(p, v)| Call::new(p, v)).collect(), inst).unwrap()
    }

    /// Hand simulation of TOY1 without vessels: both ports drift by 2 per
    /// period from 5 and hit a bound during period 2 (time point 3).
    #[test]
    fn toy1_empty_solution() {
        let inst = toy1();
        let e = evaluate_full(&Solution::new(), &inst);
        assert_eq!(e.inventory[1][..4], [5.0, 3.0, 1.0, 0.0]);
        assert_eq!(e.first_breach(1), Some(2));
        assert_eq!(e.spot_charter[1][2], 1.0);
        assert_eq!(e.breach[1][2], Some(Breach::Shortfall));
        assert_eq!(e.first_breach(0), Some(2));
        assert_eq!(e.breach[0][2], Some(Breach::Overflow));
        // 1 + 9 * 2 uncovered units at each port, 100 per unit
        let uncovered: f64 = e.spot_charter[1].iter().sum();
        assert_eq!(uncovered, 19.0);
        assert_eq!(e.penalty_cost, Money::from_f64(100.0 * 38.0));
        assert_eq!(e.routing_cost, Money::ZERO);
        assert_eq!(e.total_cost, e.penalty_cost);
    }

    #[test]
    fn toy1_one_round_trip() {
        let inst = toy1();
        let s = sol(&inst, &[(0, 0), (1, 0)]);
        let e = evaluate_full(&s, &inst);
        let load = e.schedule[0];
        assert_eq!((load.arrival, load.berth_start, load.berth_end), (0, 0, 1));
        let unload = e.schedule[1];
        assert_eq!(unload.arrival, load.berth_end + 2);
        assert_eq!((unload.berth_start, unload.berth_end), (3, 4));
        // producer: 5 + 2 - 4 = 3 at time 1; consumer gets +4 at time 4
        assert_eq!(e.inventory[0][1], 3.0);
        assert_eq!(e.inventory[1][4], 0.0 - 2.0 + 4.0);
        // 10 km loaded leg, no fees
        assert_eq!(e.routing_cost, Money::from_f64(10.0));
        let empty = evaluate_full(&Solution::new(), &inst);
        assert!(e.penalty_cost < empty.penalty_cost);
    }

    #[test]
    fn call_past_horizon_is_discarded() {
        let mut inst = toy1();
        inst.vessels[0].ready_time = 11;
        let s = sol(&inst, &[(0, 0), (1, 0)]);
        let e = evaluate_full(&s, &inst);
        assert!(!e.schedule[0].truncated);
        assert!(e.schedule[1].truncated);
        assert_eq!(e.truncated_count, 1);

        let mut inst = toy1();
        inst.horizon = 4;
        for p in &mut inst.ports {
            p.rate.truncate(4);
            p.inv_min.truncate(4);
            p.inv_max.truncate(4);
            p.penalty.truncate(4);
        }
        inst.vessels[0].start_port = 1;
        inst.vessels[0].ready_time = 3;
        let s = sol(&inst, &[(0, 0)]);
        let e = evaluate_full(&s, &inst);
        assert_eq!(e.truncated_count, 1);
        assert_eq!(e.total_cost, evaluate_full(&Solution::new(), &inst).total_cost);
    }

    #[test]
    fn berth_limit_queues_second_vessel_fifo() {
        let mut inst = toy1();
        let mut v1 = inst.vessels[0].clone();
        v1.id = 1;
        inst.vessels.push(v1);
        let s = sol(&inst, &[(0, 1), (0, 0)]);
        let e = evaluate_full(&s, &inst);
        assert_eq!((e.schedule[0].berth_start, e.schedule[0].berth_end), (0, 1));
        assert_eq!((e.schedule[1].arrival, e.schedule[1].berth_start), (0, 1));
        inst.ports[0].berth_limit = 2;
        let e = evaluate_full(&s, &inst);
        assert_eq!(e.schedule[1].berth_start, 0);
    }

    #[test]
    fn ballast_discount_applies_to_distance_only() {
        let mut inst = toy1();
        inst.ports[0].port_fee = 3.0;
        inst.ports[1].port_fee = 7.0;
        let s = sol(&inst, &[(0, 0), (1, 0), (0, 0)]);
        let e = evaluate_full(&s, &inst);
        // first call at the start port: fee only; loaded leg 10 + 7; ballast leg 9.5 + 3
        assert_eq!(e.routing_cost, Money::from_f64(3.0 + 17.0 + 12.5));
    }

    #[test]
    fn early_finish_reward() {
        let mut inst = toy1();
        inst.reward_early_finish = 2.0;
        let e = evaluate_full(&sol(&inst, &[(0, 0), (1, 0)]), &inst);
        assert_eq!(e.fleet_finish, 4);
        assert_eq!(e.reward_credit, Money::from_f64(16.0));
        assert_eq!(e.total_cost, e.routing_cost + e.penalty_cost - e.reward_credit);
    }

    #[test]
    fn incremental_matches_full_after_edits() {
        let inst = toy1();
        let mut s = sol(&inst, &[(0, 0), (1, 0), (0, 0), (1, 0)]);
        evaluate(&mut s, &inst);
        s.remove_positions(&[2, 3]);
        let (inc, path) = evaluate_incremental(&s, &inst, s.change_point());
        assert_eq!(path, EvalPath::Incremental { change_point: 2 });
        assert_eq!(inc, evaluate_full(&s, &inst));
        s.push_raw(Call::new(0, 0));
        let (inc, _) = evaluate_incremental(&s, &inst, s.change_point());
        assert_eq!(inc, evaluate_full(&s, &inst));
    }

    #[test]
    fn incremental_without_cache_falls_back() {
        let inst = toy1();
        let s = sol(&inst, &[(0, 0)]);
        let (e, path) = evaluate_incremental(&s, &inst, 0);
        assert_eq!(path, EvalPath::FullFallback);
        assert_eq!(e, evaluate_full(&s, &inst));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_percent(40_340.01, 40_446.00).unwrap(), -0.26);
        assert_eq!(gap_percent(33_808.95, 33_809.00).unwrap(), 0.0);
        assert_eq!(format_gap(gap_percent(33_808.95, 33_809.00).unwrap()), "0.00");
        assert_eq!(format_gap(gap_percent(40_340.01, 40_446.00).unwrap()), "-0.26");
        assert_eq!(gap_percent(123.0, 123.0).unwrap(), 0.0);
        assert!(gap_percent(1.0, 0.0).is_err());
        assert!(gap_percent(1.0, -5.0).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let inst = toy1();
        let e = evaluate_full(&sol(&inst, &[(0, 0), (1, 0)]), &inst);
        let mut buf = Vec::new();
        write_trace(&e, &mut buf).unwrap();
        let trace = read_trace(&buf[..]).unwrap();
        assert_eq!(trace.periods.len(), 12 * 2);
        assert_eq!(trace.calls.len(), 2);
        assert_eq!(trace.calls[1].start, 3);
        let p = trace.periods.iter().find(|p| p.t == 2 && p.port == 1).unwrap();
        assert_eq!((p.inventory, p.alpha), (0.0, 1.0));
    }
}
