//! Myopic completion of partial solutions.
//!
//! At every step the port whose projected inventory breaches its bound first
//! (producer overflow, consumer shortfall) is served by the parity-eligible
//! vessel that can start berthing there earliest. When the earliest violating
//! port has no eligible vessel, the call that lets some vessel reach it soonest
//! with the right load state is scheduled instead. Completion stops once no
//! useful call fits within the horizon.

use rand_distr::{Distribution, Normal};

use crate::evaluator::{evaluate, evaluate_full, Slot, Timeline};
use crate::instance::{Instance, PortKind};
use crate::money::Money;
use crate::seeding::{self, SolverRng};
use crate::solution::{Call, Solution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    /// Completions aggregated per score.
    pub q: usize,
    /// Noise standard deviation as a fraction of the candidate key spread.
    pub sigma_frac: f64,
    pub randomize_port: bool,
    pub randomize_vessel: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            q: 3,
            sigma_frac: 0.25,
            randomize_port: true,
            randomize_vessel: false,
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.q == 0 {
            return Err("greedy samples q must be at least 1".into());
        }
        if !self.sigma_frac.is_finite() || self.sigma_frac < 0.0 {
            return Err(format!("sigma_frac must be a finite value >= 0, got {}", self.sigma_frac));
        }
        Ok(())
    }
}

struct Noise<'c> {
    cfg: &'c GreedyConfig,
    rng: SolverRng,
}

impl Noise<'_> {
    /// Adds N(0, sigma_frac * spread) to each key.
    fn perturb(&mut self, keys: &mut [f64]) {
        let (lo, hi) = keys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
        let sd = self.cfg.sigma_frac * (hi - lo);
        if sd.is_nan() || sd <= 0.0 {
            return;
        }
        let normal = Normal::new(0.0, sd).expect("finite positive deviation");
        for k in keys {
            *k += normal.sample(&mut self.rng);
        }
    }
}

/// Working state of one completion.
struct Builder<'a> {
    inst: &'a Instance,
    sol: Solution,
    tl: Timeline<'a>,
    transfers: Vec<Vec<f64>>,
    violation: Vec<Option<usize>>,
}

impl<'a> Builder<'a> {
    fn new(partial: &Solution, inst: &'a Instance) -> Self {
        let owned;
        let eval = match partial.evaluation() {
            Some(e) => e,
            None => {
                owned = evaluate_full(partial, inst);
                &owned
            }
        };
        let mut transfers = vec![vec![0.0; inst.horizon + 1]; inst.num_ports()];
        for sc in eval.schedule.iter().filter(|sc| !sc.truncated) {
            transfers[sc.port][sc.berth_end] += transfer(inst, sc.port, sc.vessel);
        }
        let tl = Timeline::replay(inst, &eval.schedule);
        let mut b = Builder {
            inst,
            sol: partial.clone(),
            tl,
            transfers,
            violation: vec![None; inst.num_ports()],
        };
        for j in 0..inst.num_ports() {
            b.violation[j] = b.port_violation(j);
        }
        b
    }

    /// First period, not already settled by earlier operations at the port,
    /// whose projected inventory breaches in the port's own direction.
    fn port_violation(&self, j: usize) -> Option<usize> {
        let port = &self.inst.ports[j];
        let from = self
            .tl
            .port_last_end(j)
            .map_or(0, |e| e.saturating_sub(1));
        let sign = port.kind.sign();
        let mut s = port.inv_init;
        for t in 0..self.inst.horizon {
            let raw = s + sign * port.rate[t] + self.transfers[j][t + 1];
            let over = raw > port.inv_max[t];
            let under = raw < port.inv_min[t];
            if t >= from {
                let hit = match port.kind {
                    PortKind::Production => over,
                    PortKind::Consumption => under,
                };
                if hit {
                    return Some(t);
                }
            }
            s = raw.clamp(port.inv_min[t], port.inv_max[t].max(port.inv_min[t]));
        }
        None
    }

    fn eligible(&self, port: usize) -> Vec<(usize, Slot)> {
        let kind = self.inst.kind(port);
        (0..self.inst.num_vessels())
            .filter(|&v| self.sol.next_kind(v, self.inst) == kind)
            .map(|v| (v, self.tl.probe(Call::new(port, v))))
            .filter(|(_, slot)| slot.berth_end <= self.inst.horizon)
            .collect()
    }

    fn push(&mut self, call: Call) {
        let sc = self.tl.schedule(call);
        debug_assert!(!sc.truncated);
        self.sol
            .append(call, self.inst)
            .expect("greedy only appends parity-eligible calls");
        self.transfers[call.port][sc.berth_end] += transfer(self.inst, call.port, call.vessel);
        self.violation[call.port] = self.port_violation(call.port);
    }

    /// Call that brings a vessel in the right load state to `target` soonest.
    fn enabling_call(&self, target: usize) -> Option<Call> {
        let inst = self.inst;
        let kind = inst.kind(target).opposite();
        let mut best: Option<(usize, usize, usize)> = None;
        for k in inst.ports_of_kind(kind) {
            for v in 0..inst.num_vessels() {
                if self.sol.next_kind(v, inst) != kind {
                    continue;
                }
                let slot = self.tl.probe(Call::new(k, v));
                let follow = slot.berth_end + inst.travel(v, k, target);
                if slot.berth_end > inst.horizon || follow + inst.op_duration > inst.horizon {
                    continue;
                }
                if best.is_none_or(|b| (follow, k, v) < b) {
                    best = Some((follow, k, v));
                }
            }
        }
        best.map(|(_, k, v)| Call::new(k, v))
    }

    /// The call the heuristic would append next, if any.
    fn choose(&self, noise: &mut Option<Noise<'_>>) -> Option<Call> {
        let mut violating: Vec<(usize, usize)> = self
            .violation
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.map(|t| (t, j)))
            .collect();
        violating.sort_unstable();

        let mut candidates = Vec::new();
        let mut blocked = Vec::new();
        for &(t, j) in &violating {
            let vessels = self.eligible(j);
            if vessels.is_empty() {
                blocked.push(j);
            } else {
                candidates.push((t, j, vessels));
            }
        }

        if candidates.is_empty() {
            return blocked.into_iter().find_map(|j| self.enabling_call(j));
        }

        let mut port_keys: Vec<f64> = candidates.iter().map(|c| c.0 as f64).collect();
        if let Some(n) = noise.as_mut().filter(|n| n.cfg.randomize_port) {
            n.perturb(&mut port_keys);
        }
        let pick = argmin(&port_keys, |i| (candidates[i].0, candidates[i].1));
        let (_, port, vessels) = &candidates[pick];

        let mut vessel_keys: Vec<f64> = vessels.iter().map(|(_, s)| s.berth_start as f64).collect();
        if let Some(n) = noise.as_mut().filter(|n| n.cfg.randomize_vessel) {
            n.perturb(&mut vessel_keys);
        }
        let vpick = argmin(&vessel_keys, |i| {
            let (v, s) = vessels[i];
            (s.berth_start, s.arrival, v)
        });
        Some(Call::new(*port, vessels[vpick].0))
    }

    fn step(&mut self, noise: &mut Option<Noise<'_>>) -> bool {
        match self.choose(noise) {
            Some(call) => {
                self.push(call);
                true
            }
            None => false,
        }
    }
}

/// Every parity-valid call that ends within the horizon, in the order the
/// deterministic heuristic prefers them: its own next choice first, then by
/// violation time of the port (never-violating ports last), port id,
/// berth start, arrival and vessel id.
pub fn priority_order(partial: &Solution, inst: &Instance) -> Vec<Call> {
    let b = Builder::new(partial, inst);
    let first = b.choose(&mut None);
    let mut keyed = Vec::new();
    for port in 0..inst.num_ports() {
        for vessel in 0..inst.num_vessels() {
            let call = Call::new(port, vessel);
            if !b.sol.can_append(call, inst) {
                continue;
            }
            let slot = b.tl.probe(call);
            if slot.berth_end > inst.horizon {
                continue;
            }
            let urgency = b.violation[port].unwrap_or(usize::MAX);
            let head = Some(call) != first;
            keyed.push(((head, urgency, port, slot.berth_start, slot.arrival, vessel), call));
        }
    }
    keyed.sort_unstable_by_key(|(k, _)| *k);
    keyed.into_iter().map(|(_, c)| c).collect()
}

fn transfer(inst: &Instance, port: usize, vessel: usize) -> f64 {
    match inst.kind(port) {
        PortKind::Production => -inst.capacity(vessel),
        PortKind::Consumption => inst.capacity(vessel),
    }
}

/// Index of the smallest key; exact ties fall back to `tie`.
fn argmin<T: Ord>(keys: &[f64], tie: impl Fn(usize) -> T) -> usize {
    (0..keys.len())
        .min_by(|&a, &b| keys[a].total_cmp(&keys[b]).then_with(|| tie(a).cmp(&tie(b))))
        .expect("non-empty candidate list")
}

fn complete(partial: &Solution, inst: &Instance, mut noise: Option<Noise<'_>>) -> Solution {
    let mut b = Builder::new(partial, inst);
    while b.step(&mut noise) {}
    let mut sol = b.sol;
    evaluate(&mut sol, inst);
    sol
}

/// Deterministic completion. The result carries its evaluation.
pub fn complete_deterministic(partial: &Solution, inst: &Instance) -> Solution {
    complete(partial, inst, None)
}

/// Completion with normally perturbed selection keys.
pub fn complete_randomized(partial: &Solution, inst: &Instance, cfg: &GreedyConfig, seed: u64) -> Solution {
    complete(
        partial,
        inst,
        Some(Noise {
            cfg,
            rng: seeding::rng(seed),
        }),
    )
}

/// Outcome of scoring one partial solution.
#[derive(Debug, Clone)]
pub struct Score {
    /// Lower median of the completion costs.
    pub median: Money,
    /// Completion costs in generation order (deterministic first).
    pub costs: Vec<Money>,
    /// The evaluated completions, same order as `costs`.
    pub completions: Vec<Solution>,
}

impl Score {
    pub fn best(&self) -> &Solution {
        let i = (0..self.costs.len())
            .min_by_key(|&i| (self.costs[i], i))
            .expect("at least one completion");
        &self.completions[i]
    }
}

/// Scores a partial solution by one deterministic and `q - 1` randomized
/// completions (seeds `seed + 1 ..= seed + q - 1`).
pub fn score_partial(partial: &Solution, inst: &Instance, cfg: &GreedyConfig, seed: u64) -> Score {
    let q = cfg.q.max(1);
    let mut completions = Vec::with_capacity(q);
    completions.push(complete_deterministic(partial, inst));
    for i in 1..q as u64 {
        completions.push(complete_randomized(partial, inst, cfg, seed.wrapping_add(i)));
    }
    let costs: Vec<Money> = completions
        .iter()
        .map(|s| s.evaluation().expect("completions are evaluated").total_cost)
        .collect();
    Score {
        median: lower_median(&costs),
        costs,
        completions,
    }
}

pub fn lower_median(values: &[Money]) -> Money {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}
