//! Beam search over call sequences.
//!
//! Level `i` holds partial solutions of `i` calls. Each node gets at most `w`
//! children, each extending it by one non-truncating call; children are
//! scored by greedy completion and the best `N` distinct scores survive to the
//! next level.
//! Every completion produced along the way feeds a pool of the `N` best
//! complete solutions.

use std::collections::HashSet;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::evaluator::{evaluate, Timeline};
use crate::greedy::{priority_order, score_partial, GreedyConfig, Score};
use crate::instance::Instance;
use crate::money::Money;
use crate::seeding;
use crate::solution::{Call, Solution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    /// Nodes kept per level and pool size (N).
    pub beam_width: usize,
    /// Children kept per expanded node (w).
    pub max_children: usize,
    pub greedy: GreedyConfig,
    pub seed: u64,
    pub parallel: bool,
    pub children: ChildSelection,
}

/// Which `w` children a node gets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ChildSelection {
    /// The first `w` calls in the deterministic heuristic's preference order
    /// are generated and scored.
    #[default]
    GreedyOrder,
    /// Every appendable call is scored and the `w` best scores are kept.
    BestScored,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_width: 10,
            max_children: 2,
            greedy: GreedyConfig::default(),
            seed: 1,
            parallel: true,
            children: ChildSelection::default(),
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.beam_width == 0 {
            return Err("beam width N must be at least 1".into());
        }
        if self.max_children == 0 {
            return Err("max children w must be at least 1".into());
        }
        self.greedy.validate()
    }
}

#[derive(Debug, Clone)]
pub struct BeamNode {
    /// Evaluated partial solution.
    pub partial: Solution,
    /// Median completion cost.
    pub score: Money,
    pub level: usize,
}

/// Calls that can extend `partial` without being truncated, ordered by port
/// then vessel.
pub fn appendable_calls(partial: &Solution, inst: &Instance) -> Vec<Call> {
    let schedule = match partial.evaluation() {
        Some(e) => e.schedule.clone(),
        None => crate::evaluator::evaluate_full(partial, inst).schedule,
    };
    let tl = Timeline::replay(inst, &schedule);
    let mut out = Vec::new();
    for port in 0..inst.num_ports() {
        for vessel in 0..inst.num_vessels() {
            let call = Call::new(port, vessel);
            if partial.can_append(call, inst) && tl.probe(call).berth_end <= inst.horizon {
                out.push(call);
            }
        }
    }
    out
}

/// At most `max_children` scored children of `node`, best score first.
/// `node_seed` fixes the randomized completions.
pub fn expand(node: &BeamNode, inst: &Instance, cfg: &BeamConfig, node_seed: u64) -> Vec<(BeamNode, Score)> {
    let calls = match cfg.children {
        ChildSelection::GreedyOrder => {
            let mut calls = priority_order(&node.partial, inst);
            calls.truncate(cfg.max_children);
            calls
        }
        ChildSelection::BestScored => appendable_calls(&node.partial, inst),
    };
    let mut children: Vec<(BeamNode, Score)> = calls
        .into_iter()
        .enumerate()
        .map(|(i, call)| {
            let mut partial = node.partial.clone();
            partial.append(call, inst).expect("appendable call");
            evaluate(&mut partial, inst);
            let score = score_partial(&partial, inst, &cfg.greedy, seeding::derive(&[node_seed, i as u64]));
            (
                BeamNode {
                    partial,
                    score: score.median,
                    level: node.level + 1,
                },
                score,
            )
        })
        .collect();
    children.sort_by_key(|(c, _)| c.score);
    children.truncate(cfg.max_children);
    children
}

/// Per-level bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    /// Nodes expanded at this level.
    pub expanded: usize,
    /// Greedy completions run while expanding them.
    pub completions: usize,
    /// Scores of the nodes selected for this level, in beam order.
    pub scores: Vec<Money>,
    /// Best pool cost after this level.
    pub pool_best: Money,
}

#[derive(Debug, Clone)]
pub struct BeamOutcome {
    pub best: Solution,
    /// Up to `N` distinct complete solutions, cheapest first.
    pub pool: Vec<Solution>,
    pub levels: Vec<LevelStats>,
}

impl BeamOutcome {
    pub fn best_cost(&self) -> Money {
        self.best.evaluation().expect("pool solutions are evaluated").total_cost
    }
}

/// The `N` cheapest distinct completions seen so far.
struct Pool {
    cap: usize,
    entries: Vec<(Money, u64, Solution)>,
    seen: HashSet<Vec<Call>>,
    counter: u64,
}

impl Pool {
    fn new(cap: usize) -> Self {
        Pool {
            cap,
            entries: Vec::new(),
            seen: HashSet::new(),
            counter: 0,
        }
    }

    fn offer(&mut self, sol: &Solution) {
        let cost = sol.evaluation().expect("completions are evaluated").total_cost;
        if self.entries.len() == self.cap && cost >= self.entries.last().expect("full pool").0 {
            return;
        }
        if !self.seen.insert(sol.calls().to_vec()) {
            return;
        }
        let order = self.counter;
        self.counter += 1;
        let at = self.entries.partition_point(|(c, o, _)| (*c, *o) < (cost, order));
        self.entries.insert(at, (cost, order, sol.clone()));
        if self.entries.len() > self.cap {
            let (_, _, dropped) = self.entries.pop().expect("over capacity");
            self.seen.remove(dropped.calls());
        }
    }

    fn offer_all(&mut self, score: &Score) {
        for s in &score.completions {
            self.offer(s);
        }
    }

    fn best(&self) -> Money {
        self.entries[0].0
    }
}

pub fn run_beam_search(inst: &Instance, cfg: &BeamConfig) -> BeamOutcome {
    run_beam_search_until(inst, cfg, &|| false).0
}

/// Beam search that stops between levels once `stop` returns true. The flag
/// reports whether the search ran to completion.
pub fn run_beam_search_until(inst: &Instance, cfg: &BeamConfig, stop: &(dyn Fn() -> bool + Sync)) -> (BeamOutcome, bool) {
    let mut pool = Pool::new(cfg.beam_width);
    let mut root = Solution::new();
    evaluate(&mut root, inst);
    let root_score = score_partial(&root, inst, &cfg.greedy, seeding::derive(&[cfg.seed, 0, 0]));
    pool.offer_all(&root_score);
    let mut levels = vec![LevelStats {
        level: 0,
        expanded: 0,
        completions: root_score.costs.len(),
        scores: vec![root_score.median],
        pool_best: pool.best(),
    }];
    let mut beam = vec![BeamNode {
        partial: root,
        score: root_score.median,
        level: 0,
    }];
    let mut finished = true;

    while !beam.is_empty() {
        if stop() {
            finished = false;
            break;
        }
        let level = beam[0].level + 1;
        let expand_one = |(idx, node): (usize, &BeamNode)| {
            let node_seed = seeding::derive(&[cfg.seed, node.level as u64, idx as u64]);
            expand(node, inst, cfg, node_seed)
        };
        let expanded: Vec<Vec<(BeamNode, Score)>> = if cfg.parallel {
            beam.par_iter().enumerate().map(expand_one).collect()
        } else {
            beam.iter().enumerate().map(expand_one).collect()
        };

        let mut completions = 0;
        let mut seen_scores = HashSet::new();
        let mut next = Vec::new();
        for (child, score) in expanded.into_iter().flatten() {
            completions += score.costs.len();
            pool.offer_all(&score);
            if seen_scores.insert(child.score) {
                next.push(child);
            }
        }
        next.sort_by_key(|c| c.score);
        next.truncate(cfg.beam_width);
        levels.push(LevelStats {
            level,
            expanded: beam.len(),
            completions,
            scores: next.iter().map(|c| c.score).collect(),
            pool_best: pool.best(),
        });
        beam = next;
    }

    let pool: Vec<Solution> = pool.entries.into_iter().map(|(_, _, s)| s).collect();
    (
        BeamOutcome {
            best: pool[0].clone(),
            pool,
            levels,
        },
        finished,
    )
}

/// Writes `level,node,score,pool_best` rows.
pub fn write_beam_dump(levels: &[LevelStats], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "node", "score", "pool_best"])?;
    for l in levels {
        for (i, s) in l.scores.iter().enumerate() {
            w.write_record([
                l.level.to_string(),
                i.to_string(),
                s.to_string(),
                l.pool_best.to_string(),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::complete_deterministic;
    use crate::instance::generate_toy;

    fn cfg(n: usize, w: usize, q: usize) -> BeamConfig {
        BeamConfig {
            beam_width: n,
            max_children: w,
            greedy: GreedyConfig { q, ..GreedyConfig::default() },
            seed: 3,
            parallel: false,
            children: ChildSelection::default(),
        }
    }

    #[test]
    fn toy1_root_has_single_producer_child() {
        let inst = generate_toy(1, 1, 12).unwrap();
        let calls = appendable_calls(&Solution::new(), &inst);
        assert_eq!(calls, vec![Call::new(0, 0)]);
    }

    #[test]
    fn greedy_order_children_start_with_greedy_choice() {
        let inst = generate_toy(3, 2, 14).unwrap();
        let mut root = Solution::new();
        evaluate(&mut root, &inst);
        let order = priority_order(&root, &inst);
        let mut all = appendable_calls(&root, &inst);
        let mut sorted = order.clone();
        sorted.sort();
        all.sort();
        assert_eq!(sorted, all);
        let det = complete_deterministic(&root, &inst);
        assert_eq!(order[0], det.calls()[0]);
        let node = BeamNode { partial: root, score: Money::ZERO, level: 0 };
        let kids = expand(&node, &inst, &cfg(5, 1, 1), 0);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].0.partial.calls()[0], order[0]);
    }

    #[test]
    fn children_capped_at_w() {
        let mut inst = generate_toy(3, 2, 14).unwrap();
        inst.vessels[0].initial_state = crate::instance::LoadState::Loaded;
        if inst.vessels.len() == 1 {
            let mut v1 = inst.vessels[0].clone();
            v1.id = 1;
            inst.vessels.push(v1);
        }
        inst.vessels[1].initial_state = crate::instance::LoadState::Empty;
        let c = BeamConfig {
            children: ChildSelection::BestScored,
            ..cfg(5, 2, 3)
        };
        let mut root = Solution::new();
        evaluate(&mut root, &inst);
        let node = BeamNode { partial: root, score: Money::ZERO, level: 0 };
        let all = appendable_calls(&node.partial, &inst).len();
        assert!(all > 2);
        let kids = expand(&node, &inst, &c, 11);
        assert_eq!(kids.len(), 2);
        // the two best scores among all appendable calls
        let everyone = expand(&node, &inst, &BeamConfig { max_children: usize::MAX, ..c }, 11);
        assert_eq!(kids[0].0.score, everyone[0].0.score);
        assert_eq!(kids[1].0.score, everyone[1].0.score);
        assert!(kids.windows(2).all(|p| p[0].0.score <= p[1].0.score));
    }

    #[test]
    fn saturated_node_has_no_children() {
        let mut inst = generate_toy(1, 1, 12).unwrap();
        inst.vessels[0].ready_time = 12;
        let mut root = Solution::new();
        evaluate(&mut root, &inst);
        let node = BeamNode { partial: root, score: Money::ZERO, level: 0 };
        assert!(expand(&node, &inst, &cfg(3, 2, 1), 0).is_empty());
    }

    #[test]
    fn never_worse_than_greedy_and_pool_sorted() {
        for seed in [1, 2, 5, 7] {
            let inst = generate_toy(seed, 2, 14).unwrap();
            let det = complete_deterministic(&Solution::new(), &inst);
            let out = run_beam_search(&inst, &cfg(10, 2, 3));
            let greedy_cost = det.evaluation().unwrap().total_cost;
            assert!(out.best_cost() <= greedy_cost);
            let costs: Vec<Money> = out.pool.iter().map(|s| s.evaluation().unwrap().total_cost).collect();
            assert!(costs.windows(2).all(|p| p[0] <= p[1]));
            assert!(out.pool.len() <= 10);
            for l in &out.levels {
                assert!(l.scores.len() <= 10);
                let distinct: HashSet<_> = l.scores.iter().collect();
                assert_eq!(distinct.len(), l.scores.len());
            }
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let inst = generate_toy(6, 2, 14).unwrap();
        let serial = run_beam_search(&inst, &cfg(6, 2, 3));
        let par = run_beam_search(&inst, &BeamConfig { parallel: true, ..cfg(6, 2, 3) });
        assert_eq!(serial.best.calls(), par.best.calls());
        assert_eq!(serial.levels, par.levels);
    }

    #[test]
    fn dump_has_one_row_per_node() {
        let inst = generate_toy(1, 1, 12).unwrap();
        let out = run_beam_search(&inst, &cfg(2, 2, 1));
        let mut buf = Vec::new();
        write_beam_dump(&out.levels, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: usize = out.levels.iter().map(|l| l.scores.len()).sum();
        assert_eq!(text.lines().count(), rows + 1);
        assert!(text.starts_with("level,node,score,pool_best"));
    }
}
