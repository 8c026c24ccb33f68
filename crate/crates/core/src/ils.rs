//! Iterated local search with simulated-annealing acceptance.
//!
//! Each iteration perturbs the current solution with a few random moves,
//! descends with RVND and accepts the result if it is no worse, or with
//! probability `exp(-Δ/T)` otherwise. The temperature is set so that a
//! reference deterioration (a fraction of the best cost) is accepted with a
//! probability falling linearly from `sa_p_initial` to `sa_p_final`. After too
//! many accepted non-improving iterations the search restarts from the best
//! solution.

use std::io::{self, Write};

use rand::Rng;

use crate::evaluator::evaluate;
use crate::instance::Instance;
use crate::localsearch::{random_move, rvnd, Neighborhood};
use crate::money::Money;
use crate::seeding::{self, SolverRng};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlsConfig {
    pub iterations: usize,
    pub non_improving_limit: usize,
    pub perturbations: usize,
    pub sa_p_initial: f64,
    pub sa_p_final: f64,
    /// Reference deterioration as a fraction of the best cost.
    pub delta_ref_frac: f64,
    pub seed: u64,
}

impl Default for IlsConfig {
    fn default() -> Self {
        IlsConfig {
            iterations: 640,
            non_improving_limit: 4,
            perturbations: 2,
            sa_p_initial: 0.79,
            sa_p_final: 0.01,
            delta_ref_frac: 0.01,
            seed: 1,
        }
    }
}

impl IlsConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("ILS iterations must be at least 1".into());
        }
        if !(0.0 < self.sa_p_final && self.sa_p_final <= self.sa_p_initial && self.sa_p_initial < 1.0) {
            return Err(format!(
                "SA probabilities must satisfy 0 < final <= initial < 1, got {} and {}",
                self.sa_p_final, self.sa_p_initial
            ));
        }
        if !self.delta_ref_frac.is_finite() || self.delta_ref_frac <= 0.0 {
            return Err("delta_ref_frac must be positive".into());
        }
        Ok(())
    }

    /// Acceptance probability of the reference deterioration at `iter`
    /// (1-based).
    pub fn probability(&self, iter: usize) -> f64 {
        if self.iterations <= 1 {
            return self.sa_p_initial;
        }
        let x = (iter.saturating_sub(1)) as f64 / (self.iterations - 1) as f64;
        self.sa_p_initial + (self.sa_p_final - self.sa_p_initial) * x.min(1.0)
    }

    /// Temperature at `iter` for a reference deterioration `delta_ref`.
    pub fn temperature(&self, iter: usize, delta_ref: f64) -> f64 {
        -delta_ref / self.probability(iter).ln()
    }

    /// Reference deterioration for a best cost, never below one cent.
    pub fn delta_ref(&self, best: Money) -> f64 {
        (self.delta_ref_frac * best.to_f64().abs()).max(0.01)
    }
}

/// Applies up to `cfg.perturbations` random moves. Each move draws a
/// neighbourhood uniformly among those not yet found empty. Returns the number
/// of moves applied.
pub fn perturb(s: &Solution, inst: &Instance, count: usize, rng: &mut SolverRng) -> (Solution, usize) {
    let mut cur = s.clone();
    let mut applied = 0;
    for _ in 0..count {
        let mut open: Vec<Neighborhood> = Neighborhood::ALL.to_vec();
        let mut moved = false;
        while !open.is_empty() {
            let nb = open.swap_remove(rng.random_range(0..open.len()));
            if let Some((_, next)) = random_move(nb, &cur, inst, rng) {
                cur = next;
                applied += 1;
                moved = true;
                break;
            }
        }
        if !moved {
            log::debug!("no applicable perturbation move");
            break;
        }
    }
    (cur, applied)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlsIteration {
    pub iter: usize,
    pub current_cost: Money,
    pub best_cost: Money,
    pub accepted: bool,
    pub temperature: f64,
    /// Current was reset to best after this iteration.
    pub restored: bool,
}

#[derive(Debug, Clone)]
pub struct IlsOutcome {
    pub best: Solution,
    pub trace: Vec<IlsIteration>,
}

impl IlsOutcome {
    pub fn best_cost(&self) -> Money {
        self.best.evaluation().expect("best is evaluated").total_cost
    }
}

pub fn run_ils(incumbent: &Solution, inst: &Instance, cfg: &IlsConfig) -> IlsOutcome {
    run_ils_until(incumbent, inst, cfg, &|| false).0
}

/// ILS that checks `stop` before every iteration; the flag reports whether
/// all iterations ran.
pub fn run_ils_until(incumbent: &Solution, inst: &Instance, cfg: &IlsConfig, stop: &dyn Fn() -> bool) -> (IlsOutcome, bool) {
    let mut rng = seeding::rng(seeding::derive(&[cfg.seed, 0x115]));
    let mut current = incumbent.clone();
    let mut current_cost = evaluate(&mut current, inst);
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut counter = 0;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for iter in 1..=cfg.iterations {
        if stop() {
            return (IlsOutcome { best, trace }, false);
        }
        let (perturbed, _) = perturb(&current, inst, cfg.perturbations, &mut rng);
        let mut cand = rvnd(&perturbed, inst, seeding::derive(&[cfg.seed, iter as u64]));
        let cand_cost = evaluate(&mut cand, inst);
        let temperature = cfg.temperature(iter, cfg.delta_ref(best_cost));
        let delta = (cand_cost - current_cost).to_f64();
        let accepted = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
        let mut restored = false;
        if accepted {
            current = cand;
            current_cost = cand_cost;
            if current_cost < best_cost {
                best = current.clone();
                best_cost = current_cost;
                counter = 0;
            } else {
                counter += 1;
            }
            if counter > cfg.non_improving_limit {
                current = best.clone();
                current_cost = best_cost;
                counter = 0;
                restored = true;
            }
        }
        trace.push(IlsIteration {
            iter,
            current_cost,
            best_cost,
            accepted,
            temperature,
            restored,
        });
    }
    (IlsOutcome { best, trace }, true)
}

/// Writes `iter,current_cost,best_cost,accepted,temperature` rows.
pub fn write_ils_dump(trace: &[IlsIteration], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "current_cost", "best_cost", "accepted", "temperature"])?;
    for it in trace {
        w.write_record([
            it.iter.to_string(),
            it.current_cost.to_string(),
            it.best_cost.to_string(),
            it.accepted.to_string(),
            format!("{:.6}", it.temperature),
        ])?;
    }
    w.flush()
}
