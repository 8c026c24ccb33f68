use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{HarnessError, Stage};
use crate::beam::{run_beam_search_until, BeamConfig, LevelStats};
use crate::evaluator::{evaluate, gap_percent};
use crate::greedy::complete_deterministic;
use crate::ils::{run_ils_until, IlsConfig, IlsIteration};
use crate::instance::Instance;
use crate::localsearch::rvnd;
use crate::money::Money;
use crate::seeding;
use crate::solution::Solution;

/// How the starting pool is built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Constructor {
    #[default]
    BeamSearch,
    /// The deterministic greedy solution alone, as a baseline.
    Greedy,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub beam: BeamConfig,
    pub ils: IlsConfig,
    /// Last stage to run.
    pub stage: Stage,
    pub seeds: Vec<u64>,
    pub time_limit: Option<Duration>,
    pub best_known: Option<Money>,
    /// Run seeds and beam levels on the rayon pool.
    pub parallel: bool,
    /// Record elapsed times; when off every time is zero so reports are
    /// byte-for-byte reproducible.
    pub record_wall_time: bool,
    pub constructor: Constructor,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            beam: BeamConfig::default(),
            ils: IlsConfig::default(),
            stage: Stage::Ils,
            seeds: (1..=10).collect(),
            time_limit: Some(Duration::from_secs(90_000)),
            best_known: None,
            parallel: true,
            record_wall_time: true,
            constructor: Constructor::BeamSearch,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if self.time_limit.is_some_and(|t| t.is_zero()) {
            return Err(HarnessError::Config("time limit must be positive".into()));
        }
        if self.best_known.is_some_and(|b| b <= Money::ZERO) {
            return Err(HarnessError::Config("best-known objective must be positive".into()));
        }
        self.beam.validate().map_err(HarnessError::Config)?;
        if self.stage == Stage::Ils {
            self.ils.validate().map_err(HarnessError::Config)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageResult {
    pub cost: Money,
    pub seconds: f64,
}

/// Outcome of the pipeline for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    /// Last stage that ran to completion, `None` when even the construction
    /// was cut short.
    pub last_stage: Option<Stage>,
    pub bs: StageResult,
    pub ls: Option<StageResult>,
    pub ils: Option<StageResult>,
    /// Best solution of the last completed stage.
    pub best: Solution,
    /// Pool costs before and after descent, position by position.
    pub pool_costs: Vec<(Money, Money)>,
    pub beam_levels: Vec<LevelStats>,
    pub ils_trace: Vec<IlsIteration>,
}

impl SeedRun {
    /// Cost reported for this seed: that of the last completed stage.
    pub fn cost(&self) -> Money {
        match self.last_stage {
            Some(Stage::Ils) => self.ils.expect("completed stage").cost,
            Some(Stage::Ls) => self.ls.expect("completed stage").cost,
            _ => self.bs.cost,
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.bs.seconds + self.ls.map_or(0.0, |s| s.seconds) + self.ils.map_or(0.0, |s| s.seconds)
    }

    pub fn stage(&self, stage: Stage) -> Option<StageResult> {
        match stage {
            Stage::Bs => Some(self.bs),
            Stage::Ls => self.ls,
            Stage::Ils => self.ils,
        }
    }
}

/// All seeds of one instance.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: String,
    pub class: String,
    pub beam_width: usize,
    pub best_known: Option<Money>,
    pub seeds: Vec<SeedRun>,
}

impl RunRecord {
    pub fn best_cost(&self) -> Money {
        self.seeds.iter().map(SeedRun::cost).min().expect("at least one seed")
    }

    pub fn average_cost(&self) -> Money {
        let costs: Vec<Money> = self.seeds.iter().map(SeedRun::cost).collect();
        Money::mean(&costs).expect("at least one seed")
    }

    pub fn gap_of(&self, cost: Money) -> Option<f64> {
        self.best_known
            .map(|bk| gap_percent(cost.to_f64(), bk.to_f64()).expect("validated best-known"))
    }

    pub fn best_gap(&self) -> Option<f64> {
        self.gap_of(self.best_cost())
    }

    /// Mean of the per-seed gaps, rounded to two decimals.
    pub fn average_gap(&self) -> Option<f64> {
        let gaps: Option<Vec<f64>> = self.seeds.iter().map(|s| self.gap_of(s.cost())).collect();
        let gaps = gaps?;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let rounded = (mean * 100.0).round() / 100.0;
        Some(if rounded == 0.0 { 0.0 } else { rounded })
    }

    /// Mean time per seed, in hours.
    pub fn mean_hours(&self) -> f64 {
        self.seeds.iter().map(SeedRun::total_seconds).sum::<f64>() / self.seeds.len() as f64 / 3600.0
    }

    pub fn total_seconds(&self) -> f64 {
        self.seeds.iter().map(SeedRun::total_seconds).sum()
    }
}

/// Runs the configured pipeline for every seed.
pub fn run(inst: &Instance, cfg: &RunConfig) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    inst.validate()?;
    let deadline = cfg.time_limit.map(|t| Instant::now() + t);
    let seeds: Vec<SeedRun> = if cfg.parallel {
        cfg.seeds.par_iter().map(|&s| run_seed(inst, cfg, s, deadline)).collect()
    } else {
        cfg.seeds.iter().map(|&s| run_seed(inst, cfg, s, deadline)).collect()
    };
    Ok(RunRecord {
        instance: inst.meta.name.clone(),
        class: inst.meta.class.clone(),
        beam_width: cfg.beam.beam_width,
        best_known: cfg.best_known,
        seeds,
    })
}

struct Clock {
    record: bool,
    started: Instant,
}

impl Clock {
    fn start(record: bool) -> Self {
        Clock {
            record,
            started: Instant::now(),
        }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let secs = (now - self.started).as_secs_f64();
        self.started = now;
        if self.record {
            secs
        } else {
            0.0
        }
    }
}

/// BS, then RVND on every pool solution, then ILS on the best of them. The
/// deadline is checked between beam levels, pool members and ILS iterations.
pub fn run_seed(inst: &Instance, cfg: &RunConfig, seed: u64, deadline: Option<Instant>) -> SeedRun {
    let expired = move || deadline.is_some_and(|d| Instant::now() >= d);
    let mut clock = Clock::start(cfg.record_wall_time);

    let beam_cfg = BeamConfig {
        seed,
        parallel: cfg.parallel && cfg.beam.parallel,
        ..cfg.beam
    };
    let (pool, beam_levels, bs_done) = match cfg.constructor {
        Constructor::BeamSearch => {
            let (out, done) = run_beam_search_until(inst, &beam_cfg, &expired);
            (out.pool, out.levels, done)
        }
        Constructor::Greedy => (vec![complete_deterministic(&Solution::new(), inst)], Vec::new(), true),
    };
    let bs_best = pool[0].clone();
    let bs = StageResult {
        cost: pool[0].evaluation().expect("pool is evaluated").total_cost,
        seconds: clock.lap(),
    };
    let mut record = SeedRun {
        seed,
        last_stage: bs_done.then_some(Stage::Bs),
        bs,
        ls: None,
        ils: None,
        best: bs_best,
        pool_costs: Vec::new(),
        beam_levels,
        ils_trace: Vec::new(),
    };
    if !bs_done {
        log::warn!("{} seed {seed}: time limit reached during construction", inst.meta.name);
        return record;
    }
    log::info!("{} seed {seed}: construction {} ({} pool solutions)", inst.meta.name, record.bs.cost, pool.len());
    if cfg.stage == Stage::Bs {
        return record;
    }

    let mut improved = Vec::with_capacity(pool.len());
    for (i, sol) in pool.iter().enumerate() {
        if expired() {
            return record;
        }
        let before = sol.evaluation().expect("pool is evaluated").total_cost;
        let mut better = rvnd(sol, inst, seeding::derive(&[seed, 0x15, i as u64]));
        let after = evaluate(&mut better, inst);
        record.pool_costs.push((before, after));
        improved.push((after, i, better));
    }
    let (ls_cost, _, incumbent) = improved
        .into_iter()
        .min_by_key(|(c, i, _)| (*c, *i))
        .expect("non-empty pool");
    record.ls = Some(StageResult {
        cost: ls_cost,
        seconds: clock.lap(),
    });
    record.last_stage = Some(Stage::Ls);
    record.best = incumbent;
    log::info!("{} seed {seed}: local search {ls_cost}", inst.meta.name);
    if cfg.stage == Stage::Ls {
        return record;
    }

    let ils_cfg = IlsConfig {
        seed: seeding::derive(&[seed, 0x115]),
        ..cfg.ils
    };
    let (out, done) = run_ils_until(&record.best, inst, &ils_cfg, &expired);
    let seconds = clock.lap();
    record.ils_trace = out.trace;
    if done {
        record.ils = Some(StageResult {
            cost: out.best.evaluation().expect("ILS best is evaluated").total_cost,
            seconds,
        });
        record.last_stage = Some(Stage::Ils);
        record.best = out.best;
        log::info!("{} seed {seed}: iterated local search {}", inst.meta.name, record.cost());
    } else {
        log::warn!("{} seed {seed}: time limit reached during iterated local search", inst.meta.name);
    }
    record
}
