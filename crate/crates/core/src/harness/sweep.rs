use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::{run, HarnessError, RunConfig};
use crate::evaluator::{format_gap, gap_percent};
use crate::instance::Instance;
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Children per node.
    W,
    /// Greedy completions per score.
    Q,
    /// Beam width.
    N,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::W => "w",
            SweepParam::Q => "q",
            SweepParam::N => "N",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w" | "W" => Ok(SweepParam::W),
            "q" | "Q" => Ok(SweepParam::Q),
            "n" | "N" => Ok(SweepParam::N),
            _ => Err(format!("unknown sweep parameter `{s}` (expected w, q or n)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<usize>,
    /// For a q sweep, set the beam width to `K / q` so that `N * q` stays at
    /// `K`.
    pub inverse_n: Option<usize>,
    pub base: RunConfig,
}

/// Average and median gap for each swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub values: Vec<usize>,
    /// Beam width actually used for each value.
    pub beam_widths: Vec<usize>,
    pub average: Vec<f64>,
    pub median: Vec<f64>,
}

impl SweepTable {
    pub fn write_csv(&self, out: impl Write) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["Statistic".to_string()];
        header.extend(self.values.iter().map(|v| format!("{}={v}", self.param)));
        w.write_record(&header)?;
        for (label, row) in [("Average", &self.average), ("Median", &self.median)] {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(|g| format_gap(*g)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every instance for every value and aggregates per-run gaps. Each
/// instance's reference is its best-known value, or else the cheapest cost
/// seen anywhere in the sweep.
pub fn sweep(instances: &[(Instance, Option<Money>)], cfg: &SweepConfig) -> Result<SweepTable, HarnessError> {
    if cfg.values.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one value".into()));
    }
    if cfg.values.contains(&0) {
        return Err(HarnessError::Config("swept values must be positive".into()));
    }
    if cfg.inverse_n.is_some() && cfg.param != SweepParam::Q {
        return Err(HarnessError::Config("inverse N scaling applies to q sweeps only".into()));
    }

    let mut beam_widths = Vec::new();
    // costs[value][instance] = per-seed costs
    let mut costs: Vec<Vec<Vec<Money>>> = Vec::new();
    for &v in &cfg.values {
        let mut rc = cfg.base.clone();
        match cfg.param {
            SweepParam::W => rc.beam.max_children = v,
            SweepParam::Q => {
                rc.beam.greedy.q = v;
                if let Some(k) = cfg.inverse_n {
                    rc.beam.beam_width = (k / v).max(1);
                }
            }
            SweepParam::N => rc.beam.beam_width = v,
        }
        beam_widths.push(rc.beam.beam_width);
        let mut per_inst = Vec::new();
        for (inst, bk) in instances {
            rc.best_known = *bk;
            let rec = run(inst, &rc)?;
            per_inst.push(rec.seeds.iter().map(|s| s.cost()).collect());
        }
        costs.push(per_inst);
    }

    let mut average = Vec::new();
    let mut median = Vec::new();
    for per_inst in &costs {
        let mut gaps = Vec::new();
        for (k, (_, bk)) in instances.iter().enumerate() {
            let reference = bk.unwrap_or_else(|| {
                costs
                    .iter()
                    .flat_map(|c| c[k].iter().copied())
                    .min()
                    .expect("at least one run")
            });
            for &c in &per_inst[k] {
                gaps.push(relative_gap(c, reference));
            }
        }
        average.push(round2(gaps.iter().sum::<f64>() / gaps.len().max(1) as f64));
        median.push(round2(median_of(&mut gaps)));
    }

    Ok(SweepTable {
        param: cfg.param,
        values: cfg.values.clone(),
        beam_widths,
        average,
        median,
    })
}

fn relative_gap(cost: Money, reference: Money) -> f64 {
    if reference > Money::ZERO {
        gap_percent(cost.to_f64(), reference.to_f64()).expect("positive reference")
    } else {
        // non-positive references cannot be expressed as a percentage; report
        // the absolute excess instead
        (cost - reference).to_f64()
    }
}

fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn median_of(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
