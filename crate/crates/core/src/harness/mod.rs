//! Experiment orchestration: staged runs over seeds, CSV reports and
//! parameter sweeps.

mod report;
mod run;
mod sweep;

pub use report::{
    read_main_csv, write_main_csv, write_plot_csv, write_stage_csv, write_reports, MainRow, ReportPaths,
    MAIN_HEADER, PLOT_HEADER, STAGE_HEADER,
};
pub use run::{run, run_seed, Constructor, RunConfig, RunRecord, SeedRun, StageResult};
pub use sweep::{sweep, SweepConfig, SweepParam, SweepTable};

use std::fmt;
use std::str::FromStr;

use crate::instance::{generate_toy, Instance, InstanceError};

/// Pipeline stages; each includes the ones before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Bs,
    Ls,
    Ils,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Bs => "bs",
            Stage::Ls => "ls",
            Stage::Ils => "ils",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bs" => Ok(Stage::Bs),
            "ls" => Ok(Stage::Ls),
            "ils" => Ok(Stage::Ils),
            _ => Err(format!("unknown stage `{s}` (expected bs, ls or ils)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The reference toy: one producer, one consumer, one vessel, twelve periods.
pub fn toy1() -> Instance {
    generate_toy(1, 1, 12).expect("reference toy parameters are valid")
}

/// Twenty small generated instances: seeds 2 to 21, one or two consumers,
/// horizons of 12 to 14 periods and at most two vessels.
pub fn toy_suite() -> Vec<Instance> {
    (2..=21u64)
        .map(|seed| {
            let consumers = 1 + (seed as usize % 2);
            let horizon = 12 + (seed as usize % 3);
            generate_toy(seed, consumers, horizon).expect("suite parameters are valid")
        })
        .collect()
}
