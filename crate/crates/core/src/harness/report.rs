use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{HarnessError, RunRecord, Stage};
use crate::evaluator::format_gap;
use crate::money::Money;

pub const MAIN_HEADER: [&str; 9] = [
    "Instance",
    "N",
    "Class",
    "Obj",
    "BestTotalCost",
    "BestGap",
    "AverageTotalCost",
    "AverageGap",
    "TimeHours",
];

pub const STAGE_HEADER: [&str; 10] = [
    "Instance", "N", "Seed", "LastStage", "BSCost", "BSTime", "LSCost", "LSTime", "ILSCost", "ILSTime",
];

pub const PLOT_HEADER: [&str; 7] = ["Instance", "N", "Class", "Seed", "Stage", "Cost", "Gap"];

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct MainRow {
    pub instance: String,
    pub beam_width: usize,
    pub class: String,
    pub best_known: Option<Money>,
    pub best_cost: Money,
    pub best_gap: Option<f64>,
    pub average_cost: Money,
    pub average_gap: Option<f64>,
    /// Mean hours per seed, six decimals.
    pub time_hours: f64,
}

impl MainRow {
    pub fn from_record(r: &RunRecord) -> Self {
        MainRow {
            instance: r.instance.clone(),
            beam_width: r.beam_width,
            class: r.class.clone(),
            best_known: r.best_known,
            best_cost: r.best_cost(),
            best_gap: r.best_gap(),
            average_cost: r.average_cost(),
            average_gap: r.average_gap(),
            time_hours: (r.mean_hours() * 1e6).round() / 1e6,
        }
    }

    fn fields(&self) -> [String; 9] {
        let opt_gap = |g: Option<f64>| g.map(format_gap).unwrap_or_default();
        [
            self.instance.clone(),
            self.beam_width.to_string(),
            self.class.clone(),
            self.best_known.map(|m| m.to_string()).unwrap_or_default(),
            self.best_cost.to_string(),
            opt_gap(self.best_gap),
            self.average_cost.to_string(),
            opt_gap(self.average_gap),
            format!("{:.6}", self.time_hours),
        ]
    }
}

pub fn write_main_csv(records: &[RunRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAIN_HEADER)?;
    for r in records {
        w.write_record(MainRow::from_record(r).fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_main_csv(input: impl Read) -> Result<Vec<MainRow>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != MAIN_HEADER {
        return Err(HarnessError::Config(format!("unexpected header {header:?}")));
    }
    let bad = |what: &str, v: &str| HarnessError::Config(format!("bad {what} `{v}`"));
    let money = |v: &str| v.parse::<Money>().map_err(|_| bad("amount", v));
    let opt_money = |v: &str| if v.is_empty() { Ok(None) } else { money(v).map(Some) };
    let opt_gap = |v: &str| {
        if v.is_empty() {
            Ok(None)
        } else {
            v.parse::<f64>().map(Some).map_err(|_| bad("gap", v))
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(MainRow {
            instance: rec[0].to_string(),
            beam_width: rec[1].parse().map_err(|_| bad("N", &rec[1]))?,
            class: rec[2].to_string(),
            best_known: opt_money(&rec[3])?,
            best_cost: money(&rec[4])?,
            best_gap: opt_gap(&rec[5])?,
            average_cost: money(&rec[6])?,
            average_gap: opt_gap(&rec[7])?,
            time_hours: rec[8].parse().map_err(|_| bad("time", &rec[8]))?,
        });
    }
    Ok(rows)
}

/// Per-seed stage costs and times in seconds; stages that did not complete
/// are left empty.
pub fn write_stage_csv(records: &[RunRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STAGE_HEADER)?;
    for r in records {
        for s in &r.seeds {
            let completed = |st: Stage| s.last_stage.is_some_and(|l| l >= st);
            let cell = |st: Stage| match s.stage(st) {
                Some(res) if completed(st) => [res.cost.to_string(), format!("{:.3}", res.seconds)],
                _ => [String::new(), String::new()],
            };
            let [bc, bt] = cell(Stage::Bs);
            let [lc, lt] = cell(Stage::Ls);
            let [ic, it] = cell(Stage::Ils);
            w.write_record([
                r.instance.clone(),
                r.beam_width.to_string(),
                s.seed.to_string(),
                s.last_stage.map_or("none".to_string(), |l| l.to_string()),
                bc,
                bt,
                lc,
                lt,
                ic,
                it,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long format, one row per (instance, seed, completed stage).
pub fn write_plot_csv(records: &[RunRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for r in records {
        for s in &r.seeds {
            for st in [Stage::Bs, Stage::Ls, Stage::Ils] {
                if !s.last_stage.is_some_and(|l| l >= st) {
                    continue;
                }
                let res = s.stage(st).expect("completed stage");
                w.write_record([
                    r.instance.clone(),
                    r.beam_width.to_string(),
                    r.class.clone(),
                    s.seed.to_string(),
                    st.to_string(),
                    res.cost.to_string(),
                    r.gap_of(res.cost).map(format_gap).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub main: PathBuf,
    pub stages: PathBuf,
    pub plot: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReportPaths {
            main: dir.join("results.csv"),
            stages: dir.join("stages.csv"),
            plot: dir.join("plot.csv"),
        }
    }
}

/// Writes the three report files into `dir`, creating it if needed.
pub fn write_reports(records: &[RunRecord], dir: &Path) -> Result<ReportPaths, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let paths = ReportPaths::in_dir(dir);
    write_main_csv(records, File::create(&paths.main)?)?;
    write_stage_csv(records, File::create(&paths.stages)?)?;
    write_plot_csv(records, File::create(&paths.plot)?)?;
    Ok(paths)
}
