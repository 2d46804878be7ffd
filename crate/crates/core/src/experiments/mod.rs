//! Monte-Carlo experiment harness.
//!
//! Each trial draws from its own streams, seeded from
//! `(master seed, experiment name, trial index)`, so trials can run in any
//! order and adding trials never changes earlier ones. Results are reduced
//! in trial order and written as plot-ready CSV with a column legend beside
//! it. Timing is logged but kept out of the files, which are therefore
//! byte-identical across runs.

pub mod config;
pub mod grid;
mod runners;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::Result;
use crate::matcore::fmt_f64;
use crate::seeding::derive_seed;

pub use config::{ExperimentConfig, ExperimentKind, GraphFamily, SampleCount};
pub use runners::{draw_graph, ground_truth_for, observed_basis};

/// One measured cell of a trial: group labels (e.g. `K`, `M`) and either the
/// metric values or the reason they are missing.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub group: Vec<String>,
    pub values: std::result::Result<Vec<f64>, String>,
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub measurements: Vec<Measurement>,
    /// Set when the trial could not start (e.g. graph generation failed).
    pub skipped: Option<String>,
    pub elapsed: Duration,
}

/// Mean and spread of one metric over the trials of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub group: Vec<String>,
    pub count: usize,
    pub failures: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl SummaryRow {
    pub fn mean(&self, output: &ExperimentOutput, metric: &str) -> Option<f64> {
        output.metric_columns.iter().position(|m| *m == metric).map(|i| self.means[i])
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub group_columns: Vec<&'static str>,
    pub metric_columns: Vec<&'static str>,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Sample mean and standard deviation (`n − 1` denominator; NaN below two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(records: &[TrialRecord], metrics: usize) -> Vec<SummaryRow> {
    let mut groups: Vec<Vec<String>> = Vec::new();
    for m in records.iter().flat_map(|r| &r.measurements) {
        if !groups.contains(&m.group) {
            groups.push(m.group.clone());
        }
    }
    groups
        .into_iter()
        .map(|group| {
            let cells: Vec<&Measurement> =
                records.iter().flat_map(|r| &r.measurements).filter(|m| m.group == group).collect();
            let ok: Vec<&Vec<f64>> = cells.iter().filter_map(|m| m.values.as_ref().ok()).collect();
            let (means, stds) = (0..metrics)
                .map(|i| mean_std(&ok.iter().map(|v| v[i]).collect::<Vec<_>>()))
                .unzip();
            SummaryRow { group, count: ok.len(), failures: cells.len() - ok.len(), means, stds }
        })
        .collect()
}

impl ExperimentOutput {
    pub fn name(&self) -> &'static str {
        self.config.experiment.name()
    }

    /// Summary rows whose group labels equal `labels` (one per group column).
    pub fn row(&self, labels: &[&str]) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.group.iter().zip(labels).all(|(a, b)| a == b))
    }

    pub fn skipped(&self) -> usize {
        self.records.iter().filter(|r| r.skipped.is_some()).count()
    }

    pub fn summary_csv(&self) -> String {
        let mut header: Vec<String> = self.group_columns.iter().map(|c| c.to_string()).collect();
        header.push("count".into());
        header.push("failures".into());
        for m in &self.metric_columns {
            header.push(m.to_string());
            header.push(format!("{m}_std"));
        }
        let mut s = header.join(",");
        s.push('\n');
        for row in &self.summary {
            let mut cells = row.group.clone();
            cells.push(row.count.to_string());
            cells.push(row.failures.to_string());
            for (m, sd) in row.means.iter().zip(&row.stds) {
                cells.push(fmt_f64(*m));
                cells.push(fmt_f64(*sd));
            }
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Every measurement of every trial; failed cells carry their error text.
    pub fn trials_csv(&self) -> String {
        let mut header = vec!["trial".to_string(), "seed".to_string()];
        header.extend(self.group_columns.iter().map(|c| c.to_string()));
        header.extend(self.metric_columns.iter().map(|c| c.to_string()));
        header.push("error".into());
        let mut s = header.join(",");
        s.push('\n');
        let blanks = self.group_columns.len() + self.metric_columns.len();
        for r in &self.records {
            if let Some(reason) = &r.skipped {
                let _ = writeln!(s, "{},{},{}{}", r.trial, r.seed, ",".repeat(blanks), csv_text(reason));
                continue;
            }
            for m in &r.measurements {
                let mut cells = vec![r.trial.to_string(), r.seed.to_string()];
                cells.extend(m.group.iter().cloned());
                match &m.values {
                    Ok(v) => {
                        cells.extend(v.iter().map(|x| fmt_f64(*x)));
                        cells.push(String::new());
                    }
                    Err(e) => {
                        cells.extend(std::iter::repeat_n(String::new(), self.metric_columns.len()));
                        cells.push(csv_text(e));
                    }
                }
                let _ = writeln!(s, "{}", cells.join(","));
            }
        }
        s
    }

    /// gnuplot-style column list, followed by the configuration that produced
    /// the files.
    pub fn legend(&self) -> String {
        let mut s = format!("# {}: {}\n#\n# columns of {}.csv\n", self.name(), describe(self.config.experiment), self.name());
        let mut col = 1;
        for c in &self.group_columns {
            let _ = writeln!(s, "#  {col:>2}  {c}");
            col += 1;
        }
        for c in ["count (measurements contributing; one per trial, or per true candidate for hypothesis)", "failures (solver or metric errors, excluded)"] {
            let _ = writeln!(s, "#  {col:>2}  {c}");
            col += 1;
        }
        for m in &self.metric_columns {
            let _ = writeln!(s, "#  {col:>2}  {m} (mean)");
            let _ = writeln!(s, "#  {:>2}  {m}_std (sample standard deviation)", col + 1);
            col += 2;
        }
        let failures: usize = self.summary.iter().map(|r| r.failures).sum();
        let _ = writeln!(s, "#\n# skipped trials: {}\n# failed cells: {failures}\n#\n# configuration", self.skipped());
        for line in self.config.to_config_string().lines() {
            let _ = writeln!(s, "{line}");
        }
        s
    }

    /// Writes `<name>.csv`, `<name>.trials.csv` and `<name>.legend.txt`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            (format!("{}.csv", self.name()), self.summary_csv()),
            (format!("{}.trials.csv", self.name()), self.trials_csv()),
            (format!("{}.legend.txt", self.name()), self.legend()),
        ];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_text(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn describe(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::InclusionRatio => {
            "fraction of trials whose ground-truth eigenvalues lie in the sample-covariance polytope"
        }
        ExperimentKind::SimpleConvergence => "trace-minimizing selection against the number of signals",
        ExperimentKind::SparseStudy => "L1,1-minimizing selection against the number of signals",
        ExperimentKind::Scaling => "F-measure against graph order for several graph families",
        ExperimentKind::Hypothesis => "how often the generating operator ranks first among candidates",
    }
}

/// Runs trials `0..cfg.trials` in a work pool and reduces them in order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (group_columns, metric_columns) = runners::columns(cfg.experiment);
    let start = Instant::now();
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.seed, cfg.experiment.name(), &[trial as u64]);
            let t0 = Instant::now();
            let (measurements, skipped) = match runners::run_trial(cfg, seed) {
                Ok(m) => (m, None),
                Err(e) => {
                    log::warn!("{} trial {trial} skipped: {e}", cfg.experiment);
                    (Vec::new(), Some(e.to_string()))
                }
            };
            TrialRecord { trial, seed, measurements, skipped, elapsed: t0.elapsed() }
        })
        .collect();
    let summary = summarize(&records, metric_columns.len());
    log::info!(
        "{}: {} trials in {:.2?} (mean {:.2?} per trial)",
        cfg.experiment,
        cfg.trials,
        start.elapsed(),
        start.elapsed() / cfg.trials as u32
    );
    Ok(ExperimentOutput { config: cfg.clone(), group_columns, metric_columns, records, summary })
}

/// Runs an experiment and writes its files into `cfg.out_dir`. A marker
/// `<name>.csv.incomplete` exists while trials are running and is left behind
/// if the run aborts.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, Vec<PathBuf>)> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let marker = cfg.out_dir.join(format!("{}.csv.incomplete", cfg.experiment.name()));
    fs::write(&marker, "run in progress or aborted\n")?;
    let output = run_experiment(cfg)?;
    let written = output.write(&cfg.out_dir)?;
    fs::remove_file(&marker)?;
    Ok((output, written))
}
