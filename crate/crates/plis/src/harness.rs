//! Replicated simulation runs.
//!
//! Each (cell, replication) pair gets its own seed derived from the plan's
//! base seed, generates one dataset and runs every method on it with that
//! same seed, so methods share calibration draws. Work is spread over a
//! rayon pool, but results are collected in (cell, rep, method) order
//! before anything is written, so outputs do not depend on thread count.
//!
//! Raw CSV (schema v1): `cell_id, method, generator, params_json, rep, fdp,
//! tdp, n_reject, runtime_ms, error`. `runtime_ms` is only filled when
//! timing is requested, since wall-clock times would break byte-for-byte
//! reproducibility. `error` holds the message of a failed replication.
//!
//! Summary CSV (schema v1): `cell_id, method, fdr, se_fdr, ap, se_ap, n_rep,
//! flag`. Standard errors are sample sd / √n over successful replications;
//! `flag` notes an undefined SE (n = 1) or failed replications.

use std::path::{Path, PathBuf};
use std::time::Instant;

use plis_core::procedures::MethodInput;
use plis_core::rng;
use plis_core::simgen::{self, GeneratorConfig};
use plis_core::compute_fdp_tdp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::plan::ExperimentPlan;
use crate::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub cell_id: usize,
    pub method: String,
    pub generator: String,
    pub params_json: String,
    pub rep: usize,
    pub fdp: Option<f64>,
    pub tdp: Option<f64>,
    pub n_reject: Option<usize>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: usize,
    pub method: String,
    pub fdr: f64,
    pub se_fdr: f64,
    pub ap: f64,
    pub se_ap: f64,
    pub n_rep: usize,
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub name: String,
    pub cells: Vec<GeneratorConfig>,
    pub rows: Vec<ReplicationMetrics>,
    pub summaries: Vec<CellSummary>,
}

/// Seed for replication `rep` of cell `cell`.
pub fn replication_seed(base: u64, cell: usize, rep: usize) -> u64 {
    rng::derive(base, &[cell as u64, rep as u64])
}

/// Sample mean and standard error; the SE is reported as 0 and flagged as
/// undefined when there is a single value.
pub fn mean_se(v: &[f64]) -> (f64, f64, bool) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN, false);
    }
    if v.iter().all(|&x| x == v[0]) {
        return (v[0], 0.0, v.len() > 1);
    }
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), true)
}

/// Sample variance (n − 1 denominator).
pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Runs `f(cell, rep)` for every pair on a pool of `threads` workers and
/// returns the results in cell-major order.
pub fn replicate<T, F>(n_cells: usize, reps: usize, threads: usize, f: F) -> AppResult<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::Failed(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n_cells * reps).into_par_iter().map(|k| f(k / reps, k % reps)).collect()))
}

/// Aggregates the rows of one (cell, method) pair. Failed replications are
/// left out of the means and counted in the flag.
pub fn summarize(rows: &[ReplicationMetrics]) -> AppResult<CellSummary> {
    let first = rows.first().ok_or_else(|| AppError::Failed("no replications to summarize".into()))?;
    let ok: Vec<&ReplicationMetrics> = rows.iter().filter(|r| r.error.is_none()).collect();
    let failed = rows.len() - ok.len();
    if ok.is_empty() {
        return Err(AppError::Failed(format!(
            "cell {} method {}: all {} replications failed",
            first.cell_id,
            first.method,
            rows.len()
        )));
    }
    let fdp: Vec<f64> = ok.iter().map(|r| r.fdp.unwrap_or(f64::NAN)).collect();
    let tdp: Vec<f64> = ok.iter().map(|r| r.tdp.unwrap_or(f64::NAN)).collect();
    let (fdr, se_fdr, defined) = mean_se(&fdp);
    let (ap, se_ap, _) = mean_se(&tdp);
    let mut flags = Vec::new();
    if !defined {
        flags.push("se_undefined".to_string());
    }
    if failed > 0 {
        flags.push(format!("failed={failed}"));
    }
    Ok(CellSummary {
        cell_id: first.cell_id,
        method: first.method.clone(),
        fdr,
        se_fdr,
        ap,
        se_ap,
        n_rep: ok.len(),
        flag: flags.join(";"),
    })
}

fn failed_summary(cell_id: usize, method: &str, reps: usize) -> CellSummary {
    CellSummary {
        cell_id,
        method: method.to_string(),
        fdr: f64::NAN,
        se_fdr: f64::NAN,
        ap: f64::NAN,
        se_ap: f64::NAN,
        n_rep: 0,
        flag: format!("failed={reps}"),
    }
}

fn summaries_of(rows: &[ReplicationMetrics], n_cells: usize, methods: &[String]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for cell in 0..n_cells {
        for m in methods {
            let group: Vec<ReplicationMetrics> =
                rows.iter().filter(|r| r.cell_id == cell && &r.method == m).cloned().collect();
            out.push(summarize(&group).unwrap_or_else(|_| failed_summary(cell, m, group.len())));
        }
    }
    out
}

pub fn run_plan(plan: &ExperimentPlan, opts: RunOptions) -> AppResult<PlanOutput> {
    let names: Vec<String> = plan.methods.iter().map(ToString::to_string).collect();
    let params: Vec<String> =
        plan.cells.iter().map(|c| serde_json::to_string(c).expect("cells serialize")).collect();
    let units = replicate(plan.cells.len(), plan.reps, opts.threads, |cell, rep| {
        let cfg = &plan.cells[cell];
        let seed = replication_seed(plan.seed, cell, rep);
        let row = |method: &str| ReplicationMetrics {
            cell_id: cell,
            method: method.to_string(),
            generator: cfg.kind().to_string(),
            params_json: params[cell].clone(),
            rep,
            fdp: None,
            tdp: None,
            n_reject: None,
            runtime_ms: None,
            error: None,
        };
        let data = match simgen::generate(cfg, seed) {
            Ok(d) => d,
            Err(e) => {
                return names.iter().map(|n| ReplicationMetrics { error: Some(e.to_string()), ..row(n) }).collect();
            }
        };
        let input = MethodInput { x: &data.x, f0: &plan.f0, nulls: data.nulls.as_deref() };
        plan.methods
            .iter()
            .zip(&names)
            .map(|(method, name)| {
                let start = Instant::now();
                let outcome = method
                    .run(&input, plan.alpha, seed)
                    .and_then(|out| Ok((compute_fdp_tdp(&out.decisions, &data.truth)?, out.decisions.count())));
                let runtime_ms = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
                match outcome {
                    Ok((mt, k)) => ReplicationMetrics {
                        fdp: Some(mt.fdp),
                        tdp: Some(mt.tdp),
                        n_reject: Some(k),
                        runtime_ms,
                        ..row(name)
                    },
                    Err(e) => ReplicationMetrics { error: Some(e.to_string()), runtime_ms, ..row(name) },
                }
            })
            .collect::<Vec<_>>()
    })?;
    let rows: Vec<ReplicationMetrics> = units.into_iter().flatten().collect();
    let summaries = summaries_of(&rows, plan.cells.len(), &names);
    Ok(PlanOutput { name: plan.name.clone(), cells: plan.cells.clone(), rows, summaries })
}

fn to_csv<T: Serialize>(items: &[T]) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for it in items {
        w.serialize(it)?;
    }
    w.into_inner().map_err(|e| AppError::Failed(e.to_string()))
}

pub fn read_raw(bytes: &[u8]) -> AppResult<Vec<ReplicationMetrics>> {
    csv::Reader::from_reader(bytes).deserialize().map(|r| r.map_err(AppError::from)).collect()
}

pub fn read_summary(bytes: &[u8]) -> AppResult<Vec<CellSummary>> {
    csv::Reader::from_reader(bytes).deserialize().map(|r| r.map_err(AppError::from)).collect()
}

/// Recomputes the summary table from raw rows alone.
pub fn summaries_from_raw(rows: &[ReplicationMetrics]) -> Vec<CellSummary> {
    let n_cells = rows.iter().map(|r| r.cell_id + 1).max().unwrap_or(0);
    let mut methods: Vec<String> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    summaries_of(rows, n_cells, &methods)
}

impl PlanOutput {
    pub fn raw_csv(&self) -> AppResult<Vec<u8>> {
        to_csv(&self.rows)
    }

    pub fn summary_csv(&self) -> AppResult<Vec<u8>> {
        to_csv(&self.summaries)
    }

    /// Writes `<name>_raw.csv` and `<name>_summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> AppResult<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        let raw = dir.join(format!("{}_raw.csv", self.name));
        let summary = dir.join(format!("{}_summary.csv", self.name));
        std::fs::write(&raw, self.raw_csv()?).map_err(|e| AppError::io(&raw, e))?;
        std::fs::write(&summary, self.summary_csv()?).map_err(|e| AppError::io(&summary, e))?;
        Ok((raw, summary))
    }

    pub fn summary(&self, cell: usize, method: &str) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.cell_id == cell && s.method == method)
    }

    pub fn rows_for<'a>(&'a self, cell: usize, method: &'a str) -> impl Iterator<Item = &'a ReplicationMetrics> + 'a {
        self.rows.iter().filter(move |r| r.cell_id == cell && r.method == method)
    }

    /// (cell, method) pairs in which every replication failed.
    pub fn wholly_failed(&self) -> Vec<(usize, String)> {
        self.summaries.iter().filter(|s| s.n_rep == 0).map(|s| (s.cell_id, s.method.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(fdp: f64, tdp: f64) -> ReplicationMetrics {
        ReplicationMetrics {
            cell_id: 0,
            method: "bh".into(),
            generator: "hmm".into(),
            params_json: "{}".into(),
            rep: 0,
            fdp: Some(fdp),
            tdp: Some(tdp),
            n_reject: Some(1),
            runtime_ms: None,
            error: None,
        }
    }

    #[test]
    fn summary_means() {
        let s = summarize(&[row(0.0, 0.5), row(0.1, 0.7)]).unwrap();
        assert!((s.fdr - 0.05).abs() < 1e-15);
        assert!((s.ap - 0.6).abs() < 1e-15);
        assert!((s.se_fdr - 0.05).abs() < 1e-15);
        assert_eq!((s.n_rep, s.flag.as_str()), (2, ""));
    }

    #[test]
    fn single_replication_flags_se() {
        let s = summarize(&[row(0.2, 0.9)]).unwrap();
        assert_eq!((s.fdr, s.ap, s.se_fdr, s.se_ap), (0.2, 0.9, 0.0, 0.0));
        assert_eq!(s.flag, "se_undefined");
    }

    #[test]
    fn constant_rows_have_zero_se() {
        let s = summarize(&vec![row(0.04, 0.3); 10]).unwrap();
        assert_eq!((s.se_fdr, s.se_ap), (0.0, 0.0));
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let mut bad = row(0.0, 0.0);
        bad.error = Some("boom".into());
        bad.fdp = None;
        let s = summarize(&[row(0.1, 0.5), bad.clone(), row(0.1, 0.5)]).unwrap();
        assert_eq!((s.n_rep, s.flag.as_str()), (2, "failed=1"));
        assert!(summarize(&[bad]).is_err());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn bernoulli_se_matches_closed_form() {
        // fdp ∈ {0, 1} with 10 ones in 200: se = sqrt(p(1−p)/(n−1))
        let rows: Vec<_> = (0..200).map(|i| row(if i % 20 == 0 { 1.0 } else { 0.0 }, 1.0)).collect();
        let s = summarize(&rows).unwrap();
        let p: f64 = 0.05;
        assert!((s.fdr - p).abs() < 1e-15);
        assert!((s.se_fdr - (p * (1.0 - p) / 199.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn replicate_preserves_order() {
        for threads in [1, 3] {
            let v = replicate(4, 5, threads, |c, r| (c, r)).unwrap();
            assert_eq!(v.len(), 20);
            assert_eq!(v[7], (1, 2));
        }
    }
}
