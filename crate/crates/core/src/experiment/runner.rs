//! Grid execution: one cell per (loss kind, cost, repetition), each fully
//! determined by a seed hashed from its coordinates. Cells run on a bounded
//! worker pool, fail independently, and are aggregated in a canonical order
//! so reruns are byte-identical.

use crate::data::{load_csv, split, standardize, Dataset, StandardizationStats};
use crate::error::{Error, Result};
use crate::loss::{BinaryLossKind, CostSpec};
use crate::metrics::{aggregate, evaluate, supervised_mse, AggregateReport, MetricsReport};
use crate::model::ModelSpec;
use crate::oracle::sample_synthetic;
use crate::rng::{derive_seed, stable_hash64, Rng};
use crate::train::{select_lr_detailed, train_supervised, TrainHistory};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DatasetConfig, ExperimentConfig, Mode};

/// Coordinates of one grid cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub kind_idx: usize,
    pub cost_idx: usize,
    pub rep: usize,
}

/// Successful cell output.
pub struct CellOutput {
    pub report: MetricsReport,
    pub history: TrainHistory,
    pub chosen_lr: f64,
}

/// One aggregated results row: a (dataset, loss kind, cost) grid line.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub dataset: String,
    pub loss_kind: BinaryLossKind,
    pub cost: CostSpec,
    /// Absent when every repetition of this row failed.
    pub aggregate: Option<AggregateReport>,
    pub repetitions_attempted: usize,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub reports: Vec<MetricsReport>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| !r.failures.is_empty())
    }
}

/// Worker pool size: the RCR_JOBS environment variable overrides the
/// configured value; unset means one worker per core.
pub fn resolve_jobs(cfg_jobs: Option<usize>) -> Option<usize> {
    match std::env::var("RCR_JOBS") {
        Ok(text) => text.trim().parse::<usize>().ok().filter(|&n| n > 0),
        Err(_) => cfg_jobs,
    }
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid { what: "worker pool", reason: e.to_string() })
}

/// Seed for one grid cell: hash of (master seed, dataset id, loss kind,
/// cost index, repetition index) plus a mode tag so the increasing-n cells
/// never collide with experiment cells.
fn cell_seed(cfg: &ExperimentConfig, tag: &str, kind: BinaryLossKind, cost_idx: usize, rep: usize) -> u64 {
    let name = cfg.dataset.as_ref().map(|d| d.name()).unwrap_or_default();
    stable_hash64(&[
        tag.as_bytes(),
        &cfg.master_seed.to_le_bytes(),
        name.as_bytes(),
        kind.name().as_bytes(),
        &(cost_idx as u64).to_le_bytes(),
        &(rep as u64).to_le_bytes(),
    ])
}

/// Materialized train/val/test for one cell.
struct CellData {
    train: Dataset,
    val: Dataset,
    test: Dataset,
}

fn materialize(cfg: &ExperimentConfig, full: Option<&Dataset>, seed: u64) -> Result<CellData> {
    let (mut train, mut val, mut test) = match cfg.dataset.as_ref().expect("dataset checked by validate") {
        DatasetConfig::Csv { .. } => {
            let full = full.expect("csv dataset preloaded");
            split(full, cfg.split.as_tuple(), seed)?
        }
        DatasetConfig::Synthetic { spec, n_train, n_val, n_test, .. } => {
            let root = Rng::new(seed);
            let train = sample_synthetic(spec, *n_train, &mut root.fork(0))?;
            let val = sample_synthetic(spec, *n_val, &mut root.fork(1))?;
            let test = sample_synthetic(spec, *n_test, &mut root.fork(2))?;
            (train, val, test)
        }
    };
    if cfg.standardize_enabled() {
        let stats = StandardizationStats::fit(&train);
        train = standardize(&stats, &train)?;
        val = standardize(&stats, &val)?;
        test = standardize(&stats, &test)?;
    }
    Ok(CellData { train, val, test })
}

/// Run one grid cell end to end: split, pick the learning rate, train the
/// supervised baseline and the pair, evaluate on the test split.
fn run_cell(
    cfg: &ExperimentConfig,
    full: Option<&Dataset>,
    kind: BinaryLossKind,
    cost: &CostSpec,
    cost_idx: usize,
    rep: usize,
    tag: &str,
    fraction: Option<f64>,
) -> Result<CellOutput> {
    let seed = cell_seed(cfg, tag, kind, cost_idx, rep);
    let data = materialize(cfg, full, derive_seed(seed, 0))?;

    let train_set = match fraction {
        None => data.train,
        Some(f) => {
            let n = data.train.len();
            let keep = ((f * n as f64).floor() as usize).min(n);
            let mut indices: Vec<usize> = (0..n).collect();
            Rng::new(derive_seed(seed, 2)).shuffle(&mut indices);
            indices.truncate(keep);
            data.train.take(&indices)
        }
    };

    let d = train_set.dim();
    let spec_h: ModelSpec = cfg.model_h.to_spec(d);
    let spec_r: ModelSpec = cfg.model_r.to_spec(d);
    let mut train_cfg = cfg.train.clone();
    train_cfg.loss_kind = kind;
    train_cfg.cost = cost.clone();
    train_cfg.seed = derive_seed(seed, 1);

    let selection = select_lr_detailed(&train_set, &data.val, &spec_h, &spec_r, &train_cfg)?;
    let (pair, history) = selection.best_run;
    let chosen = selection.config;

    let sup_params = train_supervised(&train_set, &spec_h, &chosen)?;
    let mut report = evaluate(&pair, &data.test, cost)?;
    report.sup = Some(supervised_mse(&sup_params, &data.test)?);
    Ok(CellOutput { report, history, chosen_lr: chosen.lr })
}

fn load_full(cfg: &ExperimentConfig) -> Result<Option<Dataset>> {
    match cfg.dataset.as_ref() {
        Some(DatasetConfig::Csv { path, target_column, cost_column, .. }) => Ok(Some(load_csv(
            path,
            target_column,
            cost_column.as_deref(),
        )?)),
        _ => Ok(None),
    }
}

type CellResult = (CellKey, std::result::Result<CellOutput, String>);

/// Execute the full (loss kind x cost x repetition) grid and aggregate each
/// (loss kind, cost) row over its repetitions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let full = load_full(cfg)?;
    let dataset_name = cfg.dataset.as_ref().expect("validated").name();

    let mut plans: Vec<CellKey> = Vec::new();
    for kind_idx in 0..cfg.loss_kinds.len() {
        for cost_idx in 0..cfg.costs.len() {
            for rep in 0..cfg.repetitions {
                plans.push(CellKey { kind_idx, cost_idx, rep });
            }
        }
    }

    let pool = build_pool(resolve_jobs(cfg.jobs))?;
    let mut outcomes: Vec<CellResult> = pool.install(|| {
        plans
            .par_iter()
            .map(|key| {
                let kind = cfg.loss_kinds[key.kind_idx];
                let cost = &cfg.costs[key.cost_idx];
                let outcome = run_cell(cfg, full.as_ref(), kind, cost, key.cost_idx, key.rep, "experiment", None)
                    .map_err(|e| e.to_string());
                (key.clone(), outcome)
            })
            .collect()
    });
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));

    if cfg.emit_history {
        emit_histories(cfg, &dataset_name, &outcomes)?;
    }

    let mut table = ResultsTable::default();
    for kind_idx in 0..cfg.loss_kinds.len() {
        for cost_idx in 0..cfg.costs.len() {
            let mut reports = Vec::new();
            let mut failures = Vec::new();
            for (key, outcome) in &outcomes {
                if key.kind_idx == kind_idx && key.cost_idx == cost_idx {
                    match outcome {
                        Ok(out) => reports.push(out.report.clone()),
                        Err(msg) => failures.push(format!(
                            "{dataset_name}/{}/cost[{cost_idx}]/rep{}: {msg}",
                            cfg.loss_kinds[kind_idx].name(),
                            key.rep
                        )),
                    }
                }
            }
            let agg = if reports.is_empty() { None } else { Some(aggregate(&reports)?) };
            table.rows.push(ResultRow {
                dataset: dataset_name.clone(),
                loss_kind: cfg.loss_kinds[kind_idx],
                cost: cfg.costs[cost_idx].clone(),
                aggregate: agg,
                repetitions_attempted: cfg.repetitions,
                failures,
                reports,
            });
        }
    }
    Ok(table)
}

fn emit_histories(cfg: &ExperimentConfig, dataset: &str, outcomes: &[CellResult]) -> Result<()> {
    let dir = cfg.output_dir.join("history");
    std::fs::create_dir_all(&dir)?;
    for (key, outcome) in outcomes {
        if let Ok(out) = outcome {
            let kind = cfg.loss_kinds[key.kind_idx].name();
            let cost = cfg.costs[key.cost_idx].label().replace('.', "_");
            let path = dir.join(format!("{dataset}_{kind}_c{cost}_rep{}.csv", key.rep));
            let file = std::fs::File::create(path)?;
            out.history.write_csv(std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

/// One (fraction, repetition) observation of the increasing-data study.
#[derive(Debug, Clone, Serialize)]
pub struct FractionObservation {
    pub fraction: f64,
    pub rep: usize,
    pub rcr_loss: f64,
    pub al: Option<f64>,
    pub rej: f64,
}

/// Median metrics per train-subset fraction.
#[derive(Debug, Clone, Serialize)]
pub struct FractionRow {
    pub fraction: f64,
    pub median_rcr_loss: Option<f64>,
    pub median_al: Option<f64>,
    pub repetitions_attempted: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct IncreasingNTable {
    pub observations: Vec<FractionObservation>,
    pub rows: Vec<FractionRow>,
}

impl IncreasingNTable {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| !r.failures.is_empty())
    }
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Train on growing fractions of the train split (seeded subsampling) and
/// report per-fraction medians of RcR loss and accepted loss. Uses the first
/// configured loss kind and cost.
pub fn run_increasing_n(cfg: &ExperimentConfig) -> Result<IncreasingNTable> {
    cfg.validate()?;
    let full = load_full(cfg)?;
    let kind = cfg.loss_kinds[0];
    let cost = cfg.costs[0].clone();

    // Preflight: the train-split size is deterministic, so undersized
    // fractions are a configuration error, not a cell failure.
    let n_train = match cfg.dataset.as_ref().expect("validated") {
        DatasetConfig::Csv { .. } => {
            let n = full.as_ref().expect("csv preloaded").len();
            (cfg.split.train * n as f64).floor() as usize
        }
        DatasetConfig::Synthetic { n_train, .. } => *n_train,
    };
    for &f in &cfg.fractions {
        let keep = (f * n_train as f64).floor() as usize;
        if keep < 10 {
            return Err(Error::Invalid {
                what: "fractions",
                reason: format!("fraction {f} keeps only {keep} of {n_train} training examples (minimum 10)"),
            });
        }
    }

    let mut plans: Vec<(usize, usize)> = Vec::new();
    for f_idx in 0..cfg.fractions.len() {
        for rep in 0..cfg.repetitions {
            plans.push((f_idx, rep));
        }
    }
    let pool = build_pool(resolve_jobs(cfg.jobs))?;
    let mut outcomes: Vec<((usize, usize), std::result::Result<CellOutput, String>)> = pool.install(|| {
        plans
            .par_iter()
            .map(|&(f_idx, rep)| {
                let outcome = run_cell(
                    cfg,
                    full.as_ref(),
                    kind,
                    &cost,
                    f_idx,
                    rep,
                    "increasing-n",
                    Some(cfg.fractions[f_idx]),
                )
                .map_err(|e| e.to_string());
                ((f_idx, rep), outcome)
            })
            .collect()
    });
    outcomes.sort_by_key(|(key, _)| *key);

    let mut table = IncreasingNTable::default();
    for (f_idx, &fraction) in cfg.fractions.iter().enumerate() {
        let mut rcr = Vec::new();
        let mut al = Vec::new();
        let mut failures = Vec::new();
        for ((fi, rep), outcome) in &outcomes {
            if *fi != f_idx {
                continue;
            }
            match outcome {
                Ok(out) => {
                    table.observations.push(FractionObservation {
                        fraction,
                        rep: *rep,
                        rcr_loss: out.report.rcr_loss,
                        al: out.report.al,
                        rej: out.report.rej,
                    });
                    rcr.push(out.report.rcr_loss);
                    if let Some(v) = out.report.al {
                        al.push(v);
                    }
                }
                Err(msg) => failures.push(format!("fraction {fraction}/rep{rep}: {msg}")),
            }
        }
        table.rows.push(FractionRow {
            fraction,
            median_rcr_loss: median(&mut rcr),
            median_al: median(&mut al),
            repetitions_attempted: cfg.repetitions,
            failures,
        });
    }
    Ok(table)
}

/// Convenience check used by the binary: does this mode have any failures.
pub fn mode_failed(mode: Mode, experiment: Option<&ResultsTable>, incn: Option<&IncreasingNTable>) -> bool {
    match mode {
        Mode::Experiment => experiment.map(ResultsTable::has_failures).unwrap_or(true),
        Mode::IncreasingN => incn.map(IncreasingNTable::has_failures).unwrap_or(true),
        Mode::VerifyTheory => false,
    }
}
