//! Result emission: CSV and JSON tables plus a run manifest.
//!
//! Everything written here is byte-reproducible from (config, master seed)
//! except the manifest's timestamp. Floats are formatted with the shortest
//! round-trippable representation.

use crate::error::Result;
use crate::rng::stable_hash64;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, OutputFormats};
use super::runner::{IncreasingNTable, ResultsTable};
use super::verify::VerificationReport;

pub const RESULTS_CSV_HEADER: &str = "dataset,loss,cost,sup_mean,sup_std,rcr_loss_mean,rcr_loss_std,al_mean,al_std,rl_mean,rl_std,rej_mean,rej_std,ar_mean,ar_std,ra_mean,ra_std,n_total_mean,n_accepted_mean,sup_n,al_n,rl_n,ar_n,ra_n,reps_ok,reps_failed";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn summary_cells(s: Option<&crate::metrics::Summary>) -> (String, String, String) {
    match s {
        Some(s) => (format!("{}", s.mean), format!("{}", s.std), format!("{}", s.n)),
        None => (String::new(), String::new(), "0".into()),
    }
}

/// Write the aggregated results table as CSV and/or a flat JSON array, plus
/// the manifest. Returns the paths written.
pub fn emit_results(
    table: &ResultsTable,
    cfg: &ExperimentConfig,
    dir: &Path,
    formats: &OutputFormats,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    if formats.csv {
        let mut text = String::from(RESULTS_CSV_HEADER);
        text.push('\n');
        for row in &table.rows {
            let agg = row.aggregate.as_ref();
            let (sup_m, sup_s, sup_n) = summary_cells(agg.and_then(|a| a.sup.as_ref()));
            let (al_m, al_s, al_n) = summary_cells(agg.and_then(|a| a.al.as_ref()));
            let (rl_m, rl_s, rl_n) = summary_cells(agg.and_then(|a| a.rl.as_ref()));
            let (ar_m, ar_s, ar_n) = summary_cells(agg.and_then(|a| a.ar.as_ref()));
            let (ra_m, ra_s, ra_n) = summary_cells(agg.and_then(|a| a.ra.as_ref()));
            let cells: Vec<String> = vec![
                row.dataset.clone(),
                row.loss_kind.name().into(),
                row.cost.label(),
                sup_m,
                sup_s,
                fmt_opt(agg.map(|a| a.rcr_loss.mean)),
                fmt_opt(agg.map(|a| a.rcr_loss.std)),
                al_m,
                al_s,
                rl_m,
                rl_s,
                fmt_opt(agg.map(|a| a.rej.mean)),
                fmt_opt(agg.map(|a| a.rej.std)),
                ar_m,
                ar_s,
                ra_m,
                ra_s,
                fmt_opt(agg.map(|a| a.n_total.mean)),
                fmt_opt(agg.map(|a| a.n_accepted.mean)),
                sup_n,
                al_n,
                rl_n,
                ar_n,
                ra_n,
                format!("{}", row.reports.len()),
                format!("{}", row.failures.len()),
            ];
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let path = dir.join("results.csv");
        std::fs::write(&path, text)?;
        written.push(path);
    }

    if formats.json {
        let rows: Vec<serde_json::Value> = table
            .rows
            .iter()
            .map(|row| {
                let agg = row.aggregate.as_ref();
                let summary = |s: Option<&crate::metrics::Summary>| match s {
                    Some(s) => json!({ "mean": s.mean, "std": s.std, "n": s.n }),
                    None => serde_json::Value::Null,
                };
                json!({
                    "dataset": row.dataset,
                    "loss": row.loss_kind.name(),
                    "cost": row.cost.label(),
                    "sup": summary(agg.and_then(|a| a.sup.as_ref())),
                    "rcr_loss": summary(agg.map(|a| &a.rcr_loss)),
                    "al": summary(agg.and_then(|a| a.al.as_ref())),
                    "rl": summary(agg.and_then(|a| a.rl.as_ref())),
                    "rej": summary(agg.map(|a| &a.rej)),
                    "ar": summary(agg.and_then(|a| a.ar.as_ref())),
                    "ra": summary(agg.and_then(|a| a.ra.as_ref())),
                    "n_total_mean": agg.map(|a| a.n_total.mean),
                    "n_accepted_mean": agg.map(|a| a.n_accepted.mean),
                    "reps_ok": row.reports.len(),
                    "reps_failed": row.failures.len(),
                    "failures": row.failures.join(" | "),
                })
            })
            .collect();
        let path = dir.join("results.json");
        std::fs::write(&path, serde_json::to_string_pretty(&rows)?)?;
        written.push(path);
    }

    written.push(write_manifest(cfg, dir)?);
    Ok(written)
}

/// Manifest: canonical-config hash, tool version, master seed, mode, and a
/// wall-clock stamp (the one field exempt from byte determinism).
pub fn write_manifest(cfg: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    let canonical = serde_json::to_string(cfg)?;
    let hash = stable_hash64(&[canonical.as_bytes()]);
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "config_hash": format!("{hash:016x}"),
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": cfg.master_seed,
        "mode": cfg.mode.to_string(),
        "generated_at_unix": stamp,
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Write the verification report (JSON + property CSV + the regret sweep CSV).
pub fn emit_verification(
    report: &VerificationReport,
    cfg: &ExperimentConfig,
    dir: &Path,
    formats: &OutputFormats,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    if formats.json {
        let path = dir.join("verify_report.json");
        std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
        written.push(path);
    }
    if formats.csv {
        let mut text = String::from("property,total,failures,passed,detail\n");
        for p in &report.properties {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                p.name,
                p.total,
                p.failures,
                p.passed,
                p.detail.replace(',', ";")
            ));
        }
        let path = dir.join("verify_report.csv");
        std::fs::write(&path, text)?;
        written.push(path);

        let mut sweep = String::from("kind,target_regret,surrogate_regret,bound,holds\n");
        for row in &report.regret_rows {
            sweep.push_str(&format!(
                "{},{},{},{},{}\n",
                row.kind.name(),
                row.target_regret,
                row.surrogate_regret,
                row.bound,
                row.holds
            ));
        }
        let path = dir.join("regret_sweep.csv");
        std::fs::write(&path, sweep)?;
        written.push(path);
    }
    written.push(write_manifest(cfg, dir)?);
    Ok(written)
}

/// Write the increasing-data study: per-observation curve points and the
/// per-fraction median summary.
pub fn emit_increasing_n(
    table: &IncreasingNTable,
    cfg: &ExperimentConfig,
    dir: &Path,
    formats: &OutputFormats,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    if formats.csv {
        let mut text = String::from("fraction,rep,rcr_loss,al,rej\n");
        for obs in &table.observations {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                obs.fraction,
                obs.rep,
                obs.rcr_loss,
                fmt_opt(obs.al),
                obs.rej
            ));
        }
        let path = dir.join("increasing_n.csv");
        std::fs::write(&path, text)?;
        written.push(path);

        let mut summary = String::from("fraction,median_rcr_loss,median_al,reps_ok,reps_failed\n");
        for row in &table.rows {
            summary.push_str(&format!(
                "{},{},{},{},{}\n",
                row.fraction,
                fmt_opt(row.median_rcr_loss),
                fmt_opt(row.median_al),
                row.repetitions_attempted - row.failures.len(),
                row.failures.len()
            ));
        }
        let path = dir.join("increasing_n_summary.csv");
        std::fs::write(&path, summary)?;
        written.push(path);
    }
    if formats.json {
        let path = dir.join("increasing_n.json");
        std::fs::write(&path, serde_json::to_string_pretty(table)?)?;
        written.push(path);
    }
    written.push(write_manifest(cfg, dir)?);
    Ok(written)
}

#[allow(dead_code)]
fn assert_serialize<T: Serialize>() {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::CostSpec;
    use crate::metrics::{aggregate, MetricsReport};
    use crate::experiment::runner::ResultRow;

    fn sample_report(rcr: f64) -> MetricsReport {
        MetricsReport {
            rcr_loss: rcr,
            rej: 0.25,
            al: Some(rcr * 0.8),
            rl: None,
            ar: Some(0.1),
            ra: Some(0.4),
            n_total: 100,
            n_accepted: 75,
            n_rejected: 25,
            sup: Some(rcr * 1.5),
        }
    }

    fn sample_table() -> ResultsTable {
        let reports = vec![sample_report(2.0), sample_report(4.0)];
        ResultsTable {
            rows: vec![ResultRow {
                dataset: "toy".into(),
                loss_kind: crate::loss::BinaryLossKind::Mae,
                cost: CostSpec::Constant(3.0),
                aggregate: Some(aggregate(&reports).unwrap()),
                repetitions_attempted: 2,
                failures: vec![],
                reports,
            }],
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let table = sample_table();
        let paths = emit_results(&table, &cfg, dir.path(), &OutputFormats::default()).unwrap();
        assert_eq!(paths.len(), 3, "csv + json + manifest");

        let csv_text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let mut lines = csv_text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_CSV_HEADER);
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cells[0], "toy");
        assert_eq!(cells[1], "mae");
        assert_eq!(cells[2], "3");
        // Values reload exactly: mean rcr_loss is 3, std sqrt(2).
        let mean: f64 = cells[5].parse().unwrap();
        let std: f64 = cells[6].parse().unwrap();
        assert!((mean - 3.0).abs() < 1e-12);
        assert!((std - 2f64.sqrt()).abs() < 1e-12);
        // rl was absent in every report: empty cells, retained count 0.
        assert_eq!(cells[9], "");
        assert_eq!(cells[21], "0");

        let json_text = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
        let rows: serde_json::Value = serde_json::from_str(&json_text).unwrap();
        assert_eq!(rows[0]["rcr_loss"]["mean"].as_f64().unwrap(), 3.0);
        assert!(rows[0]["rl"].is_null());

        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["master_seed"], 0);
        assert!(manifest["config_hash"].as_str().unwrap().len() == 16);
    }

    #[test]
    fn empty_table_gives_header_only_csv_and_empty_json() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let table = ResultsTable::default();
        emit_results(&table, &cfg, dir.path(), &OutputFormats::default()).unwrap();
        let csv_text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv_text, format!("{RESULTS_CSV_HEADER}\n"));
        let json_text = std::fs::read_to_string(dir.path().join("results.json")).unwrap();
        let rows: serde_json::Value = serde_json::from_str(&json_text).unwrap();
        assert_eq!(rows.as_array().unwrap().len(), 0);
    }

    #[test]
    fn format_fanout_respected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let table = sample_table();
        let formats = OutputFormats { csv: true, json: false };
        emit_results(&table, &cfg, dir.path(), &formats).unwrap();
        assert!(dir.path().join("results.csv").exists());
        assert!(!dir.path().join("results.json").exists());
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn reemission_is_byte_identical_except_manifest() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let table = sample_table();
        emit_results(&table, &cfg, dir_a.path(), &OutputFormats::default()).unwrap();
        emit_results(&table, &cfg, dir_b.path(), &OutputFormats::default()).unwrap();
        for name in ["results.csv", "results.json"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} must be byte-identical");
        }
    }
}
