//! Tabular dataset ingestion, deterministic splitting, and feature scaling.
//!
//! Input files are UTF-8, comma-delimited CSV with a header row and '.' as the
//! decimal separator. Categorical columns are expected to be pre-encoded
//! (one-hot) before loading; the loader only parses numeric cells.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;
use std::path::Path;

/// A feature matrix with real targets and an optional per-example cost column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub costs: Option<Vec<f64>>,
    pub feature_names: Option<Vec<String>>,
    pub target_name: String,
    pub cost_name: Option<String>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        Dataset::with_costs(features, targets, None)
    }

    pub fn with_costs(features: Matrix, targets: Vec<f64>, costs: Option<Vec<f64>>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Empty { what: "dataset" });
        }
        if targets.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                context: "dataset targets",
                expected: features.rows(),
                actual: targets.len(),
            });
        }
        if let Some(&bad) = targets.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "target", value: bad });
        }
        if let Some(costs) = &costs {
            if costs.len() != features.rows() {
                return Err(Error::DimensionMismatch {
                    context: "dataset costs",
                    expected: features.rows(),
                    actual: costs.len(),
                });
            }
            for &c in costs {
                if !c.is_finite() {
                    return Err(Error::NonFinite { what: "cost", value: c });
                }
                if c < 0.0 {
                    return Err(Error::Negative { what: "cost", value: c });
                }
            }
        }
        Ok(Dataset {
            features,
            targets,
            costs,
            feature_names: None,
            target_name: "y".into(),
            cost_name: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// New dataset containing the given rows, in order.
    pub fn take(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.take_rows(indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            costs: self
                .costs
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            cost_name: self.cost_name.clone(),
        }
    }

    /// Write the dataset back out in the input format.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        let d = self.dim();
        let feature_names: Vec<String> = match &self.feature_names {
            Some(names) => names.clone(),
            None => (0..d).map(|j| format!("x{j}")).collect(),
        };
        let mut header = feature_names;
        header.push(self.target_name.clone());
        if self.costs.is_some() {
            header.push(self.cost_name.clone().unwrap_or_else(|| "cost".into()));
        }
        writer.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            record.clear();
            record.extend(self.features.row(i).iter().map(|v| format!("{v}")));
            record.push(format!("{}", self.targets[i]));
            if let Some(costs) = &self.costs {
                record.push(format!("{}", costs[i]));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Load a CSV file. Every column except the target (and the optional cost
/// column) becomes a feature; all referenced cells must parse as finite
/// numbers.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    cost_column: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file_label = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn {
            file: file_label.clone(),
            column: target_column.to_owned(),
        })?;
    let cost_idx = match cost_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MissingColumn { file: file_label.clone(), column: name.to_owned() }
        })?),
        None => None,
    };

    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_idx && Some(j) != cost_idx)
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&j| headers[j].clone()).collect();

    let parse = |text: &str, row: usize, col: usize| -> Result<f64> {
        let value: f64 = text.trim().parse().map_err(|_| Error::BadCell {
            file: file_label.clone(),
            row,
            column: headers[col].clone(),
            reason: format!("cannot parse {text:?} as a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::BadCell {
                file: file_label.clone(),
                row,
                column: headers[col].clone(),
                reason: format!("non-finite value {value}"),
            });
        }
        Ok(value)
    };

    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut costs: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2; // 1-based, after the header line
        if record.len() != headers.len() {
            return Err(Error::Invalid {
                what: "csv row",
                reason: format!("{file_label}: row {row} has {} fields, expected {}", record.len(), headers.len()),
            });
        }
        for &j in &feature_idx {
            data.push(parse(&record[j], row, j)?);
        }
        targets.push(parse(&record[target_idx], row, target_idx)?);
        if let Some(j) = cost_idx {
            let c = parse(&record[j], row, j)?;
            if c < 0.0 {
                return Err(Error::BadCell {
                    file: file_label.clone(),
                    row,
                    column: headers[j].clone(),
                    reason: format!("negative cost {c}"),
                });
            }
            costs.push(c);
        }
    }
    if targets.is_empty() {
        return Err(Error::Empty { what: "csv file" });
    }

    let features = Matrix::from_vec(targets.len(), feature_idx.len(), data)?;
    let mut ds = Dataset::with_costs(features, targets, cost_idx.map(|_| costs))?;
    ds.feature_names = Some(feature_names);
    ds.target_name = target_column.to_owned();
    ds.cost_name = cost_column.map(str::to_owned);
    Ok(ds)
}

/// Split into train/val/test by a seeded permutation followed by contiguous
/// slicing. Sizes are floor(r_train * n), floor(r_val * n), remainder.
pub fn split(ds: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let (r_train, r_val, r_test) = ratios;
    for (what, r) in [("train", r_train), ("val", r_val), ("test", r_test)] {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Invalid {
                what: "split ratios",
                reason: format!("{what} ratio must be positive, got {r}"),
            });
        }
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid {
            what: "split ratios",
            reason: format!("ratios must sum to 1, got {}", r_train + r_val + r_test),
        });
    }
    let n = ds.len();
    if n < 3 {
        return Err(Error::Invalid {
            what: "split",
            reason: format!("need at least 3 examples, got {n}"),
        });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut indices);
    let n_train = (r_train * n as f64).floor() as usize;
    let n_val = (r_val * n as f64).floor() as usize;
    let train = ds.take(&indices[..n_train]);
    let val = ds.take(&indices[n_train..n_train + n_val]);
    let test = ds.take(&indices[n_train + n_val..]);
    Ok((train, val, test))
}

/// Per-feature mean and standard deviation measured on a training split.
///
/// Constant features get their (zero) standard deviation replaced by 1 so the
/// transform stays invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Measure population mean/std per feature.
    pub fn fit(ds: &Dataset) -> Self {
        let n = ds.len() as f64;
        let d = ds.dim();
        let mut mean = vec![0.0; d];
        for i in 0..ds.len() {
            for (m, &v) in mean.iter_mut().zip(ds.features.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for i in 0..ds.len() {
            for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(ds.features.row(i)) {
                let diff = v - m;
                *s += diff * diff;
            }
        }
        let std = var
            .iter()
            .map(|&s| {
                let sd = (s / n).sqrt();
                if sd == 0.0 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        StandardizationStats { mean, std }
    }
}

/// Z-score the features with the given stats; targets and costs pass through.
pub fn standardize(stats: &StandardizationStats, ds: &Dataset) -> Result<Dataset> {
    if stats.mean.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            context: "standardization stats",
            expected: ds.dim(),
            actual: stats.mean.len(),
        });
    }
    let mut out = ds.clone();
    for i in 0..out.len() {
        for ((v, &m), &s) in out.features.row_mut(i).iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = (*v - m) / s;
        }
    }
    Ok(out)
}

/// Inverse of [`standardize`].
pub fn destandardize(stats: &StandardizationStats, ds: &Dataset) -> Result<Dataset> {
    if stats.mean.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            context: "standardization stats",
            expected: ds.dim(),
            actual: stats.mean.len(),
        });
    }
    let mut out = ds.clone();
    for i in 0..out.len() {
        for ((v, &m), &s) in out.features.row_mut(i).iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = *v * s + m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_parse() {
        let f = write_temp("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let ds = load_csv(f.path(), "y", None).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.targets, vec![3.0, 6.0, 9.0]);
        assert_eq!(ds.features.row(1), &[4.0, 5.0]);
    }

    #[test]
    fn cost_column_parsed_and_validated() {
        let f = write_temp("a,y,c\n1,2,0.5\n3,4,0\n");
        let ds = load_csv(f.path(), "y", Some("c")).unwrap();
        assert_eq!(ds.costs, Some(vec![0.5, 0.0]));
        assert_eq!(ds.dim(), 1);

        let bad = write_temp("a,y,c\n1,2,-1\n");
        let err = load_csv(bad.path(), "y", Some("c")).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
    }

    #[test]
    fn missing_column_and_bad_cell_errors() {
        let f = write_temp("a,b\n1,2\n");
        assert!(matches!(load_csv(f.path(), "y", None), Err(Error::MissingColumn { .. })));

        let g = write_temp("a,y\nfoo,2\n");
        let err = load_csv(g.path(), "y", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("\"a\""), "{msg}");
    }

    #[test]
    fn round_trip_is_value_identical() {
        let f = write_temp("a,b,y\n0.123456789012345,-7.25,3.5\n1e-8,2.5,0.25\n9,8,7\n");
        let ds = load_csv(f.path(), "y", None).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        ds.write_csv(out.path()).unwrap();
        let back = load_csv(out.path(), "y", None).unwrap();
        assert_eq!(ds.len(), back.len());
        for i in 0..ds.len() {
            for (a, b) in ds.features.row(i).iter().zip(back.features.row(i)) {
                assert!((a - b).abs() <= 1e-15);
            }
            assert!((ds.targets[i] - back.targets[i]).abs() <= 1e-15);
        }
    }

    fn toy(n: usize) -> Dataset {
        let features = Matrix::from_vec(n, 2, (0..2 * n).map(|i| i as f64).collect()).unwrap();
        let targets = (0..n).map(|i| i as f64).collect();
        Dataset::new(features, targets).unwrap()
    }

    #[test]
    fn split_sizes_exact_division() {
        let (train, val, test) = split(&toy(10), (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (6, 2, 2));
    }

    #[test]
    fn split_sizes_floor_and_remainder() {
        let (train, val, test) = split(&toy(7), (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (4, 1, 2));
    }

    #[test]
    fn split_deterministic_and_partitioning() {
        let ds = toy(23);
        let a = split(&ds, (0.6, 0.2, 0.2), 9).unwrap();
        let b = split(&ds, (0.6, 0.2, 0.2), 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        // Targets identify rows here: the three parts must partition 0..n.
        let mut seen: Vec<f64> = a
            .0
            .targets
            .iter()
            .chain(&a.1.targets)
            .chain(&a.2.targets)
            .copied()
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..23).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_tiny_and_bad_ratios() {
        assert!(split(&toy(3), (0.5, 0.2, 0.2), 1).is_err());
        let err = split(&toy(2), (0.6, 0.2, 0.2), 1);
        assert!(err.is_err());
    }

    #[test]
    fn standardize_train_stats() {
        let ds = toy(50);
        let stats = StandardizationStats::fit(&ds);
        let z = standardize(&stats, &ds).unwrap();
        for j in 0..z.dim() {
            let col: Vec<f64> = (0..z.len()).map(|i| z.features.get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-10, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
        // Targets untouched.
        assert_eq!(z.targets, ds.targets);
    }

    #[test]
    fn constant_feature_passes_through_as_zero() {
        let features = Matrix::from_vec(4, 2, vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0]).unwrap();
        let ds = Dataset::new(features, vec![0.0; 4]).unwrap();
        let stats = StandardizationStats::fit(&ds);
        assert_eq!(stats.std[0], 1.0);
        let z = standardize(&stats, &ds).unwrap();
        for i in 0..4 {
            assert_eq!(z.features.get(i, 0), 0.0);
        }
    }

    #[test]
    fn no_peeking_into_test_stats() {
        let ds = toy(40);
        let (train, _, test) = split(&ds, (0.6, 0.2, 0.2), 3).unwrap();
        let train_stats = StandardizationStats::fit(&train);
        let test_stats = StandardizationStats::fit(&test);
        assert_ne!(train_stats, test_stats);
        // Test standardized with train stats is not z-scored w.r.t. itself.
        let z = standardize(&train_stats, &test).unwrap();
        let reopened = StandardizationStats::fit(&z);
        assert!(reopened.mean.iter().any(|m| m.abs() > 1e-6));
    }

    #[test]
    fn standardization_invertible() {
        let ds = toy(20);
        let stats = StandardizationStats::fit(&ds);
        let z = standardize(&stats, &ds).unwrap();
        let back = destandardize(&stats, &z).unwrap();
        for i in 0..ds.len() {
            for (a, b) in ds.features.row(i).iter().zip(back.features.row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stats_dimension_mismatch() {
        let ds = toy(5);
        let stats = StandardizationStats { mean: vec![0.0], std: vec![1.0] };
        assert!(standardize(&stats, &ds).is_err());
    }
}
