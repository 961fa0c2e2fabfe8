//! The evaluation suite: RcR loss, rejection rate, accepted/rejected losses,
//! false rejection/acceptance rates, and the supervised baseline slot.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::CostSpec;
use crate::model::{forward, RcRPair};
use serde::{Deserialize, Serialize};

/// Test-set metrics of one trained pair.
///
/// `al`/`rl`/`ar`/`ra` are absent (never fabricated as 0) when their
/// denominator subset is empty. Rates are fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean target loss: squared error on accepted rows, cost on rejected.
    pub rcr_loss: f64,
    /// Fraction of rows rejected.
    pub rej: f64,
    /// Mean squared error over accepted rows.
    pub al: Option<f64>,
    /// Mean squared error the regressor would have incurred over rejected rows.
    pub rl: Option<f64>,
    /// False rejection rate: of rows with squared error below their cost,
    /// the fraction that was rejected.
    pub ar: Option<f64>,
    /// False acceptance rate: of rows with squared error at or above their
    /// cost, the fraction that was accepted.
    pub ra: Option<f64>,
    pub n_total: usize,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// Test MSE of the fully supervised baseline, when one was trained.
    pub sup: Option<f64>,
}

pub const METRICS_CSV_HEADER: &str = "cost,sup,rcr_loss,al,rl,rej,ar,ra,n_total,n_accepted";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl MetricsReport {
    /// One CSV row in the contracted column order; `cost_label` identifies the
    /// cost specification under which the report was computed.
    pub fn csv_row(&self, cost_label: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            cost_label,
            opt(self.sup),
            self.rcr_loss,
            opt(self.al),
            opt(self.rl),
            self.rej,
            opt(self.ar),
            opt(self.ra),
            self.n_total,
            self.n_accepted
        )
    }
}

fn tally(preds: &[f64], accepts: &[bool], targets: &[f64], costs: &[f64]) -> MetricsReport {
    let n = targets.len();
    let mut loss_sum = 0.0;
    let mut al_sum = 0.0;
    let mut rl_sum = 0.0;
    let mut n_accepted = 0usize;
    let mut should_accept = 0usize; // squared error < cost
    let mut false_rejects = 0usize;
    let mut should_reject = 0usize; // squared error >= cost (ties reject-worthy)
    let mut false_accepts = 0usize;

    for i in 0..n {
        let d = preds[i] - targets[i];
        let se = d * d;
        if accepts[i] {
            n_accepted += 1;
            loss_sum += se;
            al_sum += se;
        } else {
            loss_sum += costs[i];
            rl_sum += se;
        }
        if se < costs[i] {
            should_accept += 1;
            if !accepts[i] {
                false_rejects += 1;
            }
        } else {
            should_reject += 1;
            if accepts[i] {
                false_accepts += 1;
            }
        }
    }

    let n_rejected = n - n_accepted;
    let ratio = |num: usize, den: usize| if den > 0 { Some(num as f64 / den as f64) } else { None };
    MetricsReport {
        rcr_loss: loss_sum / n as f64,
        rej: n_rejected as f64 / n as f64,
        al: if n_accepted > 0 { Some(al_sum / n_accepted as f64) } else { None },
        rl: if n_rejected > 0 { Some(rl_sum / n_rejected as f64) } else { None },
        ar: ratio(false_rejects, should_accept),
        ra: ratio(false_accepts, should_reject),
        n_total: n,
        n_accepted,
        n_rejected,
        sup: None,
    }
}

/// Evaluate a trained pair on a test set. Acceptance is `r(x) > 0`.
pub fn evaluate(pair: &RcRPair, test: &Dataset, cost: &CostSpec) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::Empty { what: "test set" });
    }
    let costs = cost.resolve(test)?;
    let (h_out, _) = forward(&pair.h, &test.features)?;
    let (r_out, _) = forward(&pair.r, &test.features)?;
    let preds: Vec<f64> = h_out.as_slice().to_vec();
    let accepts: Vec<bool> = r_out.as_slice().iter().map(|&v| v > 0.0).collect();
    Ok(tally(&preds, &accepts, &test.targets, &costs))
}

/// Evaluate arbitrary regressor/rejector functions on a test set. Used to
/// score oracle pairs that are not parameterized models.
pub fn evaluate_with<H, R>(h: H, r: R, test: &Dataset, cost: &CostSpec) -> Result<MetricsReport>
where
    H: Fn(&[f64]) -> f64,
    R: Fn(&[f64]) -> f64,
{
    if test.is_empty() {
        return Err(Error::Empty { what: "test set" });
    }
    let costs = cost.resolve(test)?;
    let mut preds = Vec::with_capacity(test.len());
    let mut accepts = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let row = test.features.row(i);
        preds.push(h(row));
        accepts.push(r(row) > 0.0);
    }
    Ok(tally(&preds, &accepts, &test.targets, &costs))
}

/// Plain test MSE of a single regressor; the `Sup` baseline value.
pub fn supervised_mse(params: &crate::model::ModelParams, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty { what: "test set" });
    }
    let (out, _) = forward(params, &test.features)?;
    let mut acc = 0.0;
    for i in 0..test.len() {
        let d = out.get(i, 0) - test.targets[i];
        acc += d * d;
    }
    Ok(acc / test.len() as f64)
}

/// Sample mean and sample standard deviation (n-1 denominator; 0 for a
/// singleton) of `n` retained values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std, n }
}

/// Per-metric mean/std across repetitions. Absent values are excluded from
/// their metric's aggregation; the retained count is each summary's `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rcr_loss: Summary,
    pub rej: Summary,
    pub al: Option<Summary>,
    pub rl: Option<Summary>,
    pub ar: Option<Summary>,
    pub ra: Option<Summary>,
    pub sup: Option<Summary>,
    pub n_total: Summary,
    pub n_accepted: Summary,
    pub n_reports: usize,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Empty { what: "metrics reports" });
    }
    let collect = |get: fn(&MetricsReport) -> Option<f64>| -> Option<Summary> {
        let values: Vec<f64> = reports.iter().filter_map(get).collect();
        if values.is_empty() {
            None
        } else {
            Some(summarize(&values))
        }
    };
    Ok(AggregateReport {
        rcr_loss: summarize(&reports.iter().map(|r| r.rcr_loss).collect::<Vec<_>>()),
        rej: summarize(&reports.iter().map(|r| r.rej).collect::<Vec<_>>()),
        al: collect(|r| r.al),
        rl: collect(|r| r.rl),
        ar: collect(|r| r.ar),
        ra: collect(|r| r.ra),
        sup: collect(|r| r.sup),
        n_total: summarize(&reports.iter().map(|r| r.n_total as f64).collect::<Vec<_>>()),
        n_accepted: summarize(&reports.iter().map(|r| r.n_accepted as f64).collect::<Vec<_>>()),
        n_reports: reports.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rng::Rng;

    fn report_from(preds: &[f64], accepts: &[bool], targets: &[f64], cost: f64) -> MetricsReport {
        tally(preds, accepts, targets, &vec![cost; targets.len()])
    }

    #[test]
    fn hand_worked_example() {
        // h = [1, 2], y = [1, 4], r = [+1, -1], c = 1.
        let report = report_from(&[1.0, 2.0], &[true, false], &[1.0, 4.0], 1.0);
        assert_eq!(report.rcr_loss, 0.5);
        assert_eq!(report.rej, 0.5);
        assert_eq!(report.al, Some(0.0));
        assert_eq!(report.rl, Some(4.0));
        // Row 1 (se 0 < 1) should be accepted and was: AR = 0 over denominator 1.
        assert_eq!(report.ar, Some(0.0));
        // Row 2 (se 4 >= 1) should be rejected and was: RA = 0.
        assert_eq!(report.ra, Some(0.0));
        assert_eq!((report.n_total, report.n_accepted, report.n_rejected), (2, 1, 1));
    }

    #[test]
    fn degenerate_all_accepted() {
        let report = report_from(&[1.0, 2.0, 3.0], &[true, true, true], &[1.5, 2.5, 2.0], 1.0);
        assert_eq!(report.rej, 0.0);
        let mse = (0.25 + 0.25 + 1.0) / 3.0;
        assert!((report.rcr_loss - mse).abs() < 1e-15);
        assert_eq!(report.al, Some(report.rcr_loss));
        assert_eq!(report.rl, None);
    }

    #[test]
    fn ra_tie_counts_as_should_reject() {
        // Squared error exactly equal to the cost lands in the reject-worthy set.
        let report = report_from(&[2.0], &[true], &[1.0], 1.0);
        assert_eq!(report.ra, Some(1.0));
        assert_eq!(report.ar, None); // accept-worthy set is empty
    }

    #[test]
    fn matches_brute_force_tally() {
        // Independent per-example recomputation on a random instance.
        let mut rng = Rng::new(55);
        let n = 200;
        let preds: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let accepts: Vec<bool> = (0..n).map(|_| rng.unit() < 0.6).collect();
        let costs: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 4.0).unwrap()).collect();
        let report = tally(&preds, &accepts, &targets, &costs);

        let mut loss = 0.0;
        let mut acc_sq = Vec::new();
        let mut rej_sq = Vec::new();
        let (mut fr, mut aw, mut fa, mut rw) = (0, 0, 0, 0);
        for i in 0..n {
            let se = (preds[i] - targets[i]).powi(2);
            if accepts[i] {
                loss += se;
                acc_sq.push(se);
            } else {
                loss += costs[i];
                rej_sq.push(se);
            }
            if se < costs[i] {
                aw += 1;
                if !accepts[i] {
                    fr += 1;
                }
            } else {
                rw += 1;
                if accepts[i] {
                    fa += 1;
                }
            }
        }
        assert!((report.rcr_loss - loss / n as f64).abs() < 1e-12);
        assert!((report.al.unwrap() - acc_sq.iter().sum::<f64>() / acc_sq.len() as f64).abs() < 1e-12);
        assert!((report.rl.unwrap() - rej_sq.iter().sum::<f64>() / rej_sq.len() as f64).abs() < 1e-12);
        assert!((report.ar.unwrap() - fr as f64 / aw as f64).abs() < 1e-12);
        assert!((report.ra.unwrap() - fa as f64 / rw as f64).abs() < 1e-12);
    }

    #[test]
    fn decomposition_identity() {
        let mut rng = Rng::new(56);
        let n = 100;
        let preds: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let accepts: Vec<bool> = (0..n).map(|_| rng.unit() < 0.5).collect();
        let costs: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 2.0).unwrap()).collect();
        let report = tally(&preds, &accepts, &targets, &costs);
        let rejected_costs: f64 = (0..n).filter(|&i| !accepts[i]).map(|i| costs[i]).sum();
        if let Some(al) = report.al {
            let lhs = report.rcr_loss * report.n_total as f64;
            let rhs = al * report.n_accepted as f64 + rejected_costs;
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
        assert!(report.rej >= 0.0 && report.rej <= 1.0);
        for v in [report.ar, report.ra].into_iter().flatten() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn monotone_in_constant_cost() {
        let mut rng = Rng::new(57);
        let n = 60;
        let preds: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0).unwrap()).collect();
        let accepts: Vec<bool> = (0..n).map(|_| rng.unit() < 0.5).collect();
        let mut last = f64::NEG_INFINITY;
        for c in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let report = report_from(&preds, &accepts, &targets, c);
            assert!(report.rcr_loss >= last - 1e-15, "rcr loss decreased as cost grew");
            last = report.rcr_loss;
        }
    }

    #[test]
    fn evaluate_uses_strict_sign_rule() {
        use crate::model::{init_params, ModelSpec, RcRPair};
        let h = init_params(&ModelSpec::linear(1), &mut Rng::new(1)).unwrap();
        let mut r = init_params(&ModelSpec::linear(1), &mut Rng::new(2)).unwrap();
        // Force r(x) = 0 for every x: boundary must reject.
        r.layers[0].weights.set(0, 0, 0.0);
        let pair = RcRPair::new(h, r).unwrap();
        let features = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ds = crate::data::Dataset::new(features, vec![0.0; 4]).unwrap();
        let report = evaluate(&pair, &ds, &CostSpec::Constant(2.5)).unwrap();
        assert_eq!(report.rej, 1.0);
        assert_eq!(report.rcr_loss, 2.5);
    }

    #[test]
    fn aggregate_singleton() {
        let r = report_from(&[1.0], &[true], &[2.0], 1.0);
        let agg = aggregate(&[r.clone()]).unwrap();
        assert_eq!(agg.rcr_loss.mean, r.rcr_loss);
        assert_eq!(agg.rcr_loss.std, 0.0);
        assert_eq!(agg.rcr_loss.n, 1);
    }

    #[test]
    fn aggregate_two_point_arithmetic() {
        let mut a = report_from(&[1.0], &[true], &[2.0], 1.0);
        let mut b = a.clone();
        a.rcr_loss = 2.0;
        b.rcr_loss = 4.0;
        let agg = aggregate(&[a, b]).unwrap();
        assert_eq!(agg.rcr_loss.mean, 3.0);
        assert!((agg.rcr_loss.std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aggregate_excludes_absent_values() {
        let mut a = report_from(&[1.0], &[true], &[2.0], 1.0);
        a.rl = None;
        let mut b = a.clone();
        b.rl = Some(3.0);
        let agg = aggregate(&[a, b]).unwrap();
        let rl = agg.rl.unwrap();
        assert_eq!(rl.n, 1);
        assert_eq!(rl.mean, 3.0);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn aggregate_matches_spreadsheet_recomputation() {
        // Ten synthetic reports, aggregated; recomputed with the textbook
        // two-pass formulas independent of `summarize`.
        let mut rng = Rng::new(58);
        let reports: Vec<MetricsReport> = (0..10)
            .map(|_| {
                let mut r = report_from(&[1.0], &[true], &[2.0], 1.0);
                r.rcr_loss = rng.uniform(1.0, 5.0).unwrap();
                r
            })
            .collect();
        let agg = aggregate(&reports).unwrap();
        let vals: Vec<f64> = reports.iter().map(|r| r.rcr_loss).collect();
        let mean = vals.iter().sum::<f64>() / 10.0;
        let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
        let std = (ss / 9.0).sqrt();
        assert!((agg.rcr_loss.mean - mean).abs() < 1e-12);
        assert!((agg.rcr_loss.std - std).abs() < 1e-12);
    }

    #[test]
    fn csv_row_contract() {
        let mut r = report_from(&[1.0, 2.0], &[true, false], &[1.0, 4.0], 1.0);
        r.sup = Some(2.5);
        let row = r.csv_row("1");
        assert_eq!(row, "1,2.5,0.5,0,4,0.5,0,0,2,1");
        r.sup = None;
        r.rl = None;
        let row = r.csv_row("1");
        assert_eq!(row, "1,,0.5,0,,0.5,0,0,2,1");
        assert_eq!(METRICS_CSV_HEADER.split(',').count(), row.split(',').count());
    }

    #[test]
    fn json_round_trip() {
        let r = report_from(&[1.0, 2.0], &[true, false], &[1.0, 4.0], 1.0);
        let text = serde_json::to_string(&r).unwrap();
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }
}
