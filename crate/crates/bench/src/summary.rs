//! Per-cell statistics and scaling fits over a set of run records.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::records::RunRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummaryError {
    #[error("no records to summarize")]
    EmptyInput,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the data has no variance to explain.
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub scheme: String,
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    /// Runs with status `ok`; clipped and failed runs are reported but not counted.
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub median_measurements: f64,
    pub median_rounds: f64,
    pub median_error_ratio: f64,
    pub clipped: usize,
    pub errors: usize,
}

/// Fits of a per-cell median against `log2 n` and `log2 log2 n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub scheme: String,
    pub family: String,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    pub quantity: &'static str,
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub log_fit: LinearFit,
    pub loglog_fit: LinearFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    pub fits: Vec<ScalingFit>,
}

type CellKey = (String, String, usize, usize, u64, u64);

fn key(r: &RunRecord) -> CellKey {
    (r.scheme.clone(), r.family.clone(), r.n, r.k, r.eps.to_bits(), r.p.to_bits())
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary, SummaryError> {
    if records.is_empty() {
        return Err(SummaryError::EmptyInput);
    }
    let mut order: Vec<CellKey> = Vec::new();
    let mut groups: BTreeMap<CellKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    let cells: Vec<CellSummary> = order
        .iter()
        .map(|k| {
            let rs = &groups[k];
            let counted: Vec<&&RunRecord> = rs.iter().filter(|r| r.counts_toward_statistics()).collect();
            let trials = counted.len();
            let successes = counted.iter().filter(|r| r.success).count();
            let (wilson_low, wilson_high) = wilson_interval(successes, trials);
            let col = |f: fn(&RunRecord) -> f64| median(&counted.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                scheme: k.0.clone(),
                family: k.1.clone(),
                n: k.2,
                k: k.3,
                eps: f64::from_bits(k.4),
                p: f64::from_bits(k.5),
                trials,
                successes,
                success_rate: if trials > 0 { successes as f64 / trials as f64 } else { f64::NAN },
                wilson_low,
                wilson_high,
                median_measurements: col(|r| r.measurements as f64),
                median_rounds: col(|r| r.rounds as f64),
                median_error_ratio: col(|r| r.error_ratio),
                clipped: rs.iter().filter(|r| r.status == "budget-clipped").count(),
                errors: rs.iter().filter(|r| r.status.starts_with("error")).count(),
            }
        })
        .collect();

    let mut series: BTreeMap<(String, String, usize, u64, u64), Vec<&CellSummary>> = BTreeMap::new();
    let mut series_order = Vec::new();
    for c in &cells {
        let k = (c.scheme.clone(), c.family.clone(), c.k, c.eps.to_bits(), c.p.to_bits());
        if !series.contains_key(&k) {
            series_order.push(k.clone());
        }
        series.entry(k).or_default().push(c);
    }
    let mut fits = Vec::new();
    for k in series_order {
        let mut pts: Vec<&CellSummary> = series[&k].iter().copied().filter(|c| c.trials > 0 && c.n >= 4).collect();
        pts.sort_by_key(|c| c.n);
        if pts.len() < 3 {
            continue;
        }
        let logs: Vec<f64> = pts.iter().map(|c| (c.n as f64).log2()).collect();
        let loglogs: Vec<f64> = logs.iter().map(|l| l.log2()).collect();
        for (quantity, get) in [
            ("measurements", (|c: &CellSummary| c.median_measurements) as fn(&CellSummary) -> f64),
            ("rounds", |c: &CellSummary| c.median_rounds),
        ] {
            let values: Vec<f64> = pts.iter().map(|c| get(c)).collect();
            fits.push(ScalingFit {
                scheme: k.0.clone(),
                family: k.1.clone(),
                k: k.2,
                eps: f64::from_bits(k.3),
                p: f64::from_bits(k.4),
                quantity,
                ns: pts.iter().map(|c| c.n).collect(),
                log_fit: linear_fit(&logs, &values),
                loglog_fit: linear_fit(&loglogs, &values),
                values,
            });
        }
    }
    Ok(Summary { cells, fits })
}

impl Summary {
    pub fn cells_csv(&self) -> String {
        let mut s = String::from(
            "scheme,family,n,k,eps,p,trials,successes,success_rate,wilson_low,wilson_high,median_measurements,median_rounds,median_error_ratio,clipped,errors\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.scheme,
                c.family,
                c.n,
                c.k,
                c.eps,
                c.p,
                c.trials,
                c.successes,
                c.success_rate,
                c.wilson_low,
                c.wilson_high,
                c.median_measurements,
                c.median_rounds,
                c.median_error_ratio,
                c.clipped,
                c.errors
            );
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = String::from(
            "scheme,family,k,eps,p,quantity,points,log_slope,log_intercept,log_r2,loglog_slope,loglog_intercept,loglog_r2\n",
        );
        for f in &self.fits {
            let _ = writeln!(
                s,
                "{},\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
                f.scheme,
                f.family,
                f.k,
                f.eps,
                f.p,
                f.quantity,
                f.ns.len(),
                f.log_fit.slope,
                f.log_fit.intercept,
                f.log_fit.r2,
                f.loglog_fit.slope,
                f.loglog_fit.intercept,
                f.loglog_fit.r2
            );
        }
        s
    }

    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:<30} {:>8} {:>4} {:>5} {:>4} {:>6} {:>7} {:>7} {:>12} {:>7} {:>9}",
            "scheme", "family", "n", "k", "eps", "p", "trials", "success", "wilson-", "measurements", "rounds", "err-ratio"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<20} {:<30} {:>8} {:>4} {:>5} {:>4} {:>6} {:>7.3} {:>7.3} {:>12.1} {:>7.1} {:>9.3}",
                c.scheme,
                c.family,
                c.n,
                c.k,
                c.eps,
                c.p,
                c.trials,
                c.success_rate,
                c.wilson_low,
                c.median_measurements,
                c.median_rounds,
                c.median_error_ratio
            );
        }
        if !self.fits.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<20} {:<30} {:<12} {:>10} {:>8} {:>10} {:>8}",
                "scheme", "family", "quantity", "log-slope", "log-R2", "ll-slope", "ll-R2"
            );
            for f in &self.fits {
                let _ = writeln!(
                    s,
                    "{:<20} {:<30} {:<12} {:>10.2} {:>8.3} {:>10.2} {:>8.3}",
                    f.scheme, f.family, f.quantity, f.log_fit.slope, f.log_fit.r2, f.loglog_fit.slope, f.loglog_fit.r2
                );
            }
        }
        s
    }
}
