//! Post-run arithmetic: Little's Law, normalized lock overhead and
//! baseline-versus-treatment interference factors.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchspec::WorkloadClass;
use crate::metrics::{ClassReport, RunReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid lock sample counts: {0}")]
    InvalidCounts(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("baseline has zero throughput")]
    ZeroBaselineThroughput,
    #[error("{0} is absent from a report")]
    MissingStatistic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Mean number of requests in the system: `L = lambda * W`, with `lambda` in
/// requests per second and `W` in seconds.
pub fn littles_law_l(lambda: f64, w: f64) -> f64 {
    lambda * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockSampleCounts {
    pub lock_samples: u64,
    pub total_samples: u64,
    /// Lock overhead of the online workload alone, as a fraction.
    pub baseline_overhead: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `LS / (TS * BLO) * 100`. The sample fraction is reduced first, so scaling
/// both counts by any factor gives a bit-identical result.
pub fn normalized_lock_overhead(c: LockSampleCounts) -> Result<f64, AnalysisError> {
    if c.total_samples == 0 {
        return Err(AnalysisError::InvalidCounts("total samples must be positive".into()));
    }
    if c.lock_samples > c.total_samples {
        return Err(AnalysisError::InvalidCounts(format!(
            "lock samples {} exceed total samples {}",
            c.lock_samples, c.total_samples
        )));
    }
    if !(c.baseline_overhead > 0.0 && c.baseline_overhead <= 1.0) {
        return Err(AnalysisError::InvalidCounts(format!(
            "baseline overhead {} outside (0, 1]",
            c.baseline_overhead
        )));
    }
    let g = gcd(c.lock_samples, c.total_samples).max(1);
    let (ls, ts) = (c.lock_samples / g, c.total_samples / g);
    Ok(ls as f64 * 100.0 / (ts as f64 * c.baseline_overhead))
}

/// Reads lock sample counts, one `LS TS BLO` triple per line. Blank lines
/// and `#` comments are skipped; separators may be whitespace or commas.
pub fn parse_lock_counts(text: &str, source: &str) -> Result<Vec<LockSampleCounts>, AnalysisError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| AnalysisError::Parse { path: source.to_owned(), line: i + 1, msg };
        let fields: Vec<&str> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let [ls, ts, blo] = fields.as_slice() else {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        };
        let counts = LockSampleCounts {
            lock_samples: ls.parse().map_err(|e| err(format!("lock samples `{ls}`: {e}")))?,
            total_samples: ts.parse().map_err(|e| err(format!("total samples `{ts}`: {e}")))?,
            baseline_overhead: blo
                .parse()
                .map_err(|e| err(format!("baseline overhead `{blo}`: {e}")))?,
        };
        normalized_lock_overhead(counts).map_err(|e| err(e.to_string()))?;
        out.push(counts);
    }
    Ok(out)
}

pub fn read_lock_counts(path: &Path) -> Result<Vec<LockSampleCounts>, AnalysisError> {
    parse_lock_counts(&std::fs::read_to_string(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceReport {
    /// Treated mean latency over baseline mean latency.
    pub latency_inflation: f64,
    /// Treated p95 over baseline p95.
    pub tail_inflation: f64,
    /// `1 - treated throughput / baseline throughput`.
    pub throughput_degradation: f64,
    /// `(pressure level, mean latency / baseline mean latency)` per sweep point.
    pub normalized_latency: Vec<(f64, f64)>,
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, AnalysisError> {
    v.ok_or_else(|| AnalysisError::MissingStatistic(what.to_owned()))
}

/// Compares one class measured in a baseline run and a treated run.
pub fn interference(
    baseline: &ClassReport,
    treated: &ClassReport,
) -> Result<InterferenceReport, AnalysisError> {
    if baseline.tput <= 0.0 {
        return Err(AnalysisError::ZeroBaselineThroughput);
    }
    let base_mean = need(baseline.mean_us, "baseline mean_us")?;
    let base_p95 = need(baseline.p95_us, "baseline p95_us")?;
    let latency_inflation = need(treated.mean_us, "treated mean_us")? / base_mean;
    Ok(InterferenceReport {
        latency_inflation,
        tail_inflation: need(treated.p95_us, "treated p95_us")? as f64 / base_p95 as f64,
        throughput_degradation: 1.0 - treated.tput / baseline.tput,
        normalized_latency: vec![(1.0, latency_inflation)],
    })
}

/// Interference of `class` across runs of a sweep, relative to the first
/// point (the zero-pressure run).
pub fn sweep_interference(
    points: &[(f64, RunReport)],
    class: WorkloadClass,
) -> Result<Vec<(f64, InterferenceReport)>, AnalysisError> {
    let Some((_, base)) = points.first() else { return Ok(Vec::new()) };
    let base = need(base.class(class), class.label())?;
    let mut series = Vec::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for (level, report) in points {
        let mut r = interference(base, need(report.class(class), class.label())?)?;
        series.push((*level, r.latency_inflation));
        r.normalized_latency = series.clone();
        out.push((*level, r));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    axis: &'a str,
    value: f64,
    class: &'a str,
    count: u64,
    tput: f64,
    mean_us: Option<f64>,
    p95_us: Option<u64>,
    normalized_latency: f64,
    latency_inflation: f64,
    tail_inflation: f64,
    throughput_degradation: f64,
}

/// Writes one CSV row per pressure level for `class`.
pub fn write_sweep_csv<W: Write>(
    out: W,
    axis: &str,
    points: &[(f64, RunReport)],
    class: WorkloadClass,
) -> Result<(), AnalysisError> {
    let rows = sweep_interference(points, class)?;
    let mut w = csv::Writer::from_writer(out);
    for ((value, report), (_, inter)) in points.iter().zip(&rows) {
        let c = need(report.class(class), class.label())?;
        w.serialize(SweepRow {
            axis,
            value: *value,
            class: class.label(),
            count: c.count,
            tput: c.tput,
            mean_us: c.mean_us,
            p95_us: c.p95_us,
            normalized_latency: inter.latency_inflation,
            latency_inflation: inter.latency_inflation,
            tail_inflation: inter.tail_inflation,
            throughput_degradation: inter.throughput_degradation,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::summarize_class;

    fn report(mean: f64, p95: u64, tput: f64) -> ClassReport {
        let mut r = summarize_class(&[], WorkloadClass::Online, 0.0, 1.0);
        r.count = tput as u64;
        r.tput = tput;
        r.mean_us = Some(mean);
        r.p95_us = Some(p95);
        r
    }

    #[test]
    fn littles_law() {
        assert_eq!(littles_law_l(30.0, 1.5), 45.0);
        assert_eq!(littles_law_l(0.0, 3.0), 0.0);
        assert_eq!(littles_law_l(3.0 * 30.0, 1.5), 3.0 * littles_law_l(30.0, 1.5));
    }

    #[test]
    fn nlo_examples() {
        let nlo = |ls, ts, blo| {
            normalized_lock_overhead(LockSampleCounts {
                lock_samples: ls,
                total_samples: ts,
                baseline_overhead: blo,
            })
        };
        assert_eq!(nlo(100, 1000, 0.1).unwrap(), 100.0);
        assert_eq!(nlo(0, 1000, 0.1).unwrap(), 0.0);
        assert!(nlo(1, 0, 0.1).is_err());
        assert!(nlo(1, 10, 0.0).is_err());
        assert!(nlo(11, 10, 0.5).is_err());
        // Two schemas measured against one baseline: 88 vs 50 lock samples
        // per 1000 give a 1.76x gap.
        let gap = nlo(88, 1000, 0.05).unwrap() / nlo(50, 1000, 0.05).unwrap();
        assert!((gap - 1.76).abs() < 1e-12);
    }

    #[test]
    fn lock_count_file_parsing() {
        let text = "# ls ts blo\n100 1000 0.1\n\n7,20,0.5\n";
        let v = parse_lock_counts(text, "f").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].total_samples, 20);
        let e = parse_lock_counts("1 2\n", "counts.txt").unwrap_err();
        assert!(e.to_string().starts_with("counts.txt:1:"));
    }

    #[test]
    fn identity_interference() {
        let b = report(10_000.0, 20_000, 100.0);
        let r = interference(&b, &b).unwrap();
        assert_eq!(r.latency_inflation, 1.0);
        assert_eq!(r.tail_inflation, 1.0);
        assert_eq!(r.throughput_degradation, 0.0);
    }

    #[test]
    fn large_inflation_and_degradation() {
        let b = report(10_000.0, 20_000, 100.0);
        let t = report(59_000.0, 40_000, 11.0);
        let r = interference(&b, &t).unwrap();
        assert!((r.throughput_degradation - 0.89).abs() < 1e-12);
        assert!((r.latency_inflation - 5.9).abs() < 1e-12);
        assert_eq!(r.tail_inflation, 2.0);
    }

    #[test]
    fn zero_baseline_rejected() {
        let b = report(10.0, 10, 0.0);
        assert!(matches!(interference(&b, &b), Err(AnalysisError::ZeroBaselineThroughput)));
    }
}
