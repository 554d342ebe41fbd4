//! Latency samples, nearest-rank percentiles and run summaries.
//!
//! Percentiles are computed from raw retained samples, so tail values never
//! saturate regardless of magnitude.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchspec::WorkloadClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("statistic undefined over an empty sample set")]
    EmptySamples,
    #[error("percentile {0} outside (0, 1]")]
    InvalidPercentile(String),
    #[error("cannot aggregate zero reports")]
    NoReports,
    #[error("reports differ in shape: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Committed,
    Aborted,
    Failed,
    Dropped,
}

/// One request's fate. `send_time_s` is the scheduled send time relative to
/// run start; `latency_us` runs from that instant to commit, `service_us`
/// from the moment a worker picked the request up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub class: WorkloadClass,
    pub template: Arc<str>,
    pub send_time_s: f64,
    pub latency_us: u64,
    pub service_us: u64,
    pub status: SampleStatus,
}

/// An exact quantile `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantile {
    pub num: u64,
    pub den: u64,
}

impl Quantile {
    pub const P50: Quantile = Quantile { num: 1, den: 2 };
    pub const P90: Quantile = Quantile { num: 9, den: 10 };
    pub const P95: Quantile = Quantile { num: 19, den: 20 };
    pub const P999: Quantile = Quantile { num: 999, den: 1000 };
    pub const P9999: Quantile = Quantile { num: 9999, den: 10000 };

    pub fn new(num: u64, den: u64) -> Result<Self, MetricsError> {
        if den == 0 || num == 0 || num > den {
            return Err(MetricsError::InvalidPercentile(format!("{num}/{den}")));
        }
        let r = Ratio::new(num, den);
        Ok(Quantile { num: *r.numer(), den: *r.denom() })
    }

    /// Reads `p` as the decimal it prints as, so `0.9` means exactly 9/10.
    pub fn from_fraction(p: f64) -> Result<Self, MetricsError> {
        let bad = || MetricsError::InvalidPercentile(p.to_string());
        if !p.is_finite() || p <= 0.0 || p > 1.0 {
            return Err(bad());
        }
        let text = format!("{p}");
        let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
        if frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let num = int.parse::<u64>().map_err(|_| bad())? * den
            + if frac.is_empty() { 0 } else { frac.parse::<u64>().map_err(|_| bad())? };
        Quantile::new(num, den)
    }

    /// 1-based nearest rank `ceil(num * n / den)`.
    pub fn rank(self, n: usize) -> usize {
        let prod = u128::from(self.num) * n as u128;
        let den = u128::from(self.den);
        prod.div_ceil(den).max(1) as usize
    }
}

/// Nearest-rank percentile: the value at 1-based index `ceil(p * n)` of the
/// sorted multiset.
pub fn percentile(samples: &[u64], p: f64) -> Result<u64, MetricsError> {
    percentile_at(samples, Quantile::from_fraction(p)?)
}

pub fn percentile_at(samples: &[u64], q: Quantile) -> Result<u64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let mut scratch = samples.to_vec();
    let idx = q.rank(scratch.len()) - 1;
    Ok(*scratch.select_nth_unstable(idx).1)
}

fn percentile_sorted(sorted: &[u64], q: Quantile) -> u64 {
    sorted[q.rank(sorted.len()) - 1]
}

/// Summary for one workload class over the measured window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Committed requests sent inside the window.
    pub count: u64,
    /// Committed requests per second of window.
    pub tput: f64,
    pub min_us: Option<u64>,
    pub p50_us: Option<u64>,
    pub p90_us: Option<u64>,
    pub p95_us: Option<u64>,
    pub p999_us: Option<u64>,
    pub p9999_us: Option<u64>,
    pub max_us: Option<u64>,
    pub mean_us: Option<f64>,
    pub abort_rate: f64,
    pub drop_rate: f64,
    pub requests: u64,
    pub aborted: u64,
    pub failed: u64,
    pub dropped: u64,
    /// Mean queue-exit-to-commit latency of committed requests.
    pub mean_service_us: Option<f64>,
    /// Committed requests per 1 s window, indexed from the end of warm-up.
    pub series: Vec<u64>,
}

impl ClassReport {
    /// Checks `min <= p50 <= p90 <= p95 <= p99.9 <= p99.99 <= max`.
    pub fn percentiles_ordered(&self) -> bool {
        let chain = [
            self.min_us,
            self.p50_us,
            self.p90_us,
            self.p95_us,
            self.p999_us,
            self.p9999_us,
            self.max_us,
        ];
        if chain.iter().all(Option::is_none) {
            return self.count == 0;
        }
        let Some(values) = chain.into_iter().collect::<Option<Vec<u64>>>() else {
            return false;
        };
        values.windows(2).all(|w| w[0] <= w[1])
    }

    /// True when every field the report format defines carries a value.
    pub fn fully_populated(&self) -> bool {
        self.count > 0
            && self.mean_us.is_some()
            && self.mean_service_us.is_some()
            && self.percentiles_ordered()
    }
}

/// Dispatch-side facts about a run, filled in by the load generator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub benchmark: String,
    pub mode: String,
    #[serde(rename = "loop")]
    pub loop_kind: String,
    pub seed: u64,
    pub scale: u32,
    pub pool_size: u32,
    pub rates: BTreeMap<WorkloadClass, f64>,
    /// Requests handed to each class queue (or issued by terminals).
    pub dispatched: BTreeMap<WorkloadClass, u64>,
    pub dispatched_read_only: BTreeMap<WorkloadClass, u64>,
    pub dispatched_by_template: BTreeMap<String, u64>,
    /// Open loop: sends per second of schedule actually achieved.
    pub achieved_rate: BTreeMap<WorkloadClass, f64>,
    /// Open loop: fraction of sends issued within 1 ms of schedule.
    pub on_time_fraction: Option<f64>,
    /// Hex digest over every scheduled send time and bound instance.
    pub dispatch_digest: String,
    /// Mean of the in-system request gauge sampled at 10 Hz over the window.
    pub mean_in_flight: f64,
    pub max_in_flight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub warmup_s: f64,
    pub duration_s: f64,
    pub classes: BTreeMap<WorkloadClass, ClassReport>,
    #[serde(default)]
    pub run: RunInfo,
}

impl RunReport {
    pub fn class(&self, class: WorkloadClass) -> Option<&ClassReport> {
        self.classes.get(&class)
    }

    /// Fixed-width table for terminals.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<5} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10} {:>7} {:>7}\n",
            "class", "count", "tput", "min_us", "p50_us", "p90_us", "p95_us", "p999_us",
            "p9999_us", "max_us", "mean_us", "abort", "drop"
        );
        let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        for (class, r) in &self.classes {
            out.push_str(&format!(
                "{:<5} {:>8} {:>9.2} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10} {:>7.4} {:>7.4}\n",
                class.label(),
                r.count,
                r.tput,
                opt(r.min_us),
                opt(r.p50_us),
                opt(r.p90_us),
                opt(r.p95_us),
                opt(r.p999_us),
                opt(r.p9999_us),
                opt(r.max_us),
                r.mean_us.map_or("-".to_string(), |m| format!("{m:.1}")),
                r.abort_rate,
                r.drop_rate,
            ));
        }
        out
    }
}

/// Summarizes samples whose send time falls in `[warmup, warmup + duration)`.
/// Only classes present in `samples` get a report.
pub fn summarize(samples: &[LatencySample], warmup_s: f64, duration_s: f64) -> RunReport {
    let mut classes = BTreeMap::new();
    for class in WorkloadClass::ALL {
        if samples.iter().any(|s| s.class == class) {
            classes.insert(class, summarize_class(samples, class, warmup_s, duration_s));
        }
    }
    RunReport { warmup_s, duration_s, classes, run: RunInfo::default() }
}

pub fn summarize_class(
    samples: &[LatencySample],
    class: WorkloadClass,
    warmup_s: f64,
    duration_s: f64,
) -> ClassReport {
    let end = warmup_s + duration_s;
    let windows = duration_s.ceil().max(0.0) as usize;
    let mut series = vec![0u64; windows];
    let mut latencies = Vec::new();
    let mut service_sum = 0u128;
    let (mut aborted, mut failed, mut dropped) = (0u64, 0u64, 0u64);
    for s in samples.iter().filter(|s| s.class == class) {
        if !(s.send_time_s >= warmup_s && s.send_time_s < end) {
            continue;
        }
        match s.status {
            SampleStatus::Committed => {
                latencies.push(s.latency_us);
                service_sum += u128::from(s.service_us);
                let w = ((s.send_time_s - warmup_s) as usize).min(windows.saturating_sub(1));
                if let Some(slot) = series.get_mut(w) {
                    *slot += 1;
                }
            }
            SampleStatus::Aborted => aborted += 1,
            SampleStatus::Failed => failed += 1,
            SampleStatus::Dropped => dropped += 1,
        }
    }
    let count = latencies.len() as u64;
    let requests = count + aborted + failed + dropped;
    let rate = |n: u64| if requests == 0 { 0.0 } else { n as f64 / requests as f64 };
    latencies.sort_unstable();
    let stat = |q: Quantile| (!latencies.is_empty()).then(|| percentile_sorted(&latencies, q));
    let sum: u128 = latencies.iter().map(|&l| u128::from(l)).sum();
    ClassReport {
        count,
        tput: if duration_s > 0.0 { count as f64 / duration_s } else { 0.0 },
        min_us: latencies.first().copied(),
        p50_us: stat(Quantile::P50),
        p90_us: stat(Quantile::P90),
        p95_us: stat(Quantile::P95),
        p999_us: stat(Quantile::P999),
        p9999_us: stat(Quantile::P9999),
        max_us: latencies.last().copied(),
        mean_us: (count > 0).then(|| sum as f64 / count as f64),
        abort_rate: rate(aborted + failed),
        drop_rate: rate(dropped),
        requests,
        aborted,
        failed,
        dropped,
        mean_service_us: (count > 0).then(|| service_sum as f64 / count as f64),
        series,
    }
}

/// Sample mean and sample standard deviation (n - 1 denominator; 0 for a
/// single run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub stddev: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, stddev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub classes: BTreeMap<WorkloadClass, BTreeMap<String, MeanStd>>,
}

fn stat_fields(r: &ClassReport) -> Vec<(&'static str, Option<f64>)> {
    let u = |v: Option<u64>| v.map(|v| v as f64);
    vec![
        ("count", Some(r.count as f64)),
        ("tput", Some(r.tput)),
        ("min_us", u(r.min_us)),
        ("p50_us", u(r.p50_us)),
        ("p90_us", u(r.p90_us)),
        ("p95_us", u(r.p95_us)),
        ("p999_us", u(r.p999_us)),
        ("p9999_us", u(r.p9999_us)),
        ("max_us", u(r.max_us)),
        ("mean_us", r.mean_us),
        ("abort_rate", Some(r.abort_rate)),
        ("drop_rate", Some(r.drop_rate)),
    ]
}

/// Mean and standard deviation of every statistic across runs of the same
/// shape (same classes, same statistics present).
pub fn aggregate_runs(reports: &[RunReport]) -> Result<AggregateReport, MetricsError> {
    let first = reports.first().ok_or(MetricsError::NoReports)?;
    let mut classes = BTreeMap::new();
    for (class, head) in &first.classes {
        let head_fields = stat_fields(head);
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); head_fields.len()];
        for (i, report) in reports.iter().enumerate() {
            if report.classes.len() != first.classes.len() {
                return Err(MetricsError::ShapeMismatch(format!(
                    "report {i} has classes {:?}, report 0 has {:?}",
                    report.classes.keys().collect::<Vec<_>>(),
                    first.classes.keys().collect::<Vec<_>>()
                )));
            }
            let r = report.classes.get(class).ok_or_else(|| {
                MetricsError::ShapeMismatch(format!("report {i} lacks class {class}"))
            })?;
            for (j, ((name, v), (_, h))) in stat_fields(r).into_iter().zip(&head_fields).enumerate()
            {
                match (v, h) {
                    (Some(v), Some(_)) => columns[j].push(v),
                    (None, None) => {}
                    _ => {
                        return Err(MetricsError::ShapeMismatch(format!(
                            "{class} {name} present in some reports only"
                        )))
                    }
                }
            }
        }
        let stats = head_fields
            .iter()
            .zip(columns)
            .filter(|(_, col)| !col.is_empty())
            .map(|((name, _), col)| (name.to_string(), MeanStd::of(&col)))
            .collect();
        classes.insert(*class, stats);
    }
    Ok(AggregateReport { runs: reports.len(), classes })
}

/// Multi-producer sample sink. Each producer appends to its own buffer and
/// merges it when the buffer is dropped, so recording never contends.
#[derive(Debug, Default)]
pub struct Recorder {
    merged: Mutex<Vec<LatencySample>>,
}

impl Recorder {
    pub fn new() -> Arc<Recorder> {
        Arc::new(Recorder::default())
    }

    pub fn buffer(self: &Arc<Self>) -> SampleBuffer {
        SampleBuffer { sink: Arc::clone(self), local: Vec::with_capacity(1024) }
    }

    /// Everything merged so far; call after all buffers are dropped.
    pub fn take(&self) -> Vec<LatencySample> {
        std::mem::take(&mut *self.merged.lock().expect("recorder lock"))
    }
}

pub struct SampleBuffer {
    sink: Arc<Recorder>,
    local: Vec<LatencySample>,
}

impl SampleBuffer {
    pub fn record(&mut self, sample: LatencySample) {
        self.local.push(sample);
    }
}

impl Drop for SampleBuffer {
    fn drop(&mut self) {
        if let Ok(mut merged) = self.sink.merged.lock() {
            merged.append(&mut self.local);
        }
    }
}
