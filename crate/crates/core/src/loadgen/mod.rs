//! Workload driver: per-class dispatchers feeding bounded request queues,
//! a worker pool sized to the backend pool, and open- or closed-loop pacing.

mod schedule;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Select, TrySendError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchspec::{BenchmarkCatalog, BoundTransaction, CatalogError, WorkloadClass};
use crate::driver::{embedded_backend, Backend, BackendTarget, OutcomeStatus};
use crate::metrics::{self, LatencySample, Recorder, RunReport, SampleBuffer, SampleStatus};

pub use schedule::{schedule_open_loop, DispatchPlan, SendSchedule};
use schedule::{
    combine_digests, gap_seed, instance_rng, terminal_rng, ClassStream, DispatchHasher,
};

pub const DEFAULT_WARMUP_S: f64 = 60.0;
pub const DEFAULT_DURATION_S: f64 = 240.0;
pub const DEFAULT_SCALE: u32 = 50;
pub const DEFAULT_QUEUE_CAPACITY: usize = 10_000;
pub const DEFAULT_GRACE_S: f64 = 5.0;

/// Lateness under which an open-loop send counts as on time.
pub const ON_TIME_TOLERANCE_S: f64 = 1e-3;

/// Gauge sampling period for the in-flight count.
const GAUGE_PERIOD_S: f64 = 0.1;

/// Head start between spawning the agents and t = 0.
const START_LEAD: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum LoadgenError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = LoadgenError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(LoadgenError::Config(format!(
                        concat!("unknown ", stringify!($name), " `{}` (valid: ", $($text, " "),+, ")"),
                        other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(
    /// How the classes are combined: one after another, side by side, or
    /// fused into hybrid transactions.
    Mode { Sequential => "sequential", Concurrent => "concurrent", Hybrid => "hybrid" }
);
keyword_enum!(LoopKind { Open => "open", Closed => "closed" });
keyword_enum!(Jitter { Fixed => "fixed", Poisson => "poisson" });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub loop_kind: LoopKind,
    pub oltp_rate: f64,
    pub olap_rate: f64,
    pub hybrid_rate: f64,
    /// Closed loop only; split across the active classes.
    pub terminals: u32,
    pub warmup_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub scale: u32,
    /// Template weight overrides; a class mentioned here uses only the named
    /// templates.
    pub weights: BTreeMap<String, u32>,
    pub jitter: Jitter,
    pub queue_capacity: usize,
    pub grace_s: f64,
    pub target: BackendTarget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Concurrent,
            loop_kind: LoopKind::Open,
            oltp_rate: 0.0,
            olap_rate: 0.0,
            hybrid_rate: 0.0,
            terminals: 1,
            warmup_s: DEFAULT_WARMUP_S,
            duration_s: DEFAULT_DURATION_S,
            seed: 0,
            scale: DEFAULT_SCALE,
            weights: BTreeMap::new(),
            jitter: Jitter::Fixed,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            grace_s: DEFAULT_GRACE_S,
            target: embedded_backend(),
        }
    }
}

impl RunConfig {
    pub fn rate(&self, class: WorkloadClass) -> f64 {
        match class {
            WorkloadClass::Online => self.oltp_rate,
            WorkloadClass::Analytical => self.olap_rate,
            WorkloadClass::Hybrid => self.hybrid_rate,
        }
    }

    pub fn horizon_s(&self) -> f64 {
        self.warmup_s + self.duration_s
    }

    /// Classes with a nonzero rate, in class order.
    pub fn active_classes(&self) -> Vec<WorkloadClass> {
        WorkloadClass::ALL.into_iter().filter(|&c| self.rate(c) > 0.0).collect()
    }

    pub fn validate(&self) -> Result<(), LoadgenError> {
        let bad = |m: String| Err(LoadgenError::Config(m));
        for class in WorkloadClass::ALL {
            let r = self.rate(class);
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("{class} rate must be finite and >= 0, got {r}"));
            }
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration must be > 0, got {}", self.duration_s));
        }
        if !(self.warmup_s >= 0.0 && self.warmup_s.is_finite()) {
            return bad(format!("warm-up must be >= 0, got {}", self.warmup_s));
        }
        if !(self.grace_s >= 0.0 && self.grace_s.is_finite()) {
            return bad(format!("grace must be >= 0, got {}", self.grace_s));
        }
        if self.scale == 0 {
            return bad("scale must be at least 1".into());
        }
        if self.queue_capacity == 0 {
            return bad("queue capacity must be at least 1".into());
        }
        match self.mode {
            Mode::Hybrid if self.oltp_rate > 0.0 || self.olap_rate > 0.0 => {
                return bad("hybrid mode drives hybrid_rate only; oltp and olap rates must be 0".into())
            }
            Mode::Sequential | Mode::Concurrent if self.hybrid_rate > 0.0 => {
                return bad(format!("{} mode does not use hybrid_rate; set it to 0", self.mode))
            }
            _ => {}
        }
        if self.loop_kind == LoopKind::Closed {
            let active = self.active_classes().len();
            if (self.terminals as usize) < active.max(1) {
                return bad(format!(
                    "closed loop needs at least one terminal per active class ({active})"
                ));
            }
        }
        Ok(())
    }

    fn check_weights(&self, catalog: &BenchmarkCatalog) -> Result<(), LoadgenError> {
        for name in self.weights.keys() {
            if catalog.template(name).is_none() {
                return Err(CatalogError::UnknownTemplate(name.clone()).into());
            }
        }
        Ok(())
    }

    /// Runs as executed, one class set per phase.
    fn phases(&self) -> Vec<Vec<WorkloadClass>> {
        let active = self.active_classes();
        match self.mode {
            Mode::Sequential => active.into_iter().map(|c| vec![c]).collect(),
            Mode::Concurrent | Mode::Hybrid if active.is_empty() => Vec::new(),
            Mode::Concurrent | Mode::Hybrid => vec![active],
        }
    }
}

/// Splits `total` terminals across `n` classes, earlier classes taking the
/// remainder.
pub fn split_terminals(total: u32, n: usize) -> Vec<u32> {
    if n == 0 {
        return Vec::new();
    }
    let n32 = n as u32;
    (0..n32).map(|i| total / n32 + u32::from(i < total % n32)).collect()
}

/// Precomputes every open-loop send of a run: counts and the digest a live
/// run must reproduce. No backend is involved.
pub fn dispatch_plan(
    config: &RunConfig,
    catalog: &BenchmarkCatalog,
) -> Result<DispatchPlan, LoadgenError> {
    config.validate()?;
    config.check_weights(catalog)?;
    if config.loop_kind != LoopKind::Open {
        return Err(LoadgenError::Config("only open-loop runs have a dispatch plan".into()));
    }
    let mut plan = DispatchPlan {
        sends: BTreeMap::new(),
        read_only: BTreeMap::new(),
        by_template: BTreeMap::new(),
        digest: String::new(),
    };
    let mut digests = BTreeMap::new();
    for class in config.active_classes() {
        let stream = ClassStream::new(catalog, class, &config.weights, config.scale)?;
        let times = schedule_open_loop(
            config.rate(class),
            config.horizon_s(),
            config.jitter,
            gap_seed(config.seed, class),
        )?;
        let mut rng = instance_rng(config.seed, class);
        let mut hasher = DispatchHasher::new(class);
        for &t in &times {
            let (i, tx) = stream.next(&mut rng);
            hasher.push(t, &tx);
            *plan.by_template.entry(stream.names[i].to_string()).or_default() += 1;
            if tx.read_only {
                *plan.read_only.entry(class).or_default() += 1;
            }
        }
        plan.read_only.entry(class).or_default();
        plan.sends.insert(class, times.len() as u64);
        digests.insert(class, hasher.finish());
    }
    plan.digest = combine_digests(&digests);
    Ok(plan)
}

struct Request {
    class: WorkloadClass,
    template: Arc<str>,
    send_time_s: f64,
    tx: BoundTransaction,
}

/// Counts requests between dispatch and completion.
#[derive(Default)]
struct InFlight {
    now: AtomicU64,
    max: AtomicU64,
}

impl InFlight {
    fn enter(&self) {
        let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
        self.max.fetch_max(n, Ordering::SeqCst);
    }

    fn leave(&self) {
        self.now.fetch_sub(1, Ordering::SeqCst);
    }

    fn get(&self) -> u64 {
        self.now.load(Ordering::SeqCst)
    }
}

#[derive(Default)]
struct ClassDispatch {
    sends: u64,
    read_only: u64,
    by_template: BTreeMap<String, u64>,
    on_time: u64,
    first_actual_s: Option<f64>,
    last_actual_s: f64,
    digest: Option<[u8; 32]>,
}

struct PhaseResult {
    samples: Vec<LatencySample>,
    dispatch: BTreeMap<WorkloadClass, ClassDispatch>,
    mean_in_flight: f64,
    max_in_flight: u64,
}

fn status_of(s: OutcomeStatus) -> SampleStatus {
    match s {
        OutcomeStatus::Committed => SampleStatus::Committed,
        OutcomeStatus::AbortedRetryable => SampleStatus::Aborted,
        OutcomeStatus::Failed => SampleStatus::Failed,
    }
}

fn sleep_until(at: Instant) {
    let now = Instant::now();
    if at > now {
        thread::sleep(at - now);
    }
}

fn dropped(req: &Request) -> LatencySample {
    LatencySample {
        class: req.class,
        template: Arc::clone(&req.template),
        send_time_s: req.send_time_s,
        latency_us: 0,
        service_us: 0,
        status: SampleStatus::Dropped,
    }
}

/// Samples the in-flight gauge every 100 ms across the measurement window.
fn run_gauge(start: Instant, warmup_s: f64, duration_s: f64, gauge: &InFlight) -> f64 {
    let mut sum = 0u64;
    let mut n = 0u64;
    let mut k = 0u64;
    loop {
        let t = warmup_s + k as f64 * GAUGE_PERIOD_S;
        if t >= warmup_s + duration_s {
            break;
        }
        sleep_until(start + Duration::from_secs_f64(t));
        sum += gauge.get();
        n += 1;
        k += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

fn run_open_phase(
    config: &RunConfig,
    catalog: &BenchmarkCatalog,
    backend: &Backend,
    classes: &[WorkloadClass],
) -> Result<PhaseResult, LoadgenError> {
    let horizon = config.horizon_s();
    let mut plans = Vec::new();
    for &class in classes {
        let stream = ClassStream::new(catalog, class, &config.weights, config.scale)?;
        let times =
            schedule_open_loop(config.rate(class), horizon, config.jitter, gap_seed(config.seed, class))?;
        plans.push((class, stream, times));
    }
    let recorder = Recorder::new();
    let gauge = InFlight::default();
    let mut senders = Vec::new();
    let mut receivers: Vec<Receiver<Request>> = Vec::new();
    for _ in classes {
        let (tx, rx) = bounded::<Request>(config.queue_capacity);
        senders.push(tx);
        receivers.push(rx);
    }
    let start = Instant::now() + START_LEAD;
    let deadline = start + Duration::from_secs_f64(horizon + config.grace_s);

    let (dispatch, mean_in_flight) = thread::scope(|scope| {
        for _ in 0..backend.pool_size() {
            let receivers = &receivers;
            let recorder = &recorder;
            let gauge = &gauge;
            scope.spawn(move || worker(backend, receivers, recorder.buffer(), gauge, start, deadline));
        }
        let gauge_thread = {
            let gauge = &gauge;
            scope.spawn(move || run_gauge(start, config.warmup_s, config.duration_s, gauge))
        };
        let mut dispatchers = Vec::new();
        for ((class, stream, times), sender) in plans.into_iter().zip(senders) {
            let recorder = &recorder;
            let gauge = &gauge;
            dispatchers.push(scope.spawn(move || {
                let mut buf = recorder.buffer();
                let mut rng = instance_rng(config.seed, class);
                let mut hasher = DispatchHasher::new(class);
                let mut d = ClassDispatch::default();
                for &t in &times {
                    let (i, tx) = stream.next(&mut rng);
                    hasher.push(t, &tx);
                    let at = start + Duration::from_secs_f64(t);
                    sleep_until(at);
                    let actual = Instant::now().saturating_duration_since(start).as_secs_f64();
                    if actual - t <= ON_TIME_TOLERANCE_S {
                        d.on_time += 1;
                    }
                    d.first_actual_s.get_or_insert(actual);
                    d.last_actual_s = actual;
                    d.sends += 1;
                    d.read_only += u64::from(tx.read_only);
                    *d.by_template.entry(stream.names[i].to_string()).or_default() += 1;
                    let req =
                        Request { class, template: Arc::clone(&stream.names[i]), send_time_s: t, tx };
                    gauge.enter();
                    match sender.try_send(req) {
                        Ok(()) => {}
                        Err(TrySendError::Full(req) | TrySendError::Disconnected(req)) => {
                            gauge.leave();
                            buf.record(dropped(&req));
                        }
                    }
                }
                d.digest = Some(hasher.finish());
                // Hold the queue open for the whole phase.
                sleep_until(start + Duration::from_secs_f64(horizon));
                (class, d)
            }));
        }
        let dispatch: BTreeMap<_, _> =
            dispatchers.into_iter().map(|h| h.join().expect("dispatcher panicked")).collect();
        let mean = gauge_thread.join().expect("gauge panicked");
        (dispatch, mean)
    });

    // Workers have exited: anything still queued missed the grace period.
    let mut buf = recorder.buffer();
    for rx in &receivers {
        while let Ok(req) = rx.try_recv() {
            gauge.leave();
            buf.record(dropped(&req));
        }
    }
    drop(buf);
    Ok(PhaseResult {
        samples: recorder.take(),
        dispatch,
        mean_in_flight,
        max_in_flight: gauge.max.load(Ordering::SeqCst),
    })
}

fn worker(
    backend: &Backend,
    receivers: &[Receiver<Request>],
    mut buf: SampleBuffer,
    gauge: &InFlight,
    start: Instant,
    deadline: Instant,
) {
    let mut sel = Select::new();
    for rx in receivers {
        sel.recv(rx);
    }
    let mut open = receivers.len();
    while open > 0 {
        let Ok(op) = sel.select_deadline(deadline) else { break };
        let i = op.index();
        let Ok(req) = op.recv(&receivers[i]) else {
            sel.remove(i);
            open -= 1;
            continue;
        };
        let outcome = backend.execute_transaction(&req.tx);
        let done = Instant::now();
        gauge.leave();
        let sent = start + Duration::from_secs_f64(req.send_time_s);
        let latency_us = (done.saturating_duration_since(sent).as_micros() as u64).max(1);
        buf.record(LatencySample {
            class: req.class,
            template: req.template,
            send_time_s: req.send_time_s,
            latency_us: latency_us.max(outcome.latency_us),
            service_us: outcome.latency_us,
            status: status_of(outcome.status),
        });
    }
}

fn run_closed_phase(
    config: &RunConfig,
    catalog: &BenchmarkCatalog,
    backend: &Backend,
    classes: &[WorkloadClass],
) -> Result<PhaseResult, LoadgenError> {
    let horizon = config.horizon_s();
    let mut streams = Vec::new();
    for &class in classes {
        streams.push((class, ClassStream::new(catalog, class, &config.weights, config.scale)?));
    }
    let shares = split_terminals(config.terminals, classes.len());
    let recorder = Recorder::new();
    let gauge = InFlight::default();
    let start = Instant::now() + START_LEAD;
    let stop = start + Duration::from_secs_f64(horizon);

    let (per_terminal, mean_in_flight) = thread::scope(|scope| {
        let mut terminals = Vec::new();
        for ((class, stream), &n) in streams.iter().zip(&shares) {
            for k in 0..n as usize {
                let recorder = &recorder;
                let gauge = &gauge;
                terminals.push(scope.spawn(move || {
                    let mut buf = recorder.buffer();
                    let mut rng = terminal_rng(config.seed, *class, k);
                    let mut d = ClassDispatch::default();
                    sleep_until(start);
                    loop {
                        let (i, tx) = stream.next(&mut rng);
                        let issued = Instant::now();
                        if issued >= stop {
                            break;
                        }
                        let send_time_s = issued.saturating_duration_since(start).as_secs_f64();
                        d.sends += 1;
                        d.read_only += u64::from(tx.read_only);
                        *d.by_template.entry(stream.names[i].to_string()).or_default() += 1;
                        gauge.enter();
                        let outcome = backend.execute_transaction(&tx);
                        let latency_us = (issued.elapsed().as_micros() as u64).max(1);
                        gauge.leave();
                        buf.record(LatencySample {
                            class: *class,
                            template: Arc::clone(&stream.names[i]),
                            send_time_s,
                            latency_us,
                            service_us: outcome.latency_us,
                            status: status_of(outcome.status),
                        });
                    }
                    (*class, d)
                }));
            }
        }
        let mean = run_gauge(start, config.warmup_s, config.duration_s, &gauge);
        let per: Vec<_> = terminals.into_iter().map(|h| h.join().expect("terminal panicked")).collect();
        (per, mean)
    });

    let mut dispatch: BTreeMap<WorkloadClass, ClassDispatch> = BTreeMap::new();
    for (class, d) in per_terminal {
        let e = dispatch.entry(class).or_default();
        e.sends += d.sends;
        e.read_only += d.read_only;
        for (t, n) in d.by_template {
            *e.by_template.entry(t).or_default() += n;
        }
    }
    Ok(PhaseResult {
        samples: recorder.take(),
        dispatch,
        mean_in_flight,
        max_in_flight: gauge.max.load(Ordering::SeqCst),
    })
}

/// Drives `config` against a populated backend and summarizes the
/// measurement window. Saturation is not an error; it shows up as queueing
/// latency and drops.
pub fn run(
    config: &RunConfig,
    catalog: &BenchmarkCatalog,
    backend: &Backend,
) -> Result<RunReport, LoadgenError> {
    config.validate()?;
    config.check_weights(catalog)?;
    let phases = config.phases();
    let mut report = metrics::summarize(&[], config.warmup_s, config.duration_s);
    let mut digests = BTreeMap::new();
    let (mut on_time, mut open_sends) = (0u64, 0u64);
    let mut in_flight_means = Vec::new();
    let info = &mut report.run;
    info.benchmark = catalog.name().to_owned();
    info.mode = config.mode.to_string();
    info.loop_kind = config.loop_kind.to_string();
    info.seed = config.seed;
    info.scale = config.scale;
    info.pool_size = backend.pool_size() as u32;
    for class in config.active_classes() {
        info.rates.insert(class, config.rate(class));
    }

    for classes in phases {
        let phase = match config.loop_kind {
            LoopKind::Open => run_open_phase(config, catalog, backend, &classes)?,
            LoopKind::Closed => run_closed_phase(config, catalog, backend, &classes)?,
        };
        let summary = metrics::summarize(&phase.samples, config.warmup_s, config.duration_s);
        for &class in &classes {
            let r = summary.classes.get(&class).cloned().unwrap_or_else(|| {
                metrics::summarize_class(&[], class, config.warmup_s, config.duration_s)
            });
            report.classes.insert(class, r);
        }
        let info = &mut report.run;
        for (class, d) in phase.dispatch {
            info.dispatched.insert(class, d.sends);
            info.dispatched_read_only.insert(class, d.read_only);
            for (t, n) in d.by_template {
                *info.dispatched_by_template.entry(t).or_default() += n;
            }
            if let Some(first) = d.first_actual_s {
                let span = d.last_actual_s - first;
                let achieved = if d.sends > 1 && span > 0.0 {
                    (d.sends - 1) as f64 / span
                } else {
                    d.sends as f64 / config.horizon_s()
                };
                info.achieved_rate.insert(class, achieved);
                on_time += d.on_time;
                open_sends += d.sends;
            }
            if let Some(digest) = d.digest {
                digests.insert(class, digest);
            }
        }
        in_flight_means.push(phase.mean_in_flight);
        info.max_in_flight = info.max_in_flight.max(phase.max_in_flight);
    }
    let info = &mut report.run;
    if config.loop_kind == LoopKind::Open {
        info.dispatch_digest = combine_digests(&digests);
        info.on_time_fraction =
            Some(if open_sends == 0 { 1.0 } else { on_time as f64 / open_sends as f64 });
    }
    if !in_flight_means.is_empty() {
        info.mean_in_flight = in_flight_means.iter().sum::<f64>() / in_flight_means.len() as f64;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    OltpRate,
    OlapRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::OltpRate => "oltp_rate",
            SweepAxis::OlapRate => "olap_rate",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = LoadgenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "oltp_rate" | "oltp" => Ok(SweepAxis::OltpRate),
            "olap_rate" | "olap" => Ok(SweepAxis::OlapRate),
            other => Err(LoadgenError::Config(format!(
                "unknown sweep axis `{other}` (valid: oltp_rate, olap_rate)"
            ))),
        }
    }
}

/// One run per value of `axis`, everything else held at `base`.
pub fn sweep(
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    catalog: &BenchmarkCatalog,
    backend: &Backend,
) -> Result<Vec<(f64, RunReport)>, LoadgenError> {
    if values.windows(2).any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
        return Err(LoadgenError::Config("sweep values must be nondecreasing".into()));
    }
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match axis {
                SweepAxis::OltpRate => c.oltp_rate = v,
                SweepAxis::OlapRate => c.olap_rate = v,
            }
            c.validate().map(|()| c)
        })
        .collect::<Result<_, _>>()?;
    configs
        .iter()
        .zip(values)
        .map(|(c, &v)| run(c, catalog, backend).map(|r| (v, r)))
        .collect()
}
