//! Send schedules and the deterministic per-class request streams behind them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{Jitter, LoadgenError};
use crate::benchspec::{BenchmarkCatalog, BoundTransaction, MixSampler, TemplateRef, WorkloadClass};

/// Send times in seconds from run start, nondecreasing, all below the horizon.
pub type SendSchedule = Vec<f64>;

/// Open-loop send times over `[0, horizon)`. Fixed jitter spaces sends exactly
/// `1/rate` apart starting at zero; Poisson draws exponential gaps from a
/// stream seeded by `seed`.
pub fn schedule_open_loop(
    rate: f64,
    horizon_s: f64,
    jitter: Jitter,
    seed: u64,
) -> Result<SendSchedule, LoadgenError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(LoadgenError::Config(format!("open-loop rate must be positive, got {rate}")));
    }
    if !(horizon_s >= 0.0 && horizon_s.is_finite()) {
        return Err(LoadgenError::Config(format!("horizon must be finite and >= 0, got {horizon_s}")));
    }
    let mut out = Vec::with_capacity((rate * horizon_s).ceil() as usize + 1);
    match jitter {
        Jitter::Fixed => {
            let mut k = 0u64;
            loop {
                let t = k as f64 / rate;
                if t >= horizon_s {
                    break;
                }
                out.push(t);
                k += 1;
            }
        }
        Jitter::Poisson => {
            let gaps = Exp::new(rate).expect("rate checked positive");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = 0.0;
            loop {
                t += gaps.sample(&mut rng);
                if t >= horizon_s {
                    break;
                }
                out.push(t);
            }
        }
    }
    Ok(out)
}

fn class_index(class: WorkloadClass) -> u64 {
    match class {
        WorkloadClass::Online => 0,
        WorkloadClass::Analytical => 1,
        WorkloadClass::Hybrid => 2,
    }
}

/// ChaCha stream carrying a class's template choices and parameters.
pub(super) fn instance_rng(seed: u64, class: WorkloadClass) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + class_index(class));
    rng
}

/// Seed for a class's Poisson gaps, independent of its instance stream.
pub(super) fn gap_seed(seed: u64, class: WorkloadClass) -> u64 {
    seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(101 + class_index(class)))
}

/// Stream for one closed-loop terminal.
pub(super) fn terminal_rng(seed: u64, class: WorkloadClass, terminal: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 * (1 + class_index(class)) + terminal as u64);
    rng
}

/// Draws bound instances of one class according to its mix.
pub(super) struct ClassStream<'a> {
    templates: Vec<TemplateRef<'a>>,
    pub(super) names: Vec<Arc<str>>,
    sampler: MixSampler,
    scale: u32,
}

impl<'a> ClassStream<'a> {
    pub(super) fn new(
        catalog: &'a BenchmarkCatalog,
        class: WorkloadClass,
        weights: &BTreeMap<String, u32>,
        scale: u32,
    ) -> Result<Self, LoadgenError> {
        let mix = catalog.default_mix(class).with_overrides(weights)?;
        let templates = catalog.templates(class);
        if templates.is_empty() {
            return Err(LoadgenError::Config(format!(
                "{} has no {class} templates",
                catalog.name()
            )));
        }
        let names = templates.iter().map(|t| Arc::from(t.name())).collect();
        Ok(ClassStream { templates, names, sampler: mix.sampler()?, scale })
    }

    pub(super) fn next(&self, rng: &mut ChaCha8Rng) -> (usize, BoundTransaction) {
        let i = self.sampler.sample(rng);
        (i, self.templates[i].instantiate(rng, self.scale))
    }
}

/// Running SHA-256 over `(send time, instance)` pairs.
pub(super) struct DispatchHasher {
    hasher: Sha256,
    buf: Vec<u8>,
}

impl DispatchHasher {
    pub(super) fn new(class: WorkloadClass) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(class.label().as_bytes());
        DispatchHasher { hasher, buf: Vec::with_capacity(512) }
    }

    pub(super) fn push(&mut self, send_time_s: f64, tx: &BoundTransaction) {
        self.hasher.update(send_time_s.to_bits().to_le_bytes());
        self.buf.clear();
        tx.encode_into(&mut self.buf);
        self.hasher.update(&self.buf);
    }

    pub(super) fn finish(self) -> [u8; 32] {
        self.hasher.finalize().into()
    }
}

/// Combines per-class digests in class order.
pub(super) fn combine_digests(parts: &BTreeMap<WorkloadClass, [u8; 32]>) -> String {
    let mut h = Sha256::new();
    for (class, d) in parts {
        h.update(class.label().as_bytes());
        h.update(d);
    }
    hex::encode(h.finalize())
}

/// What an open-loop run will dispatch, computed without touching a backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchPlan {
    pub sends: BTreeMap<WorkloadClass, u64>,
    pub read_only: BTreeMap<WorkloadClass, u64>,
    pub by_template: BTreeMap<String, u64>,
    pub digest: String,
}
