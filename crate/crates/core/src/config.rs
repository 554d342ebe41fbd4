//! XML run configuration.
//!
//! ```xml
//! <config>
//!   <benchmark>subenchmark</benchmark>
//!   <mode>concurrent</mode>
//!   <oltp_rate>30</oltp_rate>
//!   <olap_rate>2</olap_rate>
//!   <weights><weight name="NewOrder">100</weight></weights>
//!   <target descriptor="embedded:///tmp/bench.db" pool_size="4"/>
//!   <isolation>repeatable-read</isolation>
//! </config>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::benchspec::{BenchmarkCatalog, Suite};
use crate::driver::{BackendTarget, Isolation};
use crate::loadgen::{LoopKind, Mode, RunConfig, DEFAULT_GRACE_S, DEFAULT_QUEUE_CAPACITY};

pub const DEFAULT_OUTPUT: &str = "report.json";
pub const DEFAULT_POOL_SIZE: u32 = 4;

/// A configuration problem, located by element path such as `/config/scale`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl ToString) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

/// Everything one XML file describes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub benchmark: Suite,
    /// Declare foreign keys in the emitted DDL.
    pub fk: bool,
    pub run: RunConfig,
    pub output: PathBuf,
}

impl RunSpec {
    pub fn new(benchmark: Suite) -> Self {
        RunSpec {
            benchmark,
            fk: true,
            run: RunConfig {
                target: BackendTarget::new("embedded://", DEFAULT_POOL_SIZE, Isolation::RepeatableRead),
                ..RunConfig::default()
            },
            output: PathBuf::from(DEFAULT_OUTPUT),
        }
    }

    pub fn catalog(&self) -> BenchmarkCatalog {
        self.benchmark.catalog()
    }

    /// Checks the run invariants, the target and the weight names, reporting
    /// the element each problem belongs to.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        self.run.validate().map_err(|e| {
            let el = if r.mode == Mode::Hybrid && (r.oltp_rate > 0.0 || r.olap_rate > 0.0) {
                "mode"
            } else if r.hybrid_rate > 0.0 && r.mode != Mode::Hybrid {
                "hybrid_rate"
            } else if !(r.duration_s > 0.0 && r.duration_s.is_finite()) {
                "duration_s"
            } else if !(r.warmup_s >= 0.0 && r.warmup_s.is_finite()) {
                "warmup_s"
            } else if r.scale == 0 {
                "scale"
            } else if r.loop_kind == LoopKind::Closed {
                "terminals"
            } else {
                "config"
            };
            ConfigError::new(el_path(el), e)
        })?;
        self.run.target.validate().map_err(|e| {
            let el = match e {
                crate::driver::DriverError::UnsupportedIsolation { .. } => "isolation",
                _ => "target",
            };
            ConfigError::new(el_path(el), e)
        })?;
        let catalog = self.catalog();
        for name in self.run.weights.keys() {
            if catalog.template(name).is_none() {
                return Err(ConfigError::new(
                    format!("/config/weights/weight[@name='{name}']"),
                    format!("{} has no template `{name}`", self.benchmark),
                ));
            }
        }
        for class in crate::benchspec::WorkloadClass::ALL {
            catalog
                .default_mix(class)
                .with_overrides(&self.run.weights)
                .map_err(|e| ConfigError::new("/config/weights", e))?;
        }
        Ok(())
    }
}

fn el_path(el: &str) -> String {
    if el == "config" {
        "/config".into()
    } else {
        format!("/config/{el}")
    }
}

pub fn parse_config(path: &Path) -> Result<RunSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), e))?;
    parse_config_str(&text)
}

fn parse_value<T: FromStr>(node: roxmltree::Node<'_, '_>, path: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let text = node.text().unwrap_or("").trim();
    text.parse().map_err(|e| ConfigError::new(path, format!("cannot parse `{text}`: {e}")))
}

fn parse_bool(node: roxmltree::Node<'_, '_>, path: &str) -> Result<bool, ConfigError> {
    match node.text().unwrap_or("").trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(ConfigError::new(path, format!("expected true or false, got `{other}`"))),
    }
}

fn reject_attributes(node: roxmltree::Node<'_, '_>, path: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    match node.attributes().find(|a| !allowed.contains(&a.name())) {
        Some(a) => Err(ConfigError::new(format!("{path}/@{}", a.name()), "unknown attribute")),
        None => Ok(()),
    }
}

pub fn parse_config_str(text: &str) -> Result<RunSpec, ConfigError> {
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| ConfigError::new("/", format!("malformed XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "config" {
        return Err(ConfigError::new(
            format!("/{}", root.tag_name().name()),
            "root element must be <config>",
        ));
    }
    reject_attributes(root, "/config", &[])?;
    let elements: Vec<_> = root.children().filter(|n| n.is_element()).collect();

    let mut seen = BTreeMap::new();
    for n in &elements {
        let name = n.tag_name().name();
        if seen.insert(name, ()).is_some() {
            return Err(ConfigError::new(el_path(name), "element given more than once"));
        }
    }
    let benchmark = elements
        .iter()
        .find(|n| n.tag_name().name() == "benchmark")
        .ok_or_else(|| ConfigError::new("/config/benchmark", "required element missing"))?;
    let suite: Suite = parse_value(*benchmark, "/config/benchmark")?;
    let mut spec = RunSpec::new(suite);

    for n in elements {
        let name = n.tag_name().name();
        let path = el_path(name);
        if name != "target" && name != "weight" {
            reject_attributes(n, &path, &[])?;
        }
        let r = &mut spec.run;
        match name {
            "benchmark" => {}
            "fk" => spec.fk = parse_bool(n, &path)?,
            "scale" => r.scale = parse_value(n, &path)?,
            "seed" => r.seed = parse_value(n, &path)?,
            "mode" => r.mode = parse_value(n, &path)?,
            "loop" => r.loop_kind = parse_value(n, &path)?,
            "jitter" => r.jitter = parse_value(n, &path)?,
            "terminals" => r.terminals = parse_value(n, &path)?,
            "oltp_rate" => r.oltp_rate = parse_value(n, &path)?,
            "olap_rate" => r.olap_rate = parse_value(n, &path)?,
            "hybrid_rate" => r.hybrid_rate = parse_value(n, &path)?,
            "warmup_s" => r.warmup_s = parse_value(n, &path)?,
            "duration_s" => r.duration_s = parse_value(n, &path)?,
            "isolation" => r.target.isolation = parse_value(n, &path)?,
            "output" => spec.output = PathBuf::from(n.text().unwrap_or("").trim()),
            "target" => {
                reject_attributes(n, &path, &["descriptor", "pool_size"])?;
                let descriptor = n.attribute("descriptor").ok_or_else(|| {
                    ConfigError::new("/config/target/@descriptor", "required attribute missing")
                })?;
                r.target.descriptor = descriptor.trim().to_owned();
                if let Some(p) = n.attribute("pool_size") {
                    r.target.pool_size = p.trim().parse().map_err(|e| {
                        ConfigError::new("/config/target/@pool_size", format!("cannot parse `{p}`: {e}"))
                    })?;
                }
                if let Some(c) = n.children().find(|c| c.is_element()) {
                    return Err(ConfigError::new(
                        format!("/config/target/{}", c.tag_name().name()),
                        "unknown element",
                    ));
                }
            }
            "weights" => {
                for w in n.children().filter(|c| c.is_element()) {
                    let wpath = format!("/config/weights/{}", w.tag_name().name());
                    if w.tag_name().name() != "weight" {
                        return Err(ConfigError::new(wpath, "unknown element"));
                    }
                    reject_attributes(w, &wpath, &["name"])?;
                    let tname = w
                        .attribute("name")
                        .ok_or_else(|| ConfigError::new(format!("{wpath}/@name"), "required attribute missing"))?;
                    let wpath = format!("{wpath}[@name='{tname}']");
                    let weight: u32 = parse_value(w, &wpath)?;
                    if r.weights.insert(tname.to_owned(), weight).is_some() {
                        return Err(ConfigError::new(wpath, "template weighted more than once"));
                    }
                }
            }
            other => return Err(ConfigError::new(el_path(other), "unknown element")),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Serializes `spec` so that [`parse_config_str`] returns it unchanged.
pub fn emit_config(spec: &RunSpec) -> String {
    let r = &spec.run;
    let mut out = String::from("<config>\n");
    let mut el = |name: &str, value: String| {
        let _ = writeln!(out, "  <{name}>{}</{name}>", escape(&value));
    };
    el("benchmark", spec.benchmark.to_string());
    el("fk", spec.fk.to_string());
    el("scale", r.scale.to_string());
    el("seed", r.seed.to_string());
    el("mode", r.mode.to_string());
    el("loop", r.loop_kind.to_string());
    el("jitter", r.jitter.to_string());
    el("terminals", r.terminals.to_string());
    el("oltp_rate", r.oltp_rate.to_string());
    el("olap_rate", r.olap_rate.to_string());
    el("hybrid_rate", r.hybrid_rate.to_string());
    el("warmup_s", r.warmup_s.to_string());
    el("duration_s", r.duration_s.to_string());
    el("isolation", r.target.isolation.name().to_string());
    el("output", spec.output.display().to_string());
    if !r.weights.is_empty() {
        out.push_str("  <weights>\n");
        for (name, w) in &r.weights {
            let _ = writeln!(out, "    <weight name=\"{}\">{w}</weight>", escape(name));
        }
        out.push_str("  </weights>\n");
    }
    let _ = writeln!(
        out,
        "  <target descriptor=\"{}\" pool_size=\"{}\"/>",
        escape(&r.target.descriptor),
        r.target.pool_size
    );
    out.push_str("</config>\n");
    out
}

/// Run-config fields that only exist programmatically keep their defaults
/// when read from XML.
pub fn is_xml_expressible(run: &RunConfig) -> bool {
    run.queue_capacity == DEFAULT_QUEUE_CAPACITY && run.grace_s == DEFAULT_GRACE_S
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loadgen::{Jitter, DEFAULT_DURATION_S, DEFAULT_SCALE, DEFAULT_WARMUP_S};
    use proptest::prelude::*;

    const MINIMAL: &str = r#"<config><benchmark>subenchmark</benchmark>
        <target descriptor="embedded://"/></config>"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_config_str(MINIMAL).unwrap();
        assert_eq!(s.benchmark, Suite::Subenchmark);
        assert_eq!((s.run.warmup_s, s.run.duration_s, s.run.scale), (60.0, 240.0, 50));
        assert_eq!((DEFAULT_WARMUP_S, DEFAULT_DURATION_S, DEFAULT_SCALE), (60.0, 240.0, 50));
        assert_eq!(s.run.mode, Mode::Concurrent);
        assert_eq!(s.output, PathBuf::from("report.json"));
        assert!(is_xml_expressible(&s.run));
    }

    #[test]
    fn weights_can_pin_one_template() {
        let xml = r#"<config><benchmark>subenchmark</benchmark><oltp_rate>10</oltp_rate>
            <weights><weight name="NewOrder">100</weight></weights></config>"#;
        let s = parse_config_str(xml).unwrap();
        let mix = s
            .catalog()
            .default_mix(crate::benchspec::WorkloadClass::Online)
            .with_overrides(&s.run.weights)
            .unwrap();
        assert_eq!(mix.read_only_fraction(), num_rational::Ratio::from_integer(0));
    }

    #[test]
    fn errors_name_the_element() {
        let cases = [
            ("<config><benchmark>tpcx</benchmark></config>", "/config/benchmark"),
            ("<config><benchmark>fibenchmark</benchmark><colour>red</colour></config>", "/config/colour"),
            (
                "<config><benchmark>fibenchmark</benchmark><mode>hybrid</mode><oltp_rate>5</oltp_rate></config>",
                "/config/mode",
            ),
            ("<config><benchmark>fibenchmark</benchmark><scale>x</scale></config>", "/config/scale"),
            (
                "<config><benchmark>fibenchmark</benchmark><weights><weight name=\"Nope\">1</weight></weights></config>",
                "/config/weights/weight[@name='Nope']",
            ),
            (
                "<config><benchmark>fibenchmark</benchmark><target descriptor=\"memsql://h/db\"/></config>",
                "/config/isolation",
            ),
            ("<config><benchmark>fibenchmark</benchmark><target/></config>", "/config/target/@descriptor"),
            ("<config><scale>1</scale></config>", "/config/benchmark"),
            ("<config><benchmark>fibenchmark", "/"),
        ];
        for (xml, path) in cases {
            let e = parse_config_str(xml).unwrap_err();
            assert_eq!(e.path, path, "{xml}: {e}");
        }
    }

    fn arb_spec() -> impl Strategy<Value = RunSpec> {
        (
            prop::sample::select(Suite::ALL.to_vec()),
            any::<bool>(),
            1u32..500,
            any::<u64>(),
            0u8..3,
            (0.0f64..1e4, 0.0f64..1e4, 0.0f64..1e4),
            (0.0f64..1e3, 1e-3f64..1e4),
            (1u32..64, 1u32..64, any::<bool>(), any::<bool>()),
            "[a-z]{1,8}(/[a-z]{1,8})?\\.json",
            prop::collection::vec(1u32..1000, 0..3),
        )
            .prop_map(
                |(suite, fk, scale, seed, mode, rates, window, knobs, output, weights)| {
                    let mut s = RunSpec::new(suite);
                    s.fk = fk;
                    let r = &mut s.run;
                    r.scale = scale;
                    r.seed = seed;
                    r.warmup_s = window.0;
                    r.duration_s = window.1;
                    r.terminals = knobs.0 + 3;
                    r.target.pool_size = knobs.1;
                    r.loop_kind = if knobs.2 { LoopKind::Closed } else { LoopKind::Open };
                    r.jitter = if knobs.3 { Jitter::Poisson } else { Jitter::Fixed };
                    match mode {
                        0 => (r.mode, r.oltp_rate, r.olap_rate) = (Mode::Sequential, rates.0, rates.1),
                        1 => (r.mode, r.oltp_rate, r.olap_rate) = (Mode::Concurrent, rates.0, rates.1),
                        _ => (r.mode, r.hybrid_rate) = (Mode::Hybrid, rates.2),
                    }
                    let catalog = s.catalog();
                    let online = catalog.templates(crate::benchspec::WorkloadClass::Online);
                    for (t, w) in online.iter().zip(weights) {
                        s.run.weights.insert(t.name().to_owned(), w);
                    }
                    s.output = PathBuf::from(output);
                    s
                },
            )
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(spec in arb_spec()) {
            prop_assert!(spec.validate().is_ok());
            let text = emit_config(&spec);
            prop_assert_eq!(parse_config_str(&text).unwrap(), spec);
        }
    }

    #[test]
    fn descriptor_with_query_round_trips() {
        let mut s = RunSpec::new(Suite::Tabenchmark);
        s.run.target.descriptor = "embedded:///tmp/a b.db?journal=wal&sync=off".into();
        assert_eq!(parse_config_str(&emit_config(&s)).unwrap(), s);
    }
}
