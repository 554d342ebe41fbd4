use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use htapbench::analysis::{self, AnalysisError, LockSampleCounts};
use htapbench::benchspec::{stitched_fixture, BenchmarkCatalog, CatalogError, Suite, WorkloadClass};
use htapbench::config::{self, ConfigError, RunSpec};
use htapbench::datagen::{self, DatagenError};
use htapbench::driver::{self, DriverError, Isolation};
use htapbench::loadgen::{self, Jitter, LoadgenError, LoopKind, Mode, SweepAxis};
use htapbench::metrics::{self, MetricsError, RunReport};

#[derive(Parser)]
#[command(name = "htapbench", version, about = "Hybrid transactional/analytical database benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print (or apply) the schema of a benchmark.
    Ddl {
        benchmark: Suite,
        /// Omit foreign-key constraints.
        #[arg(long)]
        no_fk: bool,
        /// Create the schema on --target instead of printing it.
        #[arg(long)]
        apply: bool,
        #[arg(long, default_value = "embedded://")]
        target: String,
    },
    /// Load the initial population.
    Populate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Create the schema first.
        #[arg(long)]
        create_schema: bool,
        #[arg(long, default_value_t = datagen::DEFAULT_BATCH_SIZE)]
        batch_size: usize,
    },
    /// Drive a workload and write a JSON report.
    Run {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// One run per value of an axis, plus an interference CSV.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated, nondecreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Class whose latency the CSV tracks.
        #[arg(long, default_value = "oltp", value_parser = parse_class)]
        class: WorkloadClass,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print one report, or the mean and standard deviation of several.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check that analytical and real-time queries only read OLTP data.
    CheckSchema {
        #[arg(required_unless_present = "fixture")]
        benchmark: Option<Suite>,
        /// Check a bundled fixture instead (`stitched`).
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// List tables and templates as JSON.
    Inventory { benchmark: Suite },
    /// Normalized lock overhead from lock-sample counts.
    Nlo {
        /// File of `lock_samples total_samples baseline_overhead` lines.
        #[arg(long, conflicts_with_all = ["ls", "ts", "blo"])]
        file: Option<PathBuf>,
        #[arg(long, requires_all = ["ts", "blo"])]
        ls: Option<u64>,
        #[arg(long)]
        ts: Option<u64>,
        #[arg(long)]
        blo: Option<f64>,
    },
}

fn parse_class(s: &str) -> Result<WorkloadClass, String> {
    WorkloadClass::parse(s).ok_or_else(|| format!("unknown class `{s}` (valid: oltp, olap, olxp)"))
}

/// A run specification: an XML file, flags, or both (flags win).
#[derive(Args, Default)]
struct SpecArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<Suite>,
    #[arg(long)]
    fk: Option<bool>,
    #[arg(long)]
    scale: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long = "loop")]
    loop_kind: Option<LoopKind>,
    #[arg(long)]
    jitter: Option<Jitter>,
    #[arg(long)]
    terminals: Option<u32>,
    #[arg(long)]
    oltp_rate: Option<f64>,
    #[arg(long)]
    olap_rate: Option<f64>,
    #[arg(long)]
    hybrid_rate: Option<f64>,
    #[arg(long)]
    warmup_s: Option<f64>,
    #[arg(long)]
    duration_s: Option<f64>,
    /// Template weight override, `NAME=WEIGHT`; repeatable.
    #[arg(long = "weight", value_parser = parse_weight)]
    weights: Vec<(String, u32)>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    pool_size: Option<u32>,
    #[arg(long)]
    isolation: Option<Isolation>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_weight(s: &str) -> Result<(String, u32), String> {
    let (name, w) = s.split_once('=').ok_or_else(|| format!("expected NAME=WEIGHT, got `{s}`"))?;
    let w = w.trim().parse().map_err(|e| format!("weight for `{name}`: {e}"))?;
    Ok((name.trim().to_owned(), w))
}

impl SpecArgs {
    /// Element names whose value came from a flag.
    fn flagged(&self) -> BTreeMap<&'static str, &'static str> {
        let mut m = BTreeMap::new();
        let mut note = |set: bool, el: &'static str, flag: &'static str| {
            if set {
                m.insert(el, flag);
            }
        };
        note(self.scale.is_some(), "scale", "--scale");
        note(self.mode.is_some(), "mode", "--mode");
        note(self.terminals.is_some(), "terminals", "--terminals");
        note(self.hybrid_rate.is_some(), "hybrid_rate", "--hybrid-rate");
        note(self.warmup_s.is_some(), "warmup_s", "--warmup-s");
        note(self.duration_s.is_some(), "duration_s", "--duration-s");
        note(self.isolation.is_some(), "isolation", "--isolation");
        note(self.target.is_some() || self.pool_size.is_some(), "target", "--target/--pool-size");
        note(!self.weights.is_empty(), "weights", "--weight");
        m
    }

    fn resolve(&self) -> Result<RunSpec> {
        let mut spec = match (&self.config, self.benchmark) {
            (Some(path), _) => {
                let mut spec = config::parse_config(path)
                    .with_context(|| format!("--config {}", path.display()))?;
                if let Some(b) = self.benchmark {
                    spec.benchmark = b;
                }
                spec
            }
            (None, Some(b)) => RunSpec::new(b),
            (None, None) => return Err(Usage("either --config or --benchmark is required".into()).into()),
        };
        if let Some(v) = self.fk {
            spec.fk = v;
        }
        if let Some(v) = &self.output {
            spec.output = v.clone();
        }
        let r = &mut spec.run;
        macro_rules! set {
            ($($field:ident => $dst:expr),+ $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $dst = v; })+
            };
        }
        set!(
            scale => r.scale,
            seed => r.seed,
            mode => r.mode,
            loop_kind => r.loop_kind,
            jitter => r.jitter,
            terminals => r.terminals,
            oltp_rate => r.oltp_rate,
            olap_rate => r.olap_rate,
            hybrid_rate => r.hybrid_rate,
            warmup_s => r.warmup_s,
            duration_s => r.duration_s,
            target => r.target.descriptor,
            pool_size => r.target.pool_size,
            isolation => r.target.isolation,
        );
        if !self.weights.is_empty() {
            r.weights = self.weights.iter().cloned().collect();
        }
        if let Err(mut e) = spec.validate() {
            let el = e.path.trim_start_matches("/config/").split('/').next().unwrap_or("");
            let flagged = self.flagged();
            let flag = flagged.get(el).or_else(|| flagged.get(if e.path.contains("weight") { "weights" } else { "" }));
            if let Some(flag) = flag {
                e.path = format!("{flag} ({})", e.path);
            }
            return Err(e.into());
        }
        Ok(spec)
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A consistency check that ran and failed.
#[derive(Debug)]
struct Inconsistent(String);

impl std::fmt::Display for Inconsistent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "semantic consistency check failed for {}", self.0)
    }
}

impl std::error::Error for Inconsistent {}

fn category(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return "usage";
        }
        if cause.is::<ConfigError>() {
            return "config";
        }
        if cause.is::<Inconsistent>() {
            return "consistency";
        }
        if let Some(d) = cause.downcast_ref::<DriverError>() {
            return match d {
                DriverError::Unreachable(_) => "unreachable",
                DriverError::DriverNotBuilt(_) => "driver-not-built",
                DriverError::Sql { .. } => "sql",
                _ => "target",
            };
        }
        if cause.is::<CatalogError>() {
            return "catalog";
        }
        if cause.is::<DatagenError>() {
            return "populate";
        }
        if cause.is::<LoadgenError>() {
            return "run";
        }
        if cause.is::<MetricsError>() || cause.is::<serde_json::Error>() {
            return "report";
        }
        if cause.is::<AnalysisError>() {
            return "analysis";
        }
        if cause.is::<io::Error>() {
            return "io";
        }
    }
    "internal"
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a run report", path.display()))
}

fn connect(spec: &RunSpec) -> Result<driver::Backend> {
    driver::connect(&spec.run.target)
        .with_context(|| format!("--target {}", spec.run.target.descriptor))
}

fn ddl(benchmark: Suite, no_fk: bool, apply: bool, target: &str) -> Result<()> {
    let catalog = benchmark.catalog();
    if apply {
        let t = driver::BackendTarget::new(target, 1, Isolation::RepeatableRead);
        let backend = driver::connect(&t).with_context(|| format!("--target {target}"))?;
        backend.create_schema(&catalog, !no_fk)?;
        println!("created {} tables of {benchmark} on {target}", catalog.tables().len());
    } else {
        print!("{}", catalog.emit_ddl(!no_fk)?);
    }
    Ok(())
}

fn populate(spec: &RunSpec, create_schema: bool, batch_size: usize) -> Result<()> {
    let catalog = spec.catalog();
    let backend = connect(spec)?;
    if create_schema {
        backend.create_schema(&catalog, spec.fk)?;
    }
    let summary = datagen::populate(&catalog, spec.run.scale, spec.run.seed, &backend, batch_size)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(spec: &RunSpec) -> Result<()> {
    let catalog = spec.catalog();
    let backend = connect(spec)?;
    let report = loadgen::run(&spec.run, &catalog, &backend)?;
    write_json(&spec.output, &report)?;
    print!("{}", report.render_table());
    eprintln!("report written to {}", spec.output.display());
    Ok(())
}

fn sweep(spec: &RunSpec, axis: SweepAxis, values: &[f64], class: WorkloadClass, out: &Path) -> Result<()> {
    let catalog = spec.catalog();
    let backend = connect(spec)?;
    let points = loadgen::sweep(&spec.run, axis, values, &catalog, &backend)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (v, report) in &points {
        let path = out.join(format!("report_{}_{v}.json", axis.name()));
        write_json(&path, report)?;
        println!("{} = {v}: {}", axis.name(), path.display());
    }
    if !points.is_empty() {
        let csv = out.join("interference.csv");
        let f = File::create(&csv).with_context(|| format!("writing {}", csv.display()))?;
        analysis::write_sweep_csv(f, axis.name(), &points, class)?;
        println!("interference: {}", csv.display());
    }
    Ok(())
}

fn report(files: &[PathBuf], json: bool) -> Result<()> {
    let reports = files.iter().map(|p| read_report(p)).collect::<Result<Vec<_>>>()?;
    if let [one] = reports.as_slice() {
        if json {
            println!("{}", serde_json::to_string_pretty(one)?);
        } else {
            print!("{}", one.render_table());
        }
        return Ok(());
    }
    let agg = metrics::aggregate_runs(&reports)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&agg)?);
        return Ok(());
    }
    println!("{} runs", agg.runs);
    for (class, stats) in &agg.classes {
        for (name, ms) in stats {
            println!("{class:<5} {name:<16} {:>14.3} ± {:.3}", ms.mean, ms.stddev);
        }
    }
    Ok(())
}

fn check_schema(benchmark: Option<Suite>, fixture: Option<&str>, json: bool) -> Result<()> {
    let catalog: BenchmarkCatalog = match (benchmark, fixture) {
        (_, Some("stitched")) => stitched_fixture(),
        (_, Some(other)) => {
            return Err(Usage(format!("--fixture: unknown fixture `{other}` (valid: stitched)")).into())
        }
        (Some(b), None) => b.catalog(),
        (None, None) => return Err(Usage("name a benchmark or --fixture".into()).into()),
    };
    let report = catalog.check_semantic_consistency();
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Inconsistent(catalog.name().to_owned()).into())
    }
}

fn nlo(file: Option<&Path>, ls: Option<u64>, ts: Option<u64>, blo: Option<f64>) -> Result<()> {
    let counts = match (file, ls, ts, blo) {
        (Some(path), ..) => analysis::read_lock_counts(path)?,
        (None, Some(lock_samples), Some(total_samples), Some(baseline_overhead)) => {
            vec![LockSampleCounts { lock_samples, total_samples, baseline_overhead }]
        }
        _ => bail!(Usage("give --file, or all of --ls, --ts and --blo".into())),
    };
    for c in counts {
        let v = analysis::normalized_lock_overhead(c)?;
        println!("{} {} {} {:.6}%", c.lock_samples, c.total_samples, c.baseline_overhead, v);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ddl { benchmark, no_fk, apply, target } => ddl(benchmark, no_fk, apply, &target),
        Command::Populate { spec, create_schema, batch_size } => {
            populate(&spec.resolve()?, create_schema, batch_size)
        }
        Command::Run { spec } => run(&spec.resolve()?),
        Command::Sweep { spec, axis, values, class, out_dir } => {
            sweep(&spec.resolve()?, axis, &values, class, &out_dir)
        }
        Command::Report { files, json } => report(&files, json),
        Command::CheckSchema { benchmark, fixture, json } => {
            check_schema(benchmark, fixture.as_deref(), json)
        }
        Command::Inventory { benchmark } => {
            println!("{}", serde_json::to_string_pretty(&benchmark.catalog().inventory())?);
            Ok(())
        }
        Command::Nlo { file, ls, ts, blo } => nlo(file.as_deref(), ls, ts, blo),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = category(&e);
            eprintln!("error[{cat}]: {e:#}");
            ExitCode::from(if cat == "usage" || cat == "config" { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weight("NewOrder=45").unwrap(), ("NewOrder".into(), 45));
        assert!(parse_weight("NewOrder").is_err());
        assert!(parse_weight("NewOrder=x").is_err());
    }

    #[test]
    fn flags_override_the_file() {
        let args = SpecArgs {
            benchmark: Some(Suite::Fibenchmark),
            scale: Some(2),
            oltp_rate: Some(5.0),
            ..SpecArgs::default()
        };
        let spec = args.resolve().unwrap();
        assert_eq!((spec.run.scale, spec.run.oltp_rate), (2, 5.0));
    }

    #[test]
    fn flag_errors_name_the_flag() {
        let args = SpecArgs {
            benchmark: Some(Suite::Fibenchmark),
            duration_s: Some(0.0),
            ..SpecArgs::default()
        };
        let e = args.resolve().unwrap_err();
        assert!(e.to_string().contains("--duration-s"), "{e}");
        assert_eq!(category(&e), "config");
    }

    #[test]
    fn missing_source_is_a_usage_error() {
        let e = SpecArgs::default().resolve().unwrap_err();
        assert_eq!(category(&e), "usage");
    }

    #[test]
    fn anyhow_wrapping_keeps_category() {
        let e = anyhow!(Inconsistent("x".into())).context("outer");
        assert_eq!(category(&e), "consistency");
    }
}
