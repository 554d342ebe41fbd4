use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use htapbench::benchspec::{Suite, WorkloadClass};
use htapbench::datagen;
use htapbench::driver::{connect, Backend, BackendTarget, Isolation};
use htapbench::loadgen::{dispatch_plan, run, LoopKind, Mode, RunConfig};
use tempfile::TempDir;

/// A populated scale-1 banking database, built once and copied per test.
fn template_db() -> &'static Path {
    static DB: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = DB.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("fi.db");
        let target = BackendTarget::new(
            &format!("embedded://{}", path.display()),
            1,
            Isolation::RepeatableRead,
        );
        let catalog = Suite::Fibenchmark.catalog();
        let backend = connect(&target).unwrap();
        backend.create_schema(&catalog, true).unwrap();
        datagen::populate(&catalog, 1, 3, &backend, 1000).unwrap();
        drop(backend);
        (dir, path)
    });
    path
}

fn fresh(pool: u32) -> (TempDir, Backend, RunConfig) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("fi.db");
    std::fs::copy(template_db(), &path).unwrap();
    let target =
        BackendTarget::new(&format!("embedded://{}", path.display()), pool, Isolation::RepeatableRead);
    let backend = connect(&target).unwrap();
    let config = RunConfig {
        scale: 1,
        warmup_s: 0.5,
        duration_s: 2.0,
        seed: 17,
        target,
        ..RunConfig::default()
    };
    (dir, backend, config)
}

#[test]
fn open_loop_dispatch_matches_the_precomputed_plan() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d1, one, base) = fresh(1);
    let config = RunConfig { oltp_rate: 200.0, olap_rate: 2.0, ..base };
    let plan = dispatch_plan(&config, &catalog).unwrap();
    let report = run(&config, &catalog, &one).unwrap();
    assert_eq!(report.run.dispatch_digest, plan.digest);
    assert_eq!(report.run.dispatched, plan.sends);
    assert_eq!(report.run.dispatched_by_template, plan.by_template);

    // A different pool changes response times but not what is sent.
    let (_d4, four, base4) = fresh(4);
    let config4 = RunConfig { target: base4.target, ..config.clone() };
    let again = run(&config4, &catalog, &four).unwrap();
    assert_eq!(again.run.dispatch_digest, plan.digest);
}

#[test]
fn report_covers_only_the_window() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d, backend, base) = fresh(2);
    let config = RunConfig { oltp_rate: 100.0, ..base };
    let report = run(&config, &catalog, &backend).unwrap();
    let oltp = report.class(WorkloadClass::Online).unwrap();
    // 250 sends in total, 50 of them inside the warm-up.
    assert_eq!(report.run.dispatched[&WorkloadClass::Online], 250);
    assert_eq!(oltp.requests, 200);
    assert_eq!(oltp.series.len(), 2);
    assert!(oltp.count > 0 && oltp.percentiles_ordered());
    assert!(!report.classes.contains_key(&WorkloadClass::Analytical));
}

#[test]
fn closed_loop_never_exceeds_its_terminals() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d, backend, base) = fresh(2);
    let config = RunConfig {
        loop_kind: LoopKind::Closed,
        terminals: 3,
        oltp_rate: 1.0,
        olap_rate: 1.0,
        ..base
    };
    let report = run(&config, &catalog, &backend).unwrap();
    assert!(report.run.max_in_flight <= 3, "{}", report.run.max_in_flight);
    assert!(report.run.mean_in_flight <= 3.0);
    assert!(report.class(WorkloadClass::Online).unwrap().count > 0);
    assert!(report.class(WorkloadClass::Analytical).unwrap().count > 0);
    assert!(report.run.dispatch_digest.is_empty());
}

#[test]
fn littles_law_holds_for_a_closed_loop() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d, backend, base) = fresh(2);
    let config = RunConfig { loop_kind: LoopKind::Closed, terminals: 2, oltp_rate: 1.0, ..base };
    let report = run(&config, &catalog, &backend).unwrap();
    let r = report.class(WorkloadClass::Online).unwrap();
    let completions = (r.count + r.aborted + r.failed) as f64 / config.duration_s;
    let l = htapbench::analysis::littles_law_l(completions, r.mean_us.unwrap() / 1e6);
    let observed = report.run.mean_in_flight;
    assert!((l - observed).abs() / observed < 0.10, "predicted {l}, observed {observed}");
}

#[test]
fn sequential_mode_runs_each_class_in_turn() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d, backend, base) = fresh(2);
    let config = RunConfig {
        mode: Mode::Sequential,
        oltp_rate: 50.0,
        olap_rate: 2.0,
        warmup_s: 0.0,
        duration_s: 1.0,
        ..base
    };
    let started = std::time::Instant::now();
    let report = run(&config, &catalog, &backend).unwrap();
    assert!(started.elapsed().as_secs_f64() >= 2.0);
    assert_eq!(report.run.dispatched[&WorkloadClass::Online], 50);
    assert_eq!(report.run.dispatched[&WorkloadClass::Analytical], 2);
}

#[test]
fn all_zero_rates_give_an_empty_report() {
    let catalog = Suite::Fibenchmark.catalog();
    let (_d, backend, base) = fresh(1);
    let report = run(&base, &catalog, &backend).unwrap();
    assert!(report.classes.is_empty());
    assert_eq!(report.run.dispatched.len(), 0);
}

#[test]
fn planned_read_only_share_converges_to_the_mix() {
    for suite in Suite::ALL {
        let catalog = suite.catalog();
        for (mode, class) in [(Mode::Concurrent, WorkloadClass::Online), (Mode::Hybrid, WorkloadClass::Hybrid)] {
            let mut config =
                RunConfig { mode, scale: 1, warmup_s: 0.0, duration_s: 100.0, ..RunConfig::default() };
            match class {
                WorkloadClass::Online => config.oltp_rate = 100.0,
                _ => config.hybrid_rate = 100.0,
            }
            let plan = dispatch_plan(&config, &catalog).unwrap();
            let n = plan.sends[&class] as f64;
            assert_eq!(n, 10_000.0);
            let ratio = catalog.default_mix(class).read_only_fraction();
            let p = *ratio.numer() as f64 / *ratio.denom() as f64;
            let observed = plan.read_only[&class] as f64 / n;
            let sigma = (p * (1.0 - p) / n).sqrt();
            assert!((observed - p).abs() <= 3.0 * sigma, "{suite} {class}: {observed} vs {p}");
        }
    }
}
