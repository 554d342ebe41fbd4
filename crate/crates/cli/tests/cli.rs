use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn htapbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htapbench")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn populated(dir: &Path) -> String {
    let target = format!("embedded://{}", dir.join("fi.db").display());
    let out = htapbench(&["ddl", "fibenchmark", "--apply", "--target", &target]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let out = htapbench(&[
        "populate", "--benchmark", "fibenchmark", "--scale", "1", "--seed", "4", "--target", &target,
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("\"total_rows\": 300000"), "{}", text(&out.stdout));
    target
}

#[test]
fn check_schema_passes_builtins_and_fails_the_stitched_fixture() {
    for b in ["subenchmark", "fibenchmark", "tabenchmark"] {
        let out = htapbench(&["check-schema", b]);
        assert!(out.status.success(), "{b}: {}", text(&out.stdout));
        assert!(text(&out.stdout).contains("PASS"));
    }
    let out = htapbench(&["check-schema", "--fixture", "stitched"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("never touched by OLTP: NATION, REGION, SUPPLIER"), "{stdout}");
    assert!(text(&out.stderr).starts_with("error[consistency]"));
}

#[test]
fn ddl_prints_the_schema() {
    let out = htapbench(&["ddl", "tabenchmark"]);
    assert!(out.status.success());
    let ddl = text(&out.stdout);
    assert_eq!(ddl.matches("CREATE TABLE").count(), 4);
    assert!(ddl.contains("FOREIGN KEY"));
    let bare = text(&htapbench(&["ddl", "tabenchmark", "--no-fk"]).stdout);
    assert!(!bare.contains("FOREIGN KEY"));
}

#[test]
fn populate_run_report_end_to_end() {
    let dir = TempDir::new().unwrap();
    let target = populated(dir.path());
    let report = dir.path().join("r.json");
    let report_s = report.to_str().unwrap();
    let out = htapbench(&[
        "run", "--benchmark", "fibenchmark", "--scale", "1", "--target", &target,
        "--oltp-rate", "50", "--olap-rate", "1", "--warmup-s", "0.5", "--duration-s", "2",
        "--output", report_s,
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("class"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["classes"]["oltp"]["p99_us"].is_null());
    assert!(json["classes"]["oltp"]["p50_us"].as_u64().unwrap() > 0);

    let single = htapbench(&["report", report_s]);
    assert!(single.status.success());
    assert!(text(&single.stdout).contains("oltp"));
    let agg = htapbench(&["report", report_s, report_s]);
    assert!(agg.status.success(), "{}", text(&agg.stderr));
    assert!(text(&agg.stdout).starts_with("2 runs"));
}

#[test]
fn xml_config_drives_a_run_and_flags_override_it() {
    let dir = TempDir::new().unwrap();
    let target = populated(dir.path());
    let xml = dir.path().join("run.xml");
    let report = dir.path().join("out/report.json");
    std::fs::write(
        &xml,
        format!(
            r#"<config>
  <benchmark>fibenchmark</benchmark>
  <scale>1</scale>
  <oltp_rate>40</oltp_rate>
  <warmup_s>0</warmup_s>
  <duration_s>1</duration_s>
  <weights><weight name="Amalgamate">1</weight></weights>
  <target descriptor="{target}" pool_size="2"/>
  <output>{}</output>
</config>"#,
            report.display()
        ),
    )
    .unwrap();
    let xml_s = xml.to_str().unwrap();
    let out = htapbench(&["run", "--config", xml_s, "--seed", "9"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["run"]["seed"], 9);
    assert_eq!(json["run"]["pool_size"], 2);
    assert_eq!(json["run"]["dispatched_by_template"]["Amalgamate"], 40);
}

#[test]
fn sweep_writes_reports_and_a_csv() {
    let dir = TempDir::new().unwrap();
    let target = populated(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = htapbench(&[
        "sweep", "--benchmark", "fibenchmark", "--scale", "1", "--target", &target,
        "--oltp-rate", "40", "--warmup-s", "0", "--duration-s", "1",
        "--axis", "olap_rate", "--values", "0,1,2", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for v in ["0", "1", "2"] {
        assert!(out_dir.join(format!("report_olap_rate_{v}.json")).exists());
    }
    let csv = std::fs::read_to_string(out_dir.join("interference.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(csv.starts_with("axis,value,class"));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("olap_rate,")));
}

#[test]
fn failures_carry_a_category_and_name_the_flag() {
    let out = htapbench(&["run", "--benchmark", "fibenchmark", "--mode", "hybrid", "--oltp-rate", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.starts_with("error[config]") && err.contains("--mode"), "{err}");

    let out = htapbench(&["run", "--benchmark", "fibenchmark", "--target", "oracle://h/db"]);
    assert!(text(&out.stderr).starts_with("error[config]: --target"), "{}", text(&out.stderr));

    let out = htapbench(&["run", "--benchmark", "fibenchmark", "--target", "tidb://127.0.0.1:1/db"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).starts_with("error[unreachable]"), "{}", text(&out.stderr));

    let out = htapbench(&["run", "--config", "/nonexistent/run.xml"]);
    assert!(text(&out.stderr).contains("--config /nonexistent/run.xml"));

    let out = htapbench(&["report", "/nonexistent.json"]);
    assert!(text(&out.stderr).starts_with("error[io]"));
}

#[test]
fn nlo_from_flags_and_file() {
    let out = htapbench(&["nlo", "--ls", "100", "--ts", "1000", "--blo", "0.1"]);
    assert!(out.status.success());
    assert_eq!(text(&out.stdout).trim(), "100 1000 0.1 100.000000%");
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("locks.txt");
    std::fs::write(&f, "# ls ts blo\n50, 1000, 0.1\n10 10 1\n").unwrap();
    let out = htapbench(&["nlo", "--file", f.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).lines().count(), 2);
}

#[test]
fn inventory_is_json() {
    let out = htapbench(&["inventory", "subenchmark"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tables"].as_array().unwrap().len(), 9);
}
