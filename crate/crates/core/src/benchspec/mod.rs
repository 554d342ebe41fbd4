//! The three built-in suites: schemas, workload templates and default mixes,
//! plus DDL emission and the OLTP/OLAP schema consistency check.
//!
//! * `subenchmark`: retail, TPC-C online side.
//! * `fibenchmark`: banking, SmallBank online side.
//! * `tabenchmark`: telecom, TATP online side with a composite SUBSCRIBER key.
//!
//! Each suite adds analytical queries and hybrid transactions that only read
//! tables the online workload also touches.

mod catalog;
mod fibench;
mod schema;
mod stitched;
mod subench;
mod tabench;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use catalog::{
    BenchmarkCatalog, ConsistencyReport, Inventory, Mix, MixEntry, MixSampler, StatementFinding,
    TemplateListing, Verdict,
};
pub use schema::{
    fk_topological_order, split_statements, ColumnDef, ForeignKey, IndexDef, SqlType, TableDef,
};
pub use stitched::stitched_fixture;
pub use template::{
    instantiate, random_alnum, BoundStatement, BoundTransaction, HybridTemplate, ParamGen,
    StatementTemplate, StringPattern, TemplateClass, TemplateRef, TransactionTemplate,
    WorkloadClass,
};

/// Per-suite population constants shared with the data generator.
pub mod cardinality {
    pub use super::fibench::ACCOUNTS_PER_SCALE;
    pub use super::subench::{
        CUSTOMERS_PER_DISTRICT, DISTRICTS_PER_WAREHOUSE, ITEMS, LINES_PER_ORDER, ORDERS_PER_DISTRICT,
        NEW_ORDERS_PER_DISTRICT,
    };
    pub use super::tabench::SUBSCRIBERS_PER_SCALE;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("unknown benchmark `{0}` (valid choices: subenchmark, fibenchmark, tabenchmark)")]
    UnknownBenchmark(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("foreign keys form a cycle among tables {0:?}; no creation order exists")]
    UnorderableSchema(Vec<String>),
    #[error("table `{table}`: {msg}")]
    InvalidTable { table: String, msg: String },
    #[error("template `{template}`: {msg}")]
    InvalidTemplate { template: String, msg: String },
    #[error("duplicate template name `{0}`")]
    DuplicateTemplate(String),
    #[error("unknown template `{0}` in weight override")]
    UnknownTemplate(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Subenchmark,
    Fibenchmark,
    Tabenchmark,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Subenchmark, Suite::Fibenchmark, Suite::Tabenchmark];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Subenchmark => "subenchmark",
            Suite::Fibenchmark => "fibenchmark",
            Suite::Tabenchmark => "tabenchmark",
        }
    }

    pub fn catalog(self) -> BenchmarkCatalog {
        let catalog = match self {
            Suite::Subenchmark => subench::catalog(),
            Suite::Fibenchmark => fibench::catalog(),
            Suite::Tabenchmark => tabench::catalog(),
        };
        catalog.expect("built-in catalog is valid").with_suite(self)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CatalogError::UnknownBenchmark(s.to_owned()))
    }
}

/// Loads one of the built-in catalogs by name.
pub fn load_catalog(name: &str) -> Result<BenchmarkCatalog, CatalogError> {
    Ok(name.parse::<Suite>()?.catalog())
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::value::SqlValue;

    #[test]
    fn unknown_benchmark_names_choices() {
        let err = load_catalog("tpcc").unwrap_err();
        assert_eq!(err, CatalogError::UnknownBenchmark("tpcc".into()));
        assert!(err.to_string().contains("subenchmark, fibenchmark, tabenchmark"));
    }

    #[test]
    fn subenchmark_shape() {
        let c = load_catalog("subenchmark").unwrap();
        assert_eq!(c.tables().len(), 9);
        assert_eq!(c.column_count(), 92);
        assert_eq!(c.index_count(), 3);
        assert_eq!((c.online().len(), c.analytical().len(), c.hybrid().len()), (5, 9, 5));
    }

    #[test]
    fn fibenchmark_shape() {
        let c = load_catalog("fibenchmark").unwrap();
        assert_eq!((c.tables().len(), c.column_count(), c.index_count()), (3, 6, 4));
        assert_eq!((c.online().len(), c.analytical().len(), c.hybrid().len()), (6, 4, 6));
    }

    #[test]
    fn tabenchmark_shape() {
        let c = load_catalog("tabenchmark").unwrap();
        assert_eq!((c.tables().len(), c.column_count(), c.index_count()), (4, 51, 5));
        assert_eq!((c.online().len(), c.analytical().len(), c.hybrid().len()), (7, 5, 6));
    }

    #[test]
    fn fibenchmark_tables_and_online_names() {
        let c = load_catalog("fibenchmark").unwrap();
        let tables: Vec<_> = c.tables().iter().map(|t| t.name.as_str()).collect();
        assert_eq!(tables, ["ACCOUNT", "SAVING", "CHECKING"]);
        let names: Vec<_> = c.online().iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, [
            "Amalgamate",
            "Balance",
            "DepositChecking",
            "SendPayment",
            "TransactSavings",
            "WriteCheck"
        ]);
    }

    #[test]
    fn tabenchmark_online_names_include_update_subscriber_data() {
        let c = load_catalog("tabenchmark").unwrap();
        let names: BTreeSet<_> = c.online().iter().map(|t| t.name.as_str()).collect();
        for n in [
            "DeleteCallForwarding",
            "GetAccessData",
            "GetNewDestination",
            "GetSubscriberData",
            "InsertCallForwarding",
            "UpdateLocation",
            "UpdateSubscriberData",
        ] {
            assert!(names.contains(n), "{n}");
        }
    }

    #[test]
    fn no_fk_ddl_has_no_foreign_keys() {
        for suite in Suite::ALL {
            let ddl = suite.catalog().emit_ddl(false).unwrap();
            assert!(!ddl.contains("FOREIGN KEY"), "{suite}");
            let with = suite.catalog().emit_ddl(true).unwrap();
            assert!(with.contains("FOREIGN KEY"), "{suite}");
        }
    }

    #[test]
    fn subscriber_has_composite_key_in_both_variants() {
        let c = load_catalog("tabenchmark").unwrap();
        for fk in [false, true] {
            let ddl = c.emit_ddl(fk).unwrap();
            let start = ddl.find("CREATE TABLE SUBSCRIBER").unwrap();
            let body = &ddl[start..start + ddl[start..].find(");").unwrap()];
            assert!(body.contains("PRIMARY KEY (s_id, sf_type)"), "{body}");
        }
    }

    #[test]
    fn fibenchmark_fk_order() {
        let ddl = load_catalog("fibenchmark").unwrap().emit_ddl(true).unwrap();
        let pos = |t: &str| ddl.find(&format!("CREATE TABLE {t} ")).unwrap();
        assert!(pos("ACCOUNT") < pos("SAVING"));
        assert!(pos("ACCOUNT") < pos("CHECKING"));
        assert_eq!(ddl.matches("REFERENCES ACCOUNT (custid)").count(), 2);
    }

    #[test]
    fn ddl_is_deterministic() {
        for suite in Suite::ALL {
            for fk in [false, true] {
                assert_eq!(suite.catalog().emit_ddl(fk), suite.catalog().emit_ddl(fk));
            }
        }
    }

    #[test]
    fn fk_cycle_is_unorderable() {
        let a = TableDef::new("A").col("id", SqlType::Integer).pk(&["id"]).fk(&["id"], "B", &["id"]);
        let b = TableDef::new("B").col("id", SqlType::Integer).pk(&["id"]).fk(&["id"], "A", &["id"]);
        let c = BenchmarkCatalog::new("cyclic", vec![a, b], vec![], vec![], vec![]).unwrap();
        assert!(matches!(c.emit_ddl(true), Err(CatalogError::UnorderableSchema(_))));
        assert!(c.emit_ddl(false).is_ok());
    }

    #[test]
    fn built_ins_are_consistent() {
        for suite in Suite::ALL {
            let report = suite.catalog().check_semantic_consistency();
            assert!(report.passed(), "{report}");
            assert!(report.violations.is_empty());
        }
    }

    #[test]
    fn stitched_fixture_fails_on_tpch_only_tables() {
        let report = stitched_fixture().check_semantic_consistency();
        assert_eq!(report.verdict, Verdict::Fail);
        let expected: BTreeSet<String> =
            ["NATION", "REGION", "SUPPLIER"].iter().map(|s| s.to_string()).collect();
        assert_eq!(report.violations, expected);
    }

    #[test]
    fn no_analytical_templates_passes_vacuously() {
        let c = load_catalog("fibenchmark").unwrap();
        let bare = BenchmarkCatalog::new(
            "bare",
            c.tables().to_vec(),
            c.online().to_vec(),
            vec![],
            vec![],
        )
        .unwrap();
        let report = bare.check_semantic_consistency();
        assert!(report.passed());
        assert!(report.findings.is_empty());
    }

    #[test]
    fn default_mix_read_only_fractions() {
        let cases = [
            (Suite::Subenchmark, WorkloadClass::Online, Ratio::new(8, 100)),
            (Suite::Fibenchmark, WorkloadClass::Online, Ratio::new(15, 100)),
            (Suite::Tabenchmark, WorkloadClass::Online, Ratio::new(80, 100)),
            (Suite::Subenchmark, WorkloadClass::Hybrid, Ratio::new(60, 100)),
            (Suite::Fibenchmark, WorkloadClass::Hybrid, Ratio::new(20, 100)),
            (Suite::Tabenchmark, WorkloadClass::Hybrid, Ratio::new(40, 100)),
        ];
        for (suite, class, expected) in cases {
            let mix = suite.catalog().default_mix(class);
            assert_eq!(mix.read_only_fraction(), expected, "{suite} {class}");
            let sum: f64 = mix.normalized().iter().map(|(_, p)| p).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subenchmark_online_weights_are_the_standard_mix() {
        let mix = load_catalog("subenchmark").unwrap().default_mix(WorkloadClass::Online);
        let p = |n| mix.probability(n).unwrap();
        assert_eq!(p("NewOrder"), Ratio::new(45, 100));
        assert_eq!(p("Payment"), Ratio::new(43, 100));
        assert_eq!(p("OrderStatus") + p("StockLevel"), Ratio::new(8, 100));
    }

    #[test]
    fn override_to_single_template() {
        let mix = load_catalog("subenchmark").unwrap().default_mix(WorkloadClass::Online);
        let overrides = BTreeMap::from([("NewOrder".to_string(), 100)]);
        let o = mix.with_overrides(&overrides).unwrap();
        assert_eq!(o.read_only_fraction(), Ratio::from_integer(0));
        assert_eq!(o.probability("NewOrder"), Some(Ratio::from_integer(1)));
        let zero = BTreeMap::from([("NewOrder".to_string(), 0)]);
        assert!(mix.with_overrides(&zero).is_err());
    }

    #[test]
    fn new_order_x1_realtime_query_is_min_price() {
        let c = load_catalog("subenchmark").unwrap();
        let TemplateRef::Hybrid(x1) = c.template("X1").unwrap() else { panic!("X1 is hybrid") };
        assert_eq!(x1.base.name, "NewOrder");
        let b = instantiate(TemplateRef::Hybrid(x1), &mut ChaCha8Rng::seed_from_u64(42), 50);
        let rt = &b.statements[b.realtime_index.unwrap()];
        assert!(rt.sql.contains("MIN(i_price)") && rt.sql.contains("FROM ITEM"), "{}", rt.sql);
        assert!(!rt.writes);
        let w = b.statements[0].params[0].as_i64().unwrap();
        assert!((1..=50).contains(&w));
    }

    #[test]
    fn balance_is_single_read_only_statement() {
        let c = load_catalog("fibenchmark").unwrap();
        let t = c.template("Balance").unwrap();
        for seed in 0..50 {
            let b = t.instantiate(&mut ChaCha8Rng::seed_from_u64(seed), 1);
            assert_eq!(b.statements.len(), 1);
            assert!(b.read_only);
            let id = b.statements[0].params[0].as_i64().unwrap();
            assert!((1..=cardinality::ACCOUNTS_PER_SCALE as i64).contains(&id));
        }
    }

    #[test]
    fn instantiation_is_deterministic() {
        for suite in Suite::ALL {
            let c = suite.catalog();
            for class in WorkloadClass::ALL {
                for t in c.templates(class) {
                    let a = t.instantiate(&mut ChaCha8Rng::seed_from_u64(7), 3);
                    let b = t.instantiate(&mut ChaCha8Rng::seed_from_u64(7), 3);
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn realtime_queries_never_write() {
        for suite in Suite::ALL {
            for h in suite.catalog().hybrid() {
                assert!(h.realtime_query.tables_written.is_empty(), "{}", h.name);
                assert_eq!(h.read_only, h.base.read_only);
            }
        }
    }

    #[test]
    fn scaled_ids_respect_population() {
        let c = load_catalog("subenchmark").unwrap();
        let t = c.template("Payment").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let b = t.instantiate(&mut rng, 4);
            let SqlValue::Int(w) = b.statements[0].params[1] else { panic!() };
            assert!((1..=4).contains(&w));
        }
    }
}
