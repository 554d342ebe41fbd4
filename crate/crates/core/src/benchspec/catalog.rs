use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::schema::{emit_tables_ddl, TableDef};
use super::template::{
    HybridTemplate, StatementTemplate, TemplateClass, TemplateRef, TransactionTemplate,
    WorkloadClass,
};
use super::{CatalogError, Suite};

/// One suite's schema plus its online, analytical and hybrid templates.
/// Immutable once constructed; share it behind an `Arc`.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkCatalog {
    name: String,
    #[serde(skip)]
    suite: Option<Suite>,
    tables: Vec<TableDef>,
    online: Vec<TransactionTemplate>,
    analytical: Vec<TransactionTemplate>,
    hybrid: Vec<HybridTemplate>,
}

impl BenchmarkCatalog {
    /// Builds and validates a catalog.
    pub fn new(
        name: &str,
        tables: Vec<TableDef>,
        online: Vec<TransactionTemplate>,
        analytical: Vec<TransactionTemplate>,
        hybrid: Vec<HybridTemplate>,
    ) -> Result<Self, CatalogError> {
        let catalog = BenchmarkCatalog {
            name: name.to_owned(),
            suite: None,
            tables,
            online,
            analytical,
            hybrid,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    pub(crate) fn with_suite(mut self, suite: Suite) -> Self {
        self.suite = Some(suite);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn suite(&self) -> Option<Suite> {
        self.suite
    }

    pub fn tables(&self) -> &[TableDef] {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn online(&self) -> &[TransactionTemplate] {
        &self.online
    }

    pub fn analytical(&self) -> &[TransactionTemplate] {
        &self.analytical
    }

    pub fn hybrid(&self) -> &[HybridTemplate] {
        &self.hybrid
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    /// Secondary indexes only; primary keys are not counted.
    pub fn index_count(&self) -> usize {
        self.tables.iter().map(|t| t.indexes.len()).sum()
    }

    pub fn templates(&self, class: WorkloadClass) -> Vec<TemplateRef<'_>> {
        match class {
            WorkloadClass::Online => self.online.iter().map(TemplateRef::Transaction).collect(),
            WorkloadClass::Analytical => {
                self.analytical.iter().map(TemplateRef::Transaction).collect()
            }
            WorkloadClass::Hybrid => self.hybrid.iter().map(TemplateRef::Hybrid).collect(),
        }
    }

    pub fn template(&self, name: &str) -> Option<TemplateRef<'_>> {
        WorkloadClass::ALL
            .iter()
            .flat_map(|&c| self.templates(c))
            .find(|t| t.name() == name)
    }

    /// DDL script for this catalog. With `fk_variant` set, foreign-key
    /// clauses are emitted and tables are ordered so targets come first.
    pub fn emit_ddl(&self, fk_variant: bool) -> Result<String, CatalogError> {
        emit_tables_ddl(&self.name, &self.tables, fk_variant)
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let mut table_names = BTreeSet::new();
        for t in &self.tables {
            t.validate()?;
            if !table_names.insert(t.name.as_str()) {
                return Err(CatalogError::InvalidTable {
                    table: t.name.clone(),
                    msg: "duplicate table".into(),
                });
            }
        }
        for t in &self.tables {
            for fk in &t.foreign_keys {
                let target = self
                    .table(&fk.ref_table)
                    .ok_or_else(|| CatalogError::UnknownTable(fk.ref_table.clone()))?;
                for c in &fk.ref_columns {
                    if target.column(c).is_none() {
                        return Err(CatalogError::InvalidTable {
                            table: t.name.clone(),
                            msg: format!("foreign key references unknown column {}.{c}", target.name),
                        });
                    }
                }
            }
        }

        let mut names = BTreeSet::new();
        let check_tables = |owner: &str, s: &StatementTemplate| -> Result<(), CatalogError> {
            for t in s.tables() {
                if !table_names.contains(t.as_str()) {
                    return Err(CatalogError::InvalidTemplate {
                        template: owner.to_owned(),
                        msg: format!("statement references unknown table `{t}`"),
                    });
                }
            }
            Ok(())
        };
        for (expected, list) in
            [(TemplateClass::Online, &self.online), (TemplateClass::Analytical, &self.analytical)]
        {
            for t in list {
                t.validate()?;
                if t.class != expected {
                    return Err(CatalogError::InvalidTemplate {
                        template: t.name.clone(),
                        msg: format!("listed as {expected:?} but declared {:?}", t.class),
                    });
                }
                for s in &t.statements {
                    check_tables(&t.name, s)?;
                }
                if !names.insert(t.name.as_str()) {
                    return Err(CatalogError::DuplicateTemplate(t.name.clone()));
                }
            }
        }
        for h in &self.hybrid {
            h.validate()?;
            for s in h.base.statements.iter().chain(std::iter::once(&h.realtime_query)) {
                check_tables(&h.name, s)?;
            }
            if !names.insert(h.name.as_str()) {
                return Err(CatalogError::DuplicateTemplate(h.name.clone()));
            }
        }
        Ok(())
    }

    /// Checks that every table read by an analytical or real-time statement
    /// belongs to the OLTP side of the schema.
    pub fn check_semantic_consistency(&self) -> ConsistencyReport {
        let mut oltp_tables = BTreeSet::new();
        let mut oltp_written = BTreeSet::new();
        let online_statements = self
            .online
            .iter()
            .chain(self.hybrid.iter().map(|h| &h.base))
            .flat_map(|t| t.statements.iter());
        for s in online_statements {
            oltp_tables.extend(s.tables().cloned());
            oltp_written.extend(s.tables_written.iter().cloned());
        }

        let mut findings = Vec::new();
        let mut check = |template: &str, class: WorkloadClass, index: usize, s: &StatementTemplate| {
            let never_touched: BTreeSet<String> =
                s.tables_read.difference(&oltp_tables).cloned().collect();
            let read_only_reference: BTreeSet<String> = s
                .tables_read
                .intersection(&oltp_tables)
                .filter(|t| !oltp_written.contains(*t))
                .cloned()
                .collect();
            if !never_touched.is_empty() || !read_only_reference.is_empty() {
                findings.push(StatementFinding {
                    template: template.to_owned(),
                    class,
                    statement_index: index,
                    never_touched,
                    read_only_reference,
                });
            }
        };
        for t in &self.analytical {
            for (i, s) in t.statements.iter().enumerate() {
                check(&t.name, WorkloadClass::Analytical, i, s);
            }
        }
        for h in &self.hybrid {
            check(&h.name, WorkloadClass::Hybrid, h.insertion_index, &h.realtime_query);
        }

        let violations: BTreeSet<String> =
            findings.iter().flat_map(|f| f.never_touched.iter().cloned()).collect();
        ConsistencyReport {
            catalog: self.name.clone(),
            verdict: if violations.is_empty() { Verdict::Pass } else { Verdict::Fail },
            violations,
            oltp_tables,
            oltp_written,
            findings,
        }
    }

    /// Normalized default mix for one class, taken from the template weights.
    pub fn default_mix(&self, class: WorkloadClass) -> Mix {
        Mix {
            class,
            entries: self
                .templates(class)
                .iter()
                .map(|t| MixEntry {
                    name: t.name().to_owned(),
                    weight: t.weight(),
                    read_only: t.read_only(),
                })
                .collect(),
        }
    }

    /// Structured listing of every template, for documentation.
    pub fn inventory(&self) -> Inventory {
        let entry = |t: TemplateRef<'_>| {
            let (description, statements, realtime) = match t {
                TemplateRef::Transaction(tx) => (
                    tx.description.clone(),
                    tx.statements.iter().map(|s| s.sql.to_string()).collect(),
                    None,
                ),
                TemplateRef::Hybrid(h) => (
                    h.description.clone(),
                    h.base.statements.iter().map(|s| s.sql.to_string()).collect(),
                    Some(RealtimeListing {
                        insertion_index: h.insertion_index,
                        base: h.base.name.clone(),
                        sql: h.realtime_query.sql.to_string(),
                    }),
                ),
            };
            TemplateListing {
                name: t.name().to_owned(),
                class: t.class(),
                read_only: t.read_only(),
                weight: t.weight(),
                description,
                statements,
                realtime,
            }
        };
        Inventory {
            benchmark: self.name.clone(),
            tables: self
                .tables
                .iter()
                .map(|t| TableListing {
                    name: t.name.clone(),
                    columns: t.columns.len(),
                    primary_key: t.primary_key.clone(),
                    indexes: t.indexes.iter().map(|i| i.columns.clone()).collect(),
                })
                .collect(),
            templates: WorkloadClass::ALL
                .iter()
                .flat_map(|&c| self.templates(c))
                .map(entry)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatementFinding {
    pub template: String,
    pub class: WorkloadClass,
    pub statement_index: usize,
    /// Tables no online statement reads or writes. Any entry fails the check.
    pub never_touched: BTreeSet<String>,
    /// Tables online statements read but never modify (e.g. ITEM). Reported
    /// for information; they do not fail the check.
    pub read_only_reference: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub catalog: String,
    pub verdict: Verdict,
    /// Union of `never_touched` over all findings.
    pub violations: BTreeSet<String>,
    pub oltp_tables: BTreeSet<String>,
    pub oltp_written: BTreeSet<String>,
    pub findings: Vec<StatementFinding>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.catalog, self.verdict)?;
        for finding in &self.findings {
            if !finding.never_touched.is_empty() {
                writeln!(
                    f,
                    "  {} ({}) statement {} reads tables outside the OLTP schema: {}",
                    finding.template,
                    finding.class,
                    finding.statement_index,
                    finding.never_touched.iter().cloned().collect::<Vec<_>>().join(", ")
                )?;
            }
        }
        if !self.violations.is_empty() {
            writeln!(
                f,
                "  never touched by OLTP: {}",
                self.violations.iter().cloned().collect::<Vec<_>>().join(", ")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixEntry {
    pub name: String,
    pub weight: u32,
    pub read_only: bool,
}

/// Integer template weights for one class. Probabilities are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mix {
    pub class: WorkloadClass,
    pub entries: Vec<MixEntry>,
}

impl Mix {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.weight)).sum()
    }

    pub fn probability(&self, name: &str) -> Option<Ratio<u64>> {
        let total = self.total();
        let e = self.entries.iter().find(|e| e.name == name)?;
        (total > 0).then(|| Ratio::new(u64::from(e.weight), total))
    }

    /// Weighted share of read-only templates; zero for an empty mix.
    pub fn read_only_fraction(&self) -> Ratio<u64> {
        let total = self.total();
        if total == 0 {
            return Ratio::from_integer(0);
        }
        let ro: u64 = self.entries.iter().filter(|e| e.read_only).map(|e| u64::from(e.weight)).sum();
        Ratio::new(ro, total)
    }

    /// `(name, probability)` pairs summing to one.
    pub fn normalized(&self) -> Vec<(String, f64)> {
        let total = self.total() as f64;
        self.entries.iter().map(|e| (e.name.clone(), f64::from(e.weight) / total)).collect()
    }

    /// Replaces this class's weights. Templates of this class not named in
    /// `overrides` drop to zero; names from other classes are ignored.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, u32>) -> Result<Mix, CatalogError> {
        let relevant: Vec<_> =
            overrides.keys().filter(|k| self.entries.iter().any(|e| &e.name == *k)).collect();
        if relevant.is_empty() {
            return Ok(self.clone());
        }
        let entries: Vec<MixEntry> = self
            .entries
            .iter()
            .map(|e| MixEntry {
                weight: overrides.get(&e.name).copied().unwrap_or(0),
                ..e.clone()
            })
            .collect();
        let mix = Mix { class: self.class, entries };
        if mix.total() == 0 {
            return Err(CatalogError::InvalidWeights(format!(
                "all {} weights are zero",
                self.class
            )));
        }
        Ok(mix)
    }

    pub fn sampler(&self) -> Result<MixSampler, CatalogError> {
        let index = WeightedIndex::new(self.entries.iter().map(|e| e.weight)).map_err(|e| {
            CatalogError::InvalidWeights(format!("{} mix cannot be sampled: {e}", self.class))
        })?;
        Ok(MixSampler { index })
    }
}

/// Draws entry positions from a [`Mix`].
#[derive(Debug, Clone)]
pub struct MixSampler {
    index: WeightedIndex<u32>,
}

impl MixSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Inventory {
    pub benchmark: String,
    pub tables: Vec<TableListing>,
    pub templates: Vec<TemplateListing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableListing {
    pub name: String,
    pub columns: usize,
    pub primary_key: Vec<String>,
    pub indexes: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TemplateListing {
    pub name: String,
    pub class: WorkloadClass,
    pub read_only: bool,
    pub weight: u32,
    pub description: String,
    pub statements: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realtime: Option<RealtimeListing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RealtimeListing {
    pub base: String,
    pub insertion_index: usize,
    pub sql: String,
}
