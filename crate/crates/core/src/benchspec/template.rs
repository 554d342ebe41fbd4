use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Serialize, Serializer};

use super::CatalogError;
use crate::value::SqlValue;

/// The three request classes a run can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadClass {
    #[serde(rename = "oltp", alias = "online")]
    Online,
    #[serde(rename = "olap", alias = "analytical")]
    Analytical,
    #[serde(rename = "olxp", alias = "hybrid")]
    Hybrid,
}

impl WorkloadClass {
    pub const ALL: [WorkloadClass; 3] =
        [WorkloadClass::Online, WorkloadClass::Analytical, WorkloadClass::Hybrid];

    /// Short label used in reports: `oltp`, `olap` or `olxp`.
    pub fn label(self) -> &'static str {
        match self {
            WorkloadClass::Online => "oltp",
            WorkloadClass::Analytical => "olap",
            WorkloadClass::Hybrid => "olxp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oltp" | "online" => Some(WorkloadClass::Online),
            "olap" | "analytical" => Some(WorkloadClass::Analytical),
            "olxp" | "hybrid" => Some(WorkloadClass::Hybrid),
            _ => None,
        }
    }
}

impl fmt::Display for WorkloadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// String generators for text parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StringPattern {
    /// Random alphanumeric string with length in `[min, max]`.
    Alnum { min: usize, max: usize },
    /// Character mask: `#` digit, `?` uppercase letter, `*` alphanumeric,
    /// anything else is copied verbatim (so `%##%` is a LIKE pattern).
    Mask(String),
    /// A scaled id rendered as a zero-padded decimal, e.g. TATP's `sub_nbr`.
    PaddedId { per_scale: u64, width: usize },
}

/// How one parameter slot gets its value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGen {
    UniformInt { lo: i64, hi: i64 },
    Zipf { n: u64, exponent: f64 },
    /// Uniform id in `[1, per_scale * scale]`.
    ScaledId { per_scale: u64 },
    Pattern(StringPattern),
    Constant(SqlValue),
    /// Reuses a transaction-scoped variable so several statements agree on
    /// the same key (e.g. one warehouse id across a whole NewOrder).
    Var(String),
}

impl ParamGen {
    pub fn uniform(lo: i64, hi: i64) -> Self {
        ParamGen::UniformInt { lo, hi }
    }

    pub fn scaled(per_scale: u64) -> Self {
        ParamGen::ScaledId { per_scale }
    }

    pub fn var(name: &str) -> Self {
        ParamGen::Var(name.to_owned())
    }

    pub fn mask(mask: &str) -> Self {
        ParamGen::Pattern(StringPattern::Mask(mask.to_owned()))
    }

    pub fn alnum(min: usize, max: usize) -> Self {
        ParamGen::Pattern(StringPattern::Alnum { min, max })
    }

    pub fn constant(v: impl Into<SqlValue>) -> Self {
        ParamGen::Constant(v.into())
    }

    fn generate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scale: u32,
        vars: &[(String, SqlValue)],
    ) -> SqlValue {
        match self {
            ParamGen::UniformInt { lo, hi } => SqlValue::Int(rng.random_range(*lo..=*hi)),
            ParamGen::Zipf { n, exponent } => {
                let zipf = Zipf::new(*n as f64, *exponent).expect("zipf parameters validated");
                SqlValue::Int(zipf.sample(rng) as i64)
            }
            ParamGen::ScaledId { per_scale } => {
                let hi = (*per_scale * u64::from(scale.max(1))) as i64;
                SqlValue::Int(rng.random_range(1..=hi))
            }
            ParamGen::Pattern(p) => SqlValue::Text(p.generate(rng, scale)),
            ParamGen::Constant(v) => v.clone(),
            ParamGen::Var(name) => vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .expect("variable references validated at catalog construction"),
        }
    }

    fn validate(&self, known_vars: &[&str]) -> Result<(), String> {
        match self {
            ParamGen::UniformInt { lo, hi } if lo > hi => Err(format!("empty range {lo}..={hi}")),
            ParamGen::Zipf { n, exponent } if *n == 0 || *exponent <= 0.0 => {
                Err(format!("invalid zipf(n={n}, s={exponent})"))
            }
            ParamGen::ScaledId { per_scale: 0 } => Err("scaled id with zero population".into()),
            ParamGen::Pattern(StringPattern::Alnum { min, max }) if min > max => {
                Err(format!("empty length range {min}..={max}"))
            }
            ParamGen::Pattern(StringPattern::PaddedId { per_scale: 0, .. }) => {
                Err("padded id with zero population".into())
            }
            ParamGen::Var(name) if !known_vars.contains(&name.as_str()) => {
                Err(format!("unknown variable `{name}`"))
            }
            _ => Ok(()),
        }
    }
}

const DIGITS: &[u8] = b"0123456789";
const UPPER: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const ALNUM: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

impl StringPattern {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R, scale: u32) -> String {
        match self {
            StringPattern::Alnum { min, max } => random_alnum(rng, *min, *max),
            StringPattern::Mask(mask) => mask
                .chars()
                .map(|c| match c {
                    '#' => pick(rng, DIGITS),
                    '?' => pick(rng, UPPER),
                    '*' => pick(rng, ALNUM),
                    other => other,
                })
                .collect(),
            StringPattern::PaddedId { per_scale, width } => {
                let hi = *per_scale * u64::from(scale.max(1));
                format!("{:0width$}", rng.random_range(1..=hi), width = *width)
            }
        }
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, set: &[u8]) -> char {
    set[rng.random_range(0..set.len())] as char
}

/// Random alphanumeric string with a length drawn uniformly from `[min, max]`.
pub fn random_alnum<R: Rng + ?Sized>(rng: &mut R, min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| pick(rng, ALNUM)).collect()
}

fn serialize_arc_str<S: Serializer>(v: &Arc<str>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v)
}

/// One parameterized SQL statement with `?` positional slots.
#[derive(Debug, Clone, Serialize)]
pub struct StatementTemplate {
    #[serde(serialize_with = "serialize_arc_str")]
    pub sql: Arc<str>,
    pub tables_read: BTreeSet<String>,
    pub tables_written: BTreeSet<String>,
    /// Generator for slot `i` lives at index `i`.
    pub params: Vec<ParamGen>,
}

impl StatementTemplate {
    pub fn read(sql: &str, tables: &[&str], params: Vec<ParamGen>) -> Self {
        StatementTemplate {
            sql: Arc::from(sql),
            tables_read: tables.iter().map(|t| t.to_string()).collect(),
            tables_written: BTreeSet::new(),
            params,
        }
    }

    pub fn write(sql: &str, read: &[&str], written: &[&str], params: Vec<ParamGen>) -> Self {
        StatementTemplate {
            sql: Arc::from(sql),
            tables_read: read.iter().map(|t| t.to_string()).collect(),
            tables_written: written.iter().map(|t| t.to_string()).collect(),
            params,
        }
    }

    pub fn is_read_only(&self) -> bool {
        self.tables_written.is_empty()
    }

    pub fn slot_count(&self) -> usize {
        self.sql.matches('?').count()
    }

    pub fn tables(&self) -> impl Iterator<Item = &String> {
        self.tables_read.iter().chain(self.tables_written.iter())
    }

    fn bind<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scale: u32,
        vars: &[(String, SqlValue)],
    ) -> BoundStatement {
        BoundStatement {
            sql: Arc::clone(&self.sql),
            params: self.params.iter().map(|p| p.generate(rng, scale, vars)).collect(),
            writes: !self.is_read_only(),
        }
    }

    pub(crate) fn validate(&self, owner: &str, vars: &[&str]) -> Result<(), CatalogError> {
        let invalid = |msg: String| CatalogError::InvalidTemplate { template: owner.to_owned(), msg };
        if self.slot_count() != self.params.len() {
            return Err(invalid(format!(
                "statement has {} slots but {} parameter generators: {}",
                self.slot_count(),
                self.params.len(),
                self.sql
            )));
        }
        if self.tables_read.is_empty() && self.tables_written.is_empty() {
            return Err(invalid(format!("statement touches no table: {}", self.sql)));
        }
        for p in &self.params {
            p.validate(vars).map_err(invalid)?;
        }
        Ok(())
    }
}

/// Online or analytical template class; hybrids have their own type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateClass {
    Online,
    Analytical,
}

impl From<TemplateClass> for WorkloadClass {
    fn from(c: TemplateClass) -> Self {
        match c {
            TemplateClass::Online => WorkloadClass::Online,
            TemplateClass::Analytical => WorkloadClass::Analytical,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransactionTemplate {
    pub name: String,
    pub description: String,
    pub class: TemplateClass,
    pub read_only: bool,
    pub weight: u32,
    /// Transaction-scoped variables, evaluated in order before any slot.
    pub vars: Vec<(String, ParamGen)>,
    pub statements: Vec<StatementTemplate>,
}

impl TransactionTemplate {
    pub fn new(name: &str, class: TemplateClass, weight: u32) -> Self {
        TransactionTemplate {
            name: name.to_owned(),
            description: String::new(),
            class,
            read_only: true,
            weight,
            vars: Vec::new(),
            statements: Vec::new(),
        }
    }

    pub fn describe(mut self, text: &str) -> Self {
        self.description = text.to_owned();
        self
    }

    pub fn var(mut self, name: &str, generator: ParamGen) -> Self {
        self.vars.push((name.to_owned(), generator));
        self
    }

    /// Appends a statement; `read_only` is kept in sync with the statements.
    pub fn stmt(mut self, s: StatementTemplate) -> Self {
        self.read_only &= s.is_read_only();
        self.statements.push(s);
        self
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.vars.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn bind_vars<R: Rng + ?Sized>(&self, rng: &mut R, scale: u32) -> Vec<(String, SqlValue)> {
        let mut bound: Vec<(String, SqlValue)> = Vec::with_capacity(self.vars.len());
        for (name, generator) in &self.vars {
            let v = generator.generate(rng, scale, &bound);
            bound.push((name.clone(), v));
        }
        bound
    }

    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R, scale: u32) -> BoundTransaction {
        let vars = self.bind_vars(rng, scale);
        BoundTransaction {
            template: self.name.clone(),
            class: self.class.into(),
            read_only: self.read_only,
            statements: self.statements.iter().map(|s| s.bind(rng, scale, &vars)).collect(),
            realtime_index: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |msg: &str| CatalogError::InvalidTemplate {
            template: self.name.clone(),
            msg: msg.to_owned(),
        };
        if self.statements.is_empty() {
            return Err(invalid("template has no statements"));
        }
        let all_reads = self.statements.iter().all(StatementTemplate::is_read_only);
        if self.read_only != all_reads {
            return Err(invalid("read_only flag disagrees with the statements' write sets"));
        }
        let mut known: Vec<&str> = Vec::new();
        for (name, generator) in &self.vars {
            generator.validate(&known).map_err(|m| invalid(&m))?;
            if known.contains(&name.as_str()) {
                return Err(invalid(&format!("duplicate variable `{name}`")));
            }
            known.push(name);
        }
        for s in &self.statements {
            s.validate(&self.name, &known)?;
        }
        Ok(())
    }
}

/// An online transaction with a real-time query spliced in at
/// `insertion_index`, executed inside the same transaction.
#[derive(Debug, Clone, Serialize)]
pub struct HybridTemplate {
    pub name: String,
    pub description: String,
    pub base: TransactionTemplate,
    pub realtime_query: StatementTemplate,
    pub insertion_index: usize,
    pub read_only: bool,
    pub weight: u32,
}

impl HybridTemplate {
    pub fn new(
        name: &str,
        base: TransactionTemplate,
        realtime_query: StatementTemplate,
        insertion_index: usize,
        weight: u32,
    ) -> Self {
        HybridTemplate {
            name: name.to_owned(),
            description: String::new(),
            read_only: base.read_only,
            base,
            realtime_query,
            insertion_index,
            weight,
        }
    }

    pub fn describe(mut self, text: &str) -> Self {
        self.description = text.to_owned();
        self
    }

    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R, scale: u32) -> BoundTransaction {
        let vars = self.base.bind_vars(rng, scale);
        let mut statements = Vec::with_capacity(self.base.statements.len() + 1);
        for (i, s) in self.base.statements.iter().enumerate() {
            if i == self.insertion_index {
                statements.push(self.realtime_query.bind(rng, scale, &vars));
            }
            statements.push(s.bind(rng, scale, &vars));
        }
        if self.insertion_index == self.base.statements.len() {
            statements.push(self.realtime_query.bind(rng, scale, &vars));
        }
        BoundTransaction {
            template: self.name.clone(),
            class: WorkloadClass::Hybrid,
            read_only: self.read_only,
            statements,
            realtime_index: Some(self.insertion_index),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |msg: &str| CatalogError::InvalidTemplate {
            template: self.name.clone(),
            msg: msg.to_owned(),
        };
        self.base.validate()?;
        if self.base.class != TemplateClass::Online {
            return Err(invalid("hybrid base must be an online transaction"));
        }
        if self.insertion_index > self.base.statements.len() {
            return Err(invalid("insertion index past the end of the base transaction"));
        }
        if !self.realtime_query.is_read_only() {
            return Err(invalid("real-time query must not write"));
        }
        if self.read_only != self.base.read_only {
            return Err(invalid("read_only flag must match the base transaction"));
        }
        self.realtime_query.validate(&self.name, &self.base.var_names())
    }
}

/// A borrowed view over either kind of template.
#[derive(Debug, Clone, Copy)]
pub enum TemplateRef<'a> {
    Transaction(&'a TransactionTemplate),
    Hybrid(&'a HybridTemplate),
}

impl<'a> TemplateRef<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            TemplateRef::Transaction(t) => &t.name,
            TemplateRef::Hybrid(h) => &h.name,
        }
    }

    pub fn weight(&self) -> u32 {
        match self {
            TemplateRef::Transaction(t) => t.weight,
            TemplateRef::Hybrid(h) => h.weight,
        }
    }

    pub fn read_only(&self) -> bool {
        match self {
            TemplateRef::Transaction(t) => t.read_only,
            TemplateRef::Hybrid(h) => h.read_only,
        }
    }

    pub fn class(&self) -> WorkloadClass {
        match self {
            TemplateRef::Transaction(t) => t.class.into(),
            TemplateRef::Hybrid(_) => WorkloadClass::Hybrid,
        }
    }

    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R, scale: u32) -> BoundTransaction {
        match self {
            TemplateRef::Transaction(t) => t.instantiate(rng, scale),
            TemplateRef::Hybrid(h) => h.instantiate(rng, scale),
        }
    }
}

/// Binds every slot of `template`. Identical `(template, rng state, scale)`
/// yields identical instances.
pub fn instantiate<R: Rng + ?Sized>(
    template: TemplateRef<'_>,
    rng: &mut R,
    scale: u32,
) -> BoundTransaction {
    template.instantiate(rng, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStatement {
    #[serde(serialize_with = "serialize_arc_str")]
    pub sql: Arc<str>,
    pub params: Vec<SqlValue>,
    pub writes: bool,
}

/// A fully parameterized transaction ready for the driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTransaction {
    pub template: String,
    pub class: WorkloadClass,
    pub read_only: bool,
    pub statements: Vec<BoundStatement>,
    /// Position of the real-time query for hybrid instances.
    pub realtime_index: Option<usize>,
}

impl BoundTransaction {
    /// Appends a canonical encoding of this instance to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.template.as_bytes());
        out.push(0);
        for s in &self.statements {
            out.extend_from_slice(s.sql.as_bytes());
            out.push(0);
            for p in &s.params {
                p.encode_into(out);
            }
        }
    }
}
