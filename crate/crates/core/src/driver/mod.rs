//! Backend abstraction: connection pooling, transaction demarcation and
//! statement execution, with an embedded SQLite backend for desk-scale runs.
//!
//! Descriptors:
//!
//! * `embedded://path/to/file.db?journal=wal&sync=normal&busy_timeout_ms=10000`;
//!   an empty path (`embedded://`) means a private temporary database.
//! * `kind://host:port/database?user=&pass=` with `kind` one of `mysql`,
//!   `tidb`, `memsql` (alias `singlestore`) or `oceanbase`. Opening sessions
//!   needs the `mysql` cargo feature.

mod embedded;
mod external;
mod pool;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::benchspec::{BenchmarkCatalog, BoundTransaction, CatalogError, TableDef};
use crate::value::SqlValue;

pub use embedded::EmbeddedOptions;
pub use external::ExternalAddress;
pub use pool::{Pool, PoolStats, PooledSession};

/// Immediate retries granted to a transaction aborted by a conflict.
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid backend target: {0}")]
    InvalidTarget(String),
    #[error("malformed connection descriptor {0}")]
    Descriptor(String),
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error(
        "{backend} does not support {requested} isolation (supported: {})",
        supported.iter().map(|i| i.name()).collect::<Vec<_>>().join(", ")
    )]
    UnsupportedIsolation { backend: String, requested: Isolation, supported: Vec<Isolation> },
    #[error("{0} backends need the `mysql` cargo feature; rebuild with `--features mysql`")]
    DriverNotBuilt(String),
    #[error("{context}: {error}")]
    Sql { context: String, error: SqlError },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// A statement-level failure as reported by a session.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("{message}")]
pub struct SqlError {
    /// Conflicts and lock timeouts; the transaction may succeed if retried.
    pub retryable: bool,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Isolation {
    ReadCommitted,
    RepeatableRead,
    Snapshot,
}

impl Isolation {
    pub const ALL: [Isolation; 3] =
        [Isolation::ReadCommitted, Isolation::RepeatableRead, Isolation::Snapshot];

    pub fn name(self) -> &'static str {
        match self {
            Isolation::ReadCommitted => "read-committed",
            Isolation::RepeatableRead => "repeatable-read",
            Isolation::Snapshot => "snapshot",
        }
    }
}

impl fmt::Display for Isolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Isolation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Isolation::ALL.into_iter().find(|i| i.name() == norm).ok_or_else(|| {
            format!("unknown isolation `{s}` (valid: read-committed, repeatable-read, snapshot)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalKind {
    Mysql,
    Tidb,
    Memsql,
    Oceanbase,
}

impl ExternalKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mysql" => Some(ExternalKind::Mysql),
            "tidb" => Some(ExternalKind::Tidb),
            "memsql" | "singlestore" => Some(ExternalKind::Memsql),
            "oceanbase" => Some(ExternalKind::Oceanbase),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExternalKind::Mysql => "mysql",
            ExternalKind::Tidb => "tidb",
            ExternalKind::Memsql => "memsql",
            ExternalKind::Oceanbase => "oceanbase",
        }
    }

    pub fn default_port(self) -> u16 {
        match self {
            ExternalKind::Tidb => 4000,
            ExternalKind::Oceanbase => 2881,
            ExternalKind::Mysql | ExternalKind::Memsql => 3306,
        }
    }

    pub fn supported_isolation(self) -> &'static [Isolation] {
        match self {
            ExternalKind::Memsql => &[Isolation::ReadCommitted],
            ExternalKind::Mysql => &[Isolation::ReadCommitted, Isolation::RepeatableRead],
            ExternalKind::Tidb | ExternalKind::Oceanbase => &Isolation::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Embedded,
    ExternalSql(ExternalKind),
}

impl BackendKind {
    pub fn supported_isolation(self) -> &'static [Isolation] {
        match self {
            // SQLite transactions are serializable, which covers all three.
            BackendKind::Embedded => &Isolation::ALL,
            BackendKind::ExternalSql(k) => k.supported_isolation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendTarget {
    pub descriptor: String,
    pub pool_size: u32,
    pub isolation: Isolation,
}

impl BackendTarget {
    pub fn new(descriptor: &str, pool_size: u32, isolation: Isolation) -> Self {
        BackendTarget { descriptor: descriptor.to_owned(), pool_size, isolation }
    }

    pub fn kind(&self) -> Result<BackendKind, DriverError> {
        let scheme = self.descriptor.split_once("://").map(|(s, _)| s).ok_or_else(|| {
            DriverError::Descriptor(format!("`{}`: expected kind://...", self.descriptor))
        })?;
        if scheme.eq_ignore_ascii_case("embedded") {
            return Ok(BackendKind::Embedded);
        }
        ExternalKind::parse(scheme).map(BackendKind::ExternalSql).ok_or_else(|| {
            DriverError::Descriptor(format!(
                "`{}`: unknown kind `{scheme}` (valid: embedded, mysql, tidb, memsql, oceanbase)",
                self.descriptor
            ))
        })
    }

    pub fn validate(&self) -> Result<BackendKind, DriverError> {
        if self.pool_size == 0 {
            return Err(DriverError::InvalidTarget("pool_size must be at least 1".into()));
        }
        let kind = self.kind()?;
        if !kind.supported_isolation().contains(&self.isolation) {
            return Err(DriverError::UnsupportedIsolation {
                backend: match kind {
                    BackendKind::Embedded => "embedded".into(),
                    BackendKind::ExternalSql(k) => k.name().into(),
                },
                requested: self.isolation,
                supported: kind.supported_isolation().to_vec(),
            });
        }
        Ok(kind)
    }

    fn embedded_parts(&self) -> Result<(Option<PathBuf>, EmbeddedOptions), DriverError> {
        let rest = &self.descriptor["embedded://".len()..];
        let (path, query) = rest.split_once('?').unwrap_or((rest, ""));
        let path = (!path.is_empty()).then(|| PathBuf::from(path));
        Ok((path, EmbeddedOptions::parse(query)?))
    }
}

/// A fresh private embedded database: four sessions, repeatable read.
pub fn embedded_backend() -> BackendTarget {
    BackendTarget::new("embedded://", 4, Isolation::RepeatableRead)
}

/// One database session. Implementations are driven by one thread at a time.
pub trait Session: Send {
    fn begin(&mut self, read_only: bool) -> Result<(), SqlError>;
    /// Runs one statement; returns rows produced (queries) or affected (DML).
    fn execute(&mut self, sql: &str, params: &[SqlValue]) -> Result<u64, SqlError>;
    fn query(&mut self, sql: &str, params: &[SqlValue]) -> Result<Vec<Vec<SqlValue>>, SqlError>;
    /// Streams a parameterless query without buffering the result.
    fn for_each_row(&mut self, sql: &str, f: &mut dyn FnMut(&[SqlValue]))
        -> Result<u64, SqlError>;
    fn commit(&mut self) -> Result<(), SqlError>;
    fn rollback(&mut self) -> Result<(), SqlError>;
    fn execute_script(&mut self, script: &str) -> Result<(), SqlError>;
    fn insert_rows(
        &mut self,
        table: &str,
        columns: &[String],
        rows: &[Vec<SqlValue>],
    ) -> Result<(), SqlError>;
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeStatus {
    Committed,
    AbortedRetryable,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: OutcomeStatus,
    pub rows_touched: u64,
    /// From the first `BEGIN` to the final commit or abort, across retries.
    pub latency_us: u64,
    pub attempts: u32,
    /// Per-statement latencies of the final attempt.
    pub statement_latencies_us: Vec<u64>,
    pub failed_statement: Option<usize>,
    pub error: Option<String>,
}

/// Where to force an abort, for atomicity probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    AfterStatement(usize),
    AfterRealtimeQuery,
}

impl Fault {
    fn fires_after(self, tx: &BoundTransaction, index: usize) -> bool {
        match self {
            Fault::AfterStatement(k) => k == index,
            Fault::AfterRealtimeQuery => tx.realtime_index == Some(index),
        }
    }
}

struct AttemptError {
    error: SqlError,
    statement: Option<usize>,
    injected: bool,
}

fn micros(d: Duration) -> u64 {
    (d.as_micros() as u64).max(1)
}

/// A pooled connection to one backend; share it across threads by reference
/// or inside an `Arc`.
pub struct Backend {
    target: BackendTarget,
    kind: BackendKind,
    pool: Pool,
    max_retries: u32,
    embedded_path: Option<PathBuf>,
    _scratch: Option<tempfile::TempDir>,
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backend").field("target", &self.target).finish_non_exhaustive()
    }
}

/// Opens `pool_size` sessions at the requested isolation.
pub fn connect(target: &BackendTarget) -> Result<Backend, DriverError> {
    let kind = target.validate()?;
    match kind {
        BackendKind::Embedded => {
            let (path, opts) = target.embedded_parts()?;
            let (path, scratch) = match path {
                Some(p) => (p, None),
                None => {
                    let dir = tempfile::Builder::new()
                        .prefix("htapbench-")
                        .tempdir()
                        .map_err(|e| DriverError::Unreachable(e.to_string()))?;
                    (dir.path().join("embedded.db"), Some(dir))
                }
            };
            let mut sessions: Vec<Box<dyn Session>> = Vec::new();
            for _ in 0..target.pool_size {
                sessions.push(Box::new(embedded::open(&path, &opts)?));
            }
            Ok(Backend {
                target: target.clone(),
                kind,
                pool: Pool::new(sessions),
                max_retries: DEFAULT_MAX_RETRIES,
                embedded_path: Some(path),
                _scratch: scratch,
            })
        }
        BackendKind::ExternalSql(ext) => {
            let addr = ExternalAddress::parse(&target.descriptor)?;
            addr.probe(Duration::from_secs(3))?;
            connect_external(target, kind, &addr).map_err(|e| match e {
                DriverError::DriverNotBuilt(_) => DriverError::DriverNotBuilt(ext.name().into()),
                other => other,
            })
        }
    }
}

#[cfg(feature = "mysql")]
fn connect_external(
    target: &BackendTarget,
    kind: BackendKind,
    addr: &ExternalAddress,
) -> Result<Backend, DriverError> {
    let mut sessions: Vec<Box<dyn Session>> = Vec::new();
    for _ in 0..target.pool_size {
        sessions.push(Box::new(external::wire::open(addr, target.isolation)?));
    }
    Ok(Backend {
        target: target.clone(),
        kind,
        pool: Pool::new(sessions),
        max_retries: DEFAULT_MAX_RETRIES,
        embedded_path: None,
        _scratch: None,
    })
}

#[cfg(not(feature = "mysql"))]
fn connect_external(
    _target: &BackendTarget,
    _kind: BackendKind,
    addr: &ExternalAddress,
) -> Result<Backend, DriverError> {
    Err(DriverError::DriverNotBuilt(addr.kind.name().into()))
}

impl Backend {
    pub fn target(&self) -> &BackendTarget {
        &self.target
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn pool_size(&self) -> usize {
        self.pool.size()
    }

    pub fn pool_stats(&self) -> PoolStats {
        self.pool.stats()
    }

    /// Database file of an embedded backend.
    pub fn embedded_path(&self) -> Option<&Path> {
        self.embedded_path.as_deref()
    }

    pub fn with_max_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self
    }

    /// Borrows a session; it returns to the pool when dropped.
    pub fn session(&self) -> PooledSession<'_> {
        self.pool.acquire()
    }

    pub fn create_schema(&self, catalog: &BenchmarkCatalog, fk: bool) -> Result<(), DriverError> {
        let ddl = catalog.emit_ddl(fk)?;
        self.session().execute_script(&ddl).map_err(|error| DriverError::Sql {
            context: format!("creating {} schema", catalog.name()),
            error,
        })
    }

    /// Runs every statement of `tx` inside one transaction.
    pub fn execute_transaction(&self, tx: &BoundTransaction) -> ExecutionOutcome {
        self.execute_with(tx, None)
    }

    /// Like [`Backend::execute_transaction`], optionally forcing a rollback
    /// at `fault`. Injected aborts are not retried.
    pub fn execute_with(&self, tx: &BoundTransaction, fault: Option<Fault>) -> ExecutionOutcome {
        let mut session = self.pool.acquire();
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let mut lats = Vec::with_capacity(tx.statements.len());
            match attempt(&mut *session, tx, fault, &mut lats) {
                Ok(rows) => {
                    return ExecutionOutcome {
                        status: OutcomeStatus::Committed,
                        rows_touched: rows,
                        latency_us: micros(start.elapsed()),
                        attempts,
                        statement_latencies_us: lats,
                        failed_statement: None,
                        error: None,
                    }
                }
                Err(e) if e.error.retryable && !e.injected && attempts <= self.max_retries => {}
                Err(e) => {
                    let status = if e.error.retryable {
                        OutcomeStatus::AbortedRetryable
                    } else {
                        OutcomeStatus::Failed
                    };
                    return ExecutionOutcome {
                        status,
                        rows_touched: 0,
                        latency_us: micros(start.elapsed()),
                        attempts,
                        statement_latencies_us: lats,
                        failed_statement: e.statement,
                        error: Some(e.error.message),
                    };
                }
            }
        }
    }

    /// Per-table content digests, keyed by table name.
    pub fn checksums(
        &self,
        catalog: &BenchmarkCatalog,
    ) -> Result<BTreeMap<String, String>, DriverError> {
        let mut session = self.session();
        catalog
            .tables()
            .iter()
            .map(|t| {
                table_checksum(&mut *session, t)
                    .map(|c| (t.name.clone(), c))
                    .map_err(|error| DriverError::Sql {
                        context: format!("checksumming {}", t.name),
                        error,
                    })
            })
            .collect()
    }

    pub fn row_counts(
        &self,
        catalog: &BenchmarkCatalog,
    ) -> Result<BTreeMap<String, u64>, DriverError> {
        let mut session = self.session();
        let mut out = BTreeMap::new();
        for t in catalog.tables() {
            let rows = session
                .query(&format!("SELECT COUNT(*) FROM {}", t.name), &[])
                .map_err(|error| DriverError::Sql { context: format!("counting {}", t.name), error })?;
            let n = rows.first().and_then(|r| r.first()).and_then(SqlValue::as_i64).unwrap_or(0);
            out.insert(t.name.clone(), n as u64);
        }
        Ok(out)
    }
}

fn attempt(
    session: &mut dyn Session,
    tx: &BoundTransaction,
    fault: Option<Fault>,
    lats: &mut Vec<u64>,
) -> Result<u64, AttemptError> {
    session
        .begin(tx.read_only)
        .map_err(|error| AttemptError { error, statement: None, injected: false })?;
    let mut rows = 0;
    for (i, stmt) in tx.statements.iter().enumerate() {
        let t0 = Instant::now();
        match session.execute(&stmt.sql, &stmt.params) {
            Ok(n) => rows += n,
            Err(error) => {
                let _ = session.rollback();
                return Err(AttemptError { error, statement: Some(i), injected: false });
            }
        }
        lats.push(micros(t0.elapsed()));
        if fault.is_some_and(|f| f.fires_after(tx, i)) {
            let _ = session.rollback();
            return Err(AttemptError {
                error: SqlError { retryable: true, message: format!("injected abort after statement {i}") },
                statement: Some(i),
                injected: true,
            });
        }
    }
    session.commit().map_err(|error| {
        let _ = session.rollback();
        AttemptError { error, statement: None, injected: false }
    })?;
    Ok(rows)
}

/// SHA-256 over every row of `table` in primary-key order, each value
/// type-tagged.
pub fn table_checksum(session: &mut dyn Session, table: &TableDef) -> Result<String, SqlError> {
    let sql = format!(
        "SELECT {} FROM {} ORDER BY {}",
        table.column_names().collect::<Vec<_>>().join(", "),
        table.name,
        table.canonical_order().join(", ")
    );
    let mut hasher = Sha256::new();
    let mut buf = Vec::with_capacity(256);
    let rows = session.for_each_row(&sql, &mut |row| {
        buf.clear();
        for v in row {
            v.encode_into(&mut buf);
        }
        hasher.update(&buf);
    })?;
    hasher.update(rows.to_le_bytes());
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchspec::{load_catalog, BoundStatement};
    use std::sync::Arc;

    fn stmt(sql: &str, params: Vec<SqlValue>, writes: bool) -> BoundStatement {
        BoundStatement { sql: Arc::from(sql), params, writes }
    }

    fn tx(statements: Vec<BoundStatement>) -> BoundTransaction {
        BoundTransaction {
            template: "T".into(),
            class: crate::benchspec::WorkloadClass::Online,
            read_only: statements.iter().all(|s| !s.writes),
            statements,
            realtime_index: None,
        }
    }

    #[test]
    fn embedded_pool_of_four() {
        let b = connect(&BackendTarget::new("embedded://", 4, Isolation::ReadCommitted)).unwrap();
        assert_eq!(b.pool_size(), 4);
        let sessions: Vec<_> = (0..4).map(|_| b.session()).collect();
        assert_eq!(b.pool_stats().idle, 0);
        drop(sessions);
        assert_eq!(b.pool_stats().idle, 4);
    }

    #[test]
    fn pool_size_zero_rejected() {
        let err = connect(&BackendTarget::new("embedded://", 0, Isolation::Snapshot)).unwrap_err();
        assert!(matches!(err, DriverError::InvalidTarget(_)));
    }

    #[test]
    fn read_committed_only_backend_rejects_snapshot() {
        let t = BackendTarget::new("memsql://127.0.0.1:1/bench", 2, Isolation::Snapshot);
        let err = connect(&t).unwrap_err();
        match &err {
            DriverError::UnsupportedIsolation { supported, .. } => {
                assert_eq!(supported, &[Isolation::ReadCommitted]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("supported: read-committed"));
    }

    #[test]
    fn unreachable_external_backend() {
        let t = BackendTarget::new("tidb://127.0.0.1:1/bench", 1, Isolation::Snapshot);
        assert!(matches!(connect(&t), Err(DriverError::Unreachable(_))));
    }

    #[test]
    fn descriptor_errors() {
        let t = BackendTarget::new("oracle://h/db", 1, Isolation::Snapshot);
        assert!(matches!(connect(&t), Err(DriverError::Descriptor(_))));
        let t = BackendTarget::new("embedded://?journal=sideways", 1, Isolation::Snapshot);
        assert!(matches!(connect(&t), Err(DriverError::Descriptor(_))));
    }

    #[test]
    fn missing_table_reports_statement_index() {
        let b = connect(&embedded_backend()).unwrap();
        b.session().execute_script("CREATE TABLE A (id INTEGER PRIMARY KEY, v INTEGER)").unwrap();
        let t = tx(vec![
            stmt("INSERT INTO A (id, v) VALUES (?, ?)", vec![1.into(), 2.into()], true),
            stmt("SELECT * FROM NOPE", vec![], false),
        ]);
        let out = b.execute_transaction(&t);
        assert_eq!(out.status, OutcomeStatus::Failed);
        assert_eq!(out.failed_statement, Some(1));
        assert!(out.latency_us > 0);
        let n = b.session().query("SELECT COUNT(*) FROM A", &[]).unwrap();
        assert_eq!(n[0][0], SqlValue::Int(0));
    }

    #[test]
    fn commit_latency_covers_each_statement() {
        let b = connect(&embedded_backend()).unwrap();
        b.session().execute_script("CREATE TABLE A (id INTEGER PRIMARY KEY, v INTEGER)").unwrap();
        let t = tx(vec![
            stmt("INSERT INTO A (id, v) VALUES (1, 1)", vec![], true),
            stmt("SELECT v FROM A WHERE id = ?", vec![1.into()], false),
        ]);
        let out = b.execute_transaction(&t);
        assert_eq!(out.status, OutcomeStatus::Committed);
        assert_eq!(out.rows_touched, 2);
        assert_eq!(out.attempts, 1);
        assert!(out.latency_us >= *out.statement_latencies_us.iter().max().unwrap());
    }

    #[test]
    fn injected_fault_rolls_back() {
        let b = connect(&embedded_backend()).unwrap();
        b.session().execute_script("CREATE TABLE A (id INTEGER PRIMARY KEY, v INTEGER)").unwrap();
        let mut t = tx(vec![
            stmt("INSERT INTO A (id, v) VALUES (1, 1)", vec![], true),
            stmt("SELECT COUNT(*) FROM A", vec![], false),
            stmt("INSERT INTO A (id, v) VALUES (2, 2)", vec![], true),
        ]);
        t.realtime_index = Some(1);
        let out = b.execute_with(&t, Some(Fault::AfterRealtimeQuery));
        assert_eq!(out.status, OutcomeStatus::AbortedRetryable);
        assert_eq!(out.attempts, 1);
        assert_eq!(out.failed_statement, Some(1));
        let n = b.session().query("SELECT COUNT(*) FROM A", &[]).unwrap();
        assert_eq!(n[0][0], SqlValue::Int(0));
    }

    #[test]
    fn subenchmark_ddl_loads() {
        let b = connect(&embedded_backend()).unwrap();
        let c = load_catalog("subenchmark").unwrap();
        b.create_schema(&c, false).unwrap();
        let counts = b.row_counts(&c).unwrap();
        assert_eq!(counts.len(), 9);
        assert!(counts.values().all(|&n| n == 0));
        let sums = b.checksums(&c).unwrap();
        assert_eq!(sums.len(), 9);
    }

    #[test]
    fn isolation_names_round_trip() {
        for i in Isolation::ALL {
            assert_eq!(i.name().parse::<Isolation>(), Ok(i));
        }
        assert!("serializable".parse::<Isolation>().is_err());
    }
}
