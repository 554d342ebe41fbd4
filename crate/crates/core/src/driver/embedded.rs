//! In-process reference backend on SQLite. Each pooled session is its own
//! connection to a shared database file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rusqlite::types::{Value, ValueRef};
use rusqlite::{params_from_iter, Connection, ErrorCode, OpenFlags};

use super::{DriverError, Session, SqlError};
use crate::value::SqlValue;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedOptions {
    /// SQLite journal mode; `wal` lets readers run beside a writer.
    pub journal: String,
    pub synchronous: String,
    pub busy_timeout_ms: u64,
}

impl Default for EmbeddedOptions {
    fn default() -> Self {
        EmbeddedOptions { journal: "wal".into(), synchronous: "normal".into(), busy_timeout_ms: 10_000 }
    }
}

impl EmbeddedOptions {
    pub fn parse(query: &str) -> Result<Self, DriverError> {
        let mut o = EmbeddedOptions::default();
        for (k, v) in url::form_urlencoded::parse(query.as_bytes()) {
            let bad = || DriverError::Descriptor(format!("bad value `{v}` for option `{k}`"));
            match k.as_ref() {
                "journal" => {
                    let v = v.to_ascii_lowercase();
                    if !["wal", "delete", "truncate", "memory"].contains(&v.as_str()) {
                        return Err(bad());
                    }
                    o.journal = v;
                }
                "sync" => {
                    let v = v.to_ascii_lowercase();
                    if !["off", "normal", "full"].contains(&v.as_str()) {
                        return Err(bad());
                    }
                    o.synchronous = v;
                }
                "busy_timeout_ms" => o.busy_timeout_ms = v.parse().map_err(|_| bad())?,
                other => {
                    return Err(DriverError::Descriptor(format!("unknown embedded option `{other}`")))
                }
            }
        }
        Ok(o)
    }
}

pub struct EmbeddedSession {
    conn: Connection,
    path: PathBuf,
}

pub fn open(path: &Path, opts: &EmbeddedOptions) -> Result<EmbeddedSession, DriverError> {
    let flags = OpenFlags::SQLITE_OPEN_READ_WRITE
        | OpenFlags::SQLITE_OPEN_CREATE
        | OpenFlags::SQLITE_OPEN_NO_MUTEX;
    let conn = Connection::open_with_flags(path, flags)
        .map_err(|e| DriverError::Unreachable(format!("{}: {e}", path.display())))?;
    let setup = || -> rusqlite::Result<()> {
        conn.busy_timeout(Duration::from_millis(opts.busy_timeout_ms))?;
        conn.pragma_update(None, "journal_mode", &opts.journal)?;
        conn.pragma_update(None, "synchronous", &opts.synchronous)?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.set_prepared_statement_cache_capacity(512);
        Ok(())
    };
    setup().map_err(|e| DriverError::Unreachable(format!("{}: {e}", path.display())))?;
    Ok(EmbeddedSession { conn, path: path.to_owned() })
}

fn classify(e: rusqlite::Error) -> SqlError {
    let retryable = matches!(
        e.sqlite_error_code(),
        Some(ErrorCode::DatabaseBusy | ErrorCode::DatabaseLocked)
    );
    SqlError { retryable, message: e.to_string() }
}

fn to_sql(v: &SqlValue) -> Value {
    match v {
        SqlValue::Null => Value::Null,
        SqlValue::Int(i) => Value::Integer(*i),
        SqlValue::Float(f) => Value::Real(*f),
        SqlValue::Text(s) => Value::Text(s.clone()),
    }
}

fn from_sql(v: ValueRef<'_>) -> SqlValue {
    match v {
        ValueRef::Null => SqlValue::Null,
        ValueRef::Integer(i) => SqlValue::Int(i),
        ValueRef::Real(f) => SqlValue::Float(f),
        ValueRef::Text(t) => SqlValue::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => SqlValue::Text(hex::encode(b)),
    }
}

impl Session for EmbeddedSession {
    fn begin(&mut self, read_only: bool) -> Result<(), SqlError> {
        // Writers take the write lock up front; a deferred writer could
        // only fail later, after its snapshot went stale.
        let sql = if read_only { "BEGIN DEFERRED" } else { "BEGIN IMMEDIATE" };
        self.conn.execute_batch(sql).map_err(classify)
    }

    fn execute(&mut self, sql: &str, params: &[SqlValue]) -> Result<u64, SqlError> {
        let mut stmt = self.conn.prepare_cached(sql).map_err(classify)?;
        let bound = params_from_iter(params.iter().map(to_sql));
        if stmt.column_count() > 0 {
            let mut rows = stmt.query(bound).map_err(classify)?;
            let mut n = 0;
            while rows.next().map_err(classify)?.is_some() {
                n += 1;
            }
            Ok(n)
        } else {
            stmt.execute(bound).map(|n| n as u64).map_err(classify)
        }
    }

    fn query(&mut self, sql: &str, params: &[SqlValue]) -> Result<Vec<Vec<SqlValue>>, SqlError> {
        let mut stmt = self.conn.prepare_cached(sql).map_err(classify)?;
        let width = stmt.column_count();
        let mut rows = stmt.query(params_from_iter(params.iter().map(to_sql))).map_err(classify)?;
        let mut out = Vec::new();
        while let Some(row) = rows.next().map_err(classify)? {
            let mut vals = Vec::with_capacity(width);
            for i in 0..width {
                vals.push(from_sql(row.get_ref(i).map_err(classify)?));
            }
            out.push(vals);
        }
        Ok(out)
    }

    fn for_each_row(
        &mut self,
        sql: &str,
        f: &mut dyn FnMut(&[SqlValue]),
    ) -> Result<u64, SqlError> {
        let mut stmt = self.conn.prepare(sql).map_err(classify)?;
        let width = stmt.column_count();
        let mut rows = stmt.query([]).map_err(classify)?;
        let mut buf = Vec::with_capacity(width);
        let mut n = 0;
        while let Some(row) = rows.next().map_err(classify)? {
            buf.clear();
            for i in 0..width {
                buf.push(from_sql(row.get_ref(i).map_err(classify)?));
            }
            f(&buf);
            n += 1;
        }
        Ok(n)
    }

    fn commit(&mut self) -> Result<(), SqlError> {
        self.conn.execute_batch("COMMIT").map_err(classify)
    }

    fn rollback(&mut self) -> Result<(), SqlError> {
        if self.conn.is_autocommit() {
            return Ok(());
        }
        self.conn.execute_batch("ROLLBACK").map_err(classify)
    }

    fn execute_script(&mut self, script: &str) -> Result<(), SqlError> {
        self.conn.execute_batch(script).map_err(classify)
    }

    fn insert_rows(
        &mut self,
        table: &str,
        columns: &[String],
        rows: &[Vec<SqlValue>],
    ) -> Result<(), SqlError> {
        let sql = format!(
            "INSERT INTO {table} ({}) VALUES ({})",
            columns.join(", "),
            vec!["?"; columns.len()].join(", ")
        );
        let mut stmt = self.conn.prepare_cached(&sql).map_err(classify)?;
        for row in rows {
            stmt.execute(params_from_iter(row.iter().map(to_sql))).map_err(classify)?;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("embedded:{}", self.path.display())
    }
}
