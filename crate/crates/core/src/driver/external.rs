//! Networked backends speaking the MySQL wire protocol (MySQL, TiDB,
//! SingleStore/MemSQL, OceanBase).

use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{DriverError, ExternalKind, Isolation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalAddress {
    pub kind: ExternalKind,
    pub host: String,
    pub port: u16,
    pub database: String,
    pub user: Option<String>,
    pub pass: Option<String>,
}

impl ExternalAddress {
    /// Parses `kind://host:port/database?user=&pass=`.
    pub fn parse(descriptor: &str) -> Result<Self, DriverError> {
        let bad = |msg: &str| DriverError::Descriptor(format!("`{descriptor}`: {msg}"));
        let u = url::Url::parse(descriptor).map_err(|e| bad(&e.to_string()))?;
        let kind = ExternalKind::parse(u.scheme()).ok_or_else(|| bad("unknown backend kind"))?;
        let host = u.host_str().filter(|h| !h.is_empty()).ok_or_else(|| bad("missing host"))?;
        let database = u.path().trim_start_matches('/').to_owned();
        if database.is_empty() {
            return Err(bad("missing database name"));
        }
        let mut user = None;
        let mut pass = None;
        for (k, v) in u.query_pairs() {
            match k.as_ref() {
                "user" => user = Some(v.into_owned()),
                "pass" | "password" => pass = Some(v.into_owned()),
                other => return Err(bad(&format!("unknown option `{other}`"))),
            }
        }
        Ok(ExternalAddress {
            kind,
            host: host.to_owned(),
            port: u.port().unwrap_or(kind.default_port()),
            database,
            user,
            pass,
        })
    }

    pub fn probe(&self, timeout: Duration) -> Result<(), DriverError> {
        let target = format!("{}:{}", self.host, self.port);
        let unreachable = |e: String| DriverError::Unreachable(format!("{target}: {e}"));
        let addrs = target.to_socket_addrs().map_err(|e| unreachable(e.to_string()))?;
        let mut last = String::from("no address resolved");
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, timeout) {
                Ok(_) => return Ok(()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(unreachable(last))
    }
}

#[cfg_attr(not(feature = "mysql"), allow(dead_code))]
pub(super) fn isolation_statement(kind: ExternalKind, iso: Isolation) -> &'static str {
    match (kind, iso) {
        (_, Isolation::ReadCommitted) => "SET SESSION TRANSACTION ISOLATION LEVEL READ COMMITTED",
        // TiDB and OceanBase implement repeatable read as snapshot isolation.
        _ => "SET SESSION TRANSACTION ISOLATION LEVEL REPEATABLE READ",
    }
}

#[cfg(feature = "mysql")]
pub(super) mod wire {
    use mysql::prelude::Queryable;
    use mysql::{Conn, OptsBuilder, Params, Value};

    use super::super::{DriverError, Isolation, Session, SqlError};
    use super::{isolation_statement, ExternalAddress};
    use crate::value::SqlValue;

    pub struct ExternalSession {
        conn: Conn,
        label: String,
    }

    pub fn open(addr: &ExternalAddress, iso: Isolation) -> Result<ExternalSession, DriverError> {
        let opts = OptsBuilder::new()
            .ip_or_hostname(Some(addr.host.clone()))
            .tcp_port(addr.port)
            .db_name(Some(addr.database.clone()))
            .user(addr.user.clone())
            .pass(addr.pass.clone())
            .stmt_cache_size(Some(512));
        let mut conn = Conn::new(opts).map_err(|e| DriverError::Unreachable(e.to_string()))?;
        conn.query_drop(isolation_statement(addr.kind, iso))
            .map_err(|e| DriverError::Unreachable(e.to_string()))?;
        Ok(ExternalSession { conn, label: format!("{}://{}:{}", addr.kind.name(), addr.host, addr.port) })
    }

    /// Deadlock, lock wait timeout and the TiDB write-conflict family.
    const RETRYABLE: [u16; 5] = [1205, 1213, 8002, 8022, 9007];

    fn classify(e: mysql::Error) -> SqlError {
        let retryable = matches!(&e, mysql::Error::MySqlError(m) if RETRYABLE.contains(&m.code));
        SqlError { retryable, message: e.to_string() }
    }

    fn to_value(v: &SqlValue) -> Value {
        match v {
            SqlValue::Null => Value::NULL,
            SqlValue::Int(i) => Value::Int(*i),
            SqlValue::Float(f) => Value::Double(*f),
            SqlValue::Text(s) => Value::Bytes(s.clone().into_bytes()),
        }
    }

    fn from_value(v: Value) -> SqlValue {
        match v {
            Value::NULL => SqlValue::Null,
            Value::Int(i) => SqlValue::Int(i),
            Value::UInt(u) => SqlValue::Int(u as i64),
            Value::Float(f) => SqlValue::Float(f64::from(f)),
            Value::Double(f) => SqlValue::Float(f),
            Value::Bytes(b) => {
                let s = String::from_utf8_lossy(&b).into_owned();
                // Decimal columns arrive as text.
                match s.parse::<f64>() {
                    Ok(f) if s.contains('.') && !s.contains(' ') => SqlValue::Float(f),
                    _ => SqlValue::Text(s),
                }
            }
            other => SqlValue::Text(other.as_sql(true)),
        }
    }

    fn params(values: &[SqlValue]) -> Params {
        if values.is_empty() {
            Params::Empty
        } else {
            Params::Positional(values.iter().map(to_value).collect())
        }
    }

    impl Session for ExternalSession {
        fn begin(&mut self, read_only: bool) -> Result<(), SqlError> {
            let sql = if read_only { "START TRANSACTION READ ONLY" } else { "START TRANSACTION" };
            self.conn.query_drop(sql).map_err(classify)
        }

        fn execute(&mut self, sql: &str, values: &[SqlValue]) -> Result<u64, SqlError> {
            let mut result = self.conn.exec_iter(sql, params(values)).map_err(classify)?;
            let mut n = 0;
            let has_columns = result.columns().as_ref().len() > 0;
            if has_columns {
                for row in result.by_ref() {
                    row.map_err(classify)?;
                    n += 1;
                }
            } else {
                n = result.affected_rows();
            }
            drop(result);
            Ok(n)
        }

        fn query(&mut self, sql: &str, values: &[SqlValue]) -> Result<Vec<Vec<SqlValue>>, SqlError> {
            let rows: Vec<mysql::Row> = self.conn.exec(sql, params(values)).map_err(classify)?;
            Ok(rows.into_iter().map(|r| r.unwrap().into_iter().map(from_value).collect()).collect())
        }

        fn for_each_row(
            &mut self,
            sql: &str,
            f: &mut dyn FnMut(&[SqlValue]),
        ) -> Result<u64, SqlError> {
            let result = self.conn.query_iter(sql).map_err(classify)?;
            let mut n = 0;
            for row in result {
                let vals: Vec<SqlValue> =
                    row.map_err(classify)?.unwrap().into_iter().map(from_value).collect();
                f(&vals);
                n += 1;
            }
            Ok(n)
        }

        fn commit(&mut self) -> Result<(), SqlError> {
            self.conn.query_drop("COMMIT").map_err(classify)
        }

        fn rollback(&mut self) -> Result<(), SqlError> {
            self.conn.query_drop("ROLLBACK").map_err(classify)
        }

        fn execute_script(&mut self, script: &str) -> Result<(), SqlError> {
            for stmt in crate::benchspec::split_statements(script) {
                self.conn.query_drop(stmt).map_err(classify)?;
            }
            Ok(())
        }

        fn insert_rows(
            &mut self,
            table: &str,
            columns: &[String],
            rows: &[Vec<SqlValue>],
        ) -> Result<(), SqlError> {
            if rows.is_empty() {
                return Ok(());
            }
            let tuple = format!("({})", vec!["?"; columns.len()].join(", "));
            let sql = format!(
                "INSERT INTO {table} ({}) VALUES {}",
                columns.join(", "),
                vec![tuple.as_str(); rows.len()].join(", ")
            );
            let flat: Vec<SqlValue> = rows.iter().flatten().cloned().collect();
            self.conn.exec_drop(sql, params(&flat)).map_err(classify)
        }

        fn describe(&self) -> String {
            self.label.clone()
        }
    }
}
