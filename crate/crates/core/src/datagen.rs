//! Deterministic initial population of the built-in suites.
//!
//! Every table draws from its own ChaCha8 stream derived from the seed and
//! the table name, and rows are produced in primary-key order, so a given
//! `(suite, scale, seed)` always yields the same rows.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::benchspec::cardinality::*;
use crate::benchspec::{
    fk_topological_order, random_alnum, BenchmarkCatalog, CatalogError, ColumnDef, SqlType, Suite,
    TableDef,
};
use crate::driver::{Backend, SqlError};
use crate::value::SqlValue;

pub const DEFAULT_BATCH_SIZE: usize = 1000;

/// Fixed timestamp used for every generated date column.
pub const LOAD_TIMESTAMP: &str = "2024-01-01 00:00:00";

/// Orders per district that are still undelivered after the initial load.
const FIRST_NEW_ORDER: i64 = (ORDERS_PER_DISTRICT - NEW_ORDERS_PER_DISTRICT) as i64 + 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatagenError {
    #[error("catalog `{0}` is not a built-in suite; no population rules exist for it")]
    UnsupportedCatalog(String),
    #[error("scale must be at least 1")]
    InvalidScale,
    #[error("batch size must be at least 1")]
    InvalidBatchSize,
    #[error("table {0} is not empty; populate needs freshly created tables")]
    NotEmpty(String),
    #[error("loading {table} failed at batch offset {offset}: {error}")]
    Load { table: String, offset: u64, error: SqlError },
    #[error("inspecting {table}: {error}")]
    Inspect { table: String, error: SqlError },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Row counts of a suite at a scale, plus the seed the rows derive from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationPlan {
    pub suite: Suite,
    pub scale: u32,
    pub seed: u64,
    pub rows: BTreeMap<String, u64>,
}

/// Per-table row counts at `scale`.
pub fn population(
    catalog: &BenchmarkCatalog,
    scale: u32,
) -> Result<BTreeMap<String, u64>, DatagenError> {
    if scale == 0 {
        return Err(DatagenError::InvalidScale);
    }
    let suite =
        catalog.suite().ok_or_else(|| DatagenError::UnsupportedCatalog(catalog.name().into()))?;
    let s = u64::from(scale);
    let districts = s * DISTRICTS_PER_WAREHOUSE;
    let counts: Vec<(&str, u64)> = match suite {
        Suite::Subenchmark => vec![
            ("WAREHOUSE", s),
            ("DISTRICT", districts),
            ("CUSTOMER", districts * CUSTOMERS_PER_DISTRICT),
            ("HISTORY", districts * CUSTOMERS_PER_DISTRICT),
            ("ORDERS", districts * ORDERS_PER_DISTRICT),
            ("NEW_ORDER", districts * NEW_ORDERS_PER_DISTRICT),
            ("ORDER_LINE", districts * ORDERS_PER_DISTRICT * LINES_PER_ORDER),
            ("ITEM", ITEMS),
            ("STOCK", s * ITEMS),
        ],
        Suite::Fibenchmark => {
            let n = s * ACCOUNTS_PER_SCALE;
            vec![("ACCOUNT", n), ("SAVING", n), ("CHECKING", n)]
        }
        Suite::Tabenchmark => {
            let n = s * SUBSCRIBERS_PER_SCALE;
            vec![
                ("SUBSCRIBER", n),
                ("ACCESS_INFO", 2 * n),
                ("SPECIAL_FACILITY", 2 * n),
                ("CALL_FORWARDING", 2 * n),
            ]
        }
    };
    Ok(counts.into_iter().map(|(t, n)| (t.to_owned(), n)).collect())
}

pub fn plan(
    catalog: &BenchmarkCatalog,
    scale: u32,
    seed: u64,
) -> Result<PopulationPlan, DatagenError> {
    let rows = population(catalog, scale)?;
    let suite = catalog.suite().expect("population checked the suite");
    Ok(PopulationPlan { suite, scale, seed, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableLoad {
    pub table: String,
    pub rows: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadSummary {
    pub benchmark: String,
    pub scale: u32,
    pub seed: u64,
    pub tables: Vec<TableLoad>,
    pub total_rows: u64,
    pub seconds: f64,
    pub rows_per_second: f64,
}

/// Loads every table in foreign-key order, `batch_size` rows per transaction.
/// The schema must exist and every table must be empty.
pub fn populate(
    catalog: &BenchmarkCatalog,
    scale: u32,
    seed: u64,
    backend: &Backend,
    batch_size: usize,
) -> Result<LoadSummary, DatagenError> {
    if batch_size == 0 {
        return Err(DatagenError::InvalidBatchSize);
    }
    let plan = plan(catalog, scale, seed)?;
    let mut session = backend.session();
    for t in catalog.tables() {
        let probe = session
            .query(&format!("SELECT 1 FROM {} LIMIT 1", t.name), &[])
            .map_err(|error| DatagenError::Inspect { table: t.name.clone(), error })?;
        if !probe.is_empty() {
            return Err(DatagenError::NotEmpty(t.name.clone()));
        }
    }
    let started = Instant::now();
    let mut tables = Vec::new();
    for table in fk_topological_order(catalog.tables())? {
        let t0 = Instant::now();
        let rows = plan.rows[&table.name];
        let columns: Vec<String> = table.column_names().map(str::to_owned).collect();
        let mut gen = TableGen::new(plan.suite, table, seed);
        let mut offset = 0;
        let mut batch = Vec::with_capacity(batch_size);
        while offset < rows {
            batch.clear();
            let end = (offset + batch_size as u64).min(rows);
            for i in offset..end {
                batch.push(gen.row(i));
            }
            let load = |session: &mut dyn crate::driver::Session| -> Result<(), SqlError> {
                session.begin(false)?;
                if let Err(e) = session.insert_rows(&table.name, &columns, &batch) {
                    let _ = session.rollback();
                    return Err(e);
                }
                session.commit()
            };
            load(&mut *session).map_err(|error| DatagenError::Load {
                table: table.name.clone(),
                offset,
                error,
            })?;
            offset = end;
        }
        tables.push(TableLoad { table: table.name.clone(), rows, seconds: t0.elapsed().as_secs_f64() });
    }
    let seconds = started.elapsed().as_secs_f64();
    let total_rows = tables.iter().map(|t| t.rows).sum();
    Ok(LoadSummary {
        benchmark: catalog.name().to_owned(),
        scale,
        seed,
        tables,
        total_rows,
        seconds,
        rows_per_second: if seconds > 0.0 { total_rows as f64 / seconds } else { 0.0 },
    })
}

/// Stream id for a table: the first eight bytes of SHA-256 of its name.
fn table_stream(name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn table_rng(seed: u64, table: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(table_stream(table));
    rng
}

const SYLLABLES: [&str; 10] =
    ["BAR", "OUGHT", "ABLE", "PRI", "PRES", "ESE", "ANTI", "CALLY", "ATION", "EING"];

/// TPC-C customer last name for a number in `0..1000`.
pub fn last_name(n: u64) -> String {
    let n = n as usize % 1000;
    [n / 100, (n / 10) % 10, n % 10].iter().map(|&d| SYLLABLES[d]).collect()
}

fn cents<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> SqlValue {
    SqlValue::Float(rng.random_range(lo..=hi) as f64 / 100.0)
}

fn digits<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

fn upper<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| char::from(b'A' + rng.random_range(0..26u8))).collect()
}

fn ts() -> SqlValue {
    SqlValue::Text(LOAD_TIMESTAMP.to_owned())
}

/// Value for a column without a table-specific rule.
fn default_value<R: Rng>(col: &ColumnDef, rng: &mut R) -> SqlValue {
    match col.sql_type {
        SqlType::Integer => SqlValue::Int(rng.random_range(0..10_000)),
        SqlType::Decimal { precision, scale } => {
            let int_digits = u32::from(precision.saturating_sub(scale)).min(6);
            let hi = 10i64.pow(int_digits) * 100 - 1;
            let v = rng.random_range(0..=hi) as f64 / 100.0;
            SqlValue::Float(if scale >= 4 { v / 10_000.0 } else { v })
        }
        SqlType::Varchar(n) => {
            let n = usize::from(n);
            SqlValue::Text(random_alnum(rng, n.div_ceil(2), n))
        }
        SqlType::Timestamp => ts(),
        SqlType::Float => cents(rng, 0, 1_000_000),
    }
}

struct TableGen<'a> {
    suite: Suite,
    table: &'a TableDef,
    rng: ChaCha8Rng,
    /// Customer permutation of the district currently being generated.
    order_customers: Vec<i64>,
}

impl<'a> TableGen<'a> {
    fn new(suite: Suite, table: &'a TableDef, seed: u64) -> Self {
        TableGen { suite, table, rng: table_rng(seed, &table.name), order_customers: Vec::new() }
    }

    fn row(&mut self, i: u64) -> Vec<SqlValue> {
        let fixed = match self.suite {
            Suite::Subenchmark => self.retail(i),
            Suite::Fibenchmark => self.banking(i),
            Suite::Tabenchmark => self.telecom(i),
        };
        let rng = &mut self.rng;
        self.table
            .columns
            .iter()
            .map(|c| match fixed.iter().find(|(name, _)| *name == c.name) {
                Some((_, v)) => v.clone(),
                None => default_value(c, rng),
            })
            .collect()
    }

    fn retail(&mut self, i: u64) -> Vec<(&'static str, SqlValue)> {
        use SqlValue::{Float, Int, Null, Text};
        let rng = &mut self.rng;
        let per_w = DISTRICTS_PER_WAREHOUSE;
        let i = i as i64;
        let addr = |rng: &mut ChaCha8Rng, p: [&'static str; 5]| {
            vec![
                (p[0], Text(random_alnum(rng, 10, 20))),
                (p[1], Text(random_alnum(rng, 10, 20))),
                (p[2], Text(random_alnum(rng, 10, 20))),
                (p[3], Text(upper(rng, 2))),
                (p[4], Text(format!("{}11111", digits(rng, 4)))),
            ]
        };
        match self.table.name.as_str() {
            "WAREHOUSE" => {
                let mut v = vec![
                    ("w_id", Int(i + 1)),
                    ("w_ytd", Float(300_000.0)),
                    ("w_tax", Float(rng.random_range(0..=2000) as f64 / 10_000.0)),
                    ("w_name", Text(random_alnum(rng, 6, 10))),
                ];
                v.extend(addr(rng, ["w_street_1", "w_street_2", "w_city", "w_state", "w_zip"]));
                v
            }
            "DISTRICT" => {
                let mut v = vec![
                    ("d_w_id", Int(i / per_w as i64 + 1)),
                    ("d_id", Int(i % per_w as i64 + 1)),
                    ("d_ytd", Float(30_000.0)),
                    ("d_tax", Float(rng.random_range(0..=2000) as f64 / 10_000.0)),
                    ("d_next_o_id", Int(ORDERS_PER_DISTRICT as i64 + 1)),
                    ("d_name", Text(random_alnum(rng, 6, 10))),
                ];
                v.extend(addr(rng, ["d_street_1", "d_street_2", "d_city", "d_state", "d_zip"]));
                v
            }
            "CUSTOMER" => {
                let (w, d, c) = customer_key(i);
                let last = if c <= 1000 { c as u64 - 1 } else { rng.random_range(0..1000) };
                let mut v = vec![
                    ("c_w_id", Int(w)),
                    ("c_d_id", Int(d)),
                    ("c_id", Int(c)),
                    ("c_discount", Float(rng.random_range(0..=5000) as f64 / 10_000.0)),
                    ("c_credit", Text(if rng.random_bool(0.1) { "BC" } else { "GC" }.into())),
                    ("c_last", Text(last_name(last))),
                    ("c_first", Text(random_alnum(rng, 8, 16))),
                    ("c_credit_lim", Float(50_000.0)),
                    ("c_balance", Float(-10.0)),
                    ("c_ytd_payment", Float(10.0)),
                    ("c_payment_cnt", Int(1)),
                    ("c_delivery_cnt", Int(0)),
                    ("c_phone", Text(digits(rng, 16))),
                    ("c_since", ts()),
                    ("c_middle", Text("OE".into())),
                    ("c_data", Text(random_alnum(rng, 300, 500))),
                ];
                v.extend(addr(rng, ["c_street_1", "c_street_2", "c_city", "c_state", "c_zip"]));
                v
            }
            "HISTORY" => {
                let (w, d, c) = customer_key(i);
                vec![
                    ("h_c_id", Int(c)),
                    ("h_c_d_id", Int(d)),
                    ("h_c_w_id", Int(w)),
                    ("h_d_id", Int(d)),
                    ("h_w_id", Int(w)),
                    ("h_date", ts()),
                    ("h_amount", Float(10.0)),
                    ("h_data", Text(random_alnum(rng, 12, 24))),
                ]
            }
            "ORDERS" => {
                let (w, d, o) = order_key(i);
                if o == 1 {
                    let n = CUSTOMERS_PER_DISTRICT as i64;
                    self.order_customers = (1..=n).collect();
                    for k in (1..self.order_customers.len()).rev() {
                        let j = self.rng.random_range(0..=k);
                        self.order_customers.swap(k, j);
                    }
                }
                let rng = &mut self.rng;
                let undelivered = o >= FIRST_NEW_ORDER;
                vec![
                    ("o_w_id", Int(w)),
                    ("o_d_id", Int(d)),
                    ("o_id", Int(o)),
                    ("o_c_id", Int(self.order_customers[(o - 1) as usize])),
                    ("o_carrier_id", if undelivered { Null } else { Int(rng.random_range(1..=10)) }),
                    ("o_ol_cnt", Int(LINES_PER_ORDER as i64)),
                    ("o_all_local", Int(1)),
                    ("o_entry_d", ts()),
                ]
            }
            "NEW_ORDER" => {
                let per_d = NEW_ORDERS_PER_DISTRICT as i64;
                let district = i / per_d;
                vec![
                    ("no_w_id", Int(district / per_w as i64 + 1)),
                    ("no_d_id", Int(district % per_w as i64 + 1)),
                    ("no_o_id", Int(FIRST_NEW_ORDER + i % per_d)),
                ]
            }
            "ORDER_LINE" => {
                let (w, d, o) = order_key(i / LINES_PER_ORDER as i64);
                let undelivered = o >= FIRST_NEW_ORDER;
                vec![
                    ("ol_w_id", Int(w)),
                    ("ol_d_id", Int(d)),
                    ("ol_o_id", Int(o)),
                    ("ol_number", Int(i % LINES_PER_ORDER as i64 + 1)),
                    ("ol_i_id", Int(rng.random_range(1..=ITEMS as i64))),
                    ("ol_delivery_d", if undelivered { Null } else { ts() }),
                    ("ol_amount", if undelivered { cents(rng, 1, 999_999) } else { Float(0.0) }),
                    ("ol_supply_w_id", Int(w)),
                    ("ol_quantity", Int(5)),
                    ("ol_dist_info", Text(random_alnum(rng, 24, 24))),
                ]
            }
            "ITEM" => vec![
                ("i_id", Int(i + 1)),
                ("i_im_id", Int(rng.random_range(1..=10_000))),
                ("i_name", Text(random_alnum(rng, 14, 24))),
                ("i_price", cents(rng, 100, 10_000)),
                ("i_data", Text(random_alnum(rng, 26, 50))),
            ],
            "STOCK" => vec![
                ("s_w_id", Int(i / ITEMS as i64 + 1)),
                ("s_i_id", Int(i % ITEMS as i64 + 1)),
                ("s_quantity", Int(rng.random_range(10..=100))),
                ("s_ytd", Float(0.0)),
                ("s_order_cnt", Int(0)),
                ("s_remote_cnt", Int(0)),
                ("s_data", Text(random_alnum(rng, 26, 50))),
            ],
            _ => Vec::new(),
        }
    }

    fn banking(&mut self, i: u64) -> Vec<(&'static str, SqlValue)> {
        let rng = &mut self.rng;
        let id = SqlValue::Int(i as i64 + 1);
        match self.table.name.as_str() {
            "ACCOUNT" => vec![("custid", id), ("name", SqlValue::Text(random_alnum(rng, 16, 32)))],
            "SAVING" | "CHECKING" => vec![("custid", id), ("bal", cents(rng, 1_000_000, 5_000_000))],
            _ => Vec::new(),
        }
    }

    fn telecom(&mut self, i: u64) -> Vec<(&'static str, SqlValue)> {
        use SqlValue::{Int, Text};
        let rng = &mut self.rng;
        let i = i as i64;
        match self.table.name.as_str() {
            "SUBSCRIBER" => {
                let s = i + 1;
                let mut v = vec![
                    ("s_id", Int(s)),
                    ("sf_type", Int(facility_types(s)[0])),
                    ("sub_nbr", Text(format!("{s:015}"))),
                    ("msc_location", Int(rng.random_range(1..=i64::from(i32::MAX)))),
                    ("vlr_location", Int(rng.random_range(1..=i64::from(i32::MAX)))),
                ];
                for (k, name) in BITS.iter().enumerate() {
                    v.push((name, Int(rng.random_range(0..=1))));
                    v.push((HEXES[k], Int(rng.random_range(0..=15))));
                    if let Some(b) = BYTES.get(k) {
                        v.push((b, Int(rng.random_range(0..=255))));
                    }
                }
                v
            }
            "ACCESS_INFO" => {
                let s = i / 2 + 1;
                let ai = if s % 2 == 1 { 1 } else { 2 } + 2 * (i % 2);
                vec![
                    ("s_id", Int(s)),
                    ("ai_type", Int(ai)),
                    ("data1", Int(rng.random_range(0..=255))),
                    ("data2", Int(rng.random_range(0..=255))),
                    ("data3", Text(upper(rng, 3))),
                    ("data4", Text(upper(rng, 5))),
                ]
            }
            "SPECIAL_FACILITY" => {
                let s = i / 2 + 1;
                vec![
                    ("s_id", Int(s)),
                    ("sf_type", Int(facility_types(s)[(i % 2) as usize])),
                    ("is_active", Int(i64::from(rng.random_bool(0.85)))),
                    ("error_cntrl", Int(rng.random_range(0..=255))),
                    ("data_a", Int(rng.random_range(0..=255))),
                    ("data_b", Text(upper(rng, 5))),
                ]
            }
            "CALL_FORWARDING" => {
                let s = i / 2 + 1;
                let k = i % 2;
                let start = 8 * ((s + k) % 3);
                vec![
                    ("s_id", Int(s)),
                    ("sf_type", Int(facility_types(s)[k as usize])),
                    ("start_time", Int(start)),
                    ("end_time", Int(start + rng.random_range(1..=8))),
                    ("numberx", Text(digits(rng, 15))),
                ]
            }
            _ => Vec::new(),
        }
    }
}

const BITS: [&str; 10] =
    ["bit_1", "bit_2", "bit_3", "bit_4", "bit_5", "bit_6", "bit_7", "bit_8", "bit_9", "bit_10"];
const HEXES: [&str; 10] =
    ["hex_1", "hex_2", "hex_3", "hex_4", "hex_5", "hex_6", "hex_7", "hex_8", "hex_9", "hex_10"];
const BYTES: [&str; 9] = [
    "byte2_1", "byte2_2", "byte2_3", "byte2_4", "byte2_5", "byte2_6", "byte2_7", "byte2_8",
    "byte2_9",
];

/// The two special facilities a subscriber owns: odd ids hold types 1 and 2,
/// even ids 3 and 4. The first is the subscriber's primary facility.
pub fn facility_types(s_id: i64) -> [i64; 2] {
    if s_id % 2 == 1 {
        [1, 2]
    } else {
        [3, 4]
    }
}

fn customer_key(i: i64) -> (i64, i64, i64) {
    let per_d = CUSTOMERS_PER_DISTRICT as i64;
    let district = i / per_d;
    let per_w = DISTRICTS_PER_WAREHOUSE as i64;
    (district / per_w + 1, district % per_w + 1, i % per_d + 1)
}

fn order_key(i: i64) -> (i64, i64, i64) {
    let per_d = ORDERS_PER_DISTRICT as i64;
    let district = i / per_d;
    let per_w = DISTRICTS_PER_WAREHOUSE as i64;
    (district / per_w + 1, district % per_w + 1, i % per_d + 1)
}

/// Generates the rows of `table` without a backend, for inspection and tests.
pub fn generate_rows(
    catalog: &BenchmarkCatalog,
    table: &str,
    scale: u32,
    seed: u64,
    limit: u64,
) -> Result<Vec<Vec<SqlValue>>, DatagenError> {
    let rows = population(catalog, scale)?;
    let def = catalog.table(table).ok_or_else(|| CatalogError::UnknownTable(table.to_owned()))?;
    let suite = catalog.suite().expect("population checked the suite");
    let mut gen = TableGen::new(suite, def, seed);
    Ok((0..rows[table].min(limit)).map(|i| gen.row(i)).collect())
}
