use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use super::CatalogError;

/// Abstract column type. Every backend maps these onto its own names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SqlType {
    Integer,
    Decimal { precision: u8, scale: u8 },
    Varchar(u16),
    Timestamp,
    Float,
}

impl fmt::Display for SqlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlType::Integer => f.write_str("INTEGER"),
            SqlType::Decimal { precision, scale } => write!(f, "DECIMAL({precision},{scale})"),
            SqlType::Varchar(n) => write!(f, "VARCHAR({n})"),
            SqlType::Timestamp => f.write_str("TIMESTAMP"),
            SqlType::Float => f.write_str("FLOAT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnDef {
    pub name: String,
    pub sql_type: SqlType,
    pub nullable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexDef {
    pub name: String,
    pub columns: Vec<String>,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub ref_table: String,
    pub ref_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    /// Empty for heap tables without a key (TPC-C's HISTORY).
    pub primary_key: Vec<String>,
    pub indexes: Vec<IndexDef>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl TableDef {
    pub fn new(name: &str) -> Self {
        TableDef {
            name: name.to_owned(),
            columns: Vec::new(),
            primary_key: Vec::new(),
            indexes: Vec::new(),
            foreign_keys: Vec::new(),
        }
    }

    pub fn col(mut self, name: &str, sql_type: SqlType) -> Self {
        self.columns.push(ColumnDef { name: name.to_owned(), sql_type, nullable: false });
        self
    }

    pub fn nullable_col(mut self, name: &str, sql_type: SqlType) -> Self {
        self.columns.push(ColumnDef { name: name.to_owned(), sql_type, nullable: true });
        self
    }

    pub fn pk(mut self, cols: &[&str]) -> Self {
        self.primary_key = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn index(mut self, name: &str, cols: &[&str]) -> Self {
        self.indexes.push(IndexDef {
            name: name.to_owned(),
            columns: cols.iter().map(|c| c.to_string()).collect(),
            unique: false,
        });
        self
    }

    pub fn unique_index(mut self, name: &str, cols: &[&str]) -> Self {
        self.indexes.push(IndexDef {
            name: name.to_owned(),
            columns: cols.iter().map(|c| c.to_string()).collect(),
            unique: true,
        });
        self
    }

    pub fn fk(mut self, cols: &[&str], ref_table: &str, ref_cols: &[&str]) -> Self {
        self.foreign_keys.push(ForeignKey {
            columns: cols.iter().map(|c| c.to_string()).collect(),
            ref_table: ref_table.to_owned(),
            ref_columns: ref_cols.iter().map(|c| c.to_string()).collect(),
        });
        self
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Primary-key columns followed by the remaining columns in declaration
    /// order. Sorting on this list gives a total order over rows.
    pub fn canonical_order(&self) -> Vec<&str> {
        let mut order: Vec<&str> = self.primary_key.iter().map(String::as_str).collect();
        for c in &self.columns {
            if !self.primary_key.contains(&c.name) {
                order.push(&c.name);
            }
        }
        order
    }

    pub(crate) fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |msg: String| CatalogError::InvalidTable { table: self.name.clone(), msg };
        if self.columns.is_empty() {
            return Err(invalid("table has no columns".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(invalid(format!("duplicate column `{}`", c.name)));
            }
        }
        let check_cols = |what: &str, cols: &[String]| -> Result<(), CatalogError> {
            if cols.is_empty() && what != "primary key" {
                return Err(invalid(format!("{what} has no columns")));
            }
            for c in cols {
                if self.column(c).is_none() {
                    return Err(invalid(format!("{what} references unknown column `{c}`")));
                }
            }
            Ok(())
        };
        check_cols("primary key", &self.primary_key)?;
        for idx in &self.indexes {
            check_cols(&format!("index `{}`", idx.name), &idx.columns)?;
        }
        for fk in &self.foreign_keys {
            check_cols(&format!("foreign key to `{}`", fk.ref_table), &fk.columns)?;
            if fk.columns.len() != fk.ref_columns.len() {
                return Err(invalid(format!("foreign key to `{}` has mismatched arity", fk.ref_table)));
            }
        }
        Ok(())
    }
}

/// Orders tables so that every foreign-key target precedes its referrers.
/// Ties are broken by declaration order, so the result is deterministic.
pub fn fk_topological_order(tables: &[TableDef]) -> Result<Vec<&TableDef>, CatalogError> {
    let position: BTreeMap<&str, usize> =
        tables.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let mut deps: Vec<BTreeSet<usize>> = Vec::with_capacity(tables.len());
    for t in tables {
        let mut d = BTreeSet::new();
        for fk in &t.foreign_keys {
            let target = *position
                .get(fk.ref_table.as_str())
                .ok_or_else(|| CatalogError::UnknownTable(fk.ref_table.clone()))?;
            // A self-reference does not constrain the load order of other tables.
            if target != position[t.name.as_str()] {
                d.insert(target);
            }
        }
        deps.push(d);
    }

    let mut placed = vec![false; tables.len()];
    let mut order = Vec::with_capacity(tables.len());
    while order.len() < tables.len() {
        let next = (0..tables.len())
            .find(|&i| !placed[i] && deps[i].iter().all(|&d| placed[d]));
        match next {
            Some(i) => {
                placed[i] = true;
                order.push(&tables[i]);
            }
            None => {
                let stuck = (0..tables.len())
                    .filter(|&i| !placed[i])
                    .map(|i| tables[i].name.clone())
                    .collect();
                return Err(CatalogError::UnorderableSchema(stuck));
            }
        }
    }
    Ok(order)
}

fn write_create_table(out: &mut String, table: &TableDef, with_fk: bool) {
    let _ = writeln!(out, "CREATE TABLE {} (", table.name);
    let mut lines: Vec<String> = table
        .columns
        .iter()
        .map(|c| {
            let null = if c.nullable { "" } else { " NOT NULL" };
            format!("  {} {}{}", c.name, c.sql_type, null)
        })
        .collect();
    if !table.primary_key.is_empty() {
        lines.push(format!("  PRIMARY KEY ({})", table.primary_key.join(", ")));
    }
    if with_fk {
        for fk in &table.foreign_keys {
            lines.push(format!(
                "  FOREIGN KEY ({}) REFERENCES {} ({})",
                fk.columns.join(", "),
                fk.ref_table,
                fk.ref_columns.join(", ")
            ));
        }
    }
    out.push_str(&lines.join(",\n"));
    out.push_str("\n);\n");
}

pub(crate) fn emit_tables_ddl(
    header: &str,
    tables: &[TableDef],
    fk_variant: bool,
) -> Result<String, CatalogError> {
    let ordered: Vec<&TableDef> = if fk_variant {
        fk_topological_order(tables)?
    } else {
        tables.iter().collect()
    };
    let mut out = String::new();
    let _ = writeln!(out, "-- {header} schema, foreign keys {}", if fk_variant { "on" } else { "off" });
    for t in &ordered {
        out.push('\n');
        write_create_table(&mut out, t, fk_variant);
        for idx in &t.indexes {
            let unique = if idx.unique { "UNIQUE " } else { "" };
            let _ = writeln!(
                out,
                "CREATE {unique}INDEX {} ON {} ({});",
                idx.name,
                t.name,
                idx.columns.join(", ")
            );
        }
    }
    Ok(out)
}

/// Splits a script produced by [`emit_tables_ddl`] into single statements.
pub fn split_statements(script: &str) -> Vec<String> {
    let mut stmts = Vec::new();
    let mut current = String::new();
    for line in script.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("--") {
            continue;
        }
        current.push_str(line);
        current.push('\n');
        if trimmed.ends_with(';') {
            let stmt = current.trim().trim_end_matches(';').trim().to_owned();
            if !stmt.is_empty() {
                stmts.push(stmt);
            }
            current.clear();
        }
    }
    let rest = current.trim();
    if !rest.is_empty() {
        stmts.push(rest.to_owned());
    }
    stmts
}
