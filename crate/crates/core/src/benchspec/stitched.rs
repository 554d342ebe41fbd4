//! A deliberately inconsistent catalog: the retail online side with
//! analytical queries that also join supplier-side tables which no online
//! transaction ever touches. Used to exercise the consistency check.

use super::schema::{SqlType, TableDef};
use super::subench;
use super::template::{ParamGen as P, StatementTemplate as S, TemplateClass, TransactionTemplate};
use super::BenchmarkCatalog;

fn supplier_tables() -> Vec<TableDef> {
    vec![
        TableDef::new("REGION")
            .col("r_regionkey", SqlType::Integer)
            .col("r_name", SqlType::Varchar(55))
            .col("r_comment", SqlType::Varchar(152))
            .pk(&["r_regionkey"]),
        TableDef::new("NATION")
            .col("n_nationkey", SqlType::Integer)
            .col("n_name", SqlType::Varchar(25))
            .col("n_regionkey", SqlType::Integer)
            .col("n_comment", SqlType::Varchar(152))
            .pk(&["n_nationkey"])
            .fk(&["n_regionkey"], "REGION", &["r_regionkey"]),
        TableDef::new("SUPPLIER")
            .col("su_suppkey", SqlType::Integer)
            .col("su_name", SqlType::Varchar(25))
            .col("su_address", SqlType::Varchar(40))
            .col("su_nationkey", SqlType::Integer)
            .col("su_phone", SqlType::Varchar(15))
            .col("su_acctbal", SqlType::Decimal { precision: 12, scale: 2 })
            .col("su_comment", SqlType::Varchar(101))
            .pk(&["su_suppkey"])
            .fk(&["su_nationkey"], "NATION", &["n_nationkey"]),
    ]
}

fn query(name: &str, description: &str, stmt: S) -> TransactionTemplate {
    TransactionTemplate::new(name, TemplateClass::Analytical, 1).describe(description).stmt(stmt)
}

fn analytical() -> Vec<TransactionTemplate> {
    vec![
        query(
            "Q5",
            "Local supplier volume: revenue per nation within one region.",
            S::read(
                "SELECT n.n_name, SUM(ol.ol_amount) AS revenue \
                 FROM CUSTOMER c, ORDERS o, ORDER_LINE ol, STOCK s, SUPPLIER su, NATION n, REGION r \
                 WHERE c.c_id = o.o_c_id AND c.c_w_id = o.o_w_id AND c.c_d_id = o.o_d_id \
                 AND ol.ol_o_id = o.o_id AND ol.ol_w_id = o.o_w_id AND ol.ol_d_id = o.o_d_id \
                 AND ol.ol_w_id = s.s_w_id AND ol.ol_i_id = s.s_i_id \
                 AND (s.s_w_id * s.s_i_id) % 10000 = su.su_suppkey \
                 AND su.su_nationkey = n.n_nationkey AND n.n_regionkey = r.r_regionkey \
                 AND r.r_name = ? GROUP BY n.n_name ORDER BY revenue DESC",
                &["CUSTOMER", "ORDERS", "ORDER_LINE", "STOCK", "SUPPLIER", "NATION", "REGION"],
                vec![P::constant("EUROPE")],
            ),
        ),
        query(
            "Q11",
            "Important stock: stock quantity held for suppliers of one nation.",
            S::read(
                "SELECT s.s_i_id, SUM(s.s_order_cnt) AS ordercount FROM STOCK s, SUPPLIER su, NATION n \
                 WHERE (s.s_w_id * s.s_i_id) % 10000 = su.su_suppkey \
                 AND su.su_nationkey = n.n_nationkey AND n.n_name = ? \
                 GROUP BY s.s_i_id ORDER BY ordercount DESC LIMIT 100",
                &["STOCK", "SUPPLIER", "NATION"],
                vec![P::constant("GERMANY")],
            ),
        ),
        query(
            "Q1",
            "Order-line summary by line number.",
            S::read(
                "SELECT ol_number, SUM(ol_quantity), SUM(ol_amount), COUNT(*) FROM ORDER_LINE \
                 GROUP BY ol_number ORDER BY ol_number",
                &["ORDER_LINE"],
                vec![],
            ),
        ),
    ]
}

/// Builds the inconsistent fixture. Its consistency check must fail on
/// exactly SUPPLIER, NATION and REGION.
pub fn stitched_fixture() -> BenchmarkCatalog {
    let mut tables = subench::tables();
    tables.extend(supplier_tables());
    BenchmarkCatalog::new(
        "stitched",
        tables,
        vec![
            subench::new_order(),
            subench::payment(),
            subench::order_status(),
            subench::delivery(),
            subench::stock_level(),
        ],
        analytical(),
        vec![],
    )
    .expect("stitched fixture is structurally valid")
}
