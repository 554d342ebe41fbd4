//! Retail suite. Online side follows TPC-C; analytical queries and hybrid
//! real-time queries cover every table the online side touches, including
//! WAREHOUSE, DISTRICT and HISTORY.

use super::schema::{SqlType, TableDef};
use super::template::{
    HybridTemplate, ParamGen as P, StatementTemplate as S, TemplateClass, TransactionTemplate,
};
use super::{BenchmarkCatalog, CatalogError};

pub const DISTRICTS_PER_WAREHOUSE: u64 = 10;
pub const CUSTOMERS_PER_DISTRICT: u64 = 3000;
/// Orders per district at load time; the last `NEW_ORDERS_PER_DISTRICT` are undelivered.
pub const ORDERS_PER_DISTRICT: u64 = 3000;
pub const NEW_ORDERS_PER_DISTRICT: u64 = 900;
pub const LINES_PER_ORDER: u64 = 10;
/// ITEM has a fixed size independent of scale.
pub const ITEMS: u64 = 100_000;
/// Order lines per NewOrder transaction.
const NEW_ORDER_LINES: usize = 5;

use SqlType::{Float, Integer, Timestamp};

fn dec(precision: u8, scale: u8) -> SqlType {
    SqlType::Decimal { precision, scale }
}

fn vc(n: u16) -> SqlType {
    SqlType::Varchar(n)
}

pub(super) fn tables() -> Vec<TableDef> {
    let warehouse = TableDef::new("WAREHOUSE")
        .col("w_id", Integer)
        .col("w_ytd", dec(12, 2))
        .col("w_tax", dec(4, 4))
        .col("w_name", vc(10))
        .col("w_street_1", vc(20))
        .col("w_street_2", vc(20))
        .col("w_city", vc(20))
        .col("w_state", vc(2))
        .col("w_zip", vc(9))
        .pk(&["w_id"]);

    let district = TableDef::new("DISTRICT")
        .col("d_w_id", Integer)
        .col("d_id", Integer)
        .col("d_ytd", dec(12, 2))
        .col("d_tax", dec(4, 4))
        .col("d_next_o_id", Integer)
        .col("d_name", vc(10))
        .col("d_street_1", vc(20))
        .col("d_street_2", vc(20))
        .col("d_city", vc(20))
        .col("d_state", vc(2))
        .col("d_zip", vc(9))
        .pk(&["d_w_id", "d_id"])
        .fk(&["d_w_id"], "WAREHOUSE", &["w_id"]);

    let customer = TableDef::new("CUSTOMER")
        .col("c_w_id", Integer)
        .col("c_d_id", Integer)
        .col("c_id", Integer)
        .col("c_discount", dec(4, 4))
        .col("c_credit", vc(2))
        .col("c_last", vc(16))
        .col("c_first", vc(16))
        .col("c_credit_lim", dec(12, 2))
        .col("c_balance", dec(12, 2))
        .col("c_ytd_payment", Float)
        .col("c_payment_cnt", Integer)
        .col("c_delivery_cnt", Integer)
        .col("c_street_1", vc(20))
        .col("c_street_2", vc(20))
        .col("c_city", vc(20))
        .col("c_state", vc(2))
        .col("c_zip", vc(9))
        .col("c_phone", vc(16))
        .col("c_since", Timestamp)
        .col("c_middle", vc(2))
        .col("c_data", vc(500))
        .pk(&["c_w_id", "c_d_id", "c_id"])
        .index("idx_customer_name", &["c_w_id", "c_d_id", "c_last", "c_first"])
        .fk(&["c_w_id", "c_d_id"], "DISTRICT", &["d_w_id", "d_id"]);

    let history = TableDef::new("HISTORY")
        .col("h_c_id", Integer)
        .col("h_c_d_id", Integer)
        .col("h_c_w_id", Integer)
        .col("h_d_id", Integer)
        .col("h_w_id", Integer)
        .col("h_date", Timestamp)
        .col("h_amount", dec(6, 2))
        .col("h_data", vc(24))
        .fk(&["h_c_w_id", "h_c_d_id", "h_c_id"], "CUSTOMER", &["c_w_id", "c_d_id", "c_id"])
        .fk(&["h_w_id", "h_d_id"], "DISTRICT", &["d_w_id", "d_id"]);

    let orders = TableDef::new("ORDERS")
        .col("o_w_id", Integer)
        .col("o_d_id", Integer)
        .col("o_id", Integer)
        .col("o_c_id", Integer)
        .nullable_col("o_carrier_id", Integer)
        .col("o_ol_cnt", Integer)
        .col("o_all_local", Integer)
        .col("o_entry_d", Timestamp)
        .pk(&["o_w_id", "o_d_id", "o_id"])
        .index("idx_orders_customer", &["o_w_id", "o_d_id", "o_c_id", "o_id"])
        .fk(&["o_w_id", "o_d_id", "o_c_id"], "CUSTOMER", &["c_w_id", "c_d_id", "c_id"]);

    let new_order = TableDef::new("NEW_ORDER")
        .col("no_w_id", Integer)
        .col("no_d_id", Integer)
        .col("no_o_id", Integer)
        .pk(&["no_w_id", "no_d_id", "no_o_id"])
        .fk(&["no_w_id", "no_d_id", "no_o_id"], "ORDERS", &["o_w_id", "o_d_id", "o_id"]);

    let item = TableDef::new("ITEM")
        .col("i_id", Integer)
        .col("i_name", vc(24))
        .col("i_price", dec(5, 2))
        .col("i_data", vc(50))
        .col("i_im_id", Integer)
        .pk(&["i_id"]);

    let mut stock = TableDef::new("STOCK")
        .col("s_w_id", Integer)
        .col("s_i_id", Integer)
        .col("s_quantity", Integer)
        .col("s_ytd", dec(8, 2))
        .col("s_order_cnt", Integer)
        .col("s_remote_cnt", Integer)
        .col("s_data", vc(50));
    for d in 1..=10 {
        stock = stock.col(&format!("s_dist_{d:02}"), vc(24));
    }
    let stock = stock
        .pk(&["s_w_id", "s_i_id"])
        .fk(&["s_w_id"], "WAREHOUSE", &["w_id"])
        .fk(&["s_i_id"], "ITEM", &["i_id"]);

    let order_line = TableDef::new("ORDER_LINE")
        .col("ol_w_id", Integer)
        .col("ol_d_id", Integer)
        .col("ol_o_id", Integer)
        .col("ol_number", Integer)
        .col("ol_i_id", Integer)
        .nullable_col("ol_delivery_d", Timestamp)
        .col("ol_amount", dec(6, 2))
        .col("ol_supply_w_id", Integer)
        .col("ol_quantity", Integer)
        .col("ol_dist_info", vc(24))
        .pk(&["ol_w_id", "ol_d_id", "ol_o_id", "ol_number"])
        .index("idx_order_line_delivery", &["ol_delivery_d"])
        .fk(&["ol_w_id", "ol_d_id", "ol_o_id"], "ORDERS", &["o_w_id", "o_d_id", "o_id"])
        .fk(&["ol_supply_w_id", "ol_i_id"], "STOCK", &["s_w_id", "s_i_id"]);

    vec![warehouse, district, customer, history, new_order, orders, order_line, item, stock]
}

fn warehouse() -> P {
    P::scaled(1)
}

fn district() -> P {
    P::uniform(1, DISTRICTS_PER_WAREHOUSE as i64)
}

fn customer() -> P {
    P::uniform(1, CUSTOMERS_PER_DISTRICT as i64)
}

pub(super) fn new_order() -> TransactionTemplate {
    let mut t = TransactionTemplate::new("NewOrder", TemplateClass::Online, 45)
        .describe("Enter a five-line order for one customer and decrement stock.")
        .var("w", warehouse())
        .var("d", district())
        .var("c", customer());
    for k in 1..=NEW_ORDER_LINES {
        t = t
            .var(&format!("i{k}"), P::uniform(1, ITEMS as i64))
            .var(&format!("q{k}"), P::uniform(1, 10));
    }
    t = t
        .stmt(S::read(
            "SELECT c_discount, c_last, c_credit, w_tax FROM CUSTOMER, WAREHOUSE \
             WHERE w_id = ? AND c_w_id = w_id AND c_d_id = ? AND c_id = ?",
            &["CUSTOMER", "WAREHOUSE"],
            vec![P::var("w"), P::var("d"), P::var("c")],
        ))
        .stmt(S::read(
            "SELECT d_next_o_id, d_tax FROM DISTRICT WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            vec![P::var("w"), P::var("d")],
        ))
        .stmt(S::write(
            "UPDATE DISTRICT SET d_next_o_id = d_next_o_id + 1 WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            &["DISTRICT"],
            vec![P::var("w"), P::var("d")],
        ))
        .stmt(S::write(
            &format!(
                "INSERT INTO ORDERS (o_w_id, o_d_id, o_id, o_c_id, o_carrier_id, o_ol_cnt, \
                 o_all_local, o_entry_d) SELECT d_w_id, d_id, d_next_o_id - 1, ?, NULL, \
                 {NEW_ORDER_LINES}, 1, CURRENT_TIMESTAMP FROM DISTRICT WHERE d_w_id = ? AND d_id = ?"
            ),
            &["DISTRICT"],
            &["ORDERS"],
            vec![P::var("c"), P::var("w"), P::var("d")],
        ))
        .stmt(S::write(
            "INSERT INTO NEW_ORDER (no_w_id, no_d_id, no_o_id) \
             SELECT d_w_id, d_id, d_next_o_id - 1 FROM DISTRICT WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            &["NEW_ORDER"],
            vec![P::var("w"), P::var("d")],
        ));
    for k in 1..=NEW_ORDER_LINES {
        let (i, q) = (format!("i{k}"), format!("q{k}"));
        t = t
            .stmt(S::read(
                "SELECT i_price, i_name, i_data FROM ITEM WHERE i_id = ?",
                &["ITEM"],
                vec![P::var(&i)],
            ))
            .stmt(S::read(
                "SELECT s_quantity, s_data, s_dist_01 FROM STOCK WHERE s_w_id = ? AND s_i_id = ?",
                &["STOCK"],
                vec![P::var("w"), P::var(&i)],
            ))
            .stmt(S::write(
                "UPDATE STOCK SET s_quantity = CASE WHEN s_quantity - ? >= 10 \
                 THEN s_quantity - ? ELSE s_quantity - ? + 91 END, \
                 s_ytd = s_ytd + ?, s_order_cnt = s_order_cnt + 1 \
                 WHERE s_w_id = ? AND s_i_id = ?",
                &["STOCK"],
                &["STOCK"],
                vec![P::var(&q), P::var(&q), P::var(&q), P::var(&q), P::var("w"), P::var(&i)],
            ))
            .stmt(S::write(
                &format!(
                    "INSERT INTO ORDER_LINE (ol_w_id, ol_d_id, ol_o_id, ol_number, ol_i_id, \
                     ol_supply_w_id, ol_delivery_d, ol_quantity, ol_amount, ol_dist_info) \
                     SELECT d_w_id, d_id, d_next_o_id - 1, {k}, ?, d_w_id, NULL, ?, \
                     ? * (SELECT i_price FROM ITEM WHERE i_id = ?), \
                     (SELECT s_dist_01 FROM STOCK WHERE s_w_id = ? AND s_i_id = ?) \
                     FROM DISTRICT WHERE d_w_id = ? AND d_id = ?"
                ),
                &["DISTRICT", "ITEM", "STOCK"],
                &["ORDER_LINE"],
                vec![
                    P::var(&i),
                    P::var(&q),
                    P::var(&q),
                    P::var(&i),
                    P::var("w"),
                    P::var(&i),
                    P::var("w"),
                    P::var("d"),
                ],
            ));
    }
    t
}

/// Statements of NewOrder before the first item lookup.
const NEW_ORDER_HEADER: usize = 5;

pub(super) fn payment() -> TransactionTemplate {
    TransactionTemplate::new("Payment", TemplateClass::Online, 43)
        .describe("Record a customer payment against warehouse, district and customer totals.")
        .var("w", warehouse())
        .var("d", district())
        .var("c", customer())
        .var("amount", P::uniform(1, 5000))
        .stmt(S::write(
            "UPDATE WAREHOUSE SET w_ytd = w_ytd + ? WHERE w_id = ?",
            &["WAREHOUSE"],
            &["WAREHOUSE"],
            vec![P::var("amount"), P::var("w")],
        ))
        .stmt(S::read(
            "SELECT w_street_1, w_street_2, w_city, w_state, w_zip, w_name \
             FROM WAREHOUSE WHERE w_id = ?",
            &["WAREHOUSE"],
            vec![P::var("w")],
        ))
        .stmt(S::write(
            "UPDATE DISTRICT SET d_ytd = d_ytd + ? WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            &["DISTRICT"],
            vec![P::var("amount"), P::var("w"), P::var("d")],
        ))
        .stmt(S::read(
            "SELECT d_street_1, d_street_2, d_city, d_state, d_zip, d_name \
             FROM DISTRICT WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            vec![P::var("w"), P::var("d")],
        ))
        .stmt(S::read(
            "SELECT c_first, c_middle, c_last, c_street_1, c_street_2, c_city, c_state, c_zip, \
             c_phone, c_credit, c_credit_lim, c_discount, c_balance, c_since \
             FROM CUSTOMER WHERE c_w_id = ? AND c_d_id = ? AND c_id = ?",
            &["CUSTOMER"],
            vec![P::var("w"), P::var("d"), P::var("c")],
        ))
        .stmt(S::write(
            "UPDATE CUSTOMER SET c_balance = c_balance - ?, c_ytd_payment = c_ytd_payment + ?, \
             c_payment_cnt = c_payment_cnt + 1 WHERE c_w_id = ? AND c_d_id = ? AND c_id = ?",
            &["CUSTOMER"],
            &["CUSTOMER"],
            vec![P::var("amount"), P::var("amount"), P::var("w"), P::var("d"), P::var("c")],
        ))
        .stmt(S::write(
            "INSERT INTO HISTORY (h_c_id, h_c_d_id, h_c_w_id, h_d_id, h_w_id, h_date, h_amount, \
             h_data) VALUES (?, ?, ?, ?, ?, CURRENT_TIMESTAMP, ?, ?)",
            &[],
            &["HISTORY"],
            vec![
                P::var("c"),
                P::var("d"),
                P::var("w"),
                P::var("d"),
                P::var("w"),
                P::var("amount"),
                P::alnum(12, 24),
            ],
        ))
}

pub(super) fn order_status() -> TransactionTemplate {
    TransactionTemplate::new("OrderStatus", TemplateClass::Online, 4)
        .describe("Show a customer's balance and the lines of their latest order.")
        .var("w", warehouse())
        .var("d", district())
        .var("c", customer())
        .stmt(S::read(
            "SELECT c_first, c_middle, c_last, c_balance FROM CUSTOMER \
             WHERE c_w_id = ? AND c_d_id = ? AND c_id = ?",
            &["CUSTOMER"],
            vec![P::var("w"), P::var("d"), P::var("c")],
        ))
        .stmt(S::read(
            "SELECT o_id, o_carrier_id, o_entry_d FROM ORDERS \
             WHERE o_w_id = ? AND o_d_id = ? AND o_c_id = ? ORDER BY o_id DESC LIMIT 1",
            &["ORDERS"],
            vec![P::var("w"), P::var("d"), P::var("c")],
        ))
        .stmt(S::read(
            "SELECT ol_i_id, ol_supply_w_id, ol_quantity, ol_amount, ol_delivery_d \
             FROM ORDER_LINE WHERE ol_w_id = ? AND ol_d_id = ? AND ol_o_id = \
             (SELECT MAX(o_id) FROM ORDERS WHERE o_w_id = ? AND o_d_id = ? AND o_c_id = ?)",
            &["ORDER_LINE", "ORDERS"],
            vec![P::var("w"), P::var("d"), P::var("w"), P::var("d"), P::var("c")],
        ))
}

pub(super) fn delivery() -> TransactionTemplate {
    let mut t = TransactionTemplate::new("Delivery", TemplateClass::Online, 4)
        .describe("Deliver the oldest undelivered order of every district in one warehouse.")
        .var("w", warehouse())
        .var("carrier", P::uniform(1, 10));
    // MySQL refuses a subquery on the table being modified unless it is
    // materialized through a derived table, hence the `oldest` wrapper.
    let oldest = "(SELECT m FROM (SELECT MIN(no_o_id) AS m FROM NEW_ORDER \
                  WHERE no_w_id = ? AND no_d_id = {d}) AS oldest)";
    for d in 1..=DISTRICTS_PER_WAREHOUSE {
        let oldest = oldest.replace("{d}", &d.to_string());
        t = t
            .stmt(S::write(
                &format!(
                    "UPDATE ORDERS SET o_carrier_id = ? WHERE o_w_id = ? AND o_d_id = {d} \
                     AND o_id = {oldest}"
                ),
                &["ORDERS", "NEW_ORDER"],
                &["ORDERS"],
                vec![P::var("carrier"), P::var("w"), P::var("w")],
            ))
            .stmt(S::write(
                &format!(
                    "UPDATE ORDER_LINE SET ol_delivery_d = CURRENT_TIMESTAMP \
                     WHERE ol_w_id = ? AND ol_d_id = {d} AND ol_o_id = {oldest}"
                ),
                &["ORDER_LINE", "NEW_ORDER"],
                &["ORDER_LINE"],
                vec![P::var("w"), P::var("w")],
            ))
            .stmt(S::write(
                &format!(
                    "UPDATE CUSTOMER SET c_balance = c_balance + \
                     (SELECT COALESCE(SUM(ol_amount), 0) FROM ORDER_LINE \
                      WHERE ol_w_id = ? AND ol_d_id = {d} AND ol_o_id = {oldest}), \
                     c_delivery_cnt = c_delivery_cnt + 1 \
                     WHERE c_w_id = ? AND c_d_id = {d} AND c_id = \
                     (SELECT o_c_id FROM ORDERS WHERE o_w_id = ? AND o_d_id = {d} \
                      AND o_id = {oldest})"
                ),
                &["CUSTOMER", "ORDER_LINE", "ORDERS", "NEW_ORDER"],
                &["CUSTOMER"],
                vec![P::var("w"), P::var("w"), P::var("w"), P::var("w"), P::var("w")],
            ))
            .stmt(S::write(
                &format!(
                    "DELETE FROM NEW_ORDER WHERE no_w_id = ? AND no_d_id = {d} \
                     AND no_o_id = {oldest}"
                ),
                &["NEW_ORDER"],
                &["NEW_ORDER"],
                vec![P::var("w"), P::var("w")],
            ));
    }
    t
}

pub(super) fn stock_level() -> TransactionTemplate {
    TransactionTemplate::new("StockLevel", TemplateClass::Online, 4)
        .describe("Count recently sold items whose stock is below a threshold.")
        .var("w", warehouse())
        .var("d", district())
        .var("threshold", P::uniform(10, 20))
        .stmt(S::read(
            "SELECT d_next_o_id FROM DISTRICT WHERE d_w_id = ? AND d_id = ?",
            &["DISTRICT"],
            vec![P::var("w"), P::var("d")],
        ))
        .stmt(S::read(
            "SELECT COUNT(DISTINCT s_i_id) FROM ORDER_LINE, STOCK \
             WHERE ol_w_id = ? AND ol_d_id = ? \
             AND ol_o_id < (SELECT d_next_o_id FROM DISTRICT WHERE d_w_id = ? AND d_id = ?) \
             AND ol_o_id >= (SELECT d_next_o_id - 20 FROM DISTRICT WHERE d_w_id = ? AND d_id = ?) \
             AND s_w_id = ol_w_id AND s_i_id = ol_i_id AND s_quantity < ?",
            &["ORDER_LINE", "STOCK", "DISTRICT"],
            vec![
                P::var("w"),
                P::var("d"),
                P::var("w"),
                P::var("d"),
                P::var("w"),
                P::var("d"),
                P::var("threshold"),
            ],
        ))
}

fn query(name: &str, description: &str, stmt: S) -> TransactionTemplate {
    TransactionTemplate::new(name, TemplateClass::Analytical, 1).describe(description).stmt(stmt)
}

fn analytical() -> Vec<TransactionTemplate> {
    vec![
        query(
            "Q1",
            "Orders analytical report: quantity and amount totals and averages per line number \
             for lines delivered after a date.",
            S::read(
                "SELECT ol_number, SUM(ol_quantity) AS sum_qty, SUM(ol_amount) AS sum_amount, \
                 AVG(ol_quantity) AS avg_qty, AVG(ol_amount) AS avg_amount, COUNT(*) AS count_order \
                 FROM ORDER_LINE WHERE ol_delivery_d > ? GROUP BY ol_number ORDER BY ol_number",
                &["ORDER_LINE"],
                vec![P::constant("2000-01-01 00:00:00")],
            ),
        ),
        query(
            "Q2",
            "District revenue: multi-join of DISTRICT, ORDERS and ORDER_LINE grouped by district.",
            S::read(
                "SELECT d_w_id, d_id, d_name, COUNT(DISTINCT o_id) AS orders, \
                 SUM(ol_amount) AS revenue FROM DISTRICT, ORDERS, ORDER_LINE \
                 WHERE o_w_id = d_w_id AND o_d_id = d_id AND ol_w_id = o_w_id \
                 AND ol_d_id = o_d_id AND ol_o_id = o_id \
                 GROUP BY d_w_id, d_id, d_name ORDER BY revenue DESC",
                &["DISTRICT", "ORDERS", "ORDER_LINE"],
                vec![],
            ),
        ),
        query(
            "Q3",
            "Payment history by credit class: HISTORY joined with CUSTOMER.",
            S::read(
                "SELECT c_credit, COUNT(*) AS payments, SUM(h_amount) AS total, \
                 AVG(h_amount) AS average FROM HISTORY, CUSTOMER \
                 WHERE c_w_id = h_c_w_id AND c_d_id = h_c_d_id AND c_id = h_c_id \
                 GROUP BY c_credit ORDER BY c_credit",
                &["HISTORY", "CUSTOMER"],
                vec![],
            ),
        ),
        query(
            "Q4",
            "Top customers whose balance exceeds the average balance (sub-selection).",
            S::read(
                "SELECT c_w_id, c_d_id, c_id, c_last, c_balance FROM CUSTOMER \
                 WHERE c_balance > (SELECT AVG(c_balance) FROM CUSTOMER) \
                 ORDER BY c_balance DESC, c_w_id, c_d_id, c_id LIMIT 20",
                &["CUSTOMER"],
                vec![],
            ),
        ),
        query(
            "Q5",
            "Low-stock items per warehouse.",
            S::read(
                "SELECT s_w_id, COUNT(*) AS low_items, AVG(s_quantity) AS avg_quantity \
                 FROM STOCK WHERE s_quantity < ? GROUP BY s_w_id ORDER BY s_w_id",
                &["STOCK"],
                vec![P::uniform(15, 25)],
            ),
        ),
        query(
            "Q6",
            "Undelivered order backlog per district.",
            S::read(
                "SELECT d_w_id, d_id, d_name, COUNT(no_o_id) AS pending \
                 FROM DISTRICT, NEW_ORDER WHERE no_w_id = d_w_id AND no_d_id = d_id \
                 GROUP BY d_w_id, d_id, d_name ORDER BY pending DESC, d_w_id, d_id",
                &["DISTRICT", "NEW_ORDER"],
                vec![],
            ),
        ),
        query(
            "Q7",
            "Most ordered items: ITEM joined with ORDER_LINE.",
            S::read(
                "SELECT i_id, i_name, SUM(ol_quantity) AS quantity FROM ITEM, ORDER_LINE \
                 WHERE ol_i_id = i_id GROUP BY i_id, i_name ORDER BY quantity DESC, i_id LIMIT 10",
                &["ITEM", "ORDER_LINE"],
                vec![],
            ),
        ),
        query(
            "Q8",
            "Warehouse year-to-date reconciliation against district totals.",
            S::read(
                "SELECT w_id, w_name, w_ytd, \
                 (SELECT SUM(d_ytd) FROM DISTRICT WHERE d_w_id = w_id) AS district_ytd \
                 FROM WAREHOUSE ORDER BY w_id",
                &["WAREHOUSE", "DISTRICT"],
                vec![],
            ),
        ),
        query(
            "Q9",
            "Delivered order volume per carrier.",
            S::read(
                "SELECT o_carrier_id, COUNT(*) AS orders, AVG(o_ol_cnt) AS avg_lines \
                 FROM ORDERS WHERE o_carrier_id IS NOT NULL \
                 GROUP BY o_carrier_id ORDER BY o_carrier_id",
                &["ORDERS"],
                vec![],
            ),
        ),
    ]
}

fn hybrid() -> Vec<HybridTemplate> {
    vec![
        HybridTemplate::new(
            "X1",
            new_order(),
            S::read("SELECT MIN(i_price) FROM ITEM", &["ITEM"], vec![]),
            NEW_ORDER_HEADER,
            20,
        )
        .describe("NewOrder that looks up the lowest item price before choosing items."),
        HybridTemplate::new(
            "X2",
            payment(),
            S::read(
                "SELECT COUNT(*), SUM(h_amount) FROM HISTORY \
                 WHERE h_c_w_id = ? AND h_c_d_id = ? AND h_c_id = ?",
                &["HISTORY"],
                vec![P::var("w"), P::var("d"), P::var("c")],
            ),
            0,
            15,
        )
        .describe("Payment preceded by the customer's payment history total."),
        HybridTemplate::new(
            "X3",
            order_status(),
            S::read(
                "SELECT AVG(ol_amount), MAX(ol_amount) FROM ORDER_LINE \
                 WHERE ol_w_id = ? AND ol_d_id = ?",
                &["ORDER_LINE"],
                vec![P::var("w"), P::var("d")],
            ),
            1,
            30,
        )
        .describe("OrderStatus with the district's average order-line amount."),
        HybridTemplate::new(
            "X4",
            stock_level(),
            S::read(
                "SELECT COUNT(*), MIN(i_price) FROM ITEM WHERE i_name LIKE ?",
                &["ITEM"],
                vec![P::mask("%**%")],
            ),
            1,
            30,
        )
        .describe("StockLevel with a fuzzy item-name search."),
        HybridTemplate::new(
            "X5",
            delivery(),
            S::read(
                "SELECT COUNT(*), MIN(no_o_id) FROM NEW_ORDER WHERE no_w_id = ?",
                &["NEW_ORDER"],
                vec![P::var("w")],
            ),
            0,
            5,
        )
        .describe("Delivery preceded by the warehouse's undelivered backlog."),
    ]
}

pub(super) fn catalog() -> Result<BenchmarkCatalog, CatalogError> {
    BenchmarkCatalog::new(
        "subenchmark",
        tables(),
        vec![new_order(), payment(), order_status(), delivery(), stock_level()],
        analytical(),
        hybrid(),
    )
}
