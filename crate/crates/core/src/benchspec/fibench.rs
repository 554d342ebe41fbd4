//! Banking suite. Online side follows SmallBank, keyed by customer id.

use super::schema::{SqlType, TableDef};
use super::template::{
    HybridTemplate, ParamGen as P, StatementTemplate as S, TemplateClass, TransactionTemplate,
};
use super::{BenchmarkCatalog, CatalogError};

/// ACCOUNT rows per scale unit; SAVING and CHECKING hold one row per account.
pub const ACCOUNTS_PER_SCALE: u64 = 100_000;

fn tables() -> Vec<TableDef> {
    vec![
        TableDef::new("ACCOUNT")
            .col("custid", SqlType::Integer)
            .col("name", SqlType::Varchar(64))
            .pk(&["custid"])
            .index("idx_account_name", &["name"]),
        TableDef::new("SAVING")
            .col("custid", SqlType::Integer)
            .col("bal", SqlType::Float)
            .pk(&["custid"])
            .index("idx_saving_bal", &["bal"])
            .fk(&["custid"], "ACCOUNT", &["custid"]),
        TableDef::new("CHECKING")
            .col("custid", SqlType::Integer)
            .col("bal", SqlType::Float)
            .pk(&["custid"])
            .index("idx_checking_bal", &["bal"])
            .index("idx_checking_custid_bal", &["custid", "bal"])
            .fk(&["custid"], "ACCOUNT", &["custid"]),
    ]
}

fn account() -> P {
    P::scaled(ACCOUNTS_PER_SCALE)
}

fn amount() -> P {
    P::uniform(1, 100)
}

fn lookup(var: &str) -> S {
    S::read("SELECT custid FROM ACCOUNT WHERE custid = ?", &["ACCOUNT"], vec![P::var(var)])
}

fn amalgamate() -> TransactionTemplate {
    TransactionTemplate::new("Amalgamate", TemplateClass::Online, 17)
        .describe("Move all funds of one customer into another customer's checking account.")
        .var("c1", account())
        .var("c2", account())
        .stmt(lookup("c1"))
        .stmt(lookup("c2"))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = bal + \
             (SELECT bal FROM SAVING WHERE custid = ?) + \
             (SELECT b FROM (SELECT bal AS b FROM CHECKING WHERE custid = ?) AS src) \
             WHERE custid = ?",
            &["SAVING", "CHECKING"],
            &["CHECKING"],
            vec![P::var("c1"), P::var("c1"), P::var("c2")],
        ))
        .stmt(S::write(
            "UPDATE SAVING SET bal = 0 WHERE custid = ?",
            &[],
            &["SAVING"],
            vec![P::var("c1")],
        ))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = 0 WHERE custid = ?",
            &[],
            &["CHECKING"],
            vec![P::var("c1")],
        ))
}

fn balance() -> TransactionTemplate {
    TransactionTemplate::new("Balance", TemplateClass::Online, 15)
        .describe("Total balance of one customer.")
        .var("c", account())
        .stmt(S::read(
            "SELECT a.name, s.bal + c.bal FROM ACCOUNT a, SAVING s, CHECKING c \
             WHERE a.custid = ? AND s.custid = a.custid AND c.custid = a.custid",
            &["ACCOUNT", "SAVING", "CHECKING"],
            vec![P::var("c")],
        ))
}

fn deposit_checking() -> TransactionTemplate {
    TransactionTemplate::new("DepositChecking", TemplateClass::Online, 17)
        .describe("Deposit into a checking account.")
        .var("c", account())
        .var("amount", amount())
        .stmt(lookup("c"))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = bal + ? WHERE custid = ?",
            &[],
            &["CHECKING"],
            vec![P::var("amount"), P::var("c")],
        ))
}

fn send_payment() -> TransactionTemplate {
    TransactionTemplate::new("SendPayment", TemplateClass::Online, 17)
        .describe("Transfer between two checking accounts.")
        .var("c1", account())
        .var("c2", account())
        .var("amount", amount())
        .stmt(lookup("c1"))
        .stmt(lookup("c2"))
        .stmt(S::read("SELECT bal FROM CHECKING WHERE custid = ?", &["CHECKING"], vec![P::var(
            "c1",
        )]))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = bal - ? WHERE custid = ?",
            &[],
            &["CHECKING"],
            vec![P::var("amount"), P::var("c1")],
        ))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = bal + ? WHERE custid = ?",
            &[],
            &["CHECKING"],
            vec![P::var("amount"), P::var("c2")],
        ))
}

fn transact_savings() -> TransactionTemplate {
    TransactionTemplate::new("TransactSavings", TemplateClass::Online, 17)
        .describe("Withdraw from a savings account.")
        .var("c", account())
        .var("amount", amount())
        .stmt(lookup("c"))
        .stmt(S::write(
            "UPDATE SAVING SET bal = bal - ? WHERE custid = ?",
            &[],
            &["SAVING"],
            vec![P::var("amount"), P::var("c")],
        ))
}

fn write_check() -> TransactionTemplate {
    TransactionTemplate::new("WriteCheck", TemplateClass::Online, 17)
        .describe("Cash a check, charging a one-unit penalty when total funds fall short.")
        .var("c", account())
        .var("amount", amount())
        .stmt(lookup("c"))
        .stmt(S::read("SELECT bal FROM SAVING WHERE custid = ?", &["SAVING"], vec![P::var("c")]))
        .stmt(S::read("SELECT bal FROM CHECKING WHERE custid = ?", &["CHECKING"], vec![P::var(
            "c",
        )]))
        .stmt(S::write(
            "UPDATE CHECKING SET bal = bal - CASE WHEN \
             (SELECT bal FROM SAVING WHERE custid = ?) + \
             (SELECT b FROM (SELECT bal AS b FROM CHECKING WHERE custid = ?) AS cur) < ? \
             THEN ? + 1 ELSE ? END WHERE custid = ?",
            &["SAVING", "CHECKING"],
            &["CHECKING"],
            vec![
                P::var("c"),
                P::var("c"),
                P::var("amount"),
                P::var("amount"),
                P::var("amount"),
                P::var("c"),
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
            "Account name query: names and checking balances from joined ACCOUNT and CHECKING rows.",
            S::read(
                "SELECT a.name, c.bal FROM ACCOUNT a, CHECKING c \
                 WHERE a.custid = c.custid AND c.bal > ? ORDER BY c.bal DESC, a.custid LIMIT 100",
                &["ACCOUNT", "CHECKING"],
                vec![P::uniform(5_000, 9_000)],
            ),
        ),
        query(
            "Q2",
            "Asset tiers: customers and total assets grouped by savings tier.",
            S::read(
                "SELECT CASE WHEN s.bal < 1000 THEN 'low' WHEN s.bal < 5000 THEN 'mid' \
                 ELSE 'high' END AS tier, COUNT(*) AS customers, SUM(s.bal + c.bal) AS assets \
                 FROM SAVING s, CHECKING c WHERE s.custid = c.custid \
                 GROUP BY tier ORDER BY tier",
                &["SAVING", "CHECKING"],
                vec![],
            ),
        ),
        query(
            "Q3",
            "Customers whose savings exceed the average savings balance (sub-selection).",
            S::read(
                "SELECT a.custid, a.name, s.bal FROM ACCOUNT a, SAVING s \
                 WHERE a.custid = s.custid AND s.bal > (SELECT AVG(bal) FROM SAVING) \
                 ORDER BY s.bal DESC, a.custid LIMIT 100",
                &["ACCOUNT", "SAVING"],
                vec![],
            ),
        ),
        query(
            "Q4",
            "Overdrawn or nearly empty checking accounts ordered by name.",
            S::read(
                "SELECT a.name, c.bal FROM ACCOUNT a, CHECKING c \
                 WHERE a.custid = c.custid AND c.bal < ? ORDER BY a.name, a.custid LIMIT 100",
                &["ACCOUNT", "CHECKING"],
                vec![P::uniform(0, 50)],
            ),
        ),
    ]
}

fn hybrid() -> Vec<HybridTemplate> {
    vec![
        HybridTemplate::new(
            "X1",
            amalgamate(),
            S::read("SELECT MAX(bal) FROM CHECKING", &["CHECKING"], vec![]),
            2,
            16,
        )
        .describe("Amalgamate after checking the largest checking balance."),
        HybridTemplate::new(
            "X2",
            balance(),
            S::read("SELECT AVG(bal) FROM SAVING", &["SAVING"], vec![]),
            1,
            20,
        )
        .describe("Balance compared against the average savings balance."),
        HybridTemplate::new(
            "X3",
            deposit_checking(),
            S::read(
                "SELECT COUNT(*), SUM(bal) FROM CHECKING WHERE custid BETWEEN ? AND ? + 1000",
                &["CHECKING"],
                vec![P::var("c"), P::var("c")],
            ),
            1,
            16,
        )
        .describe("DepositChecking with the neighbouring accounts' checking total."),
        HybridTemplate::new(
            "X4",
            send_payment(),
            S::read(
                "SELECT COUNT(*) FROM CHECKING WHERE bal < ?",
                &["CHECKING"],
                vec![P::var("amount")],
            ),
            3,
            16,
        )
        .describe("SendPayment after counting accounts below the transfer amount."),
        HybridTemplate::new(
            "X5",
            transact_savings(),
            S::read("SELECT MIN(bal), MAX(bal) FROM SAVING", &["SAVING"], vec![]),
            1,
            16,
        )
        .describe("TransactSavings with the savings balance range."),
        HybridTemplate::new(
            "X6",
            write_check(),
            S::read(
                "SELECT c.bal, (SELECT MIN(bal) FROM SAVING) FROM CHECKING c WHERE c.custid = ?",
                &["CHECKING", "SAVING"],
                vec![P::var("c")],
            ),
            3,
            16,
        )
        .describe("Checking balance transaction: check funds and the minimum savings value."),
    ]
}

pub(super) fn catalog() -> Result<BenchmarkCatalog, CatalogError> {
    BenchmarkCatalog::new(
        "fibenchmark",
        tables(),
        vec![
            amalgamate(),
            balance(),
            deposit_checking(),
            send_payment(),
            transact_savings(),
            write_check(),
        ],
        analytical(),
        hybrid(),
    )
}
