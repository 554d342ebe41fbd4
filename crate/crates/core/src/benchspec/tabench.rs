//! Telecom suite. Online side follows TATP. SUBSCRIBER is keyed on
//! `(s_id, sf_type)`, where `sf_type` is the subscriber's primary facility;
//! a unique index on `s_id` keeps it a valid foreign-key target.

use super::schema::{SqlType, TableDef};
use super::template::{
    HybridTemplate, ParamGen as P, StatementTemplate as S, StringPattern, TemplateClass,
    TransactionTemplate,
};
use super::{BenchmarkCatalog, CatalogError};

/// SUBSCRIBER rows per scale unit. ACCESS_INFO, SPECIAL_FACILITY and
/// CALL_FORWARDING each hold two rows per subscriber.
pub const SUBSCRIBERS_PER_SCALE: u64 = 100_000;
pub const SUB_NBR_WIDTH: usize = 15;

use SqlType::Integer;

fn tables() -> Vec<TableDef> {
    let mut subscriber = TableDef::new("SUBSCRIBER")
        .col("s_id", Integer)
        .col("sf_type", Integer)
        .col("sub_nbr", SqlType::Varchar(15));
    for i in 1..=10 {
        subscriber = subscriber.col(&format!("bit_{i}"), Integer);
    }
    for i in 1..=10 {
        subscriber = subscriber.col(&format!("hex_{i}"), Integer);
    }
    for i in 1..=9 {
        subscriber = subscriber.col(&format!("byte2_{i}"), Integer);
    }
    let subscriber = subscriber
        .col("msc_location", Integer)
        .col("vlr_location", Integer)
        .pk(&["s_id", "sf_type"])
        .unique_index("idx_subscriber_s_id", &["s_id"])
        .unique_index("idx_subscriber_sub_nbr", &["sub_nbr"]);

    let access_info = TableDef::new("ACCESS_INFO")
        .col("s_id", Integer)
        .col("ai_type", Integer)
        .col("data1", Integer)
        .col("data2", Integer)
        .col("data3", SqlType::Varchar(3))
        .col("data4", SqlType::Varchar(5))
        .pk(&["s_id", "ai_type"])
        .fk(&["s_id"], "SUBSCRIBER", &["s_id"]);

    let special_facility = TableDef::new("SPECIAL_FACILITY")
        .col("s_id", Integer)
        .col("sf_type", Integer)
        .col("is_active", Integer)
        .col("error_cntrl", Integer)
        .col("data_a", Integer)
        .col("data_b", SqlType::Varchar(5))
        .pk(&["s_id", "sf_type"])
        .index("idx_special_facility_active", &["sf_type", "is_active"])
        .fk(&["s_id"], "SUBSCRIBER", &["s_id"]);

    let call_forwarding = TableDef::new("CALL_FORWARDING")
        .col("s_id", Integer)
        .col("sf_type", Integer)
        .col("start_time", Integer)
        .col("end_time", Integer)
        .col("numberx", SqlType::Varchar(15))
        .pk(&["s_id", "sf_type", "start_time"])
        .index("idx_call_forwarding_start", &["start_time"])
        .index("idx_call_forwarding_number", &["numberx"])
        .fk(&["s_id", "sf_type"], "SPECIAL_FACILITY", &["s_id", "sf_type"]);

    vec![subscriber, access_info, special_facility, call_forwarding]
}

fn subscriber() -> P {
    P::scaled(SUBSCRIBERS_PER_SCALE)
}

fn sub_nbr() -> P {
    P::Pattern(StringPattern::PaddedId { per_scale: SUBSCRIBERS_PER_SCALE, width: SUB_NBR_WIDTH })
}

fn start_time() -> P {
    // Slot index; start times are 0, 8 or 16.
    P::uniform(0, 2)
}

const SID_BY_NBR: &str = "(SELECT s_id FROM SUBSCRIBER WHERE sub_nbr = ?)";

fn get_subscriber_data() -> TransactionTemplate {
    TransactionTemplate::new("GetSubscriberData", TemplateClass::Online, 35)
        .describe("Read one subscriber row.")
        .var("s", subscriber())
        .stmt(S::read("SELECT * FROM SUBSCRIBER WHERE s_id = ?", &["SUBSCRIBER"], vec![P::var(
            "s",
        )]))
}

fn get_new_destination() -> TransactionTemplate {
    TransactionTemplate::new("GetNewDestination", TemplateClass::Online, 10)
        .describe("Find the forwarding number active at a given hour.")
        .var("s", subscriber())
        .var("sf", P::uniform(1, 4))
        .var("slot", start_time())
        .var("end", P::uniform(1, 24))
        .stmt(S::read(
            "SELECT cf.numberx FROM SPECIAL_FACILITY sf, CALL_FORWARDING cf \
             WHERE sf.s_id = ? AND sf.sf_type = ? AND sf.is_active = 1 \
             AND cf.s_id = sf.s_id AND cf.sf_type = sf.sf_type \
             AND cf.start_time <= ? * 8 AND cf.end_time > ?",
            &["SPECIAL_FACILITY", "CALL_FORWARDING"],
            vec![P::var("s"), P::var("sf"), P::var("slot"), P::var("end")],
        ))
}

fn get_access_data() -> TransactionTemplate {
    TransactionTemplate::new("GetAccessData", TemplateClass::Online, 35)
        .describe("Read one access-info record.")
        .var("s", subscriber())
        .var("ai", P::uniform(1, 4))
        .stmt(S::read(
            "SELECT data1, data2, data3, data4 FROM ACCESS_INFO WHERE s_id = ? AND ai_type = ?",
            &["ACCESS_INFO"],
            vec![P::var("s"), P::var("ai")],
        ))
}

fn update_subscriber_data() -> TransactionTemplate {
    TransactionTemplate::new("UpdateSubscriberData", TemplateClass::Online, 2)
        .describe("Flip a subscriber bit and update one special-facility record.")
        .var("s", subscriber())
        .var("sf", P::uniform(1, 4))
        .stmt(S::write(
            "UPDATE SUBSCRIBER SET bit_1 = ? WHERE s_id = ?",
            &[],
            &["SUBSCRIBER"],
            vec![P::uniform(0, 1), P::var("s")],
        ))
        .stmt(S::write(
            "UPDATE SPECIAL_FACILITY SET data_a = ? WHERE s_id = ? AND sf_type = ?",
            &[],
            &["SPECIAL_FACILITY"],
            vec![P::uniform(0, 255), P::var("s"), P::var("sf")],
        ))
}

fn update_location() -> TransactionTemplate {
    TransactionTemplate::new("UpdateLocation", TemplateClass::Online, 14)
        .describe("Move a subscriber, looked up by number, to a new VLR location.")
        .var("nbr", sub_nbr())
        .stmt(S::read("SELECT s_id FROM SUBSCRIBER WHERE sub_nbr = ?", &["SUBSCRIBER"], vec![
            P::var("nbr"),
        ]))
        .stmt(S::write(
            "UPDATE SUBSCRIBER SET vlr_location = ? WHERE sub_nbr = ?",
            &["SUBSCRIBER"],
            &["SUBSCRIBER"],
            vec![P::uniform(1, i64::from(i32::MAX)), P::var("nbr")],
        ))
}

fn insert_call_forwarding() -> TransactionTemplate {
    TransactionTemplate::new("InsertCallForwarding", TemplateClass::Online, 2)
        .describe("Add a call-forwarding entry; a no-op when the facility is missing or taken.")
        .var("nbr", sub_nbr())
        .var("sf", P::uniform(1, 4))
        .var("slot", start_time())
        .var("len", P::uniform(1, 8))
        .stmt(S::read("SELECT s_id FROM SUBSCRIBER WHERE sub_nbr = ?", &["SUBSCRIBER"], vec![
            P::var("nbr"),
        ]))
        .stmt(S::read(
            &format!("SELECT sf_type FROM SPECIAL_FACILITY WHERE s_id = {SID_BY_NBR}"),
            &["SPECIAL_FACILITY", "SUBSCRIBER"],
            vec![P::var("nbr")],
        ))
        .stmt(S::write(
            &format!(
                "INSERT INTO CALL_FORWARDING (s_id, sf_type, start_time, end_time, numberx) \
                 SELECT sf.s_id, sf.sf_type, ? * 8, ? * 8 + ?, ? FROM SPECIAL_FACILITY sf \
                 WHERE sf.s_id = {SID_BY_NBR} AND sf.sf_type = ? AND NOT EXISTS \
                 (SELECT 1 FROM CALL_FORWARDING cf WHERE cf.s_id = sf.s_id \
                  AND cf.sf_type = sf.sf_type AND cf.start_time = ? * 8)"
            ),
            &["SPECIAL_FACILITY", "SUBSCRIBER", "CALL_FORWARDING"],
            &["CALL_FORWARDING"],
            vec![
                P::var("slot"),
                P::var("slot"),
                P::var("len"),
                P::mask("###############"),
                P::var("nbr"),
                P::var("sf"),
                P::var("slot"),
            ],
        ))
}

fn delete_call_forwarding() -> TransactionTemplate {
    TransactionTemplate::new("DeleteCallForwarding", TemplateClass::Online, 2)
        .describe("Remove a call-forwarding entry of a subscriber looked up by number.")
        .var("nbr", sub_nbr())
        .var("sf", P::uniform(1, 4))
        .var("slot", start_time())
        .stmt(S::read("SELECT s_id FROM SUBSCRIBER WHERE sub_nbr = ?", &["SUBSCRIBER"], vec![
            P::var("nbr"),
        ]))
        .stmt(S::write(
            &format!(
                "DELETE FROM CALL_FORWARDING WHERE s_id = {SID_BY_NBR} \
                 AND sf_type = ? AND start_time = ? * 8"
            ),
            &["CALL_FORWARDING", "SUBSCRIBER"],
            &["CALL_FORWARDING"],
            vec![P::var("nbr"), P::var("sf"), P::var("slot")],
        ))
}

fn query(name: &str, description: &str, stmt: S) -> TransactionTemplate {
    TransactionTemplate::new(name, TemplateClass::Analytical, 1).describe(description).stmt(stmt)
}

fn analytical() -> Vec<TransactionTemplate> {
    vec![
        query(
            "Q1",
            "Special facility activity per facility type.",
            S::read(
                "SELECT sf_type, COUNT(*) AS facilities, SUM(is_active) AS active, \
                 AVG(error_cntrl) AS avg_error FROM SPECIAL_FACILITY \
                 GROUP BY sf_type ORDER BY sf_type",
                &["SPECIAL_FACILITY"],
                vec![],
            ),
        ),
        query(
            "Q2",
            "Subscriber distribution over location regions.",
            S::read(
                "SELECT vlr_location % 16 AS region, COUNT(*) AS subscribers, \
                 AVG(msc_location) AS avg_msc FROM SUBSCRIBER \
                 GROUP BY region ORDER BY subscribers DESC, region",
                &["SUBSCRIBER"],
                vec![],
            ),
        ),
        query(
            "Q3",
            "Start time query: average forwarding start time and duration per facility type.",
            S::read(
                "SELECT sf_type, AVG(start_time) AS avg_start, \
                 AVG(end_time - start_time) AS avg_duration, COUNT(*) AS entries \
                 FROM CALL_FORWARDING GROUP BY sf_type ORDER BY sf_type",
                &["CALL_FORWARDING"],
                vec![],
            ),
        ),
        query(
            "Q4",
            "Access data of subscribers with bit_1 set, per access type.",
            S::read(
                "SELECT ai.ai_type, COUNT(*) AS records, AVG(ai.data1 + ai.data2) AS avg_data \
                 FROM ACCESS_INFO ai, SUBSCRIBER s WHERE ai.s_id = s.s_id AND s.bit_1 = ? \
                 GROUP BY ai.ai_type ORDER BY ai.ai_type",
                &["ACCESS_INFO", "SUBSCRIBER"],
                vec![P::uniform(0, 1)],
            ),
        ),
        query(
            "Q5",
            "Subscribers with more forwarding entries than average (sub-selection).",
            S::read(
                "SELECT s.s_id, s.sub_nbr, COUNT(*) AS entries \
                 FROM SUBSCRIBER s, CALL_FORWARDING cf WHERE cf.s_id = s.s_id \
                 GROUP BY s.s_id, s.sub_nbr \
                 HAVING COUNT(*) > (SELECT COUNT(*) FROM CALL_FORWARDING) * 1.0 / \
                 (SELECT COUNT(*) FROM SUBSCRIBER) \
                 ORDER BY entries DESC, s.s_id LIMIT 50",
                &["SUBSCRIBER", "CALL_FORWARDING"],
                vec![],
            ),
        ),
    ]
}

fn hybrid() -> Vec<HybridTemplate> {
    vec![
        HybridTemplate::new(
            "X1",
            delete_call_forwarding(),
            S::read(
                "SELECT COUNT(*) FROM CALL_FORWARDING WHERE sf_type = ?",
                &["CALL_FORWARDING"],
                vec![P::var("sf")],
            ),
            1,
            20,
        )
        .describe("DeleteCallForwarding after counting forwarding entries of that type."),
        HybridTemplate::new(
            "X2",
            get_new_destination(),
            S::read(
                "SELECT COUNT(*), AVG(end_time - start_time) FROM CALL_FORWARDING \
                 WHERE sf_type = ?",
                &["CALL_FORWARDING"],
                vec![P::var("sf")],
            ),
            0,
            10,
        )
        .describe("GetNewDestination with the average forwarding duration."),
        HybridTemplate::new(
            "X3",
            get_access_data(),
            S::read(
                "SELECT AVG(data1), MAX(data2) FROM ACCESS_INFO WHERE ai_type = ?",
                &["ACCESS_INFO"],
                vec![P::var("ai")],
            ),
            1,
            15,
        )
        .describe("GetAccessData with aggregate access statistics."),
        HybridTemplate::new(
            "X4",
            update_subscriber_data(),
            S::read(
                "SELECT SUM(is_active) FROM SPECIAL_FACILITY WHERE sf_type = ?",
                &["SPECIAL_FACILITY"],
                vec![P::var("sf")],
            ),
            1,
            20,
        )
        .describe("UpdateSubscriberData after counting active facilities of that type."),
        HybridTemplate::new(
            "X5",
            update_location(),
            S::read(
                "SELECT COUNT(*) FROM SUBSCRIBER WHERE msc_location < ?",
                &["SUBSCRIBER"],
                vec![P::uniform(1, i64::from(i32::MAX))],
            ),
            1,
            20,
        )
        .describe("UpdateLocation with the number of subscribers below an MSC location."),
        HybridTemplate::new(
            "X6",
            get_subscriber_data(),
            S::read(
                "SELECT s_id FROM SUBSCRIBER WHERE sub_nbr LIKE ?",
                &["SUBSCRIBER"],
                vec![P::mask("%####%")],
            ),
            1,
            15,
        )
        .describe("Fuzzy search: subscriber data plus ids whose number matches a substring."),
    ]
}

pub(super) fn catalog() -> Result<BenchmarkCatalog, CatalogError> {
    BenchmarkCatalog::new(
        "tabenchmark",
        tables(),
        vec![
            delete_call_forwarding(),
            get_access_data(),
            get_new_destination(),
            get_subscriber_data(),
            insert_call_forwarding(),
            update_location(),
            update_subscriber_data(),
        ],
        analytical(),
        hybrid(),
    )
}
