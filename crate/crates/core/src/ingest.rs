//! Daily aggregation of raw transactions into BG/NBD summaries.
//!
//! A customer's time origin is their first purchase day. x counts distinct
//! purchase days after that first one; t_x and T are whole days from it.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::CustomerSummary;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRecord {
    customer_id: String,
    purchase_date: NaiveDate,
}

impl TransactionRecord {
    /// The id is stored trimmed and must not be empty.
    pub fn new(customer_id: &str, purchase_date: NaiveDate) -> Result<Self> {
        let id = customer_id.trim();
        if id.is_empty() {
            return Err(Error::usage("customer_id must not be empty"));
        }
        Ok(Self {
            customer_id: id.to_owned(),
            purchase_date,
        })
    }

    pub fn customer_id(&self) -> &str {
        &self.customer_id
    }

    pub fn purchase_date(&self) -> NaiveDate {
        self.purchase_date
    }
}

/// One customer's distinct purchase days in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustomerHistory {
    customer_id: String,
    purchase_days: Vec<NaiveDate>,
}

impl CustomerHistory {
    pub fn new(customer_id: impl Into<String>, purchase_days: Vec<NaiveDate>) -> Result<Self> {
        let customer_id = customer_id.into();
        if purchase_days.is_empty() {
            return Err(Error::usage(format!("customer {customer_id} has no purchases")));
        }
        if purchase_days.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage(format!(
                "purchase days of customer {customer_id} are not strictly increasing"
            )));
        }
        Ok(Self {
            customer_id,
            purchase_days,
        })
    }

    pub fn customer_id(&self) -> &str {
        &self.customer_id
    }

    pub fn purchase_days(&self) -> &[NaiveDate] {
        &self.purchase_days
    }

    pub fn first_day(&self) -> NaiveDate {
        self.purchase_days[0]
    }

    pub fn last_day(&self) -> NaiveDate {
        self.purchase_days[self.purchase_days.len() - 1]
    }
}

/// Groups records by customer, drops same-day repeats and sorts. Output is
/// ordered by customer id.
pub fn aggregate_daily<I>(records: I) -> Vec<CustomerHistory>
where
    I: IntoIterator<Item = TransactionRecord>,
{
    let mut by_customer: BTreeMap<String, BTreeSet<NaiveDate>> = BTreeMap::new();
    for rec in records {
        by_customer
            .entry(rec.customer_id)
            .or_default()
            .insert(rec.purchase_date);
    }
    by_customer
        .into_iter()
        .map(|(customer_id, days)| CustomerHistory {
            customer_id,
            purchase_days: days.into_iter().collect(),
        })
        .collect()
}

/// `(x, t_x, T)` for one customer as of the scoring date.
pub fn summarize(history: &CustomerHistory, as_of: NaiveDate) -> Result<CustomerSummary> {
    if history.purchase_days.is_empty() {
        return Err(Error::usage(format!(
            "customer {} has no purchases",
            history.customer_id
        )));
    }
    let last = history.last_day();
    if as_of < last {
        return Err(Error::DateRange {
            customer: history.customer_id.clone(),
            message: format!("scoring date {as_of} is before the last purchase on {last}"),
        });
    }
    let first = history.first_day();
    let frequency = (history.purchase_days.len() - 1) as u64;
    let recency = (last - first).num_days() as f64;
    let age = (as_of - first).num_days() as f64;
    CustomerSummary::new(frequency, recency, age)
}
