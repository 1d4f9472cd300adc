//! Trade-off curves: best achievable distance against reference size.

use serde::{Deserialize, Serialize};

use qrf::search::{tradeoff_curve, ReferenceFamily, TradeoffTable};

use crate::error::CliError;
use crate::output::Header;
use crate::scenario::Resolved;

pub const CSV_FILE: &str = "tradeoff.csv";
pub const JSON_FILE: &str = "tradeoff.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub header: Header,
    pub table: TradeoffTable,
}

pub fn run(s: &Resolved, family: ReferenceFamily, dims: &[usize]) -> Result<TradeoffTable, CliError> {
    if dims.is_empty() {
        return Err(CliError::Usage("--dims needs at least one dimension".into()));
    }
    let mut opts = s.search.clone();
    opts.seed = s.seed;
    Ok(tradeoff_curve(family, &s.sys, &s.a, dims, &opts)?)
}

pub fn csv(header: &Header, table: &TradeoffTable) -> String {
    let mut out = header.comment_block();
    out.push_str(&format!("# family={}\n", table.family));
    out.push_str(&table.to_csv());
    out
}

pub fn certificate_failures(table: &TradeoffTable) -> usize {
    table.results.iter().filter(|r| r.certificate.is_failure()).count()
}
