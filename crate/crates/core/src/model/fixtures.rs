//! Bundled fixture files.

use super::json::{parse_model, parse_query, ModelFile};
use super::PatientState;

pub const FIG3_MODEL_JSON: &str = include_str!("../../fixtures/fig3_model.json");
pub const FIG3_QUERY_JSON: &str = include_str!("../../fixtures/fig3_query.json");
pub const F8_PATTERN: &str = include_str!("../../fixtures/f8_pattern.txt");

/// The 8-state gestational diabetes model.
pub fn fig3_model() -> ModelFile {
    parse_model(FIG3_MODEL_JSON).expect("bundled fixture parses")
}

/// Three daily states matching q1, q3 and q4 in order.
pub fn fig3_query() -> Vec<PatientState> {
    parse_query(FIG3_QUERY_JSON, &fig3_model().model).expect("bundled fixture parses")
}
