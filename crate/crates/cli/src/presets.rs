//! Scenarios shipped with the tool.

use crate::error::CliError;
use crate::scenario::Scenario;

pub const PRESETS: &[(&str, &str)] = &[
    ("paper-qubit-uniform-d2", include_str!("../presets/paper-qubit-uniform-d2.json")),
    ("paper-qubit-uniform-d4", include_str!("../presets/paper-qubit-uniform-d4.json")),
    ("paper-qubit-uniform-d8", include_str!("../presets/paper-qubit-uniform-d8.json")),
    ("paper-qubit-uniform-d16", include_str!("../presets/paper-qubit-uniform-d16.json")),
    ("paper-number-eigenstate", include_str!("../presets/paper-number-eigenstate.json")),
    ("mt-lemma-grid", include_str!("../presets/mt-lemma-grid.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<Scenario, CliError> {
    let text = source(name).ok_or_else(|| {
        let known: Vec<&str> = names().collect();
        CliError::Usage(format!("unknown preset {name:?}; known: {}", known.join(", ")))
    })?;
    Scenario::from_json(text)
}
