//! Width tables and density dumps for the reference phase measure.

use serde::{Deserialize, Serialize};

use qrf::phasepovm::PhaseMeasure;

use crate::error::CliError;
use crate::output::{csv_real, Header};
use crate::scenario::Resolved;

pub const WIDTH_FILE: &str = "width.csv";
pub const DENSITY_FILE: &str = "density.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub eps: f64,
    pub width: f64,
    pub center: f64,
    pub width0: f64,
    /// Set when every center attains the width and the reported one is a
    /// tie-break.
    pub tie_break: Option<String>,
}

pub fn measure(s: &Resolved) -> Result<PhaseMeasure, CliError> {
    Ok(s.povm.phase_measure(&s.omega)?)
}

pub fn width_table(m: &PhaseMeasure, eps: &[f64]) -> Result<Vec<WidthRow>, CliError> {
    eps.iter()
        .map(|&e| {
            let w = m.overall_width(e)?;
            Ok(WidthRow {
                eps: e,
                width: w.width,
                center: w.center,
                width0: m.overall_width_around_zero(e)?,
                tie_break: (e == 0.0).then(|| "smallest_center".to_string()),
            })
        })
        .collect()
}

pub fn width_csv(header: &Header, rows: &[WidthRow]) -> String {
    let mut out = header.comment_block();
    out.push_str("eps,W_eps,center,W0_eps,tie_break\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_real(r.eps),
            csv_real(r.width),
            csv_real(r.center),
            csv_real(r.width0),
            r.tie_break.as_deref().unwrap_or("")
        ));
    }
    out
}

pub fn density_csv(header: &Header, m: &PhaseMeasure, n: usize) -> String {
    let mut out = header.comment_block();
    out.push_str("theta,f\n");
    for (theta, f) in m.sample_density(n) {
        out.push_str(&format!("{},{}\n", csv_real(theta), csv_real(f)));
    }
    out
}
