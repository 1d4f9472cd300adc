//! Header blocks and file writers shared by the commands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TOOL: &str = "qrf";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario_digest: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Header {
    pub fn new(command: &str, scenario_digest: &str, seed: u64, timestamp: bool) -> Self {
        let timestamp = timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            scenario_digest: scenario_digest.into(),
            seed,
            timestamp,
        }
    }

    /// `# key=value` lines for CSV files.
    pub fn comment_block(&self) -> String {
        let mut out = format!(
            "# tool={} version={} command={}\n# scenario_digest={}\n# seed={}\n",
            self.tool, self.version, self.command, self.scenario_digest, self.seed
        );
        if let Some(t) = self.timestamp {
            out.push_str(&format!("# timestamp={t}\n"));
        }
        out
    }
}

pub fn prepare_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Header line followed by one JSON object per row.
pub fn write_jsonl<T: Serialize>(path: &Path, header: &Header, rows: &[T]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(header).expect("header serialises"))?;
    for row in rows {
        writeln!(w, "{}", serde_json::to_string(row).expect("row serialises"))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-tripping decimal, or an empty field for non-finite values.
pub fn csv_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

/// Strips `#` lines so the remainder parses as plain CSV.
pub fn csv_body(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.starts_with('#'))
}
