//! Shared helpers for the acceptance target.

use std::path::PathBuf;

/// Path of a bundled example config under `configs/`.
pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// One acceptance line: criterion id, verdict and the measured numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(id: &str, pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            id: id.to_string(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}
