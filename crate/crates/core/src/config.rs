//! Flat `key = value` configuration files.
//!
//! Keys are the [`AnalysisConfig`] field names. Blank lines and `#` comments
//! are ignored; missing keys keep their defaults.
//!
//! ```text
//! period = 2004-2008
//! min_publishing_share = 0.5
//! baseline_scope = cited_only
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::AnalysisConfig;

pub const KEYS: [&str; 6] = [
    "period",
    "min_publishing_share",
    "min_staff_university",
    "min_staff_uda",
    "baseline_scope",
    "multi_category_rule",
];

pub fn parse_config(text: &str) -> Result<AnalysisConfig> {
    let mut cfg = AnalysisConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected 'key = value'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!(
                "line {lineno}: duplicate key '{key}'"
            )));
        }
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("line {lineno}: {key}: {e}"));
        match key {
            "period" => cfg.period = value.parse().map_err(|e: Error| bad(&e))?,
            "min_publishing_share" => {
                cfg.min_publishing_share = value.parse().map_err(|e| bad(&e))?
            }
            "min_staff_university" => {
                cfg.min_staff_university = value.parse().map_err(|e| bad(&e))?
            }
            "min_staff_uda" => cfg.min_staff_uda = value.parse().map_err(|e| bad(&e))?,
            "baseline_scope" => cfg.baseline_scope = value.parse().map_err(|e: Error| bad(&e))?,
            "multi_category_rule" => {
                cfg.multi_category_rule = value.parse().map_err(|e: Error| bad(&e))?
            }
            other => {
                return Err(Error::Config(format!(
                    "line {lineno}: unknown key '{other}' (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<AnalysisConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Serializes every key, in [`KEYS`] order; `parse_config` reads it back unchanged.
pub fn config_to_string(cfg: &AnalysisConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "period = {}", cfg.period);
    let _ = writeln!(s, "min_publishing_share = {}", cfg.min_publishing_share);
    let _ = writeln!(s, "min_staff_university = {}", cfg.min_staff_university);
    let _ = writeln!(s, "min_staff_uda = {}", cfg.min_staff_uda);
    let _ = writeln!(s, "baseline_scope = {}", cfg.baseline_scope);
    let _ = writeln!(s, "multi_category_rule = {}", cfg.multi_category_rule);
    s
}
