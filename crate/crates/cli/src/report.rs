//! Consolidated summary over a directory of experiment outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{evaluate_checks, CheckResult};
use crate::config::ExperimentConfig;
use crate::experiments::Summary;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub kind: String,
    pub rows_ok: usize,
    pub rows_failed: usize,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: Option<u32>,
    pub experiments: Vec<ExperimentReport>,
    pub checks_passed: usize,
    pub checks_failed: usize,
}

/// Reads every `summary.json` below `dir` and re-evaluates the checks of its embedded config.
pub fn report(dir: &Path) -> Result<Report, CliError> {
    let mut paths: Vec<_> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.file_name() == "summary.json")
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    let mut version = None;
    let mut experiments = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let s: Summary = serde_json::from_str(&text)
            .map_err(|e| CliError::Schema(format!("{}: not a summary file: {e}", p.display())))?;
        match version {
            None => version = Some(s.schema_version),
            Some(v) if v != s.schema_version => {
                return Err(CliError::Schema(format!(
                    "{} has schema version {} but earlier summaries have {v}",
                    p.display(),
                    s.schema_version
                )))
            }
            _ => {}
        }
        let checks = match ExperimentConfig::parse(&s.config) {
            Ok(cfg) => evaluate_checks(&cfg.checks, &s.metrics),
            Err(_) => s.checks.clone(),
        };
        experiments.push(ExperimentReport {
            id: s.id,
            kind: s.kind,
            rows_ok: s.rows_ok,
            rows_failed: s.rows_failed,
            checks,
        });
    }
    let passed = experiments.iter().flat_map(|e| &e.checks).filter(|c| c.passed).count();
    let total: usize = experiments.iter().map(|e| e.checks.len()).sum();
    Ok(Report {
        schema_version: version,
        experiments,
        checks_passed: passed,
        checks_failed: total - passed,
    })
}
