//! Summary metrics, rank correlations and threshold checks over result rows.

use std::collections::BTreeMap;

use hcpinn::linalg::spearman;
use serde::{Deserialize, Serialize};

use crate::config::Check;
use crate::table::Row;

/// Columns that identify a row rather than measure it.
const ID_COLUMNS: [&str; 5] = ["row", "seed", "width", "depth", "epochs_planned"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub stratum: String,
    pub feature: String,
    pub target: String,
    pub n: usize,
    pub rho: Option<f64>,
    /// `ok` or `undefined`.
    pub status: String,
}

fn column_pairs(rows: &[&Row], feature: &str, target: &str) -> (Vec<f64>, Vec<f64>) {
    rows.iter()
        .filter_map(|r| {
            let (x, y) = (r.get_f64(feature)?, r.get_f64(target)?);
            (x.is_finite() && y.is_finite()).then_some((x, y))
        })
        .unzip()
}

fn one(stratum: &str, rows: &[&Row], feature: &str, target: &str) -> Correlation {
    let (x, y) = column_pairs(rows, feature, target);
    let rho = if x.len() >= 3 { spearman(&x, &y).ok() } else { None };
    Correlation {
        stratum: stratum.to_string(),
        feature: feature.to_string(),
        target: target.to_string(),
        n: x.len(),
        rho,
        status: if rho.is_some() { "ok" } else { "undefined" }.into(),
    }
}

/// Spearman correlation of every (feature, target) pair over ok rows, overall and per stratum.
pub fn correlate(rows: &[Row], features: &[String], targets: &[String], stratify: Option<&str>) -> Vec<Correlation> {
    let ok: Vec<&Row> = rows.iter().filter(|r| r.is_ok()).collect();
    let mut strata: Vec<(String, Vec<&Row>)> = vec![("all".into(), ok.clone())];
    if let Some(col) = stratify {
        let mut keys: Vec<String> = Vec::new();
        for r in &ok {
            if let Some(k) = r.get_text(col) {
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        for k in keys {
            let members = ok.iter().copied().filter(|r| r.get_text(col).as_deref() == Some(k.as_str())).collect();
            strata.push((k, members));
        }
    }
    let mut out = Vec::new();
    for (name, members) in &strata {
        for f in features {
            for t in targets {
                out.push(one(name, members, f, t));
            }
        }
    }
    out
}

pub fn correlation_rows(corr: &[Correlation]) -> Vec<Row> {
    corr.iter()
        .map(|c| {
            let mut r = Row::default();
            r.text("stratum", &c.stratum)
                .text("feature", &c.feature)
                .text("target", &c.target)
                .int("n", c.n as i64);
            match c.rho {
                Some(v) => r.num("rho", v),
                None => r.text("rho", ""),
            };
            r.text("status", &c.status);
            r
        })
        .collect()
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: usize,
    min: f64,
    max: f64,
}

impl Acc {
    fn push(&mut self, v: f64) {
        if self.n == 0 {
            self.min = v;
            self.max = v;
        }
        self.sum += v;
        self.n += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }
}

/// `mean.<col>`, `mean.<group>.<col>` and `family_{mean,min,max}.<family>.<col>` over ok rows,
/// plus row counts.
pub fn summary_metrics(rows: &[Row]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<(String, String), Acc> = BTreeMap::new();
    let mut m = BTreeMap::new();
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    m.insert("count.ok".into(), ok as f64);
    m.insert("count.failed".into(), (rows.len() - ok) as f64);
    for r in rows {
        if !r.is_ok() {
            if let Some(f) = r.get_text("family") {
                *m.entry(format!("family_failed.{f}")).or_insert(0.0) += 1.0;
            }
            continue;
        }
        let group = r.get_text("group");
        let family = r.get_text("family");
        for (k, c) in &r.cells {
            if ID_COLUMNS.contains(&k.as_str()) || matches!(c, crate::table::Cell::Text(_)) {
                continue;
            }
            let Some(v) = c.as_f64() else { continue };
            if !v.is_finite() {
                continue;
            }
            acc.entry(("mean".into(), k.clone())).or_default().push(v);
            if let Some(g) = &group {
                acc.entry((format!("group.{g}"), k.clone())).or_default().push(v);
            }
            if let Some(f) = &family {
                acc.entry((format!("family.{f}"), k.clone())).or_default().push(v);
            }
        }
    }
    for ((scope, col), a) in acc {
        let mean = a.sum / a.n as f64;
        if scope == "mean" {
            m.insert(format!("mean.{col}"), mean);
        } else if let Some(g) = scope.strip_prefix("group.") {
            m.insert(format!("mean.{g}.{col}"), mean);
        } else if let Some(f) = scope.strip_prefix("family.") {
            m.insert(format!("family_mean.{f}.{col}"), mean);
            m.insert(format!("family_min.{f}.{col}"), a.min);
            m.insert(format!("family_max.{f}.{col}"), a.max);
        }
    }
    m
}

/// `spearman.<stratum>.<feature>.<target>` entries for defined correlations.
pub fn correlation_metrics(corr: &[Correlation], into: &mut BTreeMap<String, f64>) {
    for c in corr {
        if let Some(r) = c.rho {
            into.insert(format!("spearman.{}.{}.{}", c.stratum, c.feature, c.target), r);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn evaluate_checks(checks: &[Check], metrics: &BTreeMap<String, f64>) -> Vec<CheckResult> {
    checks.iter().map(|c| evaluate(c, metrics)).collect()
}

fn evaluate(c: &Check, metrics: &BTreeMap<String, f64>) -> CheckResult {
    let mut passed = true;
    let mut detail = Vec::new();
    if let Some(name) = &c.metric {
        match metrics.get(name) {
            Some(&v) => {
                if let Some(lo) = c.min {
                    passed &= v >= lo;
                }
                if let Some(hi) = c.max {
                    passed &= v <= hi;
                }
                detail.push(format!("{name} = {v:e}"));
            }
            None => {
                passed = false;
                detail.push(format!("{name} missing"));
            }
        }
    }
    for (list, dir) in [(&c.decreasing, -1.0), (&c.increasing, 1.0)] {
        if list.is_empty() {
            continue;
        }
        let vals: Vec<Option<f64>> = list.iter().map(|n| metrics.get(n).copied()).collect();
        if vals.iter().any(Option::is_none) {
            passed = false;
            detail.push("ordering metric missing".into());
            continue;
        }
        let vals: Vec<f64> = vals.into_iter().flatten().collect();
        passed &= vals.windows(2).all(|w| dir * (w[1] - w[0]) > 0.0);
        let s: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
        detail.push(format!("{} [{}]", if dir < 0.0 { "decreasing" } else { "increasing" }, s.join(", ")));
    }
    CheckResult {
        name: c.name.clone(),
        passed,
        detail: detail.join("; "),
    }
}
