//! Accounting audits.
//!
//! Two independent checks:
//! * the sum rule: a session's metrics must add up to the sample interval;
//!   the residual `interval - Σ metrics` is positive when time went missing
//!   and negative when some interval was attributed twice;
//! * end-to-end accounting: `T_u = R - W_O - B`, response time minus
//!   database-measured waits minus OS-measured CPU busy time.

use serde::Serialize;

use crate::owi::{DatasetSeries, SessionSnapshot};
use crate::par::{self, Strategy};

pub const DEFAULT_TOLERANCE: f64 = 0.01;

/// Response time `R`, database wait time `W_O` and OS CPU time `B`, in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeAccountingRecord {
    pub response_ms: f64,
    pub db_wait_ms: f64,
    pub os_cpu_ms: f64,
}

impl TimeAccountingRecord {
    pub fn new(response_ms: f64, db_wait_ms: f64, os_cpu_ms: f64) -> Option<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        (ok(response_ms) && ok(db_wait_ms) && ok(os_cpu_ms)).then_some(Self { response_ms, db_wait_ms, os_cpu_ms })
    }
}

/// `R - W_O - B`; negative values mean double counting.
pub fn unaccounted_time(rec: &TimeAccountingRecord) -> f64 {
    rec.response_ms - rec.db_wait_ms - rec.os_cpu_ms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Ok,
    Unaccounted,
    DoubleCounted,
}

impl Classification {
    pub fn of(residual_fraction: f64, tolerance: f64) -> Self {
        if residual_fraction > tolerance {
            Classification::Unaccounted
        } else if residual_fraction < -tolerance {
            Classification::DoubleCounted
        } else {
            Classification::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFinding {
    pub snap_id: u64,
    pub session_id: String,
    pub residual_ms: f64,
    pub residual_fraction: f64,
    pub classification: Classification,
}

pub fn audit_snapshot(s: &SessionSnapshot, tolerance: f64) -> AuditFinding {
    let residual_ms = s.sample_interval_ms - s.metrics.total();
    let residual_fraction = residual_ms / s.sample_interval_ms;
    AuditFinding {
        snap_id: s.snap_id,
        session_id: s.session_id.clone(),
        residual_ms,
        residual_fraction,
        classification: Classification::of(residual_fraction, tolerance),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Totals {
    pub ok: usize,
    pub unaccounted: usize,
    pub double_counted: usize,
}

impl Totals {
    fn add(&mut self, c: Classification) {
        match c {
            Classification::Ok => self.ok += 1,
            Classification::Unaccounted => self.unaccounted += 1,
            Classification::DoubleCounted => self.double_counted += 1,
        }
    }

    pub fn violations(&self) -> usize {
        self.unaccounted + self.double_counted
    }

    pub fn total(&self) -> usize {
        self.ok + self.violations()
    }
}

/// End-to-end accounting result for one snapshot carrying `R`, `W_O`, `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountingFinding {
    pub snap_id: u64,
    pub session_id: String,
    pub record: TimeAccountingRecord,
    pub unaccounted_ms: f64,
    /// `T_u` relative to the sample interval.
    pub fraction: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountingSection {
    pub findings: Vec<AccountingFinding>,
    pub totals: Totals,
    pub worst_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub tolerance: f64,
    /// Non-ok sum-rule findings in (snap_id, session_id) order.
    pub findings: Vec<AuditFinding>,
    pub totals: Totals,
    /// Largest `|residual_fraction|` over all snapshots.
    pub worst_residual_fraction: f64,
    /// Present when at least one snapshot carries an accounting record.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accounting: Option<AccountingSection>,
}

impl AuditReport {
    pub fn has_violations(&self) -> bool {
        self.totals.violations() > 0 || self.accounting.as_ref().is_some_and(|a| a.totals.violations() > 0)
    }
}

pub fn audit_series(d: &DatasetSeries, tolerance: f64) -> AuditReport {
    audit_series_with(d, tolerance, Strategy::default())
}

pub fn audit_series_with(d: &DatasetSeries, tolerance: f64, strategy: Strategy) -> AuditReport {
    let mut ordered: Vec<&SessionSnapshot> = d.snapshots().collect();
    ordered.sort_by(|a, b| (a.snap_id, a.session_id.as_str()).cmp(&(b.snap_id, b.session_id.as_str())));

    let all = par::map(strategy, &ordered, |s| audit_snapshot(s, tolerance));
    let mut totals = Totals::default();
    let mut worst: f64 = 0.0;
    for f in &all {
        totals.add(f.classification);
        worst = worst.max(f.residual_fraction.abs());
    }
    let findings = all.into_iter().filter(|f| f.classification != Classification::Ok).collect();

    let with_records: Vec<&SessionSnapshot> = ordered.iter().copied().filter(|s| s.accounting.is_some()).collect();
    let accounting = (!with_records.is_empty()).then(|| {
        let all = par::map(strategy, &with_records, |s| accounting_finding(s, tolerance));
        let mut totals = Totals::default();
        let mut worst: f64 = 0.0;
        for f in &all {
            totals.add(f.classification);
            worst = worst.max(f.fraction.abs());
        }
        AccountingSection {
            findings: all.into_iter().filter(|f| f.classification != Classification::Ok).collect(),
            totals,
            worst_fraction: worst,
        }
    });

    AuditReport { tolerance, findings, totals, worst_residual_fraction: worst, accounting }
}

fn accounting_finding(s: &SessionSnapshot, tolerance: f64) -> AccountingFinding {
    let record = s.accounting.expect("filtered to snapshots with records");
    let unaccounted_ms = unaccounted_time(&record);
    let fraction = unaccounted_ms / s.sample_interval_ms;
    AccountingFinding {
        snap_id: s.snap_id,
        session_id: s.session_id.clone(),
        record,
        unaccounted_ms,
        fraction,
        classification: Classification::of(fraction, tolerance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::owi::{MetricVector, SnapGroup};

    fn snap(values: &[(&str, f64)]) -> SessionSnapshot {
        SessionSnapshot::new(1, "S1", MetricVector::new(values.iter().copied()).unwrap())
    }

    #[test]
    fn unaccounted_time_examples() {
        assert_eq!(unaccounted_time(&TimeAccountingRecord::new(1000.0, 600.0, 300.0).unwrap()), 100.0);
        assert_eq!(unaccounted_time(&TimeAccountingRecord::new(1000.0, 700.0, 400.0).unwrap()), -100.0);
        assert_eq!(unaccounted_time(&TimeAccountingRecord::new(1000.0, 1000.0, 0.0).unwrap()), 0.0);
        assert!(TimeAccountingRecord::new(-1.0, 0.0, 0.0).is_none());
    }

    #[test]
    fn snapshot_under_accounted() {
        let f = audit_snapshot(&snap(&[("CPU", 300.0), ("IDLE", 100.0), ("DB_WAIT", 500.0)]), 0.01);
        assert_eq!(f.residual_ms, 100.0);
        assert_eq!(f.classification, Classification::Unaccounted);
    }

    #[test]
    fn snapshot_balanced() {
        let f = audit_snapshot(
            &snap(&[("CPU", 250.0), ("DB_CONTENTION", 250.0), ("DB_WAIT", 250.0), ("IDLE", 250.0)]),
            0.01,
        );
        assert_eq!(f.residual_ms, 0.0);
        assert_eq!(f.classification, Classification::Ok);
    }

    #[test]
    fn snapshot_double_counted() {
        let f = audit_snapshot(&snap(&[("CPU", 600.0), ("IDLE", 600.0), ("DB_WAIT", 0.0)]), 0.01);
        assert_eq!(f.residual_ms, -200.0);
        assert_eq!(f.classification, Classification::DoubleCounted);
    }

    #[test]
    fn tolerance_boundary_is_ok() {
        let f = audit_snapshot(&snap(&[("A", 990.0)]), 0.01);
        assert_eq!(f.classification, Classification::Ok);
        let f = audit_snapshot(&snap(&[("A", 989.0)]), 0.01);
        assert_eq!(f.classification, Classification::Unaccounted);
    }

    #[test]
    fn empty_series_report() {
        let report = audit_series(&DatasetSeries::empty(vec!["A".into()]), 0.01);
        assert!(report.findings.is_empty());
        assert_eq!(report.worst_residual_fraction, 0.0);
        assert_eq!(report.totals.total(), 0);
        assert!(report.accounting.is_none());
        assert!(!report.has_violations());
    }

    #[test]
    fn series_with_accounting_records() {
        let metrics = MetricVector::new([("A", 500.0), ("B", 500.0)]).unwrap();
        let sessions = vec![
            SessionSnapshot::new(1, "S1", metrics.clone())
                .with_accounting(TimeAccountingRecord::new(500.0, 300.0, 200.0).unwrap()),
            SessionSnapshot::new(1, "S2", metrics)
                .with_accounting(TimeAccountingRecord::new(500.0, 300.0, 100.0).unwrap()),
        ];
        let d =
            DatasetSeries::new(None, vec!["A".into(), "B".into()], 1000.0, vec![SnapGroup { snap_id: 1, sessions }])
                .unwrap();
        let report = audit_series(&d, 0.01);
        assert_eq!(report.totals.ok, 2);
        let acct = report.accounting.as_ref().unwrap();
        assert_eq!(acct.totals.unaccounted, 1);
        assert_eq!(acct.findings[0].session_id, "S2");
        assert_eq!(acct.findings[0].unaccounted_ms, 100.0);
        assert!(report.has_violations());
    }
}
