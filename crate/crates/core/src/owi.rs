//! Wait-interface metric model: taxonomy, per-session snapshots, composite
//! aggregation and axis assignment.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::audit::TimeAccountingRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("missing metric {0}")]
    MissingMetric(String),
    #[error("metric {name} has invalid value {value} (must be finite and nonnegative)")]
    InvalidValue { name: String, value: f64 },
    #[error("duplicate metric {0}")]
    DuplicateMetric(String),
    #[error("unknown aggregation spec '{0}' (expected owi3, session3 or session4)")]
    UnknownSpec(String),
    #[error("invalid aggregation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("unknown composite '{0}' in axis assignment")]
    UnknownAxis(String),
    #[error("no built-in aggregation spec matches the dataset metrics")]
    NoMatchingSpec,
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Upper-cases and maps dots and whitespace to underscores
/// (`db.cpu.pct` becomes `DB_CPU_PCT`).
pub fn canonical_metric_name(raw: &str) -> String {
    raw.trim().chars().map(|c| if c == '.' || c.is_whitespace() { '_' } else { c.to_ascii_uppercase() }).collect()
}

const BUILTIN_TAXONOMY: [(&str, u32); 13] = [
    ("Concurrency", 26),
    ("System I/O", 23),
    ("User I/O", 22),
    ("Administrative", 51),
    ("Other", 630),
    ("Configuration", 21),
    ("Scheduler", 3),
    ("Cluster", 47),
    ("Application", 15),
    ("Queueing", 4),
    ("Idle", 80),
    ("Network", 35),
    ("Commit", 2),
];

/// Wait-class names and their event counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaitClassTaxonomy {
    entries: Vec<(String, u32)>,
}

impl WaitClassTaxonomy {
    pub fn get(&self, class: &str) -> Option<u32> {
        self.entries.iter().find(|(name, _)| name == class).map(|(_, count)| *count)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_events(&self) -> u32 {
        self.entries.iter().map(|(_, count)| count).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.entries.iter().map(|(name, count)| (name.as_str(), *count))
    }
}

/// The 13 wait classes (959 events) of the reference database release, in
/// the order the catalog query returns them.
pub fn builtin_taxonomy() -> WaitClassTaxonomy {
    WaitClassTaxonomy { entries: BUILTIN_TAXONOMY.iter().map(|(n, c)| (n.to_string(), *c)).collect() }
}

/// Ordered metric name to duration (ms) mapping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricVector {
    entries: Vec<(String, f64)>,
}

impl MetricVector {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (name, value) in entries {
            let name = name.into();
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidValue { name, value });
            }
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateMetric(name));
            }
            out.push((name, value));
        }
        Ok(Self { entries: out })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all values in stored order.
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }
}

pub const DEFAULT_SAMPLE_INTERVAL_MS: f64 = 1000.0;

/// One session's metrics at one sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSnapshot {
    pub snap_id: u64,
    pub session_id: String,
    pub metrics: MetricVector,
    pub sample_interval_ms: f64,
    /// End-to-end timing record, when the source carries one.
    pub accounting: Option<TimeAccountingRecord>,
}

impl SessionSnapshot {
    pub fn new(snap_id: u64, session_id: impl Into<String>, metrics: MetricVector) -> Self {
        Self {
            snap_id,
            session_id: session_id.into(),
            metrics,
            sample_interval_ms: DEFAULT_SAMPLE_INTERVAL_MS,
            accounting: None,
        }
    }

    pub fn with_interval(mut self, sample_interval_ms: f64) -> Self {
        self.sample_interval_ms = sample_interval_ms;
        self
    }

    pub fn with_accounting(mut self, record: TimeAccountingRecord) -> Self {
        self.accounting = Some(record);
        self
    }
}

/// All sessions sampled at one snap id.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapGroup {
    pub snap_id: u64,
    pub sessions: Vec<SessionSnapshot>,
}

/// A validated series of snapshots sharing one metric list and interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSeries {
    label: Option<String>,
    metrics: Vec<String>,
    sample_interval_ms: f64,
    snaps: Vec<SnapGroup>,
}

impl DatasetSeries {
    pub fn new(
        label: Option<String>,
        metrics: Vec<String>,
        sample_interval_ms: f64,
        snaps: Vec<SnapGroup>,
    ) -> Result<Self> {
        if !(sample_interval_ms.is_finite() && sample_interval_ms > 0.0) {
            return Err(ModelError::InvalidDataset(format!(
                "sample interval must be positive, got {sample_interval_ms}"
            )));
        }
        let mut seen_metrics = HashSet::new();
        for m in &metrics {
            if !seen_metrics.insert(m.as_str()) {
                return Err(ModelError::DuplicateMetric(m.clone()));
            }
        }
        let mut previous: Option<u64> = None;
        for group in &snaps {
            if let Some(prev) = previous {
                if group.snap_id <= prev {
                    return Err(ModelError::InvalidDataset(format!(
                        "snap ids must be strictly increasing ({} follows {prev})",
                        group.snap_id
                    )));
                }
            }
            previous = Some(group.snap_id);
            let mut sessions = HashSet::new();
            for s in &group.sessions {
                if s.snap_id != group.snap_id {
                    return Err(ModelError::InvalidDataset(format!(
                        "session {} carries snap id {} inside group {}",
                        s.session_id, s.snap_id, group.snap_id
                    )));
                }
                if !sessions.insert(s.session_id.as_str()) {
                    return Err(ModelError::InvalidDataset(format!(
                        "session {} appears twice in snap {}",
                        s.session_id, group.snap_id
                    )));
                }
                if s.sample_interval_ms != sample_interval_ms {
                    return Err(ModelError::InvalidDataset(format!(
                        "session {} in snap {} has interval {} (dataset uses {sample_interval_ms})",
                        s.session_id, group.snap_id, s.sample_interval_ms
                    )));
                }
                if !s.metrics.names().eq(metrics.iter().map(String::as_str)) {
                    return Err(ModelError::InvalidDataset(format!(
                        "session {} in snap {} does not carry the dataset metric list",
                        s.session_id, group.snap_id
                    )));
                }
            }
        }
        Ok(Self { label, metrics, sample_interval_ms, snaps })
    }

    pub fn empty(metrics: Vec<String>) -> Self {
        Self { label: None, metrics, sample_interval_ms: DEFAULT_SAMPLE_INTERVAL_MS, snaps: Vec::new() }
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn metrics(&self) -> &[String] {
        &self.metrics
    }

    pub fn sample_interval_ms(&self) -> f64 {
        self.sample_interval_ms
    }

    pub fn snaps(&self) -> &[SnapGroup] {
        &self.snaps
    }

    pub fn snap(&self, snap_id: u64) -> Option<&SnapGroup> {
        self.snaps.binary_search_by_key(&snap_id, |g| g.snap_id).ok().map(|i| &self.snaps[i])
    }

    pub fn snap_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.snaps.iter().map(|g| g.snap_id)
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &SessionSnapshot> {
        self.snaps.iter().flat_map(|g| g.sessions.iter())
    }

    pub fn snapshot_count(&self) -> usize {
        self.snaps.iter().map(|g| g.sessions.len()).sum()
    }

    /// Distinct session ids in order of first appearance.
    pub fn session_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.snapshots().map(|s| s.session_id.as_str()).filter(|id| seen.insert(*id)).collect()
    }

    pub fn has_metric(&self, name: &str) -> bool {
        self.metrics.iter().any(|m| m == name)
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Composite {
    pub name: String,
    pub sources: Vec<String>,
}

/// Named composites, each the sum of a disjoint set of source metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregationSpec {
    name: String,
    composites: Vec<Composite>,
}

impl AggregationSpec {
    pub fn new(name: impl Into<String>, composites: Vec<Composite>) -> Result<Self> {
        let mut used = HashSet::new();
        let mut names = HashSet::new();
        if composites.is_empty() {
            return Err(ModelError::InvalidSpec("no composites".into()));
        }
        for c in &composites {
            if c.sources.is_empty() {
                return Err(ModelError::InvalidSpec(format!("composite {} has no sources", c.name)));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ModelError::InvalidSpec(format!("composite {} defined twice", c.name)));
            }
            for s in &c.sources {
                if !used.insert(s.as_str()) {
                    return Err(ModelError::InvalidSpec(format!("source {s} used by more than one composite")));
                }
            }
        }
        Ok(Self { name: name.into(), composites })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn composites(&self) -> &[Composite] {
        &self.composites
    }

    pub fn composite(&self, name: &str) -> Option<&Composite> {
        self.composites.iter().find(|c| c.name == name)
    }

    pub fn composite_names(&self) -> impl Iterator<Item = &str> {
        self.composites.iter().map(|c| c.name.as_str())
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.composites.iter().flat_map(|c| c.sources.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        self.composites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.composites.is_empty()
    }
}

fn composite(name: &str, sources: &[&str]) -> Composite {
    Composite { name: name.to_string(), sources: sources.iter().map(|s| s.to_string()).collect() }
}

pub const BUILTIN_SPECS: [&str; 3] = ["owi3", "session3", "session4"];

pub fn builtin_spec(name: &str) -> Result<AggregationSpec> {
    let composites = match name {
        "owi3" => vec![
            composite("WAIT_PCT", &["APPLICATION", "COMMIT", "CONCURRENCY", "CONFIGURATION", "NETWORK", "OTHER"]),
            composite("IO_PCT", &["USERIO", "SYSTEMIO"]),
            composite("DB_CPU_PCT", &["DB_CPU"]),
        ],
        "session3" => ["CPU_USAGE", "IDLE", "DB_WAIT"].iter().map(|m| composite(m, &[m])).collect(),
        "session4" => ["CPU_USAGE", "DB_CONTENTION", "DB_WAIT", "IDLE"].iter().map(|m| composite(m, &[m])).collect(),
        other => return Err(ModelError::UnknownSpec(other.to_string())),
    };
    AggregationSpec::new(name, composites)
}

/// First built-in spec whose sources the dataset fully carries, trying the
/// richest session spec first.
pub fn infer_spec(dataset: &DatasetSeries) -> Result<AggregationSpec> {
    for name in ["session4", "session3", "owi3"] {
        let spec = builtin_spec(name)?;
        if spec.sources().all(|s| dataset.has_metric(s)) {
            return Ok(spec);
        }
    }
    Err(ModelError::NoMatchingSpec)
}

/// Sums sources into composites, in spec order.
pub fn aggregate(m: &MetricVector, spec: &AggregationSpec) -> Result<MetricVector> {
    let mut out = Vec::with_capacity(spec.len());
    for c in spec.composites() {
        let mut total = 0.0;
        for source in &c.sources {
            total += m.get(source).ok_or_else(|| ModelError::MissingMetric(source.clone()))?;
        }
        out.push((c.name.clone(), total));
    }
    Ok(MetricVector { entries: out })
}

/// Which composite sits at each simplex vertex (index 0 is `V_1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AxisAssignment {
    axes: Vec<String>,
}

impl AxisAssignment {
    pub fn new<I, S>(axes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { axes: axes.into_iter().map(Into::into).collect() }
    }

    /// CPU at the apex. For `owi3` IO sits lower left and WAIT lower right;
    /// the session specs keep their composite order after CPU.
    pub fn default_for(spec: &AggregationSpec) -> Self {
        match spec.name() {
            "owi3" => Self::new(["DB_CPU_PCT", "IO_PCT", "WAIT_PCT"]),
            _ => {
                let mut axes: Vec<&str> = spec.composite_names().collect();
                if let Some(pos) = axes.iter().position(|a| a.contains("CPU")) {
                    let cpu = axes.remove(pos);
                    axes.insert(0, cpu);
                }
                Self::new(axes)
            }
        }
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// Reorders aggregated composites into vertex order.
    pub fn arrange(&self, composites: &MetricVector) -> Result<Vec<f64>> {
        self.axes.iter().map(|a| composites.get(a).ok_or_else(|| ModelError::UnknownAxis(a.clone()))).collect()
    }
}

impl fmt::Display for AxisAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.axes.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "name")]
pub enum ViewViolation {
    /// The dataset lacks a source metric the spec needs.
    MissingMetric(String),
    /// An axis names something that is not a composite of the spec.
    UnknownAxis(String),
    /// A composite of the spec is not placed on any axis.
    UnassignedComposite(String),
    /// The same composite is placed on more than one axis.
    NonBijectiveAxes(String),
}

impl fmt::Display for ViewViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewViolation::MissingMetric(m) => write!(f, "dataset is missing metric {m}"),
            ViewViolation::UnknownAxis(a) => write!(f, "axis {a} is not a composite of the spec"),
            ViewViolation::UnassignedComposite(c) => write!(f, "composite {c} is not assigned to an axis"),
            ViewViolation::NonBijectiveAxes(a) => write!(f, "composite {a} is assigned to more than one axis"),
        }
    }
}

/// Collects every reason the view cannot be drawn from this dataset.
pub fn validate_view(
    dataset: &DatasetSeries,
    spec: &AggregationSpec,
    axes: &AxisAssignment,
) -> std::result::Result<(), Vec<ViewViolation>> {
    let mut violations = Vec::new();
    for source in spec.sources() {
        if !dataset.has_metric(source) {
            violations.push(ViewViolation::MissingMetric(source.to_string()));
        }
    }
    let mut seen = HashSet::new();
    for axis in axes.axes() {
        if spec.composite(axis).is_none() {
            violations.push(ViewViolation::UnknownAxis(axis.clone()));
        } else if !seen.insert(axis.as_str()) {
            violations.push(ViewViolation::NonBijectiveAxes(axis.clone()));
        }
    }
    for name in spec.composite_names() {
        if !seen.contains(name) {
            violations.push(ViewViolation::UnassignedComposite(name.to_string()));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
