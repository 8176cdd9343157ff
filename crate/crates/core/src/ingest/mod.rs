//! Dataset files and synthetic workloads.
//!
//! Two on-disk forms are supported, both written deterministically with
//! values fixed at three decimal places:
//!
//! * long CSV: `snap_id,session_id,metric,value_ms`, UTF-8, LF line endings.
//!   Optional `# key=value` preamble lines carry a non-default
//!   `sample_interval_ms` and the dataset `label`. Accounting records ride
//!   along as rows with the reserved metric names `ACCT:R`, `ACCT:W_O` and
//!   `ACCT:B`.
//! * wide JSON: one document with `sample_interval_ms`, a `metrics` list and
//!   a `snapshots` array whose `values` align with `metrics`.

mod scenario;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::audit::TimeAccountingRecord;
use crate::owi::{
    canonical_metric_name, DatasetSeries, MetricVector, ModelError, SessionSnapshot, SnapGroup,
    DEFAULT_SAMPLE_INTERVAL_MS,
};

pub use scenario::{
    builtin_scenarios, generate_detailed, generate_scenario, Allocation, Archetype, DefectInjection, DefectKind,
    GeneratedScenario, MetricComponents, ScenarioInfo, ScenarioSpec, SyntheticEventModel,
};

pub const CSV_HEADER: [&str; 4] = ["snap_id", "session_id", "metric", "value_ms"];
const ACCT_RESPONSE: &str = "ACCT:R";
const ACCT_DB_WAIT: &str = "ACCT:W_O";
const ACCT_OS_CPU: &str = "ACCT:B";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("snap {snap_id} session {session_id}: {detail}")]
    InconsistentMetrics { snap_id: u64, session_id: String, detail: String },
    #[error("cannot infer dataset format from '{0}' (use .csv or .json)")]
    UnknownFormat(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Auto,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "auto" => Ok(Format::Auto),
            other => Err(format!("unknown format '{other}' (expected csv, json or auto)")),
        }
    }
}

impl Format {
    fn resolve(self, path: &Path) -> Result<Format> {
        match self {
            Format::Auto => match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
                Some("csv") => Ok(Format::Csv),
                Some("json") => Ok(Format::Json),
                _ => Err(IngestError::UnknownFormat(path.display().to_string())),
            },
            f => Ok(f),
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>, format: Format) -> Result<DatasetSeries> {
    let path = path.as_ref();
    let format = format.resolve(path)?;
    let text =
        fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Json => parse_json(&text),
        Format::Auto => unreachable!("resolved above"),
    }
}

pub fn write_dataset(d: &DatasetSeries, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format.resolve(path)? {
        Format::Csv => to_csv(d),
        Format::Json => to_json(d),
        Format::Auto => unreachable!("resolved above"),
    };
    fs::write(path, bytes).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

fn fixed3(v: f64) -> String {
    let s = format!("{v:.3}");
    // never emit "-0.000"
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn to_csv(d: &DatasetSeries) -> Vec<u8> {
    let mut out = Vec::new();
    if d.sample_interval_ms() != DEFAULT_SAMPLE_INTERVAL_MS {
        out.extend_from_slice(format!("# sample_interval_ms={}\n", fixed3(d.sample_interval_ms())).as_bytes());
    }
    if let Some(label) = d.label() {
        out.extend_from_slice(format!("# label={}\n", label.replace('\n', " ")).as_bytes());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).expect("writing to memory");
    for s in d.snapshots() {
        let snap = s.snap_id.to_string();
        for (metric, value) in s.metrics.iter() {
            w.write_record([snap.as_str(), &s.session_id, metric, &fixed3(value)]).expect("writing to memory");
        }
        if let Some(rec) = &s.accounting {
            for (name, value) in
                [(ACCT_RESPONSE, rec.response_ms), (ACCT_DB_WAIT, rec.db_wait_ms), (ACCT_OS_CPU, rec.os_cpu_ms)]
            {
                w.write_record([snap.as_str(), &s.session_id, name, &fixed3(value)]).expect("writing to memory");
            }
        }
    }
    w.into_inner().expect("flushing to memory")
}

#[derive(Default)]
struct PendingSession {
    metrics: Vec<(String, f64)>,
    acct: [Option<f64>; 3],
    first_line: u64,
}

pub fn parse_csv(text: &str) -> Result<DatasetSeries> {
    let mut sample_interval = DEFAULT_SAMPLE_INTERVAL_MS;
    let mut label = None;
    let mut preamble_lines = 0u64;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.starts_with('#') {
            break;
        }
        preamble_lines += 1;
        body_start += line.len();
        let entry = trimmed.trim_start_matches('#').trim();
        if let Some((key, value)) = entry.split_once('=') {
            match key.trim() {
                "sample_interval_ms" => {
                    sample_interval = value.trim().parse::<f64>().map_err(|e| IngestError::Parse {
                        line: preamble_lines,
                        message: format!("bad sample_interval_ms: {e}"),
                    })?;
                }
                "label" => label = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&text.as_bytes()[body_start..]);
    let headers =
        reader.headers().map_err(|e| IngestError::Parse { line: preamble_lines + 1, message: e.to_string() })?;
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| IngestError::Schema(format!("missing column '{name}'")))
    };
    let (c_snap, c_session, c_metric, c_value) =
        (column("snap_id")?, column("session_id")?, column("metric")?, column("value_ms")?);

    let mut snaps: BTreeMap<u64, Vec<(String, PendingSession)>> = BTreeMap::new();
    let mut index: HashMap<(u64, String), usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0) + preamble_lines,
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0) + preamble_lines;
        let field = |i: usize| record.get(i).unwrap_or("");
        let snap_id: u64 = field(c_snap)
            .parse()
            .map_err(|_| IngestError::Parse { line, message: format!("invalid snap_id '{}'", field(c_snap)) })?;
        let session_id = field(c_session).to_string();
        if session_id.is_empty() {
            return Err(IngestError::Parse { line, message: "empty session_id".into() });
        }
        let raw_metric = field(c_metric);
        let value: f64 = field(c_value)
            .parse()
            .map_err(|_| IngestError::Parse { line, message: format!("invalid value_ms '{}'", field(c_value)) })?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(IngestError::Parse {
                line,
                message: format!("value_ms must be finite and nonnegative, got {value} for {raw_metric}"),
            });
        }

        let sessions = snaps.entry(snap_id).or_default();
        let slot = *index.entry((snap_id, session_id.clone())).or_insert_with(|| {
            sessions.push((session_id.clone(), PendingSession { first_line: line, ..Default::default() }));
            sessions.len() - 1
        });
        let pending = &mut sessions[slot].1;
        let acct_slot = match raw_metric {
            ACCT_RESPONSE => Some(0),
            ACCT_DB_WAIT => Some(1),
            ACCT_OS_CPU => Some(2),
            _ => None,
        };
        if let Some(i) = acct_slot {
            if pending.acct[i].replace(value).is_some() {
                return Err(IngestError::Parse { line, message: format!("duplicate {raw_metric} row") });
            }
            continue;
        }
        let metric = canonical_metric_name(raw_metric);
        if metric.is_empty() {
            return Err(IngestError::Parse { line, message: "empty metric name".into() });
        }
        if pending.metrics.iter().any(|(m, _)| *m == metric) {
            return Err(IngestError::Parse { line, message: format!("duplicate metric {metric}") });
        }
        pending.metrics.push((metric, value));
    }

    let metric_names: Vec<String> = snaps
        .values()
        .flat_map(|s| s.first())
        .next()
        .map(|(_, p)| p.metrics.iter().map(|(m, _)| m.clone()).collect())
        .unwrap_or_default();

    let mut groups = Vec::with_capacity(snaps.len());
    for (snap_id, sessions) in snaps {
        let mut out = Vec::with_capacity(sessions.len());
        for (session_id, pending) in sessions {
            let mut ordered = Vec::with_capacity(metric_names.len());
            for name in &metric_names {
                match pending.metrics.iter().find(|(m, _)| m == name) {
                    Some((_, v)) => ordered.push((name.clone(), *v)),
                    None => {
                        return Err(IngestError::InconsistentMetrics {
                            snap_id,
                            session_id,
                            detail: format!("missing metric {name} (session starts at line {})", pending.first_line),
                        })
                    }
                }
            }
            if pending.metrics.len() != metric_names.len() {
                let extra: Vec<&str> = pending
                    .metrics
                    .iter()
                    .map(|(m, _)| m.as_str())
                    .filter(|m| !metric_names.iter().any(|n| n == m))
                    .collect();
                return Err(IngestError::InconsistentMetrics {
                    snap_id,
                    session_id,
                    detail: format!("unexpected metrics {}", extra.join(", ")),
                });
            }
            let accounting = match pending.acct {
                [None, None, None] => None,
                [Some(r), Some(w), Some(b)] => TimeAccountingRecord::new(r, w, b),
                _ => {
                    return Err(IngestError::Schema(format!(
                        "snap {snap_id} session {session_id}: accounting rows must include all of {ACCT_RESPONSE}, {ACCT_DB_WAIT}, {ACCT_OS_CPU}"
                    )))
                }
            };
            let mut snapshot =
                SessionSnapshot::new(snap_id, session_id, MetricVector::new(ordered)?).with_interval(sample_interval);
            snapshot.accounting = accounting;
            out.push(snapshot);
        }
        groups.push(SnapGroup { snap_id, sessions: out });
    }
    Ok(DatasetSeries::new(label, metric_names, sample_interval, groups)?)
}

fn ser_fixed3<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    RawValue::from_string(fixed3(*v)).map_err(serde::ser::Error::custom)?.serialize(s)
}

fn ser_fixed3_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&RawValue::from_string(fixed3(*x)).map_err(serde::ser::Error::custom)?)?;
    }
    seq.end()
}

#[derive(Serialize, Deserialize)]
struct JsonAccounting {
    #[serde(serialize_with = "ser_fixed3")]
    response_ms: f64,
    #[serde(serialize_with = "ser_fixed3")]
    db_wait_ms: f64,
    #[serde(serialize_with = "ser_fixed3")]
    os_cpu_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonSnapshot {
    snap_id: u64,
    session_id: String,
    #[serde(serialize_with = "ser_fixed3_vec")]
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accounting: Option<JsonAccounting>,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(serialize_with = "ser_fixed3")]
    sample_interval_ms: f64,
    metrics: Vec<String>,
    snapshots: Vec<JsonSnapshot>,
}

pub fn to_json(d: &DatasetSeries) -> Vec<u8> {
    let doc = JsonDataset {
        label: d.label().map(str::to_string),
        sample_interval_ms: d.sample_interval_ms(),
        metrics: d.metrics().to_vec(),
        snapshots: d
            .snapshots()
            .map(|s| JsonSnapshot {
                snap_id: s.snap_id,
                session_id: s.session_id.clone(),
                values: s.metrics.values().collect(),
                accounting: s.accounting.map(|r| JsonAccounting {
                    response_ms: r.response_ms,
                    db_wait_ms: r.db_wait_ms,
                    os_cpu_ms: r.os_cpu_ms,
                }),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("dataset serializes");
    out.push(b'\n');
    out
}

pub fn parse_json(text: &str) -> Result<DatasetSeries> {
    let doc: JsonDataset = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => IngestError::Schema(e.to_string()),
        _ => IngestError::Parse { line: e.line() as u64, message: e.to_string() },
    })?;
    let metrics: Vec<String> = doc.metrics.iter().map(|m| canonical_metric_name(m)).collect();
    let mut groups: Vec<SnapGroup> = Vec::new();
    for (i, snap) in doc.snapshots.into_iter().enumerate() {
        if snap.values.len() != metrics.len() {
            return Err(IngestError::InconsistentMetrics {
                snap_id: snap.snap_id,
                session_id: snap.session_id,
                detail: format!("{} values for {} metrics (snapshot #{i})", snap.values.len(), metrics.len()),
            });
        }
        let mv = MetricVector::new(metrics.iter().cloned().zip(snap.values.iter().copied())).map_err(|e| {
            IngestError::Parse {
                line: 0,
                message: format!("snapshot #{i} ({} / {}): {e}", snap.snap_id, snap.session_id),
            }
        })?;
        let mut s = SessionSnapshot::new(snap.snap_id, snap.session_id, mv).with_interval(doc.sample_interval_ms);
        if let Some(a) = snap.accounting {
            s.accounting =
                Some(TimeAccountingRecord::new(a.response_ms, a.db_wait_ms, a.os_cpu_ms).ok_or_else(|| {
                    IngestError::Schema(format!("snapshot #{i}: accounting values must be finite and nonnegative"))
                })?);
        }
        match groups.last_mut() {
            Some(g) if g.snap_id == s.snap_id => g.sessions.push(s),
            _ => groups.push(SnapGroup { snap_id: s.snap_id, sessions: vec![s] }),
        }
    }
    Ok(DatasetSeries::new(doc.label, metrics, doc.sample_interval_ms, groups)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "snap_id,session_id,metric,value_ms\n\
        1,A,CPU_USAGE,100.000\n1,A,IDLE,800.000\n1,A,DB_WAIT,100.000\n\
        1,B,CPU_USAGE,0.000\n1,B,IDLE,1000.000\n1,B,DB_WAIT,0.000\n\
        2,A,CPU_USAGE,200.000\n2,A,IDLE,700.000\n2,A,DB_WAIT,100.000\n\
        2,B,cpu.usage,0\n2,B,IDLE,500\n2,B,DB_WAIT,500\n";

    #[test]
    fn parses_fixture() {
        let d = parse_csv(FIXTURE).unwrap();
        assert_eq!(d.snapshot_count(), 4);
        assert_eq!(d.metrics(), &["CPU_USAGE", "IDLE", "DB_WAIT"]);
        assert_eq!(d.snap(2).unwrap().sessions[1].metrics.get("CPU_USAGE"), Some(0.0));
    }

    #[test]
    fn negative_value_names_line() {
        let text = "snap_id,session_id,metric,value_ms\n1,A,CPU_USAGE,100\n1,A,IDLE,-5\n";
        match parse_csv(text).unwrap_err() {
            IngestError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("IDLE"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        assert!(matches!(parse_csv("snap_id,session_id,metric\n1,A,X\n"), Err(IngestError::Schema(_))));
    }

    #[test]
    fn inconsistent_metrics_detected() {
        let text = "snap_id,session_id,metric,value_ms\n1,A,X,1\n1,A,Y,2\n1,B,X,3\n";
        assert!(matches!(parse_csv(text), Err(IngestError::InconsistentMetrics { .. })));
        let text = "snap_id,session_id,metric,value_ms\n1,A,X,1\n1,B,X,3\n1,B,Z,2\n";
        assert!(matches!(parse_csv(text), Err(IngestError::InconsistentMetrics { .. })));
    }

    #[test]
    fn preamble_round_trip() {
        let text = "# sample_interval_ms=500.000\n# label=demo\nsnap_id,session_id,metric,value_ms\n1,A,X,250.000\n1,A,Y,250.000\n";
        let d = parse_csv(text).unwrap();
        assert_eq!(d.sample_interval_ms(), 500.0);
        assert_eq!(d.label(), Some("demo"));
        assert_eq!(String::from_utf8(to_csv(&d)).unwrap(), text);
    }

    #[test]
    fn empty_series_is_header_only() {
        let d = DatasetSeries::empty(vec![]);
        assert_eq!(to_csv(&d), b"snap_id,session_id,metric,value_ms\n");
        let back = parse_csv("snap_id,session_id,metric,value_ms\n").unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn accounting_rows_round_trip() {
        let text = "snap_id,session_id,metric,value_ms\n1,A,X,600.000\n1,A,Y,400.000\n\
            1,A,ACCT:R,1000.000\n1,A,ACCT:W_O,600.000\n1,A,ACCT:B,300.000\n";
        let d = parse_csv(text).unwrap();
        let rec = d.snapshots().next().unwrap().accounting.unwrap();
        assert_eq!(rec.os_cpu_ms, 300.0);
        assert_eq!(String::from_utf8(to_csv(&d)).unwrap(), text);
        let json = to_json(&d);
        assert_eq!(parse_json(std::str::from_utf8(&json).unwrap()).unwrap(), d);
    }

    #[test]
    fn partial_accounting_rejected() {
        let text = "snap_id,session_id,metric,value_ms\n1,A,X,1000\n1,A,ACCT:R,1000\n";
        assert!(matches!(parse_csv(text), Err(IngestError::Schema(_))));
    }

    #[test]
    fn json_fixed_decimals() {
        let d = parse_csv(FIXTURE).unwrap();
        let json = String::from_utf8(to_json(&d)).unwrap();
        assert!(json.contains("\"sample_interval_ms\": 1000.000"));
        assert!(json.contains("800.000"));
        assert_eq!(parse_json(&json).unwrap(), d);
    }

    #[test]
    fn json_value_count_mismatch() {
        let text = r#"{"sample_interval_ms": 1000, "metrics": ["A","B"], "snapshots": [{"snap_id": 1, "session_id": "S", "values": [1.0]}]}"#;
        assert!(matches!(parse_json(text), Err(IngestError::InconsistentMetrics { .. })));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::Auto.resolve(Path::new("a.CSV")).unwrap(), Format::Csv);
        assert_eq!(Format::Auto.resolve(Path::new("a.json")).unwrap(), Format::Json);
        assert!(matches!(Format::Auto.resolve(Path::new("a.txt")), Err(IngestError::UnknownFormat(_))));
    }

    #[test]
    fn fixed3_formatting() {
        assert_eq!(fixed3(1.0), "1.000");
        assert_eq!(fixed3(-0.0001), "0.000");
        assert_eq!(fixed3(2.0 / 3.0), "0.667");
    }
}
