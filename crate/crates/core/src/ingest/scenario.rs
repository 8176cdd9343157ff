//! Seeded synthetic session workloads.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! Draws are consumed in a fixed order: defect targets first from a stream
//! seeded with `seed ^ DEFECT_STREAM`, then for each snap in order and each
//! session in order, the metric values followed by their event
//! decomposition. All values are whole milliseconds, so a clean snapshot
//! sums to the sample interval exactly.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{IngestError, Result};
use crate::audit::TimeAccountingRecord;
use crate::owi::{DatasetSeries, MetricVector, SessionSnapshot, SnapGroup};

const DEFECT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

const SESSION3: [&str; 3] = ["CPU_USAGE", "IDLE", "DB_WAIT"];
const SESSION4: [&str; 4] = ["CPU_USAGE", "DB_CONTENTION", "DB_WAIT", "IDLE"];
const OWI_RAW: [&str; 9] =
    ["APPLICATION", "COMMIT", "CONCURRENCY", "CONFIGURATION", "NETWORK", "OTHER", "USERIO", "SYSTEMIO", "DB_CPU"];
/// Metrics that are pure CPU service time.
const CPU_METRICS: [&str; 2] = ["CPU_USAGE", "DB_CPU"];

/// Behavioral template for a synthetic session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    /// IDLE takes the whole interval.
    FullyIdle,
    /// IDLE takes half; CPU and DB wait split the rest.
    HalfIdle,
    /// DB_WAIT takes the whole interval.
    FullyWaiting,
    /// About 10% CPU (±3%), 45 to 65% DB wait, idle otherwise.
    CpuLight,
    /// Uniform over the 3-metric simplex.
    Uniform,
    /// System-level wait classes: DB CPU declining linearly from 75% to 30%,
    /// IO steady at 10 ± 1%, waits taking the rest.
    Drift,
    /// 4-metric session, at least 98% idle.
    NearIdle,
    /// 4-metric session with moderate lock/latch contention.
    ContentionCluster,
    /// 4-metric session with moderately high DB wait.
    WaitCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Session3,
    Session4,
    OwiRaw,
}

impl Family {
    fn metrics(self) -> &'static [&'static str] {
        match self {
            Family::Session3 => &SESSION3,
            Family::Session4 => &SESSION4,
            Family::OwiRaw => &OWI_RAW,
        }
    }
}

impl Archetype {
    fn family(self) -> Family {
        match self {
            Archetype::FullyIdle
            | Archetype::HalfIdle
            | Archetype::FullyWaiting
            | Archetype::CpuLight
            | Archetype::Uniform => Family::Session3,
            Archetype::NearIdle | Archetype::ContentionCluster | Archetype::WaitCluster => Family::Session4,
            Archetype::Drift => Family::OwiRaw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub archetype: Archetype,
    pub sessions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    /// Remove time from the largest metric.
    Unaccounted,
    /// Charge extra time to the CPU metric.
    DoubleCounted,
}

impl std::str::FromStr for DefectKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unaccounted" => Ok(DefectKind::Unaccounted),
            "double-counted" | "double_counted" => Ok(DefectKind::DoubleCounted),
            other => Err(format!("unknown defect kind '{other}' (expected unaccounted or double-counted)")),
        }
    }
}

/// Sum-rule defects placed on `count` distinct (snap, session) cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DefectInjection {
    pub count: usize,
    pub kind: DefectKind,
    pub magnitude_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub snaps: usize,
    pub seed: u64,
    pub sample_interval_ms: u32,
    pub allocations: Vec<Allocation>,
    pub defects: Option<DefectInjection>,
    /// Attach `R`, `W_O`, `B` records (session scenarios only).
    pub emit_accounting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: &'static str,
    pub default_sessions: usize,
    pub default_snaps: usize,
}

pub fn builtin_scenarios() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "fig6",
            description: "4 fully idle, 2 half idle, 2 fully waiting sessions, the rest clustered near 10% CPU",
            spec: "session3",
            default_sessions: 60,
            default_snaps: 20,
        },
        ScenarioInfo {
            name: "fig8",
            description: "2 nearly idle sessions plus a contention cluster and a DB-wait cluster over four metrics",
            spec: "session4",
            default_sessions: 60,
            default_snaps: 20,
        },
        ScenarioInfo {
            name: "drift",
            description: "wait classes with IO steady near 10% while DB CPU declines and waits rise, crossing once",
            spec: "owi3",
            default_sessions: 1,
            default_snaps: 42,
        },
        ScenarioInfo {
            name: "uniform",
            description: "sessions sampled uniformly over the 3-metric simplex",
            spec: "session3",
            default_sessions: 30,
            default_snaps: 20,
        },
    ]
}

impl ScenarioSpec {
    /// A built-in scenario. `sessions` and `snaps` override the defaults.
    pub fn builtin(name: &str, sessions: Option<usize>, snaps: Option<usize>, seed: u64) -> Result<Self> {
        let info = builtin_scenarios()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| IngestError::InvalidScenario(format!("unknown scenario '{name}'")))?;
        let sessions = sessions.unwrap_or(info.default_sessions);
        let snaps = snaps.unwrap_or(info.default_snaps);
        let alloc = |archetype, sessions| Allocation { archetype, sessions };
        let allocations = match name {
            "fig6" => {
                if sessions < 8 {
                    return Err(IngestError::InvalidScenario("fig6 needs at least 8 sessions".into()));
                }
                vec![
                    alloc(Archetype::FullyIdle, 4),
                    alloc(Archetype::HalfIdle, 2),
                    alloc(Archetype::FullyWaiting, 2),
                    alloc(Archetype::CpuLight, sessions - 8),
                ]
            }
            "fig8" => {
                if sessions < 2 {
                    return Err(IngestError::InvalidScenario("fig8 needs at least 2 sessions".into()));
                }
                let rest = sessions - 2;
                vec![
                    alloc(Archetype::NearIdle, 2),
                    alloc(Archetype::ContentionCluster, rest / 2),
                    alloc(Archetype::WaitCluster, rest - rest / 2),
                ]
            }
            "drift" => vec![alloc(Archetype::Drift, sessions)],
            "uniform" => vec![alloc(Archetype::Uniform, sessions)],
            _ => unreachable!("listed in builtin_scenarios"),
        };
        let spec = ScenarioSpec {
            name: name.to_string(),
            snaps,
            seed,
            sample_interval_ms: 1000,
            allocations: allocations.into_iter().filter(|a| a.sessions > 0).collect(),
            defects: None,
            emit_accounting: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_defects(mut self, defects: DefectInjection) -> Self {
        self.defects = Some(defects);
        self
    }

    pub fn with_accounting(mut self, emit: bool) -> Self {
        self.emit_accounting = emit;
        self
    }

    pub fn sessions(&self) -> usize {
        self.allocations.iter().map(|a| a.sessions).sum()
    }

    fn family(&self) -> Result<Family> {
        let mut families = self.allocations.iter().map(|a| a.archetype.family());
        let first = families.next().ok_or_else(|| IngestError::InvalidScenario("scenario has no sessions".into()))?;
        if families.any(|f| f != first) {
            return Err(IngestError::InvalidScenario("archetypes mix incompatible metric sets".into()));
        }
        Ok(first)
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family()?;
        if self.sessions() == 0 {
            return Err(IngestError::InvalidScenario("scenario has no sessions".into()));
        }
        if self.snaps == 0 {
            return Err(IngestError::InvalidScenario("scenario needs at least one snap".into()));
        }
        if family == Family::OwiRaw && self.snaps < 2 {
            return Err(IngestError::InvalidScenario("drift needs at least two snaps".into()));
        }
        if self.sample_interval_ms < 100 {
            return Err(IngestError::InvalidScenario("sample interval must be at least 100 ms".into()));
        }
        if let Some(d) = &self.defects {
            if d.count > self.snaps * self.sessions() {
                return Err(IngestError::InvalidScenario(format!(
                    "{} defects requested but only {} snapshots exist",
                    d.count,
                    self.snaps * self.sessions()
                )));
            }
            if d.magnitude_ms == 0 {
                return Err(IngestError::InvalidScenario("defect magnitude must be positive".into()));
            }
        }
        if self.emit_accounting && family == Family::OwiRaw {
            return Err(IngestError::InvalidScenario("accounting records need session metrics".into()));
        }
        Ok(())
    }
}

/// Wait and service components making up one metric value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricComponents {
    pub metric: String,
    pub waits: Vec<u32>,
    pub services: Vec<u32>,
}

impl MetricComponents {
    pub fn total(&self) -> u64 {
        self.waits.iter().chain(&self.services).map(|&v| v as u64).sum()
    }
}

/// Per-event decomposition behind one generated snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticEventModel {
    pub snap_id: u64,
    pub session_id: String,
    pub components: Vec<MetricComponents>,
}

impl SyntheticEventModel {
    pub fn component(&self, metric: &str) -> Option<&MetricComponents> {
        self.components.iter().find(|c| c.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub series: DatasetSeries,
    pub events: Vec<SyntheticEventModel>,
    /// Flat `(snap_id, session_id)` cells that received a defect.
    pub defect_cells: Vec<(u64, String)>,
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<DatasetSeries> {
    Ok(generate_detailed(spec)?.series)
}

pub fn generate_detailed(spec: &ScenarioSpec) -> Result<GeneratedScenario> {
    spec.validate()?;
    let family = spec.family()?;
    let names = family.metrics();
    let interval = spec.sample_interval_ms;
    let total_sessions = spec.sessions();
    let width = total_sessions.to_string().len().max(3);
    let archetypes: Vec<Archetype> =
        spec.allocations.iter().flat_map(|a| std::iter::repeat_n(a.archetype, a.sessions)).collect();

    let mut defect_targets: Vec<usize> = match &spec.defects {
        Some(d) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ DEFECT_STREAM);
            index::sample(&mut rng, spec.snaps * total_sessions, d.count).into_vec()
        }
        None => Vec::new(),
    };
    defect_targets.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut groups = Vec::with_capacity(spec.snaps);
    let mut events = Vec::with_capacity(spec.snaps * total_sessions);
    let mut defect_cells = Vec::new();
    for snap_index in 0..spec.snaps {
        let snap_id = snap_index as u64 + 1;
        let progress = if spec.snaps > 1 { snap_index as f64 / (spec.snaps - 1) as f64 } else { 0.0 };
        let mut sessions = Vec::with_capacity(total_sessions);
        for (session_index, archetype) in archetypes.iter().enumerate() {
            let session_id = format!("S{:0width$}", session_index + 1);
            let mut values = archetype_values(*archetype, interval, progress, &mut rng);

            let cell = snap_index * total_sessions + session_index;
            if let (Some(d), Ok(_)) = (&spec.defects, defect_targets.binary_search(&cell)) {
                apply_defect(&mut values, names, d);
                defect_cells.push((snap_id, session_id.clone()));
            }

            let components: Vec<MetricComponents> =
                names.iter().zip(&values).map(|(name, &v)| decompose(name, v, &mut rng)).collect();
            let metrics = MetricVector::new(names.iter().zip(&values).map(|(n, &v)| (n.to_string(), v as f64)))?;
            let mut snapshot =
                SessionSnapshot::new(snap_id, session_id.clone(), metrics).with_interval(interval as f64);
            if spec.emit_accounting {
                snapshot.accounting = Some(accounting_record(names, &values, interval));
            }
            sessions.push(snapshot);
            events.push(SyntheticEventModel { snap_id, session_id, components });
        }
        groups.push(SnapGroup { snap_id, sessions });
    }

    let series = DatasetSeries::new(
        Some(spec.name.clone()),
        names.iter().map(|s| s.to_string()).collect(),
        interval as f64,
        groups,
    )?;
    Ok(GeneratedScenario { series, events, defect_cells })
}

fn pct(interval: u32, percent: f64) -> u32 {
    (interval as f64 * percent / 100.0).round() as u32
}

/// Values in the archetype's family metric order; always sums to `interval`.
fn archetype_values(archetype: Archetype, interval: u32, progress: f64, rng: &mut ChaCha8Rng) -> Vec<u32> {
    match archetype {
        Archetype::FullyIdle => vec![0, interval, 0],
        Archetype::FullyWaiting => vec![0, 0, interval],
        Archetype::HalfIdle => {
            let idle = interval / 2;
            let cpu = rng.random_range(0..=interval - idle);
            vec![cpu, idle, interval - idle - cpu]
        }
        Archetype::CpuLight => {
            let spread = pct(interval, 3.0);
            let cpu = pct(interval, 10.0) - spread + rng.random_range(0..=2 * spread);
            let wait = rng.random_range(pct(interval, 45.0)..=pct(interval, 65.0));
            vec![cpu, interval - cpu - wait, wait]
        }
        Archetype::Uniform => {
            let a = rng.random_range(0..=interval);
            let b = rng.random_range(0..=interval);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            vec![lo, hi - lo, interval - hi]
        }
        Archetype::NearIdle => {
            let busy = rng.random_range(0..=pct(interval, 2.0));
            let cpu = rng.random_range(0..=busy);
            vec![cpu, 0, busy - cpu, interval - busy]
        }
        Archetype::ContentionCluster => {
            let cpu = jitter(rng, pct(interval, 15.0), pct(interval, 3.0));
            let contention = jitter(rng, pct(interval, 40.0), pct(interval, 5.0));
            let wait = jitter(rng, pct(interval, 10.0), pct(interval, 3.0));
            vec![cpu, contention, wait, interval - cpu - contention - wait]
        }
        Archetype::WaitCluster => {
            let cpu = jitter(rng, pct(interval, 10.0), pct(interval, 3.0));
            let contention = jitter(rng, pct(interval, 5.0), pct(interval, 2.0));
            let wait = jitter(rng, pct(interval, 65.0), pct(interval, 5.0));
            vec![cpu, contention, wait, interval - cpu - contention - wait]
        }
        Archetype::Drift => drift_values(interval, progress, rng),
    }
}

fn jitter(rng: &mut ChaCha8Rng, center: u32, spread: u32) -> u32 {
    center - spread + rng.random_range(0..=2 * spread)
}

fn drift_values(interval: u32, progress: f64, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let spread = pct(interval, 1.0);
    let io = pct(interval, 10.0) - spread + rng.random_range(0..=2 * spread);
    let trend = (interval as f64 * (0.75 - 0.45 * progress)).round() as i64;
    // CPU minus WAIT is 2·cpu + io - interval; its sign follows the noiseless
    // trend so the two series cross exactly once.
    let above = 2 * trend + pct(interval, 10.0) as i64 - interval as i64 > 0;
    let half_gap = interval as i64 - io as i64;
    let cpu =
        if above { trend.max(half_gap.div_euclid(2) + 1) } else { trend.min((half_gap + 1).div_euclid(2) - 1) } as u32;
    let wait = interval - io - cpu;

    let mut cuts: Vec<u32> = (0..5).map(|_| rng.random_range(0..=wait)).collect();
    cuts.sort_unstable();
    let mut waits = Vec::with_capacity(6);
    let mut last = 0;
    for c in cuts {
        waits.push(c - last);
        last = c;
    }
    waits.push(wait - last);
    let user_io = rng.random_range(io * 6 / 10..=io * 9 / 10);
    let mut out = waits;
    out.extend([user_io, io - user_io, cpu]);
    out
}

fn apply_defect(values: &mut [u32], names: &[&str], defect: &DefectInjection) {
    match defect.kind {
        DefectKind::Unaccounted => {
            let (i, _) = values.iter().enumerate().max_by_key(|(i, v)| (**v, std::cmp::Reverse(*i))).expect("metrics");
            values[i] -= defect.magnitude_ms.min(values[i]);
        }
        DefectKind::DoubleCounted => {
            let i = names.iter().position(|n| CPU_METRICS.contains(n)).unwrap_or(0);
            values[i] += defect.magnitude_ms;
        }
    }
}

/// Splits `value` into events. Wait metrics get both a wait and a service
/// component per event; CPU metrics are service time only.
fn decompose(metric: &str, value: u32, rng: &mut ChaCha8Rng) -> MetricComponents {
    let pure_service = CPU_METRICS.contains(&metric);
    let mut waits = Vec::new();
    let mut services = Vec::new();
    if value > 0 {
        let events = rng.random_range(1..=5u32).min(value);
        let mut cuts: Vec<u32> = (1..events).map(|_| rng.random_range(0..=value)).collect();
        cuts.sort_unstable();
        let mut last = 0;
        for end in cuts.into_iter().chain(std::iter::once(value)) {
            let duration = end - last;
            last = end;
            if pure_service {
                waits.push(0);
                services.push(duration);
            } else {
                let service = rng.random_range(0..=duration / 10);
                waits.push(duration - service);
                services.push(service);
            }
        }
    }
    MetricComponents { metric: metric.to_string(), waits, services }
}

/// `R` is the active (non-idle) time, `W_O` the database waits and `B` the
/// CPU time, all from the stored values, so `T_u` equals the sum-rule residual.
fn accounting_record(names: &[&str], values: &[u32], interval: u32) -> TimeAccountingRecord {
    let find = |metric: &str| names.iter().position(|n| *n == metric).map(|i| values[i] as f64).unwrap_or(0.0);
    let response = interval as f64 - find("IDLE");
    TimeAccountingRecord::new(response.max(0.0), find("DB_WAIT") + find("DB_CONTENTION"), find("CPU_USAGE"))
        .expect("nonnegative by construction")
}
