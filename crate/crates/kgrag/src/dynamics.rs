//! Streaming updates and the static-vs-dynamic benchmark harness.
//!
//! Telecom change events arrive as timestamped JSONL records. Each event
//! kind carries a fixed derivation onto graph triples (a tilt adjustment
//! becomes a `tilt_deg` fact, a spectrum reassignment becomes the new
//! `last_change` record, and so on), so applying an event is an ordinary
//! insert that supersedes the stale value. The bench harness replays a
//! stream under a simulated clock against change-sensitive probe queries
//! and measures post-change accuracy, staleness, and event-to-answer delay
//! for a graph that ingests the stream versus one frozen at build time.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Engine, EngineError};
use crate::genclient::GenerationBackend;
use crate::ingest::{ingest_document, AliasTable, IngestOptions, RuleSet};
use crate::ontology::Ontology;
use crate::retrieval::{DualEncoder, QueryContext, TripleIndex, Weights};
use crate::store::{
    InsertOutcome, KnowledgeGraph, Literal, Node, Provenance, SourceFamily, StoreError, Triple,
    TripleId,
};
use crate::verbalize::TemplateSet;

/// Default virtual seconds between probe re-asks.
pub const DEFAULT_POLL_INTERVAL_S: u64 = 1;

/// Default cap on re-asks per probe before it is declared never-correct.
pub const DEFAULT_MAX_POLLS: u32 = 8;

/// Default event batch size for cost measurement.
pub const DEFAULT_COST_BATCH: usize = 100;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("event {event_id} at {timestamp} arrives before already-applied {last}")]
    OutOfOrder {
        event_id: String,
        timestamp: DateTime<Utc>,
        last: DateTime<Utc>,
    },
    #[error("event {event_id} rejected: {reason}")]
    Rejected { event_id: String, reason: String },
    #[error("bad probe: {0}")]
    BadProbe(String),
    #[error("stream line {line}: {message}")]
    ParseLine { line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("reading stream file: {0}")]
    Io(#[from] std::io::Error),
}

/// Kind-specific payload of one change event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SpectrumReassign { band: String },
    TiltAdjust { degrees: i64 },
    UpfScale { cpu_share: i64 },
    SlicePolicyChange { policy: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SpectrumReassign { .. } => "spectrum_reassign",
            EventKind::TiltAdjust { .. } => "tilt_adjust",
            EventKind::UpfScale { .. } => "upf_scale",
            EventKind::SlicePolicyChange { .. } => "slice_policy_change",
        }
    }

    /// Entity type implied for the event's target, used to auto-register
    /// targets the graph has not seen yet.
    pub fn target_type(&self) -> &'static str {
        match self {
            EventKind::SpectrumReassign { .. } | EventKind::TiltAdjust { .. } => "gNodeB",
            EventKind::UpfScale { .. } => "UPF",
            EventKind::SlicePolicyChange { .. } => "Slice",
        }
    }
}

/// RFC 3339 with a trailing Z and whole seconds, as stream files use.
pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// One timestamped change event from a telemetry stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub event_id: String,
    pub timestamp: DateTime<Utc>,
    pub target: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl UpdateEvent {
    /// The graph facts this event asserts. Every derivation is a single
    /// functional fact about the target, so replays are idempotent and
    /// stale values supersede naturally.
    pub fn derived_triples(&self) -> Vec<(String, String, Node)> {
        let target = self.target.clone();
        match &self.kind {
            EventKind::SpectrumReassign { band } => vec![(
                target,
                "last_change".to_string(),
                Node::Literal(Literal::Text(format!(
                    "spectrum reassign to {band} at {}",
                    format_timestamp(self.timestamp)
                ))),
            )],
            EventKind::TiltAdjust { degrees } => vec![(
                target,
                "tilt_deg".to_string(),
                Node::Literal(Literal::Integer(*degrees)),
            )],
            EventKind::UpfScale { cpu_share } => vec![(
                target,
                "cpu_share".to_string(),
                Node::Literal(Literal::Integer(*cpu_share)),
            )],
            EventKind::SlicePolicyChange { policy } => vec![(
                target,
                "policy".to_string(),
                Node::Literal(Literal::Text(policy.clone())),
            )],
        }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            doc_uri: format!("stream://{}", self.event_id),
            paragraph: 0,
            source_family: SourceFamily::Telemetry,
            revision_date: self.timestamp,
        }
    }
}

/// Parse one event per JSONL line, enforcing non-decreasing timestamps.
pub fn read_stream_jsonl(text: &str) -> Result<Vec<UpdateEvent>, DynamicsError> {
    let mut events: Vec<UpdateEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: UpdateEvent =
            serde_json::from_str(line).map_err(|e| DynamicsError::ParseLine {
                line: i + 1,
                message: e.to_string(),
            })?;
        if let Some(prev) = events.last() {
            if event.timestamp < prev.timestamp {
                return Err(DynamicsError::ParseLine {
                    line: i + 1,
                    message: format!(
                        "timestamp {} decreases below {}",
                        format_timestamp(event.timestamp),
                        format_timestamp(prev.timestamp)
                    ),
                });
            }
        }
        events.push(event);
    }
    Ok(events)
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<UpdateEvent>, DynamicsError> {
    let text = std::fs::read_to_string(path)?;
    read_stream_jsonl(&text)
}

/// What one event application did to the graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplySummary {
    pub event_id: String,
    pub added: Vec<TripleId>,
    pub superseded: Vec<TripleId>,
    pub already_present: usize,
    pub apply_ms: f64,
}

/// Insert an event's derived triples into the graph. Targets unknown to the
/// graph are registered under the kind's implied type first; a target
/// already registered under a different type is an error, not a retype.
pub fn apply_to_graph(
    kg: &mut KnowledgeGraph,
    event: &UpdateEvent,
) -> Result<(Vec<TripleId>, Vec<TripleId>, usize), DynamicsError> {
    kg.register_entity(&event.target, event.kind.target_type())
        .map_err(|e| DynamicsError::Rejected {
            event_id: event.event_id.clone(),
            reason: e.to_string(),
        })?;
    let mut added = Vec::new();
    let mut superseded = Vec::new();
    let mut already_present = 0;
    for (subject, relation, object) in event.derived_triples() {
        let triple = Triple::extracted(
            &subject,
            &relation,
            object,
            event.provenance(),
            event.timestamp,
        );
        match kg.insert(triple)? {
            InsertOutcome::Inserted { id } => added.push(id),
            InsertOutcome::SupersededPrior { id, superseded: old } => {
                added.push(id);
                superseded.push(old);
            }
            InsertOutcome::AlreadyPresent { .. } => already_present += 1,
            InsertOutcome::RejectedSchema { reason } => {
                return Err(DynamicsError::Rejected { event_id: event.event_id.clone(), reason })
            }
            InsertOutcome::RejectedConflict { conflicting, .. } => {
                return Err(DynamicsError::Rejected {
                    event_id: event.event_id.clone(),
                    reason: format!("conflicts with live triple {conflicting}"),
                })
            }
        }
    }
    Ok((added, superseded, already_present))
}

/// Serializes a stream onto one engine, rejecting out-of-order events and
/// keeping the index in sync after every application.
#[derive(Debug, Clone, Default)]
pub struct EventApplier {
    last_timestamp: Option<DateTime<Utc>>,
}

impl EventApplier {
    pub fn new() -> Self {
        EventApplier::default()
    }

    pub fn apply(
        &mut self,
        engine: &mut Engine,
        event: &UpdateEvent,
    ) -> Result<ApplySummary, DynamicsError> {
        if let Some(last) = self.last_timestamp {
            if event.timestamp < last {
                return Err(DynamicsError::OutOfOrder {
                    event_id: event.event_id.clone(),
                    timestamp: event.timestamp,
                    last,
                });
            }
        }
        let start = Instant::now();
        let (added, superseded, already_present) =
            engine.mutate(|kg| apply_to_graph(kg, event))??;
        let apply_ms = start.elapsed().as_secs_f64() * 1000.0;
        self.last_timestamp = Some(event.timestamp);
        Ok(ApplySummary {
            event_id: event.event_id.clone(),
            added,
            superseded,
            already_present,
            apply_ms,
        })
    }
}

/// One change-sensitive benchmark query: what the mock answers before the
/// triggering event applies, and what it must answer afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub query: String,
    pub pre_expected: String,
    pub post_expected: String,
    pub event_id: String,
}

pub fn read_probes_jsonl(text: &str) -> Result<Vec<Probe>, DynamicsError> {
    let mut probes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let probe: Probe = serde_json::from_str(line).map_err(|e| DynamicsError::ParseLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if probe.query.trim().is_empty() {
            return Err(DynamicsError::BadProbe(format!("line {}: empty query", i + 1)));
        }
        probes.push(probe);
    }
    Ok(probes)
}

pub fn load_probes(path: impl AsRef<Path>) -> Result<Vec<Probe>, DynamicsError> {
    let text = std::fs::read_to_string(path)?;
    read_probes_jsonl(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    /// Events never apply; the graph stays frozen at build time.
    Static,
    /// Events apply at their stream timestamps under the simulated clock.
    Dynamic,
}

impl std::str::FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "static" => Ok(BenchMode::Static),
            "dynamic" => Ok(BenchMode::Dynamic),
            other => Err(format!("unknown mode `{other}`, expected static or dynamic")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub poll_interval_s: u64,
    pub max_polls: u32,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            poll_interval_s: DEFAULT_POLL_INTERVAL_S,
            max_polls: DEFAULT_MAX_POLLS,
        }
    }
}

/// How one polled answer compared against the probe's expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollVerdict {
    /// Matches the post-change expectation.
    Correct,
    /// Still matches the pre-change expectation.
    Stale,
    /// Matches neither expectation.
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollSample {
    pub at: DateTime<Utc>,
    pub verdict: PollVerdict,
    pub answer: String,
}

/// Full poll history for one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub query: String,
    pub event_id: String,
    pub event_time: DateTime<Utc>,
    pub samples: Vec<PollSample>,
    /// Seconds from event arrival to the first correct answer; absent when
    /// the probe never became correct within the poll budget.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delay_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: BenchMode,
    pub poll_interval_s: u64,
    pub probes: usize,
    pub events_applied: usize,
    /// Fraction of probes whose answer eventually matched the post-change
    /// expectation. Vacuously 1 with no probes.
    pub post_change_accuracy: f64,
    /// Fraction of all post-change poll answers still matching the
    /// pre-change expectation.
    pub staleness_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delay_median_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delay_p95_s: Option<f64>,
    pub trace: Vec<ProbeTrace>,
}

/// Median as the average of the two middle values on even counts.
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Nearest-rank 95th percentile.
fn p95(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Replay a stream against change-sensitive probes under a simulated clock.
///
/// Probes re-ask their query every `poll_interval_s` virtual seconds after
/// their triggering event, stopping at the first correct answer or after
/// `max_polls` attempts. Dynamic mode applies each event at its timestamp
/// before any poll scheduled at or after it; static mode applies nothing.
/// The initial engine is never mutated.
pub fn run_bench(
    initial: &Engine,
    events: &[UpdateEvent],
    probes: &[Probe],
    mode: BenchMode,
    opts: &BenchOptions,
) -> Result<BenchReport, DynamicsError> {
    if opts.poll_interval_s == 0 {
        return Err(DynamicsError::BadProbe("poll interval must be at least 1".to_string()));
    }
    if opts.max_polls == 0 {
        return Err(DynamicsError::BadProbe("max polls must be at least 1".to_string()));
    }
    let mut event_time = std::collections::BTreeMap::new();
    for e in events {
        event_time.insert(e.event_id.as_str(), e.timestamp);
    }
    let poll = Duration::seconds(opts.poll_interval_s as i64);

    struct ProbeState {
        event_time: DateTime<Utc>,
        next_poll: DateTime<Utc>,
        attempts: u32,
        done: bool,
        samples: Vec<PollSample>,
        delay_s: Option<f64>,
    }
    let mut states = Vec::with_capacity(probes.len());
    for probe in probes {
        let t = *event_time.get(probe.event_id.as_str()).ok_or_else(|| {
            DynamicsError::BadProbe(format!(
                "probe `{}` references unknown event {}",
                probe.query, probe.event_id
            ))
        })?;
        states.push(ProbeState {
            event_time: t,
            next_poll: t + poll,
            attempts: 0,
            done: false,
            samples: Vec::new(),
            delay_s: None,
        });
    }

    let mut engine = initial.clone();
    let mut applier = EventApplier::new();
    let mut next_event = 0usize;
    let mut events_applied = 0usize;

    loop {
        // Earliest pending action; events beat polls at equal times so a
        // poll always sees every event at or before its own timestamp.
        let event_due: Option<DateTime<Utc>> = match mode {
            BenchMode::Dynamic if next_event < events.len() => Some(events[next_event].timestamp),
            _ => None,
        };
        let poll_due: Option<(usize, DateTime<Utc>)> = states
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.done)
            .map(|(i, s)| (i, s.next_poll))
            .min_by_key(|&(i, t)| (t, i));

        match (event_due, poll_due) {
            (None, None) => break,
            (Some(te), pd) if pd.map_or(true, |(_, tp)| te <= tp) => {
                applier.apply(&mut engine, &events[next_event])?;
                next_event += 1;
                events_applied += 1;
            }
            (_, Some((i, at))) => {
                let probe = &probes[i];
                let state = &mut states[i];
                let bundle = engine.answer_query(&probe.query, &QueryContext::empty())?;
                let verdict = if bundle.answer.text == probe.post_expected {
                    PollVerdict::Correct
                } else if bundle.answer.text == probe.pre_expected {
                    PollVerdict::Stale
                } else {
                    PollVerdict::Other
                };
                state.samples.push(PollSample { at, verdict, answer: bundle.answer.text });
                state.attempts += 1;
                match verdict {
                    PollVerdict::Correct => {
                        state.delay_s =
                            Some((at - state.event_time).num_milliseconds() as f64 / 1000.0);
                        state.done = true;
                    }
                    _ if state.attempts >= opts.max_polls => state.done = true,
                    _ => state.next_poll = at + poll,
                }
            }
            (Some(_), None) => unreachable!("event arm catches this via its guard"),
        }
    }

    let mut stale = 0usize;
    let mut answers = 0usize;
    let mut correct_probes = 0usize;
    let mut delays = Vec::new();
    let mut trace = Vec::with_capacity(probes.len());
    for (probe, state) in probes.iter().zip(states) {
        answers += state.samples.len();
        stale += state
            .samples
            .iter()
            .filter(|s| s.verdict == PollVerdict::Stale)
            .count();
        if let Some(d) = state.delay_s {
            correct_probes += 1;
            delays.push(d);
        }
        trace.push(ProbeTrace {
            query: probe.query.clone(),
            event_id: probe.event_id.clone(),
            event_time: state.event_time,
            samples: state.samples,
            delay_s: state.delay_s,
        });
    }
    delays.sort_by(f64::total_cmp);

    Ok(BenchReport {
        mode,
        poll_interval_s: opts.poll_interval_s,
        probes: probes.len(),
        events_applied,
        post_change_accuracy: if probes.is_empty() {
            1.0
        } else {
            correct_probes as f64 / probes.len() as f64
        },
        staleness_rate: if answers == 0 { 0.0 } else { stale as f64 / answers as f64 },
        delay_median_s: if delays.is_empty() { None } else { Some(median(&delays)) },
        delay_p95_s: if delays.is_empty() { None } else { Some(p95(&delays)) },
        trace,
    })
}

/// Everything cost measurement needs to build a graph twice and query it.
pub struct CostInputs<'a> {
    pub ontology: Arc<Ontology>,
    pub templates: TemplateSet,
    pub aliases: AliasTable,
    pub rules: RuleSet,
    pub backend: Arc<dyn GenerationBackend>,
    pub weights: Weights,
    pub k: usize,
    /// Documents ingested at construction: (uri, text, family).
    pub docs: &'a [(String, String, SourceFamily)],
    /// Pre-built facts inserted at construction, e.g. a triples dump.
    pub seed_triples: &'a [Triple],
    pub events: &'a [UpdateEvent],
    pub queries: &'a [String],
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub queries: usize,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub corpus_docs: usize,
    pub corpus_triples: usize,
    /// Wall time to build graph and index from the corpus.
    pub construction_s: f64,
    pub batch_events: usize,
    /// Wall time to apply the batch event by event with incremental
    /// reindexing.
    pub incremental_batch_s: f64,
    /// Wall time to rebuild graph and index from scratch over corpus plus
    /// batch.
    pub rebuild_s: f64,
    /// Whether the incremental and rebuilt graphs agree on live triples and
    /// index contents.
    pub rebuild_equal: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub query_latency: Option<LatencyStats>,
}

fn construct_graph(inputs: &CostInputs<'_>) -> Result<KnowledgeGraph, DynamicsError> {
    let mut kg = KnowledgeGraph::new(Arc::clone(&inputs.ontology));
    for triple in inputs.seed_triples {
        kg.insert(triple.clone())?;
    }
    for (uri, text, family) in inputs.docs {
        ingest_document(
            &mut kg,
            uri,
            text,
            *family,
            &inputs.rules,
            &inputs.aliases,
            None,
            &IngestOptions::default(),
        )
        .map_err(EngineError::Ingest)?;
    }
    Ok(kg)
}

fn live_set(kg: &KnowledgeGraph) -> BTreeSet<TripleId> {
    kg.live_triples().map(|t| t.id).collect()
}

/// Measure construction cost, incremental-vs-rebuild cost for one event
/// batch, and query latency over a fixed query set.
pub fn measure_costs(inputs: &CostInputs<'_>) -> Result<CostReport, DynamicsError> {
    // One-time construction: graph plus index from the corpus.
    let started = Instant::now();
    let kg = construct_graph(inputs)?;
    let mut engine = Engine::new(
        kg,
        inputs.templates.clone(),
        inputs.aliases.clone(),
        inputs.rules.clone(),
        Arc::clone(&inputs.backend),
        inputs.weights,
        inputs.k,
    )?;
    let construction_s = started.elapsed().as_secs_f64();
    let corpus_triples = engine.kg().live_triples().count();

    // Incremental: apply the batch event by event on the warm engine.
    let batch: Vec<&UpdateEvent> = inputs.events.iter().take(inputs.batch_size).collect();
    let started = Instant::now();
    let mut applier = EventApplier::new();
    for event in &batch {
        applier.apply(&mut engine, event)?;
    }
    let incremental_batch_s = started.elapsed().as_secs_f64();

    // Rebuild: corpus plus batch from scratch, one full index build.
    let started = Instant::now();
    let mut rebuilt = construct_graph(inputs)?;
    for event in &batch {
        apply_to_graph(&mut rebuilt, event)?;
    }
    let rebuilt_index = TripleIndex::build(
        &rebuilt,
        DualEncoder::bundled(),
        Arc::new(inputs.templates.clone()),
        Arc::new(inputs.aliases.surface_forms()),
    )
    .map_err(EngineError::Retrieval)?;
    let rebuild_s = started.elapsed().as_secs_f64();

    let rebuild_equal = live_set(engine.kg()) == live_set(&rebuilt)
        && engine.index().same_entries(&rebuilt_index);

    let query_latency = if inputs.queries.is_empty() {
        None
    } else {
        let mut samples = Vec::with_capacity(inputs.queries.len());
        for query in inputs.queries {
            let started = Instant::now();
            engine.answer_query(query, &QueryContext::empty())?;
            samples.push(started.elapsed().as_secs_f64() * 1000.0);
        }
        samples.sort_by(f64::total_cmp);
        Some(LatencyStats {
            queries: samples.len(),
            min_ms: samples[0],
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            p95_ms: p95(&samples),
        })
    };

    Ok(CostReport {
        corpus_docs: inputs.docs.len(),
        corpus_triples,
        construction_s,
        batch_events: batch.len(),
        incremental_batch_s,
        rebuild_s,
        rebuild_equal,
        query_latency,
    })
}
