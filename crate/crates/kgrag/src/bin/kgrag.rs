//! Command-line front end: build graphs from documents or triple files,
//! train and apply link prediction, answer questions with citations, audit
//! answers, replay event streams, and serve the engine over HTTP.
//!
//! Machine-readable output (JSON) goes to stdout; diagnostics go to stderr
//! prefixed with the failing stage. Exit codes: 0 success, 1 runtime error,
//! 2 usage error.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kgrag::dynamics::{load_probes, load_stream, run_bench, BenchMode, BenchOptions, CostInputs};
use kgrag::engine::{Engine, EngineConfig};
use kgrag::ingest::{ingest_document, AliasTable, IngestOptions, MockExtractor, RuleSet};
use kgrag::linkpred::{
    admit, propose, EmbeddingConfig, ProposeOptions, TransEModel, DEFAULT_MAX_CANDIDATES,
    DEFAULT_TAU,
};
use kgrag::ontology::Ontology;
use kgrag::retrieval::{retrieve, QueryContext, RetrieveOptions, Weights};
use kgrag::store::{KnowledgeGraph, SourceFamily};
use kgrag::audit::load_answers;
use kgrag::{audit_answers, measure_costs};

#[derive(Parser)]
#[command(
    name = "kgrag",
    version,
    about = "Knowledge-graph question answering for telecom network operations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract triples from documents and write a graph dump.
    Ingest(IngestArgs),
    /// Load a triples file, validate it against the ontology, and redump it.
    BuildKg(BuildKgArgs),
    /// Train embeddings, propose missing edges, and admit them.
    #[command(subcommand)]
    Linkpred(LinkpredCommand),
    /// Answer a question with citations, or list ranked evidence.
    Query(QueryArgs),
    /// Audit answer sentences against the graph.
    Audit(AuditArgs),
    /// Replay an event stream against probe questions, static or dynamic.
    Bench(BenchArgs),
    /// Measure construction, incremental-update, and query costs.
    Costs(CostsArgs),
    /// Serve the engine over HTTP.
    Serve(ServeArgs),
    /// Write the graph as a JSONL dump.
    Dump(DumpArgs),
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::BuildKg(_) => "build-kg",
            Command::Linkpred(LinkpredCommand::Train(_)) => "linkpred train",
            Command::Linkpred(LinkpredCommand::Propose(_)) => "linkpred propose",
            Command::Linkpred(LinkpredCommand::Admit(_)) => "linkpred admit",
            Command::Query(_) => "query",
            Command::Audit(_) => "audit",
            Command::Bench(_) => "bench",
            Command::Costs(_) => "costs",
            Command::Serve(_) => "serve",
            Command::Dump(_) => "dump",
        }
    }
}

/// Where a full engine comes from: a TOML config file or the bundled
/// Slice-27 network scenario.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct EngineSource {
    /// Engine configuration file (TOML).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Use the bundled network scenario.
    #[arg(long)]
    demo: bool,
}

impl EngineSource {
    fn engine(&self) -> Result<Engine> {
        if self.demo {
            return Ok(kgrag::demo_engine()?);
        }
        let path = self.config.as_ref().expect("clap group enforces one source");
        let config = EngineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?;
        Ok(Engine::from_config(&config)?)
    }

    fn service_bind(&self) -> Result<Option<String>> {
        match &self.config {
            Some(path) => Ok(Some(EngineConfig::load(path)?.service.bind)),
            None => Ok(None),
        }
    }
}

/// Where a bare graph comes from: a triples file plus ontology, or the
/// bundled scenario.
#[derive(Args)]
struct GraphSource {
    /// Triples JSONL to load (construction rows or a prior dump).
    #[arg(long = "in", value_name = "FILE", conflicts_with = "demo", requires = "ontology")]
    input: Option<PathBuf>,
    /// Ontology file validating the triples.
    #[arg(long, value_name = "FILE", conflicts_with = "demo", requires = "input")]
    ontology: Option<PathBuf>,
    /// Use the bundled network scenario.
    #[arg(long, conflicts_with = "input")]
    demo: bool,
}

impl GraphSource {
    fn graph(&self) -> Result<KnowledgeGraph> {
        if self.demo {
            return Ok(kgrag::demo_graph()?);
        }
        let (Some(input), Some(ontology)) = (&self.input, &self.ontology) else {
            bail!("pass --in <triples.jsonl> with --ontology <file>, or --demo");
        };
        let ontology = Arc::new(Ontology::load(ontology)?);
        let (kg, _) = KnowledgeGraph::load_file(ontology, input)?;
        Ok(kg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Spec,
    #[value(name = "vendor_doc")]
    VendorDoc,
    Log,
    Telemetry,
    Synthetic,
}

impl From<FamilyArg> for SourceFamily {
    fn from(f: FamilyArg) -> SourceFamily {
        match f {
            FamilyArg::Spec => SourceFamily::Spec,
            FamilyArg::VendorDoc => SourceFamily::VendorDoc,
            FamilyArg::Log => SourceFamily::Log,
            FamilyArg::Telemetry => SourceFamily::Telemetry,
            FamilyArg::Synthetic => SourceFamily::Synthetic,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Document to ingest; repeat for several.
    #[arg(long = "doc", value_name = "FILE", required = true)]
    docs: Vec<PathBuf>,
    /// Ontology file.
    #[arg(long, value_name = "FILE")]
    ontology: PathBuf,
    /// Extraction rules file (JSON).
    #[arg(long, value_name = "FILE")]
    rules: PathBuf,
    /// Alias table file (JSON map of surface form to canonical id).
    #[arg(long, value_name = "FILE")]
    aliases: PathBuf,
    /// Fixture extractor file; enables the model channel next to the rules.
    #[arg(long, value_name = "FILE")]
    extractor: Option<PathBuf>,
    /// Source family recorded in provenance.
    #[arg(long, value_enum, default_value = "spec")]
    family: FamilyArg,
    /// Existing dump to extend instead of starting empty.
    #[arg(long, value_name = "FILE")]
    store: Option<PathBuf>,
    /// Where to write the updated dump.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Drop model candidates below this confidence.
    #[arg(long, value_name = "P")]
    min_confidence: Option<f64>,
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    doc: String,
    #[serde(flatten)]
    report: &'a kgrag::ingest::IngestReport,
}

fn run_ingest(args: &IngestArgs) -> Result<()> {
    let ontology = Arc::new(Ontology::load(&args.ontology)?);
    let rules = RuleSet::load(&args.rules, &ontology)?;
    let aliases = AliasTable::load(&args.aliases)?;
    let extractor = match &args.extractor {
        Some(path) => Some(MockExtractor::load(path)?),
        None => None,
    };
    let mut kg = match &args.store {
        Some(path) => KnowledgeGraph::load_file(Arc::clone(&ontology), path)?.0,
        None => KnowledgeGraph::new(Arc::clone(&ontology)),
    };
    let mut opts = IngestOptions::default();
    if let Some(min) = args.min_confidence {
        opts.min_confidence = min;
    }

    let mut reports = Vec::new();
    for doc in &args.docs {
        let text = std::fs::read_to_string(doc)
            .with_context(|| format!("reading {}", doc.display()))?;
        let uri = format!("file://{}", doc.display());
        let report = ingest_document(
            &mut kg,
            &uri,
            &text,
            args.family.into(),
            &rules,
            &aliases,
            extractor.as_ref().map(|e| e as _),
            &opts,
        )?;
        eprintln!(
            "ingest: {} chunks={} inserted={} rejects={}",
            doc.display(),
            report.chunks,
            report.inserted,
            report.rejects.len()
        );
        reports.push((uri, report));
    }

    if let Some(out) = &args.out {
        kg.dump_to_file(out)?;
        eprintln!("ingest: wrote dump {}", out.display());
    }
    let summaries: Vec<IngestSummary> = reports
        .iter()
        .map(|(uri, report)| IngestSummary { doc: uri.clone(), report })
        .collect();
    print_json(&serde_json::json!({
        "docs": summaries,
        "live_triples": kg.live_triples().count(),
        "revision": kg.revision(),
    }))
}

#[derive(Args)]
struct BuildKgArgs {
    /// Triples JSONL to load (construction rows or a prior dump).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Ontology file; omit with --demo to use the bundled one.
    #[arg(long, value_name = "FILE", conflicts_with = "demo")]
    ontology: Option<PathBuf>,
    /// Validate against the bundled ontology.
    #[arg(long)]
    demo: bool,
    /// Where to write the canonical dump.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_build_kg(args: &BuildKgArgs) -> Result<()> {
    let ontology = if args.demo {
        kgrag::bundled_ontology()?
    } else if let Some(path) = &args.ontology {
        Arc::new(Ontology::load(path)?)
    } else {
        bail!("pass --ontology <file> or --demo");
    };
    let (kg, outcomes) = KnowledgeGraph::load_file(ontology, &args.input)?;
    if let Some(out) = &args.out {
        kg.dump_to_file(out)?;
        eprintln!("build-kg: wrote dump {}", out.display());
    }
    let inserted = outcomes.iter().filter(|o| o.is_inserted()).count();
    print_json(&serde_json::json!({
        "rows": outcomes.len(),
        "inserted": inserted,
        "live_triples": kg.live_triples().count(),
        "revision": kg.revision(),
    }))
}

#[derive(Subcommand)]
enum LinkpredCommand {
    /// Train translational embeddings on the graph's entity edges.
    Train(LinkpredTrainArgs),
    /// Score candidate missing edges above a threshold.
    Propose(LinkpredProposeArgs),
    /// Propose and insert the candidates the graph accepts.
    Admit(LinkpredAdmitArgs),
}

#[derive(Args)]
struct LinkpredTrainArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Where to write the trained model (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn run_linkpred_train(args: &LinkpredTrainArgs) -> Result<()> {
    let kg = args.graph.graph()?;
    let config = EmbeddingConfig {
        dim: args.dim,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        margin: args.margin,
        seed: args.seed,
    };
    let model = TransEModel::from_graph(&kg, &config)?;
    model.save(&args.out)?;
    eprintln!("linkpred train: wrote model {}", args.out.display());
    print_json(&serde_json::json!({
        "dim": model.dim(),
        "entities": model.entity_ids().count(),
        "relations": model.relation_ids().count(),
        "epochs": args.epochs,
        "seed": args.seed,
        "model": args.out.display().to_string(),
    }))
}

#[derive(Args)]
struct LinkpredProposeArgs {
    #[command(flatten)]
    graph: GraphSource,
    /// Trained model file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Minimum prediction score.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Keep at most this many candidates.
    #[arg(long = "max", default_value_t = DEFAULT_MAX_CANDIDATES)]
    max_candidates: usize,
}

fn run_linkpred_propose(args: &LinkpredProposeArgs) -> Result<()> {
    let kg = args.graph.graph()?;
    let model = TransEModel::load(&args.model)?;
    let opts = ProposeOptions { tau: args.tau, max_candidates: args.max_candidates };
    let proposals = propose(&model, &kg, &opts);
    eprintln!("linkpred propose: {} candidates above {}", proposals.len(), args.tau);
    print_json(&proposals)
}

#[derive(Args)]
struct LinkpredAdmitArgs {
    #[command(flatten)]
    propose: LinkpredProposeArgs,
    /// Where to write the updated dump.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_linkpred_admit(args: &LinkpredAdmitArgs) -> Result<()> {
    let mut kg = args.propose.graph.graph()?;
    let model = TransEModel::load(&args.propose.model)?;
    let opts =
        ProposeOptions { tau: args.propose.tau, max_candidates: args.propose.max_candidates };
    let proposals = propose(&model, &kg, &opts);
    let report = admit(&mut kg, &proposals, args.propose.tau, chrono::Utc::now())?;
    if let Some(out) = &args.out {
        kg.dump_to_file(out)?;
        eprintln!("linkpred admit: wrote dump {}", out.display());
    }
    eprintln!(
        "linkpred admit: admitted={} rejected_schema={} rejected_conflict={}",
        report.admitted.len(),
        report.rejected_schema,
        report.rejected_conflict
    );
    print_json(&report)
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    source: EngineSource,
    /// The question to answer.
    #[arg(long)]
    text: String,
    /// Evidence lines to retrieve.
    #[arg(long)]
    k: Option<usize>,
    /// Ranking weights as sim,ontology,context (e.g. 0.7,0.2,0.1).
    #[arg(long, value_name = "W,W,W")]
    weights: Option<String>,
    /// Drop evidence whose semantic class differs from the query's.
    #[arg(long)]
    hard_filter: bool,
    /// Entity id already in play; repeat for several.
    #[arg(long = "context", value_name = "ENTITY")]
    context: Vec<String>,
    /// Print the ranked evidence with score decomposition instead of
    /// generating an answer.
    #[arg(long)]
    evidence_only: bool,
}

fn parse_weights(text: &str) -> Result<Weights> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("weights must be three comma-separated numbers, got {text:?}");
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.trim().parse().with_context(|| format!("weight {part:?}"))?;
    }
    let weights = Weights { sim: values[0], ont: values[1], ctx: values[2] };
    weights.validate()?;
    Ok(weights)
}

fn run_query(args: &QueryArgs) -> Result<()> {
    let mut engine = args.source.engine()?;
    let weights = match &args.weights {
        Some(text) => parse_weights(text)?,
        None => engine.weights(),
    };
    let k = args.k.unwrap_or_else(|| engine.k());
    engine.set_ranking(weights, k)?;
    let mut ctx = QueryContext::empty();
    for entity in &args.context {
        ctx.note_entity(entity);
    }
    if args.evidence_only {
        let opts = RetrieveOptions { hard_filter: args.hard_filter, ..Default::default() };
        let evidence = retrieve(engine.index(), &args.text, &ctx, k, weights, opts)?;
        eprintln!("query: {} evidence lines", evidence.len());
        return print_json(&evidence);
    }
    if args.hard_filter {
        bail!("--hard-filter applies to --evidence-only listing");
    }
    let response = engine.respond(&args.text, &ctx)?;
    eprintln!(
        "query: answered with {} citations at revision {}",
        response.citations.len(),
        response.revision
    );
    print_json(&response)
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    source: EngineSource,
    /// Answer records to audit (JSONL of {question, answer}).
    #[arg(long, value_name = "FILE")]
    answers: PathBuf,
    /// Also write the report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_audit(args: &AuditArgs) -> Result<()> {
    let engine = args.source.engine()?;
    let records = load_answers(&args.answers)?;
    let report = audit_answers(engine.kg(), engine.aliases(), &records);
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", out.display()))?;
        eprintln!("audit: wrote report {}", out.display());
    }
    eprintln!("audit: {} answers, {} claims", report.answers.len(), report.totals.total());
    print_json(&report)
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Dynamic,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: EngineSource,
    /// Update events (JSONL); defaults to the bundled stream with --demo.
    #[arg(long, value_name = "FILE")]
    stream: Option<PathBuf>,
    /// Probe questions (JSONL); defaults to the bundled probes with --demo.
    #[arg(long, value_name = "FILE")]
    probes: Option<PathBuf>,
    /// Whether events apply at their timestamps or never.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Seconds between answer polls on the simulated clock.
    #[arg(long, value_name = "S")]
    poll_interval: Option<u64>,
    /// Give up on a probe after this many polls.
    #[arg(long, value_name = "N")]
    max_polls: Option<u32>,
    /// Also write the report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_bench_cmd(args: &BenchArgs) -> Result<()> {
    let engine = args.source.engine()?;
    let events = match &args.stream {
        Some(path) => load_stream(path)?,
        None if args.source.demo => kgrag::demo_stream()?,
        None => bail!("pass --stream <file> (only --demo bundles one)"),
    };
    let probes = match &args.probes {
        Some(path) => load_probes(path)?,
        None if args.source.demo => kgrag::demo_probes()?,
        None => bail!("pass --probes <file> (only --demo bundles them)"),
    };
    let mut opts = BenchOptions::default();
    if let Some(interval) = args.poll_interval {
        opts.poll_interval_s = interval;
    }
    if let Some(max) = args.max_polls {
        opts.max_polls = max;
    }
    let mode = match args.mode {
        ModeArg::Static => BenchMode::Static,
        ModeArg::Dynamic => BenchMode::Dynamic,
    };
    let report = run_bench(&engine, &events, &probes, mode, &opts)?;
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", out.display()))?;
        eprintln!("bench: wrote report {}", out.display());
    }
    eprintln!(
        "bench: accuracy={:.3} staleness={:.3} events_applied={}",
        report.post_change_accuracy, report.staleness_rate, report.events_applied
    );
    print_json(&report)
}

#[derive(Args)]
struct CostsArgs {
    #[command(flatten)]
    source: EngineSource,
    /// Directory of .txt documents forming the corpus; defaults to the
    /// bundled documents with --demo.
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    /// Update events (JSONL); defaults to the bundled stream with --demo.
    #[arg(long, value_name = "FILE")]
    stream: Option<PathBuf>,
    /// Questions to time, one per line; defaults to the bundled suite with
    /// --demo.
    #[arg(long, value_name = "FILE")]
    queries: Option<PathBuf>,
    /// Events applied as one incremental batch.
    #[arg(long, value_name = "N", default_value_t = 50)]
    batch: usize,
}

fn read_corpus(dir: &Path, family: SourceFamily) -> Result<Vec<(String, String, SourceFamily)>> {
    let mut docs = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus dir {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    for path in paths {
        let text =
            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        docs.push((format!("file://{}", path.display()), text, family));
    }
    Ok(docs)
}

fn run_costs(args: &CostsArgs) -> Result<()> {
    let engine = args.source.engine()?;
    let docs = match &args.corpus {
        Some(dir) => read_corpus(dir, SourceFamily::Spec)?,
        None if args.source.demo => kgrag::demo_documents(),
        None => bail!("pass --corpus <dir> (only --demo bundles documents)"),
    };
    let seed_triples = if args.source.demo && args.corpus.is_none() {
        kgrag::demo_seed_triples()?
    } else {
        Vec::new()
    };
    let events = match &args.stream {
        Some(path) => load_stream(path)?,
        None if args.source.demo => kgrag::demo_stream()?,
        None => bail!("pass --stream <file> (only --demo bundles one)"),
    };
    let queries: Vec<String> = match &args.queries {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        None if args.source.demo => {
            kgrag::demo_queries().into_iter().map(String::from).collect()
        }
        None => Vec::new(),
    };
    let inputs = CostInputs {
        ontology: Arc::clone(engine.kg().ontology()),
        templates: engine.templates().clone(),
        aliases: engine.aliases().clone(),
        rules: engine.rules().clone(),
        backend: Arc::clone(engine.backend()),
        weights: engine.weights(),
        k: engine.k(),
        docs: &docs,
        seed_triples: &seed_triples,
        events: &events[..args.batch.min(events.len())],
        queries: &queries,
        batch_size: args.batch,
    };
    let report = measure_costs(&inputs)?;
    eprintln!(
        "costs: construction={:.3}s incremental={:.3}s rebuild={:.3}s equal={}",
        report.construction_s, report.incremental_batch_s, report.rebuild_s, report.rebuild_equal
    );
    print_json(&report)
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    source: EngineSource,
    /// Listen address, overriding the config's service.bind.
    #[arg(long, value_name = "ADDR")]
    bind: Option<String>,
}

fn run_serve(args: &ServeArgs) -> Result<()> {
    let engine = args.source.engine()?;
    let bind = match &args.bind {
        Some(addr) => addr.clone(),
        None => args
            .source
            .service_bind()?
            .unwrap_or_else(|| "127.0.0.1:8080".to_string()),
    };
    eprintln!("serve: listening on {bind}");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(kgrag::service::serve(engine, &bind))?;
    Ok(())
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    source: EngineSource,
    /// Where to write the dump; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run_dump(args: &DumpArgs) -> Result<()> {
    let engine = args.source.engine()?;
    let dump = engine.kg().dump();
    match &args.out {
        Some(out) => {
            std::fs::write(out, &dump).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("dump: wrote {} ({} live triples)", out.display(), engine
                .kg()
                .live_triples()
                .count());
            print_json(&serde_json::json!({
                "out": out.display().to_string(),
                "live_triples": engine.kg().live_triples().count(),
                "revision": engine.revision(),
            }))
        }
        None => {
            print!("{dump}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => run_ingest(args),
        Command::BuildKg(args) => run_build_kg(args),
        Command::Linkpred(LinkpredCommand::Train(args)) => run_linkpred_train(args),
        Command::Linkpred(LinkpredCommand::Propose(args)) => run_linkpred_propose(args),
        Command::Linkpred(LinkpredCommand::Admit(args)) => run_linkpred_admit(args),
        Command::Query(args) => run_query(args),
        Command::Audit(args) => run_audit(args),
        Command::Bench(args) => run_bench_cmd(args),
        Command::Costs(args) => run_costs(args),
        Command::Serve(args) => run_serve(args),
        Command::Dump(args) => run_dump(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let stage = cli.command.stage();
    if let Err(e) = run(&cli) {
        eprintln!("kgrag {stage}: {e:#}");
        std::process::exit(1);
    }
}
