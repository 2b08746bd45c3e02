use std::fs;
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use zkadvice_core::advisor::{AdviseRequest, Advisor, AdvisorPolicy, ConditionChoice};
use zkadvice_core::attestation::{AttestationBackend, BackendId, ProgramId, ProofDocument};
use zkadvice_core::digest::Digest32;
use zkadvice_core::eval::{
    bench_attestation, fixture_corpus, generate_dataset, read_corpus, run_conditions, sample_profiles, timing_csv,
    write_corpus, write_reports, BenchSummary, DatasetSource, TimingRecord, CONCEPTS_PER_DOMAIN,
};
use zkadvice_core::inference::{infer, parse_profile, PROGRAM_VERSION};
use zkadvice_core::llm::DOMAINS;
use zkadvice_core::prompt::{standard_conditions, ConditionConfig, OptionPreset, PromptTemplates};

use crate::config::{build_backend, build_provider, load_spec, BackendKind, ProviderKind};

#[derive(Debug, Parser)]
#[command(name = "zkadvice", version, about = "Attested risk-tolerance inference and trait-aware advice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify an answers file without attesting it.
    Infer(InferArgs),
    /// Classify an answers file and print a proof document.
    Prove(ProveArgs),
    /// Verify a proof document against the pinned program.
    Verify(VerifyArgs),
    /// Ask for advice, optionally presenting a proof document.
    Advise(AdviseArgs),
    /// Draw the stratified 40-profile sample.
    Sample(SampleArgs),
    /// Time proof generation and verification.
    Bench(BenchArgs),
    /// Evaluation corpus and condition runs.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run an HTTP service.
    #[command(subcommand)]
    Serve(ServeCommand),
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Generate an evaluation corpus as JSON lines.
    Gen(EvalGenArgs),
    /// Run all conditions over a corpus and write reports.
    Run(EvalRunArgs),
}

#[derive(Debug, Subcommand)]
pub enum ServeCommand {
    Prover(ServeProverArgs),
    Advisor(ServeAdvisorArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Questionnaire JSON; the bundled questionnaire when omitted.
    #[arg(long, env = "ZKADVICE_SPEC")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock", env = "ZKADVICE_BACKEND")]
    pub backend: BackendKind,
    /// JSON with prove_cmd, verify_cmd and program_image.
    #[arg(long, env = "ZKADVICE_EXTERNAL_CONFIG")]
    pub external_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    #[arg(long, value_enum, default_value = "stub", env = "ZKADVICE_PROVIDER")]
    pub provider: ProviderKind,
    /// JSON remote provider settings (base_url, model, auth_token_env, ...).
    #[arg(long, env = "ZKADVICE_REMOTE_CONFIG")]
    pub remote_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdvisorArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Trusted program digest (hex); defaults to the backend's own program.
    #[arg(long, env = "ZKADVICE_PIN_DIGEST")]
    pub pin_digest: Option<String>,
    #[arg(long, env = "ZKADVICE_PIN_VERSION", default_value = PROGRAM_VERSION)]
    pub pin_version: String,
    /// Directory with contexts.json, context templates, proposal.txt and explanation.txt.
    #[arg(long, env = "ZKADVICE_TEMPLATES")]
    pub templates: Option<PathBuf>,
    /// JSON object of named option presets.
    #[arg(long, env = "ZKADVICE_PRESETS")]
    pub presets: Option<PathBuf>,
    /// Treat attestations older than this many seconds as expired.
    #[arg(long, env = "ZKADVICE_MAX_AGE_SECS")]
    pub max_age_secs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Answers file `{"answers": [...]}`, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Answers file `{"answers": [...]}`, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Journal timestamp; the current time when omitted.
    #[arg(long)]
    pub issued_at: Option<u64>,
    /// Also write the proof document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub proof: PathBuf,
    #[arg(long, env = "ZKADVICE_PIN_DIGEST")]
    pub pin_digest: Option<String>,
    #[arg(long, env = "ZKADVICE_PIN_VERSION", default_value = PROGRAM_VERSION)]
    pub pin_version: String,
    #[arg(long)]
    pub max_age_secs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[command(flatten)]
    pub advisor: AdvisorArgs,
    #[arg(long)]
    pub query: String,
    /// Free-text traits, used unverified.
    #[arg(long, default_value = "")]
    pub d0: String,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    /// `Cond0`..`Cond4`, or an explicit pair such as `c3,c1`.
    #[arg(long, default_value = "Cond0")]
    pub condition: String,
    /// Proof document to present.
    #[arg(long)]
    pub proof: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Backends to measure; unmeasurable ones are reported as N/A.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["mock", "external"])]
    pub backends: Vec<BackendKind>,
    #[arg(long, env = "ZKADVICE_EXTERNAL_CONFIG")]
    pub external_config: Option<PathBuf>,
    /// Sample seed for the 40 benchmark profiles.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repetitions: u32,
    /// Label recorded with every timing row.
    #[arg(long, default_value = "local", env = "ZKADVICE_HARDWARE")]
    pub hardware: String,
    #[arg(long, default_value = "results/bench")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalGenArgs {
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, value_delimiter = ',')]
    pub domains: Vec<String>,
    #[arg(long, default_value_t = CONCEPTS_PER_DOMAIN)]
    pub concepts: u32,
    #[arg(long, default_value = "corpus.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalRunArgs {
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// JSON-lines corpus; the bundled 1000-instance corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Only the first N instances.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Subset of Cond0..Cond4.
    #[arg(long, value_delimiter = ',')]
    pub conditions: Vec<String>,
    #[arg(long, env = "ZKADVICE_TEMPLATES")]
    pub templates: Option<PathBuf>,
    #[arg(long, default_value = "results/eval")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeProverArgs {
    #[arg(long, default_value = "127.0.0.1:8081", env = "ZKADVICE_PROVER_LISTEN")]
    pub listen: SocketAddr,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value = "issuance.jsonl", env = "ZKADVICE_ISSUANCE_LOG")]
    pub issuance_log: PathBuf,
    /// Write service logs here instead of stderr.
    #[arg(long, env = "ZKADVICE_SERVICE_LOG")]
    pub service_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeAdvisorArgs {
    #[arg(long, default_value = "127.0.0.1:8082", env = "ZKADVICE_ADVISOR_LISTEN")]
    pub listen: SocketAddr,
    #[command(flatten)]
    pub advisor: AdvisorArgs,
    #[arg(long, env = "ZKADVICE_SERVICE_LOG")]
    pub service_log: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into() }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new("Config", message)
    }
}

macro_rules! from_kinded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.kind(), e.to_string())
            }
        }
    )*};
}

from_kinded!(
    zkadvice_core::inference::InferenceError,
    zkadvice_core::attestation::AttestationError,
    zkadvice_core::advisor::AdvisorError,
    zkadvice_core::eval::EvalError,
    zkadvice_core::prompt::PromptError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("Io", e.to_string())
    }
}

type CliResult = Result<Value, CliError>;

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output serializes")
}

fn backend(args: &BackendArgs) -> Result<Arc<dyn AttestationBackend>, CliError> {
    build_backend(args.backend, args.external_config.as_deref()).map_err(CliError::config)
}

fn pinned(backend: &dyn AttestationBackend, digest: Option<&str>, version: &str) -> Result<ProgramId, CliError> {
    let digest = match digest {
        Some(hex) => Digest32::from_hex(hex).map_err(|e| CliError::config(format!("--pin-digest: {e}")))?,
        None => backend.program_id()?.digest,
    };
    Ok(ProgramId { digest, version: version.to_string() })
}

pub fn build_advisor(args: &AdvisorArgs) -> Result<Advisor, CliError> {
    let backend = backend(&args.backend)?;
    let pin = pinned(backend.as_ref(), args.pin_digest.as_deref(), &args.pin_version)?;
    let llm =
        build_provider(args.provider.provider, args.provider.remote_config.as_deref()).map_err(CliError::config)?;
    let mut advisor = Advisor::new(backend, pin, llm).with_policy(AdvisorPolicy { max_age_secs: args.max_age_secs });
    if let Some(dir) = &args.templates {
        advisor = advisor.with_templates(PromptTemplates::load_dir(dir)?);
    }
    if let Some(path) = &args.presets {
        let presets: std::collections::BTreeMap<String, OptionPreset> =
            serde_json::from_slice(&read_input(path)?).map_err(|e| CliError::config(format!("presets: {e}")))?;
        advisor = advisor.with_presets(presets);
    }
    Ok(advisor)
}

fn parse_condition(s: &str) -> Result<ConditionChoice, CliError> {
    match s.split_once(',') {
        Some((p, e)) => Ok(ConditionChoice::Explicit(ConditionConfig::new(p.trim(), e.trim()))),
        None => Ok(ConditionChoice::Named(s.to_string())),
    }
}

fn cmd_infer(args: &InferArgs) -> CliResult {
    let spec = load_spec(args.spec.spec.as_ref()).map_err(CliError::config)?;
    let profile = parse_profile(&read_input(&args.input)?)?;
    Ok(to_value(&infer(&profile, &spec)?))
}

fn cmd_prove(args: &ProveArgs) -> CliResult {
    let spec = load_spec(args.spec.spec.as_ref()).map_err(CliError::config)?;
    let profile = parse_profile(&read_input(&args.input)?)?;
    let backend = backend(&args.backend)?;
    let attestation = backend.prove(&profile, &spec, args.issued_at.unwrap_or_else(unix_now))?;
    let doc = ProofDocument::from_attestation(&attestation);
    if let Some(out) = &args.out {
        fs::write(out, doc.to_json_pretty())?;
    }
    Ok(to_value(&doc))
}

fn cmd_verify(args: &VerifyArgs) -> CliResult {
    let doc: ProofDocument = serde_json::from_slice(&read_input(&args.proof)?)
        .map_err(|e| CliError::new("MalformedRequest", e.to_string()))?;
    let backend = backend(&args.backend)?;
    let pin = pinned(backend.as_ref(), args.pin_digest.as_deref(), &args.pin_version)?;
    let policy = zkadvice_core::attestation::VerifierPolicy { max_age_secs: args.max_age_secs, now: unix_now() };
    Ok(match zkadvice_core::attestation::verify_document_detailed(backend.as_ref(), &doc, &pin, &policy) {
        Ok(journal) => json!({ "verification": "valid", "journal": journal }),
        Err(outcome) => json!({ "verification": outcome.as_str(), "journal": Value::Null }),
    })
}

fn cmd_advise(args: &AdviseArgs) -> CliResult {
    let advisor = build_advisor(&args.advisor)?;
    let attestation = match &args.proof {
        Some(path) => Some(
            serde_json::from_slice(&read_input(path)?).map_err(|e| CliError::new("MalformedRequest", e.to_string()))?,
        ),
        None => None,
    };
    let request = AdviseRequest {
        query: args.query.clone(),
        d0_text: args.d0.clone(),
        domain: args.domain.clone(),
        attestation,
        options: None,
        option_preset: args.preset.clone(),
        condition: parse_condition(&args.condition)?,
        seed: args.seed,
    };
    Ok(to_value(&advisor.advise(&request)?))
}

fn cmd_sample(args: &SampleArgs) -> CliResult {
    let spec = load_spec(args.spec.spec.as_ref()).map_err(CliError::config)?;
    let profiles = sample_profiles(&spec, args.seed)?;
    let rows: Vec<Value> = profiles
        .iter()
        .map(|p| {
            let r = infer(p, &spec).expect("sampled profiles are valid");
            json!({ "profile_id": p.index(), "answers": p.answers(), "category": r.category, "total_score": r.total_score })
        })
        .collect();
    Ok(json!({ "seed": args.seed, "profiles": rows }))
}

fn cmd_bench(args: &BenchArgs) -> CliResult {
    let spec = load_spec(args.spec.spec.as_ref()).map_err(CliError::config)?;
    let profiles = sample_profiles(&spec, args.seed)?;
    let mut rows: Vec<TimingRecord> = Vec::new();
    let mut unavailable = Vec::new();
    for &kind in &args.backends {
        let id = match kind {
            BackendKind::Mock => BackendId::Mock,
            BackendKind::External => BackendId::ExternalZkvm,
        };
        let backend = match build_backend(kind, args.external_config.as_deref()) {
            Ok(b) => b,
            Err(reason) => {
                unavailable.push(json!({ "backend": id, "reason": reason }));
                continue;
            }
        };
        match bench_attestation(backend.as_ref(), &spec, &profiles, args.repetitions, &args.hardware, unix_now()) {
            Ok(r) => rows.extend(r),
            Err(zkadvice_core::eval::EvalError::Attestation(e)) if e.kind() == "BackendUnavailable" => {
                unavailable.push(json!({ "backend": id, "reason": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let summary = BenchSummary::from_records(&rows);
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("timings.csv"), timing_csv(&rows))?;
    fs::write(args.out.join("summary.md"), summary.to_markdown())?;
    let report = json!({ "summary": summary, "unavailable": unavailable, "rows": rows.len() });
    fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&report).expect("serializes") + "\n")?;
    Ok(json!({ "out": args.out, "summary_markdown": summary.to_markdown(), "report": report }))
}

fn cmd_eval_gen(args: &EvalGenArgs) -> CliResult {
    let llm =
        build_provider(args.provider.provider, args.provider.remote_config.as_deref()).map_err(CliError::config)?;
    let domains: Vec<&str> =
        if args.domains.is_empty() { DOMAINS.to_vec() } else { args.domains.iter().map(String::as_str).collect() };
    let report = generate_dataset(DatasetSource::Llm(llm.as_ref()), &domains, args.concepts)?;
    fs::write(&args.out, write_corpus(&report.instances))?;
    Ok(json!({
        "out": args.out,
        "requested": report.requested,
        "written": report.instances.len(),
        "dropped": report.dropped,
        "drop_reasons": report.drop_reasons,
    }))
}

fn cmd_eval_run(args: &EvalRunArgs) -> CliResult {
    let llm =
        build_provider(args.provider.provider, args.provider.remote_config.as_deref()).map_err(CliError::config)?;
    let mut corpus = match &args.corpus {
        Some(path) => read_corpus(&String::from_utf8_lossy(&read_input(path)?))?,
        None => fixture_corpus(),
    };
    if let Some(n) = args.limit {
        corpus.truncate(n);
    }
    let templates = match &args.templates {
        Some(dir) => PromptTemplates::load_dir(dir)?,
        None => PromptTemplates::default(),
    };
    let all: Vec<(String, ConditionConfig)> =
        standard_conditions().into_iter().map(|(n, c)| (n.to_string(), c)).collect();
    let conditions: Vec<(String, ConditionConfig)> = if args.conditions.is_empty() {
        all
    } else {
        args.conditions
            .iter()
            .map(|name| {
                all.iter()
                    .find(|(n, _)| n.eq_ignore_ascii_case(name))
                    .cloned()
                    .ok_or_else(|| CliError::new("Usage", format!("unknown condition {name:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    let output = run_conditions(&corpus, &conditions, llm.as_ref(), &templates, args.seed);
    let summary = write_reports(&args.out, &output)?;
    Ok(json!({ "out": args.out, "summary": summary }))
}

fn init_logging(service_log: Option<&Path>, default_level: &str) -> Result<(), CliError> {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_env("ZKADVICE_LOG").unwrap_or_else(|_| EnvFilter::new(default_level));
    let builder = tracing_subscriber::fmt().with_env_filter(filter).with_target(false);
    let result = match service_log {
        Some(path) => {
            let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
            builder.with_ansi(false).with_writer(std::sync::Mutex::new(file)).try_init()
        }
        None => builder.with_writer(std::io::stderr).try_init(),
    };
    result.map_err(|e| CliError::config(e.to_string()))
}

async fn serve(listen: SocketAddr, app: axum::Router, name: &str) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(address = %listener.local_addr()?, "{name} listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn cmd_serve(command: &ServeCommand) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new()?;
    match command {
        ServeCommand::Prover(args) => {
            init_logging(args.service_log.as_deref(), "info")?;
            let spec = load_spec(args.spec.spec.as_ref()).map_err(CliError::config)?;
            let backend = backend(&args.backend)?;
            let log = crate::prover::IssuanceLog::open(&args.issuance_log)?;
            let state = crate::prover::ProverState::new(backend, spec, Some(log));
            runtime.block_on(serve(args.listen, crate::prover::router(state), "prover"))
        }
        ServeCommand::Advisor(args) => {
            init_logging(args.service_log.as_deref(), "info")?;
            let advisor = Arc::new(build_advisor(&args.advisor)?);
            runtime.block_on(serve(args.listen, crate::advisor::router(advisor), "advisor"))
        }
    }
}

/// Runs one subcommand. JSON results go to stdout, errors to stderr.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Serve(cmd) => cmd_serve(cmd).map(|()| Value::Null),
        other => {
            let _ = init_logging(None, "warn");
            match other {
                Command::Infer(a) => cmd_infer(a),
                Command::Prove(a) => cmd_prove(a),
                Command::Verify(a) => cmd_verify(a),
                Command::Advise(a) => cmd_advise(a),
                Command::Sample(a) => cmd_sample(a),
                Command::Bench(a) => cmd_bench(a),
                Command::Eval(EvalCommand::Gen(a)) => cmd_eval_gen(a),
                Command::Eval(EvalCommand::Run(a)) => cmd_eval_run(a),
                Command::Serve(_) => unreachable!(),
            }
        }
    };
    match result {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(value) => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(&value).expect("output serializes");
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
            if e.kind == "Usage" {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "Usage", "message": e.to_string() }));
            ExitCode::from(2)
        }
    }
}
