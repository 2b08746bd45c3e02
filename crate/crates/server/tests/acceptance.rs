//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs with a plain `main` so the verdict lines are always printed.
//! Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use zkadvice_core::advisor::Advisor;
use zkadvice_core::attestation::{
    encode_journal, verify, verify_encoded, AttestationBackend, MockBackend, ProgramId, VerificationOutcome,
};
use zkadvice_core::digest::sha256;
use zkadvice_core::eval::{fixture_corpus, run_conditions, sample_profiles, EvalSummary};
use zkadvice_core::inference::{
    classify, score, score_band, AnswerProfile, QuestionnaireSpec, RiskCategory, PROFILE_SPACE,
};
use zkadvice_core::llm::StubLlm;
use zkadvice_core::prompt::{standard_conditions, PromptTemplates};
use zkadvice_server::prover::{IssuanceLog, ProverState};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Shared buffer that receives every log line emitted by the services.
#[derive(Clone, Default)]
struct LogSink(Arc<Mutex<Vec<u8>>>);

impl Write for LogSink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn log_sink() -> &'static LogSink {
    static SINK: OnceLock<LogSink> = OnceLock::new();
    SINK.get_or_init(|| {
        let sink = LogSink::default();
        let writer = sink.clone();
        tracing_subscriber::fmt().with_env_filter("debug").with_ansi(false).with_writer(move || writer.clone()).init();
        sink
    })
}

fn runtime() -> &'static tokio::runtime::Runtime {
    static RT: OnceLock<tokio::runtime::Runtime> = OnceLock::new();
    RT.get_or_init(|| tokio::runtime::Runtime::new().unwrap())
}

fn spawn(app: axum::Router) -> SocketAddr {
    runtime().block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        addr
    })
}

fn post(addr: SocketAddr, path: &str, body: String) -> (u16, Vec<u8>) {
    runtime().block_on(async {
        let resp = reqwest::Client::new()
            .post(format!("http://{addr}{path}"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.bytes().await.unwrap().to_vec())
    })
}

fn mock_services(issuance_log: Option<&Path>) -> (SocketAddr, SocketAddr) {
    let log = issuance_log.map(|p| IssuanceLog::open(p).unwrap());
    let prover = ProverState::new(Arc::new(MockBackend::default()), QuestionnaireSpec::default_spec(), log);
    let advisor =
        Advisor::new(Arc::new(MockBackend::default()), ProgramId::trait_inference(), Arc::new(StubLlm::new()));
    (spawn(zkadvice_server::prover::router(prover)), spawn(zkadvice_server::advisor::router(Arc::new(advisor))))
}

fn random_profiles(n: usize, seed: u64) -> Vec<AnswerProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| AnswerProfile::from_index(rng.gen_range(0..PROFILE_SPACE)).unwrap()).collect()
}

fn classifier_totality() -> Verdict {
    let spec = QuestionnaireSpec::default_spec();
    let golden = [2343u32, 31658, 24157, 891];
    let run = || {
        let mut counts = BTreeMap::new();
        let mut exactly_one = true;
        for p in AnswerProfile::all() {
            let s = score(&p, &spec);
            let matching = RiskCategory::ALL
                .iter()
                .filter(|&&c| {
                    let (lo, hi) = score_band(c);
                    lo <= s && s <= hi
                })
                .count();
            exactly_one &= matching == 1;
            *counts.entry(classify(s).unwrap()).or_insert(0u32) += 1;
        }
        (counts, exactly_one)
    };
    let start = Instant::now();
    let (first, total_first) = run();
    let elapsed = start.elapsed();
    let (second, total_second) = run();
    let counts: Vec<u32> = RiskCategory::ALL.iter().map(|c| first.get(c).copied().unwrap_or(0)).collect();
    check(
        elapsed < Duration::from_secs(5)
            && total_first
            && total_second
            && counts.iter().all(|&n| n > 0)
            && counts.iter().sum::<u32>() == PROFILE_SPACE
            && counts == golden
            && first == second,
        format!("59049 profiles in {:.3} s, counts {counts:?}, stable across runs", elapsed.as_secs_f64()),
    )
}

fn attestation_round_trip() -> Verdict {
    let spec = QuestionnaireSpec::default_spec();
    let backend = MockBackend::default();
    let pinned = ProgramId::trait_inference();
    let mut valid = 0;
    let mut slowest = Duration::ZERO;
    for p in random_profiles(200, 11) {
        let att = backend.prove(&p, &spec, 1_700_000_000).unwrap();
        let start = Instant::now();
        let outcome = verify(&backend, &att.journal, &att.proof, &pinned);
        slowest = slowest.max(start.elapsed());
        valid += usize::from(outcome == VerificationOutcome::Valid);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut tamper_valid = 0;
    for p in random_profiles(1000, 13) {
        let att = backend.prove(&p, &spec, 1_700_000_000).unwrap();
        let mut bytes = encode_journal(&att.journal);
        let i = rng.gen_range(0..bytes.len());
        bytes[i] ^= rng.gen_range(1..=255u8);
        tamper_valid +=
            usize::from(verify_encoded(&backend, &bytes, &att.proof, &pinned) == VerificationOutcome::Valid);
    }

    let mut wrong = pinned.clone();
    wrong.digest = sha256(b"a different program build");
    let mismatches = random_profiles(200, 14)
        .iter()
        .filter(|p| {
            let att = backend.prove(p, &spec, 0).unwrap();
            verify(&backend, &att.journal, &att.proof, &wrong) == VerificationOutcome::ProgramMismatch
        })
        .count();

    check(
        valid == 200 && tamper_valid == 0 && mismatches == 200 && slowest < Duration::from_millis(10),
        format!(
            "{valid}/200 valid, {tamper_valid}/1000 tampered accepted, {mismatches}/200 wrong-pin mismatches, \
             slowest verify {:.3} ms",
            slowest.as_secs_f64() * 1e3
        ),
    )
}

fn privacy_boundary() -> Verdict {
    let sink = log_sink();
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("issuance.jsonl");
    let (prover, advisor) = mock_services(Some(&log_path));

    let answers = [2u8, 0, 1, 1, 2, 0, 0, 2, 1, 2];
    let (status, doc) = post(prover, "/v1/infer", json!({ "answers": answers }).to_string());
    if status != 200 {
        return Err(format!("infer returned {status}"));
    }
    let doc: Value = serde_json::from_slice(&doc).unwrap();
    let request = json!({
        "query": "Should I rebalance my portfolio this year?",
        "d0_text": "I read market news every morning.",
        "domain": "investment",
        "condition": "Cond2",
        "attestation": doc,
    });
    let (status, advice) = post(advisor, "/v1/advise", request.to_string());
    if status != 200 {
        return Err(format!("advise returned {status}"));
    }

    let compact = serde_json::to_string(&answers).unwrap();
    let spaced = compact.replace(',', ", ");
    let logs = sink.0.lock().unwrap().clone();
    let issuance = std::fs::read(&log_path).unwrap();
    let artifacts: [(&str, &[u8]); 4] = [
        ("service logs", &logs),
        ("issuance log", &issuance),
        ("proof document", &serde_json::to_vec(&doc).unwrap()),
        ("advice response", &advice),
    ];
    let mut leaks = Vec::new();
    for (name, bytes) in artifacts {
        let text = String::from_utf8_lossy(bytes);
        if text.contains(&compact) || text.contains(&spaced) {
            leaks.push(name);
        }
    }
    check(
        leaks.is_empty() && !issuance.is_empty() && !logs.is_empty(),
        format!(
            "scanned {} log bytes, {} issuance bytes, proof and response; leaks: {leaks:?}",
            logs.len(),
            issuance.len()
        ),
    )
}

fn stratified_sampler() -> Verdict {
    let spec = QuestionnaireSpec::default_spec();
    let a = sample_profiles(&spec, 42).unwrap();
    let b = sample_profiles(&spec, 42).unwrap();
    let distinct: BTreeSet<u32> = a.iter().map(AnswerProfile::index).collect();
    let mut per: BTreeMap<RiskCategory, usize> = BTreeMap::new();
    for p in &a {
        *per.entry(classify(score(p, &spec)).unwrap()).or_default() += 1;
    }
    check(
        a.len() == 40 && distinct.len() == 40 && per.values().all(|&n| n == 10) && per.len() == 4 && a == b,
        format!(
            "{} profiles, {} distinct, per category {:?}, repeatable: {}",
            a.len(),
            distinct.len(),
            per.values().collect::<Vec<_>>(),
            a == b
        ),
    )
}

fn full_stub_run() -> (EvalSummary, Duration) {
    static RUN: OnceLock<(EvalSummary, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let conditions: Vec<_> = standard_conditions().into_iter().map(|(n, c)| (n.to_string(), c)).collect();
        let start = Instant::now();
        let out = run_conditions(&fixture_corpus(), &conditions, &StubLlm::new(), &PromptTemplates::default(), 7);
        let summary = EvalSummary::from_output(&out).unwrap();
        (summary, start.elapsed())
    })
    .clone()
}

fn score_direction() -> Verdict {
    let (s, elapsed) = full_stub_run();
    let mean = |c: &str| s.condition(c).map(|x| x.mean_score).unwrap_or(f64::NAN);
    let (c0, c1, c2, c3) = (mean("Cond0"), mean("Cond1"), mean("Cond2"), mean("Cond3"));
    check(
        c1 < c0 && c0 <= c3 && c3 <= c2 && c0 - c1 >= 0.2 && c2 - c0 >= 0.2 && elapsed < Duration::from_secs(60),
        format!(
            "means c1 {c1:.3} < c0 {c0:.3} <= c3 {c3:.3} <= c2 {c2:.3}; margins {:.3} and {:.3}; {} records in {:.2} s",
            c0 - c1,
            c2 - c0,
            s.total_records,
            elapsed.as_secs_f64()
        ),
    )
}

fn similarity_direction() -> Verdict {
    let (s, _) = full_stub_run();
    let diff = |c: &str| s.condition(c).map(|x| x.mean_sim_exp_d0 - x.mean_sim_exp_d1).unwrap_or(f64::NAN);
    let (d0, d1, d2) = (diff("Cond0"), diff("Cond1"), diff("Cond2"));
    check(
        d1 > 0.05 && -d2 > 0.05 && d0.abs() < 0.1,
        format!("sim(d0)-sim(d1): Cond1 {d1:+.3}, Cond2 {d2:+.3}, Cond0 {d0:+.3}"),
    )
}

fn advise_latency() -> Verdict {
    let (prover, advisor) = mock_services(None);
    let (_, doc) = post(prover, "/v1/infer", json!({ "answers": [1, 2, 1, 2, 1, 2, 1, 2, 1, 2] }).to_string());
    let doc: Value = serde_json::from_slice(&doc).unwrap();
    let mut times = Vec::with_capacity(100);
    let mut failures = 0;
    for i in 0..100u64 {
        let body = json!({
            "query": "How should I handle recurring headaches?",
            "d0_text": "I tend to avoid doctors.",
            "option_preset": "healthcare-headache",
            "condition": standard_conditions()[(i % 5) as usize].0,
            "attestation": doc,
            "seed": i,
        })
        .to_string();
        let start = Instant::now();
        let (status, _) = post(advisor, "/v1/advise", body);
        times.push(start.elapsed());
        failures += usize::from(status != 200);
    }
    times.sort();
    let median = times[times.len() / 2];
    check(
        failures == 0 && median < Duration::from_millis(100),
        format!(
            "median {:.2} ms, max {:.2} ms over 100 requests, {failures} failures",
            median.as_secs_f64() * 1e3,
            times[99].as_secs_f64() * 1e3
        ),
    )
}

fn zkadvice(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zkadvice"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn eval_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let files = ["records.csv", "summary.json", "summary.md", "failures.json"];
    let mut runs = Vec::new();
    for (name, threads) in [("a", None), ("b", None), ("c", Some("1")), ("d", Some("8"))] {
        let out = dir.path().join(name);
        let envs: Vec<(&str, &str)> = threads.map(|t| vec![("RAYON_NUM_THREADS", t)]).unwrap_or_default();
        let result =
            zkadvice(&["eval", "run", "--provider", "stub", "--seed", "7", "--out", out.to_str().unwrap()], &envs);
        if !result.status.success() {
            return Err(format!("eval run failed: {}", String::from_utf8_lossy(&result.stderr)));
        }
        runs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    check(
        identical,
        format!(
            "4 full runs (default, default, 1 thread, 8 threads), {bytes} report bytes each, identical: {identical}"
        ),
    )
}

fn bench_report_shape() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let result = zkadvice(&["bench", "--out", out.to_str().unwrap()], &[]);
    if !result.status.success() {
        return Err(format!("bench failed: {}", String::from_utf8_lossy(&result.stderr)));
    }
    let md = std::fs::read_to_string(out.join("summary.md")).unwrap();
    let csv = std::fs::read_to_string(out.join("timings.csv")).unwrap();
    let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("|  |")).collect();
    let labels: Vec<&str> = rows.iter().map(|r| r.split('|').nth(1).unwrap_or("").trim()).collect();
    let external_na = rows.iter().all(|r| r.trim_end().ends_with("| N/A |"));
    check(
        labels == ["Proof Generation Time", "Verification Time"]
            && external_na
            && csv.starts_with("backend,hardware,profile_id,proof_gen_s,verify_s")
            && csv.lines().count() == 41,
        format!("rows {labels:?}, external column N/A: {external_na}, {} timing rows", csv.lines().count() - 1),
    )
}

fn main() {
    log_sink();
    let criteria: [Criterion; 9] = [
        ("classifier totality", classifier_totality),
        ("attestation round trip", attestation_round_trip),
        ("privacy boundary", privacy_boundary),
        ("stratified sampler", stratified_sampler),
        ("proposal score direction", score_direction),
        ("explanation similarity direction", similarity_direction),
        ("advise latency", advise_latency),
        ("eval run determinism", eval_determinism),
        ("bench report shape", bench_report_shape),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let verdict = std::panic::catch_unwind(criterion).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
