//! Acceptance gate: one test per criterion, each printing a PASS line after
//! its assertions hold. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use traceopt_core::answer::AnswerMatchPolicy;
use traceopt_core::backend::{
    BackendError, Completion, FinishReason, GenerationRequest, GenerationResult, MockBackend,
    TextBackend, TokenLogprob, Usage,
};
use traceopt_core::finalize::FinalizedTrajectory;
use traceopt_core::metrics::efficiency_eta;
use traceopt_core::pairs::{build_pairs, select_optimization_targets, PairSource, SampledResponse};
use traceopt_core::pipeline::{run_pipeline, BackendSpec, Backends, RunConfig};
use traceopt_core::probe::{find_truncation, ExitConfig};
use traceopt_core::prune::{prune, OptimizedTrajectory, PruneConfig, Provenance};
use traceopt_core::segment::{count_cue, segment_response, CueLexicon};
use traceopt_core::simpo::{simpo_loss, softplus, SimpoConfig};
use traceopt_core::types::{
    DelimiterConfig, Problem, SamplingParams, ThinkingPattern, Trajectory,
};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

// ---------------------------------------------------------------------------
// Criterion 1: every published efficiency figure reproduces from its accuracy
// and token columns within ±0.002.
// ---------------------------------------------------------------------------

/// (accuracy_base, tokens_base, accuracy, tokens, published_efficiency)
const EFFICIENCY_ROWS: &[(f64, f64, f64, f64, f64)] = &[
    // group A, benchmark 1
    (79.80, 3543.44, 79.80, 3543.44, 1.000),
    (79.80, 3543.44, 81.17, 3354.99, 1.074),
    (79.80, 3543.44, 81.28, 3180.10, 1.135),
    (79.80, 3543.44, 82.31, 2593.06, 1.409),
    (79.80, 3543.44, 83.35, 2817.94, 1.313),
    (79.80, 3543.44, 84.72, 2548.55, 1.476),
    (79.80, 3543.44, 85.48, 1936.19, 1.960),
    // group A, benchmark 2
    (82.13, 1382.99, 82.13, 1382.99, 1.000),
    (82.13, 1382.99, 85.14, 1894.73, 0.757),
    (82.13, 1382.99, 80.12, 933.89, 1.445),
    (82.13, 1382.99, 80.67, 669.41, 2.029),
    (82.13, 1382.99, 84.02, 1174.89, 1.204),
    (82.13, 1382.99, 84.29, 1080.19, 1.314),
    (82.13, 1382.99, 83.91, 844.18, 1.674),
    // group A, benchmark 3
    (66.62, 3725.16, 66.62, 3725.16, 1.000),
    (66.62, 3725.16, 69.68, 3634.30, 1.072),
    (66.62, 3725.16, 67.34, 3245.37, 1.160),
    (66.62, 3725.16, 66.69, 2827.81, 1.319),
    (66.62, 3725.16, 69.42, 3058.96, 1.269),
    (66.62, 3725.16, 71.30, 2750.35, 1.450),
    (66.62, 3725.16, 72.66, 2137.59, 1.901),
    // group A, benchmark 4
    (58.25, 5338.54, 58.25, 5338.54, 1.000),
    (58.25, 5338.54, 61.00, 5073.15, 1.102),
    (58.25, 5338.54, 61.08, 5030.76, 1.113),
    (58.25, 5338.54, 65.50, 4370.83, 1.373),
    (58.25, 5338.54, 66.58, 4590.91, 1.329),
    (58.25, 5338.54, 68.92, 4166.60, 1.516),
    (58.25, 5338.54, 70.25, 3376.98, 1.907),
    // group A, benchmark 5
    (21.44, 7359.24, 21.44, 7359.24, 1.000),
    (21.44, 7359.24, 21.56, 7261.19, 1.019),
    (21.44, 7359.24, 23.78, 7151.84, 1.141),
    (21.44, 7359.24, 21.78, 7015.30, 1.066),
    (21.44, 7359.24, 24.00, 7077.45, 1.164),
    (21.44, 7359.24, 24.44, 6698.77, 1.252),
    (21.44, 7359.24, 28.00, 5877.44, 1.635),
    // group A, benchmark 6
    (18.89, 7236.66, 18.89, 7236.66, 1.000),
    (18.89, 7236.66, 20.33, 7137.90, 1.091),
    (18.89, 7236.66, 18.44, 7122.97, 0.992),
    (18.89, 7236.66, 17.67, 6742.34, 1.004),
    (18.89, 7236.66, 19.78, 6846.85, 1.107),
    (18.89, 7236.66, 20.67, 6545.62, 1.210),
    (18.89, 7236.66, 21.11, 5689.38, 1.421),
    // group B, benchmark 1
    (88.48, 2700.37, 88.48, 2700.37, 1.000),
    (88.48, 2700.37, 89.41, 2601.49, 1.049),
    (88.48, 2700.37, 89.19, 2634.80, 1.033),
    (88.48, 2700.37, 89.74, 2259.56, 1.212),
    (88.48, 2700.37, 89.74, 2551.49, 1.073),
    (88.48, 2700.37, 88.81, 2247.38, 1.206),
    (88.48, 2700.37, 89.14, 1994.27, 1.364),
    // group B, benchmark 2
    (87.38, 1601.98, 87.38, 1601.98, 1.000),
    (87.38, 1601.98, 88.38, 1652.94, 0.980),
    (87.38, 1601.98, 86.43, 1469.03, 1.079),
    (87.38, 1601.98, 86.41, 1235.48, 1.282),
    (87.38, 1601.98, 86.71, 1502.93, 1.058),
    (87.38, 1601.98, 88.10, 1254.06, 1.288),
    (87.38, 1601.98, 87.23, 1184.53, 1.350),
    // group B, benchmark 3
    (75.97, 3053.67, 75.97, 3053.67, 1.000),
    (75.97, 3053.67, 77.01, 2941.73, 1.052),
    (75.97, 3053.67, 76.23, 2950.22, 1.039),
    (75.97, 3053.67, 77.47, 2539.68, 1.226),
    (75.97, 3053.67, 77.21, 2880.06, 1.078),
    (75.97, 3053.67, 77.21, 2531.05, 1.226),
    (75.97, 3053.67, 77.01, 2269.98, 1.364),
    // group B, benchmark 4
    (76.88, 4268.77, 76.88, 4268.77, 1.000),
    (76.88, 4268.77, 76.25, 4119.06, 1.028),
    (76.88, 4268.77, 71.88, 4405.87, 0.906),
    (76.88, 4268.77, 79.38, 3831.73, 1.150),
    (76.88, 4268.77, 78.75, 4158.48, 1.051),
    (76.88, 4268.77, 77.50, 3755.56, 1.146),
    (76.88, 4268.77, 77.50, 3403.56, 1.264),
    // group B, benchmark 5
    (36.67, 6455.16, 36.67, 6455.16, 1.000),
    (36.67, 6455.16, 30.83, 6505.43, 0.834),
    (36.67, 6455.16, 35.83, 6755.42, 0.934),
    (36.67, 6455.16, 35.83, 6242.41, 1.010),
    (36.67, 6455.16, 32.50, 6551.17, 0.873),
    (36.67, 6455.16, 35.00, 6219.26, 0.991),
    (36.67, 6455.16, 38.33, 5742.61, 1.175),
    // group B, benchmark 6
    (29.17, 6420.07, 29.17, 6420.07, 1.000),
    (29.17, 6420.07, 27.50, 6338.55, 0.955),
    (29.17, 6420.07, 27.50, 6192.65, 0.977),
    (29.17, 6420.07, 28.33, 6086.82, 1.024),
    (29.17, 6420.07, 27.50, 6462.76, 0.937),
    (29.17, 6420.07, 26.67, 6016.55, 0.976),
    (29.17, 6420.07, 27.50, 5820.90, 1.040),
];

#[test]
fn criterion_1_efficiency_table_reproduces() {
    assert_eq!(EFFICIENCY_ROWS.len(), 84);
    for (row, &(acc_base, tok_base, acc, tok, published)) in EFFICIENCY_ROWS.iter().enumerate() {
        let eta = efficiency_eta(acc, acc_base, tok, tok_base).expect("valid inputs");
        let delta = (eta - published).abs();
        assert!(
            delta <= 0.002,
            "row {row}: computed {eta:.4}, published {published:.3}, delta {delta:.4}"
        );
    }
    println!("criterion 1 (efficiency table, 84 rows within ±0.002): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 2: preference-loss scoring against frozen oracle values.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_preference_loss_oracles() {
    // Frozen softplus(-margin) values.
    let cases = [
        (2.0, 0.1269280110429725),
        (1.0, 0.31326168751822286),
        (-0.5, 0.9740769841801067),
        (0.0, 0.6931471805599453),
        (3.7, 0.024422845933779157),
    ];
    for (margin, expected) in cases {
        let got = softplus(-margin);
        assert!(
            (got - expected).abs() < 1e-9,
            "softplus(-{margin}): {got} vs {expected}"
        );
    }
    // Margin/loss from average logprobs at beta = 10, gamma = 3.
    let cfg = SimpoConfig::default();
    let checks = [
        (-0.5, -0.9, 1.0, 0.31326168751822286),
        (-1.2, -0.3, -12.0, 12.000006144193478),
    ];
    for (avg_w, avg_l, exp_margin, exp_loss) in checks {
        let (margin, loss) = simpo_loss(avg_w, avg_l, &cfg);
        assert!((margin - exp_margin).abs() < 1e-9);
        assert!((loss - exp_loss).abs() < 1e-9);
    }
    // Identity softplus(x) - softplus(-x) = x.
    for x in [0.1, 1.0, 10.0, 50.0] {
        assert!((softplus(x) - softplus(-x) - x).abs() < 1e-9, "identity at {x}");
    }
    // Derivative of softplus is the logistic function.
    let h = 1e-6;
    for x in [-3.0, -0.4, 0.0, 0.7, 2.5] {
        let fd = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
        let sigma = 1.0 / (1.0 + (-x as f64).exp());
        assert!((fd - sigma).abs() < 1e-6, "derivative at {x}: {fd} vs {sigma}");
    }
    println!("criterion 2 (preference-loss oracle values, identity, derivative): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 3: truncation scan agrees with a brute-force oracle over scripted
// hit schedules and multiple thresholds.
// ---------------------------------------------------------------------------

/// Backend scripted by a per-index hit schedule. The probe index is recovered
/// from the number of `@@` markers in the prompt (one per segment).
struct ScheduleBackend {
    hits: Vec<u32>,
}

#[async_trait]
impl TextBackend for ScheduleBackend {
    async fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let index = request.prompt.matches("@@").count();
        let hits = self.hits[index - 1];
        let n = request.params.n;
        let completions: Vec<Completion> = (0..n)
            .map(|k| Completion {
                text: if k < hits { "7}.".to_string() } else { "zz".to_string() },
                token_logprobs: None,
                finish_reason: FinishReason::Stop,
            })
            .collect();
        let counts = vec![1u64; completions.len()];
        Ok(GenerationResult {
            completions,
            usage: Usage::default(),
            completion_token_counts: counts,
        })
    }

    async fn count_tokens(&self, _text: &str) -> Result<u64, BackendError> {
        Ok(1)
    }

    async fn echo_logprobs(
        &self,
        _context: &str,
        _text: &str,
    ) -> Result<Vec<TokenLogprob>, BackendError> {
        Err(BackendError::MissingLogprobs("scripted backend".into()))
    }
}

fn schedule_trajectory(n: usize) -> Trajectory {
    let segments: Vec<ThinkingPattern> = (1..=n)
        .map(|i| ThinkingPattern {
            index: i,
            text: if i < n {
                format!("step {i} @@ goes here.\n\n")
            } else {
                format!("step {i} @@ goes here.")
            },
            cue: None,
        })
        .collect();
    Trajectory::from_segments(segments).expect("valid segments")
}

#[test]
fn criterion_3_truncation_scan_matches_oracle() {
    let started = std::time::Instant::now();
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    let problem = Problem::new("s", "statement", "7").unwrap();
    let params = SamplingParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let m = 10u32;
    for case in 0..1_000 {
        let n = rng.gen_range(1..=12usize);
        let hits: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=m)).collect();
        let trajectory = schedule_trajectory(n);
        let backend = ScheduleBackend { hits: hits.clone() };
        for threshold in [0.5, 0.8, 1.0] {
            let cfg = ExitConfig {
                threshold_t: threshold,
                ..ExitConfig::default()
            };
            let decision = runtime
                .block_on(find_truncation(
                    "p:", &trajectory, &cfg, &params, &problem, &backend,
                ))
                .expect("scan succeeds");
            // Brute-force oracle: first index whose hit fraction reaches the
            // threshold; the full length, unqualified, otherwise.
            let oracle = (1..=n).find(|&i| hits[i - 1] as f64 / m as f64 >= threshold);
            let (exp_i, exp_qualified) = match oracle {
                Some(i) => (i, true),
                None => (n, false),
            };
            assert_eq!(
                (decision.i_prime, decision.qualified),
                (exp_i, exp_qualified),
                "case {case}, T={threshold}, hits {hits:?}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "scan comparison too slow: {elapsed:?}");
    println!("criterion 3 (1000 scripted schedules x 3 thresholds vs oracle, {elapsed:?}): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 4: segmentation round-trips losslessly over fuzzed inputs and the
// cue counter agrees with a naive reference scan.
// ---------------------------------------------------------------------------

fn naive_cue_count(text: &str, cue: &str) -> usize {
    text.match_indices(cue)
        .filter(|(start, _)| {
            let before = text[..*start].chars().next_back();
            let after = text[start + cue.len()..].chars().next();
            before.map_or(true, |c| !c.is_alphanumeric())
                && after.map_or(true, |c| !c.is_alphanumeric())
        })
        .count()
}

#[test]
fn criterion_4_segmentation_fuzz_round_trip() {
    let vocab = [
        "Wait", "Wait,", "Alternatively", "Hmm", "But wait", "However", "alpha", "beta.", "so",
        "the", "Waiting", "ok!", "x9", "\n\n", "\n \n", " ", ". ", "? ", "<think>", "</think>",
    ];
    let delimiters = DelimiterConfig::default();
    let lexicon = CueLexicon::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let mut segmented = 0u32;
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=40usize);
        let text: String = (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect::<Vec<_>>()
            .join("");
        let Ok(trajectory) = segment_response(&text, &delimiters, &lexicon) else {
            continue;
        };
        segmented += 1;
        // Lossless: the segments concatenate back to the deliberation span.
        let rebuilt: String = trajectory.segments.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(rebuilt, trajectory.think_text(), "segment concat mismatch");
        assert_eq!(
            &trajectory.source_text[trajectory.think_span.clone()],
            rebuilt,
            "think span mismatch"
        );
        // Independent whole-word cue count.
        assert_eq!(
            count_cue(&text, "Wait"),
            naive_cue_count(&text, "Wait"),
            "cue count mismatch on {text:?}"
        );
    }
    assert!(segmented > 5_000, "fuzz generated too few valid inputs: {segmented}");
    println!("criterion 4 (10000 fuzzed round-trips, {segmented} segmented): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 5: pruning never emits an invalid trajectory — failed validations
// and unparsable judges leave the input intact, and a failing joint check
// rolls removals back.
// ---------------------------------------------------------------------------

fn fixture_finalized(segments: &[&str]) -> FinalizedTrajectory {
    let n = segments.len();
    let patterns: Vec<ThinkingPattern> = segments
        .iter()
        .enumerate()
        .map(|(i, text)| ThinkingPattern {
            index: i + 1,
            text: if i + 1 < n {
                format!("{text}\n\n")
            } else {
                (*text).to_string()
            },
            cue: None,
        })
        .collect();
    let kept = Trajectory::from_segments(patterns).unwrap();
    let fp = "Hmm, I think this is enough to derive the final answer.";
    let closer = Completion {
        text: " So it is 9. Final Answer: \\boxed{9}.".to_string(),
        token_logprobs: None,
        finish_reason: FinishReason::Stop,
    };
    let composed_text = format!("{} {}{}", kept.think_text(), fp, closer.text);
    FinalizedTrajectory {
        kept_segments: kept,
        separator: " ".to_string(),
        finalize_pattern: fp.to_string(),
        closer,
        closer_tokens: 8,
        composed_text,
    }
}

#[test]
fn criterion_5_pruner_safety() {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    let problem = Problem::new("q", "question text", "9").unwrap();
    let cfg = PruneConfig::default();

    // a) REMOVE verdicts whose validation decode fails prune nothing.
    let finalized = fixture_finalized(&["alpha one.", "beta two."]);
    let judge = MockBackend::from_jsonl(
        r#"{"match": "[Chunk 1]", "responses": ["[Chunk 1] REMOVE\n[Chunk 2] REMOVE"], "mode": "cycle"}"#,
    )
    .unwrap();
    let policy = MockBackend::from_jsonl(
        r#"{"match": "Final Answer: ", "responses": ["nothing useful decodes"], "mode": "cycle"}"#,
    )
    .unwrap();
    let outcome = runtime
        .block_on(prune("P:", &finalized, &judge, &policy, &cfg, &problem, 2))
        .unwrap();
    assert!(outcome.optimized.removed_indices.is_empty());
    assert_eq!(outcome.optimized.text, finalized.composed_text);
    assert!(outcome.audit.iter().all(|r| r.validated == Some(false)));

    // b) An unparsable judge response keeps everything and flags itself.
    let judge = MockBackend::from_jsonl(
        r#"{"match": "[Chunk 1]", "responses": ["no verdicts here at all"], "mode": "cycle"}"#,
    )
    .unwrap();
    let outcome = runtime
        .block_on(prune("P:", &finalized, &judge, &policy, &cfg, &problem, 2))
        .unwrap();
    assert!(outcome.optimized.removed_indices.is_empty());
    assert!(outcome.optimized.provenance.judge_parse_failed);
    assert_eq!(outcome.optimized.text, finalized.composed_text);

    // c) Individually valid removals that jointly break the decode are rolled
    // back greedily until the end-to-end check recovers.
    let finalized = fixture_finalized(&["alpha one.", "beta two.", "gamma three."]);
    let judge = MockBackend::from_jsonl(
        r#"{"match": "[Chunk 1]", "responses": ["[Chunk 1] REMOVE\n[Chunk 2] KEEP AS IS\n[Chunk 3] REMOVE"], "mode": "cycle"}"#,
    )
    .unwrap();
    let policy = MockBackend::from_jsonl(concat!(
        r#"{"match": "beta two.\n\ngamma three.", "responses": ["9} sure"], "mode": "cycle"}"#,
        "\n",
        r#"{"match": "alpha one.\n\nbeta two.\n\n ", "responses": ["9} sure"], "mode": "cycle"}"#,
        "\n",
        r#"{"match": "P:beta two.", "responses": ["joint decode drifts away"], "mode": "cycle"}"#,
    ))
    .unwrap();
    let outcome = runtime
        .block_on(prune("P:", &finalized, &judge, &policy, &cfg, &problem, 3))
        .unwrap();
    assert_eq!(outcome.optimized.removed_indices, vec![3]);
    assert_eq!(outcome.optimized.provenance.rollback_readded, vec![1]);
    assert_eq!(outcome.optimized.kept_indices, vec![1, 2]);
    println!("criterion 5 (pruner fail-safe, parse fallback, greedy rollback): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 6: the end-to-end pipeline reproduces the checked-in artifacts
// byte for byte, and every optimized trajectory is strictly shorter than its
// source.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_pipeline_golden_artifacts() {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let fixture = data_dir().join("fixture.jsonl");
    let mut cfg = RunConfig::default();
    cfg.policy_backend = BackendSpec::Mock {
        fixture: fixture.clone(),
    };
    cfg.judge_backend = BackendSpec::Mock { fixture };
    let backends = Backends::from_config(&cfg).unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = runtime
        .block_on(run_pipeline(
            &data_dir().join("dataset.jsonl"),
            out.path(),
            &cfg,
            &backends,
        ))
        .unwrap();
    assert_eq!(manifest.counts.failures, 0);
    for name in [
        "optimized.jsonl",
        "pairs.jsonl",
        "report.txt",
        "report.json",
        "probe_audit.jsonl",
        "prune_audit.jsonl",
    ] {
        let got = std::fs::read(out.path().join(name)).unwrap();
        let want = std::fs::read(data_dir().join("golden").join(name)).unwrap();
        assert_eq!(got, want, "artifact {name} differs from golden");
    }
    // Strict shrink: optimized token count < source token count, per row.
    let optimized = std::fs::read_to_string(out.path().join("optimized.jsonl")).unwrap();
    let mut rows = 0;
    for line in optimized.lines() {
        let row: OptimizedTrajectory = serde_json::from_str(line).unwrap();
        assert!(
            row.token_count < row.provenance.source_token_count,
            "{}: {} >= {}",
            row.problem_id,
            row.token_count,
            row.provenance.source_token_count
        );
        rows += 1;
    }
    assert_eq!(rows, 10);
    println!("criterion 6 (byte-identical golden artifacts, strict shrink on {rows} rows): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 7: pair construction yields N pairs per problem for every count
// of correct samples, topping up from incorrect ones when needed.
// ---------------------------------------------------------------------------

fn synthetic_samples(correct_count: usize) -> Vec<SampledResponse> {
    // Distinct token counts; sample 4 is always the longest.
    let tokens = [100u64, 90, 80, 110];
    (0..4)
        .map(|i| SampledResponse {
            problem_id: "p".to_string(),
            text: format!("sample number {} body", i + 1),
            correct: i < correct_count,
            token_count: tokens[i],
            sample_index: i + 1,
        })
        .collect()
}

fn fake_optimized(text: &str) -> OptimizedTrajectory {
    OptimizedTrajectory {
        problem_id: "p".to_string(),
        text: text.to_string(),
        removed_indices: vec![],
        kept_indices: vec![1],
        i_prime: 1,
        provenance: Provenance::default(),
        token_count: 10,
    }
}

#[test]
fn criterion_7_pair_construction_across_correct_counts() {
    let policy = AnswerMatchPolicy::containment();
    let problem = Problem::new("p", "statement", "7").unwrap();
    for correct_count in 0..=4usize {
        let samples = synthetic_samples(correct_count);
        let targets = select_optimization_targets(&samples, 2, 99).unwrap();
        assert_eq!(targets.len(), 2, "correct_count {correct_count}");
        let expect_correct = correct_count.min(2);
        assert_eq!(
            targets.iter().filter(|t| t.correct).count(),
            expect_correct,
            "correct targets at correct_count {correct_count}"
        );
        if correct_count >= 2 {
            // The shortest correct samples win.
            let mut expected: Vec<u64> = samples
                .iter()
                .filter(|s| s.correct)
                .map(|s| s.token_count)
                .collect();
            expected.sort_unstable();
            let mut got: Vec<u64> = targets.iter().map(|t| t.token_count).collect();
            got.sort_unstable();
            assert_eq!(got, expected[..2].to_vec());
        }
        let optimized: Vec<(SampledResponse, Option<OptimizedTrajectory>)> = targets
            .iter()
            .map(|t| (t.clone(), Some(fake_optimized("shortened with 7 inside"))))
            .collect();
        let (pairs, drops) = build_pairs(&problem, "prompt", &samples, &optimized, &policy);
        assert_eq!(pairs.len(), 2, "pairs at correct_count {correct_count}");
        assert_eq!(drops.total(), 0);
        for pair in &pairs {
            assert_eq!(pair.rejected, "sample number 4 body", "longest raw sample rejected");
            assert_eq!(pair.rejected_tokens, 110);
        }
        let from_correct = pairs
            .iter()
            .filter(|p| p.source == PairSource::FromCorrect)
            .count();
        assert_eq!(from_correct, expect_correct);
    }
    // Failed optimizations drop pairs without raising.
    let samples = synthetic_samples(4);
    let targets = select_optimization_targets(&samples, 2, 99).unwrap();
    let optimized: Vec<(SampledResponse, Option<OptimizedTrajectory>)> = targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            (
                t.clone(),
                (i == 0).then(|| fake_optimized("shortened with 7 inside")),
            )
        })
        .collect();
    let policy = AnswerMatchPolicy::containment();
    let (pairs, drops) = build_pairs(&problem, "prompt", &samples, &optimized, &policy);
    assert_eq!(pairs.len(), 1);
    assert_eq!(drops.optimization_failed, 1);
    println!("criterion 7 (N pairs per problem over every correct-sample count): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 8: live-backend smoke check, gated on an endpoint being provided
// through the environment.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_live_backend_smoke() {
    let Ok(base_url) = std::env::var("TRACEOPT_LIVE_BASE_URL") else {
        println!("criterion 8 (live backend smoke): SKIP (TRACEOPT_LIVE_BASE_URL unset)");
        return;
    };
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    let backend = traceopt_core::backend::HttpBackend::new(traceopt_core::backend::HttpBackendConfig {
        base_url,
        model: std::env::var("TRACEOPT_LIVE_MODEL").ok(),
        api_key: std::env::var("TRACEOPT_LIVE_API_KEY").ok(),
        max_in_flight: 4,
        max_retries: 3,
        request_timeout_secs: 120,
    })
    .expect("live backend builds");
    let backend = Arc::new(backend);
    let params = SamplingParams {
        max_tokens: 32,
        ..SamplingParams::default()
    };
    let result = runtime
        .block_on(backend.generate(&GenerationRequest::new("Say hello.", params)))
        .expect("live generate");
    assert!(!result.completions.is_empty());
    assert!(!result.completions[0].text.is_empty());
    println!("criterion 8 (live backend smoke): PASS");
}
