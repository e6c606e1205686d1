//! End-to-end pipeline: dataset ingestion, response sampling, trajectory
//! optimization, pair construction, evaluation, and artifact persistence.

mod config;

pub use config::{
    BackendSpec, ConfigError, DatasetFields, HttpEndpointSpec, PromptStyle, RunConfig,
};

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::answer::answer_matches;
use crate::backend::{BackendError, GenerationRequest, TextBackend};
use crate::finalize::{finalize, FinalizeError};
use crate::metrics::{evaluate, EfficiencyReport, ResponseRecord};
use crate::pairs::{
    build_pairs, problem_seed, select_optimization_targets, DropStats, PairError, PreferencePair,
    SampledResponse,
};
use crate::probe::{advance_truncation, audit_rows, find_truncation, truncate, ProbeAuditRow, ProbeError};
use crate::prompt::render_task_prompt;
use crate::prune::{prune, OptimizedTrajectory, PruneAuditRow, PruneError};
use crate::segment::{segment_response, SegmentError};
use crate::simpo::{score_dataset, ScoredPair, SimpoError, SimpoSummary};
use crate::types::Problem;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("optimization failed: finalize exhausted every candidate index")]
    OptimizationFailed,
    #[error("[{stage}] backend error: {source}")]
    Backend {
        stage: &'static str,
        #[source]
        source: BackendError,
    },
    #[error("segmentation: {0}")]
    Segment(#[from] SegmentError),
    #[error("probing: {0}")]
    Probe(ProbeError),
    #[error("pruning: {0}")]
    Prune(PruneError),
    #[error("pairs: {0}")]
    Pairs(#[from] PairError),
    #[error("scoring: {0}")]
    Simpo(#[from] SimpoError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("evaluation: {0}")]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("failure rate {rate:.3} exceeded bound {bound:.3}")]
    FailureRateExceeded { rate: f64, bound: f64 },
}

impl From<ProbeError> for PipelineError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Backend(b) => PipelineError::Backend {
                stage: "probe",
                source: b,
            },
            other => PipelineError::Probe(other),
        }
    }
}

impl From<PruneError> for PipelineError {
    fn from(e: PruneError) -> Self {
        match e {
            PruneError::Backend(b) => PipelineError::Backend {
                stage: "prune",
                source: b,
            },
            other => PipelineError::Prune(other),
        }
    }
}

/// Built backend handles for a run.
#[derive(Clone)]
pub struct Backends {
    pub policy: Arc<dyn TextBackend>,
    pub judge: Arc<dyn TextBackend>,
}

impl Backends {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let policy = cfg.policy_backend.build().map_err(|e| PipelineError::Backend {
            stage: "policy-init",
            source: e,
        })?;
        let judge = cfg.judge_backend.build().map_err(|e| PipelineError::Backend {
            stage: "judge-init",
            source: e,
        })?;
        Ok(Self { policy, judge })
    }
}

/// Loads a JSONL dataset with the configured field names. Unreadable rows
/// are skipped and counted.
pub fn load_dataset(
    path: impl AsRef<Path>,
    fields: &DatasetFields,
) -> Result<(Vec<Problem>, u64), PipelineError> {
    let content = std::fs::read_to_string(path.as_ref())?;
    let mut problems = Vec::new();
    let mut skipped = 0u64;
    for line in content.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
            skipped += 1;
            continue;
        };
        let get = |key: &str| value.get(key).and_then(|v| v.as_str()).map(String::from);
        let (Some(id), Some(statement), Some(answer)) = (
            get(&fields.id),
            get(&fields.problem),
            get(&fields.answer),
        ) else {
            skipped += 1;
            continue;
        };
        match Problem::new(id, statement, answer) {
            Ok(p) => problems.push(p),
            Err(_) => skipped += 1,
        }
    }
    if problems.is_empty() {
        return Err(PipelineError::Dataset(format!(
            "no readable problems in {}",
            path.as_ref().display()
        )));
    }
    Ok((problems, skipped))
}

fn dataset_hash(path: impl AsRef<Path>) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path.as_ref())?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(config::hex_prefix(&hasher.finalize()))
}

/// The full optimization of one response, with audit trails.
pub struct OptimizeOutcome {
    pub optimized: OptimizedTrajectory,
    pub probe_audit: Vec<ProbeAuditRow>,
    pub prune_audit: Vec<PruneAuditRow>,
    /// max over evaluated p_i, for the probe-distribution analysis.
    pub max_p: Option<f64>,
}

/// Runs the whole per-response optimization: segment, find the truncation
/// point, finalize (advancing to later qualifying indices when the closer
/// sampling fails), then judge-validated pruning.
pub async fn optimize_response(
    problem: &Problem,
    response_text: &str,
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<OptimizeOutcome, PipelineError> {
    let lexicon = cfg.lexicon()?;
    let trajectory = segment_response(response_text, &cfg.delimiters, &lexicon)?;
    // Probes condition exactly as the original generation did: task prompt
    // followed by the deliberation-open delimiter.
    let task_prompt = render_task_prompt(cfg.task_template(), &problem.statement);
    let prompt_prefix = format!("{task_prompt}{}", cfg.delimiters.open);

    let policy = backends.policy.as_ref();
    let mut decision = find_truncation(
        &prompt_prefix,
        &trajectory,
        &cfg.exit,
        &cfg.sampling,
        problem,
        policy,
    )
    .await?;

    // Finalize at i', advancing to the next qualifying index on failure;
    // the full trajectory (i' = n) is the last resort either way.
    let n = trajectory.len();
    let mut candidate = decision.i_prime;
    let finalized = loop {
        decision.i_prime = candidate;
        let truncated = truncate(&trajectory, &decision)?;
        match finalize(
            &prompt_prefix,
            &truncated,
            &cfg.finalize,
            &cfg.exit.match_policy,
            problem,
            policy,
        )
        .await
        {
            Ok(f) => break f,
            Err(FinalizeError::NoCorrectCompletion) => {
                if candidate >= n {
                    return Err(PipelineError::OptimizationFailed);
                }
                let next = advance_truncation(
                    &prompt_prefix,
                    &trajectory,
                    &mut decision,
                    candidate + 1,
                    &cfg.exit,
                    &cfg.sampling,
                    problem,
                    policy,
                )
                .await?;
                candidate = next.unwrap_or(n);
            }
            Err(FinalizeError::Backend(b)) => {
                return Err(PipelineError::Backend {
                    stage: "finalize",
                    source: b,
                })
            }
            Err(FinalizeError::EmptyTrajectory) => {
                return Err(PipelineError::OptimizationFailed)
            }
        }
    };

    let outcome = prune(
        &prompt_prefix,
        &finalized,
        backends.judge.as_ref(),
        policy,
        &cfg.prune,
        problem,
        decision.i_prime,
    )
    .await?;

    let mut optimized = outcome.optimized;
    optimized.provenance.max_p = decision.max_p();
    optimized.provenance.probes_evaluated = decision.probes.len();
    optimized.provenance.source_token_count = backends
        .policy
        .count_tokens(response_text)
        .await
        .map_err(|e| PipelineError::Backend {
            stage: "count",
            source: e,
        })?;

    Ok(OptimizeOutcome {
        max_p: decision.max_p(),
        probe_audit: audit_rows(&problem.id, &decision, cfg.exit.threshold_t),
        prune_audit: outcome.audit,
        optimized,
    })
}

/// Samples the configured number of responses for one problem and labels
/// their correctness.
pub async fn sample_responses(
    problem: &Problem,
    cfg: &RunConfig,
    policy: &dyn TextBackend,
) -> Result<Vec<SampledResponse>, PipelineError> {
    let prompt = render_task_prompt(cfg.task_template(), &problem.statement);
    let params = cfg
        .sampling
        .clone()
        .with_n(cfg.samples_per_problem as u32)
        .with_seed(Some(problem_seed(cfg.run_seed, &problem.id)));
    let result = policy
        .generate(&GenerationRequest::new(prompt, params))
        .await
        .map_err(|e| PipelineError::Backend {
            stage: "sample",
            source: e,
        })?;
    Ok(result
        .completions
        .iter()
        .enumerate()
        .map(|(i, c)| SampledResponse {
            problem_id: problem.id.clone(),
            text: c.text.clone(),
            correct: answer_matches(&c.text, &problem.ground_truth, &cfg.evaluation.match_policy),
            token_count: result.completion_token_counts[i].max(1),
            sample_index: i + 1,
        })
        .collect())
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
pub struct StageCounts {
    pub problems: u64,
    pub skipped_rows: u64,
    pub sampled_responses: u64,
    pub optimized: u64,
    pub failures: u64,
    pub pairs: u64,
    pub drops: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_id: String,
    pub config_hash: String,
    pub dataset_hash: String,
    pub run_seed: u64,
    pub counts: StageCounts,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
    pub artifacts: Vec<String>,
}

struct ProblemOutput {
    problem_id: String,
    samples: Vec<SampledResponse>,
    optimized: Vec<OptimizedTrajectory>,
    pairs: Vec<PreferencePair>,
    drops: DropStats,
    probe_audit: Vec<ProbeAuditRow>,
    prune_audit: Vec<PruneAuditRow>,
    /// max_i p_i per originally-incorrect optimized target.
    incorrect_max_ps: Vec<f64>,
    failed: bool,
}

async fn process_problem(problem: &Problem, cfg: &RunConfig, backends: &Backends) -> ProblemOutput {
    let mut out = ProblemOutput {
        problem_id: problem.id.clone(),
        samples: Vec::new(),
        optimized: Vec::new(),
        pairs: Vec::new(),
        drops: DropStats::default(),
        probe_audit: Vec::new(),
        prune_audit: Vec::new(),
        incorrect_max_ps: Vec::new(),
        failed: false,
    };
    let samples = match sample_responses(problem, cfg, backends.policy.as_ref()).await {
        Ok(s) => s,
        Err(e) => {
            tracing::warn!(problem = %problem.id, error = %e, "sampling failed");
            out.failed = true;
            return out;
        }
    };
    out.samples = samples.clone();
    let seed = problem_seed(cfg.run_seed, &problem.id);
    let targets = match select_optimization_targets(&samples, cfg.pairs_per_problem, seed) {
        Ok(t) => t,
        Err(e) => {
            tracing::warn!(problem = %problem.id, error = %e, "target selection failed");
            out.failed = true;
            return out;
        }
    };
    let mut optimized_by_target = Vec::new();
    for target in targets {
        match optimize_response(problem, &target.text, cfg, backends).await {
            Ok(res) => {
                out.probe_audit.extend(res.probe_audit);
                out.prune_audit.extend(res.prune_audit);
                if !target.correct {
                    if let Some(p) = res.max_p {
                        out.incorrect_max_ps.push(p);
                    }
                }
                out.optimized.push(res.optimized.clone());
                optimized_by_target.push((target, Some(res.optimized)));
            }
            Err(PipelineError::OptimizationFailed) => {
                optimized_by_target.push((target, None));
            }
            Err(e) => {
                tracing::warn!(problem = %problem.id, error = %e, "optimization errored");
                out.failed = true;
                return out;
            }
        }
    }
    let prompt = render_task_prompt(cfg.task_template(), &problem.statement);
    let (pairs, drops) = build_pairs(
        problem,
        &prompt,
        &samples,
        &optimized_by_target,
        &cfg.evaluation.match_policy,
    );
    out.pairs = pairs;
    out.drops = drops;
    out
}

/// Writes `content` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("row serializes"))
        .map(|line| line + "\n")
        .collect()
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Everything a pipeline run produces, before persistence.
pub struct RunArtifacts {
    pub optimized: Vec<OptimizedTrajectory>,
    pub pairs: Vec<PreferencePair>,
    pub report: EfficiencyReport,
    pub probe_audit: Vec<ProbeAuditRow>,
    pub prune_audit: Vec<PruneAuditRow>,
    pub manifest: RunManifest,
}

/// Runs the full pipeline over a dataset and writes all artifacts under
/// `out_dir`. Per-problem failures are logged and counted; the run errors
/// only when the failure rate exceeds the configured bound.
pub async fn run_pipeline(
    dataset_path: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let started_at_unix = now_unix();
    let (problems, skipped_rows) = load_dataset(dataset_path, &cfg.dataset_fields)?;

    let concurrency = cfg.concurrency.max(1);
    let mut outputs: Vec<ProblemOutput> = {
        use futures::StreamExt;
        let tasks: Vec<_> = problems
            .iter()
            .map(|p| process_problem(p, cfg, backends))
            .collect();
        futures::stream::iter(tasks)
            .buffer_unordered(concurrency)
            .collect::<Vec<_>>()
            .await
    };
    // Output order is fixed by problem id regardless of completion order.
    outputs.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));

    let mut counts = StageCounts {
        problems: problems.len() as u64,
        skipped_rows,
        ..Default::default()
    };
    let mut optimized = Vec::new();
    let mut pairs = Vec::new();
    let mut probe_audit = Vec::new();
    let mut prune_audit = Vec::new();
    let mut base_records = Vec::new();
    let mut method_records = Vec::new();
    let mut incorrect_max_ps = Vec::new();
    for out in &mut outputs {
        counts.sampled_responses += out.samples.len() as u64;
        counts.optimized += out.optimized.len() as u64;
        counts.pairs += out.pairs.len() as u64;
        counts.drops += out.drops.total();
        if out.failed {
            counts.failures += 1;
        }
        for s in &out.samples {
            base_records.push(ResponseRecord {
                problem_id: s.problem_id.clone(),
                text: s.text.clone(),
                token_count: s.token_count,
            });
        }
        for o in &out.optimized {
            method_records.push(ResponseRecord {
                problem_id: o.problem_id.clone(),
                text: o.text.clone(),
                token_count: o.token_count,
            });
        }
        optimized.append(&mut out.optimized);
        pairs.append(&mut out.pairs);
        probe_audit.append(&mut out.probe_audit);
        prune_audit.append(&mut out.prune_audit);
        incorrect_max_ps.append(&mut out.incorrect_max_ps);
    }

    let report = evaluate(
        &base_records,
        &method_records,
        &problems,
        &incorrect_max_ps,
        &cfg.evaluation,
    )?;

    std::fs::create_dir_all(out_dir)?;
    let manifest_id = format!(
        "{}-{}",
        cfg.config_hash()
            .chars()
            .take(8)
            .collect::<String>(),
        dataset_hash(dataset_path)?.chars().take(8).collect::<String>()
    );
    let artifacts = vec![
        "optimized.jsonl".to_string(),
        "pairs.jsonl".to_string(),
        "report.txt".to_string(),
        "report.json".to_string(),
        "probe_audit.jsonl".to_string(),
        "prune_audit.jsonl".to_string(),
        "manifest.json".to_string(),
    ];

    write_atomic(&out_dir.join("optimized.jsonl"), &jsonl(&optimized))?;
    write_atomic(&out_dir.join("pairs.jsonl"), &jsonl(&pairs))?;
    write_atomic(&out_dir.join("probe_audit.jsonl"), &jsonl(&probe_audit))?;
    write_atomic(&out_dir.join("prune_audit.jsonl"), &jsonl(&prune_audit))?;
    write_atomic(&out_dir.join("report.txt"), &render_report_text(&report))?;
    write_atomic(
        &out_dir.join("report.json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;

    let manifest = RunManifest {
        manifest_id,
        config_hash: cfg.config_hash(),
        dataset_hash: dataset_hash(dataset_path)?,
        run_seed: cfg.run_seed,
        counts,
        started_at_unix,
        finished_at_unix: now_unix(),
        artifacts,
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    )?;

    let rate = if counts.problems > 0 {
        counts.failures as f64 / counts.problems as f64
    } else {
        0.0
    };
    if rate > cfg.max_failure_rate {
        return Err(PipelineError::FailureRateExceeded {
            rate,
            bound: cfg.max_failure_rate,
        });
    }
    Ok(manifest)
}

fn render_report_text(report: &EfficiencyReport) -> String {
    let mut out = report.render_table();
    out.push('\n');
    out.push_str(&format!(
        "mean 'Wait' count: base {:.3}, method {:.3}\n",
        report.mean_wait_base, report.mean_wait_method
    ));
    out.push_str(&format!(
        "alpha = {:.4}, satisfied: {}\n",
        report.alpha, report.alpha_satisfied
    ));
    out.push_str("max_p histogram (incorrect responses): ");
    out.push_str(
        &report
            .max_p_histogram
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    out
}

fn read_jsonl<T: serde::de::DeserializeOwned>(
    path: &Path,
    what: &str,
) -> Result<Vec<T>, PipelineError> {
    let content = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        rows.push(
            serde_json::from_str(line)
                .map_err(|e| PipelineError::Dataset(format!("{what} row: {e}")))?,
        );
    }
    Ok(rows)
}

/// Samples responses for every dataset problem and writes them as JSONL.
pub async fn sample_to_file(
    dataset_path: &Path,
    out_path: &Path,
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<u64, PipelineError> {
    let (problems, _) = load_dataset(dataset_path, &cfg.dataset_fields)?;
    let mut all: Vec<SampledResponse> = {
        use futures::StreamExt;
        let tasks: Vec<_> = problems
            .iter()
            .map(|p| sample_responses(p, cfg, backends.policy.as_ref()))
            .collect();
        let results: Vec<Result<Vec<SampledResponse>, PipelineError>> =
            futures::stream::iter(tasks)
                .buffer_unordered(cfg.concurrency.max(1))
                .collect()
                .await;
        let mut all = Vec::new();
        for r in results {
            all.extend(r?);
        }
        all
    };
    all.sort_by(|a, b| (&a.problem_id, a.sample_index).cmp(&(&b.problem_id, b.sample_index)));
    write_atomic(out_path, &jsonl(&all))?;
    Ok(all.len() as u64)
}

fn group_samples(samples: Vec<SampledResponse>) -> Vec<(String, Vec<SampledResponse>)> {
    let mut groups: std::collections::BTreeMap<String, Vec<SampledResponse>> =
        std::collections::BTreeMap::new();
    for s in samples {
        groups.entry(s.problem_id.clone()).or_default().push(s);
    }
    groups.into_iter().collect()
}

/// Optimizes the selected targets from a samples file and writes the
/// optimized trajectories plus probe/prune audit trails next to them.
pub async fn optimize_files(
    dataset_path: &Path,
    samples_path: &Path,
    out_path: &Path,
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<u64, PipelineError> {
    let (problems, _) = load_dataset(dataset_path, &cfg.dataset_fields)?;
    let samples: Vec<SampledResponse> = read_jsonl(samples_path, "samples")?;
    let mut optimized = Vec::new();
    let mut probe_audit = Vec::new();
    let mut prune_audit = Vec::new();
    for (problem_id, group) in group_samples(samples) {
        let Some(problem) = problems.iter().find(|p| p.id == problem_id) else {
            return Err(PipelineError::Dataset(format!(
                "samples reference unknown problem {problem_id}"
            )));
        };
        let seed = problem_seed(cfg.run_seed, &problem_id);
        let targets = select_optimization_targets(&group, cfg.pairs_per_problem, seed)?;
        for target in targets {
            match optimize_response(problem, &target.text, cfg, backends).await {
                Ok(res) => {
                    probe_audit.extend(res.probe_audit);
                    prune_audit.extend(res.prune_audit);
                    optimized.push(res.optimized);
                }
                Err(PipelineError::OptimizationFailed) => {
                    tracing::warn!(problem = %problem_id, "optimization exhausted candidates");
                }
                Err(e) => return Err(e),
            }
        }
    }
    write_atomic(out_path, &jsonl(&optimized))?;
    let dir = out_path.parent().unwrap_or(Path::new("."));
    write_atomic(&dir.join("probe_audit.jsonl"), &jsonl(&probe_audit))?;
    write_atomic(&dir.join("prune_audit.jsonl"), &jsonl(&prune_audit))?;
    Ok(optimized.len() as u64)
}

/// Builds the preference-pair dataset from a samples file and an optimized
/// trajectories file.
pub async fn build_pairs_files(
    dataset_path: &Path,
    samples_path: &Path,
    optimized_path: &Path,
    out_path: &Path,
    cfg: &RunConfig,
) -> Result<(u64, DropStats), PipelineError> {
    let (problems, _) = load_dataset(dataset_path, &cfg.dataset_fields)?;
    let samples: Vec<SampledResponse> = read_jsonl(samples_path, "samples")?;
    let optimized: Vec<OptimizedTrajectory> = read_jsonl(optimized_path, "optimized")?;
    let mut pairs = Vec::new();
    let mut drops = DropStats::default();
    for (problem_id, group) in group_samples(samples) {
        let Some(problem) = problems.iter().find(|p| p.id == problem_id) else {
            return Err(PipelineError::Dataset(format!(
                "samples reference unknown problem {problem_id}"
            )));
        };
        let seed = problem_seed(cfg.run_seed, &problem_id);
        let targets = select_optimization_targets(&group, cfg.pairs_per_problem, seed)?;
        // Match targets to optimized rows by problem in selection order.
        let mut available: Vec<&OptimizedTrajectory> = optimized
            .iter()
            .filter(|o| o.problem_id == problem_id)
            .collect();
        let matched: Vec<(SampledResponse, Option<OptimizedTrajectory>)> = targets
            .into_iter()
            .map(|t| {
                let opt = if available.is_empty() {
                    None
                } else {
                    Some(available.remove(0).clone())
                };
                (t, opt)
            })
            .collect();
        let prompt = render_task_prompt(cfg.task_template(), &problem.statement);
        let (mut p, d) = build_pairs(
            problem,
            &prompt,
            &group,
            &matched,
            &cfg.evaluation.match_policy,
        );
        pairs.append(&mut p);
        drops.optimization_failed += d.optimization_failed;
        drops.chosen_incorrect += d.chosen_incorrect;
        drops.degenerate += d.degenerate;
    }
    write_atomic(out_path, &jsonl(&pairs))?;
    Ok((pairs.len() as u64, drops))
}

/// Compares a base samples file against an optimized file and writes the
/// efficiency report.
pub fn evaluate_files(
    dataset_path: &Path,
    base_path: &Path,
    method_path: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
) -> Result<EfficiencyReport, PipelineError> {
    let (problems, _) = load_dataset(dataset_path, &cfg.dataset_fields)?;
    let samples: Vec<SampledResponse> = read_jsonl(base_path, "samples")?;
    let optimized: Vec<OptimizedTrajectory> = read_jsonl(method_path, "optimized")?;
    let base: Vec<ResponseRecord> = samples
        .iter()
        .map(|s| ResponseRecord {
            problem_id: s.problem_id.clone(),
            text: s.text.clone(),
            token_count: s.token_count,
        })
        .collect();
    let method: Vec<ResponseRecord> = optimized
        .iter()
        .map(|o| ResponseRecord {
            problem_id: o.problem_id.clone(),
            text: o.text.clone(),
            token_count: o.token_count,
        })
        .collect();
    let max_ps: Vec<f64> = optimized
        .iter()
        .filter_map(|o| o.provenance.max_p)
        .collect();
    let report = evaluate(&base, &method, &problems, &max_ps, &cfg.evaluation)?;
    std::fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("report.txt"), &render_report_text(&report))?;
    write_atomic(
        &out_dir.join("report.json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    Ok(report)
}

/// Scores a pairs file with the policy backend and writes the per-pair
/// rows next to a summary.
pub async fn score_pairs_file(
    pairs_path: &Path,
    out_path: &Path,
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<(Vec<ScoredPair>, SimpoSummary), PipelineError> {
    let content = std::fs::read_to_string(pairs_path)?;
    let mut pairs = Vec::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        let pair: PreferencePair = serde_json::from_str(line)
            .map_err(|e| PipelineError::Dataset(format!("pairs row: {e}")))?;
        pairs.push(pair);
    }
    let (scored, summary) = score_dataset(&pairs, backends.policy.as_ref(), &cfg.simpo).await?;
    #[derive(Serialize)]
    struct Row<'a> {
        pair_id: &'a str,
        margin: f64,
        loss: f64,
        preferred_ok: bool,
    }
    let rows: Vec<Row> = scored
        .iter()
        .map(|s| Row {
            pair_id: &s.pair_id,
            margin: s.margin,
            loss: s.loss,
            preferred_ok: s.preferred_ok,
        })
        .collect();
    write_atomic(out_path, &jsonl(&rows))?;
    Ok((scored, summary))
}
