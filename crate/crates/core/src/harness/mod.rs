//! Experiment runner: one run per seed, metrics files, aggregate summary,
//! learning-curve plots and graph edit distance reports.

mod config;
mod output;
mod plot;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{run_agts, run_lfs, run_shaped, run_tscl};
use crate::graph::{graph_edit_distance, parse_edge_list, to_edge_list, GraphError, NodeMatch, SubgoalDag};
use crate::llm::{query_paths_with_synonyms, LlmError, SubgoalPath};
use crate::symbolic::SymbolicInfo;
use crate::teacher::{run_lgts, RunResult, TeacherError};

pub use config::{
    ConfigError, EnvSection, Experiment, ExperimentConfig, LlmSection, Method, ProviderKind,
    SymbolsSection,
};
pub use output::{read_metrics_csv, write_metrics_csv, write_qvals_csv, CsvRow, CSV_SCHEMA};
pub use plot::{plot_curves, PlotSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("no metrics rows to plot")]
    EmptyMetrics,
    #[error("no graph dumps given")]
    NoDumps,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GedReport {
    pub mean: f64,
    pub sd: f64,
    pub values: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Stat>,
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub run_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_interactions: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    pub succeeded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ged: Option<usize>,
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Contents of the aggregate JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub domain: String,
    pub n_seeds: usize,
    pub interactions: Option<Stat>,
    pub success: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ged: Option<GedReport>,
    pub csv_schema: u32,
    pub runs: Vec<SeedEntry>,
}

/// Everything one seed produced.
pub struct SeedRun {
    pub seed: u64,
    pub run_id: String,
    pub outcome: Result<SeedOutput, String>,
}

pub struct SeedOutput {
    pub result: RunResult,
    pub dag: Option<SubgoalDag>,
    pub transcript: Option<String>,
    pub ged: Option<usize>,
}

pub fn run_id(method: Method, domain: &str, seed: u64) -> String {
    format!("{method}-{domain}-s{seed}")
}

/// Build the sub-goal graph from the model's paths.
pub fn llm_dag(exp: &Experiment) -> Result<(SubgoalDag, String), HarnessError> {
    let llm = exp
        .config
        .llm
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("no [llm] section".into()))?;
    let mut provider = llm.provider()?;
    let (paths, session) = query_paths_with_synonyms(
        provider.as_mut(),
        &exp.info,
        &llm.synonyms,
        llm.n,
        llm.max_retries,
        llm.template()?,
    )?;
    let states: Vec<_> = paths.into_iter().map(SubgoalPath::into_states).collect();
    let dag = SubgoalDag::build(&states, exp.info.initial(), exp.info.goal())?;
    Ok((dag, session.transcript_text()))
}

fn oracle(exp: &Experiment) -> Result<&SubgoalDag, HarnessError> {
    exp.oracle
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("no oracle graph".into()).into())
}

/// Run one seed of the experiment without touching the filesystem.
pub fn run_seed(exp: &Experiment, seed: u64) -> Result<SeedOutput, HarnessError> {
    let c = &exp.config;
    let (t, s, b) = (&c.teacher, &c.student, &c.baseline);
    let (dag, transcript) = if exp.method.uses_llm() {
        let (dag, text) = llm_dag(exp)?;
        (Some(dag), Some(text))
    } else if exp.method.uses_oracle() {
        (Some(oracle(exp)?.clone()), None)
    } else {
        (None, None)
    };
    let result = match exp.method {
        Method::Lgts => run_lgts(dag.as_ref().expect("llm graph"), &exp.env, t, s, seed)?,
        Method::Agts => run_agts(dag.as_ref().expect("oracle graph"), &exp.env, t, s, seed)?,
        Method::Tscl => run_tscl(dag.as_ref().expect("oracle graph"), &exp.env, t, s, seed)?,
        Method::Agrs | Method::Lgrs => {
            run_shaped(&exp.env, dag.as_ref().expect("graph"), t, b, s, seed)?
        }
        Method::Lfs => run_lfs(&exp.env, exp.info.initial(), exp.info.goal(), t, b, s, seed)?,
    };
    let ged = match (&dag, &exp.oracle) {
        (Some(d), Some(o)) if exp.method.uses_llm() => {
            Some(graph_edit_distance(d, o, NodeMatch::Labels)?)
        }
        _ => None,
    };
    Ok(SeedOutput {
        result,
        dag,
        transcript,
        ged,
    })
}

/// Run every seed in parallel, in memory.
pub fn run_seeds(exp: &Experiment, seeds: &[u64]) -> Vec<SeedRun> {
    let domain = &exp.config.domain;
    seeds
        .par_iter()
        .map(|&seed| SeedRun {
            seed,
            run_id: run_id(exp.method, domain, seed),
            outcome: run_seed(exp, seed).map_err(|e| e.to_string()),
        })
        .collect()
}

pub fn aggregate(exp: &Experiment, runs: &[SeedRun]) -> Aggregate {
    let mut entries = Vec::new();
    let (mut inter, mut succ, mut geds) = (Vec::new(), Vec::new(), Vec::new());
    for r in runs {
        let entry = match &r.outcome {
            Ok(out) => {
                let sum = &out.result.metrics.summary;
                inter.push(sum.total_interactions as f64);
                succ.push(sum.success_rate);
                geds.extend(out.ged);
                SeedEntry {
                    seed: r.seed,
                    run_id: r.run_id.clone(),
                    total_interactions: Some(sum.total_interactions),
                    success_rate: Some(sum.success_rate),
                    succeeded: sum.succeeded,
                    ged: out.ged,
                    note: sum.note.clone(),
                    error: None,
                }
            }
            Err(e) => SeedEntry {
                seed: r.seed,
                run_id: r.run_id.clone(),
                total_interactions: None,
                success_rate: None,
                succeeded: false,
                ged: None,
                note: String::new(),
                error: Some(e.clone()),
            },
        };
        entries.push(entry);
    }
    let ged = Stat::of(&geds.iter().map(|&g| g as f64).collect::<Vec<_>>()).map(|s| GedReport {
        mean: s.mean,
        sd: s.sd,
        values: geds.clone(),
        reference: exp.config.ged_reference.map(|[mean, sd]| Stat { mean, sd }),
    });
    Aggregate {
        method: exp.method.to_string(),
        domain: exp.config.domain.clone(),
        n_seeds: runs.len(),
        interactions: Stat::of(&inter),
        success: Stat::of(&succ),
        ged,
        csv_schema: CSV_SCHEMA,
        runs: entries,
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, Default)]
pub struct ExperimentFiles {
    pub metrics: Vec<PathBuf>,
    pub qvals: Vec<PathBuf>,
    pub transcripts: Vec<PathBuf>,
    pub dags: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Run every seed (shifted by `seed_offset`) and write the per-run CSVs,
/// transcripts, graph dumps and the aggregate JSON into `out_dir`.
pub fn run_experiment(
    exp: &Experiment,
    seed_offset: u64,
    out_dir: &Path,
) -> Result<(Aggregate, ExperimentFiles), HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let seeds: Vec<u64> = exp.config.seeds.iter().map(|s| s + seed_offset).collect();
    let runs = run_seeds(exp, &seeds);
    let mut files = ExperimentFiles::default();
    for r in &runs {
        let Ok(out) = &r.outcome else { continue };
        let path = out_dir.join(format!("{}.csv", r.run_id));
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        write_metrics_csv(&r.run_id, &out.result.metrics, file)?;
        files.metrics.push(path);
        let path = out_dir.join(format!("{}_qvals.csv", r.run_id));
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        write_qvals_csv(&r.run_id, &out.result.metrics, file)?;
        files.qvals.push(path);
        if let Some(text) = &out.transcript {
            let path = out_dir.join(format!("{}_transcript.txt", r.run_id));
            std::fs::write(&path, text).map_err(io_err(&path))?;
            files.transcripts.push(path);
        }
        if let Some(dag) = &out.dag {
            let path = out_dir.join(format!("{}.edges", r.run_id));
            std::fs::write(&path, to_edge_list(dag)).map_err(io_err(&path))?;
            files.dags.push(path);
        }
    }
    let agg = aggregate(exp, &runs);
    let path = out_dir.join(format!("{}-{}_summary.json", exp.method, exp.config.domain));
    let mut json = serde_json::to_string_pretty(&agg)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(io_err(&path))?;
    files.summary = path;
    Ok((agg, files))
}

/// Edit distance of each dumped graph to the oracle.
pub fn report_ged(dumps: &[PathBuf], oracle: &Path, info: &SymbolicInfo) -> Result<GedReport, HarnessError> {
    if dumps.is_empty() {
        return Err(HarnessError::NoDumps);
    }
    let read = |p: &Path| std::fs::read_to_string(p).map_err(io_err(p));
    let reference = parse_edge_list(&read(oracle)?, info)?;
    let mut values = Vec::new();
    for d in dumps {
        let dag = parse_edge_list(&read(d)?, info)?;
        values.push(graph_edit_distance(&dag, &reference, NodeMatch::Labels)?);
    }
    let s = Stat::of(&values.iter().map(|&v| v as f64).collect::<Vec<_>>()).expect("non-empty");
    Ok(GedReport {
        mean: s.mean,
        sd: s.sd,
        values,
        reference: None,
    })
}
