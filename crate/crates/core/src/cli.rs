//! The `semsim` command line: argument parsing, run configuration and the six subcommands.
//!
//! Every command is a pure function of its configuration and input files. Output goes to
//! `--out` when given, stdout otherwise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{train_model, ClassifyError, Method, Model, Objective, TrainOptions};
use crate::corpus::{load_corpus, Corpus, CorpusError, CorpusFormat, Label, TokenizerConfig};
use crate::eval::{
    category_concordance, cross_validate_scores, lexical_concordance, CategoryMode,
    ConfusionCounts, CvOptions, EvalError, EvalReport,
};
use crate::measures::{score_corpus, MeasureError, PairScores, SoftmatchRounds};
use crate::wordsim::{
    coverage, load_embeddings, load_taxonomy, EmbeddingBackend, EmbeddingConfig, ExactMatch,
    OovPolicy, SimilarityBackend, WordSimError, WupBackend,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("--{field}: {path} does not exist")]
    MissingPath { field: &'static str, path: PathBuf },
    #[error("--{field} is required with --backend {backend}")]
    MissingFlag {
        field: &'static str,
        backend: BackendArg,
    },
    #[error("--{field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("--corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("--{field}: {source}")]
    Resource {
        field: &'static str,
        #[source]
        source: WordSimError,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("--model: {0}")]
    ModelFile(String),
    #[error("--out: cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot write to stdout: {0}")]
    Stdout(#[source] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Exact,
    Embedding,
    Wup,
}

impl std::fmt::Display for BackendArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendArg::Exact => "exact",
            BackendArg::Embedding => "embedding",
            BackendArg::Wup => "wup",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "semsim",
    version,
    about = "Semantic text similarity and plagiarism evaluation"
)]
pub struct Cli {
    /// Worker threads for pair scoring and folds (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Seed for fold assignment.
    #[arg(long, global = true, default_value_t = 42, value_name = "N")]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write j, sj, ed and sed for every pair.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-validate one method and report macro-F1.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 10, value_name = "K")]
        folds: usize,
        /// Re-run cross-validation inside each category instead of reusing pooled predictions.
        #[arg(long)]
        retune_per_category: bool,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lexical concordance of the corpus and of each category.
    Complexity {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Train a classifier on the whole corpus and write it as JSON.
    Tune {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_enum)]
        method: Method,
        #[command(flatten)]
        train: TrainArgs,
        /// Where to write the model (stdout when omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Predict labels with a model written by `tune`.
    Apply {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Refuse the model unless it implements this method.
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Share of corpus vocabulary the backend knows.
    Coverage {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = CorpusFormat::PairsTsv)]
    pub format: CorpusFormat,
    /// Keep the original letter case.
    #[arg(long)]
    pub no_case_fold: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    pub backend: BackendArg,
    /// Word vectors in text format (`count dim` header, then `word v1 .. vd`).
    #[arg(long, value_name = "PATH")]
    pub vectors: Option<PathBuf>,
    /// Taxonomy file with `edge` and `word` records.
    #[arg(long, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,
    /// Number of leading vectors averaged into the insert/delete reference.
    #[arg(long, default_value_t = 100, value_name = "K")]
    pub tau_topk: usize,
    /// Synset used as the insert/delete reference for the taxonomy backend.
    #[arg(long, value_name = "SYNSET")]
    pub tau_synset: Option<String>,
    #[arg(long, value_enum, default_value_t = OovPolicy::ExactFallback)]
    pub oov: OovPolicy,
    #[arg(long, value_enum, default_value_t = SoftmatchRounds::One)]
    pub softmatch_rounds: SoftmatchRounds,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 3, value_name = "D")]
    pub max_depth: usize,
    #[arg(long, value_enum, default_value_t = Objective::MacroF1)]
    pub objective: Objective,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub report: ReportFormat,
}

/// Resolved settings of one run, echoed into every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub case_fold: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_category: Option<CategoryMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub report: ReportFormat,
}

#[derive(Debug, Clone, Serialize)]
pub struct BackendConfig {
    pub kind: BackendArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_topk: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_synset: Option<String>,
    pub oov: OovPolicy,
    pub softmatch_rounds: SoftmatchRounds,
}

impl RunConfig {
    fn new(command: &'static str, corpus: &CorpusArgs, seed: u64) -> Self {
        RunConfig {
            command,
            corpus: corpus.corpus.clone(),
            format: corpus.format,
            case_fold: !corpus.no_case_fold,
            backend: None,
            method: None,
            folds: None,
            seed,
            per_category: None,
            train: None,
            model: None,
            out: None,
            report: ReportFormat::Json,
        }
    }

    fn with_backend(mut self, args: &BackendArgs) -> Self {
        self.backend = Some(BackendConfig {
            kind: args.backend,
            vectors: args
                .vectors
                .clone()
                .filter(|_| args.backend == BackendArg::Embedding),
            taxonomy: args
                .taxonomy
                .clone()
                .filter(|_| args.backend == BackendArg::Wup),
            tau_topk: (args.backend == BackendArg::Embedding).then_some(args.tau_topk),
            tau_synset: args
                .tau_synset
                .clone()
                .filter(|_| args.backend == BackendArg::Wup),
            oov: args.oov,
            softmatch_rounds: args.softmatch_rounds,
        });
        self
    }

    fn with_output(mut self, out: Option<&PathBuf>, report: ReportFormat) -> Self {
        self.out = out.cloned();
        self.report = report;
        self
    }

    fn train_options(args: &TrainArgs) -> Result<TrainOptions, CliError> {
        if args.max_depth == 0 {
            return Err(CliError::Invalid {
                field: "max-depth",
                message: "must be at least 1".into(),
            });
        }
        Ok(TrainOptions {
            objective: args.objective,
            max_depth: args.max_depth,
        })
    }

    /// Checks every referenced input path before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        require_path("corpus", &self.corpus)?;
        if let Some(backend) = &self.backend {
            match backend.kind {
                BackendArg::Exact => {}
                BackendArg::Embedding => {
                    let path = backend.vectors.as_ref().ok_or(CliError::MissingFlag {
                        field: "vectors",
                        backend: backend.kind,
                    })?;
                    require_path("vectors", path)?;
                }
                BackendArg::Wup => {
                    let path = backend.taxonomy.as_ref().ok_or(CliError::MissingFlag {
                        field: "taxonomy",
                        backend: backend.kind,
                    })?;
                    require_path("taxonomy", path)?;
                }
            }
        }
        if let Some(model) = &self.model {
            require_path("model", model)?;
        }
        Ok(())
    }
}

fn require_path(field: &'static str, path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingPath {
            field,
            path: path.to_owned(),
        })
    }
}

fn load(config: &RunConfig) -> Result<Corpus, CliError> {
    let tokenizer = TokenizerConfig {
        case_fold: config.case_fold,
    };
    Ok(load_corpus(&config.corpus, config.format, &tokenizer)?)
}

fn build_backend(config: &BackendConfig) -> Result<Box<dyn SimilarityBackend>, CliError> {
    match config.kind {
        BackendArg::Exact => Ok(Box::new(ExactMatch)),
        BackendArg::Embedding => {
            let path = config.vectors.as_deref().expect("validated");
            let table = load_embeddings(path).map_err(|source| CliError::Resource {
                field: "vectors",
                source,
            })?;
            if config.tau_topk == Some(0) {
                return Err(CliError::Invalid {
                    field: "tau-topk",
                    message: "must be at least 1".into(),
                });
            }
            let cfg = EmbeddingConfig {
                tau_top_k: config.tau_topk.unwrap_or(100),
                oov: config.oov,
            };
            Ok(Box::new(EmbeddingBackend::new(&table, cfg)))
        }
        BackendArg::Wup => {
            let path = config.taxonomy.as_deref().expect("validated");
            let taxonomy = load_taxonomy(path).map_err(|source| CliError::Resource {
                field: "taxonomy",
                source,
            })?;
            let backend = WupBackend::new(taxonomy, config.tau_synset.as_deref(), config.oov)
                .map_err(|source| CliError::Resource {
                    field: "tau-synset",
                    source,
                })?;
            Ok(Box::new(backend))
        }
    }
}

fn score(corpus: &Corpus, config: &RunConfig) -> Result<Vec<PairScores>, CliError> {
    let backend_cfg = config
        .backend
        .as_ref()
        .expect("scoring commands carry a backend");
    let backend = build_backend(backend_cfg)?;
    Ok(score_corpus(
        corpus,
        backend.as_ref(),
        backend_cfg.softmatch_rounds,
    )?)
}

/// Writes to `--out` or, when absent, to `stdout`.
fn emit(out: Option<&Path>, content: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        }),
        None => stdout
            .write_all(content.as_bytes())
            .map_err(CliError::Stdout),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ScoreRecord<'a> {
    id: &'a str,
    j: f64,
    sj: f64,
    ed: f64,
    sed: f64,
}

#[derive(Serialize)]
struct ScoreOutput<'a> {
    config: &'a RunConfig,
    records: Vec<ScoreRecord<'a>>,
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    config: &'a RunConfig,
    report: &'a EvalReport,
}

#[derive(Serialize)]
struct ComplexityOutput<'a> {
    config: &'a RunConfig,
    corpus: &'a str,
    pairs: usize,
    lexical_concordance: f64,
    per_category: BTreeMap<String, f64>,
}

/// Model file written by `tune` and read by `apply`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub method: Method,
    pub training_macro_f1: f64,
    pub model: Model,
    /// Settings the model was trained with; informational only.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Serialize)]
struct Prediction<'a> {
    id: &'a str,
    predicted: Label,
    gold: Label,
}

#[derive(Serialize)]
struct ApplyOutput<'a> {
    config: &'a RunConfig,
    method: Method,
    macro_f1: f64,
    predictions: Vec<Prediction<'a>>,
}

#[derive(Serialize)]
struct CoverageOutput<'a> {
    config: &'a RunConfig,
    vocabulary: usize,
    known: usize,
    coverage: f64,
}

/// Runs one parsed command, writing primary output to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Score {
            corpus,
            backend,
            output,
        } => {
            let config = RunConfig::new("score", corpus, seed)
                .with_backend(backend)
                .with_output(output.out.as_ref(), output.report);
            config.validate()?;
            let corpus = load(&config)?;
            let scores = score(&corpus, &config)?;
            let content = match output.report {
                ReportFormat::Json => to_json(&ScoreOutput {
                    config: &config,
                    records: corpus
                        .pairs()
                        .iter()
                        .zip(&scores)
                        .map(|(p, s)| ScoreRecord {
                            id: p.id(),
                            j: s.j,
                            sj: s.sj,
                            ed: s.ed,
                            sed: s.sed,
                        })
                        .collect(),
                }),
                ReportFormat::Table => {
                    let mut t = String::from("id\tj\tsj\ted\tsed\n");
                    for (p, s) in corpus.pairs().iter().zip(&scores) {
                        let _ = writeln!(
                            t,
                            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                            p.id(),
                            s.j,
                            s.sj,
                            s.ed,
                            s.sed
                        );
                    }
                    t
                }
            };
            emit(output.out.as_deref(), &content, stdout)
        }
        Command::Evaluate {
            corpus,
            backend,
            method,
            folds,
            retune_per_category,
            train,
            output,
        } => {
            let categories = if *retune_per_category {
                CategoryMode::Retune
            } else {
                CategoryMode::Pooled
            };
            let mut config = RunConfig::new("evaluate", corpus, seed)
                .with_backend(backend)
                .with_output(output.out.as_ref(), output.report);
            config.method = Some(*method);
            config.folds = Some(*folds);
            config.per_category = Some(categories);
            config.train = Some(RunConfig::train_options(train)?);
            config.validate()?;
            let corpus = load(&config)?;
            let scores = score(&corpus, &config)?;
            let options = CvOptions {
                k: *folds,
                seed,
                train: config.train.expect("set above"),
                categories,
            };
            let report = cross_validate_scores(&corpus, &scores, *method, &options)?;
            let content = match output.report {
                ReportFormat::Json => to_json(&EvaluateOutput {
                    config: &config,
                    report: &report,
                }),
                ReportFormat::Table => report.to_table(),
            };
            emit(output.out.as_deref(), &content, stdout)?;
            if output.out.is_some() {
                writeln!(stdout, "macro-F1\t{:.4}", report.macro_f1).map_err(CliError::Stdout)?;
            }
            Ok(())
        }
        Command::Complexity { corpus, output } => {
            let config = RunConfig::new("complexity", corpus, seed)
                .with_output(output.out.as_ref(), output.report);
            config.validate()?;
            let corpus = load(&config)?;
            let lc = lexical_concordance(&corpus);
            let per_category: BTreeMap<String, f64> = category_concordance(&corpus)
                .into_iter()
                .map(|(c, v)| (c.to_string(), v))
                .collect();
            let content = match output.report {
                ReportFormat::Json => to_json(&ComplexityOutput {
                    config: &config,
                    corpus: corpus.name(),
                    pairs: corpus.len(),
                    lexical_concordance: lc,
                    per_category,
                }),
                ReportFormat::Table => {
                    let mut t = format!(
                        "corpus\tpairs\tLC\n{}\t{}\t{lc:.4}\n",
                        corpus.name(),
                        corpus.len()
                    );
                    if !per_category.is_empty() {
                        t.push_str("\ncategory\tLC\n");
                        for (c, v) in &per_category {
                            let _ = writeln!(t, "{c}\t{v:.4}");
                        }
                    }
                    t
                }
            };
            emit(output.out.as_deref(), &content, stdout)
        }
        Command::Tune {
            corpus,
            backend,
            method,
            train,
            out,
        } => {
            let mut config = RunConfig::new("tune", corpus, seed)
                .with_backend(backend)
                .with_output(out.as_ref(), ReportFormat::Json);
            config.method = Some(*method);
            config.train = Some(RunConfig::train_options(train)?);
            config.validate()?;
            let corpus = load(&config)?;
            let scores = score(&corpus, &config)?;
            let labels = corpus.labels();
            let model = train_model(*method, &scores, &labels, &config.train.expect("set above"))?;
            let predicted: Vec<Label> = scores.iter().map(|s| model.predict(s)).collect();
            let training_macro_f1 = ConfusionCounts::from_labels(&labels, &predicted).macro_f1()?;
            let file = ModelFile {
                method: *method,
                training_macro_f1,
                model,
                config: serde_json::to_value(&config).expect("config serializes"),
            };
            emit(out.as_deref(), &to_json(&file), stdout)
        }
        Command::Apply {
            corpus,
            backend,
            model,
            method,
            output,
        } => {
            let mut config = RunConfig::new("apply", corpus, seed)
                .with_backend(backend)
                .with_output(output.out.as_ref(), output.report);
            config.model = Some(model.clone());
            config.method = *method;
            config.validate()?;
            let file = read_model(model)?;
            if file.model.method() != Some(file.method) {
                return Err(CliError::ModelFile(format!(
                    "model does not implement its declared method `{}`",
                    file.method
                )));
            }
            if let Some(wanted) = method {
                if *wanted != file.method {
                    return Err(CliError::ModelFile(format!(
                        "model implements `{}`, not the requested `{wanted}`",
                        file.method
                    )));
                }
            }
            let corpus = load(&config)?;
            let scores = score(&corpus, &config)?;
            let predicted: Vec<Label> = scores.iter().map(|s| file.model.predict(s)).collect();
            let labels = corpus.labels();
            let macro_f1 = ConfusionCounts::from_labels(&labels, &predicted).macro_f1()?;
            let content = match output.report {
                ReportFormat::Json => to_json(&ApplyOutput {
                    config: &config,
                    method: file.method,
                    macro_f1,
                    predictions: corpus
                        .pairs()
                        .iter()
                        .zip(&predicted)
                        .map(|(p, &predicted)| Prediction {
                            id: p.id(),
                            predicted,
                            gold: p.label(),
                        })
                        .collect(),
                }),
                ReportFormat::Table => {
                    let mut t = String::from("id\tpredicted\tgold\n");
                    for (p, l) in corpus.pairs().iter().zip(&predicted) {
                        let _ = writeln!(t, "{}\t{l}\t{}", p.id(), p.label());
                    }
                    t
                }
            };
            emit(output.out.as_deref(), &content, stdout)
        }
        Command::Coverage {
            corpus,
            backend,
            output,
        } => {
            let config = RunConfig::new("coverage", corpus, seed)
                .with_backend(backend)
                .with_output(output.out.as_ref(), output.report);
            config.validate()?;
            let corpus = load(&config)?;
            let backend = build_backend(config.backend.as_ref().expect("set above"))?;
            let vocabulary = corpus.vocabulary();
            let known = vocabulary.iter().filter(|w| backend.knows(w)).count();
            let share = coverage(backend.as_ref(), &corpus);
            let content = match output.report {
                ReportFormat::Json => to_json(&CoverageOutput {
                    config: &config,
                    vocabulary: vocabulary.len(),
                    known,
                    coverage: share,
                }),
                ReportFormat::Table => format!(
                    "vocabulary\tknown\tcoverage\n{}\t{known}\t{share:.4}\n",
                    vocabulary.len()
                ),
            };
            emit(output.out.as_deref(), &content, stdout)
        }
    }
}

fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ModelFile(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::ModelFile(format!("{}: {e}", path.display())))
}

/// Runs `cli` on a pool of `--jobs` threads when given.
pub fn run_with_jobs(cli: &Cli, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Invalid {
                field: "jobs",
                message: "must be at least 1".into(),
            });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Invalid {
                field: "jobs",
                message: e.to_string(),
            })?;
        return pool.install(|| run(cli, stdout));
    }
    run(cli, stdout)
}
