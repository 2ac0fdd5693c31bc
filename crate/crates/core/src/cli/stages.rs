use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{
    assemble_records, build_api_multisets, build_issue_documents, build_repo_documents, ApiCounts, DeveloperLabel,
    RoleLabel, TaggedDocument,
};
use crate::eval::{
    inter_intra_matrix, macro_weighted_metrics, majority_baseline, present_classes, split,
    tfidf_vectorize, Classifier, ClassifierTrainer, EvalError, EvalReport, Split,
};
use crate::imports::{default_extractor, ImportError, LanguageId};
use crate::jsonl::{self, JsonlError};
use crate::miner::{
    self, AcquisitionJob, CommitSnapshot, EvidenceSource, FixtureSource, GithubClient, IssueFacts, LiveConfig,
    MinerError, RepoFacts, RetryPolicy, SourceKind, UreqTransport,
};
use crate::pipelines::{
    concat_rias, embed_api_source, infer_vectors, pca_fit, ExpertiseVector, PipelineError, VectorSource,
};
use crate::pv::{EmbeddingModel, PvError};

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Pv(#[from] PvError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Import(#[from] ImportError),
    #[error("{0}")]
    Input(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StageError + '_ {
    move |source| StageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where each stage reads and writes.
#[derive(Debug, Clone)]
pub struct Layout {
    pub raw: PathBuf,
    pub corpus: PathBuf,
    pub models: PathBuf,
    pub vectors: PathBuf,
    pub reports: PathBuf,
}

const DEVELOPERS: &str = "developers.jsonl";
const DOCS_REPOS: &str = "docs_repos.jsonl";
const DOCS_ISSUES: &str = "docs_issues.jsonl";
const DOCS_APIS: &str = "docs_apis.jsonl";
const API_COUNTS: &str = "api_counts.jsonl";

impl Layout {
    pub fn new(out: &Path, cfg: &RunConfig) -> Self {
        let under = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { out.join(p) };
        Layout {
            raw: under(&cfg.paths.raw_dir),
            corpus: under(&cfg.paths.corpus_dir),
            models: under(&cfg.paths.model_dir),
            vectors: under(&cfg.paths.vectors_dir),
            reports: under(&cfg.paths.report_dir),
        }
    }

    pub fn model_path(&self, source: VectorSource) -> PathBuf {
        self.models.join(format!("{}.model", file_stem(source)))
    }

    pub fn pca_model_path(&self, k: usize) -> PathBuf {
        self.models.join(format!("pca_{k}.model"))
    }

    pub fn write_resolved_config(&self, cfg: &RunConfig) -> Result<(), StageError> {
        write_json(
            &self.reports.join("resolved_config.json"),
            &json!({
                "version": env!("CARGO_PKG_VERSION"),
                "seed": cfg.seed,
                "config": cfg,
            }),
        )
    }
}

fn file_stem(source: VectorSource) -> &'static str {
    match source {
        VectorSource::Repos => "repos",
        VectorSource::Issues => "issues",
        VectorSource::Apis => "apis",
        VectorSource::Rias => "rias",
        VectorSource::RiasPca => "rias_pca",
    }
}

fn ensure_dir(dir: &Path) -> Result<(), StageError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StageError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    jsonl::write(path, records)?;
    Ok(())
}

fn require(path: &Path, stage: &str) -> Result<(), StageError> {
    if path.exists() {
        Ok(())
    } else {
        Err(StageError::Input(format!("{} not found; run `devforge {stage}` first", path.display())))
    }
}

pub fn print_imports(lang: Option<&str>, file: &Path) -> Result<(), StageError> {
    let content = fs::read_to_string(file).map_err(io_err(file))?;
    let language: LanguageId = match lang {
        Some(l) => l.parse()?,
        None => default_extractor()
            .detect_language(&file.to_string_lossy())
            .ok_or_else(|| StageError::Input(format!("cannot tell the language of {}; pass --lang", file.display())))?,
    };
    for name in default_extractor().extract_imports(&content, language)? {
        println!("{name}");
    }
    Ok(())
}

pub fn mine(layout: &Layout, cfg: &RunConfig, fixtures: Option<&Path>, resume: bool) -> Result<(), StageError> {
    let labels_path = match fixtures {
        Some(dir) => dir.join(DEVELOPERS),
        None => cfg
            .paths
            .developers
            .clone()
            .ok_or_else(|| ConfigError::MissingValue("paths.developers".into()))?,
    };
    let labels: Vec<DeveloperLabel> = jsonl::read(&labels_path)?;
    let mut jobs = Vec::with_capacity(labels.len());
    for l in &labels {
        let sources = [SourceKind::Repos, SourceKind::Issues, SourceKind::Apis];
        match AcquisitionJob::new(&l.developer_id, sources, cfg.miner.since.clone(), &layout.raw) {
            Ok(job) => jobs.push(job),
            Err(e) => log::warn!("skipping developer `{}`: {e}", l.developer_id),
        }
    }
    let source: Box<dyn EvidenceSource> = match fixtures {
        Some(dir) => Box::new(FixtureSource::open(dir)?.with_max_file_bytes(cfg.miner.max_file_bytes)),
        None => {
            let live = LiveConfig {
                requests_per_second: cfg.miner.requests_per_second,
                burst: cfg.miner.burst,
                max_file_bytes: cfg.miner.max_file_bytes,
                retry: RetryPolicy {
                    max_retries: cfg.miner.max_retries,
                    ..RetryPolicy::default()
                },
                ..LiveConfig::from_env()?
            };
            Box::new(GithubClient::new(UreqTransport::new(Duration::from_secs(60)), live))
        }
    };
    let stats = miner::mine(source.as_ref(), &jobs, &layout.raw, resume)?;
    write_lines(&layout.raw.join(DEVELOPERS), &labels)?;
    println!(
        "mine: {} developers, {} repos, {} issues, {} snapshots ({} invalid dropped, {} oversized skipped)",
        jobs.len(),
        stats.repos,
        stats.issues,
        stats.snapshots,
        stats.dropped_invalid,
        stats.skipped_oversized
    );
    Ok(())
}

pub fn ingest(layout: &Layout) -> Result<(), StageError> {
    let labels_path = layout.raw.join(DEVELOPERS);
    require(&labels_path, "mine")?;
    let labels: Vec<DeveloperLabel> = jsonl::read(&labels_path)?;
    let repos: Vec<RepoFacts> = jsonl::read_optional(&layout.raw.join(miner::REPOS_FILE))?;
    let issues: Vec<IssueFacts> = jsonl::read_optional(&layout.raw.join(miner::ISSUES_FILE))?;
    let snapshots: Vec<CommitSnapshot> = jsonl::read_optional(&layout.raw.join(miner::SNAPSHOTS_FILE))?;

    let repo_docs = build_repo_documents(&repos);
    let issue_docs = build_issue_documents(&issues);
    let api = build_api_multisets(&snapshots, default_extractor());
    let records = assemble_records(&labels, &repo_docs, &issue_docs, &api.counts);

    let developers: Vec<DeveloperLabel> = records
        .iter()
        .map(|r| DeveloperLabel {
            developer_id: r.developer_id.clone(),
            role: r.role,
        })
        .collect();
    let docs_repos: Vec<&TaggedDocument> = records.iter().filter_map(|r| r.doc_repos.as_ref()).collect();
    let docs_issues: Vec<&TaggedDocument> = records.iter().filter_map(|r| r.doc_issues.as_ref()).collect();
    let docs_apis: Vec<&TaggedDocument> = records
        .iter()
        .filter(|r| r.api_multiset.is_some())
        .filter_map(|r| api.sequences.get(&r.developer_id))
        .collect();
    let counts: Vec<ApiCounts> = records
        .iter()
        .filter_map(|r| {
            r.api_multiset.as_ref().map(|c| ApiCounts {
                developer_id: r.developer_id.clone(),
                counts: c.clone(),
            })
        })
        .collect();
    write_lines(&layout.corpus.join(DEVELOPERS), &developers)?;
    write_lines(&layout.corpus.join(DOCS_REPOS), &docs_repos)?;
    write_lines(&layout.corpus.join(DOCS_ISSUES), &docs_issues)?;
    write_lines(&layout.corpus.join(DOCS_APIS), &docs_apis)?;
    write_lines(&layout.corpus.join(API_COUNTS), &counts)?;
    println!(
        "ingest: {} developers with evidence ({} dropped), {} repo docs, {} issue docs, {} API multisets ({} snapshots unparsed)",
        records.len(),
        labels.len() - records.len(),
        docs_repos.len(),
        docs_issues.len(),
        counts.len(),
        api.skipped_snapshots
    );
    Ok(())
}

/// Everything `ingest` wrote.
struct Corpus {
    labels: Vec<DeveloperLabel>,
    repos: Vec<TaggedDocument>,
    issues: Vec<TaggedDocument>,
    apis: Vec<TaggedDocument>,
    api_counts: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Corpus {
    fn load(layout: &Layout) -> Result<Self, StageError> {
        let labels_path = layout.corpus.join(DEVELOPERS);
        require(&labels_path, "ingest")?;
        let counts: Vec<ApiCounts> = jsonl::read_optional(&layout.corpus.join(API_COUNTS))?;
        Ok(Corpus {
            labels: jsonl::read(&labels_path)?,
            repos: jsonl::read_optional(&layout.corpus.join(DOCS_REPOS))?,
            issues: jsonl::read_optional(&layout.corpus.join(DOCS_ISSUES))?,
            apis: jsonl::read_optional(&layout.corpus.join(DOCS_APIS))?,
            api_counts: counts.into_iter().map(|c| (c.developer_id, c.counts)).collect(),
        })
    }

    fn roles(&self) -> BTreeMap<String, RoleLabel> {
        self.labels
            .iter()
            .filter_map(|l| l.role.map(|r| (l.developer_id.clone(), r)))
            .collect()
    }

    fn split(&self, cfg: &RunConfig) -> Result<Split, StageError> {
        let labeled: Vec<(String, RoleLabel)> = self.roles().into_iter().collect();
        Ok(split(&labeled, &cfg.split)?)
    }
}

fn train_docs<'a>(docs: &'a [TaggedDocument], train: &HashSet<&str>) -> Vec<TaggedDocument> {
    docs.iter().filter(|d| train.contains(d.tag.as_str())).cloned().collect::<Vec<_>>()
}

pub fn train(layout: &Layout, cfg: &RunConfig) -> Result<(), StageError> {
    let corpus = Corpus::load(layout)?;
    let split = corpus.split(cfg)?;
    write_json(&layout.models.join("split.json"), &split)?;
    let train_ids: HashSet<&str> = split.train.iter().map(String::as_str).collect();
    for (source, docs, hyper) in [
        (VectorSource::Repos, &corpus.repos, &cfg.repos),
        (VectorSource::Issues, &corpus.issues, &cfg.issues),
        (VectorSource::Apis, &corpus.apis, &cfg.apis),
    ] {
        let docs = train_docs(docs, &train_ids);
        let model = EmbeddingModel::train(&docs, hyper)
            .map_err(|e| StageError::Input(format!("training the {source} model: {e}")))?;
        model.save(&layout.model_path(source))?;
        println!(
            "train: {source} d={} {} negative={} epochs={} window={} vocab={} docs={}",
            hyper.vector_size,
            hyper.algorithm,
            hyper.negative,
            hyper.epochs,
            hyper.window,
            model.vocab().len(),
            docs.len()
        );
    }
    println!(
        "train: split {}/{}/{} (train/val/test)",
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(())
}

fn load_model(layout: &Layout, source: VectorSource) -> Result<EmbeddingModel, StageError> {
    let path = layout.model_path(source);
    require(&path, "train")?;
    Ok(EmbeddingModel::load(&path)?)
}

pub fn embed(layout: &Layout, cfg: &RunConfig) -> Result<(), StageError> {
    let corpus = Corpus::load(layout)?;
    let mut skipped: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (source, docs) in [(VectorSource::Repos, &corpus.repos), (VectorSource::Issues, &corpus.issues)] {
        let model = load_model(layout, source)?;
        let mut vectors = Vec::with_capacity(docs.len());
        let mut unseen = Vec::new();
        for d in docs.iter() {
            match model.doc_vector(&d.tag) {
                Some(v) => vectors.push(ExpertiseVector::from_f32(&d.tag, source, v)?),
                None => unseen.push(d.clone()),
            }
        }
        let trained = vectors.len();
        let (inferred, missing) = infer_vectors(&model, &unseen, source, cfg.infer_epochs)?;
        vectors.extend(inferred);
        vectors.sort_by(|a, b| a.developer_id.cmp(&b.developer_id));
        write_lines(&layout.vectors.join(format!("{}.jsonl", file_stem(source))), &vectors)?;
        println!(
            "embed: {source} {} vectors ({trained} trained, {} inferred, {} without known tokens)",
            vectors.len(),
            vectors.len() - trained,
            missing.len()
        );
        skipped.insert(source.name(), missing);
    }
    let model = load_model(layout, VectorSource::Apis)?;
    let (vectors, missing) = embed_api_source(&model, &corpus.api_counts, cfg.api_weighting, cfg.api_direct_fetch)?;
    write_lines(&layout.vectors.join("apis.jsonl"), &vectors)?;
    println!(
        "embed: APIs {} vectors ({:?} average, {} without known imports)",
        vectors.len(),
        cfg.api_weighting,
        missing.len()
    );
    skipped.insert(VectorSource::Apis.name(), missing);
    write_json(&layout.vectors.join("skipped.json"), &skipped)
}

fn read_vectors(path: &Path) -> Result<BTreeMap<String, ExpertiseVector>, StageError> {
    let rows: Vec<ExpertiseVector> = jsonl::read(path)?;
    let mut out = BTreeMap::new();
    for v in rows {
        v.validate()?;
        out.insert(v.developer_id.clone(), v);
    }
    Ok(out)
}

pub fn concat(layout: &Layout) -> Result<(), StageError> {
    let mut parts = Vec::new();
    for source in [VectorSource::Repos, VectorSource::Issues, VectorSource::Apis] {
        let path = layout.vectors.join(format!("{}.jsonl", file_stem(source)));
        require(&path, "embed")?;
        parts.push(read_vectors(&path)?);
    }
    let ids: std::collections::BTreeSet<&String> = parts.iter().flat_map(|m| m.keys()).collect();
    let mut out = Vec::new();
    let mut incomplete = 0;
    for id in ids {
        match concat_rias(id, parts[0].get(id), parts[1].get(id), parts[2].get(id)) {
            Ok(v) => out.push(v),
            Err(PipelineError::MissingSource { .. }) => incomplete += 1,
            Err(e) => return Err(e.into()),
        }
    }
    write_lines(&layout.vectors.join("rias.jsonl"), &out)?;
    println!(
        "concat: {} RIAs vectors of dim {} ({incomplete} developers lack a source)",
        out.len(),
        out.first().map_or(0, |v| v.dim)
    );
    Ok(())
}

pub fn pca(layout: &Layout, cfg: &RunConfig) -> Result<(), StageError> {
    let corpus = Corpus::load(layout)?;
    let split = corpus.split(cfg)?;
    let path = layout.vectors.join("rias.jsonl");
    require(&path, "concat")?;
    let rias = read_vectors(&path)?;
    let train: Vec<Vec<f64>> = split
        .train
        .iter()
        .filter_map(|id| rias.get(id))
        .map(|v| v.values.clone())
        .collect();
    let d = train.first().map_or(0, Vec::len);
    for &k in &cfg.pca_dims {
        if k > d {
            log::warn!("pca: skipping k={k}, above the input dimension {d}");
            continue;
        }
        let model = pca_fit(&train, k)?;
        model.save(&layout.pca_model_path(k))?;
        let reduced = rias
            .values()
            .map(|v| ExpertiseVector::new(&v.developer_id, VectorSource::RiasPca, model.transform(&v.values)?))
            .collect::<Result<Vec<_>, _>>()?;
        write_lines(&layout.vectors.join(format!("rias_pca_{k}.jsonl")), &reduced)?;
        let total: f64 = model.explained_variance.iter().sum();
        println!(
            "pca: k={k} fitted on {} train vectors, variance kept {total:.4}{}",
            train.len(),
            if model.is_rank_deficient() { " (rank deficient)" } else { "" }
        );
    }
    Ok(())
}

/// Test-set predictions of one classifier on one feature set.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub variant: String,
    pub source: Option<VectorSource>,
    pub dim: usize,
    pub train_size: usize,
    pub test_ids: Vec<String>,
    pub y_true: Vec<RoleLabel>,
    pub y_pred: Vec<RoleLabel>,
    /// Test developers without a vector in this set.
    pub test_missing: usize,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    variant: &'a str,
    developer_id: &'a str,
    truth: RoleLabel,
    predicted: RoleLabel,
}

fn vector_variants(layout: &Layout, cfg: &RunConfig) -> Vec<(String, VectorSource, PathBuf)> {
    let mut out: Vec<(String, VectorSource, PathBuf)> =
        [VectorSource::Repos, VectorSource::Issues, VectorSource::Apis, VectorSource::Rias]
            .into_iter()
            .map(|s| (s.name().to_string(), s, layout.vectors.join(format!("{}.jsonl", file_stem(s)))))
            .collect();
    for &k in &cfg.pca_dims {
        out.push((
            format!("RIAsPca{k}"),
            VectorSource::RiasPca,
            layout.vectors.join(format!("rias_pca_{k}.jsonl")),
        ));
    }
    out.retain(|(_, _, p)| p.exists());
    out
}

pub fn classify(layout: &Layout, cfg: &RunConfig) -> Result<Vec<Outcome>, StageError> {
    let corpus = Corpus::load(layout)?;
    let split = corpus.split(cfg)?;
    let roles = corpus.roles();
    let labels_of = |ids: &[String]| ids.iter().map(|id| roles[id]).collect::<Vec<_>>();
    let mut outcomes = Vec::new();

    let train_y = labels_of(&split.train);
    let test_y = labels_of(&split.test);
    let majority = majority_baseline(&train_y)?;
    outcomes.push(Outcome {
        variant: "Baseline".into(),
        source: None,
        dim: 0,
        train_size: split.train.len(),
        test_ids: split.test.clone(),
        y_pred: vec![majority.label; test_y.len()],
        y_true: test_y.clone(),
        test_missing: 0,
    });

    // Bag of words over repository tokens and imported API names.
    let repo_tokens: BTreeMap<&str, &Vec<String>> = corpus.repos.iter().map(|d| (d.tag.as_str(), &d.tokens)).collect();
    let api_tokens: BTreeMap<&str, &Vec<String>> = corpus.apis.iter().map(|d| (d.tag.as_str(), &d.tokens)).collect();
    let bow = |id: &String| -> Vec<String> {
        let mut t: Vec<String> = repo_tokens.get(id.as_str()).map(|v| v.to_vec()).unwrap_or_default();
        t.extend(api_tokens.get(id.as_str()).map(|v| v.to_vec()).unwrap_or_default());
        t
    };
    let train_docs: Vec<Vec<String>> = split.train.iter().map(bow).collect();
    let test_docs: Vec<Vec<String>> = split.test.iter().map(bow).collect();
    let (tr_x, te_x) = tfidf_vectorize(&train_docs, &test_docs, cfg.tfidf_top_k)?;
    let model = cfg.classifier.clone();
    let fitted = ClassifierTrainer::fit(&model, &tr_x, &train_y)?;
    outcomes.push(Outcome {
        variant: "BoW".into(),
        source: None,
        dim: tr_x.first().map_or(0, Vec::len),
        train_size: tr_x.len(),
        test_ids: split.test.clone(),
        y_pred: fitted.predict_all(&te_x)?,
        y_true: test_y.clone(),
        test_missing: 0,
    });

    for (name, source, path) in vector_variants(layout, cfg) {
        let vectors = read_vectors(&path)?;
        let pick = |ids: &[String]| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            let mut kept = Vec::new();
            for id in ids {
                if let Some(v) = vectors.get(id) {
                    x.push(v.values.clone());
                    y.push(roles[id]);
                    kept.push(id.clone());
                }
            }
            (x, y, kept)
        };
        let (tr_x, tr_y, _) = pick(&split.train);
        let (te_x, te_y, te_ids) = pick(&split.test);
        if te_x.is_empty() || present_classes(&tr_y, &[]).len() < 2 {
            log::warn!("classify: {name} has too few labeled vectors; skipped");
            continue;
        }
        let fitted = ClassifierTrainer::fit(&cfg.classifier, &tr_x, &tr_y)?;
        outcomes.push(Outcome {
            variant: name,
            source: Some(source),
            dim: tr_x[0].len(),
            train_size: tr_x.len(),
            test_missing: split.test.len() - te_ids.len(),
            test_ids: te_ids,
            y_pred: fitted.predict_all(&te_x)?,
            y_true: te_y,
        });
    }

    let rows: Vec<PredictionRow> = outcomes
        .iter()
        .flat_map(|o| {
            o.test_ids.iter().zip(o.y_true.iter().zip(&o.y_pred)).map(|(id, (&t, &p))| PredictionRow {
                variant: &o.variant,
                developer_id: id,
                truth: t,
                predicted: p,
            })
        })
        .collect();
    write_lines(&layout.reports.join("predictions.jsonl"), &rows)?;
    println!(
        "classify: {} variants, {} test developers, predictions written",
        outcomes.len(),
        split.test.len()
    );
    Ok(outcomes)
}

#[derive(Serialize)]
struct VariantReport<'a> {
    variant: &'a str,
    source: Option<VectorSource>,
    dim: usize,
    train_size: usize,
    test_size: usize,
    test_without_vector: usize,
    report: EvalReport,
}

pub fn evaluate(layout: &Layout, cfg: &RunConfig) -> Result<(), StageError> {
    let outcomes = classify(layout, cfg)?;
    let corpus = Corpus::load(layout)?;
    let split = corpus.split(cfg)?;
    let all_roles: Vec<RoleLabel> = corpus.roles().into_values().collect();
    let classes = present_classes(&all_roles, &[]);
    let mut variants = Vec::new();
    for o in &outcomes {
        let report = macro_weighted_metrics(&o.y_true, &o.y_pred, &classes)?;
        let p = report.macro_weighted_percent;
        println!(
            "evaluate: {:<12} P={:6.2} R={:6.2} F1={:6.2} (n={})",
            o.variant, p.precision, p.recall, p.f1, report.n
        );
        variants.push(VariantReport {
            variant: &o.variant,
            source: o.source,
            dim: o.dim,
            train_size: o.train_size,
            test_size: o.y_true.len(),
            test_without_vector: o.test_missing,
            report,
        });
    }
    write_json(
        &layout.reports.join("report.json"),
        &json!({
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.seed,
            "classifier": cfg.classifier,
            "split": {
                "train": split.train.len(),
                "val": split.val.len(),
                "test": split.test.len(),
            },
            "variants": variants,
        }),
    )?;
    println!("evaluate: report written to {}", layout.reports.join("report.json").display());
    Ok(())
}

pub fn analyze(layout: &Layout) -> Result<(), StageError> {
    let corpus = Corpus::load(layout)?;
    let roles = corpus.roles();
    let mut files = Vec::new();
    for source in [VectorSource::Repos, VectorSource::Issues, VectorSource::Apis, VectorSource::Rias] {
        let path = layout.vectors.join(format!("{}.jsonl", file_stem(source)));
        if path.exists() {
            files.push((source.name().to_string(), path));
        }
    }
    let mut summary = BTreeMap::new();
    for (name, path) in files {
        let vectors = read_vectors(&path)?;
        let mut groups: BTreeMap<RoleLabel, Vec<Vec<f64>>> = BTreeMap::new();
        for (id, v) in &vectors {
            if let Some(&r) = roles.get(id) {
                groups.entry(r).or_default().push(v.values.clone());
            }
        }
        if groups.is_empty() {
            continue;
        }
        let groups: Vec<(RoleLabel, Vec<Vec<f64>>)> = groups.into_iter().collect();
        let matrix = inter_intra_matrix(&groups)?;
        let csv = layout.reports.join(format!("matrix_{}.csv", name.to_ascii_lowercase()));
        ensure_dir(&layout.reports)?;
        fs::write(&csv, matrix.to_csv()).map_err(io_err(&csv))?;
        let dominant = matrix
            .values
            .iter()
            .enumerate()
            .filter(|(r, row)| row.iter().enumerate().all(|(c, &v)| c == *r || v < row[*r]))
            .count();
        println!(
            "analyze: {name} diagonal dominant in {dominant}/{} roles ({})",
            matrix.roles.len(),
            csv.display()
        );
        summary.insert(name, matrix);
    }
    write_json(&layout.reports.join("inter_intra.json"), &summary)
}
