//! Acquisition of raw GitHub evidence into `repos.jsonl`, `issues.jsonl`
//! and `snapshots.jsonl`.
//!
//! Two sources implement [`EvidenceSource`]: [`GithubClient`] talks to the
//! REST API through a [`Transport`], and [`FixtureSource`] replays records
//! from a directory so whole runs can happen offline.

mod github;
mod ratelimit;
mod transport;
mod types;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use github::{dedup_issues, GithubClient, LiveConfig, RetryPolicy, DEFAULT_BASE_URL, TOKEN_ENV};
pub use ratelimit::{Clock, ManualClock, SystemClock, TokenBucket};
pub use transport::{HttpResponse, RecordedExchange, ReplayTransport, Transport, UreqTransport};
pub use types::{
    AcquisitionJob, CommitSnapshot, InvalidRecord, IssueFacts, IssueRelation, RepoFacts, SourceKind,
};

use crate::imports;
use crate::jsonl::{self, JsonlError};

pub const DEFAULT_MAX_FILE_BYTES: usize = 1 << 20;

pub const REPOS_FILE: &str = "repos.jsonl";
pub const ISSUES_FILE: &str = "issues.jsonl";
pub const SNAPSHOTS_FILE: &str = "snapshots.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, thiserror::Error)]
pub enum MinerError {
    #[error("authentication failed ({status}) for {url}")]
    Auth { status: u16, url: String },
    #[error("rate limited on {url}")]
    RateLimited { url: String, retry_after: Option<u64> },
    #[error("not found: {url}")]
    NotFound { url: String },
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cannot decode response from {url}: {message}")]
    Decode { url: String, message: String },
    #[error("no GitHub token: set {}", github::TOKEN_ENV)]
    MissingToken,
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("acquisition aborted, resume from {}: {source}", checkpoint.display())]
    Aborted {
        checkpoint: PathBuf,
        #[source]
        source: Box<MinerError>,
    },
}

/// Counters reported at the end of a mining session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineStats {
    pub repos: usize,
    pub issues: usize,
    pub snapshots: usize,
    pub dropped_invalid: usize,
    pub skipped_oversized: usize,
    pub missing_developers: usize,
}

pub trait EvidenceSource {
    fn max_file_bytes(&self) -> usize;
    fn fetch_repos(&self, job: &AcquisitionJob, stats: &mut MineStats) -> Result<Vec<RepoFacts>, MinerError>;
    fn fetch_issues(&self, job: &AcquisitionJob, stats: &mut MineStats) -> Result<Vec<IssueFacts>, MinerError>;
    fn fetch_commit_snapshots(
        &self,
        job: &AcquisitionJob,
        stats: &mut MineStats,
    ) -> Result<Vec<CommitSnapshot>, MinerError>;
}

/// A file touched by a fixture commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    pub path: String,
    pub content: String,
}

/// One line of a fixture `commits.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureCommit {
    pub developer_id: String,
    pub commit_sha: String,
    pub files: Vec<FixtureFile>,
}

/// Offline source backed by `repos.jsonl`, `issues.jsonl` and
/// `commits.jsonl` in a directory. Missing files mean no evidence.
pub struct FixtureSource {
    repos: Vec<RepoFacts>,
    issues: Vec<IssueFacts>,
    commits: Vec<FixtureCommit>,
    max_file_bytes: usize,
}

impl FixtureSource {
    pub fn open(dir: &Path) -> Result<Self, MinerError> {
        Ok(FixtureSource {
            repos: jsonl::read_optional(&dir.join(REPOS_FILE))?,
            issues: jsonl::read_optional(&dir.join(ISSUES_FILE))?,
            commits: jsonl::read_optional(&dir.join("commits.jsonl"))?,
            max_file_bytes: DEFAULT_MAX_FILE_BYTES,
        })
    }

    pub fn with_max_file_bytes(mut self, cap: usize) -> Self {
        self.max_file_bytes = cap;
        self
    }
}

impl EvidenceSource for FixtureSource {
    fn max_file_bytes(&self) -> usize {
        self.max_file_bytes
    }

    fn fetch_repos(&self, job: &AcquisitionJob, _: &mut MineStats) -> Result<Vec<RepoFacts>, MinerError> {
        Ok(self
            .repos
            .iter()
            .filter(|r| r.developer_id == job.developer_login())
            .cloned()
            .collect())
    }

    fn fetch_issues(&self, job: &AcquisitionJob, _: &mut MineStats) -> Result<Vec<IssueFacts>, MinerError> {
        Ok(dedup_issues(
            self.issues
                .iter()
                .filter(|i| i.developer_id == job.developer_login())
                .cloned()
                .collect(),
        ))
    }

    fn fetch_commit_snapshots(
        &self,
        job: &AcquisitionJob,
        stats: &mut MineStats,
    ) -> Result<Vec<CommitSnapshot>, MinerError> {
        let mut out = Vec::new();
        for commit in self.commits.iter().filter(|c| c.developer_id == job.developer_login()) {
            for file in &commit.files {
                let Some(language) = imports::detect_language(&file.path) else {
                    continue;
                };
                if file.content.len() > self.max_file_bytes {
                    log::warn!("skipping oversized {} ({} bytes)", file.path, file.content.len());
                    stats.skipped_oversized += 1;
                    continue;
                }
                out.push(CommitSnapshot {
                    developer_id: commit.developer_id.clone(),
                    commit_sha: commit.commit_sha.clone(),
                    file_path: file.path.clone(),
                    language,
                    content: file.content.clone(),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Logins whose every requested source has been written.
    pub completed: Vec<String>,
    pub failed_login: Option<String>,
    pub error: Option<String>,
}

impl Checkpoint {
    pub fn load(dir: &Path) -> Option<Checkpoint> {
        let text = std::fs::read_to_string(dir.join(CHECKPOINT_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&self, dir: &Path) -> Result<PathBuf, MinerError> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        std::fs::write(&path, text).map_err(|source| JsonlError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// Runs every job against `source`, writing the three JSONL files into
/// `out_dir` through one writer each.
///
/// Records failing their invariants are dropped and counted. An unknown
/// developer yields no records and a warning. Any other error stops the
/// session and leaves a checkpoint; calling again with `resume` skips the
/// developers already completed and appends to the existing files.
pub fn mine(
    source: &dyn EvidenceSource,
    jobs: &[AcquisitionJob],
    out_dir: &Path,
    resume: bool,
) -> Result<MineStats, MinerError> {
    std::fs::create_dir_all(out_dir).map_err(|source| JsonlError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut checkpoint = if resume {
        Checkpoint::load(out_dir).unwrap_or_default()
    } else {
        Checkpoint::default()
    };
    let open = |name: &str| {
        let path = out_dir.join(name);
        if resume && path.exists() {
            jsonl::Writer::append(&path)
        } else {
            jsonl::Writer::create(&path)
        }
    };
    let mut repos_out = open(REPOS_FILE)?;
    let mut issues_out = open(ISSUES_FILE)?;
    let mut snaps_out = open(SNAPSHOTS_FILE)?;
    let mut stats = MineStats::default();

    for job in jobs {
        let login = job.developer_login();
        if checkpoint.completed.iter().any(|c| c == login) {
            continue;
        }
        match mine_one(source, job, &mut stats) {
            Ok(Some(batch)) => {
                for r in &batch.repos {
                    repos_out.push(r)?;
                }
                for i in &batch.issues {
                    issues_out.push(i)?;
                }
                for s in &batch.snapshots {
                    snaps_out.push(s)?;
                }
                stats.repos += batch.repos.len();
                stats.issues += batch.issues.len();
                stats.snapshots += batch.snapshots.len();
            }
            Ok(None) => {
                log::warn!("developer `{login}` not found; no evidence collected");
                stats.missing_developers += 1;
            }
            Err(err) => {
                repos_out.finish()?;
                issues_out.finish()?;
                snaps_out.finish()?;
                checkpoint.failed_login = Some(login.to_string());
                checkpoint.error = Some(err.to_string());
                let path = checkpoint.save(out_dir)?;
                return Err(MinerError::Aborted {
                    checkpoint: path,
                    source: Box::new(err),
                });
            }
        }
        checkpoint.completed.push(login.to_string());
    }
    repos_out.finish()?;
    issues_out.finish()?;
    snaps_out.finish()?;
    let stale = out_dir.join(CHECKPOINT_FILE);
    if stale.exists() {
        let _ = std::fs::remove_file(stale);
    }
    if stats.dropped_invalid > 0 {
        log::warn!("{} invalid record(s) dropped", stats.dropped_invalid);
    }
    Ok(stats)
}

struct Batch {
    repos: Vec<RepoFacts>,
    issues: Vec<IssueFacts>,
    snapshots: Vec<CommitSnapshot>,
}

/// `Ok(None)` when the developer does not exist upstream.
fn mine_one(
    source: &dyn EvidenceSource,
    job: &AcquisitionJob,
    stats: &mut MineStats,
) -> Result<Option<Batch>, MinerError> {
    let mut batch = Batch {
        repos: Vec::new(),
        issues: Vec::new(),
        snapshots: Vec::new(),
    };
    let result = (|| {
        if job.wants(SourceKind::Repos) {
            batch.repos = keep_valid(source.fetch_repos(job, stats)?, RepoFacts::validate, stats);
        }
        if job.wants(SourceKind::Issues) {
            batch.issues = keep_valid(source.fetch_issues(job, stats)?, IssueFacts::validate, stats);
        }
        if job.wants(SourceKind::Apis) {
            batch.snapshots = keep_valid(
                source.fetch_commit_snapshots(job, stats)?,
                CommitSnapshot::validate,
                stats,
            );
        }
        Ok::<(), MinerError>(())
    })();
    match result {
        Ok(()) => Ok(Some(batch)),
        Err(MinerError::NotFound { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn keep_valid<T>(
    records: Vec<T>,
    validate: impl Fn(&T) -> Result<(), InvalidRecord>,
    stats: &mut MineStats,
) -> Vec<T> {
    records
        .into_iter()
        .filter(|r| match validate(r) {
            Ok(()) => true,
            Err(e) => {
                log::warn!("dropping invalid record: {e}");
                stats.dropped_invalid += 1;
                false
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, lines: &[&str]) {
        std::fs::write(dir.join(name), lines.join("\n") + "\n").unwrap();
    }

    fn job(login: &str) -> AcquisitionJob {
        AcquisitionJob::new(
            login,
            [SourceKind::Repos, SourceKind::Issues, SourceKind::Apis],
            None,
            "unused",
        )
        .unwrap()
    }

    #[test]
    fn fixture_snapshot_rules() {
        let dir = tempfile::tempdir().unwrap();
        let sha = "a".repeat(40);
        let other = "b".repeat(40);
        write(
            dir.path(),
            "commits.jsonl",
            &[
                &format!(r#"{{"developer_id":"d","commit_sha":"{sha}","files":[{{"path":"a.py","content":"import x"}},{{"path":"b.md","content":"doc"}}]}}"#),
                &format!(r#"{{"developer_id":"d","commit_sha":"{other}","files":[{{"path":"notes.txt","content":"x"}}]}}"#),
            ],
        );
        let src = FixtureSource::open(dir.path()).unwrap();
        let snaps = src.fetch_commit_snapshots(&job("d"), &mut MineStats::default()).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].file_path, "a.py");
        assert_eq!(snaps[0].content, "import x");
    }

    #[test]
    fn oversized_files_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let sha = "a".repeat(40);
        write(
            dir.path(),
            "commits.jsonl",
            &[&format!(r#"{{"developer_id":"d","commit_sha":"{sha}","files":[{{"path":"a.py","content":"import xyz"}}]}}"#)],
        );
        let src = FixtureSource::open(dir.path()).unwrap().with_max_file_bytes(4);
        let mut stats = MineStats::default();
        assert!(src.fetch_commit_snapshots(&job("d"), &mut stats).unwrap().is_empty());
        assert_eq!(stats.skipped_oversized, 1);
    }

    #[test]
    fn invalid_records_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            REPOS_FILE,
            &[
                r#"{"developer_id":"d","repo_full_name":"d/ok","name":"ok","tags":[],"topic":"","readme":"","forked_from":null}"#,
                r#"{"developer_id":"d","repo_full_name":"broken","name":"x","tags":[],"topic":"","readme":"","forked_from":null}"#,
            ],
        );
        let out = tempfile::tempdir().unwrap();
        let src = FixtureSource::open(dir.path()).unwrap();
        let stats = mine(&src, &[job("d")], out.path(), false).unwrap();
        assert_eq!(stats.repos, 1);
        assert_eq!(stats.dropped_invalid, 1);
    }
}
