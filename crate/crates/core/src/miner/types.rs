use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::imports::{self, LanguageId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Repos,
    Issues,
    Apis,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidRecord {
    #[error("developer login is empty or contains whitespace")]
    BadLogin,
    #[error("acquisition job names no sources")]
    NoSources,
    #[error("repository name is empty")]
    EmptyRepoName,
    #[error("`{0}` is not an owner/name repository path")]
    BadFullName(String),
    #[error("issue id is empty")]
    EmptyIssueId,
    #[error("`{0}` is not a 40-character lowercase hex sha")]
    BadSha(String),
    #[error("language {declared} does not match path `{path}`")]
    LanguageMismatch { path: String, declared: LanguageId },
}

fn valid_login(login: &str) -> bool {
    !login.is_empty() && !login.chars().any(char::is_whitespace)
}

/// What to fetch for one developer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcquisitionJob {
    developer_login: String,
    sources: BTreeSet<SourceKind>,
    since: Option<String>,
    output_dir: PathBuf,
}

impl AcquisitionJob {
    pub fn new(
        developer_login: impl Into<String>,
        sources: impl IntoIterator<Item = SourceKind>,
        since: Option<String>,
        output_dir: impl Into<PathBuf>,
    ) -> Result<Self, InvalidRecord> {
        let developer_login = developer_login.into();
        if !valid_login(&developer_login) {
            return Err(InvalidRecord::BadLogin);
        }
        let sources: BTreeSet<_> = sources.into_iter().collect();
        if sources.is_empty() {
            return Err(InvalidRecord::NoSources);
        }
        Ok(AcquisitionJob {
            developer_login,
            sources,
            since,
            output_dir: output_dir.into(),
        })
    }

    pub fn developer_login(&self) -> &str {
        &self.developer_login
    }

    pub fn sources(&self) -> &BTreeSet<SourceKind> {
        &self.sources
    }

    pub fn since(&self) -> Option<&str> {
        self.since.as_deref()
    }

    pub fn output_dir(&self) -> &std::path::Path {
        &self.output_dir
    }

    pub fn wants(&self, kind: SourceKind) -> bool {
        self.sources.contains(&kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoFacts {
    pub developer_id: String,
    pub repo_full_name: String,
    pub name: String,
    pub tags: Vec<String>,
    pub topic: String,
    pub readme: String,
    pub forked_from: Option<String>,
}

impl RepoFacts {
    pub fn validate(&self) -> Result<(), InvalidRecord> {
        if !valid_login(&self.developer_id) {
            return Err(InvalidRecord::BadLogin);
        }
        if self.name.is_empty() {
            return Err(InvalidRecord::EmptyRepoName);
        }
        if !is_full_name(&self.repo_full_name) {
            return Err(InvalidRecord::BadFullName(self.repo_full_name.clone()));
        }
        if let Some(parent) = &self.forked_from {
            if !is_full_name(parent) {
                return Err(InvalidRecord::BadFullName(parent.clone()));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_full_name(s: &str) -> bool {
    let mut parts = s.split('/');
    matches!(
        (parts.next(), parts.next(), parts.next()),
        (Some(owner), Some(name), None)
            if !owner.is_empty() && !name.is_empty()
                && !s.chars().any(char::is_whitespace)
    )
}

/// How a developer is involved with an issue, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueRelation {
    Participated,
    Created,
    Assigned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueFacts {
    pub developer_id: String,
    pub issue_id: String,
    pub title: String,
    pub body: String,
    pub relation: IssueRelation,
}

impl IssueFacts {
    pub fn validate(&self) -> Result<(), InvalidRecord> {
        if !valid_login(&self.developer_id) {
            return Err(InvalidRecord::BadLogin);
        }
        if self.issue_id.is_empty() {
            return Err(InvalidRecord::EmptyIssueId);
        }
        Ok(())
    }
}

/// A source file as it stood right after one commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitSnapshot {
    pub developer_id: String,
    pub commit_sha: String,
    pub file_path: String,
    pub language: LanguageId,
    pub content: String,
}

impl CommitSnapshot {
    pub fn validate(&self) -> Result<(), InvalidRecord> {
        if !valid_login(&self.developer_id) {
            return Err(InvalidRecord::BadLogin);
        }
        if !is_sha(&self.commit_sha) {
            return Err(InvalidRecord::BadSha(self.commit_sha.clone()));
        }
        if imports::detect_language(&self.file_path) != Some(self.language) {
            return Err(InvalidRecord::LanguageMismatch {
                path: self.file_path.clone(),
                declared: self.language,
            });
        }
        Ok(())
    }
}

pub(crate) fn is_sha(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
