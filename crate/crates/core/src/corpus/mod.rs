//! Per-developer documents built from mined evidence.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::imports::ImportExtractor;
use crate::miner::{CommitSnapshot, IssueFacts, RepoFacts};

const STOPWORDS: &str = include_str!("stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoleLabel {
    Backend,
    Frontend,
    Mobile,
    DevOps,
    DataScientist,
}

impl RoleLabel {
    pub const ALL: [RoleLabel; 5] = [
        RoleLabel::Backend,
        RoleLabel::Frontend,
        RoleLabel::Mobile,
        RoleLabel::DevOps,
        RoleLabel::DataScientist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoleLabel::Backend => "Backend",
            RoleLabel::Frontend => "Frontend",
            RoleLabel::Mobile => "Mobile",
            RoleLabel::DevOps => "DevOps",
            RoleLabel::DataScientist => "DataScientist",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for RoleLabel {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        RoleLabel::ALL
            .into_iter()
            .find(|r| r.name().to_ascii_lowercase() == squashed)
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

/// A token sequence tagged with the developer it describes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedDocument {
    pub tag: String,
    pub tokens: Vec<String>,
}

impl TaggedDocument {
    pub fn new(tag: impl Into<String>, tokens: Vec<String>) -> Self {
        TaggedDocument {
            tag: tag.into(),
            tokens,
        }
    }
}

/// One line of `developers.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeveloperLabel {
    pub developer_id: String,
    pub role: Option<RoleLabel>,
}

/// One line of `api_counts.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiCounts {
    pub developer_id: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeveloperRecord {
    pub developer_id: String,
    pub role: Option<RoleLabel>,
    pub doc_repos: Option<TaggedDocument>,
    pub doc_issues: Option<TaggedDocument>,
    pub api_multiset: Option<BTreeMap<String, u64>>,
}

impl DeveloperRecord {
    pub fn has_evidence(&self) -> bool {
        self.doc_repos.is_some() || self.doc_issues.is_some() || self.api_multiset.is_some()
    }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

pub fn stopword_count() -> usize {
    stopwords().len()
}

fn is_token_char(c: char) -> bool {
    matches!(c, 'a'..='z' | '0'..='9' | '+' | '#' | '.' | '-' | '_')
}

/// Lowercases, splits on anything outside `[a-z0-9+#._-]`, trims edge
/// punctuation and drops letterless tokens and stopwords.
///
/// A trailing `+` or `#` survives so `c++` and `c#` stay intact; leading ones
/// are stripped (`#ethereum` becomes `ethereum`).
pub fn clean_tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !is_token_char(c))
        .filter_map(|raw| {
            let token = raw
                .trim_start_matches(['.', '-', '_', '+', '#'])
                .trim_end_matches(['.', '-', '_']);
            if token.is_empty()
                || !token.bytes().any(|b| b.is_ascii_lowercase())
                || is_stopword(token)
            {
                None
            } else {
                Some(token.to_string())
            }
        })
        .collect()
}

/// Repository text per developer: name, tags, topic then readme of every
/// repository, in stream order.
pub fn build_repo_documents<'a, I>(repos: I) -> BTreeMap<String, TaggedDocument>
where
    I: IntoIterator<Item = &'a RepoFacts>,
{
    let mut docs: BTreeMap<String, TaggedDocument> = BTreeMap::new();
    for repo in repos {
        let doc = docs
            .entry(repo.developer_id.clone())
            .or_insert_with(|| TaggedDocument::new(repo.developer_id.clone(), Vec::new()));
        doc.tokens.extend(clean_tokenize(&repo.name));
        for tag in &repo.tags {
            doc.tokens.extend(clean_tokenize(tag));
        }
        doc.tokens.extend(clean_tokenize(&repo.topic));
        doc.tokens.extend(clean_tokenize(&repo.readme));
    }
    docs
}

/// Issue text per developer, title tokens before body tokens.
pub fn build_issue_documents<'a, I>(issues: I) -> BTreeMap<String, TaggedDocument>
where
    I: IntoIterator<Item = &'a IssueFacts>,
{
    let mut docs: BTreeMap<String, TaggedDocument> = BTreeMap::new();
    for issue in issues {
        let doc = docs
            .entry(issue.developer_id.clone())
            .or_insert_with(|| TaggedDocument::new(issue.developer_id.clone(), Vec::new()));
        doc.tokens.extend(clean_tokenize(&issue.title));
        doc.tokens.extend(clean_tokenize(&issue.body));
    }
    docs
}

/// Imports gathered per developer across all of their commit snapshots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApiEvidence {
    /// Import name to occurrence count, repetition preserved.
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// The same imports as a token sequence in stream order, used as the
    /// training document for the API embedding model.
    pub sequences: BTreeMap<String, TaggedDocument>,
    pub skipped_snapshots: usize,
}

/// Import names are lowercased so they can serve as document tokens.
pub fn build_api_multisets<'a, I>(snapshots: I, extractor: &ImportExtractor) -> ApiEvidence
where
    I: IntoIterator<Item = &'a CommitSnapshot>,
{
    let mut evidence = ApiEvidence::default();
    for snap in snapshots {
        let names = match extractor.extract_imports(&snap.content, snap.language) {
            Ok(names) => names,
            Err(err) => {
                log::warn!(
                    "skipping {}@{} ({}): {err}",
                    snap.file_path,
                    &snap.commit_sha[..snap.commit_sha.len().min(8)],
                    snap.developer_id
                );
                evidence.skipped_snapshots += 1;
                continue;
            }
        };
        if names.is_empty() {
            continue;
        }
        let counts = evidence.counts.entry(snap.developer_id.clone()).or_default();
        let seq = evidence
            .sequences
            .entry(snap.developer_id.clone())
            .or_insert_with(|| TaggedDocument::new(snap.developer_id.clone(), Vec::new()));
        for name in names {
            let name = name.to_lowercase();
            *counts.entry(name.clone()).or_insert(0) += 1;
            seq.tokens.push(name);
        }
    }
    if evidence.skipped_snapshots > 0 {
        log::warn!("{} snapshot(s) skipped during import extraction", evidence.skipped_snapshots);
    }
    evidence
}

/// Joins labels and per-source evidence into developer records. Developers
/// without any evidence are dropped.
pub fn assemble_records(
    labels: &[DeveloperLabel],
    repos: &BTreeMap<String, TaggedDocument>,
    issues: &BTreeMap<String, TaggedDocument>,
    apis: &BTreeMap<String, BTreeMap<String, u64>>,
) -> Vec<DeveloperRecord> {
    labels
        .iter()
        .map(|l| DeveloperRecord {
            developer_id: l.developer_id.clone(),
            role: l.role,
            doc_repos: repos.get(&l.developer_id).filter(|d| !d.tokens.is_empty()).cloned(),
            doc_issues: issues.get(&l.developer_id).filter(|d| !d.tokens.is_empty()).cloned(),
            api_multiset: apis.get(&l.developer_id).filter(|c| !c.is_empty()).cloned(),
        })
        .filter(DeveloperRecord::has_evidence)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imports::{default_extractor, LanguageId};
    use crate::miner::IssueRelation;
    use proptest::prelude::*;

    fn repo(dev: &str, name: &str) -> RepoFacts {
        RepoFacts {
            developer_id: dev.into(),
            repo_full_name: format!("{dev}/{name}"),
            name: name.into(),
            tags: vec![],
            topic: String::new(),
            readme: String::new(),
            forked_from: None,
        }
    }

    fn issue(dev: &str, title: &str, body: &str) -> IssueFacts {
        IssueFacts {
            developer_id: dev.into(),
            issue_id: format!("o/r#{title}"),
            title: title.into(),
            body: body.into(),
            relation: IssueRelation::Created,
        }
    }

    fn snap(dev: &str, path: &str, content: &str) -> CommitSnapshot {
        CommitSnapshot {
            developer_id: dev.into(),
            commit_sha: "0".repeat(40),
            file_path: path.into(),
            language: crate::imports::detect_language(path).unwrap(),
            content: content.into(),
        }
    }

    #[test]
    fn stopword_list_size() {
        assert_eq!(stopword_count(), 179);
    }

    #[test]
    fn tokenize_examples() {
        assert!(clean_tokenize("").is_empty());
        assert_eq!(clean_tokenize("eth-tester-rpc"), vec!["eth-tester-rpc"]);
        assert_eq!(clean_tokenize("The Ethereum 2.0 Tester!"), vec!["ethereum", "tester"]);
        assert_eq!(
            clean_tokenize("Built with C++, C# and Node.js."),
            vec!["built", "c++", "c#", "node.js"]
        );
        assert_eq!(clean_tokenize("#ethereum #python"), vec!["ethereum", "python"]);
        assert_eq!(clean_tokenize("v1.2 -- 2021 ...md"), vec!["v1.2", "md"]);
        assert_eq!(clean_tokenize("café"), vec!["caf"]);
    }

    #[test]
    fn repo_documents() {
        let repos = vec![repo("d", "alpha"), repo("d", "beta")];
        let docs = build_repo_documents(&repos);
        assert_eq!(docs["d"].tokens, vec!["alpha", "beta"]);
        assert_eq!(docs["d"].tag, "d");

        let mut tagged = repo("e", "x");
        tagged.tags = vec!["ethereum".into(), "python".into(), "crypto".into()];
        let docs = build_repo_documents([&tagged]);
        assert_eq!(docs["e"].tokens, vec!["x", "ethereum", "python", "crypto"]);
    }

    #[test]
    fn shared_repo_lands_in_both_documents() {
        let repos = vec![repo("a", "shared"), repo("b", "shared")];
        let docs = build_repo_documents(&repos);
        assert_eq!(docs["a"].tokens, vec!["shared"]);
        assert_eq!(docs["b"].tokens, vec!["shared"]);
    }

    #[test]
    fn issue_documents() {
        let docs = build_issue_documents([&issue("d", "Fix crash", "")]);
        assert_eq!(docs["d"].tokens, vec!["fix", "crash"]);
        let two = vec![issue("d", "first", "body one"), issue("d", "second", "")];
        assert_eq!(
            build_issue_documents(&two)["d"].tokens,
            vec!["first", "body", "one", "second"]
        );
        let mut assigned = issue("d", "Fix crash", "");
        assigned.relation = IssueRelation::Assigned;
        assert_eq!(
            build_issue_documents([&assigned])["d"].tokens,
            build_issue_documents([&issue("d", "Fix crash", "")])["d"].tokens
        );
    }

    #[test]
    fn api_multisets() {
        let ex = default_extractor();
        let s = vec![snap("d", "a.py", "import foo"), snap("d", "b.py", "import foo")];
        assert_eq!(build_api_multisets(&s, ex).counts["d"]["foo"], 2);

        let none = vec![snap("d", "a.py", "x = 1")];
        assert!(build_api_multisets(&none, ex).counts.is_empty());

        let mixed = vec![snap("d", "a.py", "import json"), snap("d", "b.rb", "require 'json'")];
        let ev = build_api_multisets(&mixed, ex);
        assert_eq!(ev.counts["d"].len(), 1);
        assert_eq!(ev.counts["d"]["json"], 2);
        assert_eq!(ev.sequences["d"].tokens, vec!["json", "json"]);
    }

    #[test]
    fn malformed_notebook_is_skipped() {
        let ex = default_extractor();
        let s = vec![
            CommitSnapshot {
                developer_id: "d".into(),
                commit_sha: "1".repeat(40),
                file_path: "n.ipynb".into(),
                language: LanguageId::JupyterNotebook,
                content: "{broken".into(),
            },
            snap("d", "a.py", "import foo"),
        ];
        let ev = build_api_multisets(&s, ex);
        assert_eq!(ev.skipped_snapshots, 1);
        assert_eq!(ev.counts["d"]["foo"], 1);
    }

    #[test]
    fn records_require_evidence() {
        let labels = vec![
            DeveloperLabel { developer_id: "a".into(), role: Some(RoleLabel::Mobile) },
            DeveloperLabel { developer_id: "b".into(), role: None },
        ];
        let mut repos = BTreeMap::new();
        repos.insert("a".to_string(), TaggedDocument::new("a", vec!["x".into()]));
        let recs = assemble_records(&labels, &repos, &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].developer_id, "a");
        assert!(recs[0].doc_issues.is_none());
    }

    #[test]
    fn role_parsing() {
        assert_eq!("Data Scientist".parse::<RoleLabel>().unwrap(), RoleLabel::DataScientist);
        assert_eq!("devops".parse::<RoleLabel>().unwrap(), RoleLabel::DevOps);
        assert!("Designer".parse::<RoleLabel>().is_err());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,120}") {
            let tokens = clean_tokenize(&text);
            prop_assert_eq!(clean_tokenize(&tokens.join(" ")), tokens.clone());
            for t in &tokens {
                prop_assert!(!is_stopword(t));
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }

        #[test]
        fn aggregation_is_order_insensitive(
            titles in proptest::collection::vec("[a-z ]{0,20}", 1..8),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let issues: Vec<IssueFacts> = titles.iter().map(|t| issue("d", t, "body text")).collect();
            let mut shuffled = issues.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut a = build_issue_documents(&issues).get("d").map(|d| d.tokens.clone()).unwrap_or_default();
            let mut b = build_issue_documents(&shuffled).get("d").map(|d| d.tokens.clone()).unwrap_or_default();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
