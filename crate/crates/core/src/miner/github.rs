use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;

use super::ratelimit::{Clock, SystemClock, TokenBucket};
use super::transport::{HttpResponse, Transport};
use super::{EvidenceSource, MineStats, MinerError};
use crate::imports;
use crate::miner::types::{
    AcquisitionJob, CommitSnapshot, IssueFacts, IssueRelation, RepoFacts,
};

pub const DEFAULT_BASE_URL: &str = "https://api.github.com";
pub const TOKEN_ENV: &str = "DEV2VEC_GH_TOKEN";

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_secs(2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub token: Option<String>,
    pub requests_per_second: f64,
    pub burst: u32,
    pub max_file_bytes: usize,
    pub retry: RetryPolicy,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            token: None,
            requests_per_second: 1.0,
            burst: 5,
            max_file_bytes: super::DEFAULT_MAX_FILE_BYTES,
            retry: RetryPolicy::default(),
        }
    }
}

impl LiveConfig {
    /// Defaults with the token read from `DEV2VEC_GH_TOKEN`.
    pub fn from_env() -> Result<Self, MinerError> {
        let token = std::env::var(TOKEN_ENV).map_err(|_| MinerError::MissingToken)?;
        Ok(LiveConfig {
            token: Some(token),
            ..Default::default()
        })
    }
}

/// REST client for the GitHub v3 API.
pub struct GithubClient<T: Transport> {
    transport: T,
    config: LiveConfig,
    clock: Arc<dyn Clock>,
    bucket: TokenBucket,
}

#[derive(Deserialize)]
struct RepoJson {
    name: String,
    full_name: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    fork: bool,
    #[serde(default)]
    parent: Option<Box<RepoJson>>,
}

#[derive(Deserialize)]
struct TopicsJson {
    #[serde(default)]
    names: Vec<String>,
}

#[derive(Deserialize)]
struct ContentJson {
    #[serde(default)]
    content: String,
    #[serde(default)]
    encoding: Option<String>,
    #[serde(default)]
    size: usize,
}

#[derive(Deserialize)]
struct SearchJson {
    items: Vec<IssueJson>,
}

#[derive(Deserialize)]
struct IssueJson {
    repository_url: String,
    number: u64,
    title: String,
    #[serde(default)]
    body: Option<String>,
}

#[derive(Deserialize)]
struct CommitRef {
    sha: String,
}

#[derive(Deserialize)]
struct CommitDetail {
    #[serde(default)]
    files: Vec<CommitFile>,
}

#[derive(Deserialize)]
struct CommitFile {
    filename: String,
    #[serde(default)]
    status: Option<String>,
}

impl<T: Transport> GithubClient<T> {
    pub fn new(transport: T, config: LiveConfig) -> Self {
        Self::with_clock(transport, config, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(transport: T, config: LiveConfig, clock: Arc<dyn Clock>) -> Self {
        let bucket = TokenBucket::new(config.requests_per_second, config.burst, clock.as_ref());
        GithubClient {
            transport,
            config,
            clock,
            bucket,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    /// One GET, honoring the rate budget and retrying rate limits with
    /// exponential backoff.
    fn get(&self, url: &str) -> Result<HttpResponse, MinerError> {
        let auth = self.config.token.as_ref().map(|t| format!("Bearer {t}"));
        let mut headers = vec![
            ("Accept", "application/vnd.github+json"),
            ("User-Agent", "devforge-miner"),
        ];
        if let Some(a) = &auth {
            headers.push(("Authorization", a.as_str()));
        }
        let mut attempt = 0;
        loop {
            self.bucket.acquire(self.clock.as_ref());
            let resp = self.transport.get(url, &headers)?;
            match classify(url, &resp) {
                Err(MinerError::RateLimited { url, retry_after })
                    if attempt < self.config.retry.max_retries =>
                {
                    let backoff = self.config.retry.base_delay * 2u32.pow(attempt);
                    let wait = retry_after.map_or(backoff, |s| backoff.max(Duration::from_secs(s)));
                    log::warn!("rate limited on {url}; retrying in {wait:?}");
                    self.clock.sleep(wait);
                    attempt += 1;
                }
                other => return other.map(|()| resp),
            }
        }
    }

    fn get_json<D: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<D, MinerError> {
        let resp = self.get(url)?;
        decode(url, &resp)
    }

    /// Follows `Link: rel="next"` pagination.
    fn get_pages<D: for<'de> Deserialize<'de>>(&self, first: &str) -> Result<Vec<D>, MinerError> {
        let mut out = Vec::new();
        let mut next = Some(first.to_string());
        while let Some(url) = next.take() {
            let resp = self.get(&url)?;
            out.push(decode(&url, &resp)?);
            next = resp.header("link").and_then(next_link);
        }
        Ok(out)
    }

    fn get_optional<D: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<Option<D>, MinerError> {
        match self.get_json(url) {
            Ok(v) => Ok(Some(v)),
            Err(MinerError::NotFound { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn list_repos(&self, login: &str) -> Result<Vec<RepoJson>, MinerError> {
        let first = self.url(&format!("/users/{login}/repos?per_page=100&type=all"));
        Ok(self
            .get_pages::<Vec<RepoJson>>(&first)?
            .into_iter()
            .flatten()
            .collect())
    }

    fn repo_facts(&self, login: &str, repo: &RepoJson) -> Result<RepoFacts, MinerError> {
        let full = &repo.full_name;
        let tags = self
            .get_optional::<TopicsJson>(&self.url(&format!("/repos/{full}/topics")))?
            .map(|t| t.names)
            .unwrap_or_default();
        let readme = match self.get_optional::<ContentJson>(&self.url(&format!("/repos/{full}/readme")))? {
            Some(c) => decode_content(&self.url(&format!("/repos/{full}/readme")), &c)?,
            None => String::new(),
        };
        Ok(RepoFacts {
            developer_id: login.to_string(),
            repo_full_name: full.clone(),
            name: repo.name.clone(),
            tags,
            topic: repo.description.clone().unwrap_or_default(),
            readme,
            forked_from: None,
        })
    }

    fn commit_shas(&self, full_name: &str, login: &str, since: Option<&str>) -> Result<Vec<String>, MinerError> {
        let mut url = self.url(&format!("/repos/{full_name}/commits?author={login}"));
        if let Some(since) = since {
            url.push_str(&format!("&since={since}"));
        }
        match self.get_pages::<Vec<CommitRef>>(&url) {
            Ok(pages) => Ok(pages.into_iter().flatten().map(|c| c.sha).collect()),
            // Empty repositories answer 409.
            Err(MinerError::NotFound { .. }) | Err(MinerError::Http { status: 409, .. }) => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }
}

impl<T: Transport> EvidenceSource for GithubClient<T> {
    fn max_file_bytes(&self) -> usize {
        self.config.max_file_bytes
    }

    fn fetch_repos(&self, job: &AcquisitionJob, _stats: &mut MineStats) -> Result<Vec<RepoFacts>, MinerError> {
        let login = job.developer_login();
        let mut out = Vec::new();
        for repo in self.list_repos(login)? {
            let mut facts = self.repo_facts(login, &repo)?;
            if repo.fork {
                let detail: RepoJson = self.get_json(&self.url(&format!("/repos/{}", repo.full_name)))?;
                if let Some(parent) = detail.parent {
                    facts.forked_from = Some(parent.full_name.clone());
                    out.push(facts);
                    if !self.commit_shas(&parent.full_name, login, None)?.is_empty() {
                        out.push(self.repo_facts(login, &parent)?);
                    }
                    continue;
                }
            }
            out.push(facts);
        }
        Ok(out)
    }

    fn fetch_issues(&self, job: &AcquisitionJob, _stats: &mut MineStats) -> Result<Vec<IssueFacts>, MinerError> {
        let login = job.developer_login();
        let mut found = Vec::new();
        for (qualifier, relation) in [
            ("assignee", IssueRelation::Assigned),
            ("author", IssueRelation::Created),
            ("commenter", IssueRelation::Participated),
        ] {
            let mut q = format!("{qualifier}:{login}+type:issue");
            if let Some(since) = job.since() {
                q.push_str(&format!("+updated:>={since}"));
            }
            let first = self.url(&format!("/search/issues?q={q}&per_page=100"));
            for page in self.get_pages::<SearchJson>(&first)? {
                for item in page.items {
                    let repo = item
                        .repository_url
                        .rsplitn(3, '/')
                        .take(2)
                        .collect::<Vec<_>>();
                    let repo = match repo.as_slice() {
                        [name, owner] => format!("{owner}/{name}"),
                        _ => item.repository_url.clone(),
                    };
                    found.push(IssueFacts {
                        developer_id: login.to_string(),
                        issue_id: format!("{repo}#{}", item.number),
                        title: item.title,
                        body: item.body.unwrap_or_default(),
                        relation,
                    });
                }
            }
        }
        Ok(dedup_issues(found))
    }

    fn fetch_commit_snapshots(
        &self,
        job: &AcquisitionJob,
        stats: &mut MineStats,
    ) -> Result<Vec<CommitSnapshot>, MinerError> {
        let login = job.developer_login();
        let mut out = Vec::new();
        for repo in self.list_repos(login)? {
            for sha in self.commit_shas(&repo.full_name, login, job.since())? {
                let detail: CommitDetail =
                    self.get_json(&self.url(&format!("/repos/{}/commits/{sha}", repo.full_name)))?;
                for file in detail.files {
                    if file.status.as_deref() == Some("removed") {
                        continue;
                    }
                    let Some(language) = imports::detect_language(&file.filename) else {
                        continue;
                    };
                    let url = self.url(&format!(
                        "/repos/{}/contents/{}?ref={sha}",
                        repo.full_name, file.filename
                    ));
                    let Some(content) = self.get_optional::<ContentJson>(&url)? else {
                        continue;
                    };
                    if content.size > self.config.max_file_bytes {
                        log::warn!("skipping oversized {} ({} bytes)", file.filename, content.size);
                        stats.skipped_oversized += 1;
                        continue;
                    }
                    let text = decode_content(&url, &content)?;
                    if text.len() > self.config.max_file_bytes {
                        log::warn!("skipping oversized {} ({} bytes)", file.filename, text.len());
                        stats.skipped_oversized += 1;
                        continue;
                    }
                    out.push(CommitSnapshot {
                        developer_id: login.to_string(),
                        commit_sha: sha.to_ascii_lowercase(),
                        file_path: file.filename,
                        language,
                        content: text,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Keeps one record per issue id, with the strongest relation seen.
pub fn dedup_issues(issues: Vec<IssueFacts>) -> Vec<IssueFacts> {
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut out: Vec<IssueFacts> = Vec::new();
    for issue in issues {
        let key = (issue.developer_id.clone(), issue.issue_id.clone());
        match index.get(&key) {
            Some(&i) => {
                if issue.relation > out[i].relation {
                    out[i].relation = issue.relation;
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(issue);
            }
        }
    }
    out
}

fn classify(url: &str, resp: &HttpResponse) -> Result<(), MinerError> {
    let retry_after = resp.header("retry-after").and_then(|v| v.trim().parse::<u64>().ok());
    let exhausted = resp.header("x-ratelimit-remaining").map(str::trim) == Some("0");
    match resp.status {
        200..=299 => Ok(()),
        429 => Err(MinerError::RateLimited {
            url: url.to_string(),
            retry_after,
        }),
        403 if retry_after.is_some() || exhausted => Err(MinerError::RateLimited {
            url: url.to_string(),
            retry_after,
        }),
        401 | 403 => Err(MinerError::Auth {
            status: resp.status,
            url: url.to_string(),
        }),
        404 => Err(MinerError::NotFound {
            url: url.to_string(),
        }),
        status => Err(MinerError::Http {
            status,
            url: url.to_string(),
        }),
    }
}

fn decode<D: for<'de> Deserialize<'de>>(url: &str, resp: &HttpResponse) -> Result<D, MinerError> {
    serde_json::from_str(&resp.body).map_err(|e| MinerError::Decode {
        url: url.to_string(),
        message: e.to_string(),
    })
}

fn decode_content(url: &str, c: &ContentJson) -> Result<String, MinerError> {
    if c.encoding.as_deref().unwrap_or("base64") != "base64" {
        return Ok(c.content.clone());
    }
    let compact: String = c.content.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(compact)
        .map_err(|e| MinerError::Decode {
            url: url.to_string(),
            message: e.to_string(),
        })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| p.trim() == "rel=\"next\"")
            .then(|| target.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_next_link() {
        let h = r#"<https://api.github.com/x?page=2>; rel="next", <https://api.github.com/x?page=5>; rel="last""#;
        assert_eq!(next_link(h).as_deref(), Some("https://api.github.com/x?page=2"));
        assert_eq!(next_link(r#"<https://a/x?page=1>; rel="prev""#), None);
    }

    #[test]
    fn status_classification() {
        let mk = |status: u16, headers: &[(&str, &str)]| HttpResponse {
            status,
            headers: headers.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            body: String::new(),
        };
        assert!(classify("u", &mk(200, &[])).is_ok());
        assert!(matches!(classify("u", &mk(401, &[])), Err(MinerError::Auth { .. })));
        assert!(matches!(classify("u", &mk(403, &[])), Err(MinerError::Auth { .. })));
        assert!(matches!(
            classify("u", &mk(403, &[("retry-after", "3")])),
            Err(MinerError::RateLimited { retry_after: Some(3), .. })
        ));
        assert!(matches!(
            classify("u", &mk(403, &[("x-ratelimit-remaining", "0")])),
            Err(MinerError::RateLimited { .. })
        ));
        assert!(matches!(classify("u", &mk(429, &[])), Err(MinerError::RateLimited { .. })));
        assert!(matches!(classify("u", &mk(404, &[])), Err(MinerError::NotFound { .. })));
    }

    #[test]
    fn dedup_keeps_strongest_relation() {
        let mk = |rel| IssueFacts {
            developer_id: "d".into(),
            issue_id: "o/r#1".into(),
            title: "t".into(),
            body: String::new(),
            relation: rel,
        };
        let out = dedup_issues(vec![mk(IssueRelation::Participated), mk(IssueRelation::Assigned)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].relation, IssueRelation::Assigned);
        let out = dedup_issues(vec![mk(IssueRelation::Created), mk(IssueRelation::Participated)]);
        assert_eq!(out[0].relation, IssueRelation::Created);
    }

    #[test]
    fn base64_content_with_newlines() {
        let c = ContentJson {
            content: "aW1wb3J0\nIGZvbw==\n".into(),
            encoding: Some("base64".into()),
            size: 10,
        };
        assert_eq!(decode_content("u", &c).unwrap(), "import foo");
    }
}
