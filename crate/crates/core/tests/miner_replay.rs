use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use devforge::imports::LanguageId;
use devforge::jsonl;
use devforge::miner::{
    self, AcquisitionJob, Checkpoint, CommitSnapshot, GithubClient, HttpResponse, IssueFacts, IssueRelation,
    LiveConfig, ManualClock, MinerError, RecordedExchange, RepoFacts, ReplayTransport, RetryPolicy, SourceKind,
};
use serde_json::{json, Value};

const BASE: &str = "https://api.test";

fn url(path: &str) -> String {
    format!("{BASE}{path}")
}

fn reply(path: &str, status: u16, headers: &[(&str, &str)], body: Value) -> RecordedExchange {
    RecordedExchange {
        url: url(path),
        response: HttpResponse {
            status,
            headers: headers.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            body: body.to_string(),
        },
    }
}

fn ok(path: &str, body: Value) -> RecordedExchange {
    reply(path, 200, &[], body)
}

fn b64(text: &str) -> String {
    base64::engine::general_purpose::STANDARD.encode(text)
}

fn no_issues(login: &str) -> Vec<RecordedExchange> {
    ["assignee", "author", "commenter"]
        .iter()
        .map(|q| ok(&format!("/search/issues?q={q}:{login}+type:issue&per_page=100"), json!({"items": []})))
        .collect()
}

fn client(exchanges: Vec<RecordedExchange>, clock: &ManualClock) -> GithubClient<ReplayTransport> {
    let config = LiveConfig {
        base_url: BASE.into(),
        token: Some("t0ken".into()),
        max_file_bytes: 4096,
        retry: RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        },
        ..LiveConfig::default()
    };
    GithubClient::with_clock(ReplayTransport::new(exchanges), config, Arc::new(clock.clone()))
}

fn job(login: &str, out: &Path) -> AcquisitionJob {
    AcquisitionJob::new(login, [SourceKind::Repos, SourceKind::Issues, SourceKind::Apis], None, out).unwrap()
}

const SHA: &str = "bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb";

fn alice() -> Vec<RecordedExchange> {
    let mut ex = vec![
        ok(
            "/users/alice/repos?per_page=100&type=all",
            json!([
                {"name": "lib", "full_name": "alice/lib", "fork": true, "description": "fork of lib"},
                {"name": "app", "full_name": "alice/app", "description": "A web app"},
                {"name": "notes", "full_name": "alice/notes", "fork": true}
            ]),
        ),
        ok("/repos/alice/lib/topics", json!({"names": ["parser", "rust"]})),
        ok("/repos/alice/lib/readme", json!({"content": b64("# Lib\nA parsing library"), "encoding": "base64"})),
        ok(
            "/repos/alice/lib",
            json!({"name": "lib", "full_name": "alice/lib", "fork": true,
                   "parent": {"name": "lib", "full_name": "upstream/lib", "description": "Upstream parser"}}),
        ),
        ok("/repos/upstream/lib/commits?author=alice", json!([{"sha": "a".repeat(40)}])),
        ok(
            "/repos/alice/notes",
            json!({"name": "notes", "full_name": "alice/notes", "fork": true,
                   "parent": {"name": "notes", "full_name": "someone/notes"}}),
        ),
        ok("/repos/someone/notes/commits?author=alice", json!([])),
        ok("/repos/alice/app/commits?author=alice", json!([{"sha": SHA}])),
        ok(
            &format!("/repos/alice/app/commits/{SHA}"),
            json!({"files": [
                {"filename": "src/main.py", "status": "modified"},
                {"filename": "old.py", "status": "removed"},
                {"filename": "README.md", "status": "modified"},
                {"filename": "big.py", "status": "added"}
            ]}),
        ),
        ok(
            &format!("/repos/alice/app/contents/src/main.py?ref={SHA}"),
            json!({"content": b64("import numpy\nfrom flask import Flask\n"), "encoding": "base64", "size": 38}),
        ),
        ok(
            &format!("/repos/alice/app/contents/big.py?ref={SHA}"),
            json!({"content": "", "encoding": "base64", "size": 1_000_000}),
        ),
    ];
    let issue = |n: u64, title: &str| {
        json!({"repository_url": format!("{BASE}/repos/org/tracker"), "number": n, "title": title, "body": "details"})
    };
    ex.push(ok(
        "/search/issues?q=assignee:alice+type:issue&per_page=100",
        json!({"items": [issue(1, "Crash on start")]}),
    ));
    ex.push(ok(
        "/search/issues?q=author:alice+type:issue&per_page=100",
        json!({"items": [issue(1, "Crash on start"), issue(2, "Docs typo")]}),
    ));
    ex.push(ok(
        "/search/issues?q=commenter:alice+type:issue&per_page=100",
        json!({"items": [issue(3, "Feature idea")]}),
    ));
    ex
}

#[test]
fn fork_parent_issues_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::default();
    let source = client(alice(), &clock);
    let stats = miner::mine(&source, &[job("alice", dir.path())], dir.path(), false).unwrap();

    let repos: Vec<RepoFacts> = jsonl::read(&dir.path().join(miner::REPOS_FILE)).unwrap();
    let names: Vec<(&str, Option<&str>)> =
        repos.iter().map(|r| (r.repo_full_name.as_str(), r.forked_from.as_deref())).collect();
    assert_eq!(
        names,
        vec![
            ("alice/lib", Some("upstream/lib")),
            ("upstream/lib", None),
            ("alice/app", None),
            ("alice/notes", Some("someone/notes")),
        ]
    );
    assert_eq!(repos[0].tags, vec!["parser", "rust"]);
    assert_eq!(repos[0].readme, "# Lib\nA parsing library");
    assert_eq!(repos[1].topic, "Upstream parser");

    let issues: Vec<IssueFacts> = jsonl::read(&dir.path().join(miner::ISSUES_FILE)).unwrap();
    let rel: BTreeMap<&str, IssueRelation> = issues.iter().map(|i| (i.issue_id.as_str(), i.relation)).collect();
    assert_eq!(rel.len(), 3);
    assert_eq!(rel["org/tracker#1"], IssueRelation::Assigned);
    assert_eq!(rel["org/tracker#2"], IssueRelation::Created);
    assert_eq!(rel["org/tracker#3"], IssueRelation::Participated);

    let snaps: Vec<CommitSnapshot> = jsonl::read(&dir.path().join(miner::SNAPSHOTS_FILE)).unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(snaps[0].file_path, "src/main.py");
    assert_eq!(snaps[0].language, LanguageId::Python);
    assert_eq!(snaps[0].content, "import numpy\nfrom flask import Flask\n");
    assert_eq!(stats.skipped_oversized, 1);
    assert_eq!((stats.repos, stats.issues, stats.snapshots), (4, 3, 1));
    assert!(!dir.path().join(miner::CHECKPOINT_FILE).exists());
}

#[test]
fn unknown_developer_yields_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::default();
    let source = client(vec![], &clock);
    let stats = miner::mine(&source, &[job("ghost", dir.path())], dir.path(), false).unwrap();
    assert_eq!(stats.missing_developers, 1);
    assert_eq!(stats.repos + stats.issues + stats.snapshots, 0);
    let repos: Vec<RepoFacts> = jsonl::read(&dir.path().join(miner::REPOS_FILE)).unwrap();
    assert!(repos.is_empty());
}

#[test]
fn rate_limits_are_retried_with_backoff() {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::default();
    let mut ex = vec![
        reply("/users/carol/repos?per_page=100&type=all", 429, &[("retry-after", "7")], json!({})),
        reply(
            "/users/carol/repos?per_page=100&type=all",
            403,
            &[("x-ratelimit-remaining", "0")],
            json!({"message": "API rate limit exceeded"}),
        ),
        ok("/users/carol/repos?per_page=100&type=all", json!([])),
    ];
    ex.extend(no_issues("carol"));
    let source = client(ex, &clock);
    miner::mine(&source, &[job("carol", dir.path())], dir.path(), false).unwrap();
    let sleeps = clock.sleeps();
    assert!(sleeps.contains(&Duration::from_secs(7)), "{sleeps:?}");
    assert!(sleeps.contains(&Duration::from_secs(2)), "{sleeps:?}");
}

#[test]
fn exhausted_retries_abort() {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::default();
    let ex = vec![reply("/users/carol/repos?per_page=100&type=all", 429, &[], json!({}))];
    let source = client(ex, &clock);
    let err = miner::mine(&source, &[job("carol", dir.path())], dir.path(), false).unwrap_err();
    match err {
        MinerError::Aborted { source, .. } => assert!(matches!(*source, MinerError::RateLimited { .. })),
        other => panic!("unexpected {other}"),
    }
    // Initial try plus three retries, backing off 1, 2 and 4 seconds.
    assert_eq!(source.transport().requests().len(), 4);
    let backoff: Vec<Duration> = clock.sleeps().into_iter().filter(|d| d.as_secs() >= 1).collect();
    assert_eq!(backoff, [1, 2, 4].map(Duration::from_secs));
}

#[test]
fn auth_failure_checkpoints_and_resume_skips_completed() {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::default();
    let mut first = vec![ok(
        "/users/erin/repos?per_page=100&type=all",
        json!([{"name": "site", "full_name": "erin/site", "description": "Personal site"}]),
    )];
    first.extend(no_issues("erin"));
    first.push(reply("/users/dave/repos?per_page=100&type=all", 401, &[], json!({"message": "Bad credentials"})));
    let jobs = [job("erin", dir.path()), job("dave", dir.path())];

    let err = miner::mine(&client(first, &clock), &jobs, dir.path(), false).unwrap_err();
    assert!(matches!(&err, MinerError::Aborted { source, .. } if matches!(**source, MinerError::Auth { status: 401, .. })));
    let cp = Checkpoint::load(dir.path()).expect("checkpoint written");
    assert_eq!(cp.completed, vec!["erin"]);
    assert_eq!(cp.failed_login.as_deref(), Some("dave"));

    let mut second = vec![ok(
        "/users/dave/repos?per_page=100&type=all",
        json!([{"name": "api", "full_name": "dave/api", "description": "Backend service"}]),
    )];
    second.extend(no_issues("dave"));
    let source = client(second, &clock);
    miner::mine(&source, &jobs, dir.path(), true).unwrap();
    assert!(source.transport().requests().iter().all(|u| !u.contains("erin")));
    let repos: Vec<RepoFacts> = jsonl::read(&dir.path().join(miner::REPOS_FILE)).unwrap();
    let names: Vec<&str> = repos.iter().map(|r| r.repo_full_name.as_str()).collect();
    assert_eq!(names, ["erin/site", "dave/api"]);
    assert!(!dir.path().join(miner::CHECKPOINT_FILE).exists());
}
