use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::MinerError;

/// A GET response reduced to what the client needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names are lowercased.
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default)]
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<HttpResponse, MinerError>;
}

/// Live HTTP transport.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        UreqTransport {
            agent: config.into(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<HttpResponse, MinerError> {
        let mut req = self.agent.get(url);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let mut resp = req
            .call()
            .map_err(|e| MinerError::Transport(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| {
                v.to_str()
                    .ok()
                    .map(|v| (k.as_str().to_ascii_lowercase(), v.to_string()))
            })
            .collect();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| MinerError::Transport(format!("{url}: {e}")))?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

/// One recorded request/response pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordedExchange {
    pub url: String,
    #[serde(flatten)]
    pub response: HttpResponse,
}

/// Serves recorded exchanges by exact URL; unknown URLs answer 404.
///
/// Several recordings for the same URL are replayed in order, the last one
/// repeating, which lets tests script a rate-limit followed by success.
#[derive(Default)]
pub struct ReplayTransport {
    exchanges: Mutex<HashMap<String, Vec<HttpResponse>>>,
    log: Mutex<Vec<String>>,
}

impl ReplayTransport {
    pub fn new(exchanges: impl IntoIterator<Item = RecordedExchange>) -> Self {
        let mut map: HashMap<String, Vec<HttpResponse>> = HashMap::new();
        for ex in exchanges {
            map.entry(ex.url).or_default().push(ex.response);
        }
        ReplayTransport {
            exchanges: Mutex::new(map),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Loads a JSON array of `{url, status, headers, body}` objects.
    pub fn from_file(path: &Path) -> Result<Self, MinerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MinerError::Transport(format!("{}: {e}", path.display())))?;
        let exchanges: Vec<RecordedExchange> = serde_json::from_str(&text).map_err(|e| {
            MinerError::Decode {
                url: path.display().to_string(),
                message: e.to_string(),
            }
        })?;
        Ok(Self::new(exchanges))
    }

    /// Every URL requested so far, in order.
    pub fn requests(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str, _headers: &[(&str, &str)]) -> Result<HttpResponse, MinerError> {
        self.log.lock().unwrap().push(url.to_string());
        let mut map = self.exchanges.lock().unwrap();
        match map.get_mut(url) {
            Some(queue) if queue.len() > 1 => Ok(queue.remove(0)),
            Some(queue) if !queue.is_empty() => Ok(queue[0].clone()),
            _ => Ok(HttpResponse {
                status: 404,
                headers: BTreeMap::new(),
                body: r#"{"message":"Not Found"}"#.to_string(),
            }),
        }
    }
}
