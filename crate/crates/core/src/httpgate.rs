//! Rate-limited HTTP access shared by the ingest client, the stats
//! provider, the remote summarizer and the benchmark fetcher.
//!
//! At most one request is in flight per remote host, with a configurable
//! inter-request delay and bounded retries with exponential backoff.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

pub const DEFAULT_HOST_DELAY_MS: u64 = 200;
pub const DEFAULT_RETRIES: u32 = 3;

pub struct HttpGateway {
    client: reqwest::blocking::Client,
    host_delay: Duration,
    retries: u32,
    backoff_base: Duration,
    // host -> earliest instant the next request may start
    next_allowed: Mutex<HashMap<String, Instant>>,
}

impl HttpGateway {
    pub fn new(host_delay_ms: u64, retries: u32) -> Self {
        HttpGateway {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("http client"),
            host_delay: Duration::from_millis(host_delay_ms),
            retries,
            backoff_base: Duration::from_millis(host_delay_ms.max(1)),
            next_allowed: Mutex::new(HashMap::new()),
        }
    }

    /// Gateway with no pacing, for tests against local fixture servers.
    pub fn unthrottled() -> Self {
        let mut gw = Self::new(0, DEFAULT_RETRIES);
        gw.backoff_base = Duration::from_millis(1);
        gw
    }

    fn host_of(url: &str) -> String {
        let rest = url.split("://").nth(1).unwrap_or(url);
        rest.split(['/', '?']).next().unwrap_or(rest).to_string()
    }

    /// Block until this host's slot is free, claiming the next slot.
    fn pace(&self, host: &str) {
        loop {
            let wait = {
                let mut map = self.next_allowed.lock().unwrap();
                let now = Instant::now();
                match map.get(host) {
                    Some(next) if *next > now => *next - now,
                    _ => {
                        map.insert(host.to_string(), now + self.host_delay);
                        return;
                    }
                }
            };
            std::thread::sleep(wait);
        }
    }

    fn execute(
        &self,
        build: impl Fn(&reqwest::blocking::Client) -> reqwest::blocking::RequestBuilder,
        url: &str,
    ) -> Result<String> {
        let host = Self::host_of(url);
        let mut last_status: Option<u16> = None;
        let mut last_message = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            self.pace(&host);
            match build(&self.client).send() {
                Ok(resp) => {
                    let status = resp.status();
                    last_status = Some(status.as_u16());
                    if status.is_success() {
                        return resp.text().map_err(|e| Error::Transport {
                            status: last_status,
                            message: e.to_string(),
                        });
                    }
                    last_message = format!("{} for {}", status, url);
                    if !status.is_server_error() {
                        // client errors will not improve on retry
                        break;
                    }
                }
                Err(e) => {
                    last_message = e.to_string();
                }
            }
        }
        Err(Error::Transport {
            status: last_status,
            message: last_message,
        })
    }

    pub fn get(&self, url: &str) -> Result<String> {
        self.execute(|c| c.get(url), url)
    }

    pub fn get_with_query(&self, url: &str, query: &[(&str, &str)]) -> Result<String> {
        self.execute(|c| c.get(url).query(query), url)
    }

    pub fn post_form(&self, url: &str, form: &[(&str, &str)]) -> Result<String> {
        let owned: Vec<(String, String)> = form
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        self.execute(move |c| c.post(url).form(&owned), url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn host_extraction() {
        assert_eq!(HttpGateway::host_of("http://example.org/w/api.php?x=1"), "example.org");
        assert_eq!(HttpGateway::host_of("https://a.b:8080/path"), "a.b:8080");
        assert_eq!(HttpGateway::host_of("no-scheme/path"), "no-scheme");
    }

    #[test]
    fn pacing_enforces_inter_request_delay() {
        let gw = HttpGateway::new(30, 0);
        let start = Instant::now();
        gw.pace("h");
        gw.pace("h");
        gw.pace("h");
        assert!(start.elapsed() >= Duration::from_millis(60));
        // distinct hosts are not serialized against each other
        let start = Instant::now();
        gw.pace("h1");
        gw.pace("h2");
        assert!(start.elapsed() < Duration::from_millis(30));
    }
}
