//! Client and loopback server for the tactic-generation wire protocol.
//!
//! Request:  `{"state", "width", "mode": "beam"|"sample", "temperature", "topP", "seed"}`
//! Response: `{"tactics": [{"text", "logprob"}], "latencyMs"}` or `{"error"}`

use std::io;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::policy::{Decoding, GenerateParams, Policy};
use crate::search::{ProofState, TacticCandidate};
use crate::wire::{CallError, LineClient, LineServer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationRequest {
    pub state: String,
    pub width: usize,
    pub mode: String,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
}

impl GenerationRequest {
    pub fn new(state: &ProofState, width: usize, decoding: Decoding) -> Self {
        let (mode, temperature, top_p, seed) = match decoding {
            Decoding::Beam => ("beam", 1.0, 1.0, 0),
            Decoding::Sample {
                temperature,
                top_p,
                seed,
            } => ("sample", temperature, top_p, seed),
        };
        GenerationRequest {
            state: state.text().to_string(),
            width,
            mode: mode.to_string(),
            temperature,
            top_p,
            seed,
        }
    }

    pub fn decoding(&self) -> Result<Decoding, String> {
        match self.mode.as_str() {
            "beam" => Ok(Decoding::Beam),
            "sample" => {
                let d = Decoding::Sample {
                    temperature: self.temperature,
                    top_p: self.top_p,
                    seed: self.seed,
                };
                d.validate().map(|_| d)
            }
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTactic {
    pub text: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenerationResponse {
    #[serde(rename_all = "camelCase")]
    Tactics {
        tactics: Vec<WireTactic>,
        latency_ms: u64,
    },
    Error {
        error: String,
    },
}

/// Policy served by a remote process speaking the generation protocol.
///
/// Each instance owns one connection; give every prover its own client.
#[derive(Debug)]
pub struct RemotePolicy {
    client: LineClient,
}

impl RemotePolicy {
    pub fn new(addr: impl Into<String>) -> Self {
        RemotePolicy {
            client: LineClient::new(addr),
        }
    }

    pub fn addr(&self) -> &str {
        self.client.addr()
    }

    /// Raw protocol call: one request, one response, bounded by `timeout`.
    pub fn remote_generate(
        &self,
        request: &GenerationRequest,
        timeout: Duration,
    ) -> Result<GenerationResponse, PolicyError> {
        let line = serde_json::to_string(request).expect("request serializes");
        let reply = self.client.call(&line, timeout).map_err(|e| match e {
            CallError::Timeout => PolicyError::Timeout,
            CallError::Transport(m) => PolicyError::Transport(m),
        })?;
        let response: GenerationResponse =
            serde_json::from_str(&reply).map_err(|e| PolicyError::Protocol(format!("{e}: {reply}")))?;
        if let GenerationResponse::Tactics { tactics, .. } = &response {
            if tactics.len() > request.width {
                return Err(PolicyError::Protocol(format!(
                    "{} tactics for width {}",
                    tactics.len(),
                    request.width
                )));
            }
            if let Some(bad) = tactics.iter().find(|t| !(t.logprob <= 0.0)) {
                return Err(PolicyError::Protocol(format!(
                    "logprob {} for `{}`",
                    bad.logprob, bad.text
                )));
            }
        }
        Ok(response)
    }
}

impl Policy for RemotePolicy {
    fn generate(
        &self,
        state: &ProofState,
        params: &GenerateParams,
    ) -> Result<Vec<TacticCandidate>, PolicyError> {
        let request = GenerationRequest::new(state, params.width, params.decoding);
        match self.remote_generate(&request, params.timeout)? {
            GenerationResponse::Tactics { tactics, .. } => Ok(tactics
                .into_iter()
                .map(|t| TacticCandidate::new(t.text, t.logprob))
                .collect()),
            GenerationResponse::Error { error } => Err(PolicyError::Server(error)),
        }
    }
}

/// Serves `policy` over the generation protocol, optionally sleeping `delay`
/// before every reply (for deadline tests).
pub fn serve_policy(
    addr: &str,
    policy: Arc<dyn Policy>,
    delay: Duration,
) -> io::Result<LineServer> {
    LineServer::spawn(
        addr,
        Arc::new(move |line: &str| {
            let started = Instant::now();
            if !delay.is_zero() {
                thread::sleep(delay);
            }
            let response = match serde_json::from_str::<GenerationRequest>(line)
                .map_err(|e| e.to_string())
                .and_then(|r| r.decoding().map(|d| (r, d)))
            {
                Err(e) => GenerationResponse::Error { error: e },
                Ok((req, decoding)) => {
                    let params = GenerateParams {
                        width: req.width,
                        decoding,
                        timeout: Duration::from_secs(3600),
                    };
                    match policy.generate(&ProofState::new(req.state), &params) {
                        Ok(t) => GenerationResponse::Tactics {
                            tactics: t
                                .into_iter()
                                .map(|c| WireTactic {
                                    text: c.tactic,
                                    logprob: c.logprob,
                                })
                                .collect(),
                            latency_ms: started.elapsed().as_millis() as u64,
                        },
                        Err(e) => GenerationResponse::Error {
                            error: e.to_string(),
                        },
                    }
                }
            };
            Some(serde_json::to_string(&response).expect("response serializes"))
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TabularPolicy;

    fn table() -> Arc<dyn Policy> {
        let mut p = TabularPolicy::new();
        p.insert("Z = Z", [("refl", 0.7), ("rw_l add_zero", 0.3)]).unwrap();
        Arc::new(p)
    }

    fn beam(width: usize, timeout: Duration) -> GenerateParams {
        GenerateParams {
            width,
            decoding: Decoding::Beam,
            timeout,
        }
    }

    #[test]
    fn wire_field_names() {
        let req = GenerationRequest::new(
            &ProofState::new("s"),
            2,
            Decoding::Sample {
                temperature: 1.1,
                top_p: 0.9,
                seed: 3,
            },
        );
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["topP"], 0.9);
        assert_eq!(v["mode"], "sample");
        let ok: GenerationResponse =
            serde_json::from_str(r#"{"tactics":[{"text":"refl","logprob":-0.1}],"latencyMs":4}"#).unwrap();
        assert!(matches!(ok, GenerationResponse::Tactics { latency_ms: 4, .. }));
        let err: GenerationResponse = serde_json::from_str(r#"{"error":"boom"}"#).unwrap();
        assert_eq!(err, GenerationResponse::Error { error: "boom".into() });
    }

    #[test]
    fn loopback_echoes_the_table() {
        let server = serve_policy("127.0.0.1:0", table(), Duration::ZERO).unwrap();
        let remote = RemotePolicy::new(server.addr().to_string());
        let params = beam(5, Duration::from_secs(5));
        let got = remote.generate(&ProofState::new("Z = Z"), &params).unwrap();
        let local = table().generate(&ProofState::new("Z = Z"), &params).unwrap();
        assert_eq!(got, local);
    }

    #[test]
    fn slow_server_times_out() {
        let server = serve_policy("127.0.0.1:0", table(), Duration::from_millis(400)).unwrap();
        let remote = RemotePolicy::new(server.addr().to_string());
        let err = remote
            .generate(&ProofState::new("Z = Z"), &beam(1, Duration::from_millis(50)))
            .unwrap_err();
        assert!(matches!(err, PolicyError::Timeout));
        assert!(!err.is_infrastructure());
    }

    #[test]
    fn empty_response_is_a_dead_end_not_an_error() {
        let server = serve_policy("127.0.0.1:0", table(), Duration::ZERO).unwrap();
        let remote = RemotePolicy::new(server.addr().to_string());
        let got = remote
            .generate(&ProofState::new("unknown"), &beam(2, Duration::from_secs(5)))
            .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn malformed_reply_is_infrastructure() {
        let server = LineServer::spawn("127.0.0.1:0", Arc::new(|_: &str| Some("not json".into()))).unwrap();
        let remote = RemotePolicy::new(server.addr().to_string());
        let err = remote
            .generate(&ProofState::new("s"), &beam(2, Duration::from_secs(5)))
            .unwrap_err();
        assert!(err.is_infrastructure(), "{err}");

        let server = LineServer::spawn(
            "127.0.0.1:0",
            Arc::new(|_: &str| {
                Some(r#"{"tactics":[{"text":"a","logprob":-1},{"text":"b","logprob":-1}],"latencyMs":0}"#.into())
            }),
        )
        .unwrap();
        let remote = RemotePolicy::new(server.addr().to_string());
        let err = remote
            .generate(&ProofState::new("s"), &beam(1, Duration::from_secs(5)))
            .unwrap_err();
        assert!(matches!(err, PolicyError::Protocol(_)));
    }
}
