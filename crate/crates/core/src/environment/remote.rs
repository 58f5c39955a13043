//! Client and loopback server for the environment wire protocol.
//!
//! Request:  `{"op": "init"|"apply"|"close", "goal"?, "state"?, "tactic"?}`
//! Response: `{"status": "state"|"finished"|"error", "payload": "<text>"}`

use std::io;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::environment::{messages, EnvOutcome, Environment};
use crate::error::EnvError;
use crate::search::ProofState;
use crate::wire::{CallError, LineClient, LineServer};

/// Deadline for `init` requests, which are not tactic applications.
const INIT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvOp {
    Init,
    Apply,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvRequest {
    pub op: EnvOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tactic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvStatus {
    State,
    Finished,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvResponse {
    pub status: EnvStatus,
    pub payload: String,
}

impl From<EnvResponse> for EnvOutcome {
    fn from(r: EnvResponse) -> Self {
        match r.status {
            EnvStatus::State => EnvOutcome::NewState(ProofState::new(r.payload)),
            EnvStatus::Finished => EnvOutcome::ProofFinished,
            EnvStatus::Error => EnvOutcome::TacticError(r.payload),
        }
    }
}

impl From<EnvOutcome> for EnvResponse {
    fn from(o: EnvOutcome) -> Self {
        match o {
            EnvOutcome::NewState(s) => EnvResponse {
                status: EnvStatus::State,
                payload: s.text().to_string(),
            },
            EnvOutcome::ProofFinished => EnvResponse {
                status: EnvStatus::Finished,
                payload: String::new(),
            },
            EnvOutcome::TacticError(m) => EnvResponse {
                status: EnvStatus::Error,
                payload: m,
            },
        }
    }
}

/// One session with a remote environment server. One application is in
/// flight at a time; create one per prover.
#[derive(Debug)]
pub struct RemoteEnvironment {
    client: LineClient,
}

impl RemoteEnvironment {
    pub fn new(addr: impl Into<String>) -> Self {
        RemoteEnvironment {
            client: LineClient::new(addr),
        }
    }

    fn call(&self, req: &EnvRequest, timeout: Duration) -> Result<Result<EnvResponse, ()>, EnvError> {
        let line = serde_json::to_string(req).expect("request serializes");
        match self.client.call(&line, timeout) {
            Ok(reply) => serde_json::from_str(&reply)
                .map(Ok)
                .map_err(|e| EnvError::Protocol(format!("{e}: {reply}"))),
            Err(CallError::Timeout) => Ok(Err(())),
            Err(CallError::Transport(m)) => Err(EnvError::Transport(m)),
        }
    }

    /// Raw protocol mapping for one tactic application.
    pub fn remote_apply(
        &self,
        state: &str,
        tactic: &str,
        timeout: Duration,
    ) -> Result<EnvOutcome, EnvError> {
        let req = EnvRequest {
            op: EnvOp::Apply,
            goal: None,
            state: Some(state.to_string()),
            tactic: Some(tactic.to_string()),
        };
        Ok(match self.call(&req, timeout)? {
            Ok(r) => r.into(),
            Err(()) => EnvOutcome::TacticError(messages::TIMEOUT.to_string()),
        })
    }
}

impl Environment for RemoteEnvironment {
    fn init(&self, goal: &str) -> Result<ProofState, EnvError> {
        let req = EnvRequest {
            op: EnvOp::Init,
            goal: Some(goal.to_string()),
            state: None,
            tactic: None,
        };
        match self.call(&req, INIT_TIMEOUT)? {
            Ok(EnvResponse {
                status: EnvStatus::State,
                payload,
            }) => Ok(ProofState::new(payload)),
            Ok(other) => Err(EnvError::GoalRejected(format!("{:?}: {}", other.status, other.payload))),
            Err(()) => Err(EnvError::Transport("init timed out".into())),
        }
    }

    fn apply(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: Duration,
    ) -> Result<EnvOutcome, EnvError> {
        self.remote_apply(state.text(), tactic, timeout)
    }
}

impl Drop for RemoteEnvironment {
    fn drop(&mut self) {
        let req = EnvRequest {
            op: EnvOp::Close,
            goal: None,
            state: None,
            tactic: None,
        };
        self.client
            .notify(&serde_json::to_string(&req).expect("request serializes"));
    }
}

/// Serves `env` over the environment protocol; `delay` is slept before every
/// `apply` reply. `close` requests get no reply.
pub fn serve_environment(
    addr: &str,
    env: Arc<dyn Environment>,
    delay: Duration,
) -> io::Result<LineServer> {
    LineServer::spawn(
        addr,
        Arc::new(move |line: &str| {
            let reply = match serde_json::from_str::<EnvRequest>(line) {
                Err(e) => EnvResponse {
                    status: EnvStatus::Error,
                    payload: format!("bad request: {e}"),
                },
                Ok(req) => match req.op {
                    EnvOp::Close => return None,
                    EnvOp::Init => match env.init(req.goal.as_deref().unwrap_or_default()) {
                        Ok(s) => EnvOutcome::NewState(s).into(),
                        Err(e) => EnvResponse {
                            status: EnvStatus::Error,
                            payload: e.to_string(),
                        },
                    },
                    EnvOp::Apply => {
                        if !delay.is_zero() {
                            thread::sleep(delay);
                        }
                        let state = ProofState::new(req.state.unwrap_or_default());
                        match env.apply(&state, req.tactic.as_deref().unwrap_or_default(), Duration::MAX) {
                            Ok(o) => o.into(),
                            Err(e) => EnvResponse {
                                status: EnvStatus::Error,
                                payload: e.to_string(),
                            },
                        }
                    }
                },
            };
            Some(serde_json::to_string(&reply).expect("response serializes"))
        }),
    )
}
