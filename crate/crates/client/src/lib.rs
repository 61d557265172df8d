//! Thin async client for the ccb HTTP service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), ccb_client::ClientError> {
//! let client = ccb_client::Client::new("http://127.0.0.1:8080");
//! let v = client.version().await?;
//! println!("service {} accepts tau in {}", v.version, v.tau_domain);
//! # Ok(())
//! # }
//! ```

use ccb_api::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use ccb_api::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach service: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{}", .body.message)]
    Api { status: u16, body: ErrorBody },
    #[error("unexpected reply (status {status}): {detail}")]
    Decode { status: u16, detail: String },
}

impl ClientError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ClientError::Api { body, .. } => body.kind,
            ClientError::Transport(_) | ClientError::Decode { .. } => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_http(base_url, reqwest::Client::new())
    }

    pub fn with_http(base_url: impl Into<String>, http: reqwest::Client) -> Self {
        Client {
            base: base_url.into().trim_end_matches('/').to_string(),
            http,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode {
                status: status.as_u16(),
                detail: e.to_string(),
            });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Api {
                status: status.as_u16(),
                body,
            }),
            Err(_) => Err(ClientError::Decode {
                status: status.as_u16(),
                detail: String::from_utf8_lossy(&bytes).into_owned(),
            }),
        }
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self.http.get(format!("{}{path}", self.base)).send().await?;
        Self::decode(resp).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        self.get::<serde_json::Value>("/health").await.map(|_| ())
    }

    pub async fn version(&self) -> Result<VersionResponse, ClientError> {
        self.get("/v1/version").await
    }

    pub async fn partition(
        &self,
        req: &PartitionRequest,
    ) -> Result<PartitionResponse, ClientError> {
        self.post("/v1/partition", req).await
    }

    pub async fn sweep(&self, req: &SweepRequest) -> Result<SweepResponse, ClientError> {
        self.post("/v1/sweep", req).await
    }

    pub async fn embed(&self, req: &EmbedRequest) -> Result<EmbedResponse, ClientError> {
        self.post("/v1/embed", req).await
    }

    pub async fn cost(&self, req: &CostRequest) -> Result<CostResponse, ClientError> {
        self.post("/v1/cost", req).await
    }

    pub async fn segment(&self, req: &SegmentRequest) -> Result<SegmentResponse, ClientError> {
        self.post("/v1/segment", req).await
    }

    pub async fn eval(&self, req: &EvalRequest) -> Result<EvalResponse, ClientError> {
        self.post("/v1/eval", req).await
    }
}
