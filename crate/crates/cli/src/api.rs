//! Typed client for the admin HTTP API.

use relaylab_core::{
    ConversationId, ConversationSummary, Experiment, ExperimentConfig, ExperimentId, IntegrityReport,
    PairingSchedule, ParticipantId, Registration,
};
use relaylab_gateway::admin::{ErrorBody, RoundResult};
use reqwest::{Method, RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct AdminClient {
    base: String,
    token: String,
    http: reqwest::Client,
}

impl AdminClient {
    pub fn new(server: &str, token: &str) -> Self {
        Self {
            base: server.trim_end_matches('/').to_owned(),
            token: token.to_owned(),
            http: reqwest::Client::new(),
        }
    }

    /// `ws://` form of the server URL plus the participant channel path.
    pub fn ws_url(&self) -> String {
        let rest = self
            .base
            .strip_prefix("https://")
            .map(|r| format!("wss://{r}"))
            .or_else(|| self.base.strip_prefix("http://").map(|r| format!("ws://{r}")))
            .unwrap_or_else(|| format!("ws://{}", self.base));
        format!("{rest}/ws")
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http
            .request(method, format!("{}/admin/v1{path}", self.base))
            .bearer_auth(&self.token)
    }

    async fn check(response: Response) -> CliResult<Response> {
        let status = response.status();
        if status.is_success() {
            return Ok(response);
        }
        let text = response.text().await.unwrap_or_default();
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => CliError::Api {
                status: status.as_u16(),
                code: body.code,
                message: body.message,
            },
            Err(_) => CliError::Api {
                status: status.as_u16(),
                code: "HTTP".into(),
                message: text,
            },
        })
    }

    async fn json<T: DeserializeOwned>(&self, builder: RequestBuilder) -> CliResult<T> {
        let response = Self::check(builder.send().await?).await?;
        Ok(response.json().await?)
    }

    pub async fn create_experiment(&self, config: &ExperimentConfig) -> CliResult<Experiment> {
        self.json(self.request(Method::POST, "/experiments").json(config)).await
    }

    pub async fn experiment(&self, id: &ExperimentId) -> CliResult<Experiment> {
        self.json(self.request(Method::GET, &format!("/experiments/{id}"))).await
    }

    pub async fn register(&self, id: &ExperimentId, display_name: &str) -> CliResult<Registration> {
        let body = json!({ "display_name": display_name });
        self.json(self.request(Method::POST, &format!("/experiments/{id}/participants")).json(&body))
            .await
    }

    pub async fn generate_schedule(&self, id: &ExperimentId) -> CliResult<PairingSchedule<ParticipantId>> {
        self.json(self.request(Method::POST, &format!("/experiments/{id}/schedule"))).await
    }

    pub async fn start_round(&self, id: &ExperimentId, round: usize) -> CliResult<RoundResult> {
        self.json(self.request(Method::POST, &format!("/experiments/{id}/rounds/{round}/start")))
            .await
    }

    pub async fn close_round(&self, id: &ExperimentId, round: usize) -> CliResult<RoundResult> {
        self.json(self.request(Method::POST, &format!("/experiments/{id}/rounds/{round}/close")))
            .await
    }

    pub async fn close_conversation(&self, id: &ConversationId) -> CliResult<serde_json::Value> {
        self.json(self.request(Method::POST, &format!("/conversations/{id}/close"))).await
    }

    pub async fn conversations(&self, id: &ExperimentId) -> CliResult<Vec<ConversationSummary>> {
        self.json(self.request(Method::GET, &format!("/experiments/{id}/conversations"))).await
    }

    pub async fn export(&self, id: &ExperimentId, redact: bool) -> CliResult<Vec<u8>> {
        let builder = self.request(Method::GET, &format!("/experiments/{id}/export?redact={redact}"));
        let response = Self::check(builder.send().await?).await?;
        Ok(response.bytes().await?.to_vec())
    }

    pub async fn integrity(&self, id: &ExperimentId) -> CliResult<IntegrityReport> {
        self.json(self.request(Method::GET, &format!("/experiments/{id}/integrity"))).await
    }
}
