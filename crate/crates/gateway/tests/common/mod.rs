#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use relaylab_gateway::{ClientFrame, Server, ServerConfig, ServerFrame};
use serde_json::{json, Value};
use tempfile::TempDir;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub const ADMIN: &str = "admin-secret";

pub struct TestServer {
    pub addr: SocketAddr,
    pub http: reqwest::Client,
    _dir: TempDir,
}

pub async fn start(heartbeat_secs: u64) -> TestServer {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new("127.0.0.1:0", dir.path().join("relay.db"), ADMIN);
    config.heartbeat.seconds = heartbeat_secs;
    let server = Server::bind(&config).await.unwrap();
    let addr = server.local_addr().unwrap();
    tokio::spawn(server.run());
    TestServer {
        addr,
        http: reqwest::Client::new(),
        _dir: dir,
    }
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}/admin/v1{path}", self.addr)
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let response = self
            .http
            .post(self.url(path))
            .bearer_auth(ADMIN)
            .json(&body)
            .send()
            .await
            .unwrap();
        let status = response.status().as_u16();
        (status, response.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let response = self.http.get(self.url(path)).bearer_auth(ADMIN).send().await.unwrap();
        let status = response.status().as_u16();
        (status, response.json().await.unwrap_or(Value::Null))
    }

    pub async fn get_text(&self, path: &str) -> (u16, String) {
        let response = self.http.get(self.url(path)).bearer_auth(ADMIN).send().await.unwrap();
        (response.status().as_u16(), response.text().await.unwrap())
    }

    /// Creates a two-person swap experiment, starts round 0 and returns
    /// (experiment id, tokens by name, participant ids by name, conversation id).
    pub async fn swap_dyad(&self, name: &str) -> Dyad {
        let (status, exp) = self
            .post(
                "/experiments",
                json!({
                    "name": name,
                    "rounds": 1,
                    "task": {"prompt_text": "Solve the riddle together.", "terms": ["doctor", "pilot"]},
                    "conditions": [{"target": "second", "transform": {"kind": "lexicon_swap", "pairs": [["doctor", "pilot"]]}}]
                }),
            )
            .await;
        assert_eq!(status, 201, "{exp}");
        let id = exp["id"].as_str().unwrap().to_owned();
        let mut people = Vec::new();
        for display_name in ["Alice", "Bob"] {
            let (status, reg) = self
                .post(&format!("/experiments/{id}/participants"), json!({ "display_name": display_name }))
                .await;
            assert_eq!(status, 201);
            people.push((
                reg["participant"]["id"].as_str().unwrap().to_owned(),
                reg["token"].as_str().unwrap().to_owned(),
            ));
        }
        assert_eq!(self.post(&format!("/experiments/{id}/schedule"), json!({})).await.0, 200);
        let (status, round) = self.post(&format!("/experiments/{id}/rounds/0/start"), json!({})).await;
        assert_eq!(status, 200, "{round}");
        Dyad {
            experiment: id,
            a: people[0].clone(),
            b: people[1].clone(),
            conversation: round["conversation_ids"][0].as_str().unwrap().to_owned(),
        }
    }

    pub async fn connect(&self) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws", self.addr))
            .await
            .unwrap();
        Client { ws }
    }
}

pub struct Dyad {
    pub experiment: String,
    /// (participant id, token)
    pub a: (String, String),
    pub b: (String, String),
    pub conversation: String,
}

pub struct Client {
    pub ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Client {
    pub async fn send(&mut self, frame: &ClientFrame) {
        self.ws
            .send(Message::Text(serde_json::to_string(frame).unwrap().into()))
            .await
            .unwrap();
    }

    pub async fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::Text(text.to_owned().into())).await.unwrap();
    }

    /// Next server frame, or `None` when the socket closed or nothing arrived in time.
    pub async fn recv_within(&mut self, wait: Duration) -> Option<ServerFrame> {
        loop {
            match tokio::time::timeout(wait, self.ws.next()).await {
                Ok(Some(Ok(Message::Text(text)))) => return Some(serde_json::from_str(&text).unwrap()),
                Ok(Some(Ok(Message::Close(_)))) | Ok(None) | Ok(Some(Err(_))) | Err(_) => return None,
                Ok(Some(Ok(_))) => continue,
            }
        }
    }

    /// True when the server closes the socket within `wait`; text frames are discarded.
    pub async fn closed_within(&mut self, wait: Duration) -> bool {
        let deadline = tokio::time::Instant::now() + wait;
        loop {
            match tokio::time::timeout_at(deadline, self.ws.next()).await {
                Err(_) => return false,
                Ok(Some(Ok(Message::Close(_)))) | Ok(None) | Ok(Some(Err(_))) => return true,
                Ok(Some(Ok(_))) => continue,
            }
        }
    }

    pub async fn recv(&mut self) -> ServerFrame {
        self.recv_within(Duration::from_secs(5)).await.expect("expected a frame")
    }

    pub async fn auth(&mut self, token: &str) -> ServerFrame {
        self.send(&ClientFrame::Auth { token: token.into() }).await;
        self.recv().await
    }
}
