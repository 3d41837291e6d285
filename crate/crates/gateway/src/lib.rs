//! Network edge of the relay: a WebSocket participant channel at `/ws` and an
//! administrative HTTP API at `/admin/v1`.

pub mod admin;
pub mod config;
pub mod hub;
pub mod protocol;
mod ws;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::routing::get;
use axum::Router;
use relaylab_core::Platform;
use tokio::net::TcpListener;

pub use config::ServerConfig;
pub use hub::Hub;
pub use protocol::{Author, ClientFrame, ServerFrame};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] relaylab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct AppState {
    pub platform: Arc<Platform>,
    pub hub: Arc<Hub>,
    pub admin_token: Arc<str>,
    pub heartbeat: Duration,
    dispatch: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(platform: Arc<Platform>, admin_token: impl Into<Arc<str>>, heartbeat: Duration) -> Self {
        Self {
            platform,
            hub: Arc::new(Hub::default()),
            admin_token: admin_token.into(),
            heartbeat,
            dispatch: Arc::new(Mutex::new(())),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ws", get(ws::upgrade))
        .nest("/admin/v1", admin::routes(state.clone()))
        .with_state(state)
}

/// A bound but not yet running server.
pub struct Server {
    listener: TcpListener,
    state: AppState,
}

impl Server {
    pub async fn bind(config: &ServerConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let path = config.storage.path.clone();
        let platform = tokio::task::spawn_blocking(move || Platform::open(path))
            .await
            .map_err(std::io::Error::other)??;
        let listener = TcpListener::bind(&config.listen.addr).await?;
        let state = AppState::new(Arc::new(platform), config.admin.token.as_str(), config.heartbeat_interval());
        Ok(Self { listener, state })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> &AppState {
        &self.state
    }

    pub async fn run(self) -> std::io::Result<()> {
        axum::serve(self.listener, router(self.state)).await
    }
}
