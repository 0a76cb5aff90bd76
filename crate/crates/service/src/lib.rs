//! HTTP+JSON API over a posiqueue [`Engine`](posiqueue::Engine).

mod api;
mod config;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use posiqueue::engine::{SharedClock, SystemClock};

pub use api::{router, status_for, ApiError, AppState};
pub use config::{ConfigError, ServiceConfig, CONFIG_ENV};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] posiqueue::Error),
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// Validated config plus a ready engine with the log replayed.
pub fn app_state(config: &ServiceConfig, clock: SharedClock) -> Result<Arc<AppState>, ServeError> {
    config.validate()?;
    let engine = config.build_engine()?;
    Ok(Arc::new(AppState::new(
        engine,
        clock,
        config.moderator.clone(),
        config.auth_token.clone(),
    )))
}

/// Serves until `shutdown` resolves. `on_ready` receives the bound address.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<(), ServeError> {
    let state = app_state(&config, Arc::new(SystemClock))?;
    let app = router(state, &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(config.addr()?).await?;
    on_ready(listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
