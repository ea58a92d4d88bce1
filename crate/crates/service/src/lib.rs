//! HTTP service for the concept deletion game and the optimization trigger.

mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use routes::{router, ErrorBody};
pub use state::{
    display_label, AppState, BoardView, ConceptRef, CourseSummary, DeletePayload, EpochRecord, LeaderboardRow,
    OptimizeGuard, OptimizeSummary, ServiceConfig, ServiceError, VideoBoards,
};

/// Binds `addr`; port 0 picks a free port, read it back from the listener.
pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await
}
