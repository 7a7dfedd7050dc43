//! HTTP transport for the session protocol.
//!
//! `POST /api` takes one JSON request and answers with one JSON response.
//! Read-only requests share a read lock; everything else is serialized
//! behind the write lock, so a session sees one edit at a time.

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::Router;
use gam_edit::protocol::{self, Request, Response};
use gam_edit::session::Session;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub struct AppState {
    session: RwLock<Session>,
    out: Option<PathBuf>,
}

impl AppState {
    pub fn new(session: Session, out: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            session: RwLock::new(session),
            out,
        })
    }
}

pub fn router(state: Arc<AppState>, ui_dir: Option<&Path>) -> Router {
    let app = Router::new().route("/api", post(api)).with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(no_ui)),
    }
}

async fn no_ui() -> &'static str {
    "gam-edit: no UI bundle configured; POST JSON requests to /api\n"
}

fn json(status: StatusCode, resp: &Response) -> HttpResponse {
    let body = serde_json::to_string(resp).expect("response serializes");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn api(State(state): State<Arc<AppState>>, body: String) -> HttpResponse {
    let req = match serde_json::from_str::<Request>(&body) {
        Ok(r) => r,
        Err(e) => return json(StatusCode::BAD_REQUEST, &Response::error("BadRequest", e.to_string())),
    };
    let resp = tokio::task::spawn_blocking(move || dispatch(&state, req)).await;
    match resp {
        Ok(r) => json(StatusCode::OK, &r),
        Err(e) => json(
            StatusCode::INTERNAL_SERVER_ERROR,
            &Response::error("Internal", e.to_string()),
        ),
    }
}

fn dispatch(state: &AppState, req: Request) -> Response {
    let resp = if req.is_read_only() {
        let session = state.session.read().unwrap_or_else(|p| p.into_inner());
        protocol::query(&session, &req)
    } else {
        let mut session = state.session.write().unwrap_or_else(|p| p.into_inner());
        protocol::handle(&mut session, req)
    };
    if let (Response::Saved { model }, Some(path)) = (&resp, &state.out) {
        if let Err(e) = std::fs::write(path, model) {
            return Response::error("WriteFailed", format!("{}: {e}", path.display()));
        }
    }
    resp
}

/// Binds the local port, turning "address in use" into a readable error.
pub async fn bind(port: u16) -> anyhow::Result<TcpListener> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        io::ErrorKind::AddrInUse => anyhow::anyhow!("port {port} is already in use"),
        _ => anyhow::Error::new(e).context(format!("binding {addr}")),
    })
}

pub async fn serve(listener: TcpListener, app: Router) -> anyhow::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
