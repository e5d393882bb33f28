//! HTTP front end for an [`Oracle`].
//!
//! | method | path               | parameters                                  |
//! |--------|--------------------|---------------------------------------------|
//! | GET    | `/query/{kind}`    | `fn`/`file`/`subject`, `excluded`, `mode`, `target`, `limit`, `render` |
//! | GET    | `/stats`           | `render`                                    |
//! | POST   | `/admin/ingest`    | `path`, `mode` (`strict`/`skip`)            |
//! | POST   | `/admin/snapshot`  | `action` (`save`/`load`), `path`            |
//!
//! Query bodies use the structured or HTML rendering. Errors are a single
//! `error <message>` line with a 4xx/5xx status; the connection stays usable.

use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;

use super::{Oracle, QueryError, QueryRequest, Render};
use crate::ingest::IngestMode;

type Params = Query<Vec<(String, String)>>;

pub fn router(oracle: Arc<Oracle>) -> Router {
    Router::new()
        .route("/query/{kind}", get(query))
        .route("/stats", get(stats))
        .route("/admin/ingest", post(admin_ingest))
        .route("/admin/snapshot", post(admin_snapshot))
        .with_state(oracle)
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    let body = format!("error {message}\n");
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

fn text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

async fn run_query(oracle: Arc<Oracle>, kind: String, params: Vec<(String, String)>) -> Response {
    let req = match QueryRequest::from_params(&kind, params.iter().map(|(k, v)| (k.as_str(), v.as_str()))) {
        Ok(req) => req,
        Err(e @ QueryError::UnknownKind(_)) => return error(StatusCode::NOT_FOUND, e),
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let render = req.render;
    let outcome = tokio::task::spawn_blocking(move || oracle.handle(&req).map(|r| r.render())).await;
    match outcome {
        Ok(Ok(body)) => {
            let content_type = match render {
                Render::Structured => "text/plain; charset=utf-8",
                Render::Html => "text/html; charset=utf-8",
            };
            ([(header::CONTENT_TYPE, content_type)], body).into_response()
        }
        Ok(Err(e)) => error(StatusCode::BAD_REQUEST, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn query(State(oracle): State<Arc<Oracle>>, Path(kind): Path<String>, Query(params): Params) -> Response {
    run_query(oracle, kind, params).await
}

async fn stats(State(oracle): State<Arc<Oracle>>, Query(params): Params) -> Response {
    run_query(oracle, "stats".to_owned(), params).await
}

fn param<'a>(params: &'a [(String, String)], key: &str) -> Option<&'a str> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

async fn admin_ingest(State(oracle): State<Arc<Oracle>>, Query(params): Params) -> Response {
    let Some(path) = param(&params, "path").map(PathBuf::from) else {
        return error(StatusCode::BAD_REQUEST, "missing parameter `path`");
    };
    let mode = match param(&params, "mode").map(str::parse::<IngestMode>).transpose() {
        Ok(mode) => mode.unwrap_or_default(),
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    match tokio::task::spawn_blocking(move || oracle.ingest(&path, mode)).await {
        Ok(Ok(report)) => text(format!("{report}\n")),
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn admin_snapshot(State(oracle): State<Arc<Oracle>>, Query(params): Params) -> Response {
    let Some(path) = param(&params, "path").map(PathBuf::from) else {
        return error(StatusCode::BAD_REQUEST, "missing parameter `path`");
    };
    let action = param(&params, "action").unwrap_or("save").to_owned();
    let outcome = tokio::task::spawn_blocking(move || match action.as_str() {
        "save" => oracle.save_snapshot(&path).map(|()| format!("saved {}\n", path.display())),
        "load" => oracle.load_snapshot(&path).map(|s| {
            format!(
                "loaded {} functions {} edges version {}\n",
                s.function_count, s.edge_count, s.version
            )
        }),
        other => Ok(format!("error unknown action `{other}`\n")),
    })
    .await;
    match outcome {
        Ok(Ok(body)) if body.starts_with("error ") => {
            (StatusCode::BAD_REQUEST, body).into_response()
        }
        Ok(Ok(body)) => text(body),
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    oracle: Arc<Oracle>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(oracle))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `addr` and serves until Ctrl-C.
pub fn run(oracle: Arc<Oracle>, addr: SocketAddr) -> io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on {}", listener.local_addr()?);
        serve(oracle, listener, async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await
    })
}

/// A server running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, waits for in-flight requests, and joins the thread.
    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn(oracle: Arc<Oracle>, addr: SocketAddr) -> io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("cgoracle-server".into())
        .spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                serve(oracle, listener, async {
                    let _ = stopped.await;
                })
                .await
            })
        })?;
    Ok(ServerHandle {
        addr,
        stop: Some(stop),
        thread: Some(thread),
    })
}
