//! Network host for lesson sessions.
//!
//! The same line protocol is offered on a raw TCP socket and, on a separate
//! HTTP listener, as WebSocket text frames (`/ws`, one line per frame). The
//! HTTP listener also serves the diagram of every step at `/step/<k>.svg`.
//!
//! New connections join the currently open session; once it ends (every
//! client said `BYE` or the time limit passed) the next connection opens a
//! fresh one. Each session is owned by a single task, so its state machine
//! sees one input at a time.

mod http;
mod hub;

use std::fs::File;
use std::io::{self, BufWriter};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use mbtrain_core::format::{parse_lesson_in, parse_model_in, ParseFault};
use mbtrain_core::procedure::step_annotation;
use mbtrain_core::protocol::SessionContext;
use mbtrain_core::render::{render_svg, RenderSpec};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

pub use hub::Hub;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("{0}")]
    Source(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn faults(list: Vec<ParseFault>) -> ServerError {
    ServerError::Source(list.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
}

/// A parsed lesson with its source texts and pre-rendered step diagrams.
#[derive(Debug)]
pub struct LessonBundle {
    pub ctx: SessionContext,
    pub model_text: String,
    pub lesson_text: String,
    svgs: Vec<String>,
}

impl LessonBundle {
    pub fn load(model_file: &str, model_text: String, lesson_file: &str, lesson_text: String) -> Result<Self, ServerError> {
        let model = parse_model_in(model_file, &model_text).map_err(faults)?;
        let lesson = parse_lesson_in(lesson_file, &lesson_text, &model).map_err(faults)?;
        let ctx = SessionContext::new(lesson, model).map_err(|r| ServerError::Source(r.to_string()))?;
        let svgs = (0..=ctx.step_count())
            .map(|k| {
                let annotation = step_annotation(&ctx.lesson, k).ok();
                let mut spec = RenderSpec::new(&ctx.model, ctx.state(k));
                if let Some(a) = &annotation {
                    spec = spec.with_annotation(a);
                }
                render_svg(&spec).expect("folded states belong to the model")
            })
            .collect();
        Ok(LessonBundle {
            ctx,
            model_text,
            lesson_text,
            svgs,
        })
    }

    /// Diagram of the state after step `k`.
    pub fn svg(&self, k: usize) -> Option<&str> {
        self.svgs.get(k).map(String::as_str)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ServerConfig {
    /// Raw line socket.
    pub listen: Option<SocketAddr>,
    /// WebSocket and SVG endpoint.
    pub http: Option<SocketAddr>,
    pub time_limit: Option<u64>,
    pub log_path: Option<PathBuf>,
}

pub struct Server {
    pub tcp_addr: Option<SocketAddr>,
    pub http_addr: Option<SocketAddr>,
    pub hub: Arc<Hub>,
    tasks: Vec<JoinHandle<()>>,
}

impl Server {
    pub async fn start(bundle: LessonBundle, config: ServerConfig) -> Result<Server, ServerError> {
        let log = match &config.log_path {
            Some(path) => Some(BufWriter::new(File::create(path)?)),
            None => None,
        };
        let hub = Arc::new(Hub::new(Arc::new(bundle), config.time_limit, log));
        let mut tasks = Vec::new();

        let mut tcp_addr = None;
        if let Some(addr) = config.listen {
            let listener = TcpListener::bind(addr).await?;
            tcp_addr = Some(listener.local_addr()?);
            let hub = hub.clone();
            tasks.push(tokio::spawn(async move {
                while let Ok((stream, _)) = listener.accept().await {
                    tokio::spawn(tcp_client(hub.clone(), stream));
                }
            }));
        }

        let mut http_addr = None;
        if let Some(addr) = config.http {
            let listener = TcpListener::bind(addr).await?;
            http_addr = Some(listener.local_addr()?);
            let app = http::router(hub.clone());
            tasks.push(tokio::spawn(async move {
                let _ = axum::serve(listener, app).await;
            }));
        }

        Ok(Server {
            tcp_addr,
            http_addr,
            hub,
            tasks,
        })
    }

    /// Runs until the listeners fail.
    pub async fn wait(self) {
        for task in self.tasks {
            let _ = task.await;
        }
    }

    pub fn shutdown(self) {
        for task in &self.tasks {
            task.abort();
        }
    }
}

async fn tcp_client(hub: Arc<Hub>, stream: TcpStream) {
    let (read, mut write) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(line) = rx.recv().await {
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut conn = hub.connect(tx);
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        conn.send(line);
    }
    drop(conn);
    let _ = writer.await;
}
