use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::sync::mpsc;

use crate::Hub;

pub(crate) fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/step/{file}", get(step_svg))
        .with_state(hub)
}

async fn step_svg(State(hub): State<Arc<Hub>>, Path(file): Path<String>) -> Response {
    let svg = file
        .strip_suffix(".svg")
        .filter(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|k| k.parse::<usize>().ok())
        .and_then(|k| hub.bundle.svg(k));
    match svg {
        Some(svg) => ([(header::CONTENT_TYPE, "image/svg+xml")], svg.to_owned()).into_response(),
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn upgrade(State(hub): State<Arc<Hub>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_client(hub, socket))
}

/// Every text frame carries one line, inbound and outbound.
async fn ws_client(hub: Arc<Hub>, mut socket: WebSocket) {
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let mut conn = hub.connect(tx);
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let text = text.as_str();
                    conn.send(text.strip_suffix('\n').unwrap_or(text).to_owned());
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
            outgoing = rx.recv() => match outgoing {
                Some(line) => {
                    let frame = line.strip_suffix('\n').unwrap_or(&line).to_owned();
                    if socket.send(Message::Text(frame.into())).await.is_err() {
                        break;
                    }
                }
                None => break,
            },
        }
    }
}
