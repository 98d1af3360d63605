use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use mbtrain_core::protocol::log::{LogRecord, RecordedSession};
use mbtrain_core::protocol::{encode, ClientId, Outcome, Recipient};
use tokio::sync::mpsc::{self, UnboundedSender};
use tokio::time::{interval, Instant, MissedTickBehavior};

use crate::LessonBundle;

const TICK: Duration = Duration::from_millis(100);

enum Command {
    Attach(ClientId, UnboundedSender<String>),
    Line(ClientId, String),
    Detach(ClientId),
}

#[derive(Clone)]
struct SessionLink {
    tx: UnboundedSender<Command>,
    accepting: Arc<AtomicBool>,
}

struct Registry {
    next_session: u64,
    next_client: u64,
    open: Option<SessionLink>,
}

/// Routes connections to sessions and owns the shared log.
pub struct Hub {
    pub bundle: Arc<LessonBundle>,
    time_limit: Option<u64>,
    log: Mutex<Option<BufWriter<File>>>,
    registry: Mutex<Registry>,
}

/// One client connection. Lines go to the session it joined on its first
/// line; dropping it detaches the client (an implicit `BYE`).
pub struct Connection {
    hub: Arc<Hub>,
    client: ClientId,
    out: Option<UnboundedSender<String>>,
    link: Option<SessionLink>,
}

impl Connection {
    pub fn client(&self) -> &ClientId {
        &self.client
    }

    pub fn send(&mut self, line: String) {
        if self.link.is_none() {
            let link = self.hub.open_session();
            let out = self.out.take().expect("attached once");
            let _ = link.tx.send(Command::Attach(self.client.clone(), out));
            self.link = Some(link);
        }
        if let Some(link) = &self.link {
            let _ = link.tx.send(Command::Line(self.client.clone(), line));
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(link) = &self.link {
            let _ = link.tx.send(Command::Detach(self.client.clone()));
        }
    }
}

impl Hub {
    pub(crate) fn new(bundle: Arc<LessonBundle>, time_limit: Option<u64>, log: Option<BufWriter<File>>) -> Self {
        Hub {
            bundle,
            time_limit,
            log: Mutex::new(log),
            registry: Mutex::new(Registry {
                next_session: 1,
                next_client: 1,
                open: None,
            }),
        }
    }

    /// Registers a connection whose outbound lines go to `out`.
    pub fn connect(self: &Arc<Self>, out: UnboundedSender<String>) -> Connection {
        let mut reg = self.registry.lock().expect("registry lock");
        let client = ClientId::new(format!("c{}", reg.next_client));
        reg.next_client += 1;
        Connection {
            hub: self.clone(),
            client,
            out: Some(out),
            link: None,
        }
    }

    fn open_session(self: &Arc<Self>) -> SessionLink {
        let mut reg = self.registry.lock().expect("registry lock");
        if let Some(link) = reg.open.as_ref().filter(|l| l.accepting.load(Ordering::SeqCst) && !l.tx.is_closed()) {
            return link.clone();
        }
        let id = format!("s{}", reg.next_session);
        reg.next_session += 1;
        let (tx, rx) = mpsc::unbounded_channel();
        let link = SessionLink {
            tx,
            accepting: Arc::new(AtomicBool::new(true)),
        };
        reg.open = Some(link.clone());
        tokio::spawn(run_session(self.clone(), id, rx, link.accepting.clone()));
        link
    }

    fn write_log(&self, records: Vec<LogRecord>) {
        if records.is_empty() {
            return;
        }
        let mut guard = self.log.lock().expect("log lock");
        if let Some(w) = guard.as_mut() {
            for r in &records {
                let _ = writeln!(w, "{}", r.to_json());
            }
            let _ = w.flush();
        }
    }
}

fn deliver(outcome: &Outcome, session: &RecordedSession, outs: &BTreeMap<ClientId, UnboundedSender<String>>) {
    for d in &outcome.deliveries {
        let line = encode(&d.message);
        match &d.to {
            Recipient::Client(c) => {
                if let Some(tx) = outs.get(c) {
                    let _ = tx.send(line);
                }
            }
            Recipient::All => {
                for c in session.state.clients.keys() {
                    if let Some(tx) = outs.get(c) {
                        let _ = tx.send(line.clone());
                    }
                }
            }
        }
    }
}

async fn run_session(
    hub: Arc<Hub>,
    id: String,
    mut rx: mpsc::UnboundedReceiver<Command>,
    accepting: Arc<AtomicBool>,
) {
    let bundle = hub.bundle.clone();
    let ctx = &bundle.ctx;
    let start = Instant::now();
    let now = || start.elapsed().as_millis() as u64;
    let mut session = RecordedSession::open(&id, ctx, &bundle.model_text, &bundle.lesson_text, hub.time_limit);
    hub.write_log(session.drain());
    let mut outs: BTreeMap<ClientId, UnboundedSender<String>> = BTreeMap::new();
    let mut ticker = interval(TICK);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);

    loop {
        tokio::select! {
            command = rx.recv() => match command {
                None => break,
                Some(Command::Attach(client, tx)) => {
                    outs.insert(client, tx);
                }
                Some(Command::Line(client, line)) => {
                    let outcome = session.input(ctx, now(), &client, &line);
                    deliver(&outcome, &session, &outs);
                }
                Some(Command::Detach(client)) => {
                    if session.state.clients.contains_key(&client) {
                        let outcome = session.input(ctx, now(), &client, "BYE");
                        deliver(&outcome, &session, &outs);
                    }
                    outs.remove(&client);
                }
            },
            _ = ticker.tick() => {
                let outcome = session.tick(now());
                deliver(&outcome, &session, &outs);
            }
        }
        hub.write_log(session.drain());
        if session.is_closed() {
            accepting.store(false, Ordering::SeqCst);
            if outs.is_empty() {
                break;
            }
        }
    }
}
