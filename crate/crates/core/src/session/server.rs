//! Socket front end for a [`Session`].
//!
//! One listener accepts two transports on the same port: raw
//! newline-delimited JSON over TCP, and WebSocket (detected by an HTTP
//! `GET` request line) carrying one JSON object per text frame. Every
//! client receives a snapshot on connect, then the live delta stream.
//!
//! The session sits behind one mutex. Ticking, command handling and
//! outbox routing all happen while holding it, so each client sees deltas
//! in exactly the order the kernel produced them.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use tungstenite::Message;

use super::{ClientId, Outgoing, ServerEvent, Session, Target};

const IDLE_POLL: Duration = Duration::from_millis(10);
const WS_POLL: Duration = Duration::from_millis(5);
const SNIFF_WINDOW: Duration = Duration::from_millis(200);

type Clients = Arc<Mutex<BTreeMap<ClientId, Sender<String>>>>;

struct Shared {
    session: Mutex<Session>,
    clients: Clients,
    stop: AtomicBool,
    next_client: AtomicU64,
    /// Set once the session auto-paused at its run limit.
    finished: AtomicBool,
    conns: Mutex<Vec<TcpStream>>,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn route(&self, outgoing: Vec<Outgoing>) {
        if outgoing.is_empty() {
            return;
        }
        let clients = self.clients.lock().unwrap_or_else(|p| p.into_inner());
        for Outgoing { target, event } in outgoing {
            let line = event.to_line();
            match target {
                Target::All => {
                    for tx in clients.values() {
                        let _ = tx.send(line.clone());
                    }
                }
                Target::Client(id) => {
                    if let Some(tx) = clients.get(&id) {
                        let _ = tx.send(line);
                    }
                }
            }
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Runs `f` with the session locked, then routes whatever it emitted.
    pub fn with_session<R>(&self, f: impl FnOnce(&mut Session) -> R) -> R {
        let mut session = self.shared.lock();
        let r = f(&mut session);
        let out = session.take_outbox();
        self.shared.route(out);
        r
    }

    /// Whether the session reached its run limit.
    pub fn finished(&self) -> bool {
        self.shared.finished.load(Ordering::SeqCst)
    }

    /// Blocks until the run limit is reached.
    pub fn wait_finished(&self) {
        while !self.finished() && !self.shared.stop.load(Ordering::SeqCst) {
            thread::sleep(IDLE_POLL);
        }
    }

    /// Stops the loop, disconnects every client and flushes the session.
    pub fn shutdown(mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // unblock accept()
        let _ = TcpStream::connect(self.addr);
        for conn in self
            .shared
            .conns
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .drain(..)
        {
            let _ = conn.shutdown(Shutdown::Both);
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        if let Err(e) = self.shared.lock().flush() {
            warn!("flush failed: {e}");
        }
    }
}

/// Starts serving `session` on `addr`. The simulation loop runs on its own
/// thread, ticking at the session's rate whenever it is not paused.
pub fn serve(session: Session, addr: impl ToSocketAddrs) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let shared = Arc::new(Shared {
        session: Mutex::new(session),
        clients: Arc::default(),
        stop: AtomicBool::new(false),
        next_client: AtomicU64::new(1),
        finished: AtomicBool::new(false),
        conns: Mutex::default(),
    });
    info!("listening on {local}");

    let loop_shared = shared.clone();
    let sim_thread = thread::Builder::new()
        .name("sim-loop".into())
        .spawn(move || sim_loop(&loop_shared))?;

    let accept_shared = shared.clone();
    let accept_thread = thread::Builder::new()
        .name("accept".into())
        .spawn(move || {
            for stream in listener.incoming() {
                if accept_shared.stop.load(Ordering::SeqCst) {
                    break;
                }
                match stream {
                    Ok(stream) => {
                        let s = accept_shared.clone();
                        let _ = thread::Builder::new()
                            .name("client".into())
                            .spawn(move || handle_connection(&s, stream));
                    }
                    Err(e) => warn!("accept failed: {e}"),
                }
            }
        })?;

    Ok(ServerHandle {
        addr: local,
        shared,
        threads: vec![sim_thread, accept_thread],
    })
}

fn sim_loop(shared: &Shared) {
    let mut next_deadline = Instant::now();
    while !shared.stop.load(Ordering::SeqCst) {
        let (ticked, rate) = {
            let mut session = shared.lock();
            let ticked = if session.is_paused() {
                session.apply_pending();
                false
            } else {
                session.run_once()
            };
            if session.is_paused()
                && session
                    .run_limit()
                    .is_some_and(|l| session.current_time() >= l)
            {
                shared.finished.store(true, Ordering::SeqCst);
            }
            if let Err(e) = session.flush() {
                warn!("flush failed: {e}");
            }
            let out = session.take_outbox();
            shared.route(out);
            (ticked, session.tick_rate())
        };
        if !ticked {
            thread::sleep(IDLE_POLL);
            next_deadline = Instant::now();
        } else if rate > 0.0 {
            next_deadline += Duration::from_secs_f64(1.0 / rate);
            let now = Instant::now();
            if next_deadline > now {
                thread::sleep(next_deadline - now);
            } else {
                next_deadline = now;
            }
        }
    }
}

/// Registers a client and queues its initial snapshot atomically with
/// respect to the delta stream.
fn register(shared: &Shared) -> (ClientId, Receiver<String>) {
    let id = shared.next_client.fetch_add(1, Ordering::SeqCst);
    let (tx, rx) = mpsc::channel();
    let session = shared.lock();
    let _ = tx.send(ServerEvent::Snapshot(session.snapshot()).to_line());
    shared
        .clients
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(id, tx);
    drop(session);
    debug!("client {id} connected");
    (id, rx)
}

fn unregister(shared: &Shared, id: ClientId) {
    shared
        .clients
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .remove(&id);
    debug!("client {id} disconnected");
}

fn handle_line(shared: &Shared, id: ClientId, line: &str) {
    let mut session = shared.lock();
    session.handle_line(Some(id), line);
    let out = session.take_outbox();
    shared.route(out);
}

fn handle_connection(shared: &Shared, stream: TcpStream) {
    if shared.stop.load(Ordering::SeqCst) {
        return;
    }
    if let Ok(clone) = stream.try_clone() {
        shared
            .conns
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push(clone);
    }
    let is_ws = sniff_websocket(&stream);
    let result = if is_ws {
        serve_websocket(shared, stream)
    } else {
        serve_ndjson(shared, stream)
    };
    if let Err(e) = result {
        debug!("connection closed: {e}");
    }
}

/// Whether the client opened with an HTTP request line. A client that stays
/// silent past the sniff window is taken to be a plain NDJSON listener.
fn sniff_websocket(stream: &TcpStream) -> bool {
    let deadline = Instant::now() + SNIFF_WINDOW;
    let mut head = [0u8; 4];
    let is_ws = loop {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() || stream.set_read_timeout(Some(left)).is_err() {
            break false;
        }
        match stream.peek(&mut head) {
            Ok(4) => break &head == b"GET ",
            Ok(n) if n > 0 && b"GET "[..n] == head[..n] => thread::sleep(Duration::from_millis(1)),
            _ => break false,
        }
    };
    let _ = stream.set_read_timeout(None);
    is_ws
}

fn serve_ndjson(shared: &Shared, stream: TcpStream) -> io::Result<()> {
    let (id, rx) = register(shared);
    let mut writer = stream.try_clone()?;
    let writer_thread = thread::spawn(move || {
        for line in rx {
            if writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
    });
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        match line {
            Ok(line) => handle_line(shared, id, &line),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                // not UTF-8: report and keep the connection
                let mut session = shared.lock();
                let time = session.current_time();
                shared.route(vec![Outgoing {
                    target: Target::Client(id),
                    event: ServerEvent::error(time, "malformedCommand", e.to_string()),
                }]);
                drop(session.take_outbox());
            }
            Err(_) => break,
        }
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
    }
    unregister(shared, id);
    let _ = writer_thread.join();
    Ok(())
}

fn serve_websocket(shared: &Shared, stream: TcpStream) -> io::Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    ws.get_mut().set_read_timeout(Some(WS_POLL))?;
    let (id, rx) = register(shared);
    let result = (|| -> Result<(), tungstenite::Error> {
        while !shared.stop.load(Ordering::SeqCst) {
            match ws.read() {
                Ok(Message::Text(text)) => {
                    for line in text.lines() {
                        handle_line(shared, id, line);
                    }
                }
                Ok(Message::Close(_)) => break,
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                    ) => {}
                Err(e) => return Err(e),
            }
            for line in rx.try_iter() {
                ws.send(Message::text(line))?;
            }
        }
        Ok(())
    })();
    unregister(shared, id);
    result.map_err(|e| io::Error::other(e.to_string()))
}
