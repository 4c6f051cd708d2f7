//! Socket front end. One session loop owns the world; connection threads only
//! move frames in and out. Plain TCP clients speak newline-delimited JSON;
//! browsers upgrade to WebSocket and get one JSON frame per text message.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::Message;

use crate::protocol::{encode, ServerMessage};
use crate::session::Session;

const POLL: Duration = Duration::from_millis(20);

enum Inbound {
    Connected { id: u64, out: Sender<String> },
    Frame { id: u64, text: String },
    Closed { id: u64 },
}

/// A server running on background threads.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn stop(mut self) -> io::Result<()> {
        self.shutdown.store(true, Ordering::SeqCst);
        match self.thread.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(io::Error::other("server thread panicked")),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn(listener: TcpListener, session: Session) -> io::Result<ServerHandle> {
    let addr = listener.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let flag = shutdown.clone();
    let thread = thread::spawn(move || serve(listener, session, flag));
    Ok(ServerHandle {
        addr,
        shutdown,
        thread: Some(thread),
    })
}

/// Runs until `shutdown` is set. Ticks the session every `tick_ms` of wall
/// time while a client is connected.
pub fn serve(
    listener: TcpListener,
    mut session: Session,
    shutdown: Arc<AtomicBool>,
) -> io::Result<()> {
    let (in_tx, in_rx) = mpsc::channel();
    let acceptor = {
        let shutdown = shutdown.clone();
        thread::spawn(move || accept_loop(listener, in_tx, shutdown))
    };
    let result = session_loop(&mut session, in_rx, &shutdown);
    shutdown.store(true, Ordering::SeqCst);
    let _ = acceptor.join();
    result
}

fn session_loop(
    session: &mut Session,
    inbox: Receiver<Inbound>,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    let period = Duration::from_millis(session.tick_ms());
    let mut next = Instant::now() + period;
    let mut client: Option<(u64, Sender<String>)> = None;
    let send = |client: &mut Option<(u64, Sender<String>)>, msgs: Vec<ServerMessage>| {
        if let Some((_, out)) = client {
            for m in msgs {
                if out.send(encode(&m)).is_err() {
                    break;
                }
            }
        }
    };
    while !shutdown.load(Ordering::SeqCst) {
        let wait = next.saturating_duration_since(Instant::now()).min(POLL);
        match inbox.recv_timeout(wait) {
            Ok(Inbound::Connected { id, out }) => {
                session.connect();
                client = Some((id, out));
            }
            Ok(Inbound::Frame { id, text }) => {
                if client.as_ref().is_some_and(|(c, _)| *c == id) {
                    let replies = session.handle_text(&text);
                    send(&mut client, replies);
                }
            }
            Ok(Inbound::Closed { id }) => {
                if client.as_ref().is_some_and(|(c, _)| *c == id) {
                    session.disconnect();
                    client = None;
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        let now = Instant::now();
        if now >= next {
            next += period;
            if next < now {
                // Fell behind; resynchronise instead of bursting.
                next = now + period;
            }
            if client.is_some() {
                let msgs = session.tick().map_err(io::Error::other)?;
                send(&mut client, msgs);
            }
        }
    }
    Ok(())
}

fn accept_loop(listener: TcpListener, inbox: Sender<Inbound>, shutdown: Arc<AtomicBool>) {
    if listener.set_nonblocking(true).is_err() {
        return;
    }
    let active = Arc::new(AtomicBool::new(false));
    let ids = AtomicU64::new(0);
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                if stream.set_nonblocking(false).is_err() {
                    continue;
                }
                if active.swap(true, Ordering::SeqCst) {
                    thread::spawn(move || refuse(stream));
                    continue;
                }
                let id = ids.fetch_add(1, Ordering::SeqCst);
                let (inbox, active, shutdown) = (inbox.clone(), active.clone(), shutdown.clone());
                thread::spawn(move || {
                    let _ = connection(stream, id, &inbox, &shutdown);
                    let _ = inbox.send(Inbound::Closed { id });
                    active.store(false, Ordering::SeqCst);
                });
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(_) => thread::sleep(POLL),
        }
    }
}

/// Browsers open with an HTTP upgrade request; anything else, including a
/// client that stays silent, is a line client.
fn is_websocket(stream: &TcpStream) -> io::Result<bool> {
    let deadline = Instant::now() + Duration::from_millis(250);
    stream.set_read_timeout(Some(POLL))?;
    let mut buf = [0u8; 4];
    loop {
        match stream.peek(&mut buf) {
            Ok(0) => return Ok(false),
            Ok(n) if n == buf.len() || !b"GET "[..].starts_with(&buf[..n]) => {
                return Ok(&buf[..] == b"GET ")
            }
            Ok(_) => {}
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(e) => return Err(e),
        }
        if Instant::now() >= deadline {
            return Ok(false);
        }
        thread::sleep(Duration::from_millis(5));
    }
}

const BUSY: &str = "another control session is already active";

fn refuse(stream: TcpStream) {
    let frame = encode(&ServerMessage::error(BUSY));
    if is_websocket(&stream).unwrap_or(false) {
        if let Ok(mut ws) = tungstenite::accept(stream) {
            let _ = ws.send(Message::text(frame));
            let _ = ws.close(None);
            let _ = ws.flush();
        }
    } else {
        let mut stream = stream;
        let _ = writeln!(stream, "{frame}");
    }
}

fn connection(
    stream: TcpStream,
    id: u64,
    inbox: &Sender<Inbound>,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    let ws = is_websocket(&stream)?;
    let (out_tx, out_rx) = mpsc::channel::<String>();
    if inbox.send(Inbound::Connected { id, out: out_tx }).is_err() {
        return Ok(());
    }
    if ws {
        websocket_connection(stream, id, inbox, out_rx, shutdown)
    } else {
        line_connection(stream, id, inbox, out_rx, shutdown)
    }
}

fn line_connection(
    stream: TcpStream,
    id: u64,
    inbox: &Sender<Inbound>,
    out_rx: Receiver<String>,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let write_thread = thread::spawn(move || {
        for line in out_rx {
            if writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Both);
    });
    stream.set_read_timeout(Some(POLL))?;
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while !shutdown.load(Ordering::SeqCst) {
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {
                let text = line.trim_end_matches(['\r', '\n']);
                if !text.trim().is_empty()
                    && inbox
                        .send(Inbound::Frame {
                            id,
                            text: text.to_string(),
                        })
                        .is_err()
                {
                    break;
                }
                line.clear();
            }
            // A timeout keeps any partial line in `line`.
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(_) => break,
        }
    }
    let _ = reader.get_ref().shutdown(std::net::Shutdown::Both);
    let _ = inbox.send(Inbound::Closed { id });
    let _ = write_thread.join();
    Ok(())
}

fn websocket_connection(
    stream: TcpStream,
    id: u64,
    inbox: &Sender<Inbound>,
    out_rx: Receiver<String>,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    stream.set_read_timeout(None)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    ws.get_mut().set_read_timeout(Some(POLL))?;
    while !shutdown.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                    let _ = inbox.send(Inbound::Frame {
                        id,
                        text: line.to_string(),
                    });
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(_) => break,
        }
        loop {
            match out_rx.try_recv() {
                Ok(frame) => {
                    if ws.send(Message::text(frame)).is_err() {
                        return Ok(());
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return Ok(()),
            }
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}
