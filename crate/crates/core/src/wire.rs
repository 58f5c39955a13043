//! Newline-delimited JSON over TCP: a blocking client with per-call deadlines
//! and a small threaded server used for loopback mocks.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tracing::{debug, warn};

#[derive(Debug)]
pub enum CallError {
    Timeout,
    Transport(String),
}

/// One persistent connection; requests on it are strictly sequential.
///
/// A timed-out call leaves an unread reply on the socket, so the connection
/// is discarded and re-opened on the next call.
#[derive(Debug)]
pub struct LineClient {
    addr: String,
    conn: Mutex<Option<BufReader<TcpStream>>>,
}

impl LineClient {
    pub fn new(addr: impl Into<String>) -> Self {
        LineClient {
            addr: addr.into(),
            conn: Mutex::new(None),
        }
    }

    pub fn addr(&self) -> &str {
        &self.addr
    }

    fn connect(&self, timeout: Duration) -> Result<BufReader<TcpStream>, CallError> {
        let addrs: Vec<SocketAddr> = self
            .addr
            .to_socket_addrs()
            .map_err(|e| CallError::Transport(format!("{}: {e}", self.addr)))?
            .collect();
        let mut last = None;
        for a in addrs {
            match TcpStream::connect_timeout(&a, timeout.max(Duration::from_millis(1))) {
                Ok(s) => {
                    s.set_nodelay(true).ok();
                    return Ok(BufReader::new(s));
                }
                Err(e) => last = Some(e),
            }
        }
        Err(CallError::Transport(match last {
            Some(e) => format!("{}: {e}", self.addr),
            None => format!("{}: no address", self.addr),
        }))
    }

    /// Sends one line and waits up to `timeout` for the reply line.
    pub fn call(&self, request: &str, timeout: Duration) -> Result<String, CallError> {
        let deadline = Instant::now() + timeout;
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let mut conn = match guard.take() {
            Some(c) => c,
            None => self.connect(timeout)?,
        };
        let result = exchange(&mut conn, request, deadline);
        if result.is_ok() {
            *guard = Some(conn);
        }
        result
    }

    /// Sends a line without waiting for a reply, ignoring failures.
    pub fn notify(&self, request: &str) {
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(conn) = guard.as_mut() {
            let stream = conn.get_mut();
            let _ = stream
                .write_all(request.as_bytes())
                .and_then(|_| stream.write_all(b"\n"));
        }
    }
}

fn exchange(
    conn: &mut BufReader<TcpStream>,
    request: &str,
    deadline: Instant,
) -> Result<String, CallError> {
    let transport = |e: io::Error| CallError::Transport(e.to_string());
    {
        let stream = conn.get_mut();
        stream
            .write_all(request.as_bytes())
            .and_then(|_| stream.write_all(b"\n"))
            .and_then(|_| stream.flush())
            .map_err(transport)?;
    }
    let mut line = Vec::new();
    loop {
        let now = Instant::now();
        if now >= deadline {
            return Err(CallError::Timeout);
        }
        conn.get_ref()
            .set_read_timeout(Some(deadline - now))
            .map_err(transport)?;
        match conn.read_until(b'\n', &mut line) {
            Ok(0) => return Err(CallError::Transport("connection closed".into())),
            Ok(_) if line.ends_with(b"\n") => {
                line.pop();
                return String::from_utf8(line)
                    .map_err(|e| CallError::Transport(format!("invalid utf-8: {e}")));
            }
            Ok(_) => continue,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                return Err(CallError::Timeout)
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(transport(e)),
        }
    }
}

/// Handler from a request line to a reply line; `None` sends nothing back.
pub type Handler = dyn Fn(&str) -> Option<String> + Send + Sync;

/// Threaded line server. Stops accepting when dropped.
pub struct LineServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl LineServer {
    /// Binds `addr` (use port 0 for an ephemeral loopback port).
    pub fn spawn(addr: &str, handler: Arc<Handler>) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let acceptor = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                match stream {
                    Ok(s) => {
                        let h = Arc::clone(&handler);
                        thread::spawn(move || serve_connection(s, h));
                    }
                    Err(e) => warn!(error = %e, "accept failed"),
                }
            }
        });
        Ok(LineServer {
            addr: local,
            stop,
            acceptor: Some(acceptor),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the acceptor exits (i.e. forever unless dropped elsewhere).
    pub fn join(mut self) {
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for LineServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

fn serve_connection(stream: TcpStream, handler: Arc<Handler>) {
    let peer = stream.peer_addr().ok();
    let mut writer = match stream.try_clone() {
        Ok(w) => w,
        Err(_) => return,
    };
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(reply) = handler(&line) {
            if writer
                .write_all(reply.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
    }
    debug!(?peer, "connection closed");
}
