//! Client for semantic codecs running in another process.

use std::fmt;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{read_message, write_message, Body, Message, MessageType};
use super::{SemanticCodec, TensorDomain};
use crate::error::{Error, Result};
use crate::metrics::EmbeddingProvider;
use crate::types::HiddenTensor;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Where the adapter lives: `host:port` (optionally `tcp://host:port`) or
/// `exec:<program> [args...]`, which spawns the program and talks over its
/// stdin and stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Exec(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
            if argv.is_empty() {
                return Err(Error::Config("exec endpoint needs a program".into()));
            }
            return Ok(Endpoint::Exec(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if addr.rsplit_once(':').is_none_or(|(host, port)| host.is_empty() || port.parse::<u16>().is_err()) {
            return Err(Error::Config(format!("endpoint `{s}` is not host:port or exec:<program>")));
        }
        Ok(Endpoint::Tcp(addr.to_owned()))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
            Endpoint::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
        }
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    responses: Receiver<Result<Message>>,
    next_id: u64,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(s) = &self.socket {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn transport(msg: impl Into<String>) -> Error {
    Error::Transport(msg.into())
}

fn spawn_reader(reader: impl Read + Send + 'static) -> Receiver<Result<Message>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let item = match read_message(&mut reader) {
                Ok(Some(m)) => Ok(m),
                Ok(None) => Err(transport("adapter closed the connection")),
                Err(e) => Err(e),
            };
            let done = item.is_err();
            if tx.send(item).is_err() || done {
                break;
            }
        }
    });
    rx
}

/// Semantic codec and embedding provider served by an external adapter.
///
/// Requests are serialized over one connection. Every request waits at most
/// `timeout` for its response; a late response to an abandoned request is
/// discarded by id.
pub struct ExternalCodec {
    conn: Mutex<Connection>,
    timeout: Duration,
    domain: TensorDomain,
    endpoint: Endpoint,
}

impl ExternalCodec {
    /// Connects and checks the adapter answers `PING`.
    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Self> {
        let conn = match endpoint {
            Endpoint::Tcp(addr) => {
                let addrs: Vec<_> = addr
                    .to_socket_addrs()
                    .map_err(|e| transport(format!("cannot resolve {addr}: {e}")))?
                    .collect();
                let mut last = None;
                let stream = addrs
                    .iter()
                    .find_map(|a| match TcpStream::connect_timeout(a, timeout) {
                        Ok(s) => Some(s),
                        Err(e) => {
                            last = Some(e);
                            None
                        }
                    })
                    .ok_or_else(|| {
                        transport(match last {
                            Some(e) => format!("cannot connect to {addr}: {e}"),
                            None => format!("{addr} resolved to no addresses"),
                        })
                    })?;
                let _ = stream.set_nodelay(true);
                let read_half = stream.try_clone()?;
                let socket = stream.try_clone()?;
                Connection {
                    writer: Box::new(BufWriter::new(stream)),
                    responses: spawn_reader(read_half),
                    next_id: 1,
                    child: None,
                    socket: Some(socket),
                }
            }
            Endpoint::Exec(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| transport(format!("cannot start `{}`: {e}", argv[0])))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Connection {
                    writer: Box::new(BufWriter::new(stdin)),
                    responses: spawn_reader(stdout),
                    next_id: 1,
                    child: Some(child),
                    socket: None,
                }
            }
        };
        let codec = Self {
            conn: Mutex::new(conn),
            timeout,
            domain: TensorDomain::Bounded,
            endpoint: endpoint.clone(),
        };
        codec.ping()?;
        Ok(codec)
    }

    /// Declares how the adapter's tensors relate to [-1, 1].
    pub fn with_domain(mut self, domain: TensorDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub fn ping(&self) -> Result<()> {
        self.request(Message::empty(MessageType::Ping, 0)?, MessageType::Pong)
            .map(|_| ())
    }

    fn request(&self, mut message: Message, expect: MessageType) -> Result<Body> {
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| transport("adapter connection poisoned"))?;
        let id = conn.next_id;
        conn.next_id += 1;
        message.id = id;
        write_message(&mut conn.writer, &message)?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let reply = match conn.responses.recv_timeout(left) {
                Ok(reply) => reply?,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(transport(format!(
                        "{} request {id} timed out after {:?}",
                        message.kind, self.timeout
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => return Err(transport("adapter connection is closed")),
            };
            if reply.id != id {
                continue;
            }
            return match (reply.kind, reply.body) {
                (MessageType::Error, Body::Text(msg)) => Err(transport(format!("adapter error: {msg}"))),
                (kind, body) if kind == expect => Ok(body),
                (kind, _) => Err(transport(format!("expected {expect} reply to {}, got {kind}", message.kind))),
            };
        }
    }
}

impl SemanticCodec for ExternalCodec {
    fn encode(&self, sentence: &str) -> Result<HiddenTensor> {
        match self.request(Message::text(MessageType::Encode, 0, sentence)?, MessageType::Tensor)? {
            Body::Tensor(t) => Ok(t),
            _ => unreachable!("TENSOR carries a tensor"),
        }
    }

    fn decode(&self, tensor: &HiddenTensor) -> Result<String> {
        match self.request(Message::tensor(MessageType::Decode, 0, tensor.clone())?, MessageType::Text)? {
            Body::Text(s) => Ok(s),
            _ => unreachable!("TEXT carries text"),
        }
    }

    fn domain(&self) -> TensorDomain {
        self.domain
    }
}

impl EmbeddingProvider for ExternalCodec {
    fn embed(&self, sentence: &str) -> Result<Vec<f64>> {
        match self.request(Message::text(MessageType::Embed, 0, sentence)?, MessageType::Vector)? {
            Body::Tensor(t) => Ok(t.values().iter().map(|&v| v as f64).collect()),
            _ => unreachable!("VECTOR carries a tensor"),
        }
    }
}
