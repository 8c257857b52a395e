//! Framed request/response protocol for out-of-process semantic codecs.
//!
//! Each message is a 4-byte big-endian length `L` followed by `L` bytes:
//!
//! ```text
//! semlink=1\n
//! type=<TYPE>\n
//! id=<u64>\n
//! rows=<u32>\n          (tensor-bearing types only)
//! cols=<u32>\n          (tensor-bearing types only)
//! length=<payload bytes>\n
//! \n
//! <payload>
//! ```
//!
//! Requests are `ENCODE` (text), `DECODE` (tensor), `EMBED` (text) and
//! `PING` (empty). Responses are `TENSOR` (tensor), `TEXT` (text), `VECTOR`
//! (1 x d tensor), `PONG` (empty) and `ERROR` (text). A response carries the
//! id of its request. Tensors are row-major little-endian binary32.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::HiddenTensor;

pub const PROTOCOL_VERSION: u32 = 1;

/// Upper bound on `L`; larger frames are rejected before allocation.
pub const MAX_FRAME_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageType {
    Encode,
    Decode,
    Embed,
    Ping,
    Tensor,
    Text,
    Vector,
    Pong,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BodyKind {
    Text,
    Tensor,
    Empty,
}

impl MessageType {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageType::Encode => "ENCODE",
            MessageType::Decode => "DECODE",
            MessageType::Embed => "EMBED",
            MessageType::Ping => "PING",
            MessageType::Tensor => "TENSOR",
            MessageType::Text => "TEXT",
            MessageType::Vector => "VECTOR",
            MessageType::Pong => "PONG",
            MessageType::Error => "ERROR",
        }
    }

    fn body_kind(&self) -> BodyKind {
        match self {
            MessageType::Encode | MessageType::Embed | MessageType::Text | MessageType::Error => BodyKind::Text,
            MessageType::Decode | MessageType::Tensor | MessageType::Vector => BodyKind::Tensor,
            MessageType::Ping | MessageType::Pong => BodyKind::Empty,
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MessageType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ENCODE" => MessageType::Encode,
            "DECODE" => MessageType::Decode,
            "EMBED" => MessageType::Embed,
            "PING" => MessageType::Ping,
            "TENSOR" => MessageType::Tensor,
            "TEXT" => MessageType::Text,
            "VECTOR" => MessageType::Vector,
            "PONG" => MessageType::Pong,
            "ERROR" => MessageType::Error,
            other => return Err(transport(format!("unknown message type `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Empty,
    Text(String),
    Tensor(HiddenTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageType,
    pub id: u64,
    pub body: Body,
}

fn transport(msg: impl Into<String>) -> Error {
    Error::Transport(msg.into())
}

impl Message {
    /// Builds a message, checking that the body matches the type.
    pub fn new(kind: MessageType, id: u64, body: Body) -> Result<Self> {
        let ok = matches!(
            (kind.body_kind(), &body),
            (BodyKind::Empty, Body::Empty) | (BodyKind::Text, Body::Text(_)) | (BodyKind::Tensor, Body::Tensor(_))
        );
        if !ok {
            return Err(transport(format!("{kind} cannot carry {body:?}")));
        }
        Ok(Self { kind, id, body })
    }

    pub fn text(kind: MessageType, id: u64, text: impl Into<String>) -> Result<Self> {
        Self::new(kind, id, Body::Text(text.into()))
    }

    pub fn tensor(kind: MessageType, id: u64, tensor: HiddenTensor) -> Result<Self> {
        Self::new(kind, id, Body::Tensor(tensor))
    }

    pub fn empty(kind: MessageType, id: u64) -> Result<Self> {
        Self::new(kind, id, Body::Empty)
    }

    /// Frame contents after the length prefix.
    pub fn to_frame(&self) -> Vec<u8> {
        let payload: Vec<u8> = match &self.body {
            Body::Empty => Vec::new(),
            Body::Text(s) => s.as_bytes().to_vec(),
            Body::Tensor(t) => t.values().iter().flat_map(|v| v.to_le_bytes()).collect(),
        };
        let mut head = format!("semlink={PROTOCOL_VERSION}\ntype={}\nid={}\n", self.kind, self.id);
        if let Body::Tensor(t) = &self.body {
            head.push_str(&format!("rows={}\ncols={}\n", t.rows(), t.cols()));
        }
        head.push_str(&format!("length={}\n\n", payload.len()));
        let mut out = head.into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    /// Length prefix plus frame.
    pub fn to_bytes(&self) -> Vec<u8> {
        let frame = self.to_frame();
        let mut out = (frame.len() as u32).to_be_bytes().to_vec();
        out.extend_from_slice(&frame);
        out
    }

    /// Parses frame contents (without the length prefix).
    pub fn from_frame(frame: &[u8]) -> Result<Self> {
        let split = frame
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| transport("frame header is not terminated"))?;
        let head = std::str::from_utf8(&frame[..split + 1]).map_err(|_| transport("frame header is not UTF-8"))?;
        let payload = &frame[split + 2..];

        let mut lines = head.lines();
        let version = field(lines.next(), "semlink")?;
        if version != PROTOCOL_VERSION.to_string() {
            return Err(transport(format!("unsupported protocol version `{version}`")));
        }
        let kind: MessageType = field(lines.next(), "type")?.parse()?;
        let id = number(field(lines.next(), "id")?, "id")?;
        let dims = if kind.body_kind() == BodyKind::Tensor {
            let rows = number(field(lines.next(), "rows")?, "rows")?;
            let cols = number(field(lines.next(), "cols")?, "cols")?;
            Some((rows, cols))
        } else {
            None
        };
        let length = number(field(lines.next(), "length")?, "length")?;
        if let Some(extra) = lines.next() {
            return Err(transport(format!("unexpected header line `{extra}`")));
        }
        if length != payload.len() as u64 {
            return Err(transport(format!(
                "payload length {} does not match declared {length}",
                payload.len()
            )));
        }

        let body = match (kind.body_kind(), dims) {
            (BodyKind::Empty, _) => {
                if !payload.is_empty() {
                    return Err(transport(format!("{kind} must have an empty payload")));
                }
                Body::Empty
            }
            (BodyKind::Text, _) => Body::Text(
                String::from_utf8(payload.to_vec()).map_err(|_| transport("text payload is not UTF-8"))?,
            ),
            (BodyKind::Tensor, Some((rows, cols))) => {
                let count = rows.checked_mul(cols).filter(|&c| c.checked_mul(4) == Some(length));
                if count.is_none() {
                    return Err(transport(format!(
                        "{rows} x {cols} tensor does not match {length} payload bytes"
                    )));
                }
                let values = payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                let tensor = HiddenTensor::new(rows as usize, cols as usize, values)
                    .map_err(|e| transport(format!("bad tensor: {e}")))?;
                Body::Tensor(tensor)
            }
            (BodyKind::Tensor, None) => unreachable!(),
        };
        Ok(Self { kind, id, body })
    }
}

fn field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| transport(format!("missing header field `{key}`")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| transport(format!("expected header field `{key}`, got `{line}`")))
}

fn number(text: &str, key: &str) -> Result<u64> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(transport(format!("header field `{key}` is not a number: `{text}`")));
    }
    text.parse().map_err(|_| transport(format!("header field `{key}` out of range")))
}

/// Reads one length-prefixed message. `Ok(None)` on a clean end of stream.
pub fn read_message<R: Read + ?Sized>(reader: &mut R) -> Result<Option<Message>> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match reader.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(transport("stream ended inside a length prefix")),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(transport(format!("read failed: {e}"))),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(transport(format!("frame of {len} bytes exceeds limit")));
    }
    let mut frame = vec![0u8; len];
    reader
        .read_exact(&mut frame)
        .map_err(|e| transport(format!("truncated frame: {e}")))?;
    Message::from_frame(&frame).map(Some)
}

pub fn write_message<W: Write + ?Sized>(writer: &mut W, message: &Message) -> Result<()> {
    writer
        .write_all(&message.to_bytes())
        .and_then(|_| writer.flush())
        .map_err(|e| transport(format!("write failed: {e}")))
}
