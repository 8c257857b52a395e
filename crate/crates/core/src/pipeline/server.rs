//! Adapter side of the wire protocol, backed by in-process codecs.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;

use super::wire::{read_message, write_message, Body, Message, MessageType};
use super::SemanticCodec;
use crate::error::{Error, Result};
use crate::metrics::EmbeddingProvider;
use crate::types::HiddenTensor;

fn answer(request: Message, codec: &dyn SemanticCodec, embedder: &dyn EmbeddingProvider) -> Result<Message> {
    let id = request.id;
    match (request.kind, request.body) {
        (MessageType::Ping, _) => Message::empty(MessageType::Pong, id),
        (MessageType::Encode, Body::Text(s)) => Message::tensor(MessageType::Tensor, id, codec.encode(&s)?),
        (MessageType::Decode, Body::Tensor(t)) => Message::text(MessageType::Text, id, codec.decode(&t)?),
        (MessageType::Embed, Body::Text(s)) => {
            let v: Vec<f32> = embedder.embed(&s)?.into_iter().map(|x| x as f32).collect();
            Message::tensor(MessageType::Vector, id, HiddenTensor::new(1, v.len(), v)?)
        }
        (kind, _) => Err(Error::Transport(format!("{kind} is not a request"))),
    }
}

/// Answers requests from `reader` on `writer` until the peer closes the
/// stream. Request failures become `ERROR` replies; an unreadable frame ends
/// the session with an `ERROR` reply carrying id 0.
pub fn serve<R: Read, W: Write>(
    reader: R,
    writer: W,
    codec: &dyn SemanticCodec,
    embedder: &dyn EmbeddingProvider,
) -> Result<()> {
    let mut reader = BufReader::new(reader);
    let mut writer = BufWriter::new(writer);
    loop {
        let request = match read_message(&mut reader) {
            Ok(Some(m)) => m,
            Ok(None) => return Ok(()),
            Err(e) => {
                let _ = write_message(&mut writer, &Message::text(MessageType::Error, 0, e.to_string())?);
                return Err(e);
            }
        };
        let id = request.id;
        let reply = answer(request, codec, embedder)
            .or_else(|e| Message::text(MessageType::Error, id, e.to_string()))?;
        write_message(&mut writer, &reply)?;
    }
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp(
    listener: TcpListener,
    codec: Arc<dyn SemanticCodec>,
    embedder: Arc<dyn EmbeddingProvider>,
) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let read_half = stream.try_clone()?;
        let (codec, embedder) = (Arc::clone(&codec), Arc::clone(&embedder));
        thread::spawn(move || {
            let _ = serve(read_half, stream, codec.as_ref(), embedder.as_ref());
        });
    }
    Ok(())
}

/// Binds `addr` and serves in a background thread. Returns the bound address.
pub fn spawn_tcp_server(
    addr: &str,
    codec: Arc<dyn SemanticCodec>,
    embedder: Arc<dyn EmbeddingProvider>,
) -> Result<std::net::SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve_tcp(listener, codec, embedder));
    Ok(local)
}
