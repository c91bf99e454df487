//! Message carriers between a widget's kernel half and its view.
//!
//! All transports move the canonical text encoding verbatim.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::rc::Rc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::wire::{self, Message, WireError};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("transport i/o: {0}")]
    Io(#[from] io::Error),
    #[error("transport closed")]
    Closed,
}

/// One end of a bidirectional, per-widget FIFO message channel.
pub trait Transport {
    fn send(&mut self, msg: &Message) -> Result<(), TransportError>;

    /// Next inbound message, or `None` when nothing is waiting.
    fn recv(&mut self) -> Result<Option<Message>, TransportError>;
}

type Queue = Rc<RefCell<VecDeque<String>>>;

/// In-process channel used by tests and the headless client.
#[derive(Debug)]
pub struct LoopbackTransport {
    outbound: Queue,
    inbound: Queue,
    sent: usize,
}

impl LoopbackTransport {
    /// Two connected ends: what one sends, the other receives.
    pub fn pair() -> (LoopbackTransport, LoopbackTransport) {
        let a: Queue = Rc::default();
        let b: Queue = Rc::default();
        (
            LoopbackTransport {
                outbound: a.clone(),
                inbound: b.clone(),
                sent: 0,
            },
            LoopbackTransport {
                outbound: b,
                inbound: a,
                sent: 0,
            },
        )
    }

    pub fn sent(&self) -> usize {
        self.sent
    }

    /// Messages waiting to be received on this end.
    pub fn queued(&self) -> usize {
        self.inbound.borrow().len()
    }
}

impl Transport for LoopbackTransport {
    fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        let text = wire::encode(msg)?;
        self.outbound.borrow_mut().push_back(text);
        self.sent += 1;
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<Message>, TransportError> {
        let next = self.inbound.borrow_mut().pop_front();
        next.map(|text| wire::decode(&text)).transpose().map_err(Into::into)
    }
}

/// Adapter for a host-provided comm channel, such as a notebook kernel comm.
///
/// Outbound text goes to the host callback; the host pushes inbound text
/// through [`CommTransport::deliver`].
pub struct CommTransport {
    send_hook: Box<dyn FnMut(&str) + Send>,
    inbound: VecDeque<String>,
}

impl CommTransport {
    pub fn new(send_hook: impl FnMut(&str) + Send + 'static) -> Self {
        CommTransport {
            send_hook: Box::new(send_hook),
            inbound: VecDeque::new(),
        }
    }

    pub fn deliver(&mut self, text: impl Into<String>) {
        self.inbound.push_back(text.into());
    }
}

impl Transport for CommTransport {
    fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        let text = wire::encode(msg)?;
        (self.send_hook)(&text);
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<Message>, TransportError> {
        self.inbound
            .pop_front()
            .map(|text| wire::decode(&text))
            .transpose()
            .map_err(Into::into)
    }
}

/// Fault-injection wrapper that silently drops a fraction of sent messages.
pub struct LossyTransport<T> {
    inner: T,
    rng: ChaCha8Rng,
    drop_probability: f64,
    dropped: usize,
}

impl<T: Transport> LossyTransport<T> {
    pub fn new(inner: T, drop_probability: f64, seed: u64) -> Self {
        LossyTransport {
            inner,
            rng: ChaCha8Rng::seed_from_u64(seed),
            drop_probability: drop_probability.clamp(0.0, 1.0),
            dropped: 0,
        }
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: Transport> Transport for LossyTransport<T> {
    fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        if self.rng.gen_bool(self.drop_probability) {
            self.dropped += 1;
            return Ok(());
        }
        self.inner.send(msg)
    }

    fn recv(&mut self) -> Result<Option<Message>, TransportError> {
        self.inner.recv()
    }
}

/// Newline-delimited messages over TCP.
///
/// With a read timeout, `recv` returns `Ok(None)` when the peer stays quiet
/// for that long; without one it blocks until a line or EOF arrives.
pub struct SocketTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    partial: Vec<u8>,
}

impl SocketTransport {
    pub fn new(stream: TcpStream, read_timeout: Option<Duration>) -> io::Result<Self> {
        stream.set_read_timeout(read_timeout)?;
        stream.set_nodelay(true)?;
        Ok(SocketTransport {
            writer: stream.try_clone()?,
            reader: BufReader::new(stream),
            partial: Vec::new(),
        })
    }
}

impl Transport for SocketTransport {
    fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        let mut text = wire::encode(msg)?;
        text.push('\n');
        self.writer.write_all(text.as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<Message>, TransportError> {
        // Bytes read before a timeout stay in `partial` for the next call.
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) if self.partial.is_empty() => Err(TransportError::Closed),
            Ok(_) if self.partial.last() != Some(&b'\n') => Err(TransportError::Closed),
            Ok(_) => {
                let line = std::mem::take(&mut self.partial);
                let text = String::from_utf8(line).map_err(|e| WireError::Malformed {
                    offset: e.utf8_error().valid_up_to(),
                    reason: "invalid UTF-8".into(),
                })?;
                Ok(Some(wire::decode(text.trim_end_matches(['\n', '\r']))?))
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}
