use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{ClientAction, Direction, HeadlessClient, TranscriptLine, Widget, WidgetError};
use crate::sync::{flush, DiagnosticKind, SocketTransport, Transport, TransportError};
use crate::wire;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub received: usize,
    pub sent: usize,
}

/// Bridges one attached view over `stream` until it disconnects.
///
/// Queued publishes go out first; after that every inbound message is
/// dispatched and whatever it caused is flushed before the next read.
pub fn serve_connection(widget: &mut dyn Widget, stream: TcpStream) -> Result<ServeStats, WidgetError> {
    let mut transport = SocketTransport::new(stream, None).map_err(TransportError::from)?;
    let mut stats = ServeStats {
        sent: flush(widget.state_mut(), &mut transport)?,
        ..ServeStats::default()
    };
    loop {
        match transport.recv() {
            Ok(Some(msg)) => {
                stats.received += 1;
                widget.state_mut().dispatch_incoming(msg);
                stats.sent += flush(widget.state_mut(), &mut transport)?;
            }
            Ok(None) => {}
            Err(TransportError::Wire(e)) => {
                stats.received += 1;
                widget.state_mut().diagnose(DiagnosticKind::Malformed, "", e.to_string());
            }
            Err(TransportError::Closed) => return Ok(stats),
            Err(TransportError::Io(e)) if is_disconnect(&e) => return Ok(stats),
            Err(e) => return Err(e.into()),
        }
    }
}

fn is_disconnect(e: &std::io::Error) -> bool {
    use std::io::ErrorKind::*;
    matches!(e.kind(), ConnectionReset | ConnectionAborted | BrokenPipe | UnexpectedEof)
}

/// A headless view attached to a served widget over TCP.
///
/// The socket gives no end-of-burst marker, so an action counts as settled
/// once the kernel has been silent for `quiet`.
pub struct RemoteSession {
    transport: SocketTransport,
    client: HeadlessClient,
    lines: Vec<TranscriptLine>,
}

impl RemoteSession {
    /// Connects, takes the initial publishes and performs the attach handshake.
    pub fn connect(addr: impl ToSocketAddrs, widget_id: &str, quiet: Duration) -> Result<Self, WidgetError> {
        let stream = TcpStream::connect(addr).map_err(TransportError::from)?;
        let transport = SocketTransport::new(stream, Some(quiet)).map_err(TransportError::from)?;
        let mut s = RemoteSession {
            transport,
            client: HeadlessClient::new(widget_id),
            lines: Vec::new(),
        };
        s.settle()?;
        s.act(&ClientAction::Attach)?;
        Ok(s)
    }

    /// Sends one action's messages and reads until the kernel goes quiet.
    /// Returns the number of messages received.
    pub fn act(&mut self, action: &ClientAction) -> Result<usize, WidgetError> {
        for msg in self.client.act(action) {
            self.lines.push(TranscriptLine {
                direction: Direction::ToKernel,
                text: wire::encode(&msg).map_err(TransportError::from)?,
            });
            self.transport.send(&msg)?;
        }
        self.settle()
    }

    fn settle(&mut self) -> Result<usize, WidgetError> {
        let mut n = 0;
        while let Some(msg) = self.transport.recv()? {
            self.lines.push(TranscriptLine {
                direction: Direction::ToView,
                text: wire::encode(&msg).map_err(TransportError::from)?,
            });
            self.client.receive(msg);
            n += 1;
        }
        Ok(n)
    }

    pub fn client(&self) -> &HeadlessClient {
        &self.client
    }

    pub fn lines(&self) -> &[TranscriptLine] {
        &self.lines
    }
}
