//! Observable attribute store, conflict resolution and transports.
//!
//! The three sync modes map onto the widget design patterns: one-way
//! display attributes, two-way synchronized attributes, and two-way
//! attributes with kernel-side change handlers.

mod conflict;
mod state;
mod transport;

use thiserror::Error;

use crate::wire::{NotSerializable, Origin, WireError};

pub use conflict::{resolve_conflict, Stamp, Winner};
pub use state::{
    Change, Diagnostic, DiagnosticKind, Dispatched, HandlerError, HandlerId, HandlerResult,
    ObservableState, StateConfig, SyncMode, PAYLOAD_CAP_ENV,
};
pub use transport::{CommTransport, LoopbackTransport, LossyTransport, SocketTransport, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("attribute {0:?} is already defined")]
    DuplicateAttribute(String),
    #[error("attribute {0:?} is not defined")]
    UnknownAttribute(String),
    #[error("{origin} write refused for {mode} attribute {attr:?}")]
    ModeViolation {
        attr: String,
        mode: SyncMode,
        origin: Origin,
    },
    #[error(transparent)]
    NotSerializable(#[from] NotSerializable),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("paged attribute {0:?} needs a list value")]
    NotAList(String),
}

/// Sends every queued outbound message. Returns how many were sent.
pub fn flush(state: &mut ObservableState, transport: &mut dyn Transport) -> Result<usize, TransportError> {
    let out = state.drain_outbound();
    let n = out.len();
    for msg in &out {
        transport.send(msg)?;
    }
    Ok(n)
}

/// Dispatches everything currently waiting on `transport`.
///
/// Undecodable frames are logged as diagnostics and skipped.
pub fn pump_incoming(state: &mut ObservableState, transport: &mut dyn Transport) -> Result<usize, TransportError> {
    let mut n = 0;
    loop {
        match transport.recv() {
            Ok(Some(msg)) => {
                state.dispatch_incoming(msg);
                n += 1;
            }
            Ok(None) => return Ok(n),
            Err(TransportError::Wire(e)) => {
                state.diagnose(DiagnosticKind::Malformed, "", e.to_string());
                n += 1;
            }
            Err(e) => return Err(e),
        }
    }
}
