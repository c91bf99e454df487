//! Backend halves of the three reference widgets, a scripted stand-in for
//! the browser view, and the drivers that connect the two.
//!
//! | widget | pattern |
//! |---|---|
//! | [`DataExplorerWidget`] | one-way: data is shown, view-side filtering never reaches the kernel state |
//! | [`DataSelectorWidget`] | two-way: the view's filter syncs back and is usable in later cells |
//! | [`InferenceExplorerWidget`] | two-way with handlers: view input triggers model calls in the kernel |

mod client;
mod explorer;
mod host;
mod inference;
mod session;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::model::{AdapterError, ProjectionError};
use crate::sync::{ObservableState, SyncError, TransportError};

pub use client::{rect_value, ClientAction, HeadlessClient};
pub use explorer::{DataExplorerWidget, DataSelectorWidget};
pub use host::{serve_connection, RemoteSession, ServeStats};
pub use inference::{InferenceExplorerWidget, InferenceOptions, DEFAULT_INFERRED_CAP, DEFAULT_K};
pub use session::{headless_run, message_budget, Direction, Session, Transcript, TranscriptLine};

#[derive(Debug, Error)]
pub enum WidgetError {
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("action {action} did not settle: {messages} messages exceeded the budget of {budget}")]
    Deadlock { action: usize, messages: usize, budget: usize },
}

/// Which reference widget a state store belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WidgetKind {
    DataExplorer,
    DataSelector,
    InferenceExplorer,
}

impl WidgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WidgetKind::DataExplorer => "data_explorer",
            WidgetKind::DataSelector => "data_selector",
            WidgetKind::InferenceExplorer => "inference_explorer",
        }
    }
}

impl std::str::FromStr for WidgetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "data_explorer" | "explorer" => Ok(WidgetKind::DataExplorer),
            "data_selector" | "selector" => Ok(WidgetKind::DataSelector),
            "inference_explorer" | "inference" => Ok(WidgetKind::InferenceExplorer),
            other => Err(format!("unknown widget {other:?}")),
        }
    }
}

/// A widget is a state store plus the wiring installed at construction.
pub trait Widget {
    fn kind(&self) -> WidgetKind;
    fn state(&self) -> &ObservableState;
    fn state_mut(&mut self) -> &mut ObservableState;
}
