//! Wire envelope, canonical encoding and pagination.
//!
//! Every transport carries the text produced by [`encode`] verbatim, one
//! message per frame. Encoded text never contains a raw newline, so
//! line-delimited framing is safe.

mod message;
mod page;
mod value;

use thiserror::Error;

pub use message::{decode, encode, encode_capped, Message, MsgType, Origin, PageInfo, SCHEMA_VERSION};
pub use page::{
    new_transfer_id, page_count, paginate, reassemble, CompletedTransfer, PageTarget, Reassembler,
};
pub use value::{check_serializable, HostValue, NotSerializable, Opaque, Value};

/// Largest encoded message accepted for transport by default (10 MiB).
pub const DEFAULT_PAYLOAD_CAP: usize = 10 * 1024 * 1024;

/// Largest sequence number a message can carry exactly (2^53 - 1).
pub const MAX_SEQ: u64 = 9_007_199_254_740_991;

/// Rows per page when a list attribute is transferred in pages.
pub const DEFAULT_PAGE_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed message at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unknown msg_type {0:?}")]
    UnknownMsgType(String),
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("invalid field {field:?}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error(transparent)]
    NotSerializable(#[from] NotSerializable),
    #[error("encoded message is {size} bytes, cap is {cap}")]
    PayloadTooLarge { size: usize, cap: usize },
    #[error("page size must be at least 1")]
    InvalidPageSize,
    #[error("incomplete transfer, missing pages {missing_pages:?}")]
    IncompleteTransfer { missing_pages: Vec<u64> },
    #[error("pages from different transfers were mixed")]
    MixedTransfer,
}
