use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{Value, WireError};

/// Protocol version carried by `sync_request` and `sync_reply`.
pub const SCHEMA_VERSION: &str = "loomxai/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgType {
    StateUpdate,
    Event,
    SyncRequest,
    SyncReply,
    Page,
}

impl MsgType {
    pub const ALL: [MsgType; 5] = [
        MsgType::StateUpdate,
        MsgType::Event,
        MsgType::SyncRequest,
        MsgType::SyncReply,
        MsgType::Page,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::StateUpdate => "state_update",
            MsgType::Event => "event",
            MsgType::SyncRequest => "sync_request",
            MsgType::SyncReply => "sync_reply",
            MsgType::Page => "page",
        }
    }
}

impl FromStr for MsgType {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| WireError::UnknownMsgType(s.to_owned()))
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which end of a widget produced a message or a value.
///
/// The derived ordering (`Backend < Frontend`) is the conflict tiebreak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Backend,
    Frontend,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Backend => "backend",
            Origin::Frontend => "frontend",
        }
    }

    pub fn other(self) -> Origin {
        match self {
            Origin::Backend => Origin::Frontend,
            Origin::Frontend => Origin::Backend,
        }
    }
}

impl FromStr for Origin {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backend" => Ok(Origin::Backend),
            "frontend" => Ok(Origin::Frontend),
            other => Err(WireError::InvalidField {
                field: "origin",
                reason: format!("unknown origin {other:?}"),
            }),
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageInfo {
    pub page_index: u64,
    pub page_count: u64,
    pub transfer_id: String,
}

/// The wire envelope exchanged between kernel and view.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub widget_id: String,
    pub msg_type: MsgType,
    /// Attribute name, or empty for control messages.
    pub attr: String,
    pub payload: Value,
    pub seq: u64,
    pub origin: Origin,
    pub page_info: Option<PageInfo>,
}

impl Message {
    pub fn new(
        widget_id: impl Into<String>,
        msg_type: MsgType,
        attr: impl Into<String>,
        payload: Value,
        seq: u64,
        origin: Origin,
    ) -> Self {
        Message {
            widget_id: widget_id.into(),
            msg_type,
            attr: attr.into(),
            payload,
            seq,
            origin,
            page_info: None,
        }
    }

    pub fn state_update(
        widget_id: impl Into<String>,
        attr: impl Into<String>,
        payload: Value,
        seq: u64,
        origin: Origin,
    ) -> Self {
        Message::new(widget_id, MsgType::StateUpdate, attr, payload, seq, origin)
    }

    /// Checks the structural invariants that do not depend on message history.
    pub fn validate(&self) -> Result<(), WireError> {
        match (&self.page_info, self.msg_type) {
            (None, MsgType::Page) => Err(WireError::MissingField("page_info")),
            (Some(_), t) if t != MsgType::Page => Err(WireError::InvalidField {
                field: "page_info",
                reason: format!("present on a {t} message"),
            }),
            (Some(info), _) if info.page_index >= info.page_count => Err(WireError::InvalidField {
                field: "page_info",
                reason: format!(
                    "page_index {} out of range for page_count {}",
                    info.page_index, info.page_count
                ),
            }),
            _ if self.seq as f64 > super::MAX_SEQ as f64 => Err(WireError::InvalidField {
                field: "seq",
                reason: "exceeds 2^53 - 1".into(),
            }),
            _ => Ok(()),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut m = BTreeMap::new();
        m.insert("widget_id".to_owned(), Value::from(self.widget_id.as_str()));
        m.insert("msg_type".to_owned(), Value::from(self.msg_type.as_str()));
        m.insert("attr".to_owned(), Value::from(self.attr.as_str()));
        m.insert("payload".to_owned(), self.payload.clone());
        m.insert("seq".to_owned(), Value::from(self.seq));
        m.insert("origin".to_owned(), Value::from(self.origin.as_str()));
        if let Some(info) = &self.page_info {
            m.insert(
                "page_info".to_owned(),
                Value::map([
                    ("page_index", Value::from(info.page_index)),
                    ("page_count", Value::from(info.page_count)),
                    ("transfer_id", Value::from(info.transfer_id.as_str())),
                ]),
            );
        }
        Value::Map(m)
    }

    /// Validates structure and converts a decoded value into a message.
    pub fn from_value(value: &Value) -> Result<Message, WireError> {
        let map = value.as_map().ok_or(WireError::InvalidField {
            field: "message",
            reason: "expected an object".into(),
        })?;
        let field = |name: &'static str| map.get(name).ok_or(WireError::MissingField(name));
        let string = |name: &'static str| -> Result<String, WireError> {
            field(name)?
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| WireError::InvalidField {
                    field: name,
                    reason: "expected a string".into(),
                })
        };
        let integer = |v: &Value, name: &'static str| {
            v.as_u64().ok_or_else(|| WireError::InvalidField {
                field: name,
                reason: "expected a non-negative integer".into(),
            })
        };

        let msg_type: MsgType = string("msg_type")?.parse()?;
        let widget_id = string("widget_id")?;
        let attr = string("attr")?;
        let payload = field("payload")?.clone();
        let seq = integer(field("seq")?, "seq")?;
        let origin: Origin = string("origin")?.parse()?;
        let page_info = match map.get("page_info") {
            None | Some(Value::Null) => None,
            Some(info) => {
                let get = |name: &'static str| {
                    info.get(name).ok_or(WireError::MissingField(name))
                };
                Some(PageInfo {
                    page_index: integer(get("page_index")?, "page_index")?,
                    page_count: integer(get("page_count")?, "page_count")?,
                    transfer_id: get("transfer_id")?
                        .as_str()
                        .ok_or_else(|| WireError::InvalidField {
                            field: "transfer_id",
                            reason: "expected a string".into(),
                        })?
                        .to_owned(),
                })
            }
        };
        let msg = Message {
            widget_id,
            msg_type,
            attr,
            payload,
            seq,
            origin,
            page_info,
        };
        msg.validate()?;
        Ok(msg)
    }
}

/// Canonical text encoding of a message.
pub fn encode(msg: &Message) -> Result<String, WireError> {
    msg.validate()?;
    Ok(msg.to_value().encode())
}

/// Parses and structurally validates a message.
pub fn decode(text: &str) -> Result<Message, WireError> {
    Message::from_value(&Value::decode(text)?)
}

/// Encodes `msg` and rejects it when the text exceeds `cap` bytes.
pub fn encode_capped(msg: &Message, cap: usize) -> Result<String, WireError> {
    let text = encode(msg)?;
    if text.len() > cap {
        return Err(WireError::PayloadTooLarge {
            size: text.len(),
            cap,
        });
    }
    Ok(text)
}
