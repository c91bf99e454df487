use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conflict::{resolve_conflict, Stamp, Winner};
use super::SyncError;
use crate::wire::{
    self, check_serializable, new_transfer_id, paginate, HostValue, Message, MsgType, Origin,
    PageTarget, Value, WireError, DEFAULT_PAGE_SIZE, DEFAULT_PAYLOAD_CAP, SCHEMA_VERSION,
};

/// How an attribute travels between kernel and view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyncMode {
    /// Never leaves the kernel. Models and other opaque handles live here.
    BackendOnly,
    /// Published to the view; frontend writes are refused.
    OneWayToView,
    /// Writable from both ends.
    TwoWay,
}

impl SyncMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SyncMode::BackendOnly => "backend_only",
            SyncMode::OneWayToView => "one_way_to_view",
            SyncMode::TwoWay => "two_way",
        }
    }

    pub fn is_synced(self) -> bool {
        self != SyncMode::BackendOnly
    }

    pub fn accepts(self, origin: Origin) -> bool {
        match origin {
            Origin::Backend => true,
            Origin::Frontend => self == SyncMode::TwoWay,
        }
    }
}

impl FromStr for SyncMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backend_only" => Ok(SyncMode::BackendOnly),
            "one_way_to_view" => Ok(SyncMode::OneWayToView),
            "two_way" => Ok(SyncMode::TwoWay),
            other => Err(format!("unknown sync mode {other:?}")),
        }
    }
}

impl fmt::Display for SyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transport limits and the transfer-id generator seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateConfig {
    pub payload_cap: usize,
    pub page_size: usize,
    /// Seeds transfer-id generation; `None` draws from OS entropy.
    pub seed: Option<u64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            payload_cap: DEFAULT_PAYLOAD_CAP,
            page_size: DEFAULT_PAGE_SIZE,
            seed: None,
        }
    }
}

/// Environment variable that overrides the payload cap.
pub const PAYLOAD_CAP_ENV: &str = "LOOMXAI_PAYLOAD_CAP";

impl StateConfig {
    pub fn seeded(seed: u64) -> Self {
        StateConfig {
            seed: Some(seed),
            ..Self::default()
        }
    }

    /// Applies `LOOMXAI_PAYLOAD_CAP` when it is set to a positive integer.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(cap) = std::env::var(PAYLOAD_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&cap| cap > 0)
        {
            self.payload_cap = cap;
        }
        self
    }
}

/// A change delivered to handlers.
#[derive(Debug, Clone, PartialEq)]
pub struct Change {
    pub attr: String,
    pub old: Value,
    pub new: Value,
    pub seq: u64,
}

pub type HandlerError = Box<dyn std::error::Error + Send + Sync>;
pub type HandlerResult = Result<(), HandlerError>;

type Handler = Box<dyn FnMut(&mut ObservableState, &Change) -> HandlerResult + Send>;
type Validator = Box<dyn Fn(&Value) -> Result<(), String> + Send>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HandlerId(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    UnknownAttribute,
    ModeViolation,
    InvalidValue,
    HandlerFailed,
    VersionMismatch,
    Misrouted,
    Malformed,
    PayloadTooLarge,
}

/// One entry of a widget's diagnostic log.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub attr: String,
    pub detail: String,
}

/// What `dispatch_incoming` did with a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispatched {
    Applied,
    /// Lost the last-writer-wins comparison.
    Stale,
    /// Refused by the attribute's validator; the current value was re-sent.
    Rejected,
    Event,
    SyncReplied,
    Dropped(DiagnosticKind),
}

enum Slot {
    Synced(Value),
    Backend(HostValue),
}

struct Attribute {
    slot: Slot,
    mode: SyncMode,
    stamp: Stamp,
    seq_backend: u64,
    seq_frontend: u64,
    paged: bool,
    last_page_count: usize,
}

impl Attribute {
    fn synced_value(&self) -> Option<&Value> {
        match &self.slot {
            Slot::Synced(v) => Some(v),
            Slot::Backend(_) => None,
        }
    }
}

const EVENT_LOG_LEN: usize = 256;

/// Per-widget attribute store on the kernel side.
///
/// Backend-origin writes are published to the view and never run local
/// handlers. Frontend-origin writes that win the last-writer-wins comparison
/// run the attribute's handlers once, in registration order, and are never
/// echoed back.
pub struct ObservableState {
    widget_id: String,
    config: StateConfig,
    attrs: BTreeMap<String, Attribute>,
    handlers: BTreeMap<String, Vec<(HandlerId, Handler)>>,
    validators: BTreeMap<String, Validator>,
    running: BTreeSet<HandlerId>,
    detached: BTreeSet<HandlerId>,
    next_handler: u64,
    outbox: VecDeque<Message>,
    control_seq: u64,
    rng: ChaCha8Rng,
    diagnostics: Vec<Diagnostic>,
    events: VecDeque<Message>,
    events_seen: u64,
    applied_frontend: BTreeMap<String, u64>,
    handler_runs: BTreeMap<String, u64>,
    stale_dropped: u64,
}

impl fmt::Debug for ObservableState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservableState")
            .field("widget_id", &self.widget_id)
            .field("attrs", &self.attrs.keys().collect::<Vec<_>>())
            .field("outbox", &self.outbox.len())
            .field("diagnostics", &self.diagnostics.len())
            .finish()
    }
}

impl ObservableState {
    pub fn new(widget_id: impl Into<String>, config: StateConfig) -> Self {
        let rng = match config.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_entropy(),
        };
        ObservableState {
            widget_id: widget_id.into(),
            config,
            attrs: BTreeMap::new(),
            handlers: BTreeMap::new(),
            validators: BTreeMap::new(),
            running: BTreeSet::new(),
            detached: BTreeSet::new(),
            next_handler: 0,
            outbox: VecDeque::new(),
            control_seq: 0,
            rng,
            diagnostics: Vec::new(),
            events: VecDeque::new(),
            events_seen: 0,
            applied_frontend: BTreeMap::new(),
            handler_runs: BTreeMap::new(),
            stale_dropped: 0,
        }
    }

    pub fn widget_id(&self) -> &str {
        &self.widget_id
    }

    pub fn config(&self) -> &StateConfig {
        &self.config
    }

    /// Registers an attribute and, for synced modes, queues its first publish.
    ///
    /// Backend-only attributes accept any host value, including opaque ones.
    pub fn define_attribute(
        &mut self,
        name: &str,
        initial: impl Into<HostValue>,
        mode: SyncMode,
    ) -> Result<(), SyncError> {
        self.define(name, initial.into(), mode, false)
    }

    /// Registers a one-way list attribute that is always transferred in pages.
    pub fn define_paged(&mut self, name: &str, rows: Vec<Value>) -> Result<(), SyncError> {
        self.define(name, HostValue::from(Value::List(rows)), SyncMode::OneWayToView, true)
    }

    fn define(
        &mut self,
        name: &str,
        initial: HostValue,
        mode: SyncMode,
        paged: bool,
    ) -> Result<(), SyncError> {
        if self.attrs.contains_key(name) {
            return Err(SyncError::DuplicateAttribute(name.to_owned()));
        }
        let slot = if mode.is_synced() {
            Slot::Synced(check_serializable(&initial)?)
        } else {
            Slot::Backend(initial)
        };
        let attr = Attribute {
            slot: Slot::Synced(Value::Null),
            mode,
            stamp: Stamp::new(0, Origin::Backend),
            seq_backend: 0,
            seq_frontend: 0,
            paged,
            last_page_count: 0,
        };
        self.attrs.insert(name.to_owned(), attr);
        let result = match slot {
            Slot::Synced(value) => self.publish(name, value),
            backend => {
                self.attrs.get_mut(name).expect("just inserted").slot = backend;
                Ok(())
            }
        };
        if result.is_err() {
            self.attrs.remove(name);
        }
        result
    }

    /// Replaces an attribute value.
    ///
    /// Backend-origin writes publish to the view and do not run handlers.
    /// Frontend-origin writes are applied as if they arrived from the view.
    pub fn set_attribute(
        &mut self,
        name: &str,
        value: impl Into<HostValue>,
        origin: Origin,
    ) -> Result<(), SyncError> {
        let value = value.into();
        let attr = self.attr(name)?;
        if !attr.mode.accepts(origin) {
            return Err(SyncError::ModeViolation {
                attr: name.to_owned(),
                mode: attr.mode,
                origin,
            });
        }
        match origin {
            Origin::Backend if attr.mode.is_synced() => {
                let value = check_serializable(&value)?;
                self.publish(name, value)
            }
            Origin::Backend => {
                self.attrs.get_mut(name).expect("checked").slot = Slot::Backend(value);
                Ok(())
            }
            Origin::Frontend => {
                let value = check_serializable(&value)?;
                let seq = attr.stamp.seq + 1;
                self.apply_frontend(name, value, seq).map(|_| ())
            }
        }
    }

    /// Shorthand for a backend-origin [`set_attribute`](Self::set_attribute).
    pub fn set(&mut self, name: &str, value: impl Into<HostValue>) -> Result<(), SyncError> {
        self.set_attribute(name, value, Origin::Backend)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.attrs.get(name).and_then(Attribute::synced_value)
    }

    /// Backend-only value as a plain serializable value, when it is one.
    pub fn get_host(&self, name: &str) -> Option<&HostValue> {
        match &self.attrs.get(name)?.slot {
            Slot::Backend(v) => Some(v),
            Slot::Synced(_) => None,
        }
    }

    /// Downcasts a backend-only opaque attribute.
    pub fn opaque<T: 'static>(&self, name: &str) -> Option<&T> {
        match self.get_host(name)? {
            HostValue::Opaque(o) => o.downcast_ref(),
            _ => None,
        }
    }

    pub fn mode(&self, name: &str) -> Option<SyncMode> {
        self.attrs.get(name).map(|a| a.mode)
    }

    pub fn stamp(&self, name: &str) -> Option<Stamp> {
        self.attrs.get(name).map(|a| a.stamp)
    }

    /// Last sequence numbers written by each origin.
    pub fn seqs(&self, name: &str) -> Option<(u64, u64)> {
        self.attrs.get(name).map(|a| (a.seq_backend, a.seq_frontend))
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attrs.keys().map(String::as_str)
    }

    pub fn register_handler<F>(&mut self, name: &str, callback: F) -> Result<HandlerId, SyncError>
    where
        F: FnMut(&mut ObservableState, &Change) -> HandlerResult + Send + 'static,
    {
        self.attr(name)?;
        self.next_handler += 1;
        let id = HandlerId(self.next_handler);
        self.handlers
            .entry(name.to_owned())
            .or_default()
            .push((id, Box::new(callback)));
        Ok(id)
    }

    /// Removes a handler. Returns `false` if the id is unknown.
    pub fn unregister(&mut self, id: HandlerId) -> bool {
        for list in self.handlers.values_mut() {
            if let Some(pos) = list.iter().position(|(h, _)| *h == id) {
                let _removed = list.remove(pos);
                return true;
            }
        }
        // Handlers that are executing right now are not in the map.
        self.running.contains(&id) && self.detached.insert(id)
    }

    /// Installs a check run on frontend values before they are applied.
    ///
    /// A refused value is dropped with a diagnostic and the current value is
    /// re-published with a higher seq so the view converges back to it.
    pub fn set_validator<F>(&mut self, name: &str, check: F) -> Result<(), SyncError>
    where
        F: Fn(&Value) -> Result<(), String> + Send + 'static,
    {
        self.attr(name)?;
        self.validators.insert(name.to_owned(), Box::new(check));
        Ok(())
    }

    /// Deep copy of every synced attribute value.
    pub fn snapshot(&self) -> BTreeMap<String, Value> {
        self.attrs
            .iter()
            .filter_map(|(k, a)| a.synced_value().map(|v| (k.clone(), v.clone())))
            .collect()
    }

    /// Applies one inbound message. Problems are logged, never raised.
    pub fn dispatch_incoming(&mut self, msg: Message) -> Dispatched {
        if msg.widget_id != self.widget_id {
            return self.drop_with(
                DiagnosticKind::Misrouted,
                &msg.attr,
                format!("message for widget {:?}", msg.widget_id),
            );
        }
        if msg.origin != Origin::Frontend {
            return self.drop_with(
                DiagnosticKind::Misrouted,
                &msg.attr,
                "backend-origin message delivered to the backend".into(),
            );
        }
        match msg.msg_type {
            MsgType::StateUpdate => match self.apply_frontend(&msg.attr, msg.payload, msg.seq) {
                Ok(outcome) => outcome,
                Err(SyncError::UnknownAttribute(name)) => self.drop_with(
                    DiagnosticKind::UnknownAttribute,
                    &name,
                    "update for an undefined attribute".into(),
                ),
                Err(SyncError::ModeViolation { attr, mode, .. }) => self.drop_with(
                    DiagnosticKind::ModeViolation,
                    &attr,
                    format!("frontend update refused for {mode} attribute"),
                ),
                Err(other) => self.drop_with(DiagnosticKind::PayloadTooLarge, &msg.attr, other.to_string()),
            },
            MsgType::Event => {
                self.events_seen += 1;
                if self.events.len() == EVENT_LOG_LEN {
                    self.events.pop_front();
                }
                self.events.push_back(msg);
                Dispatched::Event
            }
            MsgType::SyncRequest => {
                let version = msg.payload.get("version").and_then(Value::as_str);
                if version != Some(SCHEMA_VERSION) {
                    self.diagnose(
                        DiagnosticKind::VersionMismatch,
                        "",
                        format!("view speaks {version:?}, kernel speaks {SCHEMA_VERSION:?}"),
                    );
                }
                self.reply_sync();
                Dispatched::SyncReplied
            }
            MsgType::SyncReply | MsgType::Page => self.drop_with(
                DiagnosticKind::Misrouted,
                &msg.attr,
                format!("{} messages are not accepted from the view", msg.msg_type),
            ),
        }
    }

    /// Takes every queued outbound message in emission order.
    pub fn drain_outbound(&mut self) -> Vec<Message> {
        self.outbox.drain(..).collect()
    }

    pub fn pending_outbound(&self) -> usize {
        self.outbox.len()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    /// Most recent inbound events, oldest first.
    pub fn events(&self) -> impl Iterator<Item = &Message> {
        self.events.iter()
    }

    pub fn events_seen(&self) -> u64 {
        self.events_seen
    }

    /// Frontend-origin changes applied to `name` so far.
    pub fn applied_frontend_changes(&self, name: &str) -> u64 {
        self.applied_frontend.get(name).copied().unwrap_or(0)
    }

    /// Handler invocations for `name` so far, counting every handler.
    pub fn handler_invocations(&self, name: &str) -> u64 {
        self.handler_runs.get(name).copied().unwrap_or(0)
    }

    pub fn stale_dropped(&self) -> u64 {
        self.stale_dropped
    }

    /// Page messages a full re-sync would emit with the current sizes.
    pub fn paged_message_count(&self) -> usize {
        self.attrs.values().filter(|a| a.paged).map(|a| a.last_page_count).sum()
    }

    pub(crate) fn diagnose(&mut self, kind: DiagnosticKind, attr: &str, detail: String) {
        self.diagnostics.push(Diagnostic {
            kind,
            attr: attr.to_owned(),
            detail,
        });
    }

    fn drop_with(&mut self, kind: DiagnosticKind, attr: &str, detail: String) -> Dispatched {
        self.diagnose(kind, attr, detail);
        Dispatched::Dropped(kind)
    }

    fn attr(&self, name: &str) -> Result<&Attribute, SyncError> {
        self.attrs
            .get(name)
            .ok_or_else(|| SyncError::UnknownAttribute(name.to_owned()))
    }

    fn apply_frontend(&mut self, name: &str, value: Value, seq: u64) -> Result<Dispatched, SyncError> {
        let attr = self.attr(name)?;
        if !attr.mode.accepts(Origin::Frontend) {
            return Err(SyncError::ModeViolation {
                attr: name.to_owned(),
                mode: attr.mode,
                origin: Origin::Frontend,
            });
        }
        let incoming = Stamp::new(seq, Origin::Frontend);
        if resolve_conflict(attr.stamp, incoming) == Winner::Local {
            self.stale_dropped += 1;
            return Ok(Dispatched::Stale);
        }
        if let Some(Err(reason)) = self.validators.get(name).map(|check| check(&value)) {
            self.diagnose(DiagnosticKind::InvalidValue, name, reason);
            let current = self.get(name).cloned().unwrap_or_default();
            let floor = self.attrs[name].stamp.seq.max(seq);
            self.publish_at(name, current, floor + 1)?;
            return Ok(Dispatched::Rejected);
        }

        let attr = self.attrs.get_mut(name).expect("checked above");
        let old = match std::mem::replace(&mut attr.slot, Slot::Synced(value.clone())) {
            Slot::Synced(v) => v,
            Slot::Backend(_) => Value::Null,
        };
        attr.stamp = incoming;
        attr.seq_frontend = seq;
        *self.applied_frontend.entry(name.to_owned()).or_default() += 1;

        let change = Change {
            attr: name.to_owned(),
            old,
            new: value,
            seq,
        };
        self.run_handlers(&change);
        Ok(Dispatched::Applied)
    }

    fn run_handlers(&mut self, change: &Change) {
        let Some(mut running) = self.handlers.remove(&change.attr) else {
            return;
        };
        self.running.extend(running.iter().map(|(id, _)| *id));
        for (id, handler) in running.iter_mut() {
            if self.detached.contains(id) {
                continue;
            }
            *self.handler_runs.entry(change.attr.clone()).or_default() += 1;
            let outcome = panic::catch_unwind(AssertUnwindSafe(|| handler(self, change)));
            let failure = match outcome {
                Ok(Ok(())) => None,
                Ok(Err(e)) => Some(e.to_string()),
                Err(payload) => Some(panic_message(payload.as_ref())),
            };
            if let Some(detail) = failure {
                self.diagnose(DiagnosticKind::HandlerFailed, &change.attr, detail);
            }
        }
        // Handlers registered while this batch ran go after the existing ones.
        if let Some(added) = self.handlers.remove(&change.attr) {
            running.extend(added);
        }
        for (id, _) in &running {
            self.running.remove(id);
        }
        let detached = std::mem::take(&mut self.detached);
        running.retain(|(id, _)| !detached.contains(id));
        self.handlers.insert(change.attr.clone(), running);
    }

    fn publish(&mut self, name: &str, value: Value) -> Result<(), SyncError> {
        let next = self.attrs[name].stamp.seq + 1;
        self.publish_at(name, value, next)
    }

    /// Stores `value` with a backend stamp starting at `seq` and queues the
    /// message(s). Nothing changes if the value cannot be sent.
    fn publish_at(&mut self, name: &str, value: Value, seq: u64) -> Result<(), SyncError> {
        let paged = self.attrs[name].paged;
        let (messages, page_count) = if paged {
            let rows = match value {
                Value::List(ref rows) => rows.as_slice(),
                _ => return Err(SyncError::NotAList(name.to_owned())),
            };
            let pages = self.pages_for(name, rows, seq)?;
            let n = pages.len();
            (pages, n)
        } else {
            let msg = Message::state_update(&self.widget_id, name, value.clone(), seq, Origin::Backend);
            wire::encode_capped(&msg, self.config.payload_cap)?;
            (vec![msg], 0)
        };
        let last_seq = messages.last().map_or(seq, |m| m.seq);
        let attr = self.attrs.get_mut(name).expect("caller checked");
        attr.slot = Slot::Synced(value);
        attr.stamp = Stamp::new(last_seq, Origin::Backend);
        attr.seq_backend = last_seq;
        attr.last_page_count = page_count;
        self.outbox.extend(messages);
        Ok(())
    }

    /// Pages `rows`, halving the page size until every page fits the cap.
    fn pages_for(&mut self, name: &str, rows: &[Value], first_seq: u64) -> Result<Vec<Message>, SyncError> {
        let transfer_id = new_transfer_id(&mut self.rng);
        let target = PageTarget {
            widget_id: &self.widget_id,
            attr: name,
            origin: Origin::Backend,
            first_seq,
        };
        let mut page_size = self.config.page_size.max(1);
        loop {
            let pages = paginate(&target, rows, page_size, &transfer_id)?;
            let too_big = pages
                .iter()
                .map(|p| wire::encode_capped(p, self.config.payload_cap))
                .find_map(Result::err);
            match too_big {
                None => return Ok(pages),
                Some(err @ WireError::PayloadTooLarge { .. }) if page_size == 1 => return Err(err.into()),
                Some(WireError::PayloadTooLarge { .. }) => page_size = (page_size / 2).max(1),
                Some(other) => return Err(other.into()),
            }
        }
    }

    fn reply_sync(&mut self) {
        let names: Vec<String> = self
            .attrs
            .iter()
            .filter(|(_, a)| a.mode.is_synced())
            .map(|(k, _)| k.clone())
            .collect();

        // Paged attributes are re-sent after the reply under fresh seqs.
        let mut follow_up = Vec::new();
        let mut entries = BTreeMap::new();
        for name in &names {
            let attr = &self.attrs[name];
            let mut entry = BTreeMap::new();
            entry.insert("mode".to_owned(), Value::from(attr.mode.as_str()));
            if attr.paged {
                let value = attr.synced_value().cloned().unwrap_or_default();
                let next = attr.stamp.seq + 1;
                let before = self.outbox.len();
                if let Err(e) = self.publish_at(name, value, next) {
                    self.diagnose(DiagnosticKind::PayloadTooLarge, name, e.to_string());
                    continue;
                }
                follow_up.extend(self.outbox.drain(before..));
                entry.insert("follows".to_owned(), Value::from("page"));
            } else {
                entry.insert("value".to_owned(), attr.synced_value().cloned().unwrap_or_default());
            }
            let attr = &self.attrs[name];
            entry.insert("seq".to_owned(), Value::from(attr.stamp.seq));
            entry.insert("origin".to_owned(), Value::from(attr.stamp.origin.as_str()));
            entries.insert(name.clone(), Value::Map(entry));
        }

        self.control_seq += 1;
        let mut reply = Message::new(
            &self.widget_id,
            MsgType::SyncReply,
            "",
            sync_payload(entries.clone()),
            self.control_seq,
            Origin::Backend,
        );
        if wire::encode_capped(&reply, self.config.payload_cap).is_err() {
            // Too big inline: list metadata only and re-publish each value.
            for (name, entry) in entries.iter_mut() {
                let Value::Map(fields) = entry else { continue };
                if fields.remove("value").is_none() {
                    continue;
                }
                let value = self.get(name).cloned().unwrap_or_default();
                let before = self.outbox.len();
                match self.publish(name, value) {
                    Ok(()) => {
                        follow_up.extend(self.outbox.drain(before..));
                        fields.insert("follows".into(), Value::from("state_update"));
                        fields.insert("seq".into(), Value::from(self.attrs[name].stamp.seq));
                        fields.insert("origin".into(), Value::from("backend"));
                    }
                    Err(e) => self.diagnose(DiagnosticKind::PayloadTooLarge, name, e.to_string()),
                }
            }
            reply.payload = sync_payload(entries);
        }
        self.outbox.push_back(reply);
        self.outbox.extend(follow_up);
    }
}

fn sync_payload(entries: BTreeMap<String, Value>) -> Value {
    Value::map([
        ("version", Value::from(SCHEMA_VERSION)),
        ("attrs", Value::Map(entries)),
    ])
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    let text = payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "non-string panic payload".into());
    format!("handler panicked: {text}")
}
