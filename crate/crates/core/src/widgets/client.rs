use std::collections::BTreeMap;

use crate::dataset::FilterSpec;
use crate::model::Rect;
use crate::sync::{resolve_conflict, Stamp, SyncMode, Winner};
use crate::wire::{self, Message, MsgType, Origin, Reassembler, Value, SCHEMA_VERSION};

/// One scripted user gesture.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientAction {
    /// Send a `sync_request` and rebuild the mirror from the reply.
    Attach,
    /// Filter controls. Goes out as a `selection_spec` update when the widget
    /// syncs it two-way, otherwise as an inert `filter` event.
    ApplyFilter(FilterSpec),
    /// Text entry; resubmitting the same text still counts as a new input.
    SubmitText(String),
    /// Rectangular brush on the scatterplot; `None` clears it.
    Brush(Option<Rect<f64>>),
    /// A raw `state_update`, whatever the attribute's mode.
    SetRaw { attr: String, value: Value },
    Event(Value),
}

impl ClientAction {
    pub fn brush(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        ClientAction::Brush(Some(Rect::new(x0, y0, x1, y1)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClientAction::Attach => "attach",
            ClientAction::ApplyFilter(_) => "apply_filter",
            ClientAction::SubmitText(_) => "submit_text",
            ClientAction::Brush(_) => "brush",
            ClientAction::SetRaw { .. } => "set_raw",
            ClientAction::Event(_) => "event",
        }
    }
}

/// The brush as it travels: corners normalized so `x0 <= x1`, `y0 <= y1`.
pub fn rect_value(rect: &Rect<f64>) -> Value {
    let r = rect.normalized();
    Value::map([
        ("x0", Value::from(r.x0)),
        ("y0", Value::from(r.y0)),
        ("x1", Value::from(r.x1)),
        ("y1", Value::from(r.y1)),
    ])
}

/// Scripted stand-in for the browser view.
///
/// It only ever sees wire messages. The mirror applies the same
/// last-writer-wins rule as the kernel, and two-way writes are applied
/// locally right away, as the real view does.
#[derive(Debug)]
pub struct HeadlessClient {
    widget_id: String,
    mirror: BTreeMap<String, (Value, Stamp)>,
    modes: BTreeMap<String, SyncMode>,
    reassembler: Reassembler,
    control_seq: u64,
    sync_replies: u64,
    received: u64,
    errors: Vec<String>,
}

impl HeadlessClient {
    pub fn new(widget_id: impl Into<String>) -> Self {
        HeadlessClient {
            widget_id: widget_id.into(),
            mirror: BTreeMap::new(),
            modes: BTreeMap::new(),
            reassembler: Reassembler::new(),
            control_seq: 0,
            sync_replies: 0,
            received: 0,
            errors: Vec::new(),
        }
    }

    pub fn widget_id(&self) -> &str {
        &self.widget_id
    }

    pub fn receive_text(&mut self, text: &str) {
        match wire::decode(text) {
            Ok(msg) => self.receive(msg),
            Err(e) => self.errors.push(format!("undecodable message: {e}")),
        }
    }

    pub fn receive(&mut self, msg: Message) {
        self.received += 1;
        if msg.widget_id != self.widget_id || msg.origin != Origin::Backend {
            self.errors.push(format!("unexpected {} message for {:?}", msg.origin, msg.widget_id));
            return;
        }
        match msg.msg_type {
            MsgType::StateUpdate => self.apply(&msg.attr, msg.payload, Stamp::new(msg.seq, msg.origin)),
            MsgType::Page => match self.reassembler.accept(msg) {
                Ok(Some(done)) => self.apply(&done.attr, Value::List(done.rows), Stamp::new(done.seq, done.origin)),
                Ok(None) => {}
                Err(e) => self.errors.push(e.to_string()),
            },
            MsgType::SyncReply => self.apply_reply(&msg.payload),
            MsgType::Event | MsgType::SyncRequest => {
                self.errors.push(format!("{} messages are not sent by the kernel", msg.msg_type));
            }
        }
    }

    fn apply_reply(&mut self, payload: &Value) {
        self.sync_replies += 1;
        if payload.get("version").and_then(Value::as_str) != Some(SCHEMA_VERSION) {
            self.errors.push("sync_reply with a foreign schema version".into());
        }
        let Some(attrs) = payload.get("attrs").and_then(Value::as_map) else {
            self.errors.push("sync_reply without attrs".into());
            return;
        };
        for (name, entry) in attrs {
            if let Some(mode) = entry.get("mode").and_then(Value::as_str).and_then(|m| m.parse().ok()) {
                self.modes.insert(name.clone(), mode);
            }
            let Some(value) = entry.get("value") else { continue };
            let seq = entry.get("seq").and_then(Value::as_u64).unwrap_or(0);
            let origin = match entry.get("origin").and_then(Value::as_str) {
                Some("frontend") => Origin::Frontend,
                _ => Origin::Backend,
            };
            self.apply(name, value.clone(), Stamp::new(seq, origin));
        }
    }

    fn apply(&mut self, attr: &str, value: Value, stamp: Stamp) {
        if let Some((_, local)) = self.mirror.get(attr) {
            if resolve_conflict(*local, stamp) == Winner::Local {
                return;
            }
        }
        self.mirror.insert(attr.to_owned(), (value, stamp));
    }

    /// Messages the view sends for `action`, applying two-way writes locally.
    pub fn act(&mut self, action: &ClientAction) -> Vec<Message> {
        match action {
            ClientAction::Attach => {
                let payload = Value::map([("version", Value::from(SCHEMA_VERSION))]);
                vec![self.control(MsgType::SyncRequest, payload)]
            }
            ClientAction::ApplyFilter(spec) => {
                if self.mode("selection_spec") == Some(SyncMode::TwoWay) {
                    vec![self.write("selection_spec", spec.to_value())]
                } else {
                    let payload = Value::map([("kind", Value::from("filter")), ("spec", spec.to_value())]);
                    vec![self.control(MsgType::Event, payload)]
                }
            }
            ClientAction::SubmitText(text) => vec![self.write("pending_input", Value::from(text.as_str()))],
            ClientAction::Brush(rect) => {
                let value = rect.as_ref().map_or(Value::Null, rect_value);
                vec![self.write("brush_rect", value)]
            }
            ClientAction::SetRaw { attr, value } => vec![self.write(attr, value.clone())],
            ClientAction::Event(payload) => vec![self.control(MsgType::Event, payload.clone())],
        }
    }

    fn control(&mut self, msg_type: MsgType, payload: Value) -> Message {
        self.control_seq += 1;
        Message::new(&self.widget_id, msg_type, "", payload, self.control_seq, Origin::Frontend)
    }

    fn write(&mut self, attr: &str, value: Value) -> Message {
        let seq = self.mirror.get(attr).map_or(0, |(_, s)| s.seq) + 1;
        if self.mode(attr) == Some(SyncMode::TwoWay) {
            self.mirror.insert(attr.to_owned(), (value.clone(), Stamp::new(seq, Origin::Frontend)));
        }
        Message::state_update(&self.widget_id, attr, value, seq, Origin::Frontend)
    }

    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.mirror.get(attr).map(|(v, _)| v)
    }

    pub fn stamp(&self, attr: &str) -> Option<Stamp> {
        self.mirror.get(attr).map(|(_, s)| *s)
    }

    /// Sync mode learned from the last `sync_reply`.
    pub fn mode(&self, attr: &str) -> Option<SyncMode> {
        self.modes.get(attr).copied()
    }

    /// Every mirrored value.
    pub fn mirror(&self) -> BTreeMap<String, Value> {
        self.mirror.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }

    pub fn sync_replies(&self) -> u64 {
        self.sync_replies
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn in_flight_transfers(&self) -> usize {
        self.reassembler.in_flight()
    }

    pub fn errors(&self) -> &[String] {
        &self.errors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reply(attrs: Value) -> Message {
        let payload = Value::map([("version", Value::from(SCHEMA_VERSION)), ("attrs", attrs)]);
        Message::new("w", MsgType::SyncReply, "", payload, 1, Origin::Backend)
    }

    #[test]
    fn learns_modes_and_values_from_reply() {
        let mut c = HeadlessClient::new("w");
        c.receive(reply(Value::map([(
            "selection_spec",
            Value::map([
                ("mode", Value::from("two_way")),
                ("seq", Value::from(3u64)),
                ("origin", Value::from("backend")),
                ("value", Value::from("x")),
            ]),
        )])));
        assert_eq!(c.mode("selection_spec"), Some(SyncMode::TwoWay));
        assert_eq!(c.get("selection_spec"), Some(&Value::from("x")));
        assert_eq!(c.stamp("selection_spec"), Some(Stamp::new(3, Origin::Backend)));
    }

    #[test]
    fn stale_backend_updates_lose() {
        let mut c = HeadlessClient::new("w");
        c.receive(Message::state_update("w", "a", Value::from(2), 5, Origin::Backend));
        c.receive(Message::state_update("w", "a", Value::from(1), 4, Origin::Backend));
        assert_eq!(c.get("a"), Some(&Value::from(2)));
    }

    #[test]
    fn filter_is_an_event_unless_two_way() {
        let mut c = HeadlessClient::new("w");
        let out = c.act(&ClientAction::ApplyFilter(FilterSpec::default().min_len(5)));
        assert_eq!(out[0].msg_type, MsgType::Event);
        assert!(c.get("selection_spec").is_none());

        c.receive(reply(Value::map([("selection_spec", Value::map([("mode", Value::from("two_way"))]))])));
        let out = c.act(&ClientAction::ApplyFilter(FilterSpec::default().min_len(5)));
        assert_eq!(out[0].msg_type, MsgType::StateUpdate);
        assert_eq!(out[0].seq, 1);
        assert_eq!(c.get("selection_spec"), Some(&FilterSpec::default().min_len(5).to_value()));
    }

    #[test]
    fn resubmission_bumps_seq() {
        let mut c = HeadlessClient::new("w");
        c.receive(reply(Value::map([("pending_input", Value::map([("mode", Value::from("two_way"))]))])));
        let a = c.act(&ClientAction::SubmitText("hi".into()));
        let b = c.act(&ClientAction::SubmitText("hi".into()));
        assert!(b[0].seq > a[0].seq);
    }

    #[test]
    fn brush_corners_are_normalized() {
        let mut c = HeadlessClient::new("w");
        let out = c.act(&ClientAction::brush(1.0, 1.0, -1.0, 0.0));
        assert_eq!(out[0].payload, rect_value(&Rect::new(-1.0, 0.0, 1.0, 1.0)));
        assert_eq!(out[0].payload.get("x0"), Some(&Value::from(-1.0)));
    }

    #[test]
    fn every_outbound_message_decodes() {
        let mut c = HeadlessClient::new("w");
        for a in [
            ClientAction::Attach,
            ClientAction::SubmitText("x".into()),
            ClientAction::Brush(None),
            ClientAction::Event(Value::from(1)),
        ] {
            for m in c.act(&a) {
                assert_eq!(wire::decode(&wire::encode(&m).unwrap()).unwrap(), m);
            }
        }
    }

    #[test]
    fn foreign_messages_are_logged() {
        let mut c = HeadlessClient::new("w");
        c.receive(Message::state_update("other", "a", Value::Null, 1, Origin::Backend));
        c.receive_text("{not json");
        assert_eq!(c.errors().len(), 2);
        assert!(c.get("a").is_none());
    }
}
