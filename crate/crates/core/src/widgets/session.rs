use std::collections::BTreeMap;
use std::fmt;

use super::{ClientAction, HeadlessClient, Widget, WidgetError};
use crate::sync::{pump_incoming, LoopbackTransport, ObservableState, Transport};
use crate::wire::{self, Message, Value};

/// Messages one action may cause before it counts as an echo loop.
pub fn message_budget(state: &ObservableState) -> usize {
    4 + state.paged_message_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToView,
    ToKernel,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ToView => "to_view",
            Direction::ToKernel => "to_kernel",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptLine {
    pub direction: Direction,
    pub text: String,
}

/// Everything that crossed the wire in a session, plus the end state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub lines: Vec<TranscriptLine>,
    /// Handler invocations per attribute.
    pub handler_firings: BTreeMap<String, u64>,
    /// Kernel-side snapshot of the synced attributes.
    pub backend: BTreeMap<String, Value>,
    /// The view's mirror.
    pub mirror: BTreeMap<String, Value>,
    /// Most messages caused by a single action.
    pub peak_action_messages: usize,
}

impl Transcript {
    /// One encoded message per line, in wire order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.text);
            out.push('\n');
        }
        out
    }

    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        self.lines.iter().filter_map(|l| wire::decode(&l.text).ok())
    }
}

/// A widget and a headless view joined by a loopback transport.
///
/// Starting a session delivers the initial publishes and performs the
/// attach handshake. Each [`act`](Session::act) runs until both ends go
/// quiet and fails with `Deadlock` if that takes more messages than
/// [`message_budget`] allows.
pub struct Session<W> {
    widget: W,
    kernel_end: LoopbackTransport,
    view_end: LoopbackTransport,
    client: HeadlessClient,
    lines: Vec<TranscriptLine>,
    actions: usize,
    peak: usize,
}

impl<W: Widget> Session<W> {
    pub fn start(widget: W) -> Result<Self, WidgetError> {
        let (kernel_end, view_end) = LoopbackTransport::pair();
        let client = HeadlessClient::new(widget.state().widget_id());
        let mut s = Session {
            widget,
            kernel_end,
            view_end,
            client,
            lines: Vec::new(),
            actions: 0,
            peak: 0,
        };
        s.pump_kernel()?;
        s.pump_view()?;
        s.act(&ClientAction::Attach)?;
        Ok(s)
    }

    /// Performs one client action and drains both ends.
    ///
    /// Returns how many messages the action caused.
    pub fn act(&mut self, action: &ClientAction) -> Result<usize, WidgetError> {
        self.actions += 1;
        let mut moved = 0;
        for msg in self.client.act(action) {
            self.record(Direction::ToKernel, &msg)?;
            self.view_end.send(&msg)?;
            moved += 1;
        }
        loop {
            let inbound = pump_incoming(self.widget.state_mut(), &mut self.kernel_end)?;
            let outbound = self.pump_kernel()?;
            self.pump_view()?;
            moved += outbound;
            let budget = message_budget(self.widget.state());
            if moved > budget {
                return Err(WidgetError::Deadlock {
                    action: self.actions,
                    messages: moved,
                    budget,
                });
            }
            if inbound == 0 && outbound == 0 {
                break;
            }
        }
        self.peak = self.peak.max(moved);
        Ok(moved)
    }

    fn record(&mut self, direction: Direction, msg: &Message) -> Result<(), WidgetError> {
        let text = wire::encode(msg).map_err(crate::sync::TransportError::from)?;
        self.lines.push(TranscriptLine { direction, text });
        Ok(())
    }

    fn pump_kernel(&mut self) -> Result<usize, WidgetError> {
        let out = self.widget.state_mut().drain_outbound();
        for msg in &out {
            self.record(Direction::ToView, msg)?;
            self.kernel_end.send(msg)?;
        }
        Ok(out.len())
    }

    fn pump_view(&mut self) -> Result<(), WidgetError> {
        while let Some(msg) = self.view_end.recv()? {
            self.client.receive(msg);
        }
        Ok(())
    }

    pub fn widget(&self) -> &W {
        &self.widget
    }

    pub fn widget_mut(&mut self) -> &mut W {
        &mut self.widget
    }

    pub fn client(&self) -> &HeadlessClient {
        &self.client
    }

    /// Delivers whatever the kernel queued outside of a client action, such
    /// as a kernel-side `set`.
    pub fn sync_kernel(&mut self) -> Result<usize, WidgetError> {
        let n = self.pump_kernel()?;
        self.pump_view()?;
        Ok(n)
    }

    pub fn transcript(&self) -> Transcript {
        let state = self.widget.state();
        let handler_firings = state
            .attribute_names()
            .map(|a| (a.to_owned(), state.handler_invocations(a)))
            .filter(|(_, n)| *n > 0)
            .collect();
        Transcript {
            lines: self.lines.clone(),
            handler_firings,
            backend: state.snapshot(),
            mirror: self.client.mirror(),
            peak_action_messages: self.peak,
        }
    }

    pub fn into_widget(self) -> W {
        self.widget
    }
}

/// Runs `script` against `widget` and returns the widget with the transcript.
pub fn headless_run<W: Widget>(widget: W, script: &[ClientAction]) -> Result<(W, Transcript), WidgetError> {
    let mut session = Session::start(widget)?;
    for action in script {
        session.act(action)?;
    }
    let transcript = session.transcript();
    Ok((session.into_widget(), transcript))
}
