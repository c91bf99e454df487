use std::sync::{Arc, Mutex};

use loomxai_core::sync::{
    flush, pump_incoming, resolve_conflict, CommTransport, Dispatched, LoopbackTransport, ObservableState, Stamp,
    StateConfig, SyncError, SyncMode, Transport, Winner, PAYLOAD_CAP_ENV,
};
use loomxai_core::wire::{Message, Origin, Value};
use proptest::prelude::*;

fn state() -> ObservableState {
    ObservableState::new("w", StateConfig::seeded(0))
}

fn frontend(attr: &str, value: Value, seq: u64) -> Message {
    Message::state_update("w", attr, value, seq, Origin::Frontend)
}

#[test]
fn frontend_write_runs_handler_once_without_echo() {
    let mut s = state();
    s.define_attribute("x", Value::from(0), SyncMode::TwoWay).unwrap();
    s.drain_outbound();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    s.register_handler("x", move |_, c| {
        log.lock().unwrap().push((c.old.clone(), c.new.clone()));
        Ok(())
    })
    .unwrap();
    assert_eq!(s.dispatch_incoming(frontend("x", Value::from(5), 1)), Dispatched::Applied);
    // Replaying the same stamp changes nothing.
    assert_eq!(s.dispatch_incoming(frontend("x", Value::from(5), 1)), Dispatched::Stale);
    assert_eq!(*seen.lock().unwrap(), [(Value::from(0), Value::from(5))]);
    assert_eq!(s.pending_outbound(), 0);
    assert_eq!(s.handler_invocations("x"), 1);
}

#[test]
fn backend_write_publishes_and_skips_handlers() {
    let mut s = state();
    s.define_attribute("x", Value::from(0), SyncMode::TwoWay).unwrap();
    s.register_handler("x", |_, _| Err("must not run".into())).unwrap();
    s.drain_outbound();
    s.set("x", Value::from(2)).unwrap();
    let out = s.drain_outbound();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].origin, Origin::Backend);
    assert_eq!(s.handler_invocations("x"), 0);
}

#[test]
fn one_way_refuses_frontend_writes() {
    let mut s = state();
    s.define_attribute("x", Value::from(0), SyncMode::OneWayToView).unwrap();
    assert!(matches!(s.dispatch_incoming(frontend("x", Value::from(1), 9)), Dispatched::Dropped(_)));
    assert_eq!(s.get("x"), Some(&Value::from(0)));
    assert!(matches!(
        s.set_attribute("x", Value::from(1), Origin::Frontend),
        Err(SyncError::ModeViolation { .. })
    ));
}

#[test]
fn duplicate_and_unknown_attributes() {
    let mut s = state();
    s.define_attribute("x", Value::Null, SyncMode::TwoWay).unwrap();
    assert_eq!(
        s.define_attribute("x", Value::Null, SyncMode::TwoWay),
        Err(SyncError::DuplicateAttribute("x".into()))
    );
    assert_eq!(s.set("y", Value::Null), Err(SyncError::UnknownAttribute("y".into())));
    assert!(matches!(s.dispatch_incoming(frontend("y", Value::Null, 1)), Dispatched::Dropped(_)));
}

#[test]
fn validator_rejection_republishes_current_value() {
    let mut s = state();
    s.define_attribute("n", Value::from(1), SyncMode::TwoWay).unwrap();
    s.set_validator("n", |v| v.as_f64().filter(|n| *n >= 0.0).map(|_| ()).ok_or_else(|| "negative".into()))
        .unwrap();
    s.drain_outbound();
    assert_eq!(s.dispatch_incoming(frontend("n", Value::from(-3), 4)), Dispatched::Rejected);
    let out = s.drain_outbound();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].payload, Value::from(1));
    assert!(out[0].seq > 4);
    assert_eq!(s.diagnostics().len(), 1);
}

#[test]
fn comm_adapter_carries_wire_text() {
    let sent = Arc::new(Mutex::new(Vec::new()));
    let log = sent.clone();
    let mut comm = CommTransport::new(move |text| log.lock().unwrap().push(text.to_owned()));
    let mut s = state();
    s.define_attribute("x", Value::from("a"), SyncMode::TwoWay).unwrap();
    assert_eq!(flush(&mut s, &mut comm).unwrap(), 1);
    assert!(sent.lock().unwrap()[0].contains(r#""payload":"a""#));
    comm.deliver(r#"{"attr":"x","msg_type":"state_update","origin":"frontend","payload":"b","seq":7,"widget_id":"w"}"#);
    assert_eq!(pump_incoming(&mut s, &mut comm).unwrap(), 1);
    assert_eq!(s.get("x"), Some(&Value::from("b")));
}

#[test]
fn loopback_delivers_in_order() {
    let (mut a, mut b) = LoopbackTransport::pair();
    for i in 0..3 {
        a.send(&frontend("x", Value::from(i), i as u64)).unwrap();
    }
    let got: Vec<u64> = std::iter::from_fn(|| b.recv().unwrap()).map(|m| m.seq).collect();
    assert_eq!(got, [0, 1, 2]);
}

#[test]
fn small_cap_pages_large_lists() {
    let config = StateConfig { payload_cap: 2_000, page_size: 1000, seed: Some(0) };
    let mut s = ObservableState::new("w", config);
    let rows: Vec<Value> = (0..300).map(|i| Value::from(format!("row number {i}"))).collect();
    s.define_paged("data", rows.clone()).unwrap();
    let out = s.drain_outbound();
    assert!(out.len() > 1);
    assert!(out.iter().all(|m| loomxai_core::wire::encode_capped(m, 2_000).is_ok()));
    assert_eq!(loomxai_core::wire::reassemble(&out).unwrap(), rows);
    assert_eq!(s.paged_message_count(), out.len());
}

#[test]
fn env_override_sets_payload_cap() {
    // Only this test touches the variable.
    std::env::set_var(PAYLOAD_CAP_ENV, "4096");
    assert_eq!(StateConfig::default().with_env_overrides().payload_cap, 4096);
    std::env::set_var(PAYLOAD_CAP_ENV, "zero");
    assert_eq!(StateConfig::default().with_env_overrides(), StateConfig::default());
    std::env::remove_var(PAYLOAD_CAP_ENV);
}

fn origin(b: bool) -> Origin {
    if b { Origin::Frontend } else { Origin::Backend }
}

proptest! {
    /// Both ends pick the same winner for any pair of stamps.
    #[test]
    fn lww_is_symmetric(a in 0u64..50, ao in any::<bool>(), b in 0u64..50, bo in any::<bool>()) {
        let x = Stamp::new(a, origin(ao));
        let y = Stamp::new(b, origin(bo));
        let at_x = resolve_conflict(x, y);
        let at_y = resolve_conflict(y, x);
        if x == y {
            prop_assert_eq!((at_x, at_y), (Winner::Local, Winner::Local));
        } else {
            let winner_x = if at_x == Winner::Local { x } else { y };
            let winner_y = if at_y == Winner::Local { y } else { x };
            prop_assert_eq!(winner_x, winner_y);
        }
    }

    /// Whatever order frontend writes arrive in, the kernel ends on the one
    /// with the highest stamp and runs handlers at most once per write.
    #[test]
    fn highest_stamp_wins_regardless_of_order(mut seqs in proptest::collection::vec(1u64..1000, 1..20)) {
        let mut s = state();
        s.define_attribute("x", Value::Null, SyncMode::TwoWay).unwrap();
        s.register_handler("x", |_, _| Ok(())).unwrap();
        let max = *seqs.iter().max().unwrap();
        for &seq in &seqs {
            s.dispatch_incoming(frontend("x", Value::from(seq), seq));
        }
        prop_assert_eq!(s.get("x"), Some(&Value::from(max)));
        seqs.sort_unstable();
        seqs.dedup();
        prop_assert!(s.handler_invocations("x") <= seqs.len() as u64);
        prop_assert_eq!(s.stamp("x"), Some(Stamp::new(max, Origin::Frontend)));
    }
}
