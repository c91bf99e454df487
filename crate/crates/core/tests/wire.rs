use loomxai_core::testkit::{random_message, random_value};
use loomxai_core::wire::{
    decode, encode, encode_capped, paginate, reassemble, Message, MsgType, Origin, PageTarget, Value, WireError,
    MAX_SEQ,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn canonical_text_is_frozen() {
    let v = Value::decode(r#" { "b" : "x", "a" : [1, 2.5, -0.0, 1e3, 1e16, true, null] } "#).unwrap();
    assert_eq!(v.encode(), r#"{"a":[1,2.5,0,1000,1e16,true,null],"b":"x"}"#);
}

#[test]
fn rejects_duplicate_keys_and_non_finite() {
    assert!(Value::decode(r#"{"a":1,"a":2}"#).is_err());
    assert!(Value::decode("NaN").is_err());
    assert!(Value::decode("1e999").is_err());
}

#[test]
fn message_envelope_frozen() {
    let msg = Message::state_update("w1", "pending_input", Value::from("good good"), 3, Origin::Frontend);
    let text = encode(&msg).unwrap();
    assert_eq!(
        text,
        r#"{"attr":"pending_input","msg_type":"state_update","origin":"frontend","payload":"good good","seq":3,"widget_id":"w1"}"#
    );
    assert_eq!(decode(&text).unwrap(), msg);
}

#[test]
fn decode_reports_unknown_type_and_missing_fields() {
    let unknown = r#"{"attr":"","msg_type":"shout","origin":"backend","payload":null,"seq":0,"widget_id":"w"}"#;
    assert_eq!(decode(unknown), Err(WireError::UnknownMsgType("shout".into())));
    assert!(matches!(decode(r#"{"msg_type":"event"}"#), Err(WireError::MissingField(_))));
    assert!(matches!(decode("{"), Err(WireError::Malformed { .. })));
}

#[test]
fn cap_is_enforced_on_encode() {
    let msg = Message::state_update("w", "a", Value::from("x".repeat(100)), 1, Origin::Backend);
    let size = encode(&msg).unwrap().len();
    assert!(encode_capped(&msg, size).is_ok());
    assert_eq!(encode_capped(&msg, size - 1), Err(WireError::PayloadTooLarge { size, cap: size - 1 }));
}

#[test]
fn seq_above_max_is_rejected() {
    let mut msg = Message::state_update("w", "a", Value::Null, MAX_SEQ, Origin::Backend);
    assert!(decode(&encode(&msg).unwrap()).is_ok());
    msg.seq = MAX_SEQ + 1;
    assert!(encode(&msg).is_err() || decode(&encode(&msg).unwrap()).is_err());
}

#[test]
fn empty_list_is_one_empty_page() {
    let target = PageTarget { widget_id: "w", attr: "data", origin: Origin::Backend, first_seq: 5 };
    let pages = paginate(&target, &[], 10, "t").unwrap();
    assert_eq!(pages.len(), 1);
    assert_eq!(pages[0].msg_type, MsgType::Page);
    assert_eq!(reassemble(&pages).unwrap(), Vec::<Value>::new());
}

#[test]
fn missing_pages_are_listed() {
    let rows: Vec<Value> = (0..25).map(Value::from).collect();
    let target = PageTarget { widget_id: "w", attr: "data", origin: Origin::Backend, first_seq: 0 };
    let pages = paginate(&target, &rows, 10, "t").unwrap();
    let partial = [pages[1].clone()];
    assert_eq!(reassemble(&partial), Err(WireError::IncompleteTransfer { missing_pages: vec![0, 2] }));
    assert_eq!(paginate(&target, &rows, 0, "t"), Err(WireError::InvalidPageSize));
}

proptest! {
    #[test]
    fn value_roundtrips_and_encoding_is_canonical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_value(&mut rng, 4);
        let text = v.encode();
        let back = Value::decode(&text).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(back.encode(), text.clone());
        prop_assert!(!text.contains('\n'));
    }

    #[test]
    fn message_roundtrips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msg = random_message(&mut rng);
        let text = encode(&msg).unwrap();
        prop_assert_eq!(decode(&text).unwrap(), msg);
    }

    #[test]
    fn pages_reassemble_in_any_order(n in 0usize..60, page_size in 1usize..13, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Value> = (0..n).map(|_| random_value(&mut rng, 2)).collect();
        let target = PageTarget { widget_id: "w", attr: "data", origin: Origin::Backend, first_seq: 1 };
        let mut pages = paginate(&target, &rows, page_size, "tid").unwrap();
        prop_assert_eq!(pages.len(), n.div_ceil(page_size).max(1));
        pages.shuffle(&mut rng);
        prop_assert_eq!(reassemble(&pages).unwrap(), rows);
    }
}
