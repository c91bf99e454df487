//! Seeded generators for randomized checks: messages, datasets, filter specs,
//! coordinates and client scripts.
//!
//! Shared by the acceptance runner and the integration tests so both
//! exercise the same input distributions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{CompareOp, ColumnKind, FilterSpec, Record, Scalar, TextDataset};
use crate::model::Rect;
use crate::widgets::{ClientAction, WidgetKind};
use crate::wire::{Message, MsgType, Origin, PageInfo, Value};
use crate::Coord;

const WORDS: [&str; 12] = [
    "alpha", "Beta", "gamma", "DELTA", "échec", "naïve", "straße", "x", "", "a b", "tab\there", "quote\"d",
];

pub fn random_string<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(0..4);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_number<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(-1000i64..1000) as f64,
        1 => rng.gen_range(-1e6..1e6),
        2 => rng.gen::<f64>() * 10f64.powi(rng.gen_range(-20..20)),
        3 => (rng.gen::<i64>() >> rng.gen_range(0..40)) as f64,
        _ => -0.0,
    }
}

pub fn random_value<R: Rng>(rng: &mut R, depth: usize) -> Value {
    let pick = if depth == 0 { rng.gen_range(0..4) } else { rng.gen_range(0..6) };
    match pick {
        0 => Value::Null,
        1 => Value::Bool(rng.gen()),
        2 => Value::Number(random_number(rng)),
        3 => Value::String(random_string(rng)),
        4 => Value::List((0..rng.gen_range(0..4)).map(|_| random_value(rng, depth - 1)).collect()),
        _ => Value::Map(
            (0..rng.gen_range(0..4))
                .map(|_| (random_string(rng), random_value(rng, depth - 1)))
                .collect(),
        ),
    }
}

/// A structurally valid message of any type.
pub fn random_message<R: Rng>(rng: &mut R) -> Message {
    let msg_type = *MsgType::ALL.choose(rng).unwrap();
    let origin = if rng.gen() { Origin::Backend } else { Origin::Frontend };
    let mut msg = Message::new(
        random_string(rng),
        msg_type,
        random_string(rng),
        random_value(rng, 3),
        rng.gen_range(0..=crate::wire::MAX_SEQ),
        origin,
    );
    if msg_type == MsgType::Page {
        let page_count = rng.gen_range(1..10);
        msg.page_info = Some(PageInfo {
            page_index: rng.gen_range(0..page_count),
            page_count,
            transfer_id: format!("{:032x}", rng.gen::<u128>()),
        });
        msg.payload = Value::List((0..rng.gen_range(0..4)).map(|_| random_value(rng, 2)).collect());
    }
    msg
}

/// Up to `max_rows` records with a numeric `score` column, a `topic`
/// category and some missing cells.
pub fn random_dataset<R: Rng>(rng: &mut R, max_rows: usize) -> TextDataset {
    let n = rng.gen_range(0..=max_rows);
    let topics = ["news", "sport", "tech", "food"];
    let labels = ["pos", "neg", "neutral"];
    let records = (0..n)
        .map(|i| {
            let words = rng.gen_range(0..8);
            let text: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect();
            let label = if rng.gen_bool(0.9) { Some(*labels.choose(rng).unwrap()) } else { None };
            let mut r = Record::new(format!("r{i:04}"), text.join(" "), label);
            if rng.gen_bool(0.8) {
                r = r.with_extra("score", Scalar::Number(rng.gen_range(0..20) as f64 / 2.0));
            }
            if rng.gen_bool(0.8) {
                r = r.with_extra("topic", Scalar::Text(topics.choose(rng).unwrap().to_string()));
            }
            r
        })
        .collect();
    TextDataset::new(records).expect("generated ids are unique")
}

/// A spec that validates against `ds`'s schema.
pub fn random_filter_spec<R: Rng>(rng: &mut R, ds: &TextDataset) -> FilterSpec {
    let mut spec = FilterSpec::default();
    if rng.gen_bool(0.4) {
        let words = ["a", "AL", "ß", "é", "x", "ta", "na", "ve"];
        spec = spec.substring(words.choose(rng).unwrap());
    }
    let lo = rng.gen_range(0..20);
    if rng.gen_bool(0.4) {
        spec = spec.min_len(lo);
    }
    if rng.gen_bool(0.4) {
        spec = spec.max_len(lo + rng.gen_range(0..40));
    }
    let columns: Vec<(&String, &ColumnKind)> = ds.schema().iter().collect();
    for _ in 0..rng.gen_range(0..3) {
        if rng.gen_bool(0.3) {
            let op = *[CompareOp::Eq, CompareOp::Ne].choose(rng).unwrap();
            let label = *["pos", "neg", "neutral"].choose(rng).unwrap();
            spec = spec.predicate("label", op, Scalar::Text(label.into()));
            continue;
        }
        let Some((name, kind)) = columns.choose(rng) else { continue };
        spec = match kind {
            ColumnKind::Number => {
                let op = *[CompareOp::Eq, CompareOp::Ne, CompareOp::Le, CompareOp::Ge].choose(rng).unwrap();
                spec.predicate(name, op, Scalar::Number(rng.gen_range(0..20) as f64 / 2.0))
            }
            _ => {
                let op = *[CompareOp::Eq, CompareOp::Ne].choose(rng).unwrap();
                let topic = *["news", "sport", "tech", "food"].choose(rng).unwrap();
                spec.predicate(name, op, Scalar::Text(topic.into()))
            }
        };
    }
    let ids: Vec<&str> = ds.ids().collect();
    for _ in 0..rng.gen_range(0..3) {
        if let Some(id) = ids.choose(rng) {
            spec = spec.exclude(id);
        }
    }
    spec
}

/// Points on a quarter-unit grid, so distances are exact in `f64` and ties
/// are common.
pub fn random_grid_coords<R: Rng>(rng: &mut R, n: usize) -> Vec<Coord> {
    (0..n)
        .map(|_| [rng.gen_range(-40..=40) as f64 / 4.0, rng.gen_range(-40..=40) as f64 / 4.0])
        .collect()
}

pub fn random_rect<R: Rng>(rng: &mut R, span: f64) -> Rect<f64> {
    let mut c = || rng.gen_range(-span..span);
    Rect::new(c(), c(), c(), c())
}

/// Script of `len` gestures plausible for `kind`, including malformed writes.
///
/// `vocab` supplies words for text submissions.
pub fn random_script<R: Rng>(rng: &mut R, kind: WidgetKind, ds: &TextDataset, vocab: &[String], len: usize) -> Vec<ClientAction> {
    (0..len).map(|_| random_action(rng, kind, ds, vocab)).collect()
}

fn random_action<R: Rng>(rng: &mut R, kind: WidgetKind, ds: &TextDataset, vocab: &[String]) -> ClientAction {
    let roll = rng.gen_range(0..100);
    // Shared tail: handshakes, stray events and writes the kernel must refuse.
    let misc = |rng: &mut R| match rng.gen_range(0..5) {
        0 => ClientAction::Attach,
        1 => ClientAction::Event(Value::map([("kind", Value::from("click")), ("n", Value::from(rng.gen_range(0..9)))])),
        2 => ClientAction::SetRaw {
            attr: ["data", "stats", "schema", "points", "inferred_points", "nope"].choose(rng).unwrap().to_string(),
            value: random_value(rng, 2),
        },
        3 => ClientAction::SetRaw {
            attr: ["selection_spec", "brush_rect", "pending_input"].choose(rng).unwrap().to_string(),
            value: random_value(rng, 2),
        },
        _ => ClientAction::ApplyFilter(random_filter_spec(rng, ds)),
    };
    match kind {
        WidgetKind::DataExplorer | WidgetKind::DataSelector => {
            if roll < 70 {
                ClientAction::ApplyFilter(random_filter_spec(rng, ds))
            } else {
                misc(rng)
            }
        }
        WidgetKind::InferenceExplorer => match roll {
            0..=44 => {
                let n = rng.gen_range(0..6);
                let words: Vec<&str> = (0..n).filter_map(|_| vocab.choose(rng).map(String::as_str)).collect();
                ClientAction::SubmitText(words.join(" "))
            }
            45..=74 => ClientAction::Brush(Some(random_rect(rng, 1.5))),
            75..=79 => ClientAction::Brush(None),
            _ => misc(rng),
        },
    }
}

/// Label counts, handy for majority checks.
pub fn label_counts<'a>(labels: impl IntoIterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
}
