use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use loomxai_core::dataset::{CompareOp, FilterSpec, Record, Scalar, TextDataset};
use loomxai_core::demo::{demo_data, demo_vocabulary, DemoConfig};
use loomxai_core::model::{PcaProjector, ToyClassifier};
use loomxai_core::sync::StateConfig;
use loomxai_core::testkit::random_script;
use loomxai_core::widgets::{
    headless_run, serve_connection, ClientAction, DataExplorerWidget, DataSelectorWidget, Direction,
    InferenceExplorerWidget, InferenceOptions, RemoteSession, Session, Widget, WidgetKind,
};
use loomxai_core::wire::{MsgType, Value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ds(rows: &[(&str, Option<&str>)]) -> TextDataset {
    TextDataset::new(
        rows.iter()
            .enumerate()
            .map(|(i, (t, l))| Record::new(format!("r{i}"), *t, *l))
            .collect(),
    )
    .unwrap()
}

fn three() -> TextDataset {
    ds(&[("hi", None), ("hello", None), ("worlds", None)])
}

fn config() -> StateConfig {
    StateConfig::seeded(1)
}

fn sentiment() -> TextDataset {
    ds(&[
        ("good great fine", Some("pos")),
        ("good fine", Some("pos")),
        ("bad awful", Some("neg")),
        ("awful bad bad", Some("neg")),
    ])
}

fn inference(data: &TextDataset) -> InferenceExplorerWidget {
    let clf = ToyClassifier::<f64>::fit(data).unwrap();
    let options = InferenceOptions {
        config: config(),
        ..InferenceOptions::default()
    };
    InferenceExplorerWidget::new("inf", data, clf, PcaProjector::new(), options).unwrap()
}

fn ids(rows: &[Value]) -> Vec<&str> {
    rows.iter().filter_map(|r| r.get("id").and_then(Value::as_str)).collect()
}

#[test]
fn explorer_shows_every_record() {
    let w = DataExplorerWidget::new("ex", &three(), config()).unwrap();
    let session = Session::start(w).unwrap();
    let rows = session.client().get("data").and_then(Value::as_list).unwrap();
    assert_eq!(ids(rows), ["r0", "r1", "r2"]);
    assert!(session.client().get("schema").is_some());
}

#[test]
fn explorer_filter_stays_in_the_view() {
    let w = DataExplorerWidget::new("ex", &three(), config()).unwrap();
    let before = w.state().snapshot();
    let (w, transcript) = headless_run(w, &[ClientAction::ApplyFilter(FilterSpec::default().min_len(5))]).unwrap();
    assert_eq!(w.state().snapshot(), before);
    assert_eq!(w.state().events_seen(), 1);
    assert!(transcript.handler_firings.is_empty());
}

#[test]
fn attach_reply_lists_attributes() {
    let w = DataExplorerWidget::new("ex", &three(), config()).unwrap();
    let (_, transcript) = headless_run(w, &[]).unwrap();
    let reply = transcript
        .messages()
        .find(|m| m.msg_type == MsgType::SyncReply)
        .expect("attach is answered");
    let attrs = reply.payload.get("attrs").and_then(Value::as_map).unwrap();
    assert!(attrs.contains_key("data"));
    assert!(attrs.contains_key("schema"));
    assert_eq!(reply.payload.get("version").and_then(Value::as_str), Some("loomxai/1"));
}

#[test]
fn selector_untouched_selects_everything() {
    let w = DataSelectorWidget::new("sel", &three(), config()).unwrap();
    let (w, _) = headless_run(w, &[]).unwrap();
    assert!(w.spec().is_empty());
    assert_eq!(w.selection(), three());
}

#[test]
fn selector_filter_syncs_back() {
    let w = DataSelectorWidget::new("sel", &three(), config()).unwrap();
    let spec = FilterSpec::default().min_len(5);
    let (w, transcript) = headless_run(w, &[ClientAction::ApplyFilter(spec.clone())]).unwrap();
    assert_eq!(w.spec(), spec);
    assert_eq!(w.selection().texts().collect::<Vec<_>>(), ["hello", "worlds"]);
    assert_eq!(transcript.backend.get("selection_spec"), transcript.mirror.get("selection_spec"));
}

#[test]
fn selector_last_filter_wins() {
    let w = DataSelectorWidget::new("sel", &three(), config()).unwrap();
    let first = FilterSpec::default().min_len(5);
    let second = FilterSpec::default().substring("H");
    let (w, _) = headless_run(w, &[ClientAction::ApplyFilter(first), ClientAction::ApplyFilter(second.clone())]).unwrap();
    assert_eq!(w.spec(), second);
    assert_eq!(w.selection().texts().collect::<Vec<_>>(), ["hi", "hello"]);
}

#[test]
fn selector_rejects_invalid_spec_and_keeps_previous() {
    let w = DataSelectorWidget::new("sel", &three(), config()).unwrap();
    let good = FilterSpec::default().min_len(5);
    let bad = FilterSpec::default().predicate("nope", CompareOp::Eq, Scalar::Number(1.0));
    let script = [ClientAction::ApplyFilter(good.clone()), ClientAction::ApplyFilter(bad)];
    let (w, transcript) = headless_run(w, &script).unwrap();
    assert_eq!(w.spec(), good);
    assert!(!w.state().diagnostics().is_empty());
    // The view is told the kernel's value again.
    assert_eq!(transcript.mirror.get("selection_spec"), Some(&good.to_value()));
}

#[test]
fn kernel_side_spec_reaches_the_view() {
    let w = DataSelectorWidget::new("sel", &three(), config()).unwrap();
    let mut session = Session::start(w).unwrap();
    let spec = FilterSpec::default().exclude("r0");
    session.widget_mut().set_spec(&spec).unwrap();
    session.sync_kernel().unwrap();
    assert_eq!(session.client().get("selection_spec"), Some(&spec.to_value()));
}

#[test]
fn inference_predicts_submitted_text() {
    let (w, transcript) = headless_run(inference(&sentiment()), &[ClientAction::SubmitText("good good".into())]).unwrap();
    let points = w.inferred_points();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].get("label").and_then(Value::as_str), Some("pos"));
    assert_eq!(points[0].get("id").and_then(Value::as_str), Some("input-1"));
    assert_eq!(transcript.handler_firings.get("pending_input"), Some(&1));
    assert_eq!(transcript.mirror.get("inferred_points"), transcript.backend.get("inferred_points"));
}

#[test]
fn model_objects_never_cross_the_wire() {
    let (_, transcript) = headless_run(inference(&sentiment()), &[ClientAction::SubmitText("bad".into())]).unwrap();
    assert!(transcript.messages().all(|m| m.attr != "model" && m.attr != "projector"));
    assert!(!transcript.mirror.contains_key("model"));
}

#[test]
fn brush_over_everything_lists_all_records_by_id() {
    let (w, _) = headless_run(inference(&sentiment()), &[ClientAction::brush(-1e6, -1e6, 1e6, 1e6)]).unwrap();
    assert_eq!(ids(w.neighbor_rows()), ["r0", "r1", "r2", "r3"]);
    let (w, _) = headless_run(
        inference(&sentiment()),
        &[ClientAction::brush(-1e6, -1e6, 1e6, 1e6), ClientAction::Brush(None)],
    )
    .unwrap();
    assert!(w.neighbor_rows().is_empty());
}

#[test]
fn brush_includes_inferred_points() {
    let script = [ClientAction::brush(1e6, 1e6, -1e6, -1e6), ClientAction::SubmitText("fine".into())];
    let (w, _) = headless_run(inference(&sentiment()), &script).unwrap();
    let rows = w.neighbor_rows();
    assert_eq!(ids(rows), ["r0", "r1", "r2", "r3", "input-1"]);
    assert_eq!(rows[4].get("inferred").and_then(Value::as_bool), Some(true));
}

#[test]
fn empty_submission_is_diagnosed() {
    let (w, transcript) = headless_run(inference(&sentiment()), &[ClientAction::SubmitText(String::new())]).unwrap();
    assert!(w.inferred_points().is_empty());
    let diags = transcript.mirror.get("diagnostics").and_then(Value::as_list).unwrap();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].get("error").and_then(Value::as_str), Some("EmptyInput"));
}

#[test]
fn empty_script_only_attaches() {
    let (_, transcript) = headless_run(inference(&sentiment()), &[]).unwrap();
    assert!(transcript.handler_firings.is_empty());
    let to_kernel: Vec<_> = transcript.lines.iter().filter(|l| l.direction == Direction::ToKernel).collect();
    assert_eq!(to_kernel.len(), 1);
    assert!(to_kernel[0].text.contains(r#""msg_type":"sync_request""#));
    assert_eq!(transcript.backend.get("points"), transcript.mirror.get("points"));
}

#[test]
fn each_submission_fires_once() {
    let script: Vec<_> = ["good", "bad", "fine"].iter().map(|t| ClientAction::SubmitText(t.to_string())).collect();
    let (w, transcript) = headless_run(inference(&sentiment()), &script).unwrap();
    assert_eq!(transcript.handler_firings.get("pending_input"), Some(&3));
    let labels: Vec<_> = w.inferred_points().iter().filter_map(|p| p.get("label").and_then(Value::as_str)).collect();
    assert_eq!(labels, ["pos", "neg", "pos"]);
    assert!(transcript.peak_action_messages <= 4 + w.state().paged_message_count());
}

#[test]
fn inferred_points_are_capped() {
    let clf = ToyClassifier::<f64>::fit(&sentiment()).unwrap();
    let options = InferenceOptions {
        inferred_cap: 2,
        config: config(),
        ..InferenceOptions::default()
    };
    let w = InferenceExplorerWidget::new("inf", &sentiment(), clf, PcaProjector::new(), options).unwrap();
    let script: Vec<_> = ["good", "bad", "fine"].iter().map(|t| ClientAction::SubmitText(t.to_string())).collect();
    let (w, _) = headless_run(w, &script).unwrap();
    assert_eq!(ids(w.inferred_points()), ["input-2", "input-3"]);
}

/// The same script over TCP and over the in-process loopback yields the
/// same messages in both directions.
#[test]
fn socket_and_loopback_transcripts_match() {
    let cfg = DemoConfig { n_records: 40, ..DemoConfig::default() };
    let data = demo_data(&cfg).unwrap();
    let vocab: Vec<String> = demo_vocabulary(&cfg).unwrap().into_values().flatten().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let script = random_script(&mut rng, WidgetKind::InferenceExplorer, &data, &vocab, 12);

    let (_, local) = headless_run(inference(&data), &script).unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let served = data.clone();
    let server = thread::spawn(move || {
        let mut w = inference(&served);
        let (stream, _) = listener.accept().unwrap();
        serve_connection(&mut w, stream).unwrap();
        w.state().snapshot()
    });
    let mut remote = RemoteSession::connect(addr, "inf", Duration::from_millis(200)).unwrap();
    for action in &script {
        remote.act(action).unwrap();
    }
    let mirror = remote.client().mirror();
    let lines: Vec<_> = remote.lines().iter().map(|l| (l.direction, l.text.clone())).collect();
    drop(remote);
    let backend = server.join().unwrap();

    let expected: Vec<_> = local.lines.iter().map(|l| (l.direction, l.text.clone())).collect();
    assert_eq!(lines, expected);
    assert_eq!(mirror, local.mirror);
    assert_eq!(backend, local.backend);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random gestures never stall a widget, and both ends agree afterwards
    /// on every attribute the view can see.
    #[test]
    fn random_scripts_converge(seed in any::<u64>(), kind in 0usize..3) {
        let kind = [WidgetKind::DataExplorer, WidgetKind::DataSelector, WidgetKind::InferenceExplorer][kind];
        let cfg = DemoConfig { n_records: 30, seed, ..DemoConfig::default() };
        let data = demo_data(&cfg).unwrap();
        let vocab: Vec<String> = demo_vocabulary(&cfg).unwrap().into_values().flatten().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let script = random_script(&mut rng, kind, &data, &vocab, 15);
        let transcript = match kind {
            WidgetKind::DataExplorer => headless_run(DataExplorerWidget::new("w", &data, config()).unwrap(), &script).unwrap().1,
            WidgetKind::DataSelector => headless_run(DataSelectorWidget::new("w", &data, config()).unwrap(), &script).unwrap().1,
            WidgetKind::InferenceExplorer => headless_run(inference(&data), &script).unwrap().1,
        };
        for (attr, value) in &transcript.backend {
            if attr == "model" || attr == "projector" {
                continue;
            }
            prop_assert_eq!(transcript.mirror.get(attr), Some(value), "attr {}", attr);
        }
    }
}
