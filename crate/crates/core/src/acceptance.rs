//! The headless acceptance suite shared by `loomxai accept` and the
//! `acceptance` test target.
//!
//! Each criterion is seeded, runs without a browser and yields one report
//! line: `{"id":…,"measured":{…},"pass":…}` in the canonical encoding.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{apply_filter, TextDataset};
use crate::demo::{demo_data, demo_vocabulary, DemoConfig};
use crate::model::{knn, points_in_rect, ClassifierAdapter, PcaProjector, Projector, Rect};
use crate::sync::{StateConfig, SyncMode};
use crate::testkit;
use crate::widgets::{
    ClientAction, DataExplorerWidget, DataSelectorWidget, InferenceExplorerWidget, InferenceOptions, Session,
    Widget, WidgetError, WidgetKind,
};
use crate::wire::{self, paginate, reassemble, PageTarget, Origin, Reassembler, Value, WireError};
use crate::{Coord, DefaultClassifier};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcceptError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

/// One acceptance criterion.
pub struct Criterion {
    pub number: u8,
    pub id: &'static str,
    /// Short suite name accepted on the command line.
    pub alias: &'static str,
    pub summary: &'static str,
    run: fn(u64) -> Result<Outcome, String>,
}

struct Outcome {
    pass: bool,
    measured: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: &'static str,
    pub pass: bool,
    pub measured: Value,
}

impl CriterionReport {
    pub fn to_line(&self) -> String {
        Value::map([
            ("id", Value::from(self.id)),
            ("measured", self.measured.clone()),
            ("pass", Value::from(self.pass)),
        ])
        .encode()
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion {
        number: 1,
        id: "dp1-isolation",
        alias: "dp1",
        summary: "1000 random view actions leave the explorer's attributes bit-identical, under 5 s",
        run: dp1_isolation,
    },
    Criterion {
        number: 2,
        id: "dp2-oracle",
        alias: "dp2",
        summary: "selection() equals apply_filter on 200 random dataset/spec pairs, under 10 s",
        run: dp2_oracle,
    },
    Criterion {
        number: 3,
        id: "sync-convergence",
        alias: "convergence",
        summary: "after draining, the view mirror equals the kernel snapshot in 100 random sessions",
        run: sync_convergence,
    },
    Criterion {
        number: 4,
        id: "dp3-exactly-once",
        alias: "dp3",
        summary: "k submissions give k handler firings and one inferred point per valid input, labels match the model",
        run: dp3_exactly_once,
    },
    Criterion {
        number: 5,
        id: "no-echo-loops",
        alias: "liveness",
        summary: "100 random 500-action sessions settle within 4 + pages messages per action",
        run: no_echo_loops,
    },
    Criterion {
        number: 6,
        id: "wire-roundtrip",
        alias: "wire",
        summary: "decode(encode(m)) == m for 10000 messages; pages reassemble; the cap holds at cap and cap-1",
        run: wire_roundtrip,
    },
    Criterion {
        number: 7,
        id: "geometry-oracles",
        alias: "geometry",
        summary: "knn and points_in_rect match brute force on 50 random 100-point instances each",
        run: geometry_oracles,
    },
    Criterion {
        number: 8,
        id: "projector-consistency",
        alias: "projector",
        summary: "transform reproduces fitted coords within 1e-6, refits are byte-identical, rank-1 data stays on one axis",
        run: projector_consistency,
    },
    Criterion {
        number: 9,
        id: "end-to-end",
        alias: "e2e",
        summary: "a class-A sentence on the demo data is labeled A and its 10 neighbors are mostly A, under 10 s",
        run: end_to_end,
    },
];

/// Criteria selected by `suite`: `all`, a criterion id or its alias.
pub fn select(suite: &str) -> Result<Vec<&'static Criterion>, AcceptError> {
    if suite == "all" {
        return Ok(CRITERIA.iter().collect());
    }
    CRITERIA
        .iter()
        .find(|c| c.id == suite || c.alias == suite)
        .map(|c| vec![c])
        .ok_or_else(|| AcceptError::UnknownSuite(suite.to_owned()))
}

pub fn run_criterion(c: &Criterion, seed: u64) -> CriterionReport {
    let outcome = (c.run)(seed).unwrap_or_else(|e| Outcome {
        pass: false,
        measured: Value::map([("error", Value::from(e))]),
    });
    CriterionReport {
        id: c.id,
        pass: outcome.pass,
        measured: outcome.measured,
    }
}

pub fn run_suite(suite: &str, seed: u64) -> Result<Vec<CriterionReport>, AcceptError> {
    Ok(select(suite)?.into_iter().map(|c| run_criterion(c, seed)).collect())
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn seconds(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0
}

fn measured<const N: usize>(entries: [(&str, Value); N]) -> Value {
    Value::map(entries)
}

fn demo(n: usize, seed: u64) -> Result<TextDataset, String> {
    demo_data(&DemoConfig {
        n_records: n,
        seed,
        ..DemoConfig::default()
    })
    .map_err(fail)
}

fn inference_widget(id: &str, ds: &TextDataset, seed: u64) -> Result<InferenceExplorerWidget, WidgetError> {
    let clf = DefaultClassifier::fit(ds)?;
    let options = InferenceOptions {
        config: StateConfig::seeded(seed),
        ..InferenceOptions::default()
    };
    InferenceExplorerWidget::new(id, ds, clf, PcaProjector::new(), options)
}

fn vocab_of(seed: u64) -> Result<Vec<String>, String> {
    let cfg = DemoConfig {
        seed,
        ..DemoConfig::default()
    };
    let pools = demo_vocabulary(&cfg).map_err(fail)?;
    Ok(pools.into_values().flatten().collect())
}

fn dp1_isolation(seed: u64) -> Result<Outcome, String> {
    const ACTIONS: usize = 1000;
    let start = Instant::now();
    let ds = demo(200, seed)?;
    let widget = DataExplorerWidget::new("dp1", &ds, StateConfig::seeded(seed)).map_err(fail)?;
    let mut session = Session::start(widget).map_err(fail)?;
    let encoded = |s: &Session<DataExplorerWidget>| Value::Map(s.widget().state().snapshot()).encode();
    let before = encoded(&session);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let script = testkit::random_script(&mut rng, WidgetKind::DataExplorer, &ds, &[], ACTIONS);
    let mut mismatches = 0u64;
    for action in &script {
        session.act(action).map_err(fail)?;
        if encoded(&session) != before {
            mismatches += 1;
        }
    }
    let state = session.widget().state();
    let applied: u64 = state.attribute_names().map(|a| state.applied_frontend_changes(a)).sum();
    let two_way = state.attribute_names().filter(|a| state.mode(a) == Some(SyncMode::TwoWay)).count();
    let secs = seconds(start);
    Ok(Outcome {
        pass: mismatches == 0 && applied == 0 && two_way == 0 && secs < 5.0,
        measured: measured([
            ("actions", Value::from(ACTIONS)),
            ("mismatches", Value::from(mismatches)),
            ("frontend_writes_applied", Value::from(applied)),
            ("seconds", Value::from(secs)),
        ]),
    })
}

fn dp2_oracle(seed: u64) -> Result<Outcome, String> {
    const PAIRS: usize = 200;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0u64;
    let mut rows_checked = 0usize;
    for i in 0..PAIRS {
        let ds = testkit::random_dataset(&mut rng, 500);
        let spec = testkit::random_filter_spec(&mut rng, &ds);
        let widget = DataSelectorWidget::new("dp2", &ds, StateConfig::seeded(seed + i as u64)).map_err(fail)?;
        let mut session = Session::start(widget).map_err(fail)?;
        session.act(&ClientAction::ApplyFilter(spec.clone())).map_err(fail)?;
        let expected = apply_filter(&ds, &spec).map_err(fail)?;
        let got = session.widget().selection();
        rows_checked += expected.len();
        if got != expected {
            mismatches += 1;
        }
    }
    let secs = seconds(start);
    Ok(Outcome {
        pass: mismatches == 0 && secs < 10.0,
        measured: measured([
            ("pairs", Value::from(PAIRS)),
            ("mismatches", Value::from(mismatches)),
            ("selected_rows", Value::from(rows_checked)),
            ("seconds", Value::from(secs)),
        ]),
    })
}

/// Attributes whose view copy differs from the kernel's, split by mode.
fn divergence<W: Widget>(s: &Session<W>) -> (usize, usize) {
    let state = s.widget().state();
    let client = s.client();
    let mut two_way = 0;
    let mut any = 0;
    for (name, value) in state.snapshot() {
        if client.get(&name) != Some(&value) {
            any += 1;
            if state.mode(&name) == Some(SyncMode::TwoWay) {
                two_way += 1;
            }
        }
    }
    (two_way, any)
}

fn sync_convergence(seed: u64) -> Result<Outcome, String> {
    const SESSIONS: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab_of(seed)?;
    let (mut two_way, mut any) = (0, 0);
    let mut actions = 0;
    for i in 0..SESSIONS {
        let len = rng.gen_range(1..80);
        actions += len;
        let (t, a) = if i % 2 == 0 {
            let ds = testkit::random_dataset(&mut rng, 100);
            let script = testkit::random_script(&mut rng, WidgetKind::DataSelector, &ds, &[], len);
            let w = DataSelectorWidget::new("sel", &ds, StateConfig::seeded(i as u64)).map_err(fail)?;
            let mut s = Session::start(w).map_err(fail)?;
            for a in &script {
                s.act(a).map_err(fail)?;
            }
            divergence(&s)
        } else {
            let ds = demo(40, seed)?;
            let script = testkit::random_script(&mut rng, WidgetKind::InferenceExplorer, &ds, &vocab, len);
            let w = inference_widget("inf", &ds, i as u64).map_err(fail)?;
            let mut s = Session::start(w).map_err(fail)?;
            for a in &script {
                s.act(a).map_err(fail)?;
            }
            divergence(&s)
        };
        two_way += t;
        any += a;
    }
    Ok(Outcome {
        pass: two_way == 0 && any == 0,
        measured: measured([
            ("sessions", Value::from(SESSIONS)),
            ("actions", Value::from(actions)),
            ("diverged_two_way", Value::from(two_way)),
            ("diverged_any", Value::from(any)),
        ]),
    })
}

fn dp3_exactly_once(seed: u64) -> Result<Outcome, String> {
    const SCRIPTS: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab_of(seed)?;
    let ds = demo(120, seed)?;
    let oracle = DefaultClassifier::fit(&ds).map_err(fail)?;
    let (mut firing_errors, mut count_errors, mut label_errors) = (0, 0, 0);
    let mut submissions = 0;
    for i in 0..SCRIPTS {
        let k = rng.gen_range(1..=30);
        let mut texts = Vec::with_capacity(k);
        for _ in 0..k {
            let text = match rng.gen_range(0..10) {
                0 => String::new(),
                1 => "?! ...".to_owned(),
                _ => {
                    let n = rng.gen_range(1..6);
                    (0..n).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
                }
            };
            texts.push(text);
        }
        let w = inference_widget("dp3", &ds, i as u64).map_err(fail)?;
        let mut s = Session::start(w).map_err(fail)?;
        for text in &texts {
            s.act(&ClientAction::SubmitText(text.clone())).map_err(fail)?;
            if rng.gen_bool(0.2) {
                s.act(&ClientAction::Brush(Some(testkit::random_rect(&mut rng, 1.0)))).map_err(fail)?;
            }
        }
        submissions += k;
        let valid: Vec<&String> = texts.iter().filter(|t| !crate::model::tokenize(t).is_empty()).collect();
        let w = s.widget();
        if w.state().handler_invocations("pending_input") != k as u64 {
            firing_errors += 1;
        }
        let inferred = w.inferred_points();
        if inferred.len() != valid.len() {
            count_errors += 1;
        }
        for (entry, text) in inferred.iter().zip(&valid) {
            let expected = oracle.predict(text).map_err(fail)?.label;
            let same_text = entry.get("text").and_then(Value::as_str) == Some(text.as_str());
            if !same_text || entry.get("label").and_then(Value::as_str) != Some(expected.as_str()) {
                label_errors += 1;
            }
        }
    }
    Ok(Outcome {
        pass: firing_errors == 0 && count_errors == 0 && label_errors == 0,
        measured: measured([
            ("scripts", Value::from(SCRIPTS)),
            ("submissions", Value::from(submissions)),
            ("firing_mismatches", Value::from(firing_errors)),
            ("count_mismatches", Value::from(count_errors)),
            ("label_mismatches", Value::from(label_errors)),
        ]),
    })
}

fn no_echo_loops(seed: u64) -> Result<Outcome, String> {
    const SESSIONS: usize = 100;
    const ACTIONS: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab_of(seed)?;
    let ds = demo(60, seed)?;
    let mut deadlocks = 0;
    let mut peak = 0;
    let mut lines = 0;

    fn drive<W: Widget>(w: W, script: &[ClientAction], deadlocks: &mut usize, peak: &mut usize, lines: &mut usize) -> Result<(), String> {
        let mut s = Session::start(w).map_err(fail)?;
        for a in script {
            match s.act(a) {
                Ok(_) => {}
                Err(WidgetError::Deadlock { .. }) => *deadlocks += 1,
                Err(e) => return Err(e.to_string()),
            }
        }
        let t = s.transcript();
        *peak = (*peak).max(t.peak_action_messages);
        *lines += t.lines.len();
        Ok(())
    }

    for i in 0..SESSIONS {
        let cfg = StateConfig::seeded(i as u64);
        match i % 3 {
            0 => {
                let script = testkit::random_script(&mut rng, WidgetKind::DataExplorer, &ds, &[], ACTIONS);
                let w = DataExplorerWidget::new("w", &ds, cfg).map_err(fail)?;
                drive(w, &script, &mut deadlocks, &mut peak, &mut lines)?;
            }
            1 => {
                let script = testkit::random_script(&mut rng, WidgetKind::DataSelector, &ds, &[], ACTIONS);
                let w = DataSelectorWidget::new("w", &ds, cfg).map_err(fail)?;
                drive(w, &script, &mut deadlocks, &mut peak, &mut lines)?;
            }
            _ => {
                let script = testkit::random_script(&mut rng, WidgetKind::InferenceExplorer, &ds, &vocab, ACTIONS);
                let w = inference_widget("w", &ds, i as u64).map_err(fail)?;
                drive(w, &script, &mut deadlocks, &mut peak, &mut lines)?;
            }
        }
    }
    Ok(Outcome {
        pass: deadlocks == 0,
        measured: measured([
            ("sessions", Value::from(SESSIONS)),
            ("actions_per_session", Value::from(ACTIONS)),
            ("deadlocks", Value::from(deadlocks)),
            ("peak_messages_per_action", Value::from(peak)),
            ("transcript_lines", Value::from(lines)),
        ]),
    })
}

fn wire_roundtrip(seed: u64) -> Result<Outcome, String> {
    const MESSAGES: usize = 10_000;
    const PAGINATIONS: usize = 200;
    const CAP_CHECKS: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut roundtrip_failures = 0;
    for _ in 0..MESSAGES {
        let msg = testkit::random_message(&mut rng);
        let text = wire::encode(&msg).map_err(fail)?;
        match wire::decode(&text) {
            Ok(back) if back == msg && wire::encode(&back).ok().as_deref() == Some(text.as_str()) => {}
            _ => roundtrip_failures += 1,
        }
    }

    let mut page_failures = 0;
    for i in 0..PAGINATIONS {
        let n = rng.gen_range(0..300);
        let rows: Vec<Value> = (0..n).map(|_| testkit::random_value(&mut rng, 2)).collect();
        let page_size = rng.gen_range(1..60);
        let target = PageTarget {
            widget_id: "w",
            attr: "data",
            origin: Origin::Backend,
            first_seq: rng.gen_range(1..1000),
        };
        let transfer = format!("{i:032x}");
        let mut pages = paginate(&target, &rows, page_size, &transfer).map_err(fail)?;
        pages.shuffle(&mut rng);
        // Through the wire and back, in arbitrary order.
        let decoded: Vec<_> = pages
            .iter()
            .map(|p| wire::decode(&wire::encode(p).unwrap()))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let direct = reassemble(&decoded).map_err(fail)?;
        let mut buffer = Reassembler::new();
        let mut streamed = None;
        for p in decoded {
            if let Some(done) = buffer.accept(p).map_err(fail)? {
                streamed = Some(done.rows);
            }
        }
        if direct != rows || streamed.as_ref() != Some(&rows) {
            page_failures += 1;
        }
    }

    let mut cap_failures = 0;
    for _ in 0..CAP_CHECKS {
        let msg = testkit::random_message(&mut rng);
        let size = wire::encode(&msg).map_err(fail)?.len();
        let at = wire::encode_capped(&msg, size).is_ok();
        let above = wire::encode_capped(&msg, size + 1).is_ok();
        let below = matches!(
            wire::encode_capped(&msg, size - 1),
            Err(WireError::PayloadTooLarge { size: s, cap }) if s == size && cap == size - 1
        );
        if !(at && above && below) {
            cap_failures += 1;
        }
    }
    Ok(Outcome {
        pass: roundtrip_failures == 0 && page_failures == 0 && cap_failures == 0,
        measured: measured([
            ("messages", Value::from(MESSAGES)),
            ("roundtrip_failures", Value::from(roundtrip_failures)),
            ("paginations", Value::from(PAGINATIONS)),
            ("pagination_failures", Value::from(page_failures)),
            ("cap_checks", Value::from(CAP_CHECKS)),
            ("cap_failures", Value::from(cap_failures)),
        ]),
    })
}

/// Selection-sort oracle: repeatedly take the closest remaining point,
/// lowest index first on ties.
fn brute_knn(coords: &[Coord], q: &Coord, k: usize) -> Vec<usize> {
    let d: Vec<f64> = coords.iter().map(|c| (c[0] - q[0]).powi(2) + (c[1] - q[1]).powi(2)).collect();
    let mut taken = vec![false; coords.len()];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..coords.len() {
            if !taken[i] && best.is_none_or(|b| d[i] < d[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("k <= n");
        taken[b] = true;
        out.push(b);
    }
    out
}

fn brute_rect(coords: &[Coord], r: &Rect<f64>) -> Vec<usize> {
    let (x0, x1) = (r.x0.min(r.x1), r.x0.max(r.x1));
    let (y0, y1) = (r.y0.min(r.y1), r.y0.max(r.y1));
    (0..coords.len())
        .filter(|&i| {
            let [x, y] = coords[i];
            x >= x0 && x <= x1 && y >= y0 && y <= y1
        })
        .collect()
}

fn geometry_oracles(seed: u64) -> Result<Outcome, String> {
    const INSTANCES: usize = 50;
    const POINTS: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut knn_failures, mut rect_failures) = (0, 0);
    for _ in 0..INSTANCES {
        let coords = testkit::random_grid_coords(&mut rng, POINTS);
        let q = testkit::random_grid_coords(&mut rng, 1)[0];
        let k = rng.gen_range(1..=POINTS);
        if knn(&coords, &q, k).map_err(fail)? != brute_knn(&coords, &q, k) {
            knn_failures += 1;
        }
    }
    for _ in 0..INSTANCES {
        let coords = testkit::random_grid_coords(&mut rng, POINTS);
        // Corners on the same grid so boundary hits are frequent.
        let g = testkit::random_grid_coords(&mut rng, 2);
        let rect = Rect::new(g[0][0], g[0][1], g[1][0], g[1][1]);
        if points_in_rect(&coords, &rect) != brute_rect(&coords, &rect) {
            rect_failures += 1;
        }
    }
    Ok(Outcome {
        pass: knn_failures == 0 && rect_failures == 0,
        measured: measured([
            ("instances", Value::from(INSTANCES * 2)),
            ("knn_failures", Value::from(knn_failures)),
            ("rect_failures", Value::from(rect_failures)),
        ]),
    })
}

fn projector_consistency(seed: u64) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs: Vec<Vec<Vec<f64>>> = Vec::new();
    for s in 0..3 {
        let ds = demo(100, seed + s)?;
        let clf = DefaultClassifier::fit(&ds).map_err(fail)?;
        inputs.push(ds.texts().map(|t| clf.embed(t)).collect::<Result<_, _>>().map_err(fail)?);
    }
    for _ in 0..3 {
        let d = rng.gen_range(2..20);
        inputs.push((0..50).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect());
    }

    let mut max_rel_error = 0f64;
    let mut nondeterministic = 0;
    for vectors in &inputs {
        let a = PcaProjector::fit_vectors(vectors).map_err(fail)?;
        let b = PcaProjector::fit_vectors(vectors).map_err(fail)?;
        for (v, c) in vectors.iter().zip(a.fitted_coords()) {
            let t = a.transform(v).map_err(fail)?;
            for j in 0..2 {
                max_rel_error = max_rel_error.max((t[j] - c[j]).abs() / c[j].abs().max(1.0));
            }
        }
        let bits = |p: &PcaProjector<f64>| -> Vec<u64> { p.fitted_coords().iter().flatten().map(|x| x.to_bits()).collect() };
        if bits(&a) != bits(&b) {
            nondeterministic += 1;
        }
    }

    let mut max_second = 0f64;
    for _ in 0..5 {
        let d = rng.gen_range(2..12);
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let vectors: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                let t = rng.gen_range(-3.0..3.0);
                dir.iter().zip(&offset).map(|(u, o)| o + t * u).collect()
            })
            .collect();
        let p = PcaProjector::fit_vectors(&vectors).map_err(fail)?;
        for c in p.fitted_coords() {
            max_second = max_second.max(c[1].abs());
        }
    }
    Ok(Outcome {
        pass: max_rel_error <= 1e-6 && nondeterministic == 0 && max_second <= 1e-6,
        measured: measured([
            ("fits", Value::from(inputs.len())),
            ("max_relative_error", Value::from(max_rel_error)),
            ("nondeterministic_fits", Value::from(nondeterministic)),
            ("rank1_max_second_coord", Value::from(max_second)),
        ]),
    })
}

fn end_to_end(seed: u64) -> Result<Outcome, String> {
    let _ = seed; // The scenario pins its own seed.
    let start = Instant::now();
    let cfg = DemoConfig {
        n_records: 200,
        classes: vec!["pos".into(), "neg".into()],
        seed: 7,
        ..DemoConfig::default()
    };
    let ds = demo_data(&cfg).map_err(fail)?;
    let class_a = &cfg.classes[0];
    let pools = demo_vocabulary(&cfg).map_err(fail)?;
    let sentence = pools[class_a][..6].join(" ");

    let w = inference_widget("e2e", &ds, 7).map_err(fail)?;
    let k = w.k_default();
    let mut s = Session::start(w).map_err(fail)?;
    s.act(&ClientAction::SubmitText(sentence.clone())).map_err(fail)?;

    let w = s.widget();
    let entry = w.inferred_points().last().cloned().ok_or("no inferred point")?;
    let label = entry.get("label").and_then(Value::as_str).unwrap_or_default().to_owned();
    let oracle = DefaultClassifier::fit(&ds).map_err(fail)?.predict(&sentence).map_err(fail)?.label;

    let by_id: BTreeMap<&str, Option<&str>> = ds.records().iter().map(|r| (r.id.as_str(), r.label.as_deref())).collect();
    let neighbors: Vec<&str> = entry
        .get("neighbors")
        .and_then(Value::as_list)
        .unwrap_or_default()
        .iter()
        .filter_map(Value::as_str)
        .collect();
    let in_class = neighbors
        .iter()
        .filter(|id| by_id.get(*id).copied().flatten() == Some(class_a.as_str()))
        .count();
    let mirror_has_it = s.client().get("inferred_points") == w.state().get("inferred_points");
    let secs = seconds(start);
    Ok(Outcome {
        pass: label == *class_a
            && oracle == label
            && neighbors.len() == k
            && in_class * 2 > k
            && mirror_has_it
            && secs < 10.0,
        measured: measured([
            ("label", Value::from(label)),
            ("oracle_label", Value::from(oracle)),
            ("neighbors", Value::from(neighbors.len())),
            ("neighbors_in_class", Value::from(in_class)),
            ("seconds", Value::from(secs)),
        ]),
    })
}
