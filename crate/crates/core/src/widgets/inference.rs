use std::sync::Arc;

use super::{Widget, WidgetError, WidgetKind};
use crate::dataset::TextDataset;
use crate::model::{knn, points_in_rect, AdapterError, ClassifierAdapter, Projector, Rect};
use crate::sync::{HandlerResult, ObservableState, StateConfig, SyncMode};
use crate::wire::{HostValue, Value};
use crate::Coord;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_INFERRED_CAP: usize = 100;
const DIAGNOSTICS_CAP: usize = 50;

type SharedAdapter = Arc<dyn ClassifierAdapter<f64>>;
type SharedProjector = Arc<dyn Projector<f64>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceOptions {
    /// Neighbors listed with each inferred point.
    pub k_default: usize,
    /// Inferred points kept; the oldest is evicted beyond this.
    pub inferred_cap: usize,
    pub config: StateConfig,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            k_default: DEFAULT_K,
            inferred_cap: DEFAULT_INFERRED_CAP,
            config: StateConfig::default(),
        }
    }
}

struct Training {
    ids: Vec<String>,
    texts: Vec<String>,
    labels: Vec<Option<String>>,
    coords: Vec<Coord>,
}

/// Projects a labeled dataset, classifies text typed into the view and
/// lists whatever the view brushes.
///
/// Construction is eager: every text is embedded and the projector fitted
/// before `new` returns. The model and projector are stored as backend-only
/// attributes, so they never touch the wire.
pub struct InferenceExplorerWidget {
    state: ObservableState,
    adapter: SharedAdapter,
    training: Arc<Training>,
    k_default: usize,
}

impl InferenceExplorerWidget {
    pub fn new<A, P>(
        widget_id: &str,
        ds: &TextDataset,
        adapter: A,
        mut projector: P,
        options: InferenceOptions,
    ) -> Result<Self, WidgetError>
    where
        A: ClassifierAdapter<f64> + 'static,
        P: Projector<f64> + 'static,
    {
        let vectors = ds
            .texts()
            .map(|t| adapter.embed(t))
            .collect::<Result<Vec<_>, _>>()?;
        projector.fit(&vectors)?;
        let coords = projector.fitted_coords().to_vec();
        let training = Arc::new(Training {
            ids: ds.ids().map(str::to_owned).collect(),
            texts: ds.texts().map(str::to_owned).collect(),
            labels: ds.records().iter().map(|r| r.label.clone()).collect(),
            coords,
        });
        let adapter: SharedAdapter = Arc::new(adapter);
        let projector: SharedProjector = Arc::new(projector);

        let mut state = ObservableState::new(widget_id, options.config.clone());
        state.define_attribute("model", HostValue::opaque(adapter.clone()), SyncMode::BackendOnly)?;
        state.define_attribute("projector", HostValue::opaque(projector), SyncMode::BackendOnly)?;
        state.define_paged("points", point_rows(&training))?;
        state.define_attribute("pending_input", "", SyncMode::TwoWay)?;
        state.define_attribute("inferred_points", Value::List(Vec::new()), SyncMode::OneWayToView)?;
        state.define_attribute("brush_rect", Value::Null, SyncMode::TwoWay)?;
        state.define_paged("neighbor_rows", Vec::new())?;
        state.define_attribute("diagnostics", Value::List(Vec::new()), SyncMode::OneWayToView)?;

        state.set_validator("pending_input", |v| match v {
            Value::String(_) => Ok(()),
            _ => Err("pending_input must be a string".into()),
        })?;
        state.set_validator("brush_rect", |v| match v {
            Value::Null => Ok(()),
            other => parse_rect(other).map(|_| ()),
        })?;

        let k = options.k_default;
        let cap = options.inferred_cap.max(1);
        let t = training.clone();
        let mut submitted = 0u64;
        state.register_handler("pending_input", move |state, change| {
            let text = change.new.as_str().unwrap_or_default().to_owned();
            submitted += 1;
            on_input(state, &t, &text, k, cap, submitted)
        })?;
        let t = training.clone();
        state.register_handler("brush_rect", move |state, _| refresh_neighbors(state, &t))?;

        Ok(InferenceExplorerWidget {
            state,
            adapter,
            training,
            k_default: k,
        })
    }

    pub fn adapter(&self) -> &dyn ClassifierAdapter<f64> {
        &*self.adapter
    }

    pub fn projector(&self) -> Option<&dyn Projector<f64>> {
        self.state.opaque::<SharedProjector>("projector").map(|p| &**p)
    }

    pub fn k_default(&self) -> usize {
        self.k_default
    }

    /// Training-point coordinates in dataset order.
    pub fn coords(&self) -> &[Coord] {
        &self.training.coords
    }

    pub fn training_ids(&self) -> &[String] {
        &self.training.ids
    }

    pub fn training_labels(&self) -> &[Option<String>] {
        &self.training.labels
    }

    pub fn inferred_points(&self) -> &[Value] {
        self.state.get("inferred_points").and_then(Value::as_list).unwrap_or_default()
    }

    pub fn neighbor_rows(&self) -> &[Value] {
        self.state.get("neighbor_rows").and_then(Value::as_list).unwrap_or_default()
    }
}

impl Widget for InferenceExplorerWidget {
    fn kind(&self) -> WidgetKind {
        WidgetKind::InferenceExplorer
    }

    fn state(&self) -> &ObservableState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut ObservableState {
        &mut self.state
    }
}

fn point_rows(t: &Training) -> Vec<Value> {
    (0..t.ids.len())
        .map(|i| {
            Value::map([
                ("id", Value::from(t.ids[i].as_str())),
                ("x", Value::from(t.coords[i][0])),
                ("y", Value::from(t.coords[i][1])),
                ("label", Value::from(t.labels[i].clone())),
            ])
        })
        .collect()
}

fn error_name(e: &AdapterError) -> &'static str {
    match e {
        AdapterError::NoLabels => "NoLabels",
        AdapterError::EmptyInput => "EmptyInput",
        AdapterError::ZeroDimension => "ZeroDimension",
        AdapterError::Model(_) => "ModelError",
    }
}

fn push_capped(state: &mut ObservableState, attr: &str, entry: Value, cap: usize) -> HandlerResult {
    let mut list = state.get(attr).and_then(Value::as_list).unwrap_or_default().to_vec();
    list.push(entry);
    if list.len() > cap {
        list.drain(..list.len() - cap);
    }
    state.set(attr, Value::List(list))?;
    Ok(())
}

fn on_input(state: &mut ObservableState, t: &Training, text: &str, k: usize, cap: usize, n: u64) -> HandlerResult {
    let adapter = state.opaque::<SharedAdapter>("model").cloned().ok_or("model attribute missing")?;
    let projector = state
        .opaque::<SharedProjector>("projector")
        .cloned()
        .ok_or("projector attribute missing")?;

    let outcome = adapter.predict(text).and_then(|p| {
        let v = adapter.embed(text)?;
        let xy = projector.transform(&v).map_err(|e| AdapterError::Model(e.to_string()))?;
        Ok((p, xy))
    });
    let (prediction, xy) = match outcome {
        Ok(ok) => ok,
        Err(e) => {
            let entry = Value::map([
                ("attr", Value::from("pending_input")),
                ("error", Value::from(error_name(&e))),
                ("detail", Value::from(e.to_string())),
                ("input", Value::from(text)),
            ]);
            return push_capped(state, "diagnostics", entry, DIAGNOSTICS_CAP);
        }
    };

    let neighbors = if t.coords.is_empty() || k == 0 {
        Vec::new()
    } else {
        knn(&t.coords, &xy, k.min(t.coords.len()))?
            .into_iter()
            .map(|i| Value::from(t.ids[i].as_str()))
            .collect()
    };
    let entry = Value::map([
        ("id", Value::from(format!("input-{n}"))),
        ("text", Value::from(text)),
        ("label", Value::from(prediction.label)),
        ("x", Value::from(xy[0])),
        ("y", Value::from(xy[1])),
        ("neighbors", Value::List(neighbors)),
    ]);
    push_capped(state, "inferred_points", entry, cap)?;
    // A live brush also covers the new point.
    if !state.get("brush_rect").is_none_or(Value::is_null) {
        refresh_neighbors(state, t)?;
    }
    Ok(())
}

fn parse_rect(v: &Value) -> Result<Rect<f64>, String> {
    let field = |k: &str| {
        v.get(k)
            .and_then(Value::as_f64)
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("brush_rect needs a finite number {k:?}"))
    };
    Ok(Rect::new(field("x0")?, field("y0")?, field("x1")?, field("y1")?))
}

fn refresh_neighbors(state: &mut ObservableState, t: &Training) -> HandlerResult {
    let rows = match state.get("brush_rect") {
        None | Some(Value::Null) => Vec::new(),
        Some(v) => {
            let rect = parse_rect(v)?;
            let mut hits = points_in_rect(&t.coords, &rect);
            hits.sort_by(|&a, &b| t.ids[a].cmp(&t.ids[b]));
            let mut rows: Vec<Value> = hits
                .into_iter()
                .map(|i| {
                    Value::map([
                        ("id", Value::from(t.ids[i].as_str())),
                        ("text", Value::from(t.texts[i].as_str())),
                        ("label", Value::from(t.labels[i].clone())),
                    ])
                })
                .collect();
            let inferred = state.get("inferred_points").and_then(Value::as_list).unwrap_or_default();
            let xy: Vec<Coord> = inferred
                .iter()
                .map(|p| [p.get("x").and_then(Value::as_f64).unwrap_or(f64::NAN), p.get("y").and_then(Value::as_f64).unwrap_or(f64::NAN)])
                .collect();
            for i in points_in_rect(&xy, &rect) {
                let p = &inferred[i];
                rows.push(Value::map([
                    ("id", p.get("id").cloned().unwrap_or_default()),
                    ("text", p.get("text").cloned().unwrap_or_default()),
                    ("label", p.get("label").cloned().unwrap_or_default()),
                    ("inferred", Value::from(true)),
                ]));
            }
            rows
        }
    };
    if state.get("neighbor_rows").and_then(Value::as_list) != Some(rows.as_slice()) {
        state.set("neighbor_rows", Value::List(rows))?;
    }
    Ok(())
}
