use super::{Widget, WidgetError, WidgetKind};
use crate::dataset::{apply_filter, column_stats, FilterSpec, TextDataset};
use crate::sync::{ObservableState, StateConfig, SyncMode};

fn publish_dataset(state: &mut ObservableState, ds: &TextDataset) -> Result<(), WidgetError> {
    state.define_paged("data", ds.to_records())?;
    state.define_attribute("schema", ds.schema_value(), SyncMode::OneWayToView)?;
    state.define_attribute("stats", column_stats(ds).to_value(), SyncMode::OneWayToView)?;
    Ok(())
}

/// Shows a dataset. Filtering happens in the view only; the view's filter
/// gestures arrive as inert events and leave every attribute untouched.
pub struct DataExplorerWidget {
    state: ObservableState,
}

impl DataExplorerWidget {
    pub fn new(widget_id: &str, ds: &TextDataset, config: StateConfig) -> Result<Self, WidgetError> {
        let mut state = ObservableState::new(widget_id, config);
        publish_dataset(&mut state, ds)?;
        Ok(DataExplorerWidget { state })
    }
}

impl Widget for DataExplorerWidget {
    fn kind(&self) -> WidgetKind {
        WidgetKind::DataExplorer
    }

    fn state(&self) -> &ObservableState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut ObservableState {
        &mut self.state
    }
}

/// Shows a dataset and syncs the view's [`FilterSpec`] back to the kernel.
///
/// Only the spec travels; [`selection`](Self::selection) recomputes the
/// subset with the kernel-side filter engine, which stays authoritative.
pub struct DataSelectorWidget {
    state: ObservableState,
    dataset: TextDataset,
}

impl DataSelectorWidget {
    pub fn new(widget_id: &str, ds: &TextDataset, config: StateConfig) -> Result<Self, WidgetError> {
        let mut state = ObservableState::new(widget_id, config);
        publish_dataset(&mut state, ds)?;
        state.define_attribute("selection_spec", FilterSpec::default().to_value(), SyncMode::TwoWay)?;
        let schema = ds.schema().clone();
        state.set_validator("selection_spec", move |v| {
            let spec = FilterSpec::from_value(v).map_err(|e| e.to_string())?;
            spec.validate(&schema).map_err(|e| e.to_string())
        })?;
        Ok(DataSelectorWidget {
            state,
            dataset: ds.clone(),
        })
    }

    pub fn dataset(&self) -> &TextDataset {
        &self.dataset
    }

    /// The spec currently in force.
    pub fn spec(&self) -> FilterSpec {
        self.state
            .get("selection_spec")
            .and_then(|v| FilterSpec::from_value(v).ok())
            .unwrap_or_default()
    }

    /// Rows selected in the view, as a dataset for downstream cells.
    pub fn selection(&self) -> TextDataset {
        // The validator only admits specs that pass, so this cannot fail.
        apply_filter(&self.dataset, &self.spec()).unwrap_or_else(|_| self.dataset.clone())
    }

    /// Sets the spec from the kernel side; the view follows.
    pub fn set_spec(&mut self, spec: &FilterSpec) -> Result<(), WidgetError> {
        spec.validate(self.dataset.schema())?;
        self.state.set("selection_spec", spec.to_value())?;
        Ok(())
    }
}

impl Widget for DataSelectorWidget {
    fn kind(&self) -> WidgetKind {
        WidgetKind::DataSelector
    }

    fn state(&self) -> &ObservableState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut ObservableState {
        &mut self.state
    }
}

