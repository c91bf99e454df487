pub mod wire;
pub mod sync;
pub mod dataset;
pub mod model;
pub mod widgets;
pub mod demo;
pub mod testkit;
pub mod acceptance;

pub type DefaultClassifier = model::ToyClassifier<f64>;
pub type DefaultProjector = model::PcaProjector<f64>;
pub type Coord = [f64; 2];
