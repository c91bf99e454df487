//! Pluggable classifier and projection boundary, plus the default
//! implementations and the geometric queries behind brushing.
//!
//! Everything here is generic over the scalar type. [`Real`] covers the
//! floating-point math (embedding, PCA); the geometric queries only need
//! [`Coordinate`], so they also run on exact rationals.

mod geometry;
mod jacobi;
mod pca;
mod toy;

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};
use thiserror::Error;

pub use geometry::{knn, points_in_rect, GeometryError, Rect};
pub use jacobi::symmetric_eigen;
pub use pca::{PcaProjector, MAX_PCA_DIM};
pub use toy::{fnv1a32, hashed_embedding, tokenize, ToyClassifier, DEFAULT_EMBED_DIM, FNV_OFFSET_BASIS, FNV_PRIME};

/// Floating-point scalar used for embeddings and projections.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Send + Sync + 'static {}

/// Scalar that supports the exact comparisons behind kNN and brushing.
pub trait Coordinate: Num + PartialOrd + Clone {}

impl<T> Coordinate for T where T: Num + PartialOrd + Clone {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("training data has no labeled records")]
    NoLabels,
    #[error("input has no tokens")]
    EmptyInput,
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("need at least 2 points to fit, got {0}")]
    TooFewPoints(usize),
    #[error("dimension {dim} exceeds the exact-eigendecomposition limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("expected vectors of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("projector has not been fitted")]
    NotFitted,
}

/// A model's label for one text and its per-label scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub label: String,
    pub scores: BTreeMap<String, T>,
}

/// The model boundary a widget needs: text to vector, text to label.
///
/// Implementations must be deterministic per text and return a label from
/// [`labels`](ClassifierAdapter::labels) with finite scores.
pub trait ClassifierAdapter<T: Real = f64>: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<T>, AdapterError>;
    fn predict(&self, text: &str) -> Result<Prediction<T>, AdapterError>;
    fn labels(&self) -> &[String];
}

/// Maps high-dimensional vectors to 2D, with out-of-sample placement.
pub trait Projector<T: Real = f64>: Send + Sync {
    fn fit(&mut self, vectors: &[Vec<T>]) -> Result<(), ProjectionError>;
    fn transform(&self, vector: &[T]) -> Result<[T; 2], ProjectionError>;
    /// Coordinates of the training vectors, in fit order. Empty before `fit`.
    fn fitted_coords(&self) -> &[[T; 2]];
}

impl<T: Real, A: ClassifierAdapter<T> + ?Sized> ClassifierAdapter<T> for Box<A> {
    fn embed(&self, text: &str) -> Result<Vec<T>, AdapterError> {
        (**self).embed(text)
    }

    fn predict(&self, text: &str) -> Result<Prediction<T>, AdapterError> {
        (**self).predict(text)
    }

    fn labels(&self) -> &[String] {
        (**self).labels()
    }
}

impl<T: Real, P: Projector<T> + ?Sized> Projector<T> for Box<P> {
    fn fit(&mut self, vectors: &[Vec<T>]) -> Result<(), ProjectionError> {
        (**self).fit(vectors)
    }

    fn transform(&self, vector: &[T]) -> Result<[T; 2], ProjectionError> {
        (**self).transform(vector)
    }

    fn fitted_coords(&self) -> &[[T; 2]] {
        (**self).fitted_coords()
    }
}
