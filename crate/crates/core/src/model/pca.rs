use super::{symmetric_eigen, ProjectionError, Projector, Real};

/// Largest input dimension accepted by the exact eigendecomposition.
pub const MAX_PCA_DIM: usize = 256;

/// Two-component PCA with a fixed sign convention.
///
/// Each component's largest-magnitude entry is positive (first index wins a
/// magnitude tie). Directions with negligible variance are zero-filled, so
/// rank-deficient input gives degenerate but well-defined coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjector<T> {
    mean: Vec<T>,
    components: [Vec<T>; 2],
    variances: [T; 2],
    coords: Vec<[T; 2]>,
}

impl<T: Real> Default for PcaProjector<T> {
    fn default() -> Self {
        PcaProjector {
            mean: Vec::new(),
            components: [Vec::new(), Vec::new()],
            variances: [T::zero(); 2],
            coords: Vec::new(),
        }
    }
}

impl<T: Real> PcaProjector<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fits a new projector to `vectors`.
    pub fn fit_vectors(vectors: &[Vec<T>]) -> Result<Self, ProjectionError> {
        let mut p = Self::new();
        p.fit(vectors)?;
        Ok(p)
    }

    pub fn is_fitted(&self) -> bool {
        !self.mean.is_empty()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<T>; 2] {
        &self.components
    }

    /// Variance captured by each component (zero for a zero-filled one).
    pub fn variances(&self) -> [T; 2] {
        self.variances
    }
}

impl<T: Real> Projector<T> for PcaProjector<T> {
    fn fit(&mut self, vectors: &[Vec<T>]) -> Result<(), ProjectionError> {
        let n = vectors.len();
        if n < 2 {
            return Err(ProjectionError::TooFewPoints(n));
        }
        let d = vectors[0].len();
        if d > MAX_PCA_DIM {
            return Err(ProjectionError::DimensionTooLarge { dim: d, max: MAX_PCA_DIM });
        }
        for v in vectors {
            if v.len() != d {
                return Err(ProjectionError::DimensionMismatch { expected: d, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ProjectionError::NonFinite);
            }
        }

        let count = T::from_usize(n).expect("point count fits the scalar");
        let mut mean = vec![T::zero(); d];
        for v in vectors {
            for (m, &x) in mean.iter_mut().zip(v) {
                *m = *m + x;
            }
        }
        for m in &mut mean {
            *m = *m / count;
        }

        let mut cov = vec![T::zero(); d * d];
        let mut centered = vec![T::zero(); d];
        for v in vectors {
            for ((c, &x), &m) in centered.iter_mut().zip(v).zip(&mean) {
                *c = x - m;
            }
            for i in 0..d {
                if centered[i] == T::zero() {
                    continue;
                }
                for j in i..d {
                    cov[i * d + j] = cov[i * d + j] + centered[i] * centered[j];
                }
            }
        }
        let denom = count - T::one();
        for i in 0..d {
            for j in i..d {
                let c = cov[i * d + j] / denom;
                cov[i * d + j] = c;
                cov[j * d + i] = c;
            }
        }

        let (values, vectors_cols) = symmetric_eigen(&cov, d);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

        let largest = order.first().map_or(T::zero(), |&i| values[i]);
        let floor = largest * T::epsilon() * T::from_usize(100 * d.max(1)).expect("small integer");
        let mut components = [vec![T::zero(); d], vec![T::zero(); d]];
        let mut variances = [T::zero(); 2];
        for (slot, &idx) in order.iter().take(2).enumerate() {
            let lambda = values[idx];
            if lambda.is_nan() || lambda <= T::zero() || lambda <= floor {
                continue;
            }
            let mut comp: Vec<T> = (0..d).map(|k| vectors_cols[k * d + idx]).collect();
            let pivot = comp
                .iter()
                .enumerate()
                .fold(0, |best, (k, x)| if x.abs() > comp[best].abs() { k } else { best });
            if comp[pivot] < T::zero() {
                for x in &mut comp {
                    *x = -*x;
                }
            }
            components[slot] = comp;
            variances[slot] = lambda;
        }

        self.mean = mean;
        self.components = components;
        self.variances = variances;
        self.coords = Vec::with_capacity(n);
        for v in vectors {
            let c = self.transform(v)?;
            self.coords.push(c);
        }
        Ok(())
    }

    fn transform(&self, vector: &[T]) -> Result<[T; 2], ProjectionError> {
        if !self.is_fitted() {
            return Err(ProjectionError::NotFitted);
        }
        if vector.len() != self.mean.len() {
            return Err(ProjectionError::DimensionMismatch {
                expected: self.mean.len(),
                found: vector.len(),
            });
        }
        let mut out = [T::zero(); 2];
        for (o, comp) in out.iter_mut().zip(&self.components) {
            *o = vector
                .iter()
                .zip(&self.mean)
                .zip(comp)
                .fold(T::zero(), |acc, ((&x, &m), &c)| acc + (x - m) * c);
        }
        // Avoid -0 so equal inputs always give bit-identical output.
        for o in &mut out {
            if *o == T::zero() {
                *o = T::zero();
            }
        }
        Ok(out)
    }

    fn fitted_coords(&self) -> &[[T; 2]] {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_d_input_is_self_consistent() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-1.0, 2.0], vec![2.0, -2.0]];
        let pca = PcaProjector::fit_vectors(&pts).unwrap();
        for (v, c) in pts.iter().zip(pca.fitted_coords()) {
            let t = pca.transform(v).unwrap();
            assert!((t[0] - c[0]).abs() <= 1e-6 && (t[1] - c[1]).abs() <= 1e-6);
        }
        // Rotation only: pairwise distances are preserved for 2D input.
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let c = pca.fitted_coords();
        assert!((d(c[0], c[1]) - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_points_project_to_origin() {
        let pts = vec![vec![1.0, 2.0, 3.0]; 4];
        let pca = PcaProjector::fit_vectors(&pts).unwrap();
        assert!(pca.fitted_coords().iter().all(|c| *c == [0.0, 0.0]));
    }

    #[test]
    fn rank_one_data_has_zero_second_coordinate() {
        let dir = [1.0, -2.0, 0.5, 3.0, 0.25];
        let pts: Vec<Vec<f64>> = [-1.0, 0.5, 2.0]
            .iter()
            .map(|t| dir.iter().map(|d| 1.0 + t * d).collect())
            .collect();
        let pca = PcaProjector::fit_vectors(&pts).unwrap();
        for c in pca.fitted_coords() {
            assert!(c[1].abs() <= 1e-6);
        }
        // Reconstruction from the first component alone is exact.
        let comp = &pca.components()[0];
        for (v, c) in pts.iter().zip(pca.fitted_coords()) {
            for k in 0..5 {
                assert!((pca.mean()[k] + c[0] * comp[k] - v[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0, 0.0], vec![-1.0, -0.1, 0.0], vec![-2.0, 0.1, 0.0], vec![1.0, 0.0, 0.3]];
        let pca = PcaProjector::fit_vectors(&pts).unwrap();
        for comp in pca.components() {
            let max = comp.iter().cloned().fold(0.0f64, |m: f64, x: f64| if x.abs() > m.abs() { x } else { m });
            assert!(max >= 0.0);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(PcaProjector::<f64>::fit_vectors(&[vec![1.0]]), Err(ProjectionError::TooFewPoints(1)));
        let wide = vec![vec![0.0; 257], vec![1.0; 257]];
        assert!(matches!(PcaProjector::fit_vectors(&wide), Err(ProjectionError::DimensionTooLarge { .. })));
        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(PcaProjector::fit_vectors(&ragged), Err(ProjectionError::DimensionMismatch { .. })));
        let nan = vec![vec![0.0], vec![f64::NAN]];
        assert_eq!(PcaProjector::fit_vectors(&nan), Err(ProjectionError::NonFinite));
        assert_eq!(PcaProjector::<f64>::new().transform(&[1.0]), Err(ProjectionError::NotFitted));
    }

    #[test]
    fn generic_over_f32() {
        let pts: Vec<Vec<f32>> = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let pca = PcaProjector::fit_vectors(&pts).unwrap();
        assert_eq!(pca.fitted_coords().len(), 3);
    }
}
