use std::cmp::Ordering;

use thiserror::Error;

use super::Coordinate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("k must be between 1 and {n}, got {k}")]
    BadK { k: usize, n: usize },
}

/// Axis-aligned brush rectangle. Corners may be given in any order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Coordinate> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// Same rectangle with `x0 <= x1` and `y0 <= y1`.
    pub fn normalized(&self) -> Self {
        let (x0, x1) = ordered(&self.x0, &self.x1);
        let (y0, y1) = ordered(&self.y0, &self.y1);
        Rect { x0, y0, x1, y1 }
    }

    /// Boundary-inclusive containment, assuming normalized corners.
    fn contains(&self, p: &[T; 2]) -> bool {
        self.x0 <= p[0] && p[0] <= self.x1 && self.y0 <= p[1] && p[1] <= self.y1
    }
}

fn ordered<T: Coordinate>(a: &T, b: &T) -> (T, T) {
    if b < a {
        (b.clone(), a.clone())
    } else {
        (a.clone(), b.clone())
    }
}

fn squared_distance<T: Coordinate>(a: &[T; 2], b: &[T; 2]) -> T {
    let dx = a[0].clone() - b[0].clone();
    let dy = a[1].clone() - b[1].clone();
    dx.clone() * dx + dy.clone() * dy
}

/// Total order on distances; incomparable values (NaN) sort last.
fn compare<T: Coordinate>(a: &T, b: &T) -> Ordering {
    match a.partial_cmp(b) {
        Some(o) => o,
        None => {
            let a_nan = a.partial_cmp(a).is_none();
            let b_nan = b.partial_cmp(b).is_none();
            a_nan.cmp(&b_nan)
        }
    }
}

/// Indices of the `k` points closest to `query`, nearest first; equal
/// distances keep ascending index order.
///
/// Distances are compared squared, so exact scalar types compare exactly.
pub fn knn<T: Coordinate>(coords: &[[T; 2]], query: &[T; 2], k: usize) -> Result<Vec<usize>, GeometryError> {
    if k == 0 || k > coords.len() {
        return Err(GeometryError::BadK { k, n: coords.len() });
    }
    let mut ranked: Vec<(T, usize)> = coords
        .iter()
        .enumerate()
        .map(|(i, c)| (squared_distance(c, query), i))
        .collect();
    ranked.sort_by(|(da, ia), (db, ib)| compare(da, db).then(ia.cmp(ib)));
    Ok(ranked.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Indices of points inside `rect` (boundary included), ascending.
pub fn points_in_rect<T: Coordinate>(coords: &[[T; 2]], rect: &Rect<T>) -> Vec<usize> {
    let r = rect.normalized();
    coords
        .iter()
        .enumerate()
        .filter(|(_, p)| r.contains(p))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn nearest_two() {
        // Brute-force distances from (0.9, 0): 0.9, 0.1, 4.1.
        let coords = [[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]];
        assert_eq!(knn(&coords, &[0.9, 0.0], 2).unwrap(), [1, 0]);
    }

    #[test]
    fn k_equals_n_sorts_everything() {
        let coords = [[3.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(knn(&coords, &[0.0, 0.0], 3).unwrap(), [1, 2, 0]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let coords = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]];
        assert_eq!(knn(&coords, &[0.0, 0.0], 3).unwrap(), [0, 1, 2]);
    }

    #[test]
    fn bad_k() {
        let coords = [[0.0, 0.0]];
        assert_eq!(knn(&coords, &[0.0, 0.0], 0), Err(GeometryError::BadK { k: 0, n: 1 }));
        assert_eq!(knn(&coords, &[0.0, 0.0], 2), Err(GeometryError::BadK { k: 2, n: 1 }));
    }

    #[test]
    fn nan_sorts_last() {
        let coords = [[f64::NAN, 0.0], [1.0, 0.0]];
        assert_eq!(knn(&coords, &[0.0, 0.0], 2).unwrap(), [1, 0]);
    }

    #[test]
    fn rect_inclusive_and_normalized() {
        let coords = [[0.5, 0.5], [1.0, 0.3], [1.5, 0.5], [0.0, 0.0]];
        let unit = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(points_in_rect(&coords, &unit), [0, 1, 3]);
        let swapped = Rect::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(points_in_rect(&coords, &swapped), points_in_rect(&coords, &unit));
    }

    #[test]
    fn exact_rationals() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        let coords = [[r(1, 3), r(0, 1)], [r(-1, 3), r(0, 1)], [r(1, 2), r(0, 1)]];
        assert_eq!(knn(&coords, &[r(0, 1), r(0, 1)], 3).unwrap(), [0, 1, 2]);
        let rect = Rect::new(r(1, 3), r(0, 1), r(-1, 3), r(0, 1));
        assert_eq!(points_in_rect(&coords, &rect), [0, 1]);
    }
}
