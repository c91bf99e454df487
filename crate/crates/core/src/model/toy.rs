use std::collections::BTreeMap;

use super::{AdapterError, ClassifierAdapter, Prediction, Real};
use crate::dataset::TextDataset;

pub const DEFAULT_EMBED_DIM: usize = 64;

/// FNV-1a 32-bit offset basis; doubles as the fixed hashing seed.
pub const FNV_OFFSET_BASIS: u32 = 0x811c_9dc5;
pub const FNV_PRIME: u32 = 0x0100_0193;

pub fn fnv1a32(bytes: &[u8]) -> u32 {
    bytes
        .iter()
        .fold(FNV_OFFSET_BASIS, |h, &b| (h ^ u32::from(b)).wrapping_mul(FNV_PRIME))
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Hashed bag of words, L2-normalized. Texts without tokens map to zeros.
pub fn hashed_embedding<T: Real>(text: &str, dim: usize) -> Vec<T> {
    let mut counts = vec![0u32; dim];
    for token in tokenize(text) {
        counts[fnv1a32(token.as_bytes()) as usize % dim] += 1;
    }
    let mut v: Vec<T> = counts.iter().map(|&c| T::from_u32(c).expect("count fits")).collect();
    normalize(&mut v);
    v
}

fn normalize<T: Real>(v: &mut [T]) {
    let norm = v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    if norm > T::zero() {
        for x in v.iter_mut() {
            *x = *x / norm;
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Nearest-centroid classifier over hashed bag-of-words vectors.
///
/// Each class centroid is the normalized mean of its training embeddings.
/// Scores are cosine similarities, so a class whose texts had no tokens
/// has a zero centroid and always scores 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifier<T> {
    dim: usize,
    labels: Vec<String>,
    centroids: Vec<Vec<T>>,
}

impl<T: Real> ToyClassifier<T> {
    pub fn fit(ds: &TextDataset) -> Result<Self, AdapterError> {
        Self::fit_with_dim(ds, DEFAULT_EMBED_DIM)
    }

    pub fn fit_with_dim(ds: &TextDataset, dim: usize) -> Result<Self, AdapterError> {
        if dim == 0 {
            return Err(AdapterError::ZeroDimension);
        }
        let mut sums: BTreeMap<&str, Vec<T>> = BTreeMap::new();
        for r in ds.records() {
            let Some(label) = r.label.as_deref() else { continue };
            let e = hashed_embedding::<T>(&r.text, dim);
            let sum = sums.entry(label).or_insert_with(|| vec![T::zero(); dim]);
            for (s, x) in sum.iter_mut().zip(e) {
                *s = *s + x;
            }
        }
        if sums.is_empty() {
            return Err(AdapterError::NoLabels);
        }
        let (labels, centroids) = sums
            .into_iter()
            .map(|(label, mut sum)| {
                // Normalizing the sum gives the same direction as the mean.
                normalize(&mut sum);
                (label.to_owned(), sum)
            })
            .unzip();
        Ok(ToyClassifier {
            dim,
            labels,
            centroids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, label: &str) -> Option<&[T]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.centroids[i].as_slice())
    }
}

impl<T: Real> ClassifierAdapter<T> for ToyClassifier<T> {
    fn embed(&self, text: &str) -> Result<Vec<T>, AdapterError> {
        Ok(hashed_embedding(text, self.dim))
    }

    fn predict(&self, text: &str) -> Result<Prediction<T>, AdapterError> {
        if tokenize(text).is_empty() {
            return Err(AdapterError::EmptyInput);
        }
        let e = hashed_embedding::<T>(text, self.dim);
        let mut best: Option<(usize, T)> = None;
        let mut scores = BTreeMap::new();
        // Labels are sorted, so keeping the first maximum breaks ties toward
        // the lexicographically smallest label.
        for (i, (label, centroid)) in self.labels.iter().zip(&self.centroids).enumerate() {
            let score = dot(&e, centroid);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
            scores.insert(label.clone(), score);
        }
        let (i, _) = best.expect("fit guarantees at least one label");
        Ok(Prediction {
            label: self.labels[i].clone(),
            scores,
        })
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Record;

    fn ds(rows: &[(&str, Option<&str>)]) -> TextDataset {
        TextDataset::new(
            rows.iter()
                .enumerate()
                .map(|(i, (t, l))| Record::new(i.to_string(), *t, *l))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a 32-bit test vectors.
        assert_eq!(fnv1a32(b""), 0x811c9dc5);
        assert_eq!(fnv1a32(b"a"), 0xe40c292c);
        assert_eq!(fnv1a32(b"foobar"), 0xbf9cf968);
    }

    #[test]
    fn token_buckets_match_independent_computation() {
        // Computed with a separate script: FNV-1a 32 of the UTF-8 bytes, mod 64.
        let expected = [("good", 24), ("great", 46), ("fine", 45), ("bad", 56), ("awful", 20)];
        for (tok, bucket) in expected {
            assert_eq!(fnv1a32(tok.as_bytes()) % 64, bucket, "{tok}");
        }
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Good, GREAT--fine!"), ["good", "great", "fine"]);
        assert!(tokenize(" ,.;").is_empty());
    }

    #[test]
    fn single_token_centroid_is_one_hot() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good", Some("pos"))])).unwrap();
        let c = clf.centroid("pos").unwrap();
        let bucket = (fnv1a32(b"good") % 64) as usize;
        for (i, &x) in c.iter().enumerate() {
            assert_eq!(x, if i == bucket { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn disjoint_vocab_gives_orthogonal_centroids() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good great fine", Some("pos")), ("bad awful", Some("neg"))])).unwrap();
        let cos = dot(clf.centroid("pos").unwrap(), clf.centroid("neg").unwrap());
        assert_eq!(cos, 0.0);
    }

    #[test]
    fn predicts_positive_with_frozen_scores() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good great fine", Some("pos")), ("bad awful", Some("neg"))])).unwrap();
        let p = clf.predict("good good").unwrap();
        assert_eq!(p.label, "pos");
        // Oracle: "good good" is the unit vector at bucket 24; the pos
        // centroid has three equal entries, so the cosine is 1/sqrt(3).
        assert!((p.scores["pos"] - 0.5773502691896258).abs() < 1e-15);
        assert_eq!(p.scores["neg"], 0.0);
    }

    #[test]
    fn empty_input_and_no_labels() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good", Some("pos"))])).unwrap();
        assert_eq!(clf.predict(""), Err(AdapterError::EmptyInput));
        assert_eq!(clf.predict("?!"), Err(AdapterError::EmptyInput));
        assert_eq!(ToyClassifier::<f64>::fit(&ds(&[("good", None)])), Err(AdapterError::NoLabels));
    }

    #[test]
    fn single_class_always_wins() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good", Some("only"))])).unwrap();
        assert_eq!(clf.predict("unrelated words").unwrap().label, "only");
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let clf = ToyClassifier::<f64>::fit(&ds(&[("good", Some("b")), ("good", Some("a"))])).unwrap();
        assert_eq!(clf.predict("good").unwrap().label, "a");
    }

    #[test]
    fn works_in_single_precision() {
        let clf = ToyClassifier::<f32>::fit(&ds(&[("good great", Some("pos")), ("bad", Some("neg"))])).unwrap();
        assert_eq!(clf.predict("great").unwrap().label, "pos");
    }
}
