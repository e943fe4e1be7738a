//! Embedding vectors, labeled datasets, and distance primitives.

use crate::error::{Error, Result};

/// A single D-dimensional embedding, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty {
                context: "embedding must have dimension >= 1".into(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("embedding entry {idx}"),
            });
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for Embedding {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Euclidean distance `||a - b||_2`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(euclidean_distance_unchecked(a, b))
}

#[inline]
pub(crate) fn euclidean_distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity, in [-1, 1]. Errors on zero-norm input.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Scale to unit L2 norm. Errors on zero-norm input.
pub fn l2_normalize(a: &[f64]) -> Result<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(a.iter().map(|v| v / n).collect())
}

#[inline]
pub(crate) fn l2_normalize_unchecked(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|v| v / n).collect()
}

/// N labeled embeddings stored row-major.
///
/// Labels as read from a file can be arbitrary `u32` ids; they are remapped
/// to dense class indices `0..C` in first-appearance order for array-based
/// statistics, while the original ids are kept for reporting.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    /// Original class ids, as provided.
    labels: Vec<u32>,
    /// Dense class index per sample, 0-based, first-appearance order.
    classes: Vec<usize>,
    /// Original id per dense class index.
    class_ids: Vec<u32>,
    pub name: String,
}

impl Dataset {
    /// Build a dataset from a flat row-major matrix and labels.
    ///
    /// Values pass through `f32` so that in-memory datasets round-trip the
    /// 32-bit file formats bit-exactly.
    pub fn new(name: impl Into<String>, dim: usize, values: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        let values: Vec<f64> = values.into_iter().map(|v| v as f32 as f64).collect();
        Self::new_raw(name, dim, values, labels)
    }

    pub(crate) fn new_raw(
        name: impl Into<String>,
        dim: usize,
        values: Vec<f64>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if dim == 0 || labels.is_empty() {
            return Err(Error::Empty {
                context: "dataset needs N >= 1 and D >= 1".into(),
            });
        }
        if values.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                actual: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("dataset value at flat index {idx}"),
            });
        }
        let mut class_ids = Vec::new();
        let mut classes = Vec::with_capacity(labels.len());
        for &label in &labels {
            let dense = match class_ids.iter().position(|&id| id == label) {
                Some(pos) => pos,
                None => {
                    class_ids.push(label);
                    class_ids.len() - 1
                }
            };
            classes.push(dense);
        }
        Ok(Dataset {
            dim,
            values,
            labels,
            classes,
            class_ids,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Original class ids per sample.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Dense 0-based class index per sample.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Original id for a dense class index.
    pub fn class_id(&self, dense: usize) -> u32 {
        self.class_ids[dense]
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    /// New dataset from a subset of sample indices (classes re-densified).
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new_raw(name, self.dim, values, labels)
    }
}

/// Per-class sample index sets over a dataset.
#[derive(Debug, Clone)]
pub struct ClassIndex {
    /// `sets[k]` holds the ascending sample indices of dense class k.
    sets: Vec<Vec<usize>>,
}

impl ClassIndex {
    pub fn num_classes(&self) -> usize {
        self.sets.len()
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.sets[class]
    }

    pub fn count(&self, class: usize) -> usize {
        self.sets[class].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.len()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.sets.iter().enumerate().map(|(k, s)| (k, s.as_slice()))
    }
}

/// Group sample indices by dense class, ascending within each set.
pub fn build_class_index(classes: &[usize]) -> Result<ClassIndex> {
    if classes.is_empty() {
        return Err(Error::Empty {
            context: "labels must be nonempty".into(),
        });
    }
    let num_classes = classes.iter().max().unwrap() + 1;
    let mut sets = vec![Vec::new(); num_classes];
    for (i, &k) in classes.iter().enumerate() {
        sets[k].push(i);
    }
    Ok(ClassIndex { sets })
}

impl Dataset {
    pub fn class_index(&self) -> ClassIndex {
        build_class_index(&self.classes).expect("dataset is nonempty")
    }
}
