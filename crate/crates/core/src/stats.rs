//! Per-class mean/covariance estimation and the pooled global covariance.
//!
//! Estimation is maximum-likelihood: the covariance divisor is `n_k`, not
//! `n_k - 1`; the neighbor-correction stage compensates for small-sample
//! bias instead. Diagonal covariances are the default, full matrices sit
//! behind [`CovMode::Full`] for degeneration comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassIndex, Dataset};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovMode {
    Diagonal,
    Full,
}

/// A covariance in either diagonal or full representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(Vec<f64>),
    Full(SymMatrix),
}

impl Covariance {
    pub fn zeros(mode: CovMode, dim: usize) -> Covariance {
        match mode {
            CovMode::Diagonal => Covariance::Diagonal(vec![0.0; dim]),
            CovMode::Full => Covariance::Full(SymMatrix::zeros(dim)),
        }
    }

    pub fn identity(mode: CovMode, dim: usize) -> Covariance {
        match mode {
            CovMode::Diagonal => Covariance::Diagonal(vec![1.0; dim]),
            CovMode::Full => Covariance::Full(SymMatrix::identity(dim)),
        }
    }

    pub fn mode(&self) -> CovMode {
        match self {
            Covariance::Diagonal(_) => CovMode::Diagonal,
            Covariance::Full(_) => CovMode::Full,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Diagonal(d) => d.len(),
            Covariance::Full(m) => m.dim(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Covariance::Diagonal(d) => d.clone(),
            Covariance::Full(m) => m.diagonal(),
        }
    }

    /// Flat view of the stored entries (D values or D*D values).
    pub fn entries(&self) -> &[f64] {
        match self {
            Covariance::Diagonal(d) => d,
            Covariance::Full(m) => m.data(),
        }
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        match self {
            Covariance::Diagonal(d) => d,
            Covariance::Full(m) => m.data_mut(),
        }
    }

    pub fn scale(&self, factor: f64) -> Covariance {
        match self {
            Covariance::Diagonal(d) => Covariance::Diagonal(d.iter().map(|v| v * factor).collect()),
            Covariance::Full(m) => Covariance::Full(m.scale(factor)),
        }
    }

    pub fn add_scaled(&mut self, other: &Covariance, factor: f64) -> Result<()> {
        if self.mode() != other.mode() || self.dim() != other.dim() {
            return Err(Error::ModeMismatch {
                context: "covariance accumulate".into(),
            });
        }
        for (a, b) in self.entries_mut().iter_mut().zip(other.entries()) {
            *a += b * factor;
        }
        Ok(())
    }

    /// Zero the off-diagonal entries (no-op for diagonal storage).
    pub fn zero_off_diagonal(&self) -> Covariance {
        match self {
            Covariance::Diagonal(d) => Covariance::Diagonal(d.clone()),
            Covariance::Full(m) => {
                let mut out = SymMatrix::zeros(m.dim());
                for i in 0..m.dim() {
                    out.set(i, i, m.get(i, i));
                }
                Covariance::Full(out)
            }
        }
    }
}

/// Mean and covariance of one class.
#[derive(Debug, Clone)]
pub struct ClassStats {
    /// Dense class index.
    pub class: usize,
    /// Original class id, for reporting.
    pub class_id: u32,
    pub count: usize,
    pub mean: Vec<f64>,
    pub cov: Covariance,
}

/// Sample-count-weighted average of all class covariances.
#[derive(Debug, Clone)]
pub struct GlobalStats {
    pub cov: Covariance,
    pub total_count: usize,
}

/// Two-pass maximum-likelihood estimation per class.
///
/// Classes are processed in parallel; within each class, accumulation runs
/// over the ascending member indices, so results do not depend on the
/// parallel schedule. A singleton class yields a zero covariance.
pub fn estimate_class_stats(
    dataset: &Dataset,
    index: &ClassIndex,
    mode: CovMode,
) -> Result<Vec<ClassStats>> {
    let classes: Vec<usize> = (0..index.num_classes()).collect();
    classes
        .par_iter()
        .map(|&k| {
            let members = index.members(k);
            if members.is_empty() {
                return Err(Error::Empty {
                    context: format!("class {k} has no samples"),
                });
            }
            Ok(estimate_one_class(dataset, k, members, mode))
        })
        .collect()
}

fn estimate_one_class(dataset: &Dataset, k: usize, members: &[usize], mode: CovMode) -> ClassStats {
    let dim = dataset.dim();
    let n = members.len() as f64;
    let mut mean = vec![0.0; dim];
    for &i in members {
        for (m, v) in mean.iter_mut().zip(dataset.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let cov = match mode {
        CovMode::Diagonal => {
            let mut diag = vec![0.0; dim];
            for &i in members {
                for (d, (v, m)) in diag.iter_mut().zip(dataset.row(i).iter().zip(&mean)) {
                    let c = v - m;
                    *d += c * c;
                }
            }
            for d in diag.iter_mut() {
                *d /= n;
            }
            Covariance::Diagonal(diag)
        }
        CovMode::Full => {
            let mut full = SymMatrix::zeros(dim);
            for &i in members {
                let row = dataset.row(i);
                for a in 0..dim {
                    let ca = row[a] - mean[a];
                    for b in a..dim {
                        let cb = row[b] - mean[b];
                        let v = full.get(a, b) + ca * cb;
                        full.set(a, b, v);
                    }
                }
            }
            for a in 0..dim {
                for b in a..dim {
                    let v = full.get(a, b) / n;
                    full.set(a, b, v);
                    full.set(b, a, v);
                }
            }
            Covariance::Full(full)
        }
    };
    ClassStats {
        class: k,
        class_id: dataset.class_id(k),
        count: members.len(),
        mean,
        cov,
    }
}

/// Single-pass moment accumulator (Welford / co-moment update).
///
/// Numerically stable alternative to the two-pass estimator for streaming
/// use; both agree to high relative precision.
#[derive(Debug, Clone)]
pub struct StreamingMoments {
    mode: CovMode,
    count: usize,
    mean: Vec<f64>,
    /// Sum of squared deviations (diagonal) or co-moment matrix (full).
    m2: Covariance,
}

impl StreamingMoments {
    pub fn new(mode: CovMode, dim: usize) -> Self {
        StreamingMoments {
            mode,
            count: 0,
            mean: vec![0.0; dim],
            m2: Covariance::zeros(mode, dim),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        let delta2: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        match &mut self.m2 {
            Covariance::Diagonal(diag) => {
                for (s, (d1, d2)) in diag.iter_mut().zip(delta.iter().zip(&delta2)) {
                    *s += d1 * d2;
                }
            }
            Covariance::Full(full) => {
                let dim = delta.len();
                for a in 0..dim {
                    for b in 0..dim {
                        let v = full.get(a, b) + delta[a] * delta2[b];
                        full.set(a, b, v);
                    }
                }
            }
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// MLE covariance (divisor n).
    pub fn covariance(&self) -> Covariance {
        let n = self.count.max(1) as f64;
        match &self.m2 {
            Covariance::Diagonal(d) => {
                Covariance::Diagonal(d.iter().map(|v| v / n).collect())
            }
            Covariance::Full(m) => {
                // Symmetrize: the co-moment update is exact but applied
                // asymmetrically, so mirror the average.
                let dim = m.dim();
                let mut out = SymMatrix::zeros(dim);
                for a in 0..dim {
                    for b in 0..dim {
                        out.set(a, b, 0.5 * (m.get(a, b) + m.get(b, a)) / n);
                    }
                }
                Covariance::Full(out)
            }
        }
    }

    pub fn mode(&self) -> CovMode {
        self.mode
    }
}

/// `(sum_k n_k * cov_k) / (sum_k n_k)`.
pub fn estimate_global_covariance(stats: &[ClassStats]) -> Result<GlobalStats> {
    let first = stats.first().ok_or_else(|| Error::Empty {
        context: "global covariance needs at least one class".into(),
    })?;
    let mode = first.cov.mode();
    let dim = first.cov.dim();
    let mut acc = Covariance::zeros(mode, dim);
    let mut total = 0usize;
    for s in stats {
        acc.add_scaled(&s.cov, s.count as f64)?;
        total += s.count;
    }
    let cov = acc.scale(1.0 / total as f64);
    Ok(GlobalStats {
        cov,
        total_count: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerationMode {
    Identity,
    Global,
    Diagonal,
    Keep,
}

/// Replace class covariances per the degeneration ablations.
pub fn degenerate_covariance(
    stats: &[ClassStats],
    global: &GlobalStats,
    mode: DegenerationMode,
) -> Vec<ClassStats> {
    stats
        .iter()
        .map(|s| {
            let cov = match mode {
                DegenerationMode::Identity => Covariance::identity(s.cov.mode(), s.cov.dim()),
                DegenerationMode::Global => global.cov.clone(),
                DegenerationMode::Diagonal => s.cov.zero_off_diagonal(),
                DegenerationMode::Keep => s.cov.clone(),
            };
            ClassStats { cov, ..s.clone() }
        })
        .collect()
}

// --- JSON export schema ---------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassStatsRecord {
    pub class_id: u32,
    pub n: usize,
    pub mean: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_diag: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_full: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsDocument {
    pub mode: CovMode,
    pub classes: Vec<ClassStatsRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_cov: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_cov_full: Option<Vec<Vec<f64>>>,
}

fn cov_to_record(cov: &Covariance) -> (Option<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    match cov {
        Covariance::Diagonal(d) => (Some(d.clone()), None),
        Covariance::Full(m) => {
            let rows = (0..m.dim())
                .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
                .collect();
            (None, Some(rows))
        }
    }
}

fn cov_from_record(
    diag: Option<Vec<f64>>,
    full: Option<Vec<Vec<f64>>>,
    mode: CovMode,
) -> Result<Covariance> {
    match (mode, diag, full) {
        (CovMode::Diagonal, Some(d), _) => Ok(Covariance::Diagonal(d)),
        (CovMode::Full, _, Some(rows)) => Ok(Covariance::Full(SymMatrix::from_rows(rows)?)),
        _ => Err(Error::ModeMismatch {
            context: "stats document: covariance field does not match mode".into(),
        }),
    }
}

pub fn stats_to_document(stats: &[ClassStats], global: Option<&GlobalStats>) -> StatsDocument {
    let mode = stats.first().map(|s| s.cov.mode()).unwrap_or(CovMode::Diagonal);
    let classes = stats
        .iter()
        .map(|s| {
            let (cov_diag, cov_full) = cov_to_record(&s.cov);
            ClassStatsRecord {
                class_id: s.class_id,
                n: s.count,
                mean: s.mean.clone(),
                cov_diag,
                cov_full,
            }
        })
        .collect();
    let (global_cov, global_cov_full) = match global {
        Some(g) => cov_to_record(&g.cov),
        None => (None, None),
    };
    StatsDocument {
        mode,
        classes,
        global_cov,
        global_cov_full,
    }
}

/// Rebuild stats (dense class order = document order) and the global
/// covariance from an exported document.
pub fn stats_from_document(doc: StatsDocument) -> Result<(Vec<ClassStats>, Option<GlobalStats>)> {
    let mode = doc.mode;
    let mut stats = Vec::with_capacity(doc.classes.len());
    let mut total = 0usize;
    for (k, rec) in doc.classes.into_iter().enumerate() {
        total += rec.n;
        stats.push(ClassStats {
            class: k,
            class_id: rec.class_id,
            count: rec.n,
            mean: rec.mean,
            cov: cov_from_record(rec.cov_diag, rec.cov_full, mode)?,
        });
    }
    let global = match (doc.global_cov, doc.global_cov_full) {
        (Some(d), _) => Some(GlobalStats {
            cov: Covariance::Diagonal(d),
            total_count: total,
        }),
        (None, Some(rows)) => Some(GlobalStats {
            cov: Covariance::Full(SymMatrix::from_rows(rows)?),
            total_count: total,
        }),
        (None, None) => None,
    };
    Ok((stats, global))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn stats_of(values: Vec<f64>, labels: Vec<u32>, dim: usize, mode: CovMode) -> Vec<ClassStats> {
        let ds = Dataset::new("t", dim, values, labels).unwrap();
        estimate_class_stats(&ds, &ds.class_index(), mode).unwrap()
    }

    #[test]
    fn two_symmetric_points() {
        let s = stats_of(vec![1.0, 0.0, 0.0, 1.0], vec![1, 1], 2, CovMode::Diagonal);
        assert_eq!(s[0].mean, vec![0.5, 0.5]);
        assert_eq!(s[0].cov.diagonal(), vec![0.25, 0.25]);
    }

    #[test]
    fn singleton_class_zero_covariance() {
        let s = stats_of(vec![2.0, 2.0], vec![1], 2, CovMode::Diagonal);
        assert_eq!(s[0].mean, vec![2.0, 2.0]);
        assert_eq!(s[0].cov.diagonal(), vec![0.0, 0.0]);
    }

    #[test]
    fn global_covariance_weighting() {
        // n = (3,1), first diagonal entries 4 and 0 -> weighted mean 3.
        let mut stats = stats_of(
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
            vec![1, 1, 1, 2],
            2,
            CovMode::Diagonal,
        );
        stats[0].cov = Covariance::Diagonal(vec![4.0, 0.0]);
        stats[1].cov = Covariance::Diagonal(vec![0.0, 0.0]);
        let g = estimate_global_covariance(&stats).unwrap();
        assert_eq!(g.cov.diagonal()[0], 3.0);
    }

    #[test]
    fn global_of_single_class_is_identity_map() {
        let stats = stats_of(vec![1.0, 0.0, 0.0, 1.0], vec![1, 1], 2, CovMode::Diagonal);
        let g = estimate_global_covariance(&stats).unwrap();
        assert_eq!(g.cov.diagonal(), stats[0].cov.diagonal());
    }

    #[test]
    fn equal_weight_global_average() {
        let mut stats = stats_of(vec![0.0, 1.0], vec![1, 2], 1, CovMode::Diagonal);
        stats[0].cov = Covariance::Diagonal(vec![0.4]);
        stats[1].cov = Covariance::Diagonal(vec![0.6]);
        let g = estimate_global_covariance(&stats).unwrap();
        assert!((g.cov.diagonal()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degeneration_modes() {
        let stats = stats_of(
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 5.0, 5.0, 5.0],
            vec![1, 1, 2],
            3,
            CovMode::Full,
        );
        let global = estimate_global_covariance(&stats).unwrap();

        let ident = degenerate_covariance(&stats, &global, DegenerationMode::Identity);
        for s in &ident {
            match &s.cov {
                Covariance::Full(m) => {
                    for i in 0..3 {
                        for j in 0..3 {
                            assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
                        }
                    }
                }
                _ => panic!("mode changed"),
            }
        }

        let glob = degenerate_covariance(&stats, &global, DegenerationMode::Global);
        for s in &glob {
            assert_eq!(s.cov.entries(), global.cov.entries());
        }

        let diag = degenerate_covariance(&stats, &global, DegenerationMode::Diagonal);
        match (&diag[0].cov, &stats[0].cov) {
            (Covariance::Full(d), Covariance::Full(orig)) => {
                for i in 0..3 {
                    assert_eq!(d.get(i, i), orig.get(i, i));
                    for j in 0..3 {
                        if i != j {
                            assert_eq!(d.get(i, j), 0.0);
                        }
                    }
                }
            }
            _ => panic!("mode changed"),
        }

        let keep = degenerate_covariance(&stats, &global, DegenerationMode::Keep);
        assert_eq!(keep[0].cov.entries(), stats[0].cov.entries());
    }

    #[test]
    fn all_singletons_zero_global() {
        let stats = stats_of(vec![1.0, 2.0, 3.0], vec![1, 2, 3], 1, CovMode::Diagonal);
        let g = estimate_global_covariance(&stats).unwrap();
        assert_eq!(g.cov.diagonal(), vec![0.0]);
        for s in &stats {
            assert_eq!(s.cov.diagonal(), vec![0.0]);
        }
    }

    #[test]
    fn document_round_trip() {
        let stats = stats_of(vec![1.0, 0.0, 0.0, 1.0, 5.0, 5.0], vec![1, 1, 9], 2, CovMode::Diagonal);
        let global = estimate_global_covariance(&stats).unwrap();
        let doc = stats_to_document(&stats, Some(&global));
        let json = serde_json::to_string(&doc).unwrap();
        let parsed: StatsDocument = serde_json::from_str(&json).unwrap();
        let (back, g2) = stats_from_document(parsed).unwrap();
        assert_eq!(back.len(), stats.len());
        for (a, b) in back.iter().zip(&stats) {
            assert_eq!(a.class_id, b.class_id);
            assert_eq!(a.count, b.count);
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.cov.entries(), b.cov.entries());
        }
        assert_eq!(g2.unwrap().cov.entries(), global.cov.entries());
    }
}
