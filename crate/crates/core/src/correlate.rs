//! Rank-correlation analysis between class means and class covariances.
//!
//! For each anchor class the distances of its mean to all other means and
//! of its covariance to all other covariances form two sequences; their
//! Spearman correlation measures how strongly "similar classes have
//! similar variations" holds in a given embedding space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ClassStats, Covariance, GlobalStats};

/// Configurable mean/covariance distance:
/// `||mu_i^2 - mu_j^2||_p` (or raw means) and `||cov_i - cov_j||_p`
/// (or entrywise square roots, diagonal mode only). Matrix norms are
/// entrywise, matching the vector case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceMetricConfig {
    pub p: u32,
    pub square_mean: bool,
    pub sqrt_cov: bool,
}

impl Default for DistanceMetricConfig {
    /// The combination used for neighbor correction: squared means,
    /// raw covariances, p = 2.
    fn default() -> Self {
        DistanceMetricConfig {
            p: 2,
            square_mean: true,
            sqrt_cov: false,
        }
    }
}

impl DistanceMetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.p) {
            return Err(Error::InvalidParameter {
                context: format!("p must be in 1..=4, got {}", self.p),
            });
        }
        Ok(())
    }
}

fn p_norm(diff: impl Iterator<Item = f64>, p: u32) -> f64 {
    match p {
        1 => diff.map(f64::abs).sum(),
        2 => diff.map(|v| v * v).sum::<f64>().sqrt(),
        p => {
            let p = p as f64;
            diff.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Distance between two class means under `cfg`.
pub fn mean_distance(mu_i: &[f64], mu_j: &[f64], cfg: &DistanceMetricConfig) -> Result<f64> {
    if mu_i.len() != mu_j.len() {
        return Err(Error::DimensionMismatch {
            expected: mu_i.len(),
            actual: mu_j.len(),
        });
    }
    let diff = mu_i.iter().zip(mu_j).map(|(a, b)| {
        if cfg.square_mean {
            a * a - b * b
        } else {
            a - b
        }
    });
    Ok(p_norm(diff, cfg.p))
}

/// Distance between two covariances under `cfg` (entrywise p-norm).
pub fn cov_distance(cov_i: &Covariance, cov_j: &Covariance, cfg: &DistanceMetricConfig) -> Result<f64> {
    if cov_i.mode() != cov_j.mode() || cov_i.dim() != cov_j.dim() {
        return Err(Error::ModeMismatch {
            context: "covariance distance".into(),
        });
    }
    if cfg.sqrt_cov {
        match (cov_i, cov_j) {
            (Covariance::Diagonal(a), Covariance::Diagonal(b)) => {
                for (idx, &v) in a.iter().chain(b.iter()).enumerate() {
                    if v < 0.0 {
                        return Err(Error::NegativeDiagonal {
                            index: idx % a.len(),
                            value: v,
                        });
                    }
                }
                let diff = a.iter().zip(b).map(|(x, y)| x.sqrt() - y.sqrt());
                Ok(p_norm(diff, cfg.p))
            }
            _ => Err(Error::SqrtCovUnsupported),
        }
    } else {
        let diff = cov_i
            .entries()
            .iter()
            .zip(cov_j.entries())
            .map(|(a, b)| a - b);
        Ok(p_norm(diff, cfg.p))
    }
}

/// Average ranks (1-based), ties share the mean of the ranks they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
///
/// Errors when either sequence is constant (the correlation is undefined).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty {
            context: "spearman needs at least 2 points".into(),
        });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSequence);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Output of [`correlation_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub per_class_rho: Vec<f64>,
    pub mean_rho: f64,
    pub config: DistanceMetricConfig,
    /// Averaged curves over anchors: per rank position (classes sorted by
    /// descending mean distance), the min-max normalized mean distance and
    /// covariance distance.
    pub mean_curve: Vec<f64>,
    pub cov_curve: Vec<f64>,
}

/// Per-class Spearman correlation between mean-distance and
/// covariance-distance sequences, plus rank curves averaged over anchors.
pub fn correlation_report(stats: &[ClassStats], cfg: &DistanceMetricConfig) -> Result<CorrelationReport> {
    cfg.validate()?;
    let c = stats.len();
    if c < 3 {
        return Err(Error::TooFewClasses {
            required: 3,
            actual: c,
        });
    }
    let per_anchor: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..c)
        .into_par_iter()
        .map(|k| anchor_result(stats, k, cfg))
        .collect::<Result<_>>()?;

    let per_class_rho: Vec<f64> = per_anchor.iter().map(|(rho, _, _)| *rho).collect();
    let mean_rho = per_class_rho.iter().sum::<f64>() / c as f64;
    let mut mean_curve = vec![0.0; c - 1];
    let mut cov_curve = vec![0.0; c - 1];
    for (_, mc, cc) in &per_anchor {
        for i in 0..c - 1 {
            mean_curve[i] += mc[i];
            cov_curve[i] += cc[i];
        }
    }
    for v in mean_curve.iter_mut().chain(cov_curve.iter_mut()) {
        *v /= c as f64;
    }
    Ok(CorrelationReport {
        per_class_rho,
        mean_rho,
        config: *cfg,
        mean_curve,
        cov_curve,
    })
}

fn anchor_result(
    stats: &[ClassStats],
    k: usize,
    cfg: &DistanceMetricConfig,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut mean_d = Vec::with_capacity(stats.len() - 1);
    let mut cov_d = Vec::with_capacity(stats.len() - 1);
    for (i, s) in stats.iter().enumerate() {
        if i == k {
            continue;
        }
        mean_d.push(mean_distance(&stats[k].mean, &s.mean, cfg)?);
        cov_d.push(cov_distance(&stats[k].cov, &s.cov, cfg)?);
    }
    let rho = spearman(&mean_d, &cov_d)?;

    // Sort by descending mean distance, then min-max normalize each curve.
    let mut order: Vec<usize> = (0..mean_d.len()).collect();
    order.sort_by(|&a, &b| mean_d[b].partial_cmp(&mean_d[a]).expect("finite distances"));
    let sorted_mean: Vec<f64> = order.iter().map(|&i| mean_d[i]).collect();
    let sorted_cov: Vec<f64> = order.iter().map(|&i| cov_d[i]).collect();
    Ok((rho, min_max_normalize(&sorted_mean), min_max_normalize(&sorted_cov)))
}

fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Distances from the global covariance to every class covariance, plus
/// the norm of the global covariance itself as a reference line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalDistanceProfile {
    pub class_ids: Vec<u32>,
    pub distances: Vec<f64>,
    pub global_norm: f64,
}

pub fn global_distance_profile(
    stats: &[ClassStats],
    global: &GlobalStats,
    cfg: &DistanceMetricConfig,
) -> Result<GlobalDistanceProfile> {
    cfg.validate()?;
    if stats.is_empty() {
        return Err(Error::Empty {
            context: "global distance profile needs at least one class".into(),
        });
    }
    let mut class_ids = Vec::with_capacity(stats.len());
    let mut distances = Vec::with_capacity(stats.len());
    for s in stats {
        class_ids.push(s.class_id);
        distances.push(cov_distance(&global.cov, &s.cov, cfg)?);
    }
    let zero = Covariance::zeros(global.cov.mode(), global.cov.dim());
    let global_norm = cov_distance(&global.cov, &zero, cfg)?;
    Ok(GlobalDistanceProfile {
        class_ids,
        distances,
        global_norm,
    })
}

/// Mean Spearman correlation for every metric combination, for
/// side-by-side comparison of distance-metric variants.
pub fn metric_sweep(stats: &[ClassStats], ps: &[u32]) -> Result<Vec<CorrelationReport>> {
    let mut out = Vec::new();
    for &square_mean in &[true, false] {
        for &sqrt_cov in &[false, true] {
            if sqrt_cov && stats.iter().any(|s| matches!(s.cov, Covariance::Full(_))) {
                continue;
            }
            for &p in ps {
                let cfg = DistanceMetricConfig {
                    p,
                    square_mean,
                    sqrt_cov,
                };
                out.push(correlation_report(stats, &cfg)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: Vec<f64>) -> Covariance {
        Covariance::Diagonal(v)
    }

    #[test]
    fn mean_distance_cases() {
        let cfg = DistanceMetricConfig::default();
        assert_eq!(mean_distance(&[0.3, 0.4], &[0.3, 0.4], &cfg).unwrap(), 0.0);
        // square_mean, p=2: mu_i=(1,0), mu_j=(0,1) -> ||(1,-1)||_2 = sqrt 2
        let d = mean_distance(&[1.0, 0.0], &[0.0, 1.0], &cfg).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-15);
        // raw means, p=1: (1,2) vs (0,0) -> 3
        let cfg1 = DistanceMetricConfig {
            p: 1,
            square_mean: false,
            sqrt_cov: false,
        };
        assert_eq!(mean_distance(&[1.0, 2.0], &[0.0, 0.0], &cfg1).unwrap(), 3.0);
    }

    #[test]
    fn cov_distance_cases() {
        let cfg = DistanceMetricConfig::default();
        let a = diag(vec![1.0, 2.0]);
        assert_eq!(cov_distance(&a, &a, &cfg).unwrap(), 0.0);
        // sqrt_cov, p=1: diag (4,0) vs (0,0) -> sqrt(4) = 2
        let cfg_sqrt = DistanceMetricConfig {
            p: 1,
            square_mean: true,
            sqrt_cov: true,
        };
        let d = cov_distance(&diag(vec![4.0, 0.0]), &diag(vec![0.0, 0.0]), &cfg_sqrt).unwrap();
        assert_eq!(d, 2.0);
        // raw, p=2: diag (1,1) vs (0,0) -> sqrt 2
        let d = cov_distance(&diag(vec![1.0, 1.0]), &diag(vec![0.0, 0.0]), &cfg).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-15);
        // negative diagonal under sqrt_cov is an error
        assert!(cov_distance(&diag(vec![-1.0]), &diag(vec![0.0]), &cfg_sqrt).is_err());
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn spearman_constant_errors() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantSequence)
        ));
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_with_ties_matches_rank_then_pearson_oracle() {
        // Independent oracle: explicit average ranks, then Pearson.
        fn oracle(x: &[f64], y: &[f64]) -> f64 {
            fn ranks(v: &[f64]) -> Vec<f64> {
                let n = v.len();
                let mut r = vec![0.0; n];
                for i in 0..n {
                    let less = v.iter().filter(|&&u| u < v[i]).count();
                    let equal = v.iter().filter(|&&u| u == v[i]).count();
                    // average of ranks less+1 ..= less+equal
                    r[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
                }
                r
            }
            fn pearson(a: &[f64], b: &[f64]) -> f64 {
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
                let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
                let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
                cov / (va * vb).sqrt()
            }
            let (rx, ry) = (ranks(x), ranks(y));
            pearson(&rx, &ry)
        }
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let got = spearman(&x, &y).unwrap();
        let want = oracle(&x, &y);
        assert!((got - want).abs() < 1e-12, "got {got}, oracle {want}");
    }

    fn three_class_stats() -> Vec<ClassStats> {
        // Hand-set: mean distances and covariance distances agree in rank
        // for every anchor, so every rho is exactly 1.
        let mk = |class: usize, mean: Vec<f64>, covd: Vec<f64>| ClassStats {
            class,
            class_id: class as u32 + 1,
            count: 10,
            mean,
            cov: diag(covd),
        };
        vec![
            mk(0, vec![0.0, 0.0], vec![0.1, 0.1]),
            mk(1, vec![1.0, 0.0], vec![0.5, 0.5]),
            mk(2, vec![2.0, 0.0], vec![0.9, 0.9]),
        ]
    }

    #[test]
    fn report_hand_computed_three_classes() {
        let report = correlation_report(&three_class_stats(), &DistanceMetricConfig::default()).unwrap();
        // Covariance spacing follows mean spacing so all anchors give rho 1.
        assert_eq!(report.per_class_rho, vec![1.0, 1.0, 1.0]);
        assert!((report.mean_rho - 1.0).abs() < 1e-15);
        // Curves: sorted descending, normalized to [0,1] -> first 1, last 0.
        assert_eq!(report.mean_curve.first(), Some(&1.0));
        assert_eq!(report.mean_curve.last(), Some(&0.0));
    }

    #[test]
    fn report_invariant_to_relabeling() {
        let stats = three_class_stats();
        let mut shuffled = vec![stats[2].clone(), stats[0].clone(), stats[1].clone()];
        for (k, s) in shuffled.iter_mut().enumerate() {
            s.class = k;
        }
        let a = correlation_report(&stats, &DistanceMetricConfig::default()).unwrap();
        let b = correlation_report(&shuffled, &DistanceMetricConfig::default()).unwrap();
        assert!((a.mean_rho - b.mean_rho).abs() < 1e-12);
        for (x, y) in a.mean_curve.iter().zip(&b.mean_curve) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_degenerate_and_direct() {
        let stats = three_class_stats();
        // All classes share one covariance -> distances all zero.
        let mut same = stats.clone();
        for s in same.iter_mut() {
            s.cov = diag(vec![0.3, 0.3]);
        }
        let global = crate::stats::estimate_global_covariance(&same).unwrap();
        let prof = global_distance_profile(&same, &global, &DistanceMetricConfig::default()).unwrap();
        assert!(prof.distances.iter().all(|&d| d.abs() < 1e-12));

        // Two classes diag(2) and diag(0), equal n -> global diag(1), distances 1,1.
        let two = vec![
            ClassStats {
                class: 0,
                class_id: 1,
                count: 5,
                mean: vec![0.0],
                cov: diag(vec![2.0]),
            },
            ClassStats {
                class: 1,
                class_id: 2,
                count: 5,
                mean: vec![1.0],
                cov: diag(vec![0.0]),
            },
        ];
        let g = crate::stats::estimate_global_covariance(&two).unwrap();
        assert_eq!(g.cov.diagonal(), vec![1.0]);
        let prof = global_distance_profile(&two, &g, &DistanceMetricConfig::default()).unwrap();
        assert_eq!(prof.distances, vec![1.0, 1.0]);
        assert_eq!(prof.global_norm, 1.0);
    }
}
