//! Similarity-score and ROC measurement protocols.
//!
//! The similarity between two histogram features is the asymmetric
//! histogram-intersection ratio normalized by the first argument's mass; a
//! sample's `Diff` score is its best same-class similarity minus its best
//! other-class similarity. Classification quality is summarized by a
//! per-window ROC and detection rates at fixed false-positive rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Which descriptor produced a feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorTag {
    Centrist,
    Tcentrist,
}

impl std::fmt::Display for DescriptorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DescriptorTag::Centrist => write!(f, "centrist"),
            DescriptorTag::Tcentrist => write!(f, "tcentrist"),
        }
    }
}

/// Feature vectors with class ids, all of one dimension.
#[derive(Debug, Clone)]
pub struct LabeledFeatureSet {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<i32>,
    pub descriptor: DescriptorTag,
}

impl LabeledFeatureSet {
    pub fn new(features: Vec<FeatureVector>, labels: Vec<i32>, descriptor: DescriptorTag) -> Self {
        assert_eq!(features.len(), labels.len());
        if let Some(first) = features.first() {
            assert!(features.iter().all(|f| f.len() == first.len()));
        }
        Self {
            features,
            labels,
            descriptor,
        }
    }
}

/// Histogram-intersection similarity `sum(min(M_i, N_i)) / sum(M_i)`.
///
/// Deliberately asymmetric: mass normalization uses `m` only.
pub fn hik(m: &[f64], n: &[f64]) -> Result<f64> {
    assert_eq!(m.len(), n.len(), "histograms must share one bin layout");
    let mass: f64 = m.iter().sum();
    if mass <= 0.0 {
        return Err(Error::EmptyReference);
    }
    let inter: f64 = m.iter().zip(n).map(|(a, b)| a.min(*b)).sum();
    Ok(inter / mass)
}

/// Best same-class similarity minus best other-class similarity of `s`.
/// `same` must not contain `s` itself; arg-max ties take the earlier entry.
pub fn diff_score(s: &FeatureVector, same: &[&FeatureVector], other: &[&FeatureVector]) -> Result<f64> {
    let best = |set: &[&FeatureVector]| -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut best = f64::NEG_INFINITY;
        for candidate in set {
            let d = hik(&s.values, &candidate.values)?;
            if d > best {
                best = d;
            }
        }
        Ok(best)
    };
    Ok(best(same)? - best(other)?)
}

/// `Diff` scores for every member of `class` within `set`.
pub fn diff_scores_for_class(set: &LabeledFeatureSet, class: i32) -> Result<Vec<f64>> {
    let members: Vec<usize> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == class)
        .map(|(i, _)| i)
        .collect();
    if members.len() < 2 {
        return Err(Error::InsufficientData {
            class,
            count: members.len(),
        });
    }
    let others: Vec<&FeatureVector> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != class)
        .map(|(i, _)| &set.features[i])
        .collect();

    members
        .iter()
        .map(|&i| {
            let same: Vec<&FeatureVector> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| &set.features[j])
                .collect();
            diff_score(&set.features[i], &same, &others)
        })
        .collect()
}

/// Percentage of `class` members whose `Diff` score is negative.
pub fn diff_negative_fraction(set: &LabeledFeatureSet, class: i32) -> Result<f64> {
    let scores = diff_scores_for_class(set, class)?;
    let negative = scores.iter().filter(|&&d| d < 0.0).count();
    Ok(100.0 * negative as f64 / scores.len() as f64)
}

/// ROC curve over per-window scores: `(false-positive rate, detection rate)`
/// points swept across the union of scores, plus the scores themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub positive_scores: Vec<f64>,
    pub negative_scores: Vec<f64>,
}

/// Sweeps the decision threshold over the union of scores (a window counts as
/// detected when its score is >= the threshold).
pub fn roc(positive_scores: &[f64], negative_scores: &[f64]) -> Result<RocCurve> {
    if positive_scores.is_empty() || negative_scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut thresholds: Vec<f64> = positive_scores
        .iter()
        .chain(negative_scores)
        .copied()
        .collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let tp = positive_scores.iter().filter(|&&s| s >= t).count();
        let fp = negative_scores.iter().filter(|&&s| s >= t).count();
        points.push((
            fp as f64 / negative_scores.len() as f64,
            tp as f64 / positive_scores.len() as f64,
        ));
    }
    Ok(RocCurve {
        points,
        positive_scores: positive_scores.to_vec(),
        negative_scores: negative_scores.to_vec(),
    })
}

/// Detection rate at the largest achievable FPR not exceeding `fpr`
/// (conservative step interpolation; 0 when no point qualifies).
pub fn detection_rate_at_fpr(curve: &RocCurve, fpr: f64) -> f64 {
    curve
        .points
        .iter()
        .filter(|(f, _)| *f <= fpr)
        .map(|&(_, rate)| rate)
        .fold(0.0, f64::max)
}

/// Per-descriptor summary of the two headline operating points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocSummary {
    pub descriptor: DescriptorTag,
    pub rate_at_fpr_1e2: f64,
    pub rate_at_fpr_1e1: f64,
}

impl RocSummary {
    pub fn from_curve(descriptor: DescriptorTag, curve: &RocCurve) -> Self {
        Self {
            descriptor,
            rate_at_fpr_1e2: detection_rate_at_fpr(curve, 1e-2),
            rate_at_fpr_1e1: detection_rate_at_fpr(curve, 1e-1),
        }
    }
}

/// CSV rows: `index,label,diff` with a header line.
pub fn diff_csv(labels: &[i32], diffs: &[(usize, f64)]) -> String {
    let mut out = String::from("index,label,diff\n");
    for &(i, d) in diffs {
        out.push_str(&format!("{},{},{}\n", i, labels[i], d));
    }
    out
}

/// CSV rows: `fpr,detection_rate` with a header line.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("fpr,detection_rate\n");
    for &(fpr, rate) in &curve.points {
        out.push_str(&format!("{},{}\n", fpr, rate));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector {
            values: values.to_vec(),
        }
    }

    #[test]
    fn hik_identity_is_one() {
        let m = [1.0, 2.0, 3.5];
        assert_eq!(hik(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn hik_hand_example() {
        let d = hik(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hik_saturates_when_n_dominates() {
        let d = hik(&[1.0, 2.0, 0.5], &[5.0, 2.0, 9.0]).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn hik_rejects_zero_reference() {
        assert!(matches!(
            hik(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::EmptyReference)
        ));
    }

    #[test]
    fn diff_score_with_duplicate_is_nonnegative() {
        let s = fv(&[2.0, 1.0, 4.0]);
        let twin = fv(&[2.0, 1.0, 4.0]);
        let stranger = fv(&[9.0, 0.0, 0.0]);
        let d = diff_score(&s, &[&twin], &[&stranger]).unwrap();
        let out = hik(&s.values, &stranger.values).unwrap();
        assert!((d - (1.0 - out)).abs() < 1e-15);
        assert!(d >= 0.0);
    }

    #[test]
    fn diff_score_identical_sets_is_zero() {
        let s = fv(&[1.0, 2.0]);
        let a = fv(&[2.0, 2.0]);
        let b = fv(&[0.5, 3.0]);
        let d = diff_score(&s, &[&a, &b], &[&a, &b]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn diff_score_matches_exhaustive_argmax() {
        let s = fv(&[4.0, 1.0, 2.0]);
        let same = [fv(&[3.0, 2.0, 2.0]), fv(&[4.0, 0.0, 1.0]), fv(&[0.0, 9.0, 0.0])];
        let other = [fv(&[1.0, 1.0, 1.0]), fv(&[5.0, 5.0, 5.0])];
        let same_refs: Vec<&FeatureVector> = same.iter().collect();
        let other_refs: Vec<&FeatureVector> = other.iter().collect();

        let mut best_in = f64::NEG_INFINITY;
        for c in &same {
            best_in = best_in.max(hik(&s.values, &c.values).unwrap());
        }
        let mut best_out = f64::NEG_INFINITY;
        for c in &other {
            best_out = best_out.max(hik(&s.values, &c.values).unwrap());
        }
        let d = diff_score(&s, &same_refs, &other_refs).unwrap();
        assert_eq!(d, best_in - best_out);
    }

    #[test]
    fn diff_score_empty_set_errors() {
        let s = fv(&[1.0]);
        let a = fv(&[1.0]);
        assert!(matches!(
            diff_score(&s, &[], &[&a]),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn separated_clusters_have_no_negative_diffs() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            features.push(fv(&[10.0 + i as f64, 0.0, 1.0]));
            labels.push(1);
            features.push(fv(&[0.0, 10.0 + i as f64, 1.0]));
            labels.push(-1);
        }
        let set = LabeledFeatureSet::new(features, labels, DescriptorTag::Tcentrist);
        assert_eq!(diff_negative_fraction(&set, 1).unwrap(), 0.0);
        assert_eq!(diff_negative_fraction(&set, -1).unwrap(), 0.0);
    }

    #[test]
    fn roc_hand_example() {
        let pos = [0.9, 0.8, 0.7, 0.4, 0.2];
        let neg = [0.6, 0.5, 0.3, 0.1, 0.05];
        let curve = roc(&pos, &neg).unwrap();
        assert!((detection_rate_at_fpr(&curve, 0.2) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn roc_perfect_separation_hits_rate_one_everywhere() {
        let pos = [2.0, 3.0, 4.0];
        let neg = [-1.0, 0.0, 1.0];
        let curve = roc(&pos, &neg).unwrap();
        for f in [0.001, 0.01, 0.1, 1.0] {
            assert_eq!(detection_rate_at_fpr(&curve, f), 1.0);
        }
    }

    #[test]
    fn roc_is_monotone() {
        let pos = [0.1, 0.5, 0.9, 0.3, 0.7];
        let neg = [0.2, 0.6, 0.4, 0.8, 0.05];
        let curve = roc(&pos, &neg).unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].0 >= pair[0].0);
            assert!(pair[1].1 >= pair[0].1);
        }
    }

    #[test]
    fn empty_scores_error() {
        assert!(matches!(roc(&[], &[1.0]), Err(Error::EmptyScores)));
        assert!(matches!(roc(&[1.0], &[]), Err(Error::EmptyScores)));
    }
}
