//! Population statistics, correlation coefficients and quadrant placement.
//!
//! Long sums use Neumaier compensated summation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn non_empty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::domain(format!("{what} of an empty list")));
    }
    Ok(())
}

pub fn mean(values: &[f64]) -> Result<f64> {
    non_empty(values, "mean")?;
    Ok(compensated_sum(values.iter().copied()) / values.len() as f64)
}

/// Population standard deviation (divides by `n`).
pub fn std_pop(values: &[f64]) -> Result<f64> {
    let mu = mean(values)?;
    let ss = compensated_sum(values.iter().map(|&x| (x - mu) * (x - mu)));
    Ok((ss / values.len() as f64).sqrt())
}

/// Coefficient of variation in percent: `100 * std_pop / mean`.
pub fn cv_percent(values: &[f64]) -> Result<f64> {
    let mu = mean(values)?;
    if mu == 0.0 {
        return Err(Error::domain("coefficient of variation undefined for zero mean"));
    }
    Ok(100.0 * std_pop(values)? / mu)
}

/// Per-test-group accuracies in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AccuracyVector(Vec<f64>);

impl AccuracyVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("accuracy vector is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::domain(format!("accuracy {v} outside [0, 100]")));
        }
        Ok(AccuracyVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Vec<f64>> for AccuracyVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        AccuracyVector::new(v)
    }
}

impl From<AccuracyVector> for Vec<f64> {
    fn from(v: AccuracyVector) -> Self {
        v.0
    }
}

/// Mean accuracy over all test groups. Divides by `n`.
pub fn mean_accuracy(v: &AccuracyVector) -> Result<f64> {
    mean(v.values())
}

/// CV of a classifier's accuracies across test groups.
pub fn cv_of_classifier(v: &AccuracyVector) -> Result<f64> {
    cv_percent(v.values())
}

fn paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::domain("correlation needs at least 2 pairs"));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    paired(x, y)?;
    let mx = mean(x)?;
    let my = mean(y)?;
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = compensated_sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain("Pearson correlation undefined for constant input"));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) → ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman's rank correlation as the Pearson correlation of average ranks.
/// Without ties this equals `1 - 6 Σd² / (n(n² - 1))`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    paired(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuadrantLabel {
    #[serde(rename = "GROUP_I")]
    GroupI,
    #[serde(rename = "GROUP_II")]
    GroupII,
    #[serde(rename = "GROUP_III")]
    GroupIII,
    #[serde(rename = "GROUP_IV")]
    GroupIV,
}

impl QuadrantLabel {
    pub fn roman(self) -> &'static str {
        match self {
            QuadrantLabel::GroupI => "I",
            QuadrantLabel::GroupII => "II",
            QuadrantLabel::GroupIII => "III",
            QuadrantLabel::GroupIV => "IV",
        }
    }
}

impl fmt::Display for QuadrantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group {}", self.roman())
    }
}

/// The clean-trained run's (mean accuracy, CV) that splits the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    #[serde(rename = "rMA")]
    pub mean_accu: f64,
    #[serde(rename = "rCV")]
    pub cv: f64,
}

impl ReferencePoint {
    pub fn new(mean_accu: f64, cv: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&mean_accu) {
            return Err(Error::domain(format!("reference mean accuracy {mean_accu} outside [0, 100]")));
        }
        if !(cv >= 0.0 && cv.is_finite()) {
            return Err(Error::domain(format!("reference CV {cv} must be finite and >= 0")));
        }
        Ok(ReferencePoint { mean_accu, cv })
    }
}

/// Quadrant of `(mean_accu, cv)` relative to `reference`. Higher accuracy
/// wins ties on the accuracy axis and lower CV wins ties on the CV axis.
pub fn identify_group(mean_accu: f64, cv: f64, reference: &ReferencePoint) -> QuadrantLabel {
    let high = mean_accu >= reference.mean_accu;
    let low_cv = cv <= reference.cv;
    match (high, low_cv) {
        (true, true) => QuadrantLabel::GroupI,
        (true, false) => QuadrantLabel::GroupII,
        (false, true) => QuadrantLabel::GroupIII,
        (false, false) => QuadrantLabel::GroupIV,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn std_pop_examples() {
        assert_eq!(std_pop(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(std_pop(&[7.0]).unwrap(), 0.0);
        // sqrt((100 + 0 + 100) / 3)
        assert!(close(std_pop(&[80.0, 90.0, 100.0]).unwrap(), 8.1650, 1e-4));
        assert!(std_pop(&[]).is_err());
    }

    #[test]
    fn cv_examples() {
        assert_eq!(cv_percent(&[3.0, 3.0]).unwrap(), 0.0);
        assert!(close(cv_percent(&[80.0, 90.0, 100.0]).unwrap(), 9.0722, 1e-3));
        assert!(matches!(cv_percent(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn classifier_cv_examples() {
        let v = AccuracyVector::new(vec![85.0, 95.0]).unwrap();
        assert!(close(cv_of_classifier(&v).unwrap(), 5.5556, 1e-3));
        assert_eq!(cv_of_classifier(&v).unwrap(), cv_percent(v.values()).unwrap());
        let flat = AccuracyVector::new(vec![70.0; 69]).unwrap();
        assert_eq!(cv_of_classifier(&flat).unwrap(), 0.0);
    }

    #[test]
    fn mean_accuracy_examples() {
        assert_eq!(mean_accuracy(&AccuracyVector::new(vec![90.0; 5]).unwrap()).unwrap(), 90.0);
        assert_eq!(mean_accuracy(&AccuracyVector::new(vec![100.0, 0.0]).unwrap()).unwrap(), 50.0);
    }

    #[test]
    fn accuracy_vector_validation() {
        assert!(AccuracyVector::new(vec![]).is_err());
        assert!(AccuracyVector::new(vec![100.5]).is_err());
        assert!(AccuracyVector::new(vec![f64::NAN]).is_err());
        assert!(serde_json::from_str::<AccuracyVector>("[101.0]").is_err());
    }

    #[test]
    fn correlation_edge_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(close(spearman(&x, &[10.0, 20.0, 25.0, 100.0]).unwrap(), 1.0, 1e-12));
        assert!(close(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0, 1e-12));
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!(close(pearson(&x, &affine).unwrap(), 1.0, 1e-12));
        assert!(pearson(&x, &[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(pearson(&x, &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[1.33, 2.0, 1.33, 0.5]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn quadrant_golden_cases() {
        let r = ReferencePoint::new(85.25, 2.28).unwrap();
        assert_eq!(identify_group(88.39, 1.92, &r), QuadrantLabel::GroupI);
        assert_eq!(identify_group(85.75, 3.33, &r), QuadrantLabel::GroupII);
        assert_eq!(identify_group(85.25, 2.28, &r), QuadrantLabel::GroupI);
        assert_eq!(identify_group(80.0, 2.28, &r), QuadrantLabel::GroupIII);
        assert_eq!(identify_group(80.0, 2.29, &r), QuadrantLabel::GroupIV);
    }

    #[test]
    fn quadrant_serialises_in_upper_snake() {
        assert_eq!(serde_json::to_string(&QuadrantLabel::GroupIII).unwrap(), "\"GROUP_III\"");
    }

    proptest! {
        #[test]
        fn cv_is_scale_invariant(v in prop::collection::vec(1.0..100.0f64, 1..80), c in 0.01..100.0f64) {
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let a = cv_percent(&v).unwrap();
            let b = cv_percent(&scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn correlations_are_symmetric_and_invariant(
            pairs in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..40),
            a in 0.1..10.0f64, b in -10.0..10.0f64,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(pearson(&x, &y).is_ok());
            let p = pearson(&x, &y).unwrap();
            prop_assert!((p - pearson(&y, &x).unwrap()).abs() < 1e-12);
            let tx: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((p - pearson(&tx, &y).unwrap()).abs() < 1e-9);
            let s = spearman(&x, &y).unwrap();
            prop_assert!((s - spearman(&y, &x).unwrap()).abs() < 1e-12);
            let cubed: Vec<f64> = x.iter().map(|v| v * v * v + 3.0 * v).collect();
            prop_assert!((s - spearman(&cubed, &y).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn quadrants_partition_the_plane(ma in 0.0..100.0f64, cv in 0.0..10.0f64, rma in 0.0..100.0f64, rcv in 0.0..10.0f64) {
            let r = ReferencePoint::new(rma, rcv).unwrap();
            let q = identify_group(ma, cv, &r);
            let expected = [
                (ma >= rma && cv <= rcv, QuadrantLabel::GroupI),
                (ma >= rma && cv > rcv, QuadrantLabel::GroupII),
                (ma < rma && cv <= rcv, QuadrantLabel::GroupIII),
                (ma < rma && cv > rcv, QuadrantLabel::GroupIV),
            ];
            let hits: Vec<_> = expected.iter().filter(|e| e.0).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(hits[0].1, q);
        }
    }
}
