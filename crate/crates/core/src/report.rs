//! Predictions → per-run robustness summaries → cross-run aggregates.
//!
//! Predictions CSV: header `group_id,image_index,true_label,predicted_label`,
//! one integer record per line, UTF-8, LF line endings. Row order carries no
//! meaning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::PerturbationChain;
use crate::stats::{self, AccuracyVector, QuadrantLabel, ReferencePoint};
use crate::suite::{enumerate_groups, GroupSpec, CLEAN_GROUP_ID};
use crate::FORMAT_VERSION;

pub const PREDICTIONS_HEADER: [&str; 4] = ["group_id", "image_index", "true_label", "predicted_label"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub group_id: u32,
    pub image_index: u32,
    pub true_label: u32,
    pub predicted_label: u32,
}

/// Parses predictions, rejecting unknown groups and duplicate `(group, index)` pairs.
pub fn parse_predictions<R: Read>(reader: R, known_groups: &BTreeSet<u32>) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(PREDICTIONS_HEADER.iter().copied()) {
        return Err(Error::format(format!(
            "predictions header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            PREDICTIONS_HEADER.join(",")
        )));
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for row in rdr.deserialize::<PredictionRecord>() {
        let rec = row.map_err(|e| Error::format(format!("malformed predictions row: {e}")))?;
        if !known_groups.contains(&rec.group_id) {
            return Err(Error::format(format!("unknown group_id {}", rec.group_id)));
        }
        if !seen.insert((rec.group_id, rec.image_index)) {
            return Err(Error::format(format!(
                "duplicate prediction for (group {}, index {})",
                rec.group_id, rec.image_index
            )));
        }
        records.push(rec);
    }
    Ok(records)
}

/// Reads a predictions CSV against the canonical group ids.
pub fn ingest_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let known = enumerate_groups().iter().map(|g| g.group_id).collect();
    parse_predictions(file, &known)
}

pub fn write_predictions<W: Write>(writer: W, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub correct: usize,
    pub total: usize,
}

impl GroupCount {
    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

pub fn group_counts(records: &[PredictionRecord]) -> BTreeMap<u32, GroupCount> {
    let mut counts: BTreeMap<u32, GroupCount> = BTreeMap::new();
    for r in records {
        let c = counts.entry(r.group_id).or_default();
        c.total += 1;
        if r.true_label == r.predicted_label {
            c.correct += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrainingCategory {
    #[serde(rename = "CLEAN")]
    Clean,
    #[serde(rename = "SINGLE_FACTOR")]
    SingleFactor,
    #[serde(rename = "TWO_FACTOR")]
    TwoFactor,
}

impl TrainingCategory {
    pub const ALL: [TrainingCategory; 3] = [
        TrainingCategory::Clean,
        TrainingCategory::SingleFactor,
        TrainingCategory::TwoFactor,
    ];

    pub fn of_chain(chain: &PerturbationChain) -> Result<Self> {
        match chain.len() {
            0 => Ok(TrainingCategory::Clean),
            1 => Ok(TrainingCategory::SingleFactor),
            2 => Ok(TrainingCategory::TwoFactor),
            n => Err(Error::domain(format!("no training category for a {n}-step chain"))),
        }
    }

    pub fn of_group_name(name: &str) -> Result<Self> {
        Self::of_chain(&name.parse()?)
    }
}

impl fmt::Display for TrainingCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingCategory::Clean => "CLEAN",
            TrainingCategory::SingleFactor => "SINGLE_FACTOR",
            TrainingCategory::TwoFactor => "TWO_FACTOR",
        })
    }
}

/// One classifier trained on one group, scored on every test group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRun {
    pub classifier_name: String,
    pub training_group: String,
    pub training_category: TrainingCategory,
    /// Test-group ids, parallel to `accuracy`.
    pub group_ids: Vec<u32>,
    pub accuracy: AccuracyVector,
}

impl ClassifierRun {
    pub fn new(
        classifier_name: impl Into<String>,
        training_group: impl Into<String>,
        group_ids: Vec<u32>,
        accuracy: AccuracyVector,
    ) -> Result<Self> {
        let training_group = training_group.into();
        if group_ids.len() != accuracy.len() {
            return Err(Error::structure(format!(
                "{} group ids for {} accuracies",
                group_ids.len(),
                accuracy.len()
            )));
        }
        let unique: BTreeSet<_> = group_ids.iter().collect();
        if unique.len() != group_ids.len() {
            return Err(Error::structure("duplicate group id in accuracy vector"));
        }
        Ok(ClassifierRun {
            classifier_name: classifier_name.into(),
            training_category: TrainingCategory::of_group_name(&training_group)?,
            training_group,
            group_ids,
            accuracy,
        })
    }

    /// Builds a run from predictions; every group in `groups` must be scored.
    pub fn from_records(
        classifier_name: impl Into<String>,
        training_group: impl Into<String>,
        records: &[PredictionRecord],
        groups: &[GroupSpec],
    ) -> Result<Self> {
        let counts = group_counts(records);
        let mut ids = Vec::with_capacity(groups.len());
        let mut acc = Vec::with_capacity(groups.len());
        for g in groups {
            let c = counts.get(&g.group_id).ok_or_else(|| {
                Error::structure(format!("no predictions for group {} ({})", g.group_id, g.name))
            })?;
            ids.push(g.group_id);
            acc.push(c.percent());
        }
        if let Some(extra) = counts.keys().find(|id| !ids.contains(id)) {
            return Err(Error::structure(format!("predictions for unlisted group {extra}")));
        }
        ClassifierRun::new(classifier_name, training_group, ids, AccuracyVector::new(acc)?)
    }

    pub fn accuracy_of(&self, group_id: u32) -> Option<f64> {
        self.group_ids
            .iter()
            .position(|&g| g == group_id)
            .map(|i| self.accuracy.values()[i])
    }

    /// This run's own (mean accuracy, CV), for use as a reference point.
    pub fn reference_point(&self) -> Result<ReferencePoint> {
        ReferencePoint::new(
            stats::mean_accuracy(&self.accuracy)?,
            stats::cv_of_classifier(&self.accuracy)?,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub classifier_name: String,
    pub training_group: String,
    pub mean_accu: f64,
    pub cv: f64,
    pub clean_accu: f64,
    pub min_accu: f64,
    pub max_accu: f64,
    pub quadrant: QuadrantLabel,
}

impl RobustnessSummary {
    /// `AlexNet(clean)`-style label.
    pub fn label(&self) -> String {
        format!("{}({})", self.classifier_name, self.training_group)
    }

    pub fn training_category(&self) -> Result<TrainingCategory> {
        TrainingCategory::of_group_name(&self.training_group)
    }

    pub fn reference_point(&self) -> Result<ReferencePoint> {
        ReferencePoint::new(self.mean_accu, self.cv)
    }

    fn validate(&self) -> Result<()> {
        let vals = [self.mean_accu, self.clean_accu, self.min_accu, self.max_accu];
        if vals.iter().any(|v| !(0.0..=100.0).contains(v)) || !(self.cv >= 0.0 && self.cv.is_finite()) {
            return Err(Error::domain(format!("{}: values out of range", self.label())));
        }
        if !(self.min_accu <= self.mean_accu && self.mean_accu <= self.max_accu) {
            return Err(Error::domain(format!(
                "{}: expected min <= mean <= max, got {} / {} / {}",
                self.label(),
                self.min_accu,
                self.mean_accu,
                self.max_accu
            )));
        }
        Ok(())
    }
}

pub fn summarize(run: &ClassifierRun, reference: &ReferencePoint) -> Result<RobustnessSummary> {
    let clean_accu = run.accuracy_of(CLEAN_GROUP_ID).ok_or_else(|| {
        Error::structure(format!(
            "{}({}) has no accuracy for the clean group",
            run.classifier_name, run.training_group
        ))
    })?;
    let mean_accu = stats::mean_accuracy(&run.accuracy)?;
    let cv = stats::cv_of_classifier(&run.accuracy)?;
    Ok(RobustnessSummary {
        classifier_name: run.classifier_name.clone(),
        training_group: run.training_group.clone(),
        mean_accu,
        cv,
        clean_accu,
        min_accu: run.accuracy.min(),
        max_accu: run.accuracy.max(),
        quadrant: stats::identify_group(mean_accu, cv, reference),
    })
}

/// Summarises runs, using each classifier's clean-trained run as its reference.
pub fn summarize_against_clean(runs: &[ClassifierRun]) -> Result<Vec<RobustnessSummary>> {
    let mut refs: BTreeMap<&str, ReferencePoint> = BTreeMap::new();
    for r in runs.iter().filter(|r| r.training_category == TrainingCategory::Clean) {
        refs.insert(&r.classifier_name, r.reference_point()?);
    }
    runs.iter()
        .map(|r| {
            let reference = refs.get(r.classifier_name.as_str()).ok_or_else(|| {
                Error::structure(format!("no clean-trained run for {}", r.classifier_name))
            })?;
            summarize(r, reference)
        })
        .collect()
}

/// Recomputes each summary's quadrant against its classifier's clean row.
pub fn assign_quadrants(summaries: &mut [RobustnessSummary]) -> Result<()> {
    let mut refs: BTreeMap<String, ReferencePoint> = BTreeMap::new();
    for s in summaries.iter() {
        if s.training_category()? == TrainingCategory::Clean {
            refs.insert(s.classifier_name.clone(), s.reference_point()?);
        }
    }
    for s in summaries.iter_mut() {
        let r = refs
            .get(&s.classifier_name)
            .ok_or_else(|| Error::structure(format!("no clean-trained row for {}", s.classifier_name)))?;
        s.quadrant = stats::identify_group(s.mean_accu, s.cv, r);
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TableRow {
    classifier: String,
    training_group: String,
    cv: f64,
    mean_accu: f64,
    clean_accu: f64,
    min_accu: f64,
    max_accu: f64,
}

/// Reads a flat summary table
/// (`classifier,training_group,cv,mean_accu,clean_accu,min_accu,max_accu`)
/// and assigns quadrants against each classifier's clean row.
pub fn parse_summary_table<R: Read>(reader: R) -> Result<Vec<RobustnessSummary>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<TableRow>() {
        let r = row?;
        let s = RobustnessSummary {
            classifier_name: r.classifier,
            training_group: r.training_group,
            mean_accu: r.mean_accu,
            cv: r.cv,
            clean_accu: r.clean_accu,
            min_accu: r.min_accu,
            max_accu: r.max_accu,
            quadrant: QuadrantLabel::GroupI,
        };
        s.validate()?;
        out.push(s);
    }
    assign_quadrants(&mut out)?;
    Ok(out)
}

/// Writes summaries in the flat table layout read by [`parse_summary_table`],
/// plus a trailing `quadrant` column that the reader ignores.
pub fn write_summary_table<W: Write>(writer: W, summaries: &[RobustnessSummary]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["classifier", "training_group", "cv", "mean_accu", "clean_accu", "min_accu", "max_accu", "quadrant"])?;
    for s in summaries {
        w.write_record([
            s.classifier_name.clone(),
            s.training_group.clone(),
            s.cv.to_string(),
            s.mean_accu.to_string(),
            s.clean_accu.to_string(),
            s.min_accu.to_string(),
            s.max_accu.to_string(),
            s.quadrant.roman().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary table>", e))?;
    Ok(())
}

pub fn load_summary_table(path: impl AsRef<Path>) -> Result<Vec<RobustnessSummary>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_summary_table(file)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub runs: usize,
    pub mean_cv: f64,
    pub mean_mean_accu: f64,
    pub mean_min_accu: f64,
    pub mean_max_accu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateAnalysis {
    /// Only categories with at least one run appear.
    pub categories: BTreeMap<TrainingCategory, CategoryStats>,
    /// `100 * (cv_single - cv_two) / cv_two`, when both categories are present.
    pub relative_cv_reduction: Option<f64>,
    /// `100 * (min_two - min_single) / min_two`, when both categories are present.
    pub relative_min_accu_change: Option<f64>,
}

impl AggregateAnalysis {
    pub fn category(&self, c: TrainingCategory) -> Result<&CategoryStats> {
        self.categories
            .get(&c)
            .ok_or_else(|| Error::domain(format!("no runs in category {c}")))
    }
}

/// Unweighted per-category means over the supplied summaries.
pub fn aggregate(summaries: &[RobustnessSummary]) -> Result<AggregateAnalysis> {
    if summaries.is_empty() {
        return Err(Error::domain("aggregate of zero runs"));
    }
    let mut buckets: BTreeMap<TrainingCategory, Vec<&RobustnessSummary>> = BTreeMap::new();
    for s in summaries {
        buckets.entry(s.training_category()?).or_default().push(s);
    }
    let mut categories = BTreeMap::new();
    for (c, rows) in buckets {
        let col = |f: fn(&RobustnessSummary) -> f64| -> Result<f64> {
            stats::mean(&rows.iter().map(|s| f(s)).collect::<Vec<_>>())
        };
        categories.insert(
            c,
            CategoryStats {
                runs: rows.len(),
                mean_cv: col(|s| s.cv)?,
                mean_mean_accu: col(|s| s.mean_accu)?,
                mean_min_accu: col(|s| s.min_accu)?,
                mean_max_accu: col(|s| s.max_accu)?,
            },
        );
    }
    let single = categories.get(&TrainingCategory::SingleFactor);
    let two = categories.get(&TrainingCategory::TwoFactor);
    let (relative_cv_reduction, relative_min_accu_change) = match (single, two) {
        (Some(s), Some(t)) => (
            (t.mean_cv != 0.0).then(|| 100.0 * (s.mean_cv - t.mean_cv) / t.mean_cv),
            Some(100.0 * (t.mean_min_accu - s.mean_min_accu) / t.mean_min_accu),
        ),
        _ => (None, None),
    };
    Ok(AggregateAnalysis {
        categories,
        relative_cv_reduction,
        relative_min_accu_change,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// Column pair, e.g. `cv&mean_accu`.
    pub pair: String,
    pub spearman: f64,
    pub pearson: f64,
}

/// Spearman and Pearson coefficients for the (CV, mean), (CV, clean) and
/// (mean, clean) column pairs.
pub fn correlation_table(summaries: &[RobustnessSummary]) -> Result<Vec<CorrelationRow>> {
    let cv: Vec<f64> = summaries.iter().map(|s| s.cv).collect();
    let mean: Vec<f64> = summaries.iter().map(|s| s.mean_accu).collect();
    let clean: Vec<f64> = summaries.iter().map(|s| s.clean_accu).collect();
    [("cv&mean_accu", &cv, &mean), ("cv&clean_accu", &cv, &clean), ("mean_accu&clean_accu", &mean, &clean)]
        .into_iter()
        .map(|(pair, x, y)| {
            Ok(CorrelationRow {
                pair: pair.to_string(),
                spearman: stats::spearman(x, y)?,
                pearson: stats::pearson(x, y)?,
            })
        })
        .collect()
}

/// The JSON document written by evaluation and analysis commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub spec_version: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
    pub summaries: Vec<RobustnessSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateAnalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlations: Option<Vec<CorrelationRow>>,
}

impl ReportDocument {
    pub fn new(summaries: Vec<RobustnessSummary>) -> Self {
        ReportDocument {
            spec_version: FORMAT_VERSION.to_string(),
            config: serde_json::Value::Null,
            summaries,
            aggregate: None,
            correlations: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ReportDocument = serde_json::from_str(&text)?;
        if doc.spec_version != FORMAT_VERSION {
            return Err(Error::Version {
                expected: FORMAT_VERSION.into(),
                found: doc.spec_version,
            });
        }
        for s in &doc.summaries {
            s.validate()?;
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = include_str!("../fixtures/published_runs.csv");

    #[test]
    fn summary_table_round_trips() {
        let rows = parse_summary_table(TABLE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_summary_table(&mut buf, &rows).unwrap();
        assert_eq!(parse_summary_table(buf.as_slice()).unwrap(), rows);
    }

    fn known() -> BTreeSet<u32> {
        (1..=69).collect()
    }

    fn csv_of(rows: &[(u32, u32, u32, u32)]) -> String {
        let mut s = String::from("group_id,image_index,true_label,predicted_label\n");
        for r in rows {
            s.push_str(&format!("{},{},{},{}\n", r.0, r.1, r.2, r.3));
        }
        s
    }

    #[test]
    fn all_correct_gives_full_accuracy() {
        let mut rows = Vec::new();
        for g in 1..=69 {
            for i in 0..20 {
                rows.push((g, i, i % 3, i % 3));
            }
        }
        let recs = parse_predictions(csv_of(&rows).as_bytes(), &known()).unwrap();
        let run = ClassifierRun::from_records("m", "clean", &recs, &enumerate_groups()).unwrap();
        assert_eq!(run.accuracy.len(), 69);
        assert!(run.accuracy.values().iter().all(|&a| a == 100.0));
    }

    #[test]
    fn half_correct_group() {
        let rows: Vec<_> = (0..20).map(|i| (4, i, 1, if i < 10 { 1 } else { 0 })).collect();
        let recs = parse_predictions(csv_of(&rows).as_bytes(), &known()).unwrap();
        assert_eq!(group_counts(&recs)[&4].percent(), 50.0);
    }

    #[test]
    fn ingestion_errors() {
        let dup = csv_of(&[(3, 7, 0, 0), (3, 7, 1, 1)]);
        let err = parse_predictions(dup.as_bytes(), &known()).unwrap_err().to_string();
        assert!(err.contains("group 3") && err.contains("index 7"), "{err}");
        assert!(parse_predictions(csv_of(&[(70, 0, 0, 0)]).as_bytes(), &known()).is_err());
        let malformed = "group_id,image_index,true_label,predicted_label\n1,2,x,3\n";
        assert!(parse_predictions(malformed.as_bytes(), &known()).is_err());
        let short = "group_id,image_index,true_label,predicted_label\n1,2,3\n";
        assert!(parse_predictions(short.as_bytes(), &known()).is_err());
        let bad_header = "group,image_index,true_label,predicted_label\n1,2,3,3\n";
        assert!(parse_predictions(bad_header.as_bytes(), &known()).is_err());
    }

    #[test]
    fn row_order_is_irrelevant() {
        let rows = vec![(1, 0, 1, 1), (2, 0, 0, 1), (1, 1, 0, 0), (2, 1, 1, 1)];
        let mut rev = rows.clone();
        rev.reverse();
        let a = group_counts(&parse_predictions(csv_of(&rows).as_bytes(), &known()).unwrap());
        let b = group_counts(&parse_predictions(csv_of(&rev).as_bytes(), &known()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn written_predictions_parse_back() {
        let recs = vec![
            PredictionRecord { group_id: 2, image_index: 0, true_label: 1, predicted_label: 0 },
            PredictionRecord { group_id: 1, image_index: 5, true_label: 2, predicted_label: 2 },
        ];
        let mut buf = Vec::new();
        write_predictions(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("group_id,image_index,true_label,predicted_label\n"));
        assert!(!text.contains('\r'));
        assert_eq!(parse_predictions(buf.as_slice(), &known()).unwrap(), recs);
    }

    #[test]
    fn training_categories() {
        assert_eq!(TrainingCategory::of_group_name("clean").unwrap(), TrainingCategory::Clean);
        assert_eq!(TrainingCategory::of_group_name("RL30").unwrap(), TrainingCategory::SingleFactor);
        assert_eq!(TrainingCategory::of_group_name("SP0.1RR30").unwrap(), TrainingCategory::TwoFactor);
        assert!(TrainingCategory::of_group_name("SP0.1GA0.1RR30").is_err());
    }

    fn run_from(values: Vec<f64>, tg: &str) -> ClassifierRun {
        let ids = (1..=values.len() as u32).collect();
        ClassifierRun::new("m", tg, ids, AccuracyVector::new(values).unwrap()).unwrap()
    }

    #[test]
    fn constant_vector_summary() {
        let run = run_from(vec![90.0; 69], "clean");
        let s = summarize(&run, &run.reference_point().unwrap()).unwrap();
        assert_eq!((s.mean_accu, s.cv, s.min_accu, s.max_accu, s.clean_accu), (90.0, 0.0, 90.0, 90.0, 90.0));
        assert_eq!(s.quadrant, QuadrantLabel::GroupI);
    }

    #[test]
    fn two_level_vector_hits_target_moments() {
        // 69 entries: a at k positions, b at the rest, solved for mean 85.25
        // and population CV 2.28%.
        let n = 69.0f64;
        let (mu, sigma) = (85.25, 0.0228 * 85.25);
        let k = 34.0;
        let a = mu + sigma * ((n - k) / k).sqrt();
        let b = mu - sigma * (k / (n - k)).sqrt();
        let v: Vec<f64> = (0..69).map(|i| if i < 34 { a } else { b }).collect();
        let run = run_from(v, "clean");
        let s = summarize(&run, &run.reference_point().unwrap()).unwrap();
        assert!((s.mean_accu - 85.25).abs() < 0.01);
        assert!((s.cv - 2.28).abs() < 0.01);
        assert!((s.clean_accu - a).abs() < 1e-12);
    }

    #[test]
    fn clean_accuracy_is_keyed_by_group_id() {
        let mut v = vec![80.0; 69];
        v[0] = 92.08;
        let mut ids: Vec<u32> = (1..=69).collect();
        // move the clean entry to the end of the vector
        v.rotate_left(1);
        ids.rotate_left(1);
        let run = ClassifierRun::new("m", "SP0.1", ids, AccuracyVector::new(v).unwrap()).unwrap();
        let s = summarize(&run, &ReferencePoint::new(80.0, 1.0).unwrap()).unwrap();
        assert_eq!(s.clean_accu, 92.08);
    }

    #[test]
    fn missing_clean_group_is_structural() {
        let run = ClassifierRun::new("m", "clean", vec![2, 3], AccuracyVector::new(vec![50.0, 60.0]).unwrap()).unwrap();
        assert!(matches!(
            summarize(&run, &ReferencePoint::new(50.0, 1.0).unwrap()),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn table_fixture_parses_with_quadrants() {
        let rows = parse_summary_table(TABLE.as_bytes()).unwrap();
        assert_eq!(rows.len(), 27);
        let find = |l: &str| rows.iter().find(|s| s.label() == l).unwrap().quadrant;
        assert_eq!(find("AlexNet(SP0.1RL30)"), QuadrantLabel::GroupI);
        assert_eq!(find("AlexNet(RL30)"), QuadrantLabel::GroupII);
        assert_eq!(find("AlexNet(clean)"), QuadrantLabel::GroupI);
    }

    #[test]
    fn single_run_aggregate_echoes_the_run() {
        let rows = parse_summary_table(TABLE.as_bytes()).unwrap();
        let one = vec![rows[3].clone()];
        let agg = aggregate(&one).unwrap();
        let c = agg.category(TrainingCategory::SingleFactor).unwrap();
        assert_eq!((c.runs, c.mean_cv, c.mean_mean_accu), (1, rows[3].cv, rows[3].mean_accu));
        assert_eq!((c.mean_min_accu, c.mean_max_accu), (rows[3].min_accu, rows[3].max_accu));
        assert!(matches!(agg.category(TrainingCategory::Clean), Err(Error::Domain(_))));
        assert!(agg.relative_cv_reduction.is_none());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn report_version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let mut doc = ReportDocument::new(vec![]);
        doc.spec_version = "other/9".into();
        doc.save(&p).unwrap();
        assert!(matches!(ReportDocument::load(&p), Err(Error::Version { .. })));
    }
}
