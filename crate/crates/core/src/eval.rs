//! Benchmark scoring: F1 over prediction sets, and per-model learning curves
//! summarised by their maximum F1 and the area under the F1-vs-epochs curve.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub gold: BTreeSet<String>,
    pub predicted: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Micro,
    Macro,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(Error::InvalidConfig(format!("unknown averaging `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Confusion {
    tp: u64,
    fp: u64,
    fn_: u64,
}

impl Confusion {
    /// `2TP / (2TP + FP + FN)`; the 0/0 case is 0.
    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// F1 over `preds`. With `universe = None` the label universe is every label
/// seen in gold or predicted sets.
pub fn f1_scores(
    preds: &[PredictionRecord],
    universe: Option<&BTreeSet<String>>,
    averaging: Averaging,
) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let labels: BTreeSet<String> = match universe {
        Some(u) => {
            for rec in preds {
                if let Some(bad) = rec.gold.iter().chain(&rec.predicted).find(|l| !u.contains(*l)) {
                    return Err(Error::UnknownLabel(bad.clone()));
                }
            }
            u.clone()
        }
        None => preds
            .iter()
            .flat_map(|r| r.gold.iter().chain(&r.predicted).cloned())
            .collect(),
    };
    let mut per_label: BTreeMap<&str, Confusion> =
        labels.iter().map(|l| (l.as_str(), Confusion::default())).collect();
    for rec in preds {
        for label in rec.gold.union(&rec.predicted) {
            let c = per_label.get_mut(label.as_str()).expect("label in universe");
            match (rec.gold.contains(label), rec.predicted.contains(label)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    Ok(match averaging {
        Averaging::Micro => {
            let pooled = per_label.values().fold(Confusion::default(), |acc, c| Confusion {
                tp: acc.tp + c.tp,
                fp: acc.fp + c.fp,
                fn_: acc.fn_ + c.fn_,
            });
            pooled.f1()
        }
        Averaging::Macro => {
            if per_label.is_empty() {
                0.0
            } else {
                per_label.values().map(Confusion::f1).sum::<f64>() / per_label.len() as f64
            }
        }
    })
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>> {
    crate::io::read_jsonl(reader)
}

/// F1 measured at successive (possibly fractional) fine-tuning epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub model_name: String,
    pub points: Vec<(f64, f64)>,
}

impl LearningCurve {
    pub fn new(model_name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let curve = LearningCurve {
            model_name: model_name.into(),
            points,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidCurve(format!("{}: {msg}", self.model_name)));
        if self.points.is_empty() {
            return fail("no points".into());
        }
        for &(epoch, f1) in &self.points {
            if !epoch.is_finite() || epoch < 0.0 {
                return fail(format!("epoch {epoch} is not a non-negative number"));
            }
            if !(0.0..=1.0).contains(&f1) {
                return fail(format!("f1 {f1} is outside [0, 1]"));
            }
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return fail("epochs must be strictly increasing".into());
        }
        Ok(())
    }
}

pub fn max_f1(curve: &LearningCurve) -> f64 {
    curve
        .points
        .iter()
        .map(|&(_, f1)| f1)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Trapezoidal area under F1 between the first and last recorded epoch.
pub fn curve_auc(curve: &LearningCurve) -> Result<f64> {
    if curve.points.len() < 2 {
        return Err(Error::InsufficientPoints {
            model: curve.model_name.clone(),
            points: curve.points.len(),
        });
    }
    Ok(curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum())
}

/// Reads `model,epoch,f1` rows (with header) into curves, in order of first
/// appearance of each model.
pub fn read_curves_csv<R: Read>(reader: R) -> Result<Vec<LearningCurve>> {
    #[derive(Deserialize)]
    struct Row {
        model: String,
        epoch: f64,
        f1: f64,
    }
    let mut order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let entry = points.entry(row.model.clone()).or_insert_with(|| {
            order.push(row.model.clone());
            Vec::new()
        });
        entry.push((row.epoch, row.f1));
    }
    order
        .into_iter()
        .map(|model| {
            let mut pts = points.remove(&model).unwrap_or_default();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            LearningCurve::new(model, pts)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_name: String,
    pub max_f1: f64,
    pub auc: f64,
    /// Epoch range the area was integrated over.
    pub auc_from_epoch: f64,
    pub auc_to_epoch: f64,
    pub best_max_f1: bool,
    pub best_auc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    MaxF1,
    Auc,
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_f1" => Ok(SortKey::MaxF1),
            "auc" => Ok(SortKey::Auc),
            other => Err(Error::InvalidConfig(format!("unknown sort key `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset_name: String,
    pub rows: Vec<ReportRow>,
}

/// Scores each curve and flags the best value per column. Ties share the flag.
pub fn build_report(curves: &[LearningCurve], dataset_name: &str) -> Result<BenchmarkReport> {
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(curves.len());
    for curve in curves {
        if !seen.insert(curve.model_name.as_str()) {
            return Err(Error::DuplicateModelName(curve.model_name.clone()));
        }
        curve.validate()?;
        rows.push(ReportRow {
            model_name: curve.model_name.clone(),
            max_f1: max_f1(curve),
            auc: curve_auc(curve)?,
            auc_from_epoch: curve.points[0].0,
            auc_to_epoch: curve.points[curve.points.len() - 1].0,
            best_max_f1: false,
            best_auc: false,
        });
    }
    Ok(BenchmarkReport::from_rows(dataset_name, rows))
}

impl BenchmarkReport {
    /// Builds a report from already computed scores, recomputing best flags.
    pub fn from_rows(dataset_name: &str, mut rows: Vec<ReportRow>) -> Self {
        let best_f1 = rows.iter().map(|r| r.max_f1).fold(f64::NEG_INFINITY, f64::max);
        let best_auc = rows.iter().map(|r| r.auc).fold(f64::NEG_INFINITY, f64::max);
        for row in &mut rows {
            row.best_max_f1 = row.max_f1 == best_f1;
            row.best_auc = row.auc == best_auc;
        }
        BenchmarkReport {
            dataset_name: dataset_name.to_string(),
            rows,
        }
    }

    /// Sorts rows best first; ties keep their order.
    pub fn sort_by(&mut self, key: SortKey) {
        self.rows.sort_by(|a, b| match key {
            SortKey::MaxF1 => b.max_f1.total_cmp(&a.max_f1),
            SortKey::Auc => b.auc.total_cmp(&a.auc),
        });
    }

    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model_name == model)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "dataset",
            "model",
            "max_f1",
            "auc",
            "auc_from_epoch",
            "auc_to_epoch",
            "best_max_f1",
            "best_auc",
        ])?;
        for r in &self.rows {
            w.write_record([
                self.dataset_name.clone(),
                r.model_name.clone(),
                format!("{:.4}", r.max_f1),
                format!("{:.4}", r.auc),
                r.auc_from_epoch.to_string(),
                r.auc_to_epoch.to_string(),
                r.best_max_f1.to_string(),
                r.best_auc.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Aligned plain-text table; best values carry a trailing `*`.
impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |v: f64, best: bool| format!("{v:.4}{}", if best { "*" } else { " " });
        let name_w = self
            .rows
            .iter()
            .map(|r| r.model_name.chars().count())
            .chain(std::iter::once(5))
            .max()
            .unwrap_or(5);
        writeln!(f, "{}", self.dataset_name)?;
        writeln!(f, "{:<name_w$}  {:>8}  {:>17}", "Model", "Max F1", "Epochs vs F1 AUC")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<name_w$}  {:>8}  {:>17}",
                r.model_name,
                mark(r.max_f1, r.best_max_f1),
                mark(r.auc, r.best_auc)
            )?;
        }
        Ok(())
    }
}
