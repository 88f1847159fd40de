//! One-vs-rest confusion counts, the six per-class metrics and report rendering.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::{CarcinomaClass, MultifractalSample};
use crate::network::{predict_batch, Model};

/// Confusion counts for one target class against the other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(
    predictions: &[CarcinomaClass],
    truths: &[CarcinomaClass],
    target: CarcinomaClass,
) -> Result<ConfusionCounts> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p == target, t == target) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// [`confusion`] over raw numeric labels, rejecting anything outside {1,2,3}.
pub fn confusion_from_labels(predictions: &[u8], truths: &[u8], target: u8) -> Result<ConfusionCounts> {
    let convert = |labels: &[u8], what: &str| -> Result<Vec<CarcinomaClass>> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                CarcinomaClass::from_label(l)
                    .ok_or_else(|| Error::InvalidInput(format!("{what}[{i}] = {l} is not a class label")))
            })
            .collect()
    };
    let target = CarcinomaClass::from_label(target)
        .ok_or_else(|| Error::InvalidInput(format!("target {target} is not a class label")))?;
    confusion(&convert(predictions, "predictions")?, &convert(truths, "truths")?, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Accuracy,
    Sensitivity,
    Specificity,
    GMean,
    Precision,
    FMeasure,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Accuracy,
        MetricKind::Sensitivity,
        MetricKind::Specificity,
        MetricKind::GMean,
        MetricKind::Precision,
        MetricKind::FMeasure,
    ];

    /// Key used in the structured report.
    pub fn key(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Sensitivity => "sensitivity",
            MetricKind::Specificity => "specificity",
            MetricKind::GMean => "gmean",
            MetricKind::Precision => "precision",
            MetricKind::FMeasure => "f_measure",
        }
    }

    /// Row label used in the text report.
    pub fn title(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "Accuracy",
            MetricKind::Sensitivity => "Sensitivity",
            MetricKind::Specificity => "Specificity",
            MetricKind::GMean => "Geometric mean sensitivity and specificity",
            MetricKind::Precision => "Precision",
            MetricKind::FMeasure => "F-Measure",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// The six per-class metrics. A metric whose denominator is zero is stored
/// as 0 and flagged undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub gmean: f64,
    pub precision: f64,
    pub f_measure: f64,
    undefined: u8,
}

impl ClassMetrics {
    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::Sensitivity => self.sensitivity,
            MetricKind::Specificity => self.specificity,
            MetricKind::GMean => self.gmean,
            MetricKind::Precision => self.precision,
            MetricKind::FMeasure => self.f_measure,
        }
    }

    pub fn is_defined(&self, kind: MetricKind) -> bool {
        self.undefined & kind.bit() == 0
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, sensitivity, specificity, their geometric mean, precision and
/// F-measure `2tp / (2tp + fp + fn)`.
pub fn metrics(counts: &ConfusionCounts) -> ClassMetrics {
    let ConfusionCounts { tp, fp, fn_, tn } = *counts;
    let accuracy = ratio(tp + tn, counts.total());
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let gmean = sensitivity.zip(specificity).map(|(a, b)| (a * b).sqrt());
    let precision = ratio(tp, tp + fp);
    let f_measure = ratio(2 * tp, 2 * tp + fp + fn_);

    let mut undefined = 0;
    let mut take = |kind: MetricKind, v: Option<f64>| {
        v.unwrap_or_else(|| {
            undefined |= kind.bit();
            0.0
        })
    };
    let accuracy = take(MetricKind::Accuracy, accuracy);
    let sensitivity = take(MetricKind::Sensitivity, sensitivity);
    let specificity = take(MetricKind::Specificity, specificity);
    let gmean = take(MetricKind::GMean, gmean);
    let precision = take(MetricKind::Precision, precision);
    let f_measure = take(MetricKind::FMeasure, f_measure);
    ClassMetrics {
        accuracy,
        sensitivity,
        specificity,
        gmean,
        precision,
        f_measure,
        undefined,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEvaluation {
    pub class: CarcinomaClass,
    pub counts: ConfusionCounts,
    pub metrics: ClassMetrics,
}

/// Per-class results in breast, lung, renal order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub classes: Vec<ClassEvaluation>,
    pub samples: usize,
    pub correct: usize,
}

impl EvaluationReport {
    pub fn from_predictions(predictions: &[CarcinomaClass], truths: &[CarcinomaClass]) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::InsufficientData("nothing to evaluate".into()));
        }
        let classes = CarcinomaClass::ALL
            .iter()
            .map(|&class| {
                let counts = confusion(predictions, truths, class)?;
                Ok(ClassEvaluation {
                    class,
                    counts,
                    metrics: metrics(&counts),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
        Ok(Self {
            classes,
            samples: predictions.len(),
            correct,
        })
    }

    /// Fraction of samples whose predicted class equals the true class.
    pub fn overall_accuracy(&self) -> f64 {
        self.correct as f64 / self.samples as f64
    }

    pub fn class(&self, class: CarcinomaClass) -> &ClassEvaluation {
        &self.classes[class.index()]
    }

    /// Human-readable tables, one per class.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for ce in &self.classes {
            let mut name = ce.class.name().to_string();
            name[..1].make_ascii_uppercase();
            let _ = writeln!(out, "{name} cancer");
            for kind in MetricKind::ALL {
                let v = ce.metrics.get(kind);
                let value = if kind == MetricKind::FMeasure {
                    format!("{v:.4}")
                } else {
                    format!("{:.2}%", v * 100.0)
                };
                let flag = if ce.metrics.is_defined(kind) { "" } else { " (undefined)" };
                let _ = writeln!(out, "  {:<44}{value}{flag}", kind.title());
            }
            let c = ce.counts;
            let _ = writeln!(out, "  tp={} fp={} fn={} tn={}", c.tp, c.fp, c.fn_, c.tn);
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "Overall accuracy {:.2}% ({}/{})",
            self.overall_accuracy() * 100.0,
            self.correct,
            self.samples
        );
        out
    }

    /// Flat `key = value` lines, e.g. `class.1.precision = 0.5`.
    pub fn render_structured(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "correct = {}", self.correct);
        let _ = writeln!(out, "overall_accuracy = {}", self.overall_accuracy());
        for ce in &self.classes {
            let k = ce.class.label();
            let c = ce.counts;
            for (name, v) in [("tp", c.tp), ("fp", c.fp), ("fn", c.fn_), ("tn", c.tn)] {
                let _ = writeln!(out, "class.{k}.{name} = {v}");
            }
            for kind in MetricKind::ALL {
                let _ = writeln!(out, "class.{k}.{} = {}", kind.key(), ce.metrics.get(kind));
                if !ce.metrics.is_defined(kind) {
                    let _ = writeln!(out, "class.{k}.{}.undefined = true", kind.key());
                }
            }
        }
        out
    }
}

/// Predicts every labelled sample and scores the predictions per class.
pub fn evaluate(model: &Model, samples: &[MultifractalSample]) -> Result<EvaluationReport> {
    evaluate_with(model, samples, Execution::default())
}

pub fn evaluate_with(
    model: &Model,
    samples: &[MultifractalSample],
    exec: Execution,
) -> Result<EvaluationReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("validation set is empty".into()));
    }
    let truths = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label
                .ok_or_else(|| Error::InvalidInput(format!("evaluation sample {i} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;
    let predictions: Vec<_> = predict_batch(model, samples, exec)?
        .into_iter()
        .map(|p| p.class)
        .collect();
    EvaluationReport::from_predictions(&predictions, &truths)
}
