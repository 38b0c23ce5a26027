//! Agreement between metric scores and pairwise human preferences.
//!
//! Human judgements arrive as a matrix whose entry `(i, j)` is the fraction of
//! raters preferring item `i` over item `j`. The priority vector is the row
//! average of the column-normalized matrix; inverting and renormalizing it
//! puts it on the metric scale (lower is better), where it is compared to the
//! L1-normalized metric scores by cosine similarity.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};

/// Pairwise preference fractions with item labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub labels: Vec<String>,
    /// Row-major `k × k`, entries in `[0, 1]`, zero diagonal.
    pub matrix: Vec<Vec<f64>>,
}

impl PairwiseMatrix {
    /// Validates and, when any entry exceeds 1, rescales percentages to
    /// fractions.
    pub fn new(labels: Vec<String>, mut matrix: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if k < 2 {
            return Err(invalid("pairwise matrix needs at least two items"));
        }
        check_dims(k, matrix.len())?;
        for row in &matrix {
            check_dims(k, row.len())?;
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("pairwise entries must be finite"));
        }
        let max = matrix.iter().flatten().fold(0.0f64, |a, &v| a.max(v));
        if max > 1.0 {
            matrix.iter_mut().flatten().for_each(|v| *v /= 100.0);
        }
        for (i, row) in matrix.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(invalid(format!(
                    "diagonal entry for '{}' must be 0, got {}",
                    labels[i], row[i]
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid(format!(
                    "pairwise entries must lie in [0, 1] (or [0, 100] as percentages), got {v}"
                )));
            }
        }
        Ok(Self { labels, matrix })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PairwiseMatrix = serde_json::from_str(text)?;
        Self::new(raw.labels, raw.matrix)
    }

    /// CSV with a header row of labels (first cell ignored) and one labelled
    /// row per item.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut matrix = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let name = rec.get(0).unwrap_or_default();
            if labels.get(i).map(String::as_str) != Some(name) {
                return Err(Error::Format(format!(
                    "row {i} is labelled '{name}' but column {i} is '{}'",
                    labels.get(i).map_or("", String::as_str)
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|c| {
                    c.trim_end_matches('%')
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad entry '{c}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
        }
        Self::new(labels, matrix)
    }

    /// Reads JSON or CSV depending on the file extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::IoAt {
            path: path.to_path_buf(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::from_csv(&text),
            _ => Self::from_json(&text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityVector {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

/// Column-normalizes the matrix and averages each row.
pub fn priority_vector(m: &PairwiseMatrix) -> Result<PriorityVector> {
    let k = m.len();
    let mut values = vec![0.0; k];
    for j in 0..k {
        let col: f64 = (0..k).map(|i| m.matrix[i][j]).sum();
        if !(col > 0.0) {
            return Err(invalid(format!(
                "column '{}' sums to zero: no rater preferred anything over it",
                m.labels[j]
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            *v += m.matrix[i][j] / col;
        }
    }
    values.iter_mut().for_each(|v| *v /= k as f64);
    Ok(PriorityVector {
        labels: m.labels.clone(),
        values,
    })
}

/// `wᵢ = (1/vᵢ) / Σⱼ (1/vⱼ)`.
pub fn invert_renormalize(v: &PriorityVector) -> Result<PriorityVector> {
    if let Some(i) = v.values.iter().position(|&x| !(x > 0.0)) {
        return Err(invalid(format!(
            "cannot invert priority for '{}': value is {}",
            v.labels[i], v.values[i]
        )));
    }
    let inv: Vec<f64> = v.values.iter().map(|x| 1.0 / x).collect();
    let total: f64 = inv.iter().sum();
    Ok(PriorityVector {
        labels: v.labels.clone(),
        values: inv.into_iter().map(|x| x / total).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignReport {
    pub labels: Vec<String>,
    pub priority: Vec<f64>,
    pub inverted: Vec<f64>,
    /// Metric values in label order, L1-normalized.
    pub metric: Vec<f64>,
    pub score: f64,
}

/// Cosine similarity between the L1-normalized metric values and the
/// inverted human priority vector.
pub fn align_score(human: &PairwiseMatrix, metric_values: &BTreeMap<String, f64>) -> Result<f64> {
    Ok(align_report(human, metric_values)?.score)
}

pub fn align_report(
    human: &PairwiseMatrix,
    metric_values: &BTreeMap<String, f64>,
) -> Result<AlignReport> {
    let missing: Vec<&str> = human
        .labels
        .iter()
        .filter(|l| !metric_values.contains_key(*l))
        .map(String::as_str)
        .collect();
    let extra: Vec<&str> = metric_values
        .keys()
        .filter(|l| !human.labels.contains(l))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(invalid(format!(
            "metric labels do not match the pairwise matrix (missing: {missing:?}, unexpected: {extra:?})"
        )));
    }
    let raw: Vec<f64> = human.labels.iter().map(|l| metric_values[l]).collect();
    if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("metric values must be finite and non-negative"));
    }
    let l1: f64 = raw.iter().sum();
    if l1 == 0.0 {
        return Err(invalid("metric values are all zero"));
    }
    let metric: Vec<f64> = raw.iter().map(|v| v / l1).collect();
    let pv = priority_vector(human)?;
    let inv = invert_renormalize(&pv)?;
    let dot: f64 = metric.iter().zip(&inv.values).map(|(a, b)| a * b).sum();
    let na = metric.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = inv.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(AlignReport {
        labels: human.labels.clone(),
        priority: pv.values,
        inverted: inv.values,
        metric,
        score: (dot / (na * nb)).clamp(-1.0, 1.0),
    })
}
