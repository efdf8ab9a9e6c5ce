//! Finite point sets standing in for compact spaces.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A finite space: ordered labelled points, optional named subsets and an
/// optional metric used only for diagnostics.
///
/// Invariants: labels are unique; subsets reference existing points; when
/// present, the metric is symmetric with zero diagonal and nonnegative entries.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    subsets: BTreeMap<String, Vec<usize>>,
    metric: Option<Vec<Vec<f64>>>,
}

impl PartialEq for FiniteSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("points", "a space needs at least one point"));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::invalid(
                    format!("points[{i}]"),
                    format!("duplicate label '{l}'"),
                ));
            }
        }
        Ok(FiniteSpace {
            labels,
            index,
            subsets: BTreeMap::new(),
            metric: None,
        })
    }

    /// Points labelled `{prefix}0 .. {prefix}{n-1}`.
    pub fn indexed(prefix: &str, n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("{prefix}{i}")))
    }

    pub fn with_subset(mut self, name: impl Into<String>, points: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if let Some(&bad) = points.iter().find(|&&p| p >= self.len()) {
            return Err(Error::invalid(
                format!("subsets.{name}"),
                format!("point index {bad} out of range"),
            ));
        }
        let mut points = points;
        points.sort_unstable();
        points.dedup();
        self.subsets.insert(name, points);
        Ok(self)
    }

    pub fn with_metric(mut self, metric: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.len();
        if metric.len() != n || metric.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("metric", "metric must be an n x n matrix"));
        }
        for i in 0..n {
            if metric[i][i] != 0.0 {
                return Err(Error::invalid(format!("metric[{i}][{i}]"), "diagonal must be zero"));
            }
            for j in 0..n {
                let d = metric[i][j];
                if !(d >= 0.0) || (d - metric[j][i]).abs() > 1e-12 {
                    return Err(Error::invalid(
                        format!("metric[{i}][{j}]"),
                        "metric must be symmetric and nonnegative",
                    ));
                }
            }
        }
        self.metric = Some(metric);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Index lookup that reports the JSON-style `path` on failure.
    pub fn require(&self, label: &str, path: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownLabel {
            path: path.to_string(),
            label: label.to_string(),
        })
    }

    pub fn subset(&self, name: &str) -> Option<&[usize]> {
        self.subsets.get(name).map(Vec::as_slice)
    }

    pub fn subsets(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.subsets
    }

    pub fn metric(&self) -> Option<&Vec<Vec<f64>>> {
        self.metric.as_ref()
    }

    pub fn into_shared(self) -> Arc<FiniteSpace> {
        Arc::new(self)
    }
}

/// Spaces are compared by their ordered labels; shared handles short-circuit.
pub fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.labels == b.labels
}

pub(crate) fn ensure_same(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>, context: &str) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch {
            context: context.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_are_rejected() {
        assert!(FiniteSpace::new(["a", "b", "a"]).is_err());
    }

    #[test]
    fn subsets_are_sorted_and_checked() {
        let s = FiniteSpace::new(["a", "b", "c"]).unwrap();
        let s = s.with_subset("D", vec![2, 0, 2]).unwrap();
        assert_eq!(s.subset("D").unwrap(), &[0, 2]);
        assert!(s.clone().with_subset("E", vec![3]).is_err());
    }

    #[test]
    fn metric_must_be_symmetric() {
        let s = FiniteSpace::new(["a", "b"]).unwrap();
        assert!(s.clone().with_metric(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(s.with_metric(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn unknown_label_reports_path() {
        let s = FiniteSpace::new(["a"]).unwrap();
        let err = s.require("z", "edges[0][1]").unwrap_err();
        assert_eq!(
            err,
            Error::UnknownLabel {
                path: "edges[0][1]".into(),
                label: "z".into()
            }
        );
    }
}
