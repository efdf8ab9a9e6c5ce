//! JSON documents for spaces, measures, submeasures, functions,
//! correspondences and signed families.
//!
//! Points are referenced by label. Weight and value maps default to 0 for
//! omitted labels. Structural errors carry the serde path of the offending
//! field; semantic errors carry a dotted path built while resolving labels.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::correspondence::{Correspondence, CorrespondenceData, Edge};
use crate::error::{Error, Result};
use crate::intersection::SignedFamily;
use crate::measure::{FunctionVector, SignedMeasure};
use crate::space::FiniteSpace;
use crate::submeasure::StrongSubmeasure;

/// Parses `text`, reporting the JSON path of the first structural error.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Converts an already parsed value, reporting paths as in [`from_json_str`].
pub fn from_json_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Json {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub points: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subsets: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SubmeasureDoc {
    pub generators: Vec<MeasureDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub values: BTreeMap<String, f64>,
}

/// `[x, y]` or `[x, y, multiplicity]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EdgeDoc {
    Plain(String, String),
    Weighted(String, String, u32),
}

/// Limit fibers at one target: either a list of `[x, w]` pairs, each its own
/// one-point fiber, or a list of fibers, each a list of `[x, w]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LimitFibersDoc {
    Pairs(Vec<(String, f64)>),
    Fibers(Vec<Vec<(String, f64)>>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceDoc {
    pub source: SpaceDoc,
    /// Omitted for self-correspondences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SpaceDoc>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indeterminacy: Option<Vec<String>>,
    #[serde(default = "one")]
    pub generic_degree: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub limit_fibers: BTreeMap<String, LimitFibersDoc>,
    #[serde(default = "yes")]
    pub equal_dimension: bool,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub space: SpaceDoc,
    pub members: Vec<MeasureDoc>,
    #[serde(default)]
    pub declared_limits: Vec<MeasureDoc>,
    pub intersection_number: f64,
}

impl SpaceDoc {
    pub fn build(&self) -> Result<Arc<FiniteSpace>> {
        let mut space = FiniteSpace::new(self.points.iter().cloned())?;
        for (name, labels) in &self.subsets {
            let pts = labels
                .iter()
                .enumerate()
                .map(|(i, l)| space.require(l, &format!("subsets.{name}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            space = space.with_subset(name.clone(), pts)?;
        }
        if let Some(m) = &self.metric {
            space = space.with_metric(m.clone())?;
        }
        Ok(space.into_shared())
    }

    pub fn from_space(space: &FiniteSpace) -> Self {
        SpaceDoc {
            points: space.labels().to_vec(),
            subsets: space
                .subsets()
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|&i| space.label(i).to_string()).collect()))
                .collect(),
            metric: space.metric().cloned(),
        }
    }
}

fn weights_on(space: &Arc<FiniteSpace>, map: &BTreeMap<String, f64>, path: &str) -> Result<Vec<f64>> {
    let mut w = vec![0.0; space.len()];
    for (label, &v) in map {
        let i = space.require(label, path)?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("{path}.{label}"), "value must be finite"));
        }
        w[i] = v;
    }
    Ok(w)
}

fn sparse(space: &FiniteSpace, values: &[f64]) -> BTreeMap<String, f64> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (space.label(i).to_string(), v))
        .collect()
}

impl MeasureDoc {
    pub fn build(&self, space: &Arc<FiniteSpace>, path: &str) -> Result<SignedMeasure> {
        SignedMeasure::new(space.clone(), weights_on(space, &self.weights, &format!("{path}.weights"))?)
    }

    pub fn from_measure(m: &SignedMeasure) -> Self {
        MeasureDoc {
            weights: sparse(m.space(), m.weights()),
        }
    }
}

impl SubmeasureDoc {
    pub fn build(&self, space: &Arc<FiniteSpace>, path: &str) -> Result<StrongSubmeasure> {
        if self.generators.is_empty() {
            return Err(Error::invalid(format!("{path}.generators"), "at least one generator is required"));
        }
        let gens = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| g.build(space, &format!("{path}.generators[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        StrongSubmeasure::from_generators(space.clone(), gens)
    }

    pub fn from_submeasure(mu: &StrongSubmeasure) -> Result<Self> {
        Ok(SubmeasureDoc {
            generators: mu.generators()?.iter().map(MeasureDoc::from_measure).collect(),
        })
    }
}

impl FunctionDoc {
    pub fn build(&self, space: &Arc<FiniteSpace>, path: &str) -> Result<FunctionVector> {
        FunctionVector::new(space.clone(), weights_on(space, &self.values, &format!("{path}.values"))?)
    }

    pub fn from_function(phi: &FunctionVector) -> Self {
        FunctionDoc {
            values: sparse(phi.space(), phi.values()),
        }
    }
}

impl CorrespondenceDoc {
    pub fn build(&self) -> Result<Correspondence> {
        let source = self.source.build()?;
        let target = match &self.target {
            Some(t) => t.build()?,
            None => source.clone(),
        };
        let mut data = CorrespondenceData::new(source.clone(), target.clone());
        data.generic_degree = self.generic_degree;
        data.equal_dimension = self.equal_dimension;
        for (k, e) in self.edges.iter().enumerate() {
            let (x, y, m) = match e {
                EdgeDoc::Plain(x, y) => (x, y, 1),
                EdgeDoc::Weighted(x, y, m) => (x, y, *m),
            };
            let path = format!("edges[{k}]");
            data.edges.push(Edge {
                source: source.require(x, &format!("{path}[0]"))?,
                target: target.require(y, &format!("{path}[1]"))?,
                multiplicity: m,
            });
        }
        if let Some(ind) = &self.indeterminacy {
            data.indeterminacy = Some(
                ind.iter()
                    .enumerate()
                    .map(|(i, l)| source.require(l, &format!("indeterminacy[{i}]")))
                    .collect::<Result<_>>()?,
            );
        }
        for (y, doc) in &self.limit_fibers {
            let path = format!("limit_fibers.{y}");
            let yi = target.require(y, &path)?;
            let resolve = |fib: &[(String, f64)], p: String| -> Result<Vec<(usize, f64)>> {
                fib.iter()
                    .enumerate()
                    .map(|(j, (x, w))| Ok((source.require(x, &format!("{p}[{j}]"))?, *w)))
                    .collect()
            };
            let fibers = match doc {
                LimitFibersDoc::Pairs(pairs) => pairs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| resolve(std::slice::from_ref(p), format!("{path}[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
                LimitFibersDoc::Fibers(fibs) => fibs
                    .iter()
                    .enumerate()
                    .map(|(i, f)| resolve(f, format!("{path}[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
            };
            data.limit_fibers.insert(yi, fibers);
        }
        Correspondence::new(data)
    }

    pub fn from_correspondence(f: &Correspondence) -> Self {
        let (src, tgt) = (f.source(), f.target());
        let endo = crate::space::same_space(src, tgt);
        CorrespondenceDoc {
            source: SpaceDoc::from_space(src),
            target: (!endo).then(|| SpaceDoc::from_space(tgt)),
            edges: f
                .edges()
                .iter()
                .map(|e| {
                    let (x, y) = (src.label(e.source).to_string(), tgt.label(e.target).to_string());
                    if e.multiplicity == 1 {
                        EdgeDoc::Plain(x, y)
                    } else {
                        EdgeDoc::Weighted(x, y, e.multiplicity)
                    }
                })
                .collect(),
            indeterminacy: Some(f.indeterminacy().iter().map(|&x| src.label(x).to_string()).collect()),
            generic_degree: f.generic_degree(),
            limit_fibers: f
                .limit_fibers()
                .iter()
                .map(|(&y, fibs)| {
                    let fibs = fibs
                        .iter()
                        .map(|fib| fib.iter().map(|&(x, w)| (src.label(x).to_string(), w)).collect())
                        .collect();
                    (tgt.label(y).to_string(), LimitFibersDoc::Fibers(fibs))
                })
                .collect(),
            equal_dimension: f.equal_dimension(),
        }
    }
}

impl FamilyDoc {
    pub fn build(&self) -> Result<SignedFamily> {
        let space = self.space.build()?;
        let list = |docs: &[MeasureDoc], name: &str| -> Result<Vec<SignedMeasure>> {
            docs.iter()
                .enumerate()
                .map(|(i, m)| m.build(&space, &format!("{name}[{i}]")))
                .collect()
        };
        SignedFamily::new(
            space.clone(),
            list(&self.members, "members")?,
            list(&self.declared_limits, "declared_limits")?,
            self.intersection_number,
        )
    }

    pub fn from_family(f: &SignedFamily) -> Self {
        FamilyDoc {
            space: SpaceDoc::from_space(f.space()),
            members: f.members().iter().map(MeasureDoc::from_measure).collect(),
            declared_limits: f.declared_limits().iter().map(MeasureDoc::from_measure).collect(),
            intersection_number: f.intersection_number(),
        }
    }
}
