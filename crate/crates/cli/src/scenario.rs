//! Scenario documents and the operations they run.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use submeasure::correspondence::{pullback_eval, pushforward_eval};
use submeasure::dynamics::entropy::submeasure_entropy;
use submeasure::dynamics::invariant::{cesaro_run, default_max_iter, inv_geq, inv_leq, FIXED_POINT_TOL};
use submeasure::dynamics::sft::{topological_entropy, OrbitSft};
use submeasure::intersection::{kappa, kappa_minimizers, least_negative, KAPPA_TOL};
use submeasure::io::{FunctionDoc, MeasureDoc, SubmeasureDoc};
use submeasure::{
    indicator_basis, norm_and_mass, probe_panel, pullback_submeasure, pushforward_submeasure, EndoCorrespondence,
    FiniteSpace, FunctionVector, StrongSubmeasure,
};

use crate::models::{load_correspondence, load_family};
use crate::{CliError, Within};

/// Generator families larger than this are reported by their values only.
const GENERATOR_REPORT_CAP: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Eval,
    Pushforward,
    Pullback,
    Cesaro,
    InvLeq,
    InvGeq,
    Entropy,
    Intersect,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Eval => "eval",
            Op::Pushforward => "pushforward",
            Op::Pullback => "pullback",
            Op::Cesaro => "cesaro",
            Op::InvLeq => "inv_leq",
            Op::InvGeq => "inv_geq",
            Op::Entropy => "entropy",
            Op::Intersect => "intersect",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    #[default]
    Indicator,
    Probe,
    Subsets,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub basis: BasisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Initial submeasure: either explicit `generators`, or the point-mass
/// supremum `mass · sup_{x in S} δ_x` with `sup_of` listing labels, `@name`
/// for a named subset, or `*` for every point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MeasureDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_of: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedFunction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<Op>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<NamedFunction>,
    #[serde(default)]
    pub params: Params,
}

impl Scenario {
    pub fn empty() -> Self {
        Scenario {
            name: None,
            op: None,
            model: None,
            family: None,
            initial: None,
            functions: Vec::new(),
            params: Params::default(),
        }
    }
}

pub struct Outcome {
    /// The scenario with every file reference inlined and defaults made
    /// explicit; running it again reproduces the results.
    pub inputs: Value,
    pub results: Value,
    pub traces: Value,
}

/// JSON number, or a string for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

fn build_initial(doc: Option<&InitialDoc>, space: &Arc<FiniteSpace>) -> Result<StrongSubmeasure, CliError> {
    let doc = match doc {
        None => return Ok(StrongSubmeasure::full_sup(space.clone())),
        Some(d) => d,
    };
    match (&doc.generators, &doc.sup_of) {
        (Some(g), None) => {
            if doc.mass.is_some() {
                return Err(CliError::usage("initial.mass only applies to sup_of"));
            }
            Ok(SubmeasureDoc { generators: g.clone() }.build(space, "initial")?)
        }
        (None, Some(sup_of)) => {
            let mut points = Vec::new();
            for (i, entry) in sup_of.iter().enumerate() {
                let path = format!("initial.sup_of[{i}]");
                if entry == "*" {
                    points.extend(0..space.len());
                } else if let Some(name) = entry.strip_prefix('@') {
                    let subset = space.subset(name).ok_or_else(|| submeasure::Error::UnknownLabel {
                        path: path.clone(),
                        label: entry.clone(),
                    })?;
                    points.extend_from_slice(subset);
                } else {
                    points.push(space.require(entry, &path)?);
                }
            }
            points.sort_unstable();
            points.dedup();
            let mass = doc.mass.unwrap_or(1.0);
            Ok(StrongSubmeasure::point_mass_sup(space.clone(), &points, mass).map_err(|e| e.within("initial"))?)
        }
        _ => Err(CliError::usage("initial needs exactly one of `generators` and `sup_of`")),
    }
}

/// Probing functions with their display names.
fn functions(
    scenario: &Scenario,
    space: &Arc<FiniteSpace>,
) -> Result<(Vec<String>, Vec<FunctionVector>), CliError> {
    let mut names = Vec::new();
    let mut fs = Vec::new();
    match scenario.params.basis {
        BasisKind::Indicator | BasisKind::Probe => {
            for (i, f) in indicator_basis(space).into_iter().enumerate() {
                names.push(format!("1[{}]", space.label(i)));
                fs.push(f);
            }
            if scenario.params.basis == BasisKind::Probe {
                for i in 0..space.len() {
                    names.push(format!("-1[{}]", space.label(i)));
                }
                names.push("1".into());
                names.push("-1".into());
                fs = probe_panel(space);
            }
        }
        BasisKind::Subsets => {
            for (name, pts) in space.subsets() {
                names.push(format!("1[@{name}]"));
                fs.push(FunctionVector::indicator(space.clone(), pts));
            }
            names.push("1".into());
            fs.push(FunctionVector::constant(space.clone(), 1.0));
        }
    }
    for (i, f) in scenario.functions.iter().enumerate() {
        let doc = FunctionDoc { values: f.values.clone() };
        fs.push(doc.build(space, &format!("functions[{i}]"))?);
        names.push(f.name.clone().unwrap_or_else(|| format!("functions[{i}]")));
    }
    Ok((names, fs))
}

fn values_table(names: &[String], values: &[f64]) -> Value {
    Value::Array(
        names
            .iter()
            .zip(values)
            .map(|(n, &v)| json!({"function": n, "value": num(v)}))
            .collect(),
    )
}

fn describe(mu: &StrongSubmeasure) -> Result<Value, CliError> {
    let report = norm_and_mass(mu);
    let mut out = Map::new();
    out.insert("mass".into(), num(report.mass_plus));
    out.insert("mass_of_minus_one".into(), num(report.mass_minus));
    out.insert("norm".into(), num(report.norm));
    out.insert("norm_is_exact".into(), json!(report.norm_is_exact));
    out.insert("positive".into(), json!(mu.is_positive()));
    out.insert("generator_count".into(), num(mu.generator_count()));
    if mu.generator_count() <= GENERATOR_REPORT_CAP {
        out.insert(
            "generators".into(),
            serde_json::to_value(SubmeasureDoc::from_submeasure(mu)?.generators).expect("documents serialize"),
        );
    }
    Ok(Value::Object(out))
}

fn evals(mu: &StrongSubmeasure, fs: &[FunctionVector]) -> Result<Vec<f64>, CliError> {
    Ok(fs.iter().map(|phi| mu.eval(phi)).collect::<Result<_, _>>()?)
}

fn endo(c: submeasure::Correspondence) -> Result<EndoCorrespondence, CliError> {
    Ok(EndoCorrespondence::new(c).map_err(|e| e.within("model"))?)
}

/// Runs `scenario` as `op`. `base` resolves relative model paths.
pub fn run(mut scenario: Scenario, op: Op, base: Option<&Path>, seed: u64) -> Result<Outcome, CliError> {
    scenario.op = Some(op);
    scenario.params.seed = Some(scenario.params.seed.unwrap_or(seed));
    let seed = scenario.params.seed.unwrap();
    log::info!("running {} scenario {}", op.name(), scenario.name.as_deref().unwrap_or("(unnamed)"));

    if op == Op::Intersect {
        let reference = scenario
            .family
            .clone()
            .ok_or_else(|| CliError::usage("intersect needs a family (scenario field `family` or --model)"))?;
        let family = load_family(&reference, base)?;
        scenario.family = Some(family.input);
        let family = family.value;
        let tol = *scenario.params.tol.get_or_insert(KAPPA_TOL);
        let lambda = least_negative(&family, tol)?;
        let (names, fs) = functions(&scenario, family.space())?;
        let values = evals(&lambda, &fs)?;
        let minimizers: Vec<MeasureDoc> = kappa_minimizers(&family, tol).iter().map(MeasureDoc::from_measure).collect();
        let results = json!({
            "kappa": num(kappa(&family)),
            "intersection_number": num(family.intersection_number()),
            "minimizers": minimizers,
            "least_negative": describe(&lambda)?,
            "values": values_table(&names, &values),
        });
        return Ok(Outcome {
            inputs: serde_json::to_value(&scenario).expect("scenarios serialize"),
            results,
            traces: json!({}),
        });
    }

    let reference = scenario
        .model
        .clone()
        .ok_or_else(|| CliError::usage(format!("{} needs a model (scenario field `model` or --model)", op.name())))?;
    let model = load_correspondence(&reference, base, seed)?;
    scenario.model = Some(model.input);
    let f = model.value;
    let source = f.source().clone();
    let mu = build_initial(scenario.initial.as_ref(), match op {
        Op::Pullback => f.target(),
        _ => &source,
    })?;

    let (results, traces) = match op {
        Op::Eval => {
            let (names, fs) = functions(&scenario, &source)?;
            let values = evals(&mu, &fs)?;
            (json!({"submeasure": describe(&mu)?, "values": values_table(&names, &values)}), json!({}))
        }
        Op::Pushforward | Op::Pullback => {
            let out_space = if op == Op::Pushforward { f.target().clone() } else { source.clone() };
            let (names, fs) = functions(&scenario, &out_space)?;
            let values = fs
                .iter()
                .map(|phi| {
                    Ok(if op == Op::Pushforward {
                        pushforward_eval(&f, &mu, phi)?
                    } else {
                        pullback_eval(&f, &mu, phi)?
                    }
                    .as_f64())
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let mut results = json!({"values": values_table(&names, &values)});
            if mu.is_positive() {
                let image = if op == Op::Pushforward {
                    pushforward_submeasure(&f, &mu)?
                } else {
                    pullback_submeasure(&f, &mu)?
                };
                results["image"] = describe(&image)?;
            }
            (results, json!({}))
        }
        Op::Cesaro => {
            let f = endo(f)?;
            let n = *scenario.params.n.get_or_insert(10);
            let (names, fs) = functions(&scenario, &source)?;
            let run = cesaro_run(&f, &mu, n, &fs)?;
            let last = run.trace.last().cloned().unwrap_or_default();
            (
                json!({"n": n, "average": describe(&run.average)?, "values": values_table(&names, &last)}),
                json!({"functions": names, "steps": run.trace.iter().map(|s| nums(s)).collect::<Vec<_>>()}),
            )
        }
        Op::InvLeq | Op::InvGeq => {
            let f = endo(f)?;
            let tol = *scenario.params.tol.get_or_insert(FIXED_POINT_TOL);
            let max_iter = *scenario.params.max_iter.get_or_insert(default_max_iter(&f));
            let fp = if op == Op::InvLeq {
                inv_leq(&f, &mu, tol, max_iter)?
            } else {
                inv_geq(&f, &mu, tol, max_iter)?
            };
            let (names, fs) = functions(&scenario, &source)?;
            let values = evals(&fp.submeasure, &fs)?;
            let basis_names: Vec<String> = (0..source.len()).map(|i| format!("1[{}]", source.label(i))).collect();
            (
                json!({
                    "iterations": fp.iterations,
                    "residual": num(fp.residual),
                    "submeasure": describe(&fp.submeasure)?,
                    "values": values_table(&names, &values),
                }),
                json!({"functions": basis_names, "steps": fp.trace.iter().map(|s| nums(s)).collect::<Vec<_>>()}),
            )
        }
        Op::Entropy => {
            let f = endo(f)?;
            let sft = OrbitSft::from_correspondence(&f);
            let estimate = submeasure_entropy(&sft, &mu)?;
            let witness = estimate.witness.as_ref().map(|m| {
                let stationary: BTreeMap<&str, Value> = m
                    .stationary()
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(i, &w)| (source.label(i), num(w)))
                    .collect();
                json!({"stationary": stationary})
            });
            (
                json!({
                    "entropy": num(estimate.value),
                    "exact": estimate.exact,
                    "topological_entropy": num(topological_entropy(&sft)),
                    "witness": witness,
                }),
                json!({}),
            )
        }
        Op::Intersect => unreachable!("handled above"),
    };
    Ok(Outcome {
        inputs: serde_json::to_value(&scenario).expect("scenarios serialize"),
        results,
        traces,
    })
}
