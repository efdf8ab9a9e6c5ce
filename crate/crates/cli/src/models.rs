//! Model references: bundled builders named by a short spec string, or JSON
//! documents on disk.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use submeasure::dynamics::sft::OrbitSft;
use submeasure::intersection::{build_divisor_model, DivisorKind, SignedFamily};
use submeasure::io::{from_json_str, CorrespondenceDoc, FamilyDoc};
use submeasure::models::{
    build_blowup_model, build_compactification_pair, build_cremona_model, build_transcendental_model,
};
use submeasure::sampling::random_correspondence;
use submeasure::{Correspondence, FiniteSpace};

use crate::{CliError, Within};

/// Builders reachable from spec strings such as `cremona:3`.
pub const CORRESPONDENCE_BUILDERS: &[(&str, &str)] = &[
    ("cremona", "cremona[:n_line]  standard quadratic involution, default n_line = 3"),
    ("transcendental", "transcendental[:n]  net cycle plus a point at infinity, default n = 20"),
    ("compactification-closed", "compactification-closed[:n]  cyclic translation, default n = 6"),
    ("compactification-open", "compactification-open[:n]  translation escaping to infinity, default n = 6"),
    ("blowup-projection", "blowup-projection[:n_base:n_fiber]  blowdown map, default 5:4"),
    ("blowup-inverse", "blowup-inverse[:n_base:n_fiber]  blowup map, default 5:4"),
    ("full-shift", "full-shift[:k]  complete graph on k symbols, default k = 2"),
    ("golden-mean", "golden-mean  shift forbidding two consecutive 1s"),
    ("random", "random[:n[:n_indeterminate]]  seeded random self-correspondence, default 8:2"),
];

pub const FAMILY_BUILDERS: &[(&str, &str)] = &[
    ("line_P2", "line_P2[:n]  self-intersection of a line, default n = 4"),
    ("exceptional_E", "exceptional_E[:n]  self-intersection of an exceptional curve, default n = 4"),
];

fn is_builder(spec: &str, table: &[(&str, &str)]) -> bool {
    let head = spec.split(':').next().unwrap_or_default();
    table.iter().any(|(name, _)| *name == head)
}

fn builder_args(spec: &str, defaults: &[usize]) -> Result<Vec<usize>, CliError> {
    let mut args = defaults.to_vec();
    for (i, part) in spec.split(':').skip(1).enumerate() {
        if i >= args.len() {
            return Err(CliError::usage(format!("model '{spec}' takes at most {} arguments", args.len())));
        }
        args[i] = part
            .parse()
            .map_err(|_| CliError::usage(format!("model '{spec}': argument '{part}' is not a count")))?;
    }
    Ok(args)
}

pub fn build_correspondence(spec: &str, seed: u64) -> Result<Correspondence, CliError> {
    let name = spec.split(':').next().unwrap_or_default();
    let c = match name {
        "cremona" => build_cremona_model(builder_args(spec, &[3])?[0])?.map.inner().clone(),
        "transcendental" => build_transcendental_model(builder_args(spec, &[20])?[0])?.map.inner().clone(),
        "compactification-closed" | "compactification-open" => {
            let [closed, open] = build_compactification_pair(builder_args(spec, &[6])?[0])?;
            if name.ends_with("closed") { closed } else { open }.inner().clone()
        }
        "blowup-projection" | "blowup-inverse" => {
            let a = builder_args(spec, &[5, 4])?;
            let m = build_blowup_model(a[0], a[1])?;
            if name.ends_with("projection") { m.projection } else { m.inverse }
        }
        "full-shift" => OrbitSft::full_shift(builder_args(spec, &[2])?[0])?.to_correspondence()?.inner().clone(),
        "golden-mean" => {
            builder_args(spec, &[])?;
            OrbitSft::golden_mean().to_correspondence()?.inner().clone()
        }
        "random" => {
            let a = builder_args(spec, &[8, 2])?;
            let space = FiniteSpace::indexed("x", a[0])?.into_shared();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_correspondence(&mut rng, space.clone(), space, 1, a[1])?
        }
        other => return Err(CliError::usage(format!("unknown model builder '{other}'"))),
    };
    Ok(c)
}

pub fn build_family(spec: &str) -> Result<SignedFamily, CliError> {
    let kind: DivisorKind = spec.split(':').next().unwrap_or_default().parse()?;
    Ok(build_divisor_model(kind, builder_args(spec, &[4])?[0])?)
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn resolve(base: Option<&Path>, path: &str) -> PathBuf {
    match base {
        Some(dir) if Path::new(path).is_relative() => dir.join(path),
        _ => PathBuf::from(path),
    }
}

/// A model reference after loading: bundled builders stay as their spec
/// string, files are inlined so the resolved inputs are self-contained.
pub struct Resolved<T> {
    pub value: T,
    pub input: Value,
}

/// Resolves a correspondence reference: a builder spec, a path to a JSON
/// document, or an inline document.
pub fn load_correspondence(
    reference: &Value,
    base: Option<&Path>,
    seed: u64,
) -> Result<Resolved<Correspondence>, CliError> {
    match reference {
        Value::String(s) if is_builder(s, CORRESPONDENCE_BUILDERS) => Ok(Resolved {
            value: build_correspondence(s, seed)?,
            input: reference.clone(),
        }),
        Value::String(s) => {
            let doc: CorrespondenceDoc = from_json_str(&read_file(&resolve(base, s))?).map_err(|e| e.within("model"))?;
            Ok(Resolved {
                value: doc.build().map_err(|e| e.within("model"))?,
                input: serde_json::to_value(&doc).expect("documents serialize"),
            })
        }
        other => {
            let doc: CorrespondenceDoc = submeasure::io::from_json_value(other.clone()).map_err(|e| e.within("model"))?;
            Ok(Resolved {
                value: doc.build().map_err(|e| e.within("model"))?,
                input: other.clone(),
            })
        }
    }
}

/// Resolves a family reference: a divisor builder spec, a path, or inline.
pub fn load_family(reference: &Value, base: Option<&Path>) -> Result<Resolved<SignedFamily>, CliError> {
    match reference {
        Value::String(s) if is_builder(s, FAMILY_BUILDERS) => Ok(Resolved {
            value: build_family(s)?,
            input: reference.clone(),
        }),
        Value::String(s) => {
            let doc: FamilyDoc = from_json_str(&read_file(&resolve(base, s))?).map_err(|e| e.within("family"))?;
            Ok(Resolved {
                value: doc.build().map_err(|e| e.within("family"))?,
                input: serde_json::to_value(&doc).expect("documents serialize"),
            })
        }
        other => {
            let doc: FamilyDoc = submeasure::io::from_json_value(other.clone()).map_err(|e| e.within("family"))?;
            Ok(Resolved {
                value: doc.build().map_err(|e| e.within("family"))?,
                input: other.clone(),
            })
        }
    }
}

/// Serialized form of a built model for `build-model`.
pub fn model_document(spec: &str, seed: u64) -> Result<Value, CliError> {
    if is_builder(spec, FAMILY_BUILDERS) {
        return Ok(serde_json::to_value(FamilyDoc::from_family(&build_family(spec)?)).expect("documents serialize"));
    }
    if !is_builder(spec, CORRESPONDENCE_BUILDERS) {
        return Err(CliError::usage(format!("unknown model builder '{spec}'")));
    }
    let doc = CorrespondenceDoc::from_correspondence(&build_correspondence(spec, seed)?);
    Ok(serde_json::to_value(doc).expect("documents serialize"))
}
