use std::fmt;
use std::path::Path;

use radonlab::geometry::{catalog, ModelFamily, ModelSpec, ZPoint};
use radonlab::lattice::{cell, Lattice, LatticeSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Ball,
    Lemma,
    Region,
    Classify,
    Test,
    Necessity,
    Decompose,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Ball => "ball",
            Kind::Lemma => "lemma",
            Kind::Region => "region",
            Kind::Classify => "classify",
            Kind::Test => "test",
            Kind::Necessity => "necessity",
            Kind::Decompose => "decompose",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Spec(ModelSpec),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem of the report, CSV and sidecar.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: ModelRef,
    kind: Option<Kind>,
    parameters: serde_json::Value,
    seed: Option<u64>,
    #[serde(default)]
    output: OutputSpec,
}

/// A scenario file with its parameter block still untyped.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ModelFamily,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub output: OutputSpec,
}

/// `serde_path_to_error` reports a missing field at its parent; append the field.
fn field_path(prefix: &str, err: &serde_path_to_error::Error<serde_json::Error>) -> String {
    let mut path = prefix.to_string();
    let inner = err.path().to_string();
    if inner != "." {
        if !path.is_empty() {
            path.push('.');
        }
        path.push_str(&inner);
    }
    let msg = err.inner().to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(name) = rest.split('`').next() {
            if !path.is_empty() {
                path.push('.');
            }
            path.push_str(name);
        }
    }
    if path.is_empty() {
        path.push('.');
    }
    path
}

fn schema_error(prefix: &str, err: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let path = field_path(prefix, &err);
    CliError::Usage(format!("{path}: {}", err.into_inner()))
}

pub fn load(path: &Path, expected: Kind) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
    parse(&text, expected)
}

pub fn parse(text: &str, expected: Kind) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| schema_error("", e))?;
    if let Some(k) = raw.kind {
        if k != expected {
            return Err(CliError::Usage(format!("kind: scenario is a `{k}` experiment, command expects `{expected}`")));
        }
    }
    let model = resolve_model(raw.model)?;
    Ok(Scenario { model, parameters: raw.parameters, seed: raw.seed, output: raw.output })
}

pub fn resolve_model(m: ModelRef) -> Result<ModelFamily, CliError> {
    match m {
        ModelRef::Name(name) => catalog::by_name(&name).ok_or_else(|| {
            CliError::Usage(format!("model: unknown model `{name}` (known: {})", catalog::NAMES.join(", ")))
        }),
        ModelRef::Spec(spec) => ModelFamily::try_from(spec).map_err(|e| CliError::Usage(format!("model: {e}"))),
    }
}

impl Scenario {
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_path_to_error::deserialize(self.parameters.clone()).map_err(|e| schema_error("parameters", e))
    }
}

/// A cell edge given directly or derived from the bracket scale at each ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    Fixed(f64),
    Adaptive { cells_across: f64 },
}

impl HSpec {
    pub fn resolve(&self, model: &ModelFamily, z: &ZPoint, d1: f64, d2: f64) -> Result<f64, CliError> {
        match *self {
            HSpec::Fixed(h) => Ok(h),
            HSpec::Adaptive { cells_across } => {
                radonlab::ccball::adaptive_h(model, z, d1, d2, cells_across).map_err(CliError::from)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A subset of `R^d`: a union of boxes or explicit cell indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Boxes { boxes: Vec<Rect> },
    Cells { cells: Vec<Vec<i32>> },
}

impl SetSpec {
    pub fn build(&self, d: usize, h: f64, name: &str) -> Result<LatticeSet, CliError> {
        let lattice = Lattice::standard(d, h);
        let mut set = LatticeSet::new(lattice);
        match self {
            SetSpec::Boxes { boxes } => {
                for (i, b) in boxes.iter().enumerate() {
                    if b.lo.len() != d || b.hi.len() != d {
                        return Err(CliError::Usage(format!("{name}.boxes[{i}]: expected {d} coordinates")));
                    }
                    set.insert_box(&b.lo, &b.hi);
                }
            }
            SetSpec::Cells { cells } => {
                for (i, c) in cells.iter().enumerate() {
                    if c.len() != d {
                        return Err(CliError::Usage(format!("{name}.cells[{i}]: expected {d} indices")));
                    }
                    set.insert(cell(c));
                }
            }
        }
        if set.is_empty() {
            return Err(CliError::Usage(format!("{name}: the set contains no cells at h = {h}")));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_h_names_the_field() {
        let text = r#"{"model": "parabola", "parameters": {"delta1": 0.1, "delta2": 0.1}}"#;
        let sc = parse(text, Kind::Ball).unwrap();
        let err = sc.params::<crate::experiments::BallInput>().unwrap_err();
        assert!(err.to_string().contains("parameters.h"), "{err}");
    }

    #[test]
    fn nested_type_errors_carry_the_path() {
        let text = r#"{"model": "parabola", "parameters": {"delta1": 0.1, "delta2": "x", "h": 0.01}}"#;
        let sc = parse(text, Kind::Ball).unwrap();
        let err = sc.params::<crate::experiments::BallInput>().unwrap_err();
        assert!(err.to_string().starts_with("parameters.delta2"), "{err}");
    }

    #[test]
    fn kind_mismatch_is_a_usage_error() {
        let text = r#"{"model": "parabola", "kind": "region", "parameters": {}}"#;
        assert!(matches!(parse(text, Kind::Ball), Err(CliError::Usage(_))));
    }

    #[test]
    fn custom_models() {
        let text = r#"{"model": {"d": 2, "curve": [[0, 1], [0, 0, 0, 1]]}, "parameters": {}}"#;
        let sc = parse(text, Kind::Ball).unwrap();
        assert_eq!(sc.model.d(), 2);
        let bad = r#"{"model": {"d": 2, "curve": [[0, 2], [0, 0, 1]]}, "parameters": {}}"#;
        assert!(parse(bad, Kind::Ball).unwrap_err().to_string().starts_with("model"));
    }
}
