//! Model, correlation, decomposition and witness files.
//!
//! Matrices are row-major lists of rows with entries `[re, im]`; composite
//! indices follow `i_A·dimB + i_B`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use selftest_core::dilations::DilationWitness;
use selftest_core::models::{AnyModel, CommutingModel, Correlation, Povms, QuantumModel, Scenario};
use selftest_core::numerics::{c, CMatrix, CVector};

pub type Entry = [f64; 2];
pub type MatrixJson = Vec<Vec<Entry>>;

/// Malformed input, located by file and field.
#[derive(Clone, Debug, PartialEq)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        InputError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for InputError {}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: String,
    pub scenario: Scenario,
    #[serde(rename = "dimA", default, skip_serializing_if = "Option::is_none")]
    pub dim_a: Option<usize>,
    #[serde(rename = "dimB", default, skip_serializing_if = "Option::is_none")]
    pub dim_b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<MatrixJson>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<MatrixJson>>,
    pub psi: Vec<Entry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationFile {
    pub scenario: Scenario,
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionComponent {
    pub weight: f64,
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Convex decomposition offered as an extremality refutation witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub scenario: Scenario,
    pub components: Vec<DecompositionComponent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    #[serde(rename = "IA")]
    pub ia: MatrixJson,
    #[serde(rename = "IB")]
    pub ib: MatrixJson,
    pub aux: Vec<Entry>,
    #[serde(rename = "auxDimA")]
    pub aux_dim_a: usize,
    #[serde(rename = "auxDimB")]
    pub aux_dim_b: usize,
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn vector_to_json(v: &CVector) -> Vec<Entry> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn check_finite(entries: &[Entry], path: &str, field: &str) -> Result<(), InputError> {
    match entries.iter().position(|e| !e[0].is_finite() || !e[1].is_finite()) {
        Some(k) => Err(InputError::new(path, format!("{field}[{k}] is not finite"))),
        None => Ok(()),
    }
}

pub fn matrix_from_json(
    m: &MatrixJson,
    rows: usize,
    cols: usize,
    path: &str,
    field: &str,
) -> Result<CMatrix, InputError> {
    let got_cols = m.first().map_or(0, Vec::len);
    if m.len() != rows || m.iter().any(|r| r.len() != got_cols) || got_cols != cols {
        let shape = if m.iter().all(|r| r.len() == got_cols) {
            format!("{}x{}", m.len(), got_cols)
        } else {
            "ragged".to_string()
        };
        return Err(InputError::new(
            path,
            format!("{field}: expected {rows}x{cols} matrix, got {shape}"),
        ));
    }
    for (i, row) in m.iter().enumerate() {
        check_finite(row, path, &format!("{field}[{i}]"))?;
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c(m[i][j][0], m[i][j][1])))
}

pub fn vector_from_json(v: &[Entry], len: usize, path: &str, field: &str) -> Result<CVector, InputError> {
    if v.len() != len {
        return Err(InputError::new(
            path,
            format!("{field}: expected length {len}, got {}", v.len()),
        ));
    }
    check_finite(v, path, field)?;
    Ok(CVector::from_iterator(len, v.iter().map(|e| c(e[0], e[1]))))
}

fn family_from_json(
    fam: &[Vec<MatrixJson>],
    inputs: usize,
    outputs: usize,
    dim: usize,
    path: &str,
    name: &str,
) -> Result<Povms, InputError> {
    if fam.len() != inputs {
        return Err(InputError::new(
            path,
            format!("{name}: expected {inputs} measurements, got {}", fam.len()),
        ));
    }
    fam.iter()
        .enumerate()
        .map(|(x, ops)| {
            if ops.len() != outputs {
                return Err(InputError::new(
                    path,
                    format!("{name}[{x}]: expected {outputs} effects, got {}", ops.len()),
                ));
            }
            ops.iter()
                .enumerate()
                .map(|(a, op)| matrix_from_json(op, dim, dim, path, &format!("{name}[{x}][{a}]")))
                .collect()
        })
        .collect()
}

fn checked_scenario(s: Scenario, path: &str) -> Result<Scenario, InputError> {
    Scenario::new(s.n_x, s.n_y, s.n_a, s.n_b).map_err(|e| InputError::new(path, format!("scenario: {e}")))
}

fn positive(v: Option<usize>, path: &str, field: &str, kind: &str) -> Result<usize, InputError> {
    match v {
        Some(d) if d > 0 => Ok(d),
        Some(_) => Err(InputError::new(path, format!("{field} must be positive"))),
        None => Err(InputError::new(
            path,
            format!("{field} is required for kind \"{kind}\""),
        )),
    }
}

impl ModelFile {
    pub fn from_model(model: &AnyModel) -> Self {
        let fam = |f: &Povms| -> Vec<Vec<MatrixJson>> {
            f.iter().map(|ops| ops.iter().map(matrix_to_json).collect()).collect()
        };
        match model {
            AnyModel::Tensor(q) => ModelFile {
                kind: "tensor".into(),
                scenario: q.scenario,
                dim_a: Some(q.dim_a),
                dim_b: Some(q.dim_b),
                dim: None,
                m: fam(&q.m),
                n: fam(&q.n),
                psi: vector_to_json(&q.psi),
            },
            AnyModel::Commuting(cm) => ModelFile {
                kind: "commuting".into(),
                scenario: cm.scenario,
                dim_a: None,
                dim_b: None,
                dim: Some(cm.dim),
                m: fam(&cm.m),
                n: fam(&cm.n),
                psi: vector_to_json(&cm.psi),
            },
        }
    }

    pub fn into_model(self, path: &str) -> Result<AnyModel, InputError> {
        let s = checked_scenario(self.scenario, path)?;
        match self.kind.as_str() {
            "tensor" => {
                if self.dim.is_some() {
                    return Err(InputError::new(path, "\"dim\" is only allowed for kind \"commuting\""));
                }
                let da = positive(self.dim_a, path, "dimA", "tensor")?;
                let db = positive(self.dim_b, path, "dimB", "tensor")?;
                let m = family_from_json(&self.m, s.n_x, s.n_a, da, path, "M")?;
                let n = family_from_json(&self.n, s.n_y, s.n_b, db, path, "N")?;
                let psi = vector_from_json(&self.psi, da * db, path, "psi")?;
                QuantumModel::new(s, da, db, m, n, psi)
                    .map(AnyModel::Tensor)
                    .map_err(|e| InputError::new(path, e.to_string()))
            }
            "commuting" => {
                if self.dim_a.is_some() || self.dim_b.is_some() {
                    return Err(InputError::new(
                        path,
                        "\"dimA\"/\"dimB\" are only allowed for kind \"tensor\"",
                    ));
                }
                let d = positive(self.dim, path, "dim", "commuting")?;
                let m = family_from_json(&self.m, s.n_x, s.n_a, d, path, "M")?;
                let n = family_from_json(&self.n, s.n_y, s.n_b, d, path, "N")?;
                let psi = vector_from_json(&self.psi, d, path, "psi")?;
                CommutingModel::new(s, d, m, n, psi)
                    .map(AnyModel::Commuting)
                    .map_err(|e| InputError::new(path, e.to_string()))
            }
            other => Err(InputError::new(
                path,
                format!("kind: expected \"tensor\" or \"commuting\", got \"{other}\""),
            )),
        }
    }
}

impl CorrelationFile {
    pub fn from_correlation(p: &Correlation) -> Self {
        CorrelationFile {
            scenario: p.scenario,
            p: p.to_nested(),
        }
    }

    pub fn into_correlation(self, path: &str) -> Result<Correlation, InputError> {
        let s = checked_scenario(self.scenario, path)?;
        Correlation::from_nested(s, &self.p).map_err(|e| InputError::new(path, format!("p: {e}")))
    }
}

impl DecompositionFile {
    pub fn into_parts(self, path: &str) -> Result<Vec<(f64, Correlation)>, InputError> {
        let s = checked_scenario(self.scenario, path)?;
        self.components
            .into_iter()
            .enumerate()
            .map(|(k, comp)| {
                Correlation::from_nested(s, &comp.p)
                    .map(|p| (comp.weight, p))
                    .map_err(|e| InputError::new(path, format!("components[{k}].p: {e}")))
            })
            .collect()
    }
}

impl WitnessFile {
    pub fn from_witness(w: &DilationWitness) -> Self {
        WitnessFile {
            ia: matrix_to_json(&w.ia),
            ib: matrix_to_json(&w.ib),
            aux: vector_to_json(&w.aux),
            aux_dim_a: w.aux_dim_a,
            aux_dim_b: w.aux_dim_b,
        }
    }

    pub fn into_witness(self, path: &str) -> Result<DilationWitness, InputError> {
        let dims = |m: &MatrixJson| (m.len(), m.first().map_or(0, Vec::len));
        let (ra, ca) = dims(&self.ia);
        let (rb, cb) = dims(&self.ib);
        Ok(DilationWitness {
            ia: matrix_from_json(&self.ia, ra, ca, path, "IA")?,
            ib: matrix_from_json(&self.ib, rb, cb, path, "IB")?,
            aux: vector_from_json(&self.aux, self.aux.len(), path, "aux")?,
            aux_dim_a: self.aux_dim_a,
            aux_dim_b: self.aux_dim_b,
        })
    }
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::new(path.display().to_string(), format!("cannot read: {e}")))
}

/// Parse JSON text into `T`, reporting line and column on failure.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::new(path, e.to_string()))
}

pub fn parse_model(text: &str, path: &str) -> Result<AnyModel, InputError> {
    parse::<ModelFile>(text, path)?.into_model(path)
}

pub fn parse_correlation(text: &str, path: &str) -> Result<Correlation, InputError> {
    parse::<CorrelationFile>(text, path)?.into_correlation(path)
}

/// Either a correlation file (has `"p"`) or a model file.
pub enum CorrelationSource {
    Correlation(Correlation),
    Model(AnyModel),
}

pub fn parse_correlation_or_model(text: &str, path: &str) -> Result<CorrelationSource, InputError> {
    let v: Value = parse(text, path)?;
    if v.get("p").is_some() {
        parse_correlation(text, path).map(CorrelationSource::Correlation)
    } else {
        parse_model(text, path).map(CorrelationSource::Model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical;
    use selftest_core::fixtures;

    #[test]
    fn model_round_trip_is_byte_stable() {
        let m: AnyModel = fixtures::chsh_ideal().into();
        let text = canonical::to_string(&ModelFile::from_model(&m)).unwrap();
        let back = parse_model(&text, "mem").unwrap();
        assert_eq!(canonical::to_string(&ModelFile::from_model(&back)).unwrap(), text);
        let cm: AnyModel = fixtures::chsh_ideal().to_commuting().into();
        let text = canonical::to_string(&ModelFile::from_model(&cm)).unwrap();
        assert_eq!(parse_model(&text, "mem").unwrap().kind(), "commuting");
    }

    #[test]
    fn shape_errors_name_the_field() {
        let m: AnyModel = fixtures::chsh_ideal().into();
        let mut file = ModelFile::from_model(&m);
        file.n[1][0].pop();
        let err = file.into_model("x.json").unwrap_err();
        assert_eq!(err.to_string(), "x.json: N[1][0]: expected 2x2 matrix, got 1x2");
        let mut file = ModelFile::from_model(&m);
        file.psi.push([0.0, 0.0]);
        let err = file.into_model("x.json").unwrap_err();
        assert!(err.message.contains("psi: expected length 4, got 5"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_model("{\n  \"kind\": \"tensor\",\n  oops\n}", "bad.json").unwrap_err();
        assert!(err.message.contains("line 3"), "{err}");
        let err = parse_model("{\"kind\": \"tensor\", \"extra\": 1}", "bad.json").unwrap_err();
        assert!(err.message.contains("unknown field"), "{err}");
    }

    #[test]
    fn wrong_kind_and_dims() {
        let m: AnyModel = fixtures::chsh_ideal().into();
        let mut file = ModelFile::from_model(&m);
        file.kind = "quantum".into();
        assert!(file.into_model("k").unwrap_err().message.contains("kind"));
        let mut file = ModelFile::from_model(&m);
        file.dim_a = None;
        assert!(file.into_model("k").unwrap_err().message.contains("dimA is required"));
    }
}
