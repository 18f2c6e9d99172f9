use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use selftest_core::dilations::{find_local_dilation, naimark_dilate, verify_local_dilation};
use selftest_core::models::{classify, correlation_with_notes, validate_model, AnyModel, Correlation, QuantumModel};
use selftest_core::representations::{cyclic_restrict, irrep_decompose, side_generators, states_equal, StateWitness};
use selftest_core::schmidt_support::{is_centrally_supported_via_transfer, schmidt_decompose, support_of};
use selftest_core::special::optimize::{optimize_tilted, SearchConfig};
use selftest_core::special::{binary_round, synchronous_verify, verify_tilted_sos, xor_of, xor_selftest_certificate};
use selftest_core::{Error, NotDilatable, Side, Tolerance};

use crate::io::{
    matrix_to_json, parse, parse_correlation_or_model, parse_model, read_text, CorrelationFile, CorrelationSource,
    DecompositionFile, InputError, ModelFile, WitnessFile,
};
use crate::report::{ErrorInfo, InputDigest, Provenance, Report};

pub const VERSION: &str = concat!("selftest ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Validate {
        model: PathBuf,
    },
    Correlation {
        model: PathBuf,
    },
    Schmidt {
        model: PathBuf,
    },
    Support {
        model: PathBuf,
    },
    Naimark {
        model: PathBuf,
    },
    RoundBinary {
        model: PathBuf,
    },
    SyncVerify {
        model: PathBuf,
    },
    Xor {
        input: PathBuf,
    },
    XorCertify {
        input: PathBuf,
    },
    StateEqual {
        first: PathBuf,
        second: PathBuf,
    },
    FindDilation {
        source: PathBuf,
        target: PathBuf,
    },
    VerifyDilation {
        source: PathBuf,
        target: PathBuf,
        witness: PathBuf,
    },
    Irrep {
        model: PathBuf,
    },
    Cyclic {
        model: PathBuf,
    },
    TiltedSos {
        model: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Correlation { .. } => "correlation",
            Command::Schmidt { .. } => "schmidt",
            Command::Support { .. } => "support",
            Command::Naimark { .. } => "naimark",
            Command::RoundBinary { .. } => "round-binary",
            Command::SyncVerify { .. } => "sync-verify",
            Command::Xor { .. } => "xor",
            Command::XorCertify { .. } => "xor-certify",
            Command::StateEqual { .. } => "state-equal",
            Command::FindDilation { .. } => "find-dilation",
            Command::VerifyDilation { .. } => "verify-dilation",
            Command::Irrep { .. } => "irrep",
            Command::Cyclic { .. } => "cyclic",
            Command::TiltedSos { .. } => "tilted-sos",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub tol: Tolerance,
    pub seed: u64,
    pub assert_extremal: bool,
    pub decomposition: Option<PathBuf>,
    pub alpha: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            tol: Tolerance::default(),
            seed: 0,
            assert_extremal: false,
            decomposition: None,
            alpha: None,
        }
    }
}

struct Done {
    passed: bool,
    summary: String,
    result: Value,
}

enum Failure {
    Input(String),
    /// A check that could not be completed; `kind` names the obstruction.
    Check {
        kind: &'static str,
        message: String,
        result: Value,
    },
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn from_core(e: Error) -> Failure {
    let kind = match &e {
        Error::NotDilatable(_) => "notDilatable",
        Error::LemmaViolated { .. } => "lemmaViolated",
        Error::NotSynchronous(_) => "notSynchronous",
        Error::AlgebraNotSemisimpleNumerically { .. } => "numerical",
        _ => return Failure::Input(e.to_string()),
    };
    Failure::Check {
        kind,
        message: e.to_string(),
        result: Value::Null,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

#[derive(Default)]
struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn text(&mut self, path: &Path) -> Result<(String, String), Failure> {
        let text = read_text(path)?;
        let name = path.display().to_string();
        self.digests.push(InputDigest::of(&name, text.as_bytes()));
        Ok((text, name))
    }

    fn model(&mut self, path: &Path) -> Result<AnyModel, Failure> {
        let (text, name) = self.text(path)?;
        Ok(parse_model(&text, &name)?)
    }

    fn tensor(&mut self, path: &Path, command: &str) -> Result<QuantumModel, Failure> {
        match self.model(path)? {
            AnyModel::Tensor(m) => Ok(m),
            AnyModel::Commuting(_) => Err(Failure::Input(format!(
                "{}: {command} needs a tensor-product model (kind \"tensor\")",
                path.display()
            ))),
        }
    }

    fn correlation(&mut self, path: &Path, tol: Tolerance) -> Result<Correlation, Failure> {
        let (text, name) = self.text(path)?;
        match parse_correlation_or_model(&text, &name)? {
            CorrelationSource::Correlation(p) => Ok(p),
            CorrelationSource::Model(m) => correlation_with_notes(m.as_dyn(), tol)
                .map(|(p, _)| p)
                .map_err(from_core),
        }
    }
}

fn model_json(m: AnyModel) -> Value {
    to_value(&ModelFile::from_model(&m))
}

pub fn run(cfg: &RunConfig) -> Report {
    let mut inputs = Inputs::default();
    let outcome = dispatch(cfg, &mut inputs);
    let mut options = BTreeMap::new();
    if cfg.assert_extremal {
        options.insert("assertExtremal".to_string(), json!(true));
    }
    if let Some(a) = cfg.alpha {
        options.insert("alpha".to_string(), json!(a));
    }
    if let Some(d) = &cfg.decomposition {
        options.insert("decomposition".to_string(), json!(d.display().to_string()));
    }
    let provenance = Provenance {
        inputs: inputs.digests,
        seed: cfg.seed,
        tolerance: cfg.tol.eps,
        version: VERSION.to_string(),
        options,
    };
    let command = cfg.command.name().to_string();
    match outcome {
        Ok(done) => Report {
            command,
            passed: done.passed,
            summary: done.summary,
            result: done.result,
            error: None,
            provenance,
        },
        Err(Failure::Input(message)) => Report {
            command,
            passed: false,
            summary: format!("input error: {message}"),
            result: Value::Null,
            error: Some(ErrorInfo {
                kind: "input".into(),
                message,
            }),
            provenance,
        },
        Err(Failure::Check { kind, message, result }) => Report {
            command,
            passed: false,
            summary: message.clone(),
            result,
            error: Some(ErrorInfo {
                kind: kind.into(),
                message,
            }),
            provenance,
        },
    }
}

fn dispatch(cfg: &RunConfig, inputs: &mut Inputs) -> Result<Done, Failure> {
    let tol = cfg.tol;
    match &cfg.command {
        Command::Validate { model } => {
            let m = inputs.model(model)?;
            let report = validate_model(&m, tol);
            let flags = match &m {
                AnyModel::Tensor(q) if report.is_valid() => Some(to_value(&classify(q, tol).map_err(from_core)?)),
                _ => None,
            };
            let valid = report.is_valid();
            Ok(Done {
                passed: valid,
                summary: if valid {
                    format!("valid {} model", m.kind())
                } else {
                    format!("{} violation(s)", report.violations.len())
                },
                result: json!({"kind": m.kind(), "valid": valid, "violations": report.violations, "flags": flags}),
            })
        }
        Command::Correlation { model } => {
            let m = inputs.model(model)?;
            let (p, notes) = correlation_with_notes(m.as_dyn(), tol).map_err(from_core)?;
            let mut result = to_value(&CorrelationFile::from_correlation(&p));
            result["notes"] = to_value(&notes);
            Ok(Done {
                passed: true,
                summary: format!("correlation over {:?}", p.scenario),
                result,
            })
        }
        Command::Schmidt { model } => {
            let m = inputs.tensor(model, "schmidt")?;
            let sd = schmidt_decompose(&m.psi, m.dim_a, m.dim_b, tol).map_err(from_core)?;
            Ok(Done {
                passed: true,
                summary: format!("Schmidt rank {}", sd.rank),
                result: json!({
                    "rank": sd.rank,
                    "coefficients": sd.coefficients,
                    "fullRank": sd.is_full_rank(),
                    "leftBasis": matrix_to_json(&sd.left_matrix()),
                    "rightBasis": matrix_to_json(&sd.right_matrix()),
                }),
            })
        }
        Command::Support { model } => {
            let m = inputs.tensor(model, "support")?;
            let data = support_of(&m, tol).map_err(from_core)?;
            let (via_transfer, transfer_residuals) = is_centrally_supported_via_transfer(&m, tol);
            let agree = data.centrally_supported == via_transfer;
            Ok(Done {
                passed: data.centrally_supported && agree,
                summary: format!(
                    "centrally supported: {} (commutator), {} (transfer)",
                    data.centrally_supported, via_transfer
                ),
                result: json!({
                    "centrallySupported": data.centrally_supported,
                    "centrallySupportedViaTransfer": via_transfer,
                    "criteriaAgree": agree,
                    "commutatorResiduals": data.commutator_residuals,
                    "transferResiduals": transfer_residuals,
                    "piA": matrix_to_json(&data.pi_a),
                    "piB": matrix_to_json(&data.pi_b),
                    "supportModel": model_json(data.support_model.into()),
                }),
            })
        }
        Command::Naimark { model } => {
            let m = inputs.tensor(model, "naimark")?;
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for (side, family) in [(Side::A, &m.m), (Side::B, &m.n)] {
                for (x, povm) in family.iter().enumerate() {
                    let nd = naimark_dilate(povm, tol).map_err(from_core)?;
                    let rep = nd.reproduction_residual(povm);
                    let iso = nd.isometry_residual();
                    worst = worst.max(rep).max(iso);
                    rows.push(json!({
                        "side": side,
                        "input": x,
                        "outcomes": nd.outcomes,
                        "dilationDim": nd.v.nrows(),
                        "reproductionResidual": rep,
                        "isometryResidual": iso,
                        "V": matrix_to_json(&nd.v),
                    }));
                }
            }
            Ok(Done {
                passed: tol.negligible(worst, 1.0),
                summary: format!("{} dilation(s), max residual {worst:.3e}", rows.len()),
                result: json!({"dilations": rows, "maxResidual": worst}),
            })
        }
        Command::RoundBinary { model } => {
            let m = inputs.tensor(model, "round-binary")?;
            let out = binary_round(&m, cfg.assert_extremal, tol).map_err(from_core)?;
            let passed = tol.negligible(out.max_state_defect, 1.0) && tol.negligible(out.correlation_defect, 1.0);
            Ok(Done {
                passed,
                summary: format!(
                    "rounded to PVMs; state defect {:.3e}, correlation defect {:.3e}, extremality {}",
                    out.max_state_defect,
                    out.correlation_defect,
                    if out.extremality_asserted {
                        "asserted"
                    } else {
                        "not asserted"
                    }
                ),
                result: json!({
                    "model": model_json(out.model.into()),
                    "witness": to_value(&WitnessFile::from_witness(&out.witness)),
                    "extremalityAsserted": out.extremality_asserted,
                    "conditions": out.conditions,
                    "maxStateDefect": out.max_state_defect,
                    "correlationDefect": out.correlation_defect,
                }),
            })
        }
        Command::SyncVerify { model } => {
            let m = inputs.tensor(model, "sync-verify")?;
            let rep = synchronous_verify(&m, tol).map_err(from_core)?;
            Ok(Done {
                passed: rep.passed,
                summary: format!(
                    "swap residual {:.3e}, projective state {}, centrally supported {}",
                    rep.max_swap_residual, rep.projective_state, rep.centrally_supported
                ),
                result: to_value(&rep),
            })
        }
        Command::Xor { input } => {
            let p = inputs.correlation(input, tol)?;
            let x = xor_of(&p, tol).map_err(from_core)?;
            Ok(Done {
                passed: true,
                summary: format!("XOR rank {}, unbiased {}", x.rank, x.unbiased),
                result: to_value(&x),
            })
        }
        Command::XorCertify { input } => {
            let p = inputs.correlation(input, tol)?;
            let parts = match &cfg.decomposition {
                Some(path) => {
                    let (text, name) = inputs.text(path)?;
                    Some(parse::<DecompositionFile>(&text, &name)?.into_parts(&name)?)
                }
                None => None,
            };
            let cert = xor_selftest_certificate(&p, cfg.assert_extremal, parts.as_deref(), tol).map_err(from_core)?;
            Ok(Done {
                passed: cert.granted,
                summary: cert.statement.clone(),
                result: to_value(&cert),
            })
        }
        Command::StateEqual { first, second } => {
            let m1 = inputs.model(first)?;
            let m2 = inputs.model(second)?;
            let cmp = states_equal(&m1, &m2, tol).map_err(from_core)?;
            let witness = match &cmp.witness {
                StateWitness::Unitary { matrix, cyclic_dim } => {
                    json!({"type": "unitary", "matrix": matrix_to_json(matrix), "cyclicDim": cyclic_dim})
                }
                StateWitness::Distinguishing {
                    word_a,
                    word_b,
                    first,
                    second,
                } => json!({
                    "type": "distinguishing",
                    "wordA": word_a.to_string(),
                    "wordB": word_b.to_string(),
                    "first": [first.re, first.im],
                    "second": [second.re, second.im],
                }),
                StateWitness::ScenarioMismatch { reason } => json!({"type": "scenarioMismatch", "reason": reason}),
            };
            let summary = match &cmp.witness {
                StateWitness::Distinguishing { word_a, word_b, .. } => {
                    format!("states differ on the moment ({word_a}, {word_b})")
                }
                StateWitness::ScenarioMismatch { reason } => format!("scenario mismatch: {reason}"),
                StateWitness::Unitary { cyclic_dim, .. } => {
                    format!("states equal (cyclic dimension {cyclic_dim})")
                }
            };
            Ok(Done {
                passed: cmp.equal,
                summary,
                result: json!({
                    "equal": cmp.equal,
                    "gramDefect": cmp.gram_defect,
                    "intertwiningDefect": cmp.intertwining_defect,
                    "witness": witness,
                }),
            })
        }
        Command::FindDilation { source, target } => {
            let s = inputs.tensor(source, "find-dilation")?;
            let t = inputs.tensor(target, "find-dilation")?;
            match find_local_dilation(&s, &t, cfg.seed, tol) {
                Ok(w) => {
                    let rep = verify_local_dilation(&s, &t, &w, tol).map_err(from_core)?;
                    Ok(Done {
                        passed: rep.passed,
                        summary: format!(
                            "local dilation found (aux {}x{}), residual {:.3e}",
                            w.aux_dim_a, w.aux_dim_b, rep.max_residual
                        ),
                        result: json!({
                            "found": true,
                            "witness": to_value(&WitnessFile::from_witness(&w)),
                            "verification": rep,
                        }),
                    })
                }
                Err(Error::NotDilatable(reason)) => {
                    let obstruction = match &reason {
                        NotDilatable::SchmidtRankObstruction { .. } => "schmidtRank",
                        NotDilatable::TargetReducible { .. } => "targetReducible",
                        NotDilatable::ComponentRepresentation { .. } => "componentRepresentation",
                        NotDilatable::ComponentState { .. } => "componentState",
                        NotDilatable::VerificationFailed { .. } => "verificationFailed",
                    };
                    Err(Failure::Check {
                        kind: "notDilatable",
                        message: format!("not dilatable: {reason}"),
                        result: json!({"found": false, "obstruction": obstruction, "reason": reason.to_string()}),
                    })
                }
                Err(e) => Err(from_core(e)),
            }
        }
        Command::VerifyDilation {
            source,
            target,
            witness,
        } => {
            let s = inputs.tensor(source, "verify-dilation")?;
            let t = inputs.tensor(target, "verify-dilation")?;
            let (text, name) = inputs.text(witness)?;
            let w = parse::<WitnessFile>(&text, &name)?.into_witness(&name)?;
            let rep = verify_local_dilation(&s, &t, &w, tol).map_err(from_core)?;
            Ok(Done {
                passed: rep.passed,
                summary: format!("max residual {:.3e}", rep.max_residual),
                result: to_value(&rep),
            })
        }
        Command::Irrep { model } => {
            let m = inputs.tensor(model, "irrep")?;
            let mut sides = serde_json::Map::new();
            let mut summary = Vec::new();
            for (k, side) in [Side::A, Side::B].into_iter().enumerate() {
                let dec = irrep_decompose(&side_generators(&m, side), cfg.seed.wrapping_add(k as u64), tol)
                    .map_err(from_core)?;
                summary.push(format!("{side}: {:?}", dec.structure()));
                let blocks: Vec<Value> = dec
                    .blocks
                    .iter()
                    .map(|b| {
                        json!({
                            "irrepDim": b.irrep_dim,
                            "multiplicity": b.multiplicity,
                            "generators": b.generators.iter().map(matrix_to_json).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                sides.insert(
                    side.to_string(),
                    json!({
                        "structure": dec.structure(),
                        "commutantDim": dec.commutant_dim(),
                        "reassemblyDefect": dec.reassembly_defect,
                        "ambiguous": dec.ambiguous,
                        "blocks": blocks,
                        "changeOfBasis": matrix_to_json(&dec.change_of_basis),
                    }),
                );
            }
            Ok(Done {
                passed: true,
                summary: format!("(irrep dim, multiplicity) {}", summary.join("; ")),
                result: Value::Object(sides),
            })
        }
        Command::Cyclic { model } => {
            let m = inputs.model(model)?;
            let original = m.as_dyn().carrier_dim();
            let cyc = cyclic_restrict(&m, tol).map_err(from_core)?;
            let words: Vec<Value> = cyc
                .basis_words
                .iter()
                .map(|(a, b)| json!([a.to_string(), b.to_string()]))
                .collect();
            Ok(Done {
                passed: true,
                summary: format!("cyclic dimension {} of {original}", cyc.dim()),
                result: json!({
                    "dim": cyc.dim(),
                    "originalDim": original,
                    "basisWords": words,
                    "isometry": matrix_to_json(&cyc.isometry),
                    "model": model_json(cyc.model),
                }),
            })
        }
        Command::TiltedSos { model } => {
            let alpha = cfg.alpha.unwrap_or(0.0);
            let (m, search) = match model {
                Some(path) => (inputs.tensor(path, "tilted-sos")?, Value::Null),
                None => {
                    let found = optimize_tilted(
                        alpha,
                        SearchConfig {
                            seed: cfg.seed,
                            ..SearchConfig::default()
                        },
                    )
                    .map_err(from_core)?;
                    let params = json!({"params": found.params, "value": found.value});
                    (found.model, params)
                }
            };
            let cert = verify_tilted_sos(&m, alpha, tol).map_err(from_core)?;
            let scale = cert.lambda * cert.lambda;
            let identities = cert.identity_defects.iter().all(|&d| tol.negligible(d, scale));
            let optimal_ok = !cert.optimal || cert.residuals_vanish;
            let passed = identities && optimal_ok && (model.is_some() || cert.optimal);
            let mut result = to_value(&cert);
            result["search"] = search;
            if model.is_none() {
                result["model"] = model_json(m.into());
            }
            Ok(Done {
                passed,
                summary: format!(
                    "f(eta) = {:.12} vs lambda = {:.12}; identity defects {:.3e}, {:.3e}",
                    cert.value, cert.lambda, cert.identity_defects[0], cert.identity_defects[1]
                ),
                result,
            })
        }
    }
}
