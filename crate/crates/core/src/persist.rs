//! Single-file `.fnm` model container with bit-exact parameters.
//!
//! Layout (UTF-8 text, `\n` line endings):
//!
//! ```text
//! FNM1
//! HEADER <compact JSON>
//! PARAM <i> <count> <base64 of little-endian f64>      one per network
//! DATA <base64 of CSV>                                optional
//! CHECKSUM <16 lowercase hex digits>
//! ```
//!
//! `PARAM 0` is the full-data network; `PARAM 1..=B` follow the ensemble
//! replicates in header order. The checksum is the first 8 bytes of the
//! SHA-256 of every byte after the magic line and before `CHECKSUM`.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::network::{Network, NetworkConfig};
use crate::tabular::{ColumnSchema, DataTable, Encoder, Formula};
use crate::training::{EpochRecord, FittedModel, StopReason, TrainConfig, TrainingHistory};
use crate::uncertainty::{BootstrapEnsemble, Replicate};

pub const MAGIC: &str = "FNM1";
pub const FORMAT_VERSION: u32 = 1;
/// Replicate seed derivation, recorded in every header.
pub const SEED_DERIVATION: &str = "splitmix64(master ^ splitmix64(index + 1))";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(String),
    #[error("malformed model file: {0}")]
    Serialization(String),
    #[error("checksum mismatch: file says {expected}, content hashes to {found}")]
    ChecksumMismatch { expected: String, found: String },
    #[error("unsupported format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("model violates an invariant: {0}")]
    InvariantViolation(String),
}

fn ser(msg: impl std::fmt::Display) -> PersistError {
    PersistError::Serialization(msg.to_string())
}

fn invariant(msg: impl std::fmt::Display) -> PersistError {
    PersistError::InvariantViolation(msg.to_string())
}

#[derive(Serialize, Deserialize)]
struct ReplicateHeader {
    index: usize,
    seed: u64,
    resample: Vec<usize>,
    validation: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    master_seed: u64,
    seed_derivation: String,
    failures: Vec<usize>,
    replicates: Vec<ReplicateHeader>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    formula: Formula,
    config: TrainConfig,
    encoder: Encoder,
    network: NetworkConfig,
    epochs: Vec<EpochRecord>,
    /// `None` when no training data was available to compute it.
    baseline: Option<f64>,
    validation_rows: Vec<usize>,
    stop_reason: StopReason,
    warnings: Vec<String>,
    continuations: u32,
    ensemble: Option<EnsembleHeader>,
    data_schema: Option<Vec<ColumnSchema>>,
    data_rows: Option<usize>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

fn checksum(body: &[u8]) -> String {
    let digest = Sha256::digest(body);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn encode_params(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_params(text: &str, count: usize) -> Result<Vec<f64>, PersistError> {
    let bytes = B64.decode(text).map_err(ser)?;
    if bytes.len() != count * 8 {
        return Err(ser(format!("parameter payload has {} bytes, expected {}", bytes.len(), count * 8)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

/// Serializes a model. Without `embed_data` the file is smaller but the
/// loaded model cannot compute residuals or explanations.
pub fn to_bytes(model: &FittedModel, embed_data: bool) -> Result<Vec<u8>, PersistError> {
    let data = if embed_data { model.data.as_ref() } else { None };
    let header = Header {
        version: FORMAT_VERSION,
        formula: model.formula.clone(),
        config: model.config.clone(),
        encoder: model.encoder.clone(),
        network: model.network.config().clone(),
        epochs: model.history.epochs.clone(),
        baseline: Some(model.history.baseline).filter(|b| b.is_finite()),
        validation_rows: model.validation_rows.clone(),
        stop_reason: model.stop_reason,
        warnings: model.warnings.clone(),
        continuations: model.continuations,
        ensemble: model.ensemble.as_ref().map(|e| EnsembleHeader {
            master_seed: e.master_seed,
            seed_derivation: SEED_DERIVATION.into(),
            failures: e.failures.clone(),
            replicates: e
                .replicates
                .iter()
                .map(|r| ReplicateHeader {
                    index: r.index,
                    seed: r.seed,
                    resample: r.resample.clone(),
                    validation: r.validation.clone(),
                })
                .collect(),
        }),
        data_schema: data.map(DataTable::schema),
        data_rows: data.map(DataTable::n_rows),
    };
    let mut body = String::new();
    body.push_str("HEADER ");
    body.push_str(&serde_json::to_string(&header).map_err(ser)?);
    body.push('\n');
    let networks = std::iter::once(&model.network).chain(model.ensemble.iter().flat_map(|e| e.networks()));
    for (i, net) in networks.enumerate() {
        let p = net.parameters();
        body.push_str(&format!("PARAM {i} {} {}\n", p.len(), encode_params(&p)));
    }
    if let Some(table) = data {
        body.push_str("DATA ");
        body.push_str(&B64.encode(table.to_csv_string()));
        body.push('\n');
    }
    let sum = checksum(body.as_bytes());
    Ok(format!("{MAGIC}\n{body}CHECKSUM {sum}\n").into_bytes())
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>, embed_data: bool) -> Result<(), PersistError> {
    let bytes = to_bytes(model, embed_data)?;
    std::fs::write(path.as_ref(), bytes).map_err(|e| PersistError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel, PersistError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| PersistError::Io(format!("{}: {e}", path.as_ref().display())))?;
    from_bytes(&bytes)
}

pub fn from_bytes(bytes: &[u8]) -> Result<FittedModel, PersistError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ser("not UTF-8 text"))?;
    let body = text
        .strip_prefix(MAGIC)
        .and_then(|t| t.strip_prefix('\n'))
        .ok_or_else(|| ser("missing FNM1 magic"))?;
    let split = body.rfind("CHECKSUM ").ok_or_else(|| ser("missing checksum line (truncated file?)"))?;
    let (content, tail) = body.split_at(split);
    let expected = tail
        .strip_prefix("CHECKSUM ")
        .and_then(|t| t.strip_suffix('\n'))
        .filter(|h| h.len() == 16)
        .ok_or_else(|| ser("malformed checksum line"))?;
    if !content.is_empty() && !content.ends_with('\n') {
        return Err(ser("checksum line does not start a line"));
    }

    let mut lines = content.lines();
    let header_text = lines
        .next()
        .and_then(|l| l.strip_prefix("HEADER "))
        .ok_or_else(|| ser("missing header line"))?;
    if let Ok(probe) = serde_json::from_str::<VersionProbe>(header_text) {
        if probe.version != FORMAT_VERSION {
            return Err(PersistError::UnsupportedVersion(probe.version));
        }
    }
    let found = checksum(content.as_bytes());
    if found != expected {
        return Err(PersistError::ChecksumMismatch { expected: expected.into(), found });
    }
    let header: Header = serde_json::from_str(header_text).map_err(ser)?;

    let mut params = Vec::new();
    let mut data_b64 = None;
    for line in lines {
        if let Some(rest) = line.strip_prefix("PARAM ") {
            let mut parts = rest.splitn(3, ' ');
            let (i, count, payload) = match (parts.next(), parts.next(), parts.next()) {
                (Some(i), Some(c), Some(p)) => (i, c, p),
                _ => return Err(ser("malformed PARAM line")),
            };
            let i: usize = i.parse().map_err(ser)?;
            if i != params.len() {
                return Err(ser(format!("PARAM {i} out of order")));
            }
            params.push(decode_params(payload, count.parse().map_err(ser)?)?);
        } else if let Some(rest) = line.strip_prefix("DATA ") {
            data_b64 = Some(rest);
        } else {
            return Err(ser("unrecognized line"));
        }
    }
    assemble(header, params, data_b64)
}

fn assemble(header: Header, params: Vec<Vec<f64>>, data_b64: Option<&str>) -> Result<FittedModel, PersistError> {
    header.config.validate().map_err(invariant)?;
    header.network.validate().map_err(invariant)?;
    if header.encoder.width() != header.network.input_dim {
        return Err(invariant("encoder width differs from network input"));
    }
    let n_ensemble = header.ensemble.as_ref().map_or(0, |e| e.replicates.len());
    if params.len() != 1 + n_ensemble {
        return Err(invariant(format!("{} parameter payloads for {} networks", params.len(), 1 + n_ensemble)));
    }
    let template = Network::zeros(header.network.clone()).map_err(invariant)?;
    let mut networks = params
        .iter()
        .map(|p| {
            let net = template.with_parameters(p).map_err(invariant)?;
            if net.all_finite() { Ok(net) } else { Err(invariant("non-finite parameter")) }
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    let network = networks.next().expect("full-data network");

    let data = match (data_b64, &header.data_schema, header.data_rows) {
        (Some(b64), Some(schema), Some(rows)) => {
            let csv = B64.decode(b64).map_err(ser)?;
            let table = DataTable::from_csv_with_schema(csv.as_slice(), schema).map_err(invariant)?;
            if table.n_rows() != rows {
                return Err(invariant("embedded data row count differs from header"));
            }
            header.encoder.apply(&table).map_err(invariant)?;
            Some(table)
        }
        (None, None, None) => None,
        _ => return Err(ser("data section and header disagree")),
    };
    if let Some(t) = &data {
        let n = t.n_rows();
        if header.validation_rows.iter().any(|&r| r >= n) || !header.validation_rows.windows(2).all(|w| w[0] < w[1]) {
            return Err(invariant("validation rows out of range or unsorted"));
        }
    }

    let ensemble = match header.ensemble {
        Some(e) => {
            let n_rows = header.data_rows;
            let replicates = e
                .replicates
                .into_iter()
                .zip(networks)
                .map(|(r, network)| {
                    if let Some(n) = n_rows {
                        if r.resample.len() != n || r.resample.iter().any(|&i| i >= n) || r.validation.iter().any(|&i| i >= n) {
                            return Err(invariant(format!("replicate {} resample does not fit the data", r.index)));
                        }
                    }
                    Ok(Replicate { index: r.index, seed: r.seed, resample: r.resample, validation: r.validation, network })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if replicates.len() < 2 {
                return Err(invariant("ensemble with fewer than 2 replicates"));
            }
            Some(BootstrapEnsemble { master_seed: e.master_seed, replicates, failures: e.failures })
        }
        None => None,
    };

    Ok(FittedModel {
        network,
        encoder: header.encoder,
        formula: header.formula,
        config: header.config,
        history: TrainingHistory { epochs: header.epochs, baseline: header.baseline.unwrap_or(f64::NAN) },
        validation_rows: header.validation_rows,
        ensemble,
        stop_reason: header.stop_reason,
        wall_time_secs: 0.0,
        data,
        warnings: header.warnings,
        continuations: header.continuations,
    })
}
