//! Dataset files: LGST tensors with JSON sidecars, CSV targets and onsets.
//!
//! LGST layout: `b"LGST"`, a version byte (1), a dimension-count byte, one
//! little-endian u64 per dimension, then the values as little-endian f64 in
//! row-major order.

use std::io::Write;
use std::path::{Path, PathBuf};

use lagsynth::features::{Side, SpectralFeatureTensor, Trial};
use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"LGST";
pub const VERSION: u8 = 1;

pub fn encode_lgst(array: &ArrayD<f64>) -> Vec<u8> {
    let shape = array.shape();
    let mut out = Vec::with_capacity(6 + 8 * shape.len() + 8 * array.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in array.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_lgst(bytes: &[u8]) -> Result<ArrayD<f64>, String> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err("not an LGST file (bad magic)".into());
    }
    if bytes[4] != VERSION {
        return Err(format!("unsupported LGST version {}", bytes[4]));
    }
    let ndim = bytes[5] as usize;
    let header = 6 + 8 * ndim;
    if bytes.len() < header {
        return Err("truncated LGST header".into());
    }
    let shape: Vec<usize> = (0..ndim)
        .map(|i| {
            let s = 6 + 8 * i;
            u64::from_le_bytes(bytes[s..s + 8].try_into().expect("8 bytes")) as usize
        })
        .collect();
    let count = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("LGST shape overflows")?;
    if bytes.len() != header + 8 * count {
        return Err(format!(
            "LGST payload holds {} bytes, shape {:?} needs {}",
            bytes.len() - header,
            shape,
            8 * count
        ));
    }
    let values = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ArrayD::from_shape_vec(IxDyn(&shape), values).map_err(|e| e.to_string())
}

/// Metadata stored next to a feature tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSidecar {
    pub kind: String,
    /// `[T, C, F]`.
    pub shape: Vec<usize>,
    pub sample_rate: f64,
    pub channel_labels: Vec<String>,
    pub freqs: Vec<f64>,
    pub run_boundaries: Vec<usize>,
}

pub const FEATURE_KIND: &str = "spectral_features";

pub fn sidecar_path(tensor: &Path) -> PathBuf {
    tensor.with_extension("json")
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::MissingInput {
        path: path.to_path_buf(),
        source,
    })
}

/// Write through a temporary file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let err = |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_features(path: &Path, tensor: &SpectralFeatureTensor) -> CliResult<()> {
    atomic_write(path, &encode_lgst(&tensor.data.clone().into_dyn()))?;
    let sidecar = FeatureSidecar {
        kind: FEATURE_KIND.into(),
        shape: tensor.data.shape().to_vec(),
        sample_rate: tensor.sample_rate,
        channel_labels: tensor.channel_labels.clone(),
        freqs: tensor.freqs.clone(),
        run_boundaries: tensor.run_boundaries.clone(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn read_features(path: &Path) -> CliResult<SpectralFeatureTensor> {
    let bad = |msg: String| CliError::usage(format!("{}: {msg}", path.display()));
    let array = decode_lgst(&read_bytes(path)?).map_err(bad)?;
    let sidecar: FeatureSidecar = read_json(&sidecar_path(path))?;
    if sidecar.kind != FEATURE_KIND {
        return Err(bad(format!("sidecar kind `{}`, expected `{FEATURE_KIND}`", sidecar.kind)));
    }
    if array.shape() != sidecar.shape.as_slice() {
        return Err(bad(format!("tensor shape {:?} differs from sidecar {:?}", array.shape(), sidecar.shape)));
    }
    let data = array.into_dimensionality::<ndarray::Ix3>().map_err(|_| bad("feature tensors are 3-D".into()))?;
    SpectralFeatureTensor::new(
        data,
        sidecar.sample_rate,
        sidecar.channel_labels,
        sidecar.freqs,
        sidecar.run_boundaries,
    )
    .map_err(|e| bad(e.to_string()))
}

const TARGET_HEADER: &str = "bold";

pub fn encode_target(y: &[f64]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([TARGET_HEADER]).expect("in-memory write");
    for v in y {
        w.serialize(v).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn read_target(path: &Path) -> CliResult<Vec<f64>> {
    let bytes = read_bytes(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<f64>().enumerate() {
        let v = rec.map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), i + 1)))?;
        if !v.is_finite() {
            return Err(CliError::usage(format!("{} row {}: non-finite value", path.display(), i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct OnsetRow {
    time: f64,
    side: Side,
}

pub fn encode_onsets(onsets: &[Trial]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in onsets {
        w.serialize(OnsetRow { time: t.time, side: t.side }).expect("in-memory write");
    }
    if onsets.is_empty() {
        w.write_record(["time", "side"]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn read_onsets(path: &Path) -> CliResult<Vec<Trial>> {
    let bytes = read_bytes(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    r.deserialize::<OnsetRow>()
        .enumerate()
        .map(|(i, rec)| {
            rec.map(|o| Trial { time: o.time, side: o.side })
                .map_err(|e| CliError::usage(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}
