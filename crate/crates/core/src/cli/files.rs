//! On-disk formats. Every file is line-delimited JSON whose first line is a
//! header carrying `format` and `format_version`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::measurement::{canonical_order, N_OBSERVABLES, N_QUBITS};
use crate::model::{Architecture, DecoderMode, ModelParams};
use crate::stategen::StateRecord;
use crate::training::{EpochRecord, TrainConfig};

pub const DATASET_FORMAT: &str = "geolatent-dataset";
pub const CHECKPOINT_FORMAT: &str = "geolatent-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_owned).collect())
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable value")
}

fn parse_line<T: for<'de> Deserialize<'de>>(path: &Path, line_no: usize, line: &str) -> Result<T, CliError> {
    serde_json::from_str(line).map_err(|e| {
        CliError::Format(format!("{}:{}: {e}", path.display(), line_no + 1))
    })
}

fn check_format(path: &Path, format: &str, version: u32, want: &str) -> Result<(), CliError> {
    if format != want {
        return Err(CliError::Format(format!(
            "{}: expected a {want} file, found {format:?}",
            path.display()
        )));
    }
    if version != FORMAT_VERSION {
        return Err(CliError::Format(format!(
            "{}: unsupported format version {version} (this build reads {FORMAT_VERSION})",
            path.display()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub format_version: u32,
    pub n_qubits: usize,
    pub seed: u64,
    pub stream_offset: u64,
    pub purity_range: [f64; 2],
    pub pauli_order: Vec<String>,
    pub n_records: usize,
}

impl DatasetHeader {
    pub fn new(seed: u64, stream_offset: u64, purity_range: [f64; 2], n_records: usize) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            format_version: FORMAT_VERSION,
            n_qubits: N_QUBITS,
            seed,
            stream_offset,
            purity_range,
            pauli_order: canonical_order(),
            n_records,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<StateRecord>,
}

pub fn dataset_to_string(ds: &Dataset) -> String {
    let mut out = json_line(&ds.header);
    out.push('\n');
    for r in &ds.records {
        out.push_str(&json_line(r));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<(), CliError> {
    write_atomic(path, dataset_to_string(ds).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let lines = read_lines(path)?;
    let Some(first) = lines.first() else {
        return Err(CliError::Format(format!("{}: empty file", path.display())));
    };
    let header: DatasetHeader = parse_line(path, 0, first)?;
    check_format(path, &header.format, header.format_version, DATASET_FORMAT)?;
    if header.n_qubits != N_QUBITS {
        return Err(CliError::Format(format!(
            "{}: {} qubits in header, this build handles {N_QUBITS}",
            path.display(),
            header.n_qubits
        )));
    }
    if header.pauli_order != canonical_order() {
        return Err(CliError::Format(format!(
            "{}: Pauli order {:?} differs from {:?}",
            path.display(),
            header.pauli_order,
            canonical_order()
        )));
    }
    let records = lines[1..]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let r: StateRecord = parse_line(path, i + 1, l)?;
            if r.pauli.0.len() != N_OBSERVABLES {
                return Err(CliError::Format(format!(
                    "{}:{}: {} expectation values, expected {N_OBSERVABLES}",
                    path.display(),
                    i + 2,
                    r.pauli.0.len()
                )));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if records.len() != header.n_records {
        return Err(CliError::Format(format!(
            "{}: header announces {} records, found {}",
            path.display(),
            header.n_records,
            records.len()
        )));
    }
    Ok(Dataset { header, records })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub format_version: u32,
    pub mode: DecoderMode,
    pub architecture: Architecture,
    pub n_params: usize,
    /// Order of the flattened parameter vector.
    pub layout: Vec<String>,
    pub config: TrainConfig,
    pub best: Option<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ParamsLine {
    params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, config: TrainConfig, best: Option<EpochRecord>) -> Self {
        let layout = ["W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4"]
            .map(String::from)
            .to_vec();
        Self {
            header: CheckpointHeader {
                format: CHECKPOINT_FORMAT.into(),
                format_version: FORMAT_VERSION,
                mode: params.mode,
                architecture: params.architecture(),
                n_params: params.n_params(),
                layout,
                config,
                best,
            },
            params,
        }
    }
}

pub fn checkpoint_to_string(cp: &Checkpoint) -> String {
    format!(
        "{}\n{}\n",
        json_line(&cp.header),
        json_line(&ParamsLine {
            params: cp.params.flatten()
        })
    )
}

pub fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<(), CliError> {
    write_atomic(path, checkpoint_to_string(cp).as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let lines = read_lines(path)?;
    if lines.len() != 2 {
        return Err(CliError::Format(format!(
            "{}: expected a header line and a parameter line, found {} lines",
            path.display(),
            lines.len()
        )));
    }
    let header: CheckpointHeader = parse_line(path, 0, &lines[0])?;
    check_format(path, &header.format, header.format_version, CHECKPOINT_FORMAT)?;
    let flat: ParamsLine = parse_line(path, 1, &lines[1])?;
    let params = ModelParams::unflatten(header.architecture, header.mode, &flat.params)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok(Checkpoint { header, params })
}

/// Serializes rows as CSV with a header line taken from the field names.
pub fn csv_bytes<T: Serialize>(rows: &[T], empty_header: &[&str]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(empty_header).map_err(CliError::csv)?;
    }
    for r in rows {
        w.serialize(r).map_err(CliError::csv)?;
    }
    w.into_inner().map_err(|e| CliError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;
    use crate::qcore::purity;
    use crate::rng;
    use crate::stategen::sample_dataset;

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let records = sample_dataset(14, (0.85, 0.95), 3, 0).unwrap();
        let ds = Dataset {
            header: DatasetHeader::new(3, 0, [0.85, 0.95], records.len()),
            records,
        };
        save_dataset(&path, &ds).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
        for r in &back.records {
            assert!((purity(&r.rho) - r.purity).abs() <= 1e-12);
        }
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("\"data\":[["));
    }

    #[test]
    fn header_mismatches_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let records = sample_dataset(2, (0.85, 0.95), 3, 0).unwrap();
        let mut ds = Dataset {
            header: DatasetHeader::new(3, 0, [0.85, 0.95], 2),
            records,
        };
        ds.header.pauli_order.swap(0, 1);
        save_dataset(&path, &ds).unwrap();
        assert!(matches!(load_dataset(&path), Err(CliError::Format(_))));
        ds.header.pauli_order.swap(0, 1);
        ds.header.n_qubits = 3;
        save_dataset(&path, &ds).unwrap();
        assert!(matches!(load_dataset(&path), Err(CliError::Format(_))));
        ds.header.n_qubits = 2;
        ds.header.format_version = 9;
        save_dataset(&path, &ds).unwrap();
        assert!(matches!(load_dataset(&path), Err(CliError::Format(_))));
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let arch = Architecture {
            input: 15,
            hidden1: 8,
            hidden2: 6,
            latent: 4,
        };
        let p = init_params(&mut rng::stream(1, 0), DecoderMode::Corrected, arch);
        let cp = Checkpoint::new(p, TrainConfig::default(), None);
        save_checkpoint(&path, &cp).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, cp);
        let a: Vec<u64> = cp.params.flatten().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.params.flatten().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        save_checkpoint(&path, &back).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), checkpoint_to_string(&cp));
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
