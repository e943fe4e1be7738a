//! Dataset file formats: the "IAAD" binary dump and plain CSV.
//!
//! Binary layout: magic `IAAD`, u32 version = 1, u64 N, u32 D, then N*D
//! little-endian f32 values row-major, then N little-endian u32 labels.
//! CSV rows carry D real columns followed by one integer label column.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"IAAD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv { header: bool },
}

impl Format {
    /// Infer from the file extension: `.csv` is CSV, everything else binary.
    pub fn infer(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv { header: false },
            _ => Format::Binary,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    match format {
        Format::Binary => load_binary(path),
        Format::Csv { header } => load_csv(path, header),
    }
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Binary => save_binary(dataset, path),
        Format::Csv { .. } => save_csv(dataset, path),
    }
}

fn stem_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string()
}

fn load_binary(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| format_err(path, "truncated header"))?;
    if &magic != MAGIC {
        return Err(format_err(path, "bad magic, not an IAAD file"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| format_err(path, "truncated header"))?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)
        .map_err(|_| format_err(path, "truncated header"))?;
    let n = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u32buf)
        .map_err(|_| format_err(path, "truncated header"))?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    if n == 0 || dim == 0 {
        return Err(format_err(path, "empty dataset (N or D is zero)"));
    }

    let mut raw = vec![0u8; n * dim * 4];
    r.read_exact(&mut raw)
        .map_err(|_| format_err(path, "truncated value block"))?;
    let mut values = Vec::with_capacity(n * dim);
    for chunk in raw.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(format_err(path, "non-finite value in data block"));
        }
        values.push(v as f64);
    }

    let mut raw_labels = vec![0u8; n * 4];
    r.read_exact(&mut raw_labels)
        .map_err(|_| format_err(path, "truncated label block"))?;
    let labels: Vec<u32> = raw_labels
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    Dataset::new_raw(stem_name(path), dim, values, labels)
}

fn save_binary(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    write(MAGIC)?;
    write(&VERSION.to_le_bytes())?;
    write(&(dataset.len() as u64).to_le_bytes())?;
    write(&(dataset.dim() as u32).to_le_bytes())?;
    for &v in dataset.values() {
        write(&(v as f32).to_le_bytes())?;
    }
    for &label in dataset.labels() {
        write(&label.to_le_bytes())?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn load_csv(path: &Path, header: bool) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    let skip = usize::from(header);
    for (lineno, line) in reader.lines().enumerate().skip(skip) {
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(format_err(
                path,
                format!("line {}: need at least one value and a label", lineno + 1),
            ));
        }
        let row_dim = fields.len() - 1;
        match dim {
            None => dim = Some(row_dim),
            Some(d) if d != row_dim => {
                return Err(format_err(
                    path,
                    format!("line {}: expected {} columns, got {}", lineno + 1, d + 1, fields.len()),
                ))
            }
            _ => {}
        }
        for field in &fields[..row_dim] {
            let v: f32 = field.parse().map_err(|_| {
                format_err(path, format!("line {}: bad number {:?}", lineno + 1, field))
            })?;
            if !v.is_finite() {
                return Err(format_err(path, format!("line {}: non-finite value", lineno + 1)));
            }
            values.push(v as f64);
        }
        let label: u32 = fields[row_dim].parse().map_err(|_| {
            format_err(path, format!("line {}: bad label {:?}", lineno + 1, fields[row_dim]))
        })?;
        labels.push(label);
    }
    let dim = dim.ok_or_else(|| format_err(path, "no data rows"))?;
    Dataset::new_raw(stem_name(path), dim, values, labels)
}

fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..dataset.len() {
        let mut line = String::new();
        for &v in dataset.row(i) {
            // Shortest round-trip representation of the stored f32.
            line.push_str(&format!("{}", v as f32));
            line.push(',');
        }
        line.push_str(&dataset.labels()[i].to_string());
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
