//! CSV record and density files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crossmf_core::meanfield::{DensityField, Species};
use crossmf_core::SimulationRecord;

pub const RECORD_HEADER: &str = "t,S,ED";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// 17 significant digits, independent of locale.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_record(rec: &SimulationRecord) -> String {
    let mut out = String::with_capacity(64 * (rec.len() + 1));
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for k in 0..rec.len() {
        out.push_str(&fmt17(rec.t[k]));
        out.push(',');
        out.push_str(&fmt17(rec.s[k]));
        out.push(',');
        out.push_str(&fmt17(rec.ed[k]));
        out.push('\n');
    }
    out
}

pub fn write_record(rec: &SimulationRecord, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, format_record(rec)).map_err(io_err(path))
}

pub fn read_record(path: &Path) -> Result<SimulationRecord, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let perr = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rec = SimulationRecord::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if i == 0 {
            if line.trim_end() != RECORD_HEADER {
                return Err(perr(1, format!("expected header {RECORD_HEADER:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| perr(i + 1, format!("{e}")))?;
        let [t, s, ed] = cols[..] else {
            return Err(perr(
                i + 1,
                format!("expected 3 columns, got {}", cols.len()),
            ));
        };
        rec.t.push(t);
        rec.s.push(s);
        rec.ed.push(ed);
    }
    Ok(rec)
}

/// One species as CSV: row `j` holds the herding-pressure cell `j`, column
/// `i` the memory cell `i`. The first line lists the memory cell centres.
pub fn write_density(field: &DensityField, sp: Species, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mesh = &field.mesh;
    let v = field.species(sp);
    let header: Vec<String> = mesh.m_centers().iter().map(|&m| fmt17(m)).collect();
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for j in 0..mesh.n_c() {
        let row: Vec<String> = (0..mesh.n_m())
            .map(|i| fmt17(v[mesh.index(i, j)]))
            .collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
