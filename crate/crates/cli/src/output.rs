//! Atomic CSV and JSON emission.
//!
//! Files are written to a temporary file in the destination directory and
//! renamed into place, so a reader never sees a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use flatlab::{Error, Result};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::RunConfig;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_err(&path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(&path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(&path, e))?;
    tmp.persist(&path).map_err(|e| io_err(&path, e.error))?;
    Ok(path)
}

/// Round-trip float formatting: 17 significant digits.
pub fn num(x: f64) -> String {
    // Negative zero prints as zero.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// A CSV table built row by row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Table {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header.iter().map(|s| s.as_ref()))
            .expect("writing to memory");
        Table { writer }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.writer
            .write_record(fields.iter().map(|s| s.as_ref()))
            .expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("writing to memory")
    }

    pub fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        write_atomic(dir, name, &self.into_bytes())
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    result: &'a T,
}

/// Writes `{"config": ..., "result": ...}`, pretty-printed.
pub fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, result: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(&Envelope { config: cfg, result })
        .map_err(|e| Error::Numerical(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    write_atomic(&cfg.out_dir, name, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        let p = write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn table_has_header() {
        let mut t = Table::new(&["k", "r"]);
        t.row(&["0".to_string(), num(1.0)]);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "k,r\n0,1.0000000000000000e0\n");
    }
}
