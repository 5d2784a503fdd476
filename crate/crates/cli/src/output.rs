//! Atomic artifact writing: write a sibling temp file, then rename.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, CliResult};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("{}: {e}", path.display()))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// Streams into a temp file through `fill`, then renames onto `path`.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<PathBuf> {
    let tmp = temp_path(path);
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        let file = w.into_inner().map_err(|e| io_err(&tmp, e.error()))?;
        file.sync_all().map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| io_err(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map(|()| path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<PathBuf> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| io_err(path, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))
    })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
    write_atomic(path, |w| {
        writeln!(w, "{}", header.join(",")).map_err(|e| io_err(path, e))?;
        for r in rows {
            writeln!(w, "{}", r.join(",")).map_err(|e| io_err(path, e))?;
        }
        Ok(())
    })
}
