use std::fs;
use std::path::{Path, PathBuf};

use modernzh_core::corpus::{read_records, RECORD_EXTENSION};
use modernzh_core::error::IoContext;
use modernzh_core::{Error, Result};

pub fn is_record_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == RECORD_EXTENSION)
}

/// Record files directly inside `dir`, sorted by name.
pub fn record_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .at(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_record_file(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::input(format!("no .{RECORD_EXTENSION} files in {}", dir.display())));
    }
    Ok(files)
}

/// Non-empty lines of a text file.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)
        .at(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

/// Documents from a record file, a directory of record files, or a text
/// file with one document per line.
pub fn read_docs(path: &Path) -> Result<Vec<String>> {
    if path.is_dir() {
        let mut docs = Vec::new();
        for f in record_files(path)? {
            docs.extend(read_records(&f)?);
        }
        Ok(docs)
    } else if is_record_file(path) {
        read_records(path)
    } else {
        read_lines(path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).at(parent)?;
    }
    fs::write(path, text).at(path)
}

/// Writes to `path` or, without one, prints to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::config(format!("invalid {what} `{x}`")))
        })
        .collect()
}
