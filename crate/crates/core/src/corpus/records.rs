//! Document files: a sequence of records, each a little-endian `u32` byte
//! length followed by that many bytes of UTF-8.

use std::fs;
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub const RECORD_EXTENSION: &str = "rec";

pub fn encode_records<S: AsRef<str>>(docs: &[S]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for d in docs {
        let bytes = d.as_ref().as_bytes();
        let len = u32::try_from(bytes.len()).map_err(|_| Error::input("document longer than 4 GiB"))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(bytes);
    }
    Ok(out)
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<String>> {
    let mut docs = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(Error::input("truncated record header"));
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(Error::input(format!("record {} truncated", docs.len())));
        }
        let text = std::str::from_utf8(&rest[..len])
            .map_err(|e| Error::input(format!("record {} is not UTF-8: {e}", docs.len())))?;
        docs.push(text.to_string());
        rest = &rest[len..];
    }
    Ok(docs)
}

pub fn write_records<S: AsRef<str>>(path: &Path, docs: &[S]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).at(parent)?;
    }
    fs::write(path, encode_records(docs)?).at(path)
}

pub fn read_records(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).at(path)?;
    decode_records(&bytes).map_err(|e| match e {
        Error::Input(m) => Error::input(format!("{}: {m}", path.display())),
        other => other,
    })
}
