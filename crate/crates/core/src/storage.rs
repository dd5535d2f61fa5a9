//! Shared manifest + raw little-endian array files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size and checksum of one binary payload, as recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub crc32c: u32,
}

pub(crate) fn encode_f64(values: &[f64], dtype: &str) -> Result<Vec<u8>> {
    match dtype {
        "f64le" => Ok(values.iter().flat_map(|v| v.to_le_bytes()).collect()),
        "f32le" => Ok(values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()),
        other => Err(Error::validation(format!("unsupported dtype {other}"))),
    }
}

pub(crate) fn dtype_width(dtype: &str) -> Option<usize> {
    match dtype {
        "f64le" => Some(8),
        "f32le" => Some(4),
        _ => None,
    }
}

pub(crate) fn decode_f64(bytes: &[u8], dtype: &str) -> Vec<f64> {
    match dtype {
        "f64le" => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        _ => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    }
}

/// Writes `bytes` to `dir/name` and returns its manifest entry.
pub(crate) fn write_blob(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    fs::write(dir.join(name), bytes)?;
    Ok(FileEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        crc32c: crc32c::crc32c(bytes),
    })
}

/// Reads `dir/<entry.name>`, checking the expected length and checksum.
pub(crate) fn read_blob(dir: &Path, entry: &FileEntry, expected_bytes: u64) -> Result<Vec<u8>> {
    let path = dir.join(&entry.name);
    if entry.bytes != expected_bytes {
        return Err(Error::format(
            dir.join("manifest"),
            &entry.name,
            format!("manifest declares {} bytes, counts imply {expected_bytes}", entry.bytes),
        ));
    }
    let bytes = fs::read(&path)?;
    if bytes.len() as u64 != expected_bytes {
        return Err(Error::format(
            &path,
            &entry.name,
            format!("file has {} bytes, expected {expected_bytes} (truncated or padded)", bytes.len()),
        ));
    }
    let crc = crc32c::crc32c(&bytes);
    if crc != entry.crc32c {
        return Err(Error::format(
            &path,
            &entry.name,
            format!("checksum mismatch: crc32c {crc:#010x}, manifest {:#010x}", entry.crc32c),
        ));
    }
    Ok(bytes)
}

pub(crate) fn find_entry<'a>(entries: &'a [FileEntry], name: &str, manifest: &Path) -> Result<&'a FileEntry> {
    entries
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::format(manifest, "files", format!("missing entry for {name}")))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Parses a manifest, first checking `magic` and `schema_version` so that
/// foreign or outdated files produce errors naming those fields.
pub(crate) fn read_manifest<T: for<'de> Deserialize<'de>>(path: &Path, magic: &str, schema_version: u32) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::format(path, "manifest", e.to_string()))?;
    match raw.get("magic").and_then(|v| v.as_str()) {
        Some(m) if m == magic => {}
        other => {
            return Err(Error::format(
                path,
                "magic",
                format!("expected {magic:?}, found {:?}", other.unwrap_or("<missing>")),
            ))
        }
    }
    match raw.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == schema_version as u64 => {}
        other => {
            return Err(Error::format(
                path,
                "schema_version",
                format!("expected {schema_version}, found {other:?}"),
            ))
        }
    }
    serde_json::from_value(raw).map_err(|e| Error::format(path, "manifest", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let values = [1.5, -2.25, f64::MIN_POSITIVE, 1e300];
        let bytes = encode_f64(&values, "f64le").unwrap();
        let entry = write_blob(dir.path(), "x.bin", &bytes).unwrap();
        let back = read_blob(dir.path(), &entry, 32).unwrap();
        assert_eq!(decode_f64(&back, "f64le"), values);

        assert!(read_blob(dir.path(), &entry, 24).is_err());
        let mut corrupt = bytes.clone();
        corrupt[3] ^= 0xff;
        fs::write(dir.path().join("x.bin"), &corrupt).unwrap();
        let err = read_blob(dir.path(), &entry, 32).unwrap_err();
        assert!(err.to_string().contains("checksum"));
        fs::write(dir.path().join("x.bin"), &bytes[..16]).unwrap();
        assert!(read_blob(dir.path(), &entry, 32).unwrap_err().to_string().contains("truncated"));
    }
}
