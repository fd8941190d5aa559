use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use zip::ZipArchive;

use super::IngestError;

const CONTAINER_ENTRY: &str = "META-INF/container.xml";

/// Reads a score file, unpacking `.mxl` archives to their rootfile.
pub fn open_container(path: &Path) -> Result<Vec<u8>, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let is_mxl = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mxl"));
    if is_mxl {
        extract_rootfile(&bytes)
    } else {
        Ok(bytes)
    }
}

/// Returns the bytes of the first `<rootfile>` named in the archive's
/// `META-INF/container.xml`.
pub fn extract_rootfile(archive_bytes: &[u8]) -> Result<Vec<u8>, IngestError> {
    let mut archive = ZipArchive::new(Cursor::new(archive_bytes))
        .map_err(|e| IngestError::Container(format!("not a readable archive: {e}")))?;

    let manifest = read_entry(&mut archive, CONTAINER_ENTRY)?;
    let manifest = String::from_utf8(manifest)
        .map_err(|_| IngestError::Container(format!("{CONTAINER_ENTRY} is not UTF-8")))?;
    let doc = roxmltree::Document::parse(&manifest)
        .map_err(|e| IngestError::Container(format!("{CONTAINER_ENTRY}: {e}")))?;
    let rootfile = doc
        .descendants()
        .find(|n| n.has_tag_name("rootfile"))
        .and_then(|n| n.attribute("full-path"))
        .ok_or_else(|| {
            IngestError::Container(format!("{CONTAINER_ENTRY} names no rootfile"))
        })?
        .to_string();

    read_entry(&mut archive, &rootfile)
}

fn read_entry(
    archive: &mut ZipArchive<Cursor<&[u8]>>,
    name: &str,
) -> Result<Vec<u8>, IngestError> {
    let mut entry = archive
        .by_name(name)
        .map_err(|_| IngestError::Container(format!("archive has no entry `{name}`")))?;
    let mut buf = Vec::new();
    entry
        .read_to_end(&mut buf)
        .map_err(|e| IngestError::Container(format!("reading `{name}`: {e}")))?;
    Ok(buf)
}
