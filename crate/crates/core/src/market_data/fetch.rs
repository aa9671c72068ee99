use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `<cache_dir>/<sha256-of-url>.csv`
pub fn cache_path_for(url: &str, cache_dir: impl AsRef<Path>) -> PathBuf {
    let digest = hex::encode(Sha256::digest(url.as_bytes()));
    cache_dir.as_ref().join(format!("{digest}.csv"))
}

/// Download `url` into the cache unless it is already there.
///
/// Alongside the CSV a `<name>.csv.sha256` file records the checksum of the
/// downloaded bytes.
pub fn fetch_dataset(url: &str, cache_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let cache_dir = cache_dir.as_ref();
    let target = cache_path_for(url, cache_dir);
    if target.is_file() {
        log::debug!("cache hit for {url}: {}", target.display());
        return Ok(target);
    }

    let fetch_err = |message: String| Error::Fetch {
        url: url.to_string(),
        message,
    };
    let response = ureq::get(url).call().map_err(|e| fetch_err(e.to_string()))?;
    let mut body = Vec::new();
    response
        .into_body()
        .into_reader()
        .read_to_end(&mut body)
        .map_err(|e| fetch_err(e.to_string()))?;

    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let partial = target.with_extension("csv.partial");
    std::fs::write(&partial, &body).map_err(|e| Error::io(&partial, e))?;
    std::fs::rename(&partial, &target).map_err(|e| Error::io(&target, e))?;

    let checksum = hex::encode(Sha256::digest(&body));
    let sidecar = target.with_extension("csv.sha256");
    std::fs::write(&sidecar, format!("{checksum}\n")).map_err(|e| Error::io(&sidecar, e))?;
    log::info!("fetched {url} ({} bytes, sha256 {checksum})", body.len());
    Ok(target)
}
