//! Fetching, caching and decompressing `Packages` index files.
//!
//! Indices live under `<mirror>/dists/<release>/<component>/binary-<arch>/Packages.gz`
//! and are cached as `<release>_<component>_<arch>.Packages.gz`. Every
//! analysis entry point also accepts plain local paths, so nothing downstream
//! requires network access.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use flate2::read::MultiGzDecoder;
use sha2::{Digest, Sha256};

pub const DEFAULT_MIRROR: &str = "http://archive.debian.org/debian";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const MAX_REDIRECTS: u32 = 5;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("invalid release spec: {0}")]
    InvalidSpec(String),
    #[error("network error fetching {url}: {message}")]
    Network { url: String, message: String },
    #[error("HTTP status {status} fetching {url}")]
    HttpStatus { url: String, status: u16 },
    #[error("offline, not cached: {url} (expected at {})", path.display())]
    Offline { url: String, path: PathBuf },
    #[error("checksum mismatch for {}: expected {expected}, got {actual}", path.display())]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("gzip decode error at compressed byte offset {offset}: {message}")]
    Decode { offset: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl IngestError {
    /// Transport failures may succeed on a later attempt; everything else
    /// (bad status, bad spec, corrupt data) will not.
    pub fn is_retryable(&self) -> bool {
        matches!(self, IngestError::Network { .. })
    }

    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Recovers a [`IngestError::Decode`] smuggled through an `io::Error`
    /// by [`IndexStream`], or wraps any other I/O failure.
    pub fn from_stream_error(path: &Path, err: io::Error) -> Self {
        if err
            .get_ref()
            .is_some_and(|inner| inner.downcast_ref::<DecodeError>().is_some())
        {
            let inner = err.into_inner().unwrap();
            let decode = inner.downcast::<DecodeError>().unwrap();
            return IngestError::Decode {
                offset: decode.offset,
                message: decode.message,
            };
        }
        IngestError::io(path, err)
    }
}

/// Decode failure carried inside an `io::Error` so that [`IndexStream`] can
/// implement the standard reader traits.
#[derive(Debug)]
pub struct DecodeError {
    pub offset: u64,
    pub message: String,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gzip decode error at compressed byte offset {}: {}",
            self.offset, self.message
        )
    }
}

impl std::error::Error for DecodeError {}

/// Identifies one `Packages` index in a mirror.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleaseSpec {
    pub release_name: String,
    pub architecture: String,
    pub component: String,
    pub mirror_base_url: String,
}

impl ReleaseSpec {
    pub fn new(release: &str, architecture: &str) -> Result<Self, IngestError> {
        let spec = ReleaseSpec {
            release_name: release.to_string(),
            architecture: architecture.to_string(),
            component: "main".to_string(),
            mirror_base_url: DEFAULT_MIRROR.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_component(mut self, component: &str) -> Result<Self, IngestError> {
        self.component = component.to_string();
        self.validate()?;
        Ok(self)
    }

    pub fn with_mirror(mut self, mirror: &str) -> Result<Self, IngestError> {
        self.mirror_base_url = mirror.trim_end_matches('/').to_string();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for (label, value) in [
            ("release name", &self.release_name),
            ("architecture", &self.architecture),
            ("component", &self.component),
        ] {
            if value.is_empty() {
                return Err(IngestError::InvalidSpec(format!("{label} is empty")));
            }
            if value.contains(['/', '\\']) || value.chars().any(char::is_whitespace) {
                return Err(IngestError::InvalidSpec(format!(
                    "{label} {value:?} contains path separators or whitespace"
                )));
            }
        }
        let url = &self.mirror_base_url;
        let rest = url
            .strip_prefix("http://")
            .or_else(|| url.strip_prefix("https://"));
        match rest {
            Some(host) if !host.is_empty() && !host.starts_with('/') => Ok(()),
            _ => Err(IngestError::InvalidSpec(format!(
                "mirror {url:?} is not an absolute http(s) URL"
            ))),
        }
    }

    pub fn index_url(&self) -> String {
        format!(
            "{}/dists/{}/{}/binary-{}/Packages.gz",
            self.mirror_base_url.trim_end_matches('/'),
            self.release_name,
            self.component,
            self.architecture
        )
    }

    pub fn cache_file_name(&self) -> String {
        format!(
            "{}_{}_{}.Packages.gz",
            self.release_name, self.component, self.architecture
        )
    }
}

/// A completed cache entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedIndex {
    pub spec: ReleaseSpec,
    pub local_path: PathBuf,
    pub fetched_at: SystemTime,
    pub byte_size: u64,
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub force_refresh: bool,
    /// Never touch the network; a cache miss becomes [`IngestError::Offline`].
    pub offline: bool,
    pub timeout: Duration,
    /// Lowercase hex SHA-256 the cached file must match, if pinned.
    pub expected_sha256: Option<String>,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            force_refresh: false,
            offline: false,
            timeout: DEFAULT_TIMEOUT,
            expected_sha256: None,
        }
    }
}

/// Looks up a completed cache entry without any network I/O.
pub fn cached_index(spec: &ReleaseSpec, cache_dir: &Path) -> Option<CachedIndex> {
    let path = cache_dir.join(spec.cache_file_name());
    let meta = fs::metadata(&path).ok()?;
    if !meta.is_file() || meta.len() == 0 {
        return None;
    }
    Some(CachedIndex {
        spec: spec.clone(),
        local_path: path,
        fetched_at: meta.modified().unwrap_or(SystemTime::UNIX_EPOCH),
        byte_size: meta.len(),
    })
}

/// Returns the cached index for `spec`, downloading it first on a miss or
/// when `force_refresh` is set.
///
/// Access to one cache key is serialized through a `<key>.lock` file so
/// concurrent fetches never observe a half-written entry.
pub fn fetch_index(
    spec: &ReleaseSpec,
    cache_dir: &Path,
    opts: &FetchOptions,
) -> Result<CachedIndex, IngestError> {
    spec.validate()?;
    if !opts.force_refresh {
        if let Some(hit) = cached_index(spec, cache_dir) {
            verify_checksum(&hit.local_path, opts)?;
            return Ok(hit);
        }
    }
    let url = spec.index_url();
    let path = cache_dir.join(spec.cache_file_name());
    if opts.offline {
        return Err(IngestError::Offline { url, path });
    }

    fs::create_dir_all(cache_dir).map_err(|e| IngestError::io(cache_dir, e))?;
    let lock_path = cache_dir.join(format!("{}.lock", spec.cache_file_name()));
    let lock = File::create(&lock_path).map_err(|e| IngestError::io(&lock_path, e))?;
    lock.lock().map_err(|e| IngestError::io(&lock_path, e))?;

    // Another process may have completed the entry while we waited.
    if !opts.force_refresh {
        if let Some(hit) = cached_index(spec, cache_dir) {
            verify_checksum(&hit.local_path, opts)?;
            return Ok(hit);
        }
    }

    let part = cache_dir.join(format!("{}.part", spec.cache_file_name()));
    download(&url, &part, opts.timeout)?;
    fs::rename(&part, &path).map_err(|e| IngestError::io(&path, e))?;
    drop(lock);

    verify_checksum(&path, opts)?;
    cached_index(spec, cache_dir).ok_or_else(|| {
        IngestError::io(
            &path,
            io::Error::new(io::ErrorKind::UnexpectedEof, "downloaded index is empty"),
        )
    })
}

#[cfg(feature = "fetch")]
fn download(url: &str, dest: &Path, timeout: Duration) -> Result<(), IngestError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .max_redirects(MAX_REDIRECTS)
        .build()
        .into();
    let response = agent.get(url).call().map_err(|err| match err {
        ureq::Error::StatusCode(status) => IngestError::HttpStatus {
            url: url.to_string(),
            status,
        },
        other => IngestError::Network {
            url: url.to_string(),
            message: other.to_string(),
        },
    })?;
    let mut body = response.into_body().into_reader();
    let mut out = File::create(dest).map_err(|e| IngestError::io(dest, e))?;
    io::copy(&mut body, &mut out).map_err(|e| IngestError::Network {
        url: url.to_string(),
        message: e.to_string(),
    })?;
    out.sync_all().map_err(|e| IngestError::io(dest, e))
}

#[cfg(not(feature = "fetch"))]
fn download(url: &str, _dest: &Path, _timeout: Duration) -> Result<(), IngestError> {
    Err(IngestError::Network {
        url: url.to_string(),
        message: "built without the `fetch` feature".to_string(),
    })
}

fn verify_checksum(path: &Path, opts: &FetchOptions) -> Result<(), IngestError> {
    let Some(expected) = &opts.expected_sha256 else {
        return Ok(());
    };
    let actual = sha256_file(path)?;
    if actual.eq_ignore_ascii_case(expected) {
        Ok(())
    } else {
        Err(IngestError::Checksum {
            path: path.to_path_buf(),
            expected: expected.clone(),
            actual,
        })
    }
}

/// Lowercase hex SHA-256 of a file, streamed.
pub fn sha256_file(path: &Path) -> Result<String, IngestError> {
    let mut file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).map_err(|e| IngestError::io(path, e))?;
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

struct CountingReader<R> {
    inner: R,
    consumed: Arc<AtomicU64>,
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.consumed.fetch_add(n as u64, Ordering::Relaxed);
        Ok(n)
    }
}

struct GzipReader<R> {
    decoder: MultiGzDecoder<CountingReader<R>>,
    consumed: Arc<AtomicU64>,
}

impl<R: Read> Read for GzipReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.decoder.read(buf).map_err(|err| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                DecodeError {
                    offset: self.consumed.load(Ordering::Relaxed),
                    message: err.to_string(),
                },
            )
        })
    }
}

/// Streaming decompressed view of an index file.
///
/// Memory use is bounded by the reader buffers regardless of file size.
/// Bytes are handed through unchanged; consumers that need text decode
/// lossily (see [`crate::deb822::parse_packages`]).
pub struct IndexStream {
    inner: Box<dyn BufRead + Send>,
    pub compressed: bool,
}

impl IndexStream {
    pub fn from_reader<R: Read + Send + 'static>(reader: R) -> io::Result<Self> {
        let mut buffered = BufReader::new(reader);
        let head = buffered.fill_buf()?;
        let compressed = head.len() >= 2 && head[..2] == GZIP_MAGIC;
        if compressed {
            let consumed = Arc::new(AtomicU64::new(0));
            let decoder = MultiGzDecoder::new(CountingReader {
                inner: buffered,
                consumed: Arc::clone(&consumed),
            });
            Ok(IndexStream {
                inner: Box::new(BufReader::new(GzipReader { decoder, consumed })),
                compressed,
            })
        } else {
            Ok(IndexStream {
                inner: Box::new(buffered),
                compressed,
            })
        }
    }

    /// Reads the whole stream into a string, replacing invalid UTF-8 with
    /// U+FFFD. Returns the text and the number of lines that needed
    /// replacement.
    pub fn read_to_string_lossy(mut self) -> io::Result<(String, usize)> {
        let mut text = String::new();
        let mut replaced = 0;
        let mut line = Vec::new();
        loop {
            line.clear();
            if self.inner.read_until(b'\n', &mut line)? == 0 {
                break;
            }
            match std::str::from_utf8(&line) {
                Ok(s) => text.push_str(s),
                Err(_) => {
                    replaced += 1;
                    text.push_str(&String::from_utf8_lossy(&line));
                }
            }
        }
        Ok((text, replaced))
    }
}

impl Read for IndexStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf)
    }
}

impl BufRead for IndexStream {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.inner.consume(amt)
    }
}

/// Opens a cached index as a decompressed stream.
pub fn read_index_text(index: &CachedIndex) -> Result<IndexStream, IngestError> {
    open_index_file(&index.local_path)
}

/// Opens any local index file, gzip-compressed or plain.
pub fn open_index_file(path: &Path) -> Result<IndexStream, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    IndexStream::from_reader(file).map_err(|e| IngestError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn gzip(bytes: &[u8]) -> Vec<u8> {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap()
    }

    #[test]
    fn spec_paths() {
        let spec = ReleaseSpec::new("etch", "amd64").unwrap();
        assert_eq!(
            spec.index_url(),
            "http://archive.debian.org/debian/dists/etch/main/binary-amd64/Packages.gz"
        );
        assert_eq!(spec.cache_file_name(), "etch_main_amd64.Packages.gz");
        let spec = spec.with_mirror("https://example.org/debian/").unwrap();
        assert_eq!(
            spec.index_url(),
            "https://example.org/debian/dists/etch/main/binary-amd64/Packages.gz"
        );
    }

    #[test]
    fn spec_validation() {
        assert!(ReleaseSpec::new("", "amd64").is_err());
        assert!(ReleaseSpec::new("etch", "").is_err());
        let spec = ReleaseSpec::new("etch", "amd64").unwrap();
        assert!(spec.clone().with_mirror("ftp://x").is_err());
        assert!(spec.clone().with_mirror("archive.debian.org").is_err());
        assert!(spec.with_component("").is_err());
    }

    #[test]
    fn gzip_round_trip() {
        let data = gzip(b"Package: a\n\n");
        let stream = IndexStream::from_reader(io::Cursor::new(data)).unwrap();
        assert!(stream.compressed);
        let (text, replaced) = stream.read_to_string_lossy().unwrap();
        assert_eq!(text, "Package: a\n\n");
        assert_eq!(replaced, 0);
    }

    #[test]
    fn plain_passthrough() {
        let stream = IndexStream::from_reader(io::Cursor::new(b"Package: b\n".to_vec())).unwrap();
        assert!(!stream.compressed);
        assert_eq!(stream.read_to_string_lossy().unwrap().0, "Package: b\n");
    }

    #[test]
    fn truncated_gzip_is_decode_error() {
        let body = b"Package: a\nDepends: b\n\n".repeat(200);
        let mut data = gzip(&body);
        data.truncate(data.len() / 2);
        let stream = IndexStream::from_reader(io::Cursor::new(data)).unwrap();
        let err = stream.read_to_string_lossy().unwrap_err();
        match IngestError::from_stream_error(Path::new("x"), err) {
            IngestError::Decode { offset, .. } => assert!(offset > 0),
            other => panic!("expected decode error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8_replaced_and_counted() {
        let stream =
            IndexStream::from_reader(io::Cursor::new(b"ok\nbad \xff\xfe\nok\n".to_vec())).unwrap();
        let (text, replaced) = stream.read_to_string_lossy().unwrap();
        assert_eq!(replaced, 1);
        assert!(text.contains('\u{fffd}'));
    }

    #[test]
    fn offline_miss_is_explicit() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ReleaseSpec::new("etch", "amd64").unwrap();
        let opts = FetchOptions {
            offline: true,
            ..FetchOptions::default()
        };
        let err = fetch_index(&spec, dir.path(), &opts).unwrap_err();
        assert!(matches!(err, IngestError::Offline { .. }));
        assert!(!err.is_retryable());
    }

    #[test]
    fn cache_hit_needs_no_network() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ReleaseSpec::new("etch", "amd64").unwrap();
        fs::write(
            dir.path().join(spec.cache_file_name()),
            gzip(b"Package: a\n"),
        )
        .unwrap();
        let opts = FetchOptions {
            offline: true,
            ..FetchOptions::default()
        };
        let a = fetch_index(&spec, dir.path(), &opts).unwrap();
        let b = fetch_index(&spec, dir.path(), &opts).unwrap();
        assert_eq!(a, b);
        let text = read_index_text(&a).unwrap().read_to_string_lossy().unwrap();
        assert_eq!(text.0, "Package: a\n");
    }

    #[test]
    fn checksum_pin() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ReleaseSpec::new("etch", "amd64").unwrap();
        let path = dir.path().join(spec.cache_file_name());
        fs::write(&path, b"abc").unwrap();
        let digest = sha256_file(&path).unwrap();
        assert_eq!(
            digest,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let mut opts = FetchOptions {
            offline: true,
            expected_sha256: Some(digest),
            ..FetchOptions::default()
        };
        assert!(fetch_index(&spec, dir.path(), &opts).is_ok());
        opts.expected_sha256 = Some("00".repeat(32));
        assert!(matches!(
            fetch_index(&spec, dir.path(), &opts),
            Err(IngestError::Checksum { .. })
        ));
    }
}
