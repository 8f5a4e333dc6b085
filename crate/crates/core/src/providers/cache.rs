use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable overriding the cache root.
pub const CACHE_DIR_ENV: &str = "SEMAFFINITY_CACHE_DIR";

const MAGIC: &[u8; 6] = b"SAEMB1";
const RECORD_EXT: &str = "emb";

/// Identity of one cached embedding: the model and the byte-exact word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub model_id: String,
    pub word: String,
}

impl CacheKey {
    pub fn new(model_id: &str, word: &str) -> Self {
        CacheKey {
            model_id: model_id.to_owned(),
            word: word.to_owned(),
        }
    }

    /// Hex SHA-256 over the length-prefixed model id followed by the word.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.model_id.len() as u64).to_le_bytes());
        h.update(self.model_id.as_bytes());
        h.update(self.word.as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RecordMeta {
    model_id: String,
    word: String,
    provider: String,
    fetched_at: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheRecord {
    pub model_id: String,
    pub word: String,
    pub provider: String,
    pub fetched_at: String,
    pub vector: Vec<f32>,
}

impl CacheRecord {
    /// Layout: magic, u32 LE dimension, dimension × f32 LE, u32 LE metadata
    /// length, metadata JSON.
    pub fn encode(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&RecordMeta {
            model_id: self.model_id.clone(),
            word: self.word.clone(),
            provider: self.provider.clone(),
            fetched_at: self.fetched_at.clone(),
        })
        .expect("metadata serializes");
        let mut out = Vec::with_capacity(MAGIC.len() + 8 + 4 * self.vector.len() + meta.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.vector.len() as u32).to_le_bytes());
        for x in &self.vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or("bad magic")?;
        let (dim, rest) = take_u32(rest)?;
        let dim = dim as usize;
        if rest.len() < dim * 4 {
            return Err("truncated vector".into());
        }
        let (vec_bytes, rest) = rest.split_at(dim * 4);
        let vector = vec_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let (meta_len, rest) = take_u32(rest)?;
        if rest.len() != meta_len as usize {
            return Err("metadata length mismatch".into());
        }
        let meta: RecordMeta = serde_json::from_slice(rest).map_err(|e| e.to_string())?;
        Ok(CacheRecord {
            model_id: meta.model_id,
            word: meta.word,
            provider: meta.provider,
            fetched_at: meta.fetched_at,
            vector,
        })
    }
}

fn take_u32(bytes: &[u8]) -> std::result::Result<(u32, &[u8]), String> {
    if bytes.len() < 4 {
        return Err("truncated header".into());
    }
    let (head, rest) = bytes.split_at(4);
    Ok((
        u32::from_le_bytes([head[0], head[1], head[2], head[3]]),
        rest,
    ))
}

/// Summary of one record, for `cache list`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CacheEntryInfo {
    pub model_id: String,
    pub word: String,
    pub dimension: usize,
    pub provider: String,
    pub fetched_at: String,
}

/// Content-addressed per-word store: `<root>/<aa>/<sha256>.emb`.
///
/// Writes go to a temporary file in the target directory and are renamed
/// into place, so concurrent writers never leave a torn record.
#[derive(Clone, Debug)]
pub struct EmbeddingCache {
    root: PathBuf,
}

impl EmbeddingCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        EmbeddingCache { root: root.into() }
    }

    /// Uses `explicit` if given, else `$SEMAFFINITY_CACHE_DIR`, else
    /// `.semaffinity-cache` in the working directory.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        let root = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".semaffinity-cache"));
        EmbeddingCache::new(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        let digest = key.digest();
        self.root
            .join(&digest[..2])
            .join(format!("{digest}.{RECORD_EXT}"))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<Vec<f32>>> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let record = CacheRecord::decode(&bytes).map_err(|message| Error::CorruptCache {
            path: path.clone(),
            message,
        })?;
        if record.model_id != key.model_id || record.word != key.word {
            return Err(Error::CorruptCache {
                path,
                message: "record identity does not match its key".into(),
            });
        }
        Ok(Some(record.vector))
    }

    pub fn put(&self, key: &CacheKey, vector: &[f32], provider: &str) -> Result<()> {
        let path = self.path_for(key);
        let dir = path.parent().expect("record path has a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let record = CacheRecord {
            model_id: key.model_id.clone(),
            word: key.word.clone(),
            provider: provider.to_owned(),
            fetched_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            vector: vector.to_vec(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(&record.encode())
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }

    fn record_paths(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let shards = match fs::read_dir(&self.root) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(Error::io(&self.root, e)),
        };
        for shard in shards {
            let shard = shard.map_err(|e| Error::io(&self.root, e))?.path();
            if !shard.is_dir() {
                continue;
            }
            for file in fs::read_dir(&shard).map_err(|e| Error::io(&shard, e))? {
                let file = file.map_err(|e| Error::io(&shard, e))?.path();
                if file.extension().is_some_and(|ext| ext == RECORD_EXT) {
                    out.push(file);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn entries(&self) -> Result<Vec<CacheEntryInfo>> {
        let mut out = Vec::new();
        for path in self.record_paths()? {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let record = CacheRecord::decode(&bytes).map_err(|message| Error::CorruptCache {
                path: path.clone(),
                message,
            })?;
            out.push(CacheEntryInfo {
                model_id: record.model_id,
                word: record.word,
                dimension: record.vector.len(),
                provider: record.provider,
                fetched_at: record.fetched_at,
            });
        }
        out.sort_by(|a, b| (&a.model_id, &a.word).cmp(&(&b.model_id, &b.word)));
        Ok(out)
    }

    /// Removes records, optionally only those of one model. Returns the
    /// number removed.
    pub fn clear(&self, model_id: Option<&str>) -> Result<usize> {
        let mut removed = 0;
        for path in self.record_paths()? {
            if let Some(model) = model_id {
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                match CacheRecord::decode(&bytes) {
                    Ok(r) if r.model_id == model => {}
                    _ => continue,
                }
            }
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            removed += 1;
        }
        Ok(removed)
    }
}
