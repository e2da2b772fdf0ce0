//! The `SGV1` variation cache file.
//!
//! Layout, all integers little-endian: magic `SGV1`, task id (u16), master
//! seed (u64), record count (u32), then per record the variation index
//! (u32), the params text length (u32) and text, and the scene encoded with
//! f32 reals.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use super::codec::{read_scene, write_scene, Precision, Reader, Writer};
use super::{generate, Params, TaskVariation, VARIATIONS};
use crate::error::{Error, Result};
use crate::tasks::{ParticleScale, TaskKind};

pub const CACHE_MAGIC: &[u8; 4] = b"SGV1";

/// Variations of one task generated from one master seed, sorted by index.
#[derive(Clone, Debug, PartialEq)]
pub struct Cache {
    pub kind: TaskKind,
    pub seed: u64,
    pub variations: Vec<TaskVariation>,
}

impl Cache {
    pub fn get(&self, index: usize) -> Result<&TaskVariation> {
        if index >= VARIATIONS {
            return Err(Error::IndexOutOfRange(index));
        }
        self.variations
            .binary_search_by_key(&index, |v| v.index)
            .map(|i| &self.variations[i])
            .map_err(|_| Error::MissingVariation {
                task: self.kind.name(),
                index,
            })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.variations.iter().map(|v| v.index).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(Precision::F32);
        w.bytes(CACHE_MAGIC);
        w.u16(self.kind.id());
        w.u64(self.seed);
        w.len(self.variations.len())?;
        for v in &self.variations {
            w.len(v.index)?;
            let text = v.params.to_text();
            w.len(text.len())?;
            w.bytes(text.as_bytes());
            write_scene(&mut w, &v.scene)?;
        }
        Ok(w.buf)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Cache> {
        let mut r = Reader::new(data, Precision::F32);
        if r.take(4)? != CACHE_MAGIC {
            return Err(Error::Format("not a variation cache (bad magic)".into()));
        }
        let kind = TaskKind::from_id(r.u16()?)?;
        let seed = r.u64()?;
        let count = r.count(8)?;
        let mut variations: Vec<TaskVariation> = Vec::with_capacity(count);
        for _ in 0..count {
            let index = r.index()?;
            if index >= VARIATIONS {
                return Err(Error::Format(format!(
                    "variation index {index} out of range"
                )));
            }
            if variations.last().is_some_and(|v| v.index >= index) {
                return Err(Error::Format(
                    "variation indices are not strictly increasing".into(),
                ));
            }
            let len = r.count(1)?;
            let text = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Format(format!("params of variation {index} are not UTF-8")))?;
            let params = Params::from_text(text)?;
            let scene = read_scene(&mut r, kind.group()).map_err(|e| Error::Variation {
                index,
                source: Box::new(e),
            })?;
            variations.push(TaskVariation {
                kind,
                index,
                seed,
                params,
                scene,
            });
        }
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after the last record".into()));
        }
        Ok(Cache {
            kind,
            seed,
            variations,
        })
    }
}

/// Generates the variations in `indices` in parallel. The result does not
/// depend on scheduling.
pub fn build_cache(
    kind: TaskKind,
    scale: ParticleScale,
    seed: u64,
    indices: Range<usize>,
) -> Result<Cache> {
    if indices.end > VARIATIONS {
        return Err(Error::IndexOutOfRange(indices.end - 1));
    }
    let variations = indices
        .into_par_iter()
        .map(|i| generate(kind, scale, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cache {
        kind,
        seed,
        variations,
    })
}

pub fn save_cache(cache: &Cache, path: &Path) -> Result<()> {
    fs::write(path, cache.to_bytes()?)?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<Cache> {
    let data = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::CacheMissing(path.display().to_string()),
        _ => e.into(),
    })?;
    Cache::from_bytes(&data)
}

/// Human-readable summary of a cache.
pub fn inspect(cache: &Cache) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "task {} (id {})", cache.kind.name(), cache.kind.id());
    let _ = writeln!(s, "master seed {}", cache.seed);
    let _ = writeln!(s, "variations {}", cache.variations.len());
    if let (Some(a), Some(b)) = (cache.variations.first(), cache.variations.last()) {
        let _ = writeln!(s, "index range {}..{}", a.index, b.index + 1);
    }
    for v in &cache.variations {
        let params: Vec<String> = v.params.iter().map(|(k, x)| format!("{k}={x}")).collect();
        let _ = writeln!(
            s,
            "{:4} particles={} constraints={} colliders={} {}",
            v.index,
            v.scene.particles.len(),
            v.scene.constraints.len(),
            v.scene.colliders.len(),
            params.join(" ")
        );
    }
    s
}
