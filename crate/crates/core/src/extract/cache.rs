//! On-disk subgraph cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "SGCACHE\0" | version u32 | record count u64
//! per record: byte length u64 | target u32 | branch u32 | target_local u32
//!             | n u32 | entries u32 | globals [u32; n]
//!             | indptr [u32; n + 1] | indices [u32; entries]
//! ```

use std::fs;
use std::path::Path;

use super::ExtractError;
use crate::graph::Subgraph;

const MAGIC: &[u8; 8] = b"SGCACHE\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheRecord {
    pub target: u32,
    /// Ensemble branch index; 0 for single-method extraction.
    pub branch: u32,
    pub subgraph: Subgraph,
}

pub fn encode(records: &[CacheRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        let s = &r.subgraph;
        let words = 5 + s.globals().len() + s.indptr().len() + s.indices().len();
        out.extend_from_slice(&((words * 4) as u64).to_le_bytes());
        let header = [
            r.target,
            r.branch,
            s.target_local() as u32,
            s.num_nodes() as u32,
            s.indices().len() as u32,
        ];
        for w in header.iter().chain(s.globals()).chain(s.indptr()).chain(s.indices()) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ExtractError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| ExtractError::Cache(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ExtractError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ExtractError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, ExtractError> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| ExtractError::Cache("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(buf: &[u8]) -> Result<Vec<CacheRecord>, ExtractError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(ExtractError::Cache("not a subgraph cache (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ExtractError::Cache(format!("unsupported cache version {version}")));
    }
    let count = r.u64()?;
    let mut records = Vec::new();
    for i in 0..count {
        let len = r.u64()? as usize;
        let start = r.pos;
        let target = r.u32()?;
        let branch = r.u32()?;
        let target_local = r.u32()?;
        let n = r.u32()? as usize;
        let entries = r.u32()? as usize;
        let globals = r.u32s(n)?;
        let indptr = r.u32s(n + 1)?;
        let indices = r.u32s(entries)?;
        if r.pos - start != len {
            return Err(ExtractError::Cache(format!("record {i}: length prefix {len} disagrees with contents")));
        }
        let subgraph = Subgraph::from_parts(target_local, globals, indptr, indices)
            .map_err(|e| ExtractError::Cache(format!("record {i}: {e}")))?;
        if subgraph.target_global() != target {
            return Err(ExtractError::Cache(format!("record {i}: target {target} is not the subgraph's target")));
        }
        records.push(CacheRecord {
            target,
            branch,
            subgraph,
        });
    }
    if r.pos != buf.len() {
        return Err(ExtractError::Cache("trailing bytes after last record".into()));
    }
    Ok(records)
}

pub fn write_cache(path: &Path, records: &[CacheRecord]) -> Result<(), ExtractError> {
    fs::write(path, encode(records))?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<Vec<CacheRecord>, ExtractError> {
    decode(&fs::read(path)?)
}
