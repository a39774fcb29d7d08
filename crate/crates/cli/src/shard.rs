//! On-disk shard layout: a fixed 32-byte little-endian header followed by
//! the column's bits packed LSB-first and zero-padded to a byte boundary.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const MAGIC: [u8; 8] = *b"XMDSARR\0";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not a shard file")]
    BadMagic(PathBuf),
    #[error("{path}: unsupported shard version {version}")]
    Version { path: PathBuf, version: u16 },
    #[error("{0}: unknown code id {1}")]
    UnknownCode(PathBuf, u8),
    #[error("{0}: payload has {1} bytes, expected {2}")]
    Truncated(PathBuf, usize, usize),
    #[error("shards disagree on code parameters: {0} vs {1}")]
    Inconsistent(PathBuf, PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeId {
    /// EVENODD with layered pairwise couplings (any k, r, d, p, e).
    Multilayer,
    /// The fixed k=2 example code with eight bits per column.
    QuadBase,
    /// Two coupled instances of the k=2 example code.
    QuadTransformed,
    /// Two-instance EVENODD with r=2 and d=k+1.
    Te2,
}

impl CodeId {
    pub fn to_u8(self) -> u8 {
        match self {
            CodeId::Multilayer => 0,
            CodeId::QuadBase => 1,
            CodeId::QuadTransformed => 2,
            CodeId::Te2 => 3,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => CodeId::Multilayer,
            1 => CodeId::QuadBase,
            2 => CodeId::QuadTransformed,
            3 => CodeId::Te2,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub version: u16,
    pub code: CodeId,
    pub k: u16,
    pub r: u16,
    pub d: u16,
    pub p: u16,
    pub e: u16,
    pub layers: u8,
    pub column_index: u16,
    /// Length of the original input in bits.
    pub payload_len_bits: u64,
}

impl ShardHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..8].copy_from_slice(&MAGIC);
        out[8..10].copy_from_slice(&self.version.to_le_bytes());
        out[10] = self.code.to_u8();
        for (i, v) in [self.k, self.r, self.d, self.p, self.e].iter().enumerate() {
            out[11 + 2 * i..13 + 2 * i].copy_from_slice(&v.to_le_bytes());
        }
        out[21] = self.layers;
        out[22..24].copy_from_slice(&self.column_index.to_le_bytes());
        out[24..32].copy_from_slice(&self.payload_len_bits.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self, ShardError> {
        if bytes.len() < HEADER_LEN || bytes[..8] != MAGIC {
            return Err(ShardError::BadMagic(path.to_path_buf()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let version = u16_at(8);
        if version != VERSION {
            return Err(ShardError::Version {
                path: path.to_path_buf(),
                version,
            });
        }
        let code = CodeId::from_u8(bytes[10])
            .ok_or_else(|| ShardError::UnknownCode(path.to_path_buf(), bytes[10]))?;
        Ok(ShardHeader {
            version,
            code,
            k: u16_at(11),
            r: u16_at(13),
            d: u16_at(15),
            p: u16_at(17),
            e: u16_at(19),
            layers: bytes[21],
            column_index: u16_at(22),
            payload_len_bits: u64::from_le_bytes(bytes[24..32].try_into().expect("eight bytes")),
        })
    }

    /// True when both headers describe the same code and input.
    pub fn same_code(&self, other: &ShardHeader) -> bool {
        ShardHeader {
            column_index: 0,
            ..*self
        } == ShardHeader {
            column_index: 0,
            ..*other
        }
    }
}

pub fn shard_path(dir: &Path, column: usize) -> PathBuf {
    dir.join(format!("col_{column}.shard"))
}

/// Packs 0/1 bytes LSB-first.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

pub fn unpack_bits(bytes: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()
}

pub struct Shard {
    pub header: ShardHeader,
    /// Column bits, one byte per bit.
    pub bits: Vec<u8>,
}

pub fn write_shard(dir: &Path, header: &ShardHeader, bits: &[u8]) -> Result<PathBuf, ShardError> {
    let path = shard_path(dir, header.column_index as usize);
    let mut bytes = header.to_bytes().to_vec();
    bytes.extend(pack_bits(bits));
    fs::write(&path, bytes).map_err(|source| ShardError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Reads a shard whose payload should hold `payload_bits` bits.
pub fn read_shard(
    path: &Path,
    payload_bits: impl Fn(&ShardHeader) -> usize,
) -> Result<Shard, ShardError> {
    let bytes = fs::read(path).map_err(|source| ShardError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let header = ShardHeader::parse(&bytes, path)?;
    let len = payload_bits(&header);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len.div_ceil(8) {
        return Err(ShardError::Truncated(
            path.to_path_buf(),
            payload.len(),
            len.div_ceil(8),
        ));
    }
    Ok(Shard {
        header,
        bits: unpack_bits(payload, len),
    })
}
