//! Row-major f32 tensors and the repo-wide binary tensor file format.
//!
//! File layout: magic bytes `AFT1`, u32 little-endian rank, `rank` u32
//! little-endian dims, then row-major f32 little-endian values. Complex data
//! is stored with a trailing dim of length 2 (real then imaginary).

use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"AFT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Parameter("tensor dims must be >= 1".into()));
        }
        if n != data.len() {
            return Err(Error::Parameter(format!(
                "tensor dims {:?} imply {} values, got {}",
                dims,
                n,
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Tensor {
            dims,
            data: vec![0.0; n],
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|msg| {
            Error::Validation(format!("{}: {}", path.display(), msg))
        })
    }

    fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let take = |off: usize| -> std::result::Result<u32, String> {
            let end = off + 4;
            if end > bytes.len() {
                return Err("truncated tensor file".into());
            }
            Ok(u32::from_le_bytes(bytes[off..end].try_into().unwrap()))
        };
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err("bad magic (expected AFT1)".into());
        }
        let rank = take(4)? as usize;
        if rank > 8 {
            return Err(format!("implausible rank {rank}"));
        }
        let mut dims = Vec::with_capacity(rank);
        for i in 0..rank {
            dims.push(take(8 + 4 * i)? as usize);
        }
        let n: usize = dims.iter().product();
        let data_off = 8 + 4 * rank;
        if bytes.len() != data_off + 4 * n {
            return Err(format!(
                "dims {:?} imply {} values but file holds {} bytes of data",
                dims,
                n,
                bytes.len() - data_off
            ));
        }
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let off = data_off + 4 * i;
            data.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
        }
        Ok(Tensor { dims, data })
    }
}
