//! Binary array files: a 16-byte header (`STNC`, format u32, rank u32,
//! reserved u32), `rank` u64 dimensions, then little-endian f64 data.

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"STNC";
pub const ARRAY_FORMAT: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ArrayError {
    #[error("bad magic bytes")]
    Magic,
    #[error("unsupported array format {0}")]
    Format(u32),
    #[error("truncated array: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0} trailing bytes after array data")]
    Trailing(usize),
    #[error("array shape overflows")]
    Shape,
    #[error("expected rank {expected}, found {actual}")]
    Rank { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub dims: Vec<u64>,
    pub data: Vec<f64>,
}

impl Array {
    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            dims: vec![data.len() as u64],
            data,
        }
    }

    /// Row-major `rows × cols`.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Self {
            dims: vec![rows as u64, cols as u64],
            data,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * (self.dims.len() + self.data.len()));
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&ARRAY_FORMAT.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ArrayError> {
        let need = |expected: usize| {
            if bytes.len() < expected {
                Err(ArrayError::Truncated {
                    expected,
                    actual: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        need(HEADER_LEN)?;
        if bytes[..4] != MAGIC {
            return Err(ArrayError::Magic);
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let format = word(4);
        if format != ARRAY_FORMAT {
            return Err(ArrayError::Format(format));
        }
        let rank = word(8) as usize;
        let dims_end = rank
            .checked_mul(8)
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or(ArrayError::Shape)?;
        need(dims_end)?;
        let dims: Vec<u64> = bytes[HEADER_LEN..dims_end]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| usize::try_from(d).ok().and_then(|d| acc.checked_mul(d)))
            .ok_or(ArrayError::Shape)?;
        let end = count
            .checked_mul(8)
            .and_then(|n| n.checked_add(dims_end))
            .ok_or(ArrayError::Shape)?;
        need(end)?;
        if bytes.len() > end {
            return Err(ArrayError::Trailing(bytes.len() - end));
        }
        let data = bytes[dims_end..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn expect_rank(&self, rank: usize) -> Result<(), ArrayError> {
        if self.dims.len() == rank {
            Ok(())
        } else {
            Err(ArrayError::Rank {
                expected: rank,
                actual: self.dims.len(),
            })
        }
    }
}
