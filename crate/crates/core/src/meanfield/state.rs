use crate::error::{Error, Result};
use crate::linalg::{norm, tensor_power, C64};

/// Default ceiling on `D^n`.
pub const DEFAULT_STATE_CAP: usize = 1 << 22;

pub const DUMP_MAGIC: &[u8; 4] = b"MCQS";
const HEADER_LEN: usize = 16;

/// Amplitudes of `n` copies of a `dim`-level system.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCopyState {
    n: usize,
    dim: usize,
    amplitudes: Vec<C64>,
}

/// `dim^n`, or the state-cap error when it does not fit under `cap`.
pub(crate) fn checked_size(dim: usize, n: usize, cap: usize) -> Result<usize> {
    let size = (dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::StateCap { size, cap });
    }
    Ok(size as usize)
}

impl MultiCopyState {
    pub fn new(n: usize, dim: usize, amplitudes: Vec<C64>, cap: usize) -> Result<Self> {
        let size = checked_size(dim, n, cap)?;
        if amplitudes.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                actual: amplitudes.len(),
            });
        }
        Ok(MultiCopyState { n, dim, amplitudes })
    }

    pub(crate) fn from_parts(n: usize, dim: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), dim.pow(n as u32));
        MultiCopyState { n, dim, amplitudes }
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Flat-index stride of `site`.
    pub fn stride(&self, site: usize) -> usize {
        self.dim.pow((self.n - 1 - site) as u32)
    }

    /// Amplitude at a multi-index `(i_0, …, i_{n-1})`.
    pub fn at(&self, digits: &[usize]) -> C64 {
        let idx = digits.iter().fold(0, |acc, &d| acc * self.dim + d);
        self.amplitudes[idx]
    }

    pub fn normalized(&self) -> Self {
        let nrm = self.norm();
        let amplitudes = if nrm > 0.0 {
            self.amplitudes.iter().map(|z| z / nrm).collect()
        } else {
            self.amplitudes.clone()
        };
        MultiCopyState { amplitudes, ..*self }
    }

    pub fn map_amplitudes(&self, f: impl Fn(&[C64]) -> Vec<C64>) -> Self {
        let amplitudes = f(&self.amplitudes);
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        MultiCopyState { amplitudes, ..*self }
    }

    /// Little-endian dump: `MCQS`, `u32 D`, `u32 n`, 4 reserved bytes, then
    /// interleaved `(re, im)` `f64` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.amplitudes.len());
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&[0u8; 4]);
        for z in &self.amplitudes {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], cap: usize) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != DUMP_MAGIC {
            return Err(Error::Parse("missing MCQS header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (dim, n) = (word(4), word(8));
        let size = checked_size(dim, n, cap)?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 16 * size {
            return Err(Error::Parse(format!(
                "expected {} payload bytes, got {}",
                16 * size,
                body.len()
            )));
        }
        let f = |at: usize| f64::from_le_bytes(body[at..at + 8].try_into().unwrap());
        let amplitudes = (0..size).map(|k| C64::new(f(16 * k), f(16 * k + 8))).collect();
        Ok(MultiCopyState { n, dim, amplitudes })
    }
}

/// `x^{⊗n}`.
pub fn product_state(x: &[C64], n: usize, cap: usize) -> Result<MultiCopyState> {
    checked_size(x.len(), n, cap)?;
    Ok(MultiCopyState {
        n,
        dim: x.len(),
        amplitudes: tensor_power(x, n),
    })
}
