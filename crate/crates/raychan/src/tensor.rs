//! `DAI6` binary tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 4         | magic `DAI6`                            |
//! | 4      | 4         | version, `u32` = 1                      |
//! | 8      | 4         | dtype, `u32` = 1 (complex128)           |
//! | 12     | 4         | ndims, `u32`                            |
//! | 16     | 8 × ndims | dims, `u64` each                        |
//! | ...    | 16 × ∏dims| row-major entries, `re` then `im`, f64  |

use std::io::{self, Read, Write};

use raychan_core::Complex64;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"DAI6";
pub const VERSION: u32 = 1;
pub const DTYPE_COMPLEX128: u32 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("not a DAI6 tensor (bad magic)")]
    BadMagic,
    #[error("unsupported tensor version {0}")]
    Version(u32),
    #[error("unsupported dtype code {0}")]
    Dtype(u32),
    #[error("dims {dims:?} need {expected} entries, got {actual}")]
    Shape { dims: Vec<usize>, expected: usize, actual: usize },
    #[error("trailing bytes after payload")]
    Trailing,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self, TensorError> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(TensorError::Shape { dims, expected, actual: data.len() });
        }
        Ok(Tensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn header_len(&self) -> usize {
        16 + 8 * self.dims.len()
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&DTYPE_COMPLEX128.to_le_bytes())?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for c in &self.data {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header_len() + 16 * self.data.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads one tensor and requires the stream to end right after it.
    pub fn read_from(mut r: impl Read) -> Result<Self, TensorError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(TensorError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(TensorError::Version(version));
        }
        let dtype = read_u32(&mut r)?;
        if dtype != DTYPE_COMPLEX128 {
            return Err(TensorError::Dtype(dtype));
        }
        let ndims = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            dims.push(u64::from_le_bytes(b) as usize);
        }
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut b = [0u8; 16];
        for _ in 0..n {
            r.read_exact(&mut b)?;
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(TensorError::Trailing);
        }
        Tensor::new(dims, data)
    }
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
