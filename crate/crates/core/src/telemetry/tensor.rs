//! The `SPT1` tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SPT1" | dtype u8 (0=f32, 1=i64, 2=u8) | rank u8 | rank × u64 dims | payload
//! ```
//!
//! The payload is row-major and must be exactly `product(dims) × size_of(dtype)`
//! bytes; trailing bytes are rejected.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Array3, Array4, IxDyn};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPT1";
pub const MAX_RANK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 0,
    I64 = 1,
    U8 = 2,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::I64 => 8,
            DType::U8 => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::F32),
            1 => Some(DType::I64),
            2 => Some(DType::U8),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    I64(Vec<i64>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::I64(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::I64(_) => DType::I64,
            TensorData::U8(_) => DType::U8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    dims: Vec<usize>,
    data: TensorData,
}

fn check_dims(dims: &[usize]) -> std::result::Result<usize, String> {
    if dims.len() > MAX_RANK {
        return Err(format!("rank {} exceeds {MAX_RANK}", dims.len()));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(format!("dim {pos} is zero"));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| "element count overflows".to_string())
}

impl TensorFile {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let count = check_dims(&dims).map_err(Error::InvalidInput)?;
        if count != data.len() {
            return Err(Error::InvalidInput(format!(
                "dims {dims:?} need {count} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Stores `values` as f32.
    pub fn from_f64(dims: Vec<usize>, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(dims, TensorData::F32(values.into_iter().map(|v| v as f32).collect()))
    }

    pub fn from_array<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> Result<Self> {
        Self::from_f64(a.shape().to_vec(), a.iter().copied())
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 8 * self.rank() + self.len() * self.dtype().size());
        out.extend_from_slice(MAGIC);
        out.push(self.dtype() as u8);
        out.push(self.rank() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::I64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    fn parse(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 6 || &bytes[..4] != MAGIC {
            return Err("bad magic".into());
        }
        let dtype = DType::from_code(bytes[4]).ok_or_else(|| format!("unknown dtype code {}", bytes[4]))?;
        let rank = bytes[5] as usize;
        if rank > MAX_RANK {
            return Err(format!("rank {rank} exceeds {MAX_RANK}"));
        }
        let header = 6 + 8 * rank;
        if bytes.len() < header {
            return Err("truncated header".into());
        }
        let dims: Vec<usize> = bytes[6..header]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .map(|d| usize::try_from(d).map_err(|_| format!("dim {d} too large")))
            .collect::<std::result::Result<_, _>>()?;
        let count = check_dims(&dims)?;
        let payload = &bytes[header..];
        let expected = count
            .checked_mul(dtype.size())
            .ok_or_else(|| "payload size overflows".to_string())?;
        if payload.len() != expected {
            return Err(format!("payload has {} bytes, expected {expected}", payload.len()));
        }
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::I64 => TensorData::I64(
                payload
                    .chunks_exact(8)
                    .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::U8 => TensorData::U8(payload.to_vec()),
        };
        Ok(Self { dims, data })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::parse(bytes).map_err(|reason| Error::Format {
            file: "<memory>".into(),
            reason,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes).map_err(|reason| Error::Format {
            file: path.to_path_buf(),
            reason,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Position of the first NaN or infinity in a float payload.
    pub fn first_non_finite(&self) -> Option<usize> {
        match &self.data {
            TensorData::F32(v) => v.iter().position(|x| !x.is_finite()),
            _ => None,
        }
    }

    /// Payload widened to f64, whatever the stored dtype.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::I64(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::U8(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn to_i64_vec(&self) -> Vec<i64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| x as i64).collect(),
            TensorData::I64(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&x| x as i64).collect(),
        }
    }

    fn to_dyn(&self) -> ndarray::ArrayD<f64> {
        ndarray::ArrayD::from_shape_vec(IxDyn(&self.dims), self.to_f64_vec()).expect("dims validated at construction")
    }

    pub fn to_array1(&self) -> Option<Array1<f64>> {
        self.to_dyn().into_dimensionality().ok()
    }

    pub fn to_array2(&self) -> Option<Array2<f64>> {
        self.to_dyn().into_dimensionality().ok()
    }

    pub fn to_array3(&self) -> Option<Array3<f64>> {
        self.to_dyn().into_dimensionality().ok()
    }

    pub fn to_array4(&self) -> Option<Array4<f64>> {
        self.to_dyn().into_dimensionality().ok()
    }
}
