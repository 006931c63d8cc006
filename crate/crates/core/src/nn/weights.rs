//! Flat binary weight container.
//!
//! ```text
//! magic    8 bytes   "SCLNWTS\0"
//! version  u32 LE    1
//! count    u32 LE    number of tensors
//! count × { name_len u32 LE, name UTF-8, ndim u32 LE, dims ndim × u32 LE }
//! count × { product(dims) × f32 LE }        payloads, in header order
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::mff::{DepthwiseConv, MffConfig};

pub const MAGIC: &[u8; 8] = b"SCLNWTS\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        NamedTensor {
            name: name.into(),
            dims,
            data,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightFile {
    pub tensors: Vec<NamedTensor>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::MalformedWeights(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

impl WeightFile {
    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            if t.data.len() != t.dims.iter().product::<usize>() {
                return Err(Error::MalformedWeights(format!(
                    "tensor '{}' data does not match dims {:?}",
                    t.name, t.dims
                )));
            }
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
        }
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::MalformedWeights("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::MalformedWeights(format!(
                "unsupported version {version}"
            )));
        }
        let count = r.u32()? as usize;
        let mut headers = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::MalformedWeights("tensor name is not UTF-8".into()))?
                .to_string();
            let ndim = r.u32()? as usize;
            let dims = (0..ndim)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            headers.push((name, dims));
        }
        let mut tensors = Vec::with_capacity(headers.len());
        for (name, dims) in headers {
            let n: usize = dims.iter().product();
            let raw = r.take(
                n.checked_mul(4)
                    .ok_or_else(|| Error::MalformedWeights("tensor too large".into()))?,
            )?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::MalformedWeights(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(WeightFile { tensors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

impl MffConfig {
    /// Tensors named `{prefix}.expand.weight`, `{prefix}.branch{i}.weight`, ….
    pub fn to_tensors(&self, prefix: &str) -> Vec<NamedTensor> {
        let (c, nc) = (self.in_channels, self.expanded_channels());
        let mut out = vec![
            NamedTensor::new(
                format!("{prefix}.expand.weight"),
                vec![nc, c, 1, 1],
                to_f32(&self.expand_weight),
            ),
            NamedTensor::new(
                format!("{prefix}.expand.bias"),
                vec![nc],
                to_f32(&self.expand_bias),
            ),
        ];
        for (i, br) in self.branches.iter().enumerate() {
            out.push(NamedTensor::new(
                format!("{prefix}.branch{i}.weight"),
                vec![c, 1, br.kernel, br.kernel],
                to_f32(&br.weights),
            ));
            out.push(NamedTensor::new(
                format!("{prefix}.branch{i}.bias"),
                vec![c],
                to_f32(&br.bias),
            ));
        }
        out.push(NamedTensor::new(
            format!("{prefix}.project.weight"),
            vec![self.out_channels, nc, 1, 1],
            to_f32(&self.project_weight),
        ));
        out.push(NamedTensor::new(
            format!("{prefix}.project.bias"),
            vec![self.out_channels],
            to_f32(&self.project_bias),
        ));
        out
    }

    pub fn from_tensors(file: &WeightFile, prefix: &str) -> Result<Self> {
        let fetch = |name: String| -> Result<&NamedTensor> {
            file.get(&name)
                .ok_or_else(|| Error::MalformedWeights(format!("missing tensor '{name}'")))
        };
        let widen = |t: &NamedTensor| t.data.iter().map(|&v| v as f64).collect::<Vec<f64>>();
        let ew = fetch(format!("{prefix}.expand.weight"))?;
        let [nc, c] = match ew.dims.as_slice() {
            [nc, c, 1, 1] => [*nc, *c],
            d => {
                return Err(Error::MalformedWeights(format!(
                    "expand weight has dims {d:?}"
                )))
            }
        };
        let pw = fetch(format!("{prefix}.project.weight"))?;
        let out_channels = pw.dims.first().copied().unwrap_or(0);
        let mut branches = Vec::new();
        let mut kernels = Vec::new();
        for i in 0.. {
            let Some(w) = file.get(&format!("{prefix}.branch{i}.weight")) else {
                break;
            };
            let k = *w.dims.last().unwrap_or(&0);
            kernels.push(k);
            branches.push(DepthwiseConv {
                kernel: k,
                weights: widen(w),
                bias: widen(fetch(format!("{prefix}.branch{i}.bias"))?),
            });
        }
        if c == 0 || kernels.len() * c != nc {
            return Err(Error::MalformedWeights(format!(
                "{} branches inconsistent with {nc} expanded channels",
                kernels.len()
            )));
        }
        let cfg = MffConfig {
            in_channels: c,
            out_channels,
            kernels,
            expand_weight: widen(ew),
            expand_bias: widen(fetch(format!("{prefix}.expand.bias"))?),
            branches,
            project_weight: widen(pw),
            project_bias: widen(fetch(format!("{prefix}.project.bias"))?),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_roundtrips_through_bytes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = MffConfig::random(3, &[3, 5], 0.5, &mut rng);
        let file = WeightFile {
            tensors: cfg.to_tensors("stage2.block0"),
        };
        let bytes = file.to_bytes().unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let back = WeightFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, file);
        let cfg2 = MffConfig::from_tensors(&back, "stage2.block0").unwrap();
        assert_eq!(cfg2.kernels, vec![3, 5]);
        for (a, b) in cfg.expand_weight.iter().zip(&cfg2.expand_weight) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        assert!(WeightFile::from_bytes(b"nope").is_err());
        let file = WeightFile {
            tensors: vec![NamedTensor::new("a", vec![2], vec![1.0, 2.0])],
        };
        let mut bytes = file.to_bytes().unwrap();
        bytes.pop();
        assert!(WeightFile::from_bytes(&bytes).is_err());
        let bad = WeightFile {
            tensors: vec![NamedTensor::new("a", vec![3], vec![1.0])],
        };
        assert!(bad.to_bytes().is_err());
    }
}
