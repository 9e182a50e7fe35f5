//! Named-tensor archive.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MTGM"  u16 version
//! repeated until EOF:
//!   u32 name_len, name (UTF-8), u32 rank, rank x u32 dims,
//!   prod(dims) x f32 payload
//! ```
//!
//! Values are stored as 32-bit floats; loading widens them back to `f64`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::rbm::RbmModel;
use crate::vae::{VaeConfig, VaeModel};

pub const MAGIC: &[u8; 4] = b"MTGM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Record {
    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::from_vec(&self.dims, self.data.iter().map(|&x| f64::from(x)).collect())
            .map_err(|e| Error::Archive(format!("record `{}`: {e}", self.name)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightArchive {
    records: Vec<Record>,
}

impl WeightArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends `tensor` rounded to `f32`.
    pub fn push(&mut self, name: impl Into<String>, tensor: &Tensor) {
        self.records.push(Record {
            name: name.into(),
            dims: tensor.dims().to_vec(),
            data: tensor.data().iter().map(|&x| x as f32).collect(),
        });
    }

    pub fn push_values(&mut self, name: impl Into<String>, values: &[f64]) {
        self.records.push(Record {
            name: name.into(),
            dims: vec![values.len()],
            data: values.iter().map(|&x| x as f32).collect(),
        });
    }

    pub fn get(&self, name: &str) -> Result<&Record> {
        self.records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Archive(format!("missing record `{name}`")))
    }

    pub fn tensor(&self, name: &str) -> Result<Tensor> {
        self.get(name)?.to_tensor()
    }

    /// A record holding exactly `n` values.
    pub fn values(&self, name: &str, n: usize) -> Result<Vec<f64>> {
        let r = self.get(name)?;
        if r.data.len() != n {
            return Err(Error::Archive(format!(
                "record `{name}`: expected {n} values, found {}",
                r.data.len()
            )));
        }
        Ok(r.data.iter().map(|&x| f64::from(x)).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
            out.extend_from_slice(r.name.as_bytes());
            out.extend_from_slice(&(r.dims.len() as u32).to_le_bytes());
            for &d in &r.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &x in &r.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 || &bytes[..4] != MAGIC {
            return Err(Error::Archive("bad magic; not a weight archive".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Archive(format!(
                "unsupported format version {version} (expected {VERSION})"
            )));
        }
        let mut cur = Cursor { bytes, pos: 6 };
        let mut records = Vec::new();
        while cur.pos < bytes.len() {
            let index = records.len();
            let name_len = cur
                .u32()
                .ok_or_else(|| Error::Archive(format!("record #{index}: truncated name length")))?
                as usize;
            let name = cur
                .take(name_len)
                .and_then(|b| std::str::from_utf8(b).ok())
                .ok_or_else(|| Error::Archive(format!("record #{index}: truncated or non-UTF-8 name")))?
                .to_string();
            let corrupt = |what: &str| Error::Archive(format!("record `{name}`: {what}"));
            let rank = cur.u32().ok_or_else(|| corrupt("truncated rank"))? as usize;
            if rank > 8 {
                return Err(corrupt(&format!("implausible rank {rank}")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(cur.u32().ok_or_else(|| corrupt("truncated dims"))? as usize);
            }
            let count = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| corrupt("element count overflows"))?;
            let payload = count
                .checked_mul(4)
                .and_then(|n| cur.take(n))
                .ok_or_else(|| corrupt(&format!("payload truncated (expected {count} values)")))?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            records.push(Record { name, dims, data });
        }
        Ok(WeightArchive { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingModel(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

const VAE_CONFIG: &str = "vae.config";
const RBM_SIGMA: &str = "rbm.sigma";

/// Architecture record `[height, width, latent_dim, encoder_std, recon_std,
/// mask_channel]` followed by every parameter under its layer name.
pub fn vae_to_archive(vae: &VaeModel) -> WeightArchive {
    let c = vae.config();
    let mut ar = WeightArchive::new();
    ar.push_values(
        VAE_CONFIG,
        &[
            c.height as f64,
            c.width as f64,
            c.latent_dim as f64,
            c.encoder_std,
            c.recon_std,
            f64::from(u8::from(c.mask_channel)),
        ],
    );
    for (name, p) in VaeModel::param_names().iter().zip(vae.params()) {
        ar.push(*name, p);
    }
    ar
}

pub fn vae_from_archive(ar: &WeightArchive) -> Result<VaeModel> {
    let v = ar.values(VAE_CONFIG, 6)?;
    let config = VaeConfig {
        height: v[0] as usize,
        width: v[1] as usize,
        latent_dim: v[2] as usize,
        encoder_std: v[3],
        recon_std: v[4],
        mask_channel: v[5] != 0.0,
    };
    let params = VaeModel::param_names()
        .iter()
        .map(|name| ar.tensor(name))
        .collect::<Result<Vec<_>>>()?;
    VaeModel::from_params(config, params).map_err(|e| Error::Archive(e.to_string()))
}

pub fn rbm_to_archive(rbm: &RbmModel) -> WeightArchive {
    let mut ar = WeightArchive::new();
    ar.push_values(RBM_SIGMA, &[rbm.sigma()]);
    ar.push("rbm.weights", &rbm.weights);
    ar.push("rbm.visible_bias", &rbm.visible_bias);
    ar.push("rbm.hidden_bias", &rbm.hidden_bias);
    ar
}

pub fn rbm_from_archive(ar: &WeightArchive) -> Result<RbmModel> {
    let sigma = ar.values(RBM_SIGMA, 1)?[0];
    RbmModel::from_parts(
        ar.tensor("rbm.weights")?,
        ar.tensor("rbm.visible_bias")?,
        ar.tensor("rbm.hidden_bias")?,
        sigma,
    )
    .map_err(|e| Error::Archive(e.to_string()))
}
