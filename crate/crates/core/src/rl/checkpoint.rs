//! Versioned binary archive of named networks.
//!
//! ```text
//! magic      8 bytes  "SNKNAV01"
//! version    u32      1
//! endian     u8       'L' little or 'B' big; applies to every later number
//! meta_len   u32      followed by meta_len bytes of UTF-8 JSON
//! n_nets     u32
//! per network:
//!   name_len u16, name bytes
//!   n_layers u32
//!   sizes    (n_layers + 1) × u32
//!   acts     n_layers × u8   (0 identity, 1 relu, 2 tanh)
//!   per layer: weight out×in f64 row-major, then bias out f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use super::mlp::{Activation, Layer, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SNKNAV01";
pub const VERSION: u32 = 1;
const MAX_DIM: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub networks: Vec<(String, Mlp)>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn network(&self, name: &str) -> Result<&Mlp> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| bad(format!("no network named `{name}`")))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u8(b'L')?;
        let meta = serde_json::to_vec(&self.metadata)?;
        w.write_u32::<LittleEndian>(meta.len() as u32)?;
        w.write_all(&meta)?;
        w.write_u32::<LittleEndian>(self.networks.len() as u32)?;
        for (name, net) in &self.networks {
            w.write_u16::<LittleEndian>(name.len() as u16)?;
            w.write_all(name.as_bytes())?;
            w.write_u32::<LittleEndian>(net.layers.len() as u32)?;
            for s in net.sizes() {
                w.write_u32::<LittleEndian>(s as u32)?;
            }
            for l in &net.layers {
                w.write_u8(l.activation.tag())?;
            }
            for l in &net.layers {
                for r in 0..l.outputs() {
                    for c in 0..l.inputs() {
                        w.write_f64::<LittleEndian>(l.weight[(r, c)])?;
                    }
                }
                for v in l.bias.iter() {
                    w.write_f64::<LittleEndian>(*v)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("not a policy checkpoint (bad magic)"));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        match r.read_u8()? {
            b'L' => Self::read_body::<LittleEndian, R>(r),
            b'B' => Self::read_body::<BigEndian, R>(r),
            t => Err(bad(format!("unknown endianness tag {t:#x}"))),
        }
    }

    fn read_body<E: ByteOrder, R: Read>(r: &mut R) -> Result<Self> {
        let trunc = |_| bad("truncated checkpoint");
        let meta_len = r.read_u32::<E>().map_err(trunc)?;
        if meta_len > MAX_DIM * 16 {
            return Err(bad("metadata too large"));
        }
        let mut meta = vec![0u8; meta_len as usize];
        r.read_exact(&mut meta).map_err(trunc)?;
        let metadata = serde_json::from_slice(&meta)?;
        let n_nets = r.read_u32::<E>().map_err(trunc)?;
        let mut networks = Vec::new();
        for _ in 0..n_nets {
            let name_len = r.read_u16::<E>().map_err(trunc)?;
            let mut name = vec![0u8; name_len as usize];
            r.read_exact(&mut name).map_err(trunc)?;
            let name = String::from_utf8(name).map_err(|_| bad("network name is not UTF-8"))?;
            let n_layers = r.read_u32::<E>().map_err(trunc)?;
            if n_layers == 0 || n_layers > 64 {
                return Err(bad(format!("implausible layer count {n_layers}")));
            }
            let mut sizes = Vec::new();
            for _ in 0..=n_layers {
                let s = r.read_u32::<E>().map_err(trunc)?;
                if s == 0 || s > MAX_DIM {
                    return Err(bad(format!("implausible layer size {s}")));
                }
                sizes.push(s as usize);
            }
            let mut acts = Vec::new();
            for _ in 0..n_layers {
                let t = r.read_u8().map_err(trunc)?;
                acts.push(Activation::from_tag(t).ok_or_else(|| bad(format!("unknown activation {t}")))?);
            }
            let mut layers = Vec::new();
            for (i, activation) in acts.into_iter().enumerate() {
                let (n_in, n_out) = (sizes[i], sizes[i + 1]);
                let mut w = vec![0.0; n_in * n_out];
                r.read_f64_into::<E>(&mut w).map_err(trunc)?;
                let mut b = vec![0.0; n_out];
                r.read_f64_into::<E>(&mut b).map_err(trunc)?;
                layers.push(Layer {
                    weight: DMatrix::from_row_slice(n_out, n_in, &w),
                    bias: DVector::from_vec(b),
                    activation,
                });
            }
            let net = Mlp { layers };
            if !net.is_finite() {
                return Err(bad(format!("network `{name}` has non-finite weights")));
            }
            networks.push((name, net));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after the last network"));
        }
        Ok(Self { metadata, networks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}
