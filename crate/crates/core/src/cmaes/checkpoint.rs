//! Binary checkpoint of a [`CmaState`] between generations.
//!
//! Layout, little-endian: magic `LVEC`, `u32` version, `u32` dim, `u32`
//! lambda, `u32` mu, then the strategy constants, counters, vectors and
//! matrices as `f64`/`u64`, the best-ever candidate, the RNG position, and a
//! trailing CRC32 of everything before it.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CmaParams, CmaState};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LVEC";
pub const CHECKPOINT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s<'a>(&mut self, v: impl IntoIterator<Item = &'a f64>) {
        for x in v {
            self.f64(*x);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Corruption("checkpoint truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

impl CmaState {
    /// Serializes the state. Only valid between generations.
    pub fn to_checkpoint(&self) -> Result<Vec<u8>> {
        if self.is_pending() {
            return Err(Error::Argument("cannot checkpoint while a population awaits tell".into()));
        }
        let p = &self.params;
        let mut w = Writer(CHECKPOINT_MAGIC.to_vec());
        w.u32(CHECKPOINT_VERSION);
        w.u32(self.dim as u32);
        w.u32(p.lambda as u32);
        w.u32(p.mu as u32);
        w.f64s(&p.weights);
        w.f64s(&[p.mu_eff, p.c_sigma, p.d_sigma, p.c_c, p.c_1, p.c_mu, p.chi_n]);
        w.u64(self.generation);
        w.u64(self.evaluations);
        w.u64(self.eigen_generation);
        w.u64(self.best_generation);
        w.f64(self.sigma);
        w.f64s(self.mean.iter());
        w.f64s(self.p_sigma.iter());
        w.f64s(self.p_c.iter());
        w.f64s(self.c.iter());
        w.f64s(self.b.iter());
        w.f64s(self.d.iter());
        match &self.best {
            Some((x, f)) => {
                w.0.push(1);
                w.f64(*f);
                w.f64s(x);
            }
            None => w.0.push(0),
        }
        w.0.extend_from_slice(&self.rng.get_seed());
        w.u64(self.rng.get_stream());
        w.0.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        let crc = crc32fast::hash(&w.0);
        w.u32(crc);
        Ok(w.0)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a CMA-ES checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        if bytes.len() < 12 {
            return Err(Error::Corruption("checkpoint truncated".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(Error::Corruption("checkpoint checksum mismatch".into()));
        }
        let mut r = Reader { bytes: body, pos: 8 };
        let dim = r.u32()? as usize;
        let lambda = r.u32()? as usize;
        let mu = r.u32()? as usize;
        if dim == 0 || mu == 0 || mu > lambda {
            return Err(Error::Corruption(format!("implausible dimensions dim={dim} lambda={lambda} mu={mu}")));
        }
        let weights = r.f64s(mu)?;
        let k = r.f64s(7)?;
        let params = CmaParams {
            lambda,
            mu,
            weights,
            mu_eff: k[0],
            c_sigma: k[1],
            d_sigma: k[2],
            c_c: k[3],
            c_1: k[4],
            c_mu: k[5],
            chi_n: k[6],
        };
        let generation = r.u64()?;
        let evaluations = r.u64()?;
        let eigen_generation = r.u64()?;
        let best_generation = r.u64()?;
        let sigma = r.f64()?;
        let mean = DVector::from_vec(r.f64s(dim)?);
        let p_sigma = DVector::from_vec(r.f64s(dim)?);
        let p_c = DVector::from_vec(r.f64s(dim)?);
        let c = DMatrix::from_vec(dim, dim, r.f64s(dim * dim)?);
        let b = DMatrix::from_vec(dim, dim, r.f64s(dim * dim)?);
        let d = DVector::from_vec(r.f64s(dim)?);
        let best = match r.take(1)?[0] {
            0 => None,
            1 => {
                let f = r.f64()?;
                Some((r.f64s(dim)?, f))
            }
            other => return Err(Error::Corruption(format!("bad best-candidate flag {other}"))),
        };
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        if r.pos != body.len() {
            return Err(Error::Corruption("trailing bytes in checkpoint".into()));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(CmaState {
            dim,
            params,
            mean,
            sigma,
            c,
            p_sigma,
            p_c,
            b,
            d,
            eigen_generation,
            generation,
            evaluations,
            best,
            best_generation,
            rng,
            pending: None,
        })
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let bytes = self.to_checkpoint()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        CmaState::from_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
