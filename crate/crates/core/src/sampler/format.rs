//! `LFLB` ensemble files.
//!
//! Layout, all little-endian: magic `LFLB`, version `u32`, `d: u32`,
//! `L: u32`, then `a, alpha, m0, b, sigma2, lambda` as `f64`, a jump-law
//! tag `u32` with its parameters, `n_samples: u64`, and finally
//! `n_samples` blocks of `L^d` `f64` values in row-major order.
//!
//! Jump-law tags: 1 = atoms (`u64` count, then `(position, weight)` pairs),
//! 2 = uniform (`lo, hi`), 3 = two-sided exponential (`rate`).
//!
//! The momentum symbol is not part of the header; readers supply it.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::greens::{ModelParams, MomentumSymbol};
use crate::lattice::{LatticeField, LatticeSpec};
use crate::levy::{JumpLaw, LevyCharacteristic};

use super::{Ensemble, FieldModel};

pub const MAGIC: [u8; 4] = *b"LFLB";
pub const VERSION: u32 = 1;

const TAG_ATOMS: u32 = 1;
const TAG_UNIFORM: u32 = 2;
const TAG_LAPLACE: u32 = 3;
const MAX_ATOMS: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleHeader {
    pub spec: LatticeSpec,
    pub alpha: f64,
    pub m0: f64,
    pub noise: LevyCharacteristic,
    pub n_samples: u64,
}

impl EnsembleHeader {
    pub fn for_model(model: &FieldModel, n_samples: u64) -> Self {
        Self {
            spec: model.spec,
            alpha: model.params.alpha,
            m0: model.params.m0,
            noise: model.noise.clone(),
            n_samples,
        }
    }

    pub fn model(&self, symbol: MomentumSymbol) -> Result<FieldModel> {
        let params = ModelParams::new(self.alpha, self.m0, symbol)?;
        FieldModel::new(params, self.noise.clone(), self.spec)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = u32::try_from(self.spec.dim()).map_err(|_| Error::Format("dimension too large".into()))?;
        let l =
            u32::try_from(self.spec.sites_per_axis()).map_err(|_| Error::Format("sites_per_axis too large".into()))?;
        w.write_all(&MAGIC)?;
        put_u32(w, VERSION)?;
        put_u32(w, d)?;
        put_u32(w, l)?;
        let n = &self.noise;
        for v in [self.spec.spacing(), self.alpha, self.m0, n.drift, n.sigma2, n.lambda] {
            put_f64(w, v)?;
        }
        match &n.jump_law {
            JumpLaw::Atoms { atoms } => {
                put_u32(w, TAG_ATOMS)?;
                put_u64(w, atoms.len() as u64)?;
                for a in atoms {
                    put_f64(w, a.position)?;
                    put_f64(w, a.weight)?;
                }
            }
            JumpLaw::Uniform { lo, hi } => {
                put_u32(w, TAG_UNIFORM)?;
                put_f64(w, *lo)?;
                put_f64(w, *hi)?;
            }
            JumpLaw::TwoSidedExponential { rate } => {
                put_u32(w, TAG_LAPLACE)?;
                put_f64(w, *rate)?;
            }
        }
        put_u64(w, self.n_samples)
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}, expected \"LFLB\"")));
        }
        let version = get_u32(r, "version")?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let d = get_u32(r, "d")? as usize;
        let l = get_u32(r, "L")? as usize;
        let a = get_f64(r, "a")?;
        let alpha = get_f64(r, "alpha")?;
        let m0 = get_f64(r, "m0")?;
        let b = get_f64(r, "b")?;
        let sigma2 = get_f64(r, "sigma2")?;
        let lambda = get_f64(r, "lambda")?;
        let jump_law = match get_u32(r, "jump-law tag")? {
            TAG_ATOMS => {
                let count = get_u64(r, "atom count")?;
                if count == 0 || count > MAX_ATOMS {
                    return Err(Error::Format(format!("implausible atom count {count}")));
                }
                let mut atoms = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    atoms.push((get_f64(r, "atom position")?, get_f64(r, "atom weight")?));
                }
                JumpLaw::atoms(atoms)
            }
            TAG_UNIFORM => JumpLaw::uniform(get_f64(r, "lo")?, get_f64(r, "hi")?),
            TAG_LAPLACE => JumpLaw::two_sided_exponential(get_f64(r, "rate")?),
            t => return Err(Error::Format(format!("unknown jump-law tag {t}"))),
        }
        .map_err(as_format)?;
        let n_samples = get_u64(r, "n_samples")?;
        let spec = LatticeSpec::new(d, l, a).map_err(as_format)?;
        let noise = LevyCharacteristic::new(b, sigma2, lambda, jump_law).map_err(as_format)?;
        Ok(Self {
            spec,
            alpha,
            m0,
            noise,
            n_samples,
        })
    }
}

fn as_format(e: Error) -> Error {
    Error::Format(format!("invalid header: {e}"))
}

/// Writes samples one at a time after the header; checks the count on finish.
pub struct EnsembleWriter<W: Write> {
    inner: W,
    spec: LatticeSpec,
    expected: u64,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write> EnsembleWriter<W> {
    pub fn new(mut inner: W, header: &EnsembleHeader) -> Result<Self> {
        header.write(&mut inner)?;
        Ok(Self {
            inner,
            spec: header.spec,
            expected: header.n_samples,
            written: 0,
            buf: Vec::with_capacity(header.spec.num_sites() * 8),
        })
    }

    pub fn write_sample(&mut self, field: &LatticeField) -> Result<()> {
        if field.spec() != &self.spec {
            return Err(Error::Format("sample lattice differs from header".into()));
        }
        if self.written == self.expected {
            return Err(Error::Format(format!(
                "header announces only {} samples",
                self.expected
            )));
        }
        self.buf.clear();
        for v in field.values() {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.expected {
            return Err(Error::Format(format!(
                "wrote {} of {} announced samples",
                self.written, self.expected
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_ensemble<W: Write>(w: W, ensemble: &Ensemble) -> Result<W> {
    let header = EnsembleHeader::for_model(&ensemble.model, ensemble.samples.len() as u64);
    let mut writer = EnsembleWriter::new(w, &header)?;
    for s in &ensemble.samples {
        writer.write_sample(s)?;
    }
    writer.finish()
}

/// Reads header and all samples. The master seed is not stored in the
/// file, so the returned ensemble carries `master_seed`.
pub fn read_ensemble<R: Read>(mut r: R, symbol: MomentumSymbol, master_seed: u64) -> Result<Ensemble> {
    let header = EnsembleHeader::read(&mut r)?;
    let model = header.model(symbol).map_err(as_format)?;
    let sites = header.spec.num_sites();
    let n = usize::try_from(header.n_samples).map_err(|_| Error::Format("n_samples too large".into()))?;
    let mut samples = Vec::new();
    samples
        .try_reserve_exact(n)
        .map_err(|e| Error::Format(format!("cannot hold {n} samples: {e}")))?;
    let mut bytes = vec![0u8; sites * 8];
    for i in 0..n {
        read_exact(&mut r, &mut bytes, &format!("sample {i}"))?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        samples.push(LatticeField::new(header.spec, values).map_err(|e| Error::Format(format!("sample {i}: {e}")))?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    Ok(Ensemble {
        model,
        master_seed,
        samples,
    })
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::from(e),
    })
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_ensemble;

    fn ensemble(law: JumpLaw) -> Ensemble {
        let spec = LatticeSpec::new(2, 4, 0.25).unwrap();
        let params = ModelParams::new(0.3, 1.5, MomentumSymbol::Discrete).unwrap();
        let noise = LevyCharacteristic::new(-0.5, 0.25, 3.0, law).unwrap();
        sample_ensemble(&FieldModel::new(params, noise, spec).unwrap(), 3, 9).unwrap()
    }

    #[test]
    fn roundtrip_every_jump_law() {
        for law in [
            JumpLaw::atoms(vec![(1.0, 0.25), (-2.0, 0.75)]).unwrap(),
            JumpLaw::uniform(0.5, 2.0).unwrap(),
            JumpLaw::two_sided_exponential(3.0).unwrap(),
        ] {
            let e = ensemble(law);
            let bytes = write_ensemble(Vec::new(), &e).unwrap();
            let back = read_ensemble(bytes.as_slice(), MomentumSymbol::Discrete, 9).unwrap();
            assert_eq!(back, e);
        }
    }

    #[test]
    fn header_bytes_follow_the_layout() {
        let e = ensemble(JumpLaw::two_sided_exponential(3.0).unwrap());
        let bytes = write_ensemble(Vec::new(), &e).unwrap();
        assert_eq!(&bytes[..4], b"LFLB");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        assert_eq!(
            [f(16), f(24), f(32), f(40), f(48), f(56)],
            [0.25, 0.3, 1.5, -0.5, 0.25, 3.0]
        );
        assert_eq!(u32::from_le_bytes(bytes[64..68].try_into().unwrap()), 3);
        assert_eq!(f(68), 3.0);
        assert_eq!(u64::from_le_bytes(bytes[76..84].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 84 + 3 * 16 * 8);
        assert_eq!(f(84), e.samples[0].values()[0]);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let e = ensemble(JumpLaw::atom(1.0).unwrap());
        let good = write_ensemble(Vec::new(), &e).unwrap();
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let mut bad_tag = good.clone();
        bad_tag[64] = 9;
        let truncated = &good[..good.len() - 1];
        let mut trailing = good.clone();
        trailing.push(0);
        for bytes in [bad_magic.as_slice(), bad_tag.as_slice(), truncated, trailing.as_slice()] {
            assert!(matches!(
                read_ensemble(bytes, MomentumSymbol::Discrete, 0),
                Err(Error::Format(_))
            ));
        }
    }

    #[test]
    fn writer_checks_sample_count() {
        let e = ensemble(JumpLaw::atom(1.0).unwrap());
        let header = EnsembleHeader::for_model(&e.model, 2);
        let mut w = EnsembleWriter::new(Vec::new(), &header).unwrap();
        w.write_sample(&e.samples[0]).unwrap();
        assert!(w.finish().is_err());
    }
}
