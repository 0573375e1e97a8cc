//! Versioned binary encoding of networks, populations and whole training
//! states.
//!
//! All integers and floats are little-endian; floats are stored by bit
//! pattern so a decode reproduces the encoded state exactly. A checkpoint
//! file is `magic | version | payload length | payload | sha256(payload)`
//! and is rejected whole if any part fails to verify.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neural::{Activation, Layer, Network, N_MU};
use crate::xcsf::{Classifier, Population};

pub const NETWORK_VERSION: u8 = 1;
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"XCSFCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    pub fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }
    pub fn f64s(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.f64(x));
    }
    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or("unexpected end of data")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn u128(&mut self) -> std::result::Result<u128, String> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_bits(self.u64()?))
    }
    pub fn bytes(&mut self) -> std::result::Result<&'a [u8], String> {
        let n = self.u64()? as usize;
        self.take(n)
    }
    pub fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        if n > self.buf.len() / 8 + 1 {
            return Err("length field exceeds data".into());
        }
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn usize(&mut self) -> std::result::Result<usize, String> {
        usize::try_from(self.u64()?).map_err(|_| "size does not fit in memory".to_string())
    }
    pub fn finish(&self) -> std::result::Result<(), String> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.buf.len() - self.pos))
        }
    }
}

fn write_layer(w: &mut Writer, l: &Layer) {
    w.u64(l.n_in as u64);
    w.u64(l.n_out as u64);
    w.u8(l.activation.code());
    w.f64(l.eta);
    w.f64s(&l.mu);
    let mut bits = vec![0u8; l.mask.len().div_ceil(8)];
    for (k, &m) in l.mask.iter().enumerate() {
        if m {
            bits[k / 8] |= 1 << (k % 8);
        }
    }
    w.bytes(&bits);
    w.f64s(&l.weights);
    w.f64s(&l.biases);
    w.f64s(&l.weight_momentum);
    w.f64s(&l.bias_momentum);
}

fn read_layer(r: &mut Reader) -> std::result::Result<Layer, String> {
    let n_in = r.usize()?;
    let n_out = r.usize()?;
    let n = n_in.checked_mul(n_out).ok_or("layer size overflow")?;
    let activation = Activation::from_code(r.u8()?).ok_or("unknown activation code")?;
    let eta = r.f64()?;
    let mut mu = [0.0; N_MU];
    for m in &mut mu {
        *m = r.f64()?;
    }
    let bits = r.bytes()?;
    if bits.len() != n.div_ceil(8) {
        return Err("mask length disagrees with layer size".into());
    }
    let mask = (0..n).map(|k| bits[k / 8] >> (k % 8) & 1 == 1).collect();
    Ok(Layer {
        n_in,
        n_out,
        weights: r.f64s(n)?,
        biases: r.f64s(n_out)?,
        mask,
        activation,
        eta,
        weight_momentum: r.f64s(n)?,
        bias_momentum: r.f64s(n_out)?,
        mu,
    })
}

pub(crate) fn write_network(w: &mut Writer, net: &Network) {
    w.u8(NETWORK_VERSION);
    write_layer(w, &net.hidden);
    write_layer(w, &net.output);
}

pub(crate) fn read_network(r: &mut Reader) -> std::result::Result<Network, String> {
    let version = r.u8()?;
    if version != NETWORK_VERSION {
        return Err(format!("unsupported network record version {version}"));
    }
    let net = Network {
        hidden: read_layer(r)?,
        output: read_layer(r)?,
    };
    net.check_invariants().map_err(|e| e.to_string())?;
    Ok(net)
}

impl Network {
    /// Flat versioned record: dimensions, activations, rates, mask bits,
    /// weights, biases and momentum buffers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        write_network(&mut w, self);
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let net = read_network(&mut r).and_then(|n| r.finish().map(|_| n));
        net.map_err(Error::Invariant)
    }
}

fn write_classifier(w: &mut Writer, c: &Classifier) {
    w.f64(c.err);
    w.f64(c.fit);
    w.u32(c.num);
    w.u64(c.exp);
    w.f64(c.set_size);
    w.u64(c.ts);
    w.u64(c.age);
    w.u64(c.mtotal);
    write_network(w, &c.condition);
    write_network(w, &c.prediction);
}

fn read_classifier(r: &mut Reader) -> std::result::Result<Classifier, String> {
    Ok(Classifier {
        err: r.f64()?,
        fit: r.f64()?,
        num: r.u32()?,
        exp: r.u64()?,
        set_size: r.f64()?,
        ts: r.u64()?,
        age: r.u64()?,
        mtotal: r.u64()?,
        condition: read_network(r)?,
        prediction: read_network(r)?,
    })
}

pub(crate) fn write_population(w: &mut Writer, pop: &Population) {
    w.u64(pop.max_size as u64);
    w.u64(pop.trial);
    w.u64(pop.members.len() as u64);
    pop.members.iter().for_each(|c| write_classifier(w, c));
}

pub(crate) fn read_population(r: &mut Reader) -> std::result::Result<Population, String> {
    let max_size = r.usize()?;
    let trial = r.u64()?;
    let n = r.usize()?;
    let members = (0..n)
        .map(|_| read_classifier(r))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Population {
        members,
        max_size,
        trial,
    })
}

pub(crate) fn write_rng(w: &mut Writer, rng: &ChaCha8Rng) {
    w.buf.extend_from_slice(&rng.get_seed());
    w.u64(rng.get_stream());
    w.u128(rng.get_word_pos());
}

pub(crate) fn read_rng(r: &mut Reader) -> std::result::Result<ChaCha8Rng, String> {
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(r.u64()?);
    rng.set_word_pos(r.u128()?);
    Ok(rng)
}

/// Wraps `payload` with magic, version, length and checksum, then writes it
/// through a temporary file and a rename.
pub(crate) fn write_file(path: &Path, payload: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(payload.len() + 52);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&Sha256::digest(payload));
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

/// Reads and verifies a checkpoint file, returning its payload.
pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    let bad = |m: &str| Error::Checkpoint {
        path: path.into(),
        message: m.to_string(),
    };
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    if bytes.len() < 20 + 32 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() != 20 + len + 32 {
        return Err(bad("length field does not match file size"));
    }
    let payload = &bytes[20..20 + len];
    if Sha256::digest(payload).as_slice() != &bytes[20 + len..] {
        return Err(bad("checksum mismatch"));
    }
    Ok(payload.to_vec())
}
