//! Toeplitz-hashing strong extractor over GF(2).
//!
//! For an `m × n` extraction the seed has `n + m − 1` bits and defines
//! `T[i][j] = seed[m − 1 + j − i]`: the first row is `seed[m−1..]` and the
//! first column is `seed[0..m]` read upwards. Output bit `i` is the parity of
//! `seed[m−1−i .. m−1−i+n] ∧ raw`. Bit strings are packed LSB-first.
//!
//! Two evaluation paths give identical results: a word-parallel row scan for
//! small outputs and an FFT correlation for large ones.

use crate::error::{Error, Result};
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use std::sync::Arc;

/// Default raw bits per extraction block.
pub const DEFAULT_BLOCK_BITS: usize = 1 << 20;

/// Packed bit string, LSB-first within each word (and byte).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.words[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }

    /// Reads `len` bits from LSB-first bytes.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() < len.div_ceil(8) {
            return Err(Error::Argument(format!(
                "{} bytes hold fewer than {len} bits",
                bytes.len()
            )));
        }
        let mut out = Self::zeros(len);
        for (k, &byte) in bytes.iter().take(len.div_ceil(8)).enumerate() {
            out.words[k / 8] |= (byte as u64) << (8 * (k % 8));
        }
        out.clear_tail();
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Bits `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = Bits::zeros(len);
        for k in 0..out.words.len() {
            out.words[k] = self.word_at(start + 64 * k);
        }
        out.clear_tail();
        out
    }

    pub fn extend(&mut self, other: &Bits) {
        let start = self.len;
        self.len += other.len;
        self.words.resize(self.len.div_ceil(64), 0);
        for i in 0..other.len {
            if other.get(i) {
                self.words[(start + i) / 64] |= 1 << ((start + i) % 64);
            }
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len);
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        }
    }

    /// 64 bits starting at `offset`; positions past the end read as zero.
    fn word_at(&self, offset: usize) -> u64 {
        let q = offset / 64;
        let r = offset % 64;
        let lo = self.words.get(q).copied().unwrap_or(0);
        if r == 0 {
            return lo;
        }
        let hi = self.words.get(q + 1).copied().unwrap_or(0);
        (lo >> r) | (hi << (64 - r))
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

/// Seed for an `m_out × n_in` Toeplitz matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: Bits,
    n_in: usize,
    m_out: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: Bits, n_in: usize, m_out: usize) -> Result<Self> {
        if n_in == 0 || m_out == 0 {
            return Err(Error::Argument("extractor dimensions must be positive".into()));
        }
        if bits.len() != n_in + m_out - 1 {
            return Err(Error::Argument(format!(
                "seed has {} bits, {n_in}x{m_out} extraction needs {}",
                bits.len(),
                n_in + m_out - 1
            )));
        }
        Ok(Self { bits, n_in, m_out })
    }

    /// Takes the leading `n_in + m_out − 1` bits of a longer seed.
    pub fn from_prefix(bits: &Bits, n_in: usize, m_out: usize) -> Result<Self> {
        let need = (n_in + m_out).saturating_sub(1);
        if bits.len() < need {
            return Err(Error::Argument(format!(
                "seed has {} bits, {n_in}x{m_out} extraction needs {need}",
                bits.len()
            )));
        }
        Self::new(bits.slice(0, need), n_in, m_out)
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn m_out(&self) -> usize {
        self.m_out
    }
}

/// Largest output that keeps the extraction error below `epsilon_ext`:
/// `⌊certified_bits − 2·log₂(1/ε)⌋`, floored at zero.
pub fn output_length(certified_bits: u64, epsilon_ext: f64) -> Result<u64> {
    if !(epsilon_ext > 0.0 && epsilon_ext <= 1.0) {
        return Err(Error::Argument(format!(
            "extractor epsilon must lie in (0,1], got {epsilon_ext}"
        )));
    }
    let penalty = 2.0 * (1.0 / epsilon_ext).log2();
    Ok((certified_bits as f64 - penalty).floor().max(0.0) as u64)
}

/// `T·raw` over GF(2).
pub fn toeplitz_extract(raw: &Bits, seed: &ToeplitzSeed, m_out: usize) -> Result<Bits> {
    if m_out != seed.m_out {
        return Err(Error::Argument(format!(
            "seed is for {} output bits, called with {m_out}",
            seed.m_out
        )));
    }
    ToeplitzHasher::new(seed)?.hash(raw)
}

/// A seed prepared for repeated extraction of equally sized blocks.
pub struct ToeplitzHasher {
    seed: ToeplitzSeed,
    fft: Option<FftPlan>,
}

impl ToeplitzHasher {
    pub fn new(seed: &ToeplitzSeed) -> Result<Self> {
        if seed.m_out > seed.n_in {
            return Err(Error::Argument(format!(
                "cannot extract {} bits from {} raw bits",
                seed.m_out, seed.n_in
            )));
        }
        let fft = use_fft(seed.n_in, seed.m_out).then(|| FftPlan::new(seed));
        Ok(Self {
            seed: seed.clone(),
            fft,
        })
    }

    pub fn hash(&self, raw: &Bits) -> Result<Bits> {
        if raw.len() != self.seed.n_in {
            return Err(Error::Argument(format!(
                "seed is for {} raw bits, called with {}",
                self.seed.n_in,
                raw.len()
            )));
        }
        Ok(match &self.fft {
            Some(plan) => plan.apply(raw),
            None => extract_rows(raw, &self.seed),
        })
    }
}

/// Extracts consecutive segments of `raw`, each with its own `(n_in, m_out)`
/// and a seed prefix of the shared seed. Outputs are concatenated in order.
pub fn extract_segments(raw: &Bits, seed_bits: &Bits, segments: &[(usize, usize)]) -> Result<Bits> {
    let total: usize = segments.iter().map(|s| s.0).sum();
    if total > raw.len() {
        return Err(Error::Argument(format!(
            "segments cover {total} bits, raw stream has {}",
            raw.len()
        )));
    }
    let mut shapes: Vec<(usize, usize)> = segments.iter().copied().filter(|s| s.1 > 0).collect();
    shapes.sort_unstable();
    shapes.dedup();
    let hashers = shapes
        .iter()
        .map(|&(n, m)| ToeplitzHasher::new(&ToeplitzSeed::from_prefix(seed_bits, n, m)?))
        .collect::<Result<Vec<_>>>()?;
    let mut starts = Vec::with_capacity(segments.len());
    let mut at = 0;
    for &(n, _) in segments {
        starts.push(at);
        at += n;
    }
    let parts: Vec<Bits> = segments
        .par_iter()
        .zip(starts.par_iter())
        .map(|(&(n, m), &start)| {
            if m == 0 {
                return Ok(Bits::zeros(0));
            }
            let k = shapes.binary_search(&(n, m)).expect("shape registered");
            hashers[k].hash(&raw.slice(start, n))
        })
        .collect::<Result<_>>()?;
    let mut out = Bits::zeros(0);
    for p in &parts {
        out.extend(p);
    }
    Ok(out)
}

/// Splits `raw` into blocks of `block_bits` and extracts `m_out` bits from
/// each; a trailing partial block is discarded.
pub fn extract_stream(raw: &Bits, seed_bits: &Bits, block_bits: usize, m_out: usize) -> Result<Bits> {
    if block_bits == 0 {
        return Err(Error::Argument("block size must be positive".into()));
    }
    let segments = vec![(block_bits, m_out); raw.len() / block_bits];
    extract_segments(raw, seed_bits, &segments)
}

fn fft_size(n: usize, m: usize) -> usize {
    (2 * m)
        .next_power_of_two()
        .max(1024)
        .min((n + m - 1).next_power_of_two())
}

fn use_fft(n: usize, m: usize) -> bool {
    let size = fft_size(n, m);
    let chunks = n.div_ceil(size - m + 1) as f64;
    let row_cost = (m as f64) * (n as f64 / 64.0);
    let fft_cost = 20.0 * chunks * size as f64 * (size as f64).log2();
    row_cost > fft_cost
}

fn extract_rows(raw: &Bits, seed: &ToeplitzSeed) -> Bits {
    let (n, m) = (seed.n_in, seed.m_out);
    let words = n.div_ceil(64);
    let tail_mask = if n % 64 == 0 { u64::MAX } else { (1u64 << (n % 64)) - 1 };
    let mut out = Bits::zeros(m);
    for i in 0..m {
        let offset = m - 1 - i;
        let mut acc = 0u64;
        for k in 0..words {
            let mut w = seed.bits.word_at(offset + 64 * k) & raw.words[k];
            if k == words - 1 {
                w &= tail_mask;
            }
            acc ^= w;
        }
        if acc.count_ones() % 2 == 1 {
            out.words[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// Overlap-save evaluation of the correlation `c[k] = Σ_j raw[j]·seed[j+k]`
/// for `k < m`; output bit `i` is `c[m−1−i] mod 2`. Raw is cut into chunks
/// of `size − m + 1` bits so that each chunk's correlation against its seed
/// window fits one transform without wrap-around. Seed spectra are computed
/// once; two real chunks share each complex transform.
struct FftPlan {
    n: usize,
    m: usize,
    size: usize,
    chunk: usize,
    spectra: Vec<Vec<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    fn new(seed: &ToeplitzSeed) -> Self {
        let (n, m) = (seed.n_in, seed.m_out);
        let size = fft_size(n, m);
        let chunk = size - m + 1;
        let chunks = n.div_ceil(chunk);
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let window = |q: usize, t: usize| {
            let j = q * chunk + t;
            t < chunk + m - 1 && j < n + m - 1 && seed.bits.get(j)
        };
        let mut spectra = Vec::with_capacity(chunks);
        for q in (0..chunks).step_by(2) {
            let mut z: Vec<Complex64> = (0..size)
                .map(|t| {
                    let re = f64::from(u8::from(window(q, t)));
                    let im = if q + 1 < chunks { f64::from(u8::from(window(q + 1, t))) } else { 0.0 };
                    Complex64::new(re, im)
                })
                .collect();
            forward.process(&mut z);
            let (a, b) = split_real_pair(&z);
            spectra.push(a);
            if q + 1 < chunks {
                spectra.push(b);
            }
        }
        Self {
            n,
            m,
            size,
            chunk,
            spectra,
            forward,
            inverse,
        }
    }

    fn apply(&self, raw: &Bits) -> Bits {
        let (n, m, size, chunk) = (self.n, self.m, self.size, self.chunk);
        let chunks = self.spectra.len();
        let mut parity = vec![false; m];
        let mut z = vec![Complex64::new(0.0, 0.0); size];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let bit = |q: usize, t: usize| {
            let j = q * chunk + t;
            if t < chunk && j < n && raw.get(j) {
                1.0
            } else {
                0.0
            }
        };
        let scale = 1.0 / size as f64;
        for q in (0..chunks).step_by(2) {
            let pair = q + 1 < chunks;
            for (t, v) in z.iter_mut().enumerate() {
                *v = Complex64::new(bit(q, t), if pair { bit(q + 1, t) } else { 0.0 });
            }
            self.forward.process_with_scratch(&mut z, &mut scratch);
            let s1 = &self.spectra[q];
            let s2 = if pair { Some(&self.spectra[q + 1]) } else { None };
            // Both products are transforms of real sequences, so they can
            // share one inverse as real and imaginary parts.
            let mut prod: Vec<Complex64> = (0..size)
                .map(|f| {
                    let a = z[f];
                    let b = z[(size - f) % size].conj();
                    let r1 = (a + b) * 0.5;
                    let mut p = r1.conj() * s1[f];
                    if let Some(s2) = s2 {
                        let r2 = (a - b) * Complex64::new(0.0, -0.5);
                        p += Complex64::new(0.0, 1.0) * r2.conj() * s2[f];
                    }
                    p
                })
                .collect();
            self.inverse.process_with_scratch(&mut prod, &mut scratch);
            for (k, par) in parity.iter_mut().enumerate() {
                let c = prod[k] * scale;
                *par ^= odd(c.re);
                if pair {
                    *par ^= odd(c.im);
                }
            }
        }
        let mut out = Bits::zeros(m);
        for i in 0..m {
            if parity[m - 1 - i] {
                out.words[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }
}

fn odd(c: f64) -> bool {
    let count = c.round();
    debug_assert!((c - count).abs() < 0.25, "FFT correlation lost precision");
    (count as u64) % 2 == 1
}

/// Spectra of the real and imaginary parts of a transformed complex sequence.
fn split_real_pair(z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let size = z.len();
    (0..size)
        .map(|f| {
            let a = z[f];
            let b = z[(size - f) % size].conj();
            ((a + b) * 0.5, (a - b) * Complex64::new(0.0, -0.5))
        })
        .unzip()
}

#[cfg(test)]
fn extract_fft(raw: &Bits, seed: &ToeplitzSeed) -> Bits {
    FftPlan::new(seed).apply(raw)
}
