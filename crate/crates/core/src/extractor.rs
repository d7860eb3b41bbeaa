//! PH universal hash and the harvest pipeline over uninitialized memory.
//!
//! PH consumes 16 message words `m` and 16 key words `k` of `w` bits each:
//!
//! ```text
//! PH_k(m) = sum_{i=1..8} (m[2i-1] + k[2i-1]) * (m[2i] + k[2i])
//! ```
//!
//! Additions are exact, not reduced modulo `2^w`, so every term is below
//! `(2^(w+1) - 1)^2` and the sum of eight of them is below `2^(2w+5)`: 37 bits
//! at `w = 16` and 133 bits at `w = 64`.
//!
//! During a harvest the memory supplies both halves. Each chunk of `32w` bits
//! is cut into 32 big-endian words; the first 16 are the message, the last 16
//! the key.

use crate::bits;
use crate::error::{Error, Result};
use crate::sram::TagState;
use crate::wide::U192;

/// Min-entropy per bit of uninitialized SRAM.
pub const DEFAULT_DENSITY: f64 = 0.103;

/// Product terms per hash.
pub const PAIRS: usize = 8;

/// Message words per hash (equal to the key word count).
pub const WORDS: usize = 2 * PAIRS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhConfig {
    word_bits: u32,
}

impl Default for PhConfig {
    fn default() -> Self {
        Self::W16
    }
}

impl PhConfig {
    /// Reduced block size that fits the output in a 64-bit integer.
    pub const W16: Self = Self { word_bits: 16 };
    pub const W64: Self = Self { word_bits: 64 };

    /// Any width in `1..=64` is accepted; the harvest pipeline is normally
    /// run at 16 or 64, the small widths exist for exhaustive checking.
    pub fn new(word_bits: u32) -> Result<Self> {
        if !(1..=64).contains(&word_bits) {
            return Err(Error::Range(format!("word width {word_bits} not in 1..=64")));
        }
        Ok(Self { word_bits })
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn pairs(&self) -> usize {
        PAIRS
    }

    /// `2w + 5`.
    pub fn output_bits(&self) -> usize {
        2 * self.word_bits as usize + 5
    }

    /// Memory bits consumed per hash, `32w`.
    pub fn chunk_bits(&self) -> usize {
        2 * WORDS * self.word_bits as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashOutput {
    value: U192,
    width_bits: usize,
}

impl HashOutput {
    pub fn value(&self) -> U192 {
        self.value
    }

    pub fn width_bits(&self) -> usize {
        self.width_bits
    }

    /// All `width_bits` bits, MSB first, zero-padded at the top.
    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.width_bits).rev().map(|i| self.value.bit(i)).collect()
    }

    /// The `n` least significant bits, MSB first.
    pub fn low_bits(&self, n: usize) -> Vec<bool> {
        (0..n.min(self.width_bits)).rev().map(|i| self.value.bit(i)).collect()
    }
}

pub fn ph_hash(m: &[u64], k: &[u64], cfg: PhConfig) -> Result<HashOutput> {
    for words in [m, k] {
        if words.len() != WORDS {
            return Err(Error::Arity { expected: WORDS, got: words.len() });
        }
    }
    let w = cfg.word_bits;
    if let Some(bad) = m.iter().chain(k).find(|&&x| w < 64 && x >> w != 0) {
        return Err(Error::Range(format!("word {bad:#x} exceeds {w} bits")));
    }
    let value = m.chunks_exact(2).zip(k.chunks_exact(2)).fold(U192::ZERO, |acc, (mp, kp)| {
        let left = mp[0] as u128 + kp[0] as u128;
        let right = mp[1] as u128 + kp[1] as u128;
        acc.add(U192::mul_u128(left, right))
    });
    Ok(HashOutput { value, width_bits: cfg.output_bits() })
}

/// Output of one pass of the extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestReport {
    /// Concatenated hash outputs, MSB first.
    pub bits: Vec<bool>,
    pub source_bytes: usize,
    pub chunks: usize,
    /// `floor(source_bytes * 8 * DEFAULT_DENSITY)`.
    pub entropy_capacity_bits: u64,
    pub extractor_yield_bits: usize,
    /// Trailing input bits too short for a whole chunk.
    pub discarded_bits: usize,
    pub word_bits: u32,
}

impl HarvestReport {
    /// The low `2w` bits of every chunk's output, concatenated. The top five
    /// bits of each output are biased towards zero.
    pub fn low_bits_per_chunk(&self, n: usize) -> Vec<bool> {
        let width = 2 * self.word_bits as usize + 5;
        let n = n.min(width);
        self.bits.chunks_exact(width).flat_map(|c| c[width - n..].iter().copied()).collect()
    }
}

fn words_of(chunk: &[bool], w: usize) -> Vec<u64> {
    chunk.chunks_exact(w).map(bits::to_u64).collect()
}

pub fn extract_all(memory: &[bool], cfg: PhConfig) -> Result<HarvestReport> {
    let chunk_bits = cfg.chunk_bits();
    if memory.len() < chunk_bits {
        return Err(Error::InsufficientInput { needed: chunk_bits, available: memory.len() });
    }
    let w = cfg.word_bits as usize;
    let mut out = Vec::with_capacity(memory.len() / chunk_bits * cfg.output_bits());
    let chunks = memory.chunks_exact(chunk_bits);
    let discarded_bits = chunks.remainder().len();
    let mut count = 0;
    for chunk in chunks {
        let words = words_of(chunk, w);
        let h = ph_hash(&words[..WORDS], &words[WORDS..], cfg)?;
        out.extend(h.to_bits());
        count += 1;
    }
    let source_bytes = memory.len() / 8;
    Ok(HarvestReport {
        extractor_yield_bits: out.len(),
        bits: out,
        source_bytes,
        chunks: count,
        entropy_capacity_bits: entropy_capacity(source_bytes as u64, DEFAULT_DENSITY)?,
        discarded_bits,
        word_bits: cfg.word_bits,
    })
}

/// Hashes the tag's free region (everything above the firmware reservation).
/// Memory is only read, so harvesting twice without a power cycle returns
/// the same bits.
pub fn harvest(tag: &TagState, cfg: PhConfig) -> Result<HarvestReport> {
    let spec = tag.spec();
    let start = spec.reserved_bytes * 8;
    let region = tag.read_bits(start, spec.free_bytes() * 8)?;
    extract_all(&region, cfg)
}

/// Bits the pipeline outputs from `free_bytes` of memory.
pub fn extractor_yield(free_bytes: usize, cfg: PhConfig) -> usize {
    free_bytes * 8 / cfg.chunk_bits() * cfg.output_bits()
}

/// `floor(free_bytes * 8 * density)`.
pub fn entropy_capacity(free_bytes: u64, density: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Range(format!("density {density} not in [0, 1]")));
    }
    // the epsilon keeps products like 100 * 0.29 from flooring one short
    let raw = (free_bytes * 8) as f64 * density;
    Ok((raw + raw * 1e-12).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sram::{create_tag, DecayParams, TagSpec};
    use proptest::prelude::*;

    #[test]
    fn hand_computed_hashes() {
        let zeros = [0u64; 16];
        assert_eq!(ph_hash(&zeros, &zeros, PhConfig::W16).unwrap().value(), U192::ZERO);

        let mut m = [0u64; 16];
        let mut k = [0u64; 16];
        m[0] = 1;
        k[0] = 2;
        m[1] = 3;
        k[1] = 4;
        assert_eq!(ph_hash(&m, &k, PhConfig::W16).unwrap().value().to_u128(), Some(21));
    }

    #[test]
    fn all_ones_hits_width_bound() {
        let max16 = [0xFFFF; 16];
        let h = ph_hash(&max16, &max16, PhConfig::W16).unwrap();
        assert_eq!(h.value().to_u128(), Some(137_434_759_200));
        assert!(h.value() < U192::pow2(37));
        assert_eq!(h.width_bits(), 37);

        let max64 = [u64::MAX; 16];
        let h = ph_hash(&max64, &max64, PhConfig::W64).unwrap();
        assert!(h.value() < U192::pow2(133));
        assert!(h.value() >= U192::pow2(132));
        assert_eq!(h.width_bits(), 133);
    }

    #[test]
    fn rejects_bad_words() {
        let ok = [0u64; 16];
        let mut bad = [0u64; 16];
        bad[3] = 1 << 16;
        assert!(matches!(ph_hash(&bad, &ok, PhConfig::W16), Err(Error::Range(_))));
        assert_eq!(ph_hash(&ok[..15], &ok, PhConfig::W16), Err(Error::Arity { expected: 16, got: 15 }));
        assert!(PhConfig::new(0).is_err());
        assert!(PhConfig::new(65).is_err());
    }

    #[test]
    fn extraction_sizes() {
        let mem = vec![true; 2048];
        let r = extract_all(&mem, PhConfig::W64).unwrap();
        assert_eq!((r.chunks, r.extractor_yield_bits), (1, 133));
        let r = extract_all(&mem, PhConfig::W16).unwrap();
        assert_eq!((r.chunks, r.extractor_yield_bits, r.discarded_bits), (4, 148, 0));
        let r = extract_all(&mem[..512], PhConfig::W16).unwrap();
        assert_eq!((r.chunks, r.extractor_yield_bits), (1, 37));
        assert_eq!(
            extract_all(&mem[..511], PhConfig::W16),
            Err(Error::InsufficientInput { needed: 512, available: 511 })
        );
    }

    #[test]
    fn chunk_layout_is_message_then_key() {
        // message word 0 = 1, key word 1 = 1 -> (1 + 0) * (0 + 1) = 1
        let mut mem = vec![false; 512];
        mem[15] = true;
        mem[16 * 16 + 16 + 15] = true;
        let r = extract_all(&mem, PhConfig::W16).unwrap();
        assert_eq!(bits::to_u64(&r.bits), 1);
    }

    #[test]
    fn default_tag_harvest() {
        let mut tag = create_tag(TagSpec::default(), DecayParams::default(), 1).unwrap();
        assert_eq!(harvest(&tag, PhConfig::W16), Err(Error::Unpowered));
        tag.power_on(0.0).unwrap();
        let r = harvest(&tag, PhConfig::W16).unwrap();
        assert_eq!(r.source_bytes, 376);
        assert_eq!(r.chunks, 5);
        assert_eq!(r.extractor_yield_bits, 185);
        assert_eq!(r.discarded_bits, 3008 - 2560);
        assert_eq!(r.entropy_capacity_bits, 309);
        assert_eq!(harvest(&tag, PhConfig::W16).unwrap(), r);
    }

    #[test]
    fn small_free_region_is_insufficient() {
        let spec = TagSpec { total_bytes: 100, reserved_bytes: 40, ..TagSpec::default() };
        let mut tag = create_tag(spec, DecayParams::default(), 1).unwrap();
        tag.power_on(0.0).unwrap();
        assert!(matches!(harvest(&tag, PhConfig::W16), Err(Error::InsufficientInput { .. })));
    }

    #[test]
    fn yield_without_a_tag() {
        assert_eq!(extractor_yield(376, PhConfig::W16), 185);
        assert_eq!(extractor_yield(144, PhConfig::W16), 74);
        assert_eq!(extractor_yield(376, PhConfig::W64), 133);
        assert_eq!(extractor_yield(63, PhConfig::W16), 0);
    }

    #[test]
    fn capacity_values() {
        assert_eq!(entropy_capacity(376, 0.103).unwrap(), 309);
        assert_eq!(entropy_capacity(144, 0.103).unwrap(), 118);
        assert_eq!(entropy_capacity(256, 0.103).unwrap(), 210);
        assert_eq!(entropy_capacity(0, 0.7).unwrap(), 0);
        assert_eq!(entropy_capacity(100, 0.29).unwrap() as f64, (800.0f64 * 0.29).round());
        assert!(entropy_capacity(10, 1.5).is_err());
    }

    #[test]
    fn low_bits_per_chunk_takes_tail_of_each_output() {
        let mem: Vec<bool> = (0..1024).map(|i| i % 3 == 0).collect();
        let r = extract_all(&mem, PhConfig::W16).unwrap();
        let low = r.low_bits_per_chunk(32);
        assert_eq!(low.len(), 64);
        assert_eq!(&low[..32], &r.bits[5..37]);
        assert_eq!(&low[32..], &r.bits[42..74]);
    }

    proptest! {
        #[test]
        fn yield_arithmetic(len in 512usize..6000, w in prop::sample::select(vec![16u32, 64])) {
            let mem: Vec<bool> = (0..len).map(|i| i % 7 < 3).collect();
            let cfg = PhConfig::new(w).unwrap();
            match extract_all(&mem, cfg) {
                Ok(r) => {
                    prop_assert_eq!(r.extractor_yield_bits, len / cfg.chunk_bits() * cfg.output_bits());
                    prop_assert_eq!(r.bits.len(), r.chunks * cfg.output_bits());
                    prop_assert_eq!(r.discarded_bits, len % cfg.chunk_bits());
                }
                Err(e) => {
                    let short = matches!(e, Error::InsufficientInput { .. });
                    prop_assert!(len < cfg.chunk_bits() && short);
                }
            }
        }

        #[test]
        fn width_bound_holds(m in prop::array::uniform16(any::<u64>()), k in prop::array::uniform16(any::<u64>())) {
            let h = ph_hash(&m, &k, PhConfig::W64).unwrap();
            prop_assert!(h.value() < U192::pow2(133));
            let m16 = m.map(|x| x & 0xFFFF);
            let k16 = k.map(|x| x >> 48);
            let h = ph_hash(&m16, &k16, PhConfig::W16).unwrap();
            prop_assert!(h.value() < U192::pow2(37));
        }
    }
}
