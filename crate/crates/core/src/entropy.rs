//! Entropy estimation, randomness sanity checks and the harvest budget.

use crate::error::{Error, Result};
use crate::extractor::entropy_capacity;
use crate::rng::streams;
use crate::sram::{create_tag, DecayParams, TagSpec};

/// Empirical per-bit `1` frequencies over repeated cold boots.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasProfile {
    pub per_bit_one_freq: Vec<f64>,
    pub trials: usize,
}

/// Boots the tag built from `seed` `trials` times, each boot drawing from its
/// own substream, and records how often every bit came up `1`.
pub fn estimate_biases(spec: &TagSpec, decay: &DecayParams, seed: u64, trials: usize) -> Result<BiasProfile> {
    if trials == 0 {
        return Err(Error::Range("trials must be at least 1".into()));
    }
    let template = create_tag(spec.clone(), *decay, seed)?;
    let n = template.len_bits();
    let mut ones = vec![0u32; n];
    for trial in 0..trials {
        let mut tag = template.clone();
        tag.reseed_power_up(seed, streams::TRIAL_BASE + trial as u64);
        tag.power_on(0.0)?;
        for (count, bit) in ones.iter_mut().zip(tag.read_bits(0, n)?) {
            *count += bit as u32;
        }
    }
    Ok(BiasProfile {
        per_bit_one_freq: ones.into_iter().map(|c| c as f64 / trials as f64).collect(),
        trials,
    })
}

/// Mean of `-log2(max(p, 1 - p))` over all bits. Bits that never changed
/// contribute exactly zero.
pub fn min_entropy_density(profile: &BiasProfile) -> Result<f64> {
    if profile.per_bit_one_freq.is_empty() {
        return Err(Error::Empty);
    }
    let total: f64 = profile
        .per_bit_one_freq
        .iter()
        .map(|&p| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p.max(1.0 - p).log2() })
        .sum();
    Ok(total / profile.per_bit_one_freq.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonobitResult {
    /// `|ones - n/2| / (sqrt(n) / 2)`.
    pub statistic: f64,
    /// Two-sided normal tail probability of `statistic`.
    pub p_value: f64,
    pub pass: bool,
}

pub const MIN_TEST_BITS: usize = 100;

fn check_len(bits: &[bool]) -> Result<()> {
    if bits.len() < MIN_TEST_BITS {
        return Err(Error::InsufficientInput { needed: MIN_TEST_BITS, available: bits.len() });
    }
    Ok(())
}

pub fn monobit_test(bits: &[bool], alpha: f64) -> Result<MonobitResult> {
    check_len(bits)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("significance {alpha} not in (0, 1)")));
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b).count() as f64;
    let statistic = (ones - n / 2.0).abs() / (n.sqrt() / 2.0);
    let p_value = libm::erfc(statistic / std::f64::consts::SQRT_2);
    Ok(MonobitResult { statistic, p_value, pass: p_value >= alpha })
}

/// Lag-1 Pearson correlation of the sequence with itself shifted by one.
pub fn serial_correlation(bits: &[bool]) -> Result<f64> {
    check_len(bits)?;
    let x: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
    let (a, b) = (&x[..x.len() - 1], &x[1..]);
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        cov += (p - ma) * (q - mb);
        va += (p - ma).powi(2);
        vb += (q - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// One line of the feasibility table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetRow {
    pub free_bytes: u64,
    /// Random bits credited per harvest.
    pub capacity_bits: u64,
    pub protocol_bits: u64,
    pub harvests: u64,
    pub cooldown_s: u64,
    /// Cooldowns only between harvests: `(harvests - 1) * cooldown`.
    pub wait_s_between: u64,
    /// A cooldown before every harvest: `harvests * cooldown`.
    pub wait_s_per: u64,
}

impl BudgetRow {
    /// Row for an arbitrary per-harvest supply.
    pub fn from_supply(free_bytes: u64, capacity_bits: u64, protocol_bits: u64, cooldown_s: u64) -> Result<Self> {
        if protocol_bits == 0 || cooldown_s == 0 {
            return Err(Error::Range("protocol bits and cooldown must be positive".into()));
        }
        if capacity_bits == 0 {
            return Err(Error::Infeasible(format!("{free_bytes} free bytes supply no random bits")));
        }
        let harvests = protocol_bits.div_ceil(capacity_bits);
        Ok(Self {
            free_bytes,
            capacity_bits,
            protocol_bits,
            harvests,
            cooldown_s,
            wait_s_between: (harvests - 1) * cooldown_s,
            wait_s_per: harvests * cooldown_s,
        })
    }
}

pub fn budget(free_bytes: u64, density: f64, protocol_bits: u64, cooldown_s: u64) -> Result<BudgetRow> {
    BudgetRow::from_supply(free_bytes, entropy_capacity(free_bytes, density)?, protocol_bits, cooldown_s)
}
