//! HB+ authentication driven by harvested entropy, plus the harvest scheduler
//! and the power-based attacks.
//!
//! Each HB+ round costs the tag one `k`-bit blinding vector `b`, drawn from an
//! [`EntropyPool`]. Reader challenges `a` and the tag's Bernoulli noise come
//! from their own seeded streams and are not charged to the pool.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

use crate::bits;
use crate::error::{Error, Result};
use crate::extractor::{harvest, PhConfig};
use crate::rng::{self, streams};
use crate::sram::TagState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbPlusParams {
    pub secret_bits: usize,
    pub rounds: usize,
    /// Probability the tag flips its response bit.
    pub noise_rate: f64,
    /// Largest tolerated share of wrong responses.
    pub accept_threshold: f64,
}

impl Default for HbPlusParams {
    fn default() -> Self {
        Self { secret_bits: 224, rounds: 80, noise_rate: 0.25, accept_threshold: 0.375 }
    }
}

impl HbPlusParams {
    /// `accept_threshold` defaults to the midpoint between the noise rate and 1/2.
    pub fn new(secret_bits: usize, rounds: usize, noise_rate: f64, accept_threshold: Option<f64>) -> Result<Self> {
        let p = Self {
            secret_bits,
            rounds,
            noise_rate,
            accept_threshold: accept_threshold.unwrap_or((noise_rate + 0.5) / 2.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.secret_bits == 0 || self.rounds == 0 {
            return Err(Error::Constraint("secret length and rounds must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::Constraint(format!("noise rate {} not in [0, 0.5)", self.noise_rate)));
        }
        if !(self.noise_rate < self.accept_threshold && self.accept_threshold < 0.5) {
            return Err(Error::Constraint(format!(
                "threshold {} must lie strictly between noise rate {} and 0.5",
                self.accept_threshold, self.noise_rate
            )));
        }
        Ok(())
    }

    /// `floor(threshold * rounds)`.
    pub fn max_mismatches(&self) -> usize {
        (self.accept_threshold * self.rounds as f64).floor() as usize
    }

    /// Pool bits one full session draws.
    pub fn entropy_per_session(&self) -> u64 {
        (self.rounds * self.secret_bits) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbSecrets {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
}

pub fn keygen(params: &HbPlusParams, seed: u64) -> HbSecrets {
    let mut rng = rng::stream(seed, streams::KEYGEN);
    let mut draw = |n| (0..n).map(|_| rng.random_bool(0.5)).collect::<Vec<bool>>();
    let x = draw(params.secret_bits);
    let y = draw(params.secret_bits);
    HbSecrets { x, y }
}

/// FIFO of harvested bits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropyPool {
    bits: VecDeque<bool>,
    drawn: u64,
    deposited: u64,
    refills: u64,
}

impl EntropyPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn deposit(&mut self, bits: &[bool]) {
        self.bits.extend(bits);
        self.deposited += bits.len() as u64;
        self.refills += 1;
    }

    pub fn remaining(&self) -> usize {
        self.bits.len()
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    pub fn deposited(&self) -> u64 {
        self.deposited
    }

    pub fn refills(&self) -> u64 {
        self.refills
    }

    /// Takes `n` bits, or none at all if fewer are available.
    pub fn draw(&mut self, n: usize) -> Option<Vec<bool>> {
        if self.bits.len() < n {
            return None;
        }
        self.drawn += n as u64;
        Some(self.bits.drain(..n).collect())
    }
}

/// One HB+ round as seen on the air.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub b: Vec<bool>,
    pub a: Vec<bool>,
    pub z: bool,
    pub noise_bit: bool,
}

impl RoundRecord {
    /// `round a b z`, vectors as uppercase hex.
    pub fn to_line(&self, round: usize) -> String {
        format!("{round} {} {} {}", bits::to_hex(&self.a), bits::to_hex(&self.b), u8::from(self.z))
    }
}

/// Honest tag side of one round: draws `b` from the pool, then answers
/// `z = <a,x> ^ <b,y> ^ noise`.
pub fn tag_round(
    secrets: &HbSecrets,
    a: &[bool],
    pool: &mut EntropyPool,
    noise_rate: f64,
    noise: &mut impl Rng,
) -> Result<RoundRecord> {
    let k = secrets.x.len();
    if a.len() != k {
        return Err(Error::LengthMismatch(a.len(), k));
    }
    let b = pool
        .draw(k)
        .ok_or(Error::InsufficientEntropy { round: 0, needed: k, available: pool.remaining() })?;
    let noise_bit = noise.random_bool(noise_rate);
    let z = bits::dot(a, &secrets.x) ^ bits::dot(&b, &secrets.y) ^ noise_bit;
    Ok(RoundRecord { b, a: a.to_vec(), z, noise_bit })
}

/// Tag side of an HB+ session.
pub trait Prover {
    /// Answers challenge `a` in round `round`.
    fn round(&mut self, round: usize, a: &[bool]) -> Result<RoundRecord>;
}

pub struct HonestTag<'a> {
    pub secrets: &'a HbSecrets,
    pub pool: &'a mut EntropyPool,
    pub noise_rate: f64,
    pub noise: ChaCha8Rng,
}

impl Prover for HonestTag<'_> {
    fn round(&mut self, round: usize, a: &[bool]) -> Result<RoundRecord> {
        tag_round(self.secrets, a, self.pool, self.noise_rate, &mut self.noise).map_err(|e| match e {
            Error::InsufficientEntropy { needed, available, .. } => Error::InsufficientEntropy { round, needed, available },
            other => other,
        })
    }
}

/// Impostor without the secrets: random blinding vectors and coin-flip answers.
pub struct RandomResponder {
    pub secret_bits: usize,
    pub rng: ChaCha8Rng,
}

impl RandomResponder {
    pub fn new(secret_bits: usize, seed: u64) -> Self {
        Self { secret_bits, rng: rng::stream(seed, streams::RESPONDER) }
    }
}

impl Prover for RandomResponder {
    fn round(&mut self, _round: usize, a: &[bool]) -> Result<RoundRecord> {
        let b = (0..self.secret_bits).map(|_| self.rng.random_bool(0.5)).collect();
        Ok(RoundRecord { b, a: a.to_vec(), z: self.rng.random_bool(0.5), noise_bit: false })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthOutcome {
    pub accepted: bool,
    pub mismatches: usize,
    /// Bits the prover drew from its pool during the session.
    pub entropy_consumed: u64,
    pub transcript: Vec<RoundRecord>,
}

/// Reader-driven session: `rounds` fresh challenges, each response checked
/// against the noiseless value. Accepts when at most
/// [`HbPlusParams::max_mismatches`] responses are wrong.
pub fn run_session(
    params: &HbPlusParams,
    secrets: &HbSecrets,
    prover: &mut dyn Prover,
    challenge_seed: u64,
) -> Result<AuthOutcome> {
    params.validate()?;
    let mut challenges = rng::stream(challenge_seed, streams::CHALLENGE);
    let mut transcript = Vec::with_capacity(params.rounds);
    let mut mismatches = 0;
    for round in 0..params.rounds {
        let a: Vec<bool> = (0..params.secret_bits).map(|_| challenges.random_bool(0.5)).collect();
        let rec = prover.round(round, &a)?;
        if rec.b.len() != params.secret_bits {
            return Err(Error::LengthMismatch(rec.b.len(), params.secret_bits));
        }
        let expected = bits::dot(&a, &secrets.x) ^ bits::dot(&rec.b, &secrets.y);
        mismatches += usize::from(rec.z != expected);
        transcript.push(rec);
    }
    Ok(AuthOutcome { accepted: mismatches <= params.max_mismatches(), mismatches, entropy_consumed: 0, transcript })
}

/// Full HB+ session between a reader and an honest tag fed from `pool`.
pub fn authenticate(
    secrets: &HbSecrets,
    params: &HbPlusParams,
    pool: &mut EntropyPool,
    challenge_seed: u64,
    noise_seed: u64,
) -> Result<AuthOutcome> {
    if secrets.x.len() != params.secret_bits || secrets.y.len() != params.secret_bits {
        return Err(Error::LengthMismatch(secrets.x.len(), params.secret_bits));
    }
    let before = pool.drawn();
    let mut tag = HonestTag {
        secrets,
        noise_rate: params.noise_rate,
        noise: rng::stream(noise_seed, streams::NOISE),
        pool,
    };
    let mut outcome = run_session(params, secrets, &mut tag, challenge_seed)?;
    outcome.entropy_consumed = tag.pool.drawn() - before;
    Ok(outcome)
}

/// Session-level randomness demand of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolProfile {
    /// HB+ with all 80 rounds run at once.
    HbPlusParallel,
    /// HB#, a single 512-bit tag random value.
    HbSharp,
}

impl ProtocolProfile {
    pub fn bits(self) -> u64 {
        match self {
            Self::HbPlusParallel => HbPlusParams::default().entropy_per_session(),
            Self::HbSharp => 512,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::HbPlusParallel => "hb_plus_parallel",
            Self::HbSharp => "hb_sharp",
        }
    }
}

impl fmt::Display for ProtocolProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hb_plus_parallel" | "hb-plus" | "hb_plus" => Ok(Self::HbPlusParallel),
            "hb_sharp" | "hb-sharp" => Ok(Self::HbSharp),
            _ => Err(Error::Unknown { kind: "protocol", name: s.to_string() }),
        }
    }
}

pub fn consumption_profile(name: &str) -> Result<u64> {
    name.parse::<ProtocolProfile>().map(ProtocolProfile::bits)
}

/// What a harvest is credited with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupplyModel {
    /// `floor(free bits * density)` per harvest, as if an ideal extractor were used.
    EntropyCapacity,
    /// The bits the PH pipeline actually outputs.
    ExtractorYield,
}

impl SupplyModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::EntropyCapacity => "entropy_capacity",
            Self::ExtractorYield => "extractor_yield",
        }
    }
}

impl FromStr for SupplyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy_capacity" | "entropy-capacity" | "capacity" => Ok(Self::EntropyCapacity),
            "extractor_yield" | "extractor-yield" | "yield" => Ok(Self::ExtractorYield),
            _ => Err(Error::Unknown { kind: "supply model", name: s.to_string() }),
        }
    }
}

/// Where cooldowns fall relative to harvests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitConvention {
    /// Only between consecutive harvests.
    Between,
    /// Before every harvest, the first included.
    Per,
}

impl FromStr for WaitConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "between" => Ok(Self::Between),
            "per" => Ok(Self::Per),
            _ => Err(Error::Unknown { kind: "wait convention", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowerEventKind {
    PowerOn,
    Harvest { bits: usize, credited: u64 },
    PowerOff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEvent {
    pub time_s: f64,
    pub kind: PowerEventKind,
}

impl fmt::Display for PowerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PowerEventKind::PowerOn => write!(f, "{:.1} power_on", self.time_s),
            PowerEventKind::PowerOff => write!(f, "{:.1} power_off", self.time_s),
            PowerEventKind::Harvest { bits, credited } => {
                write!(f, "{:.1} harvest bits={bits} credited={credited}", self.time_s)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleReport {
    pub harvests: u64,
    /// Total cooldown time under the chosen convention.
    pub sim_wall_time_s: f64,
    pub credited_bits: u64,
    pub events: Vec<PowerEvent>,
    /// Bits deposited by the harvests, ready for a protocol to draw from.
    pub pool: EntropyPool,
}

/// Stretches harvested bits to `n` output bits with ChaCha20 keyed by the
/// harvest (folded into 256 bits). Models the ideal extractor the capacity
/// accounting presumes.
fn condition(harvested: &[bool], n: usize) -> Vec<bool> {
    let mut key = [0u8; 32];
    for (i, &b) in harvested.iter().enumerate() {
        key[(i / 8) % 32] ^= u8::from(b) << (7 - i % 8);
    }
    let mut rng = ChaCha20Rng::from_seed(key);
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

/// Power on, harvest, power off, cool down, repeat, until the credited supply
/// covers `profile_bits`.
pub fn scheduled_auth(
    tag: &mut TagState,
    cfg: PhConfig,
    profile_bits: u64,
    cooldown_s: u64,
    supply: SupplyModel,
    convention: WaitConvention,
) -> Result<ScheduleReport> {
    if profile_bits == 0 || cooldown_s == 0 {
        return Err(Error::Range("profile bits and cooldown must be positive".into()));
    }
    if tag.is_powered() {
        tag.power_off(tag.clock_s())?;
    }
    let start = tag.clock_s();
    let mut events = Vec::new();
    let mut pool = EntropyPool::new();
    let (mut harvests, mut credited, mut waited) = (0u64, 0u64, 0u64);
    while credited < profile_bits {
        if convention == WaitConvention::Per || harvests > 0 {
            waited += cooldown_s;
        }
        let on_at = start + waited as f64;
        tag.power_on(on_at)?;
        events.push(PowerEvent { time_s: on_at, kind: PowerEventKind::PowerOn });
        let report = harvest(tag, cfg)?;
        let gained = match supply {
            SupplyModel::EntropyCapacity => report.entropy_capacity_bits,
            SupplyModel::ExtractorYield => report.extractor_yield_bits as u64,
        };
        if gained == 0 {
            return Err(Error::Infeasible("a harvest supplies no random bits".into()));
        }
        match supply {
            SupplyModel::EntropyCapacity => pool.deposit(&condition(&report.bits, gained as usize)),
            SupplyModel::ExtractorYield => pool.deposit(&report.bits),
        }
        events.push(PowerEvent { time_s: on_at, kind: PowerEventKind::Harvest { bits: report.bits.len(), credited: gained } });
        tag.power_off(on_at)?;
        events.push(PowerEvent { time_s: on_at, kind: PowerEventKind::PowerOff });
        credited += gained;
        harvests += 1;
    }
    Ok(ScheduleReport { harvests, sim_wall_time_s: waited as f64, credited_bits: credited, events, pool })
}

/// Keeps the tag powered and harvests `queries` times, as a reader polling
/// continuously would.
pub fn continuous_power_attack(tag: &mut TagState, cfg: PhConfig, queries: usize) -> Result<Vec<Vec<bool>>> {
    if queries == 0 {
        return Err(Error::Range("at least one query is required".into()));
    }
    if !tag.is_powered() {
        tag.power_on(tag.clock_s())?;
    }
    (0..queries).map(|_| harvest(tag, cfg).map(|r| r.bits)).collect()
}

/// `cycles` rounds of power on, harvest, power off, then `off_interval_s`
/// without power.
pub fn cycled_harvests(tag: &mut TagState, cfg: PhConfig, cycles: usize, off_interval_s: f64) -> Result<Vec<Vec<bool>>> {
    if cycles == 0 {
        return Err(Error::Range("at least one cycle is required".into()));
    }
    if !(off_interval_s >= 0.0) {
        return Err(Error::Range(format!("off interval {off_interval_s} is negative")));
    }
    let mut out = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        if !tag.is_powered() {
            tag.power_on(tag.clock_s())?;
        }
        out.push(harvest(tag, cfg)?.bits);
        let t = tag.clock_s();
        tag.power_off(t)?;
        tag.advance_to(t + off_interval_s)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DosOutcome {
    pub starved: bool,
}

/// An attacker re-powering the tag every `attacker_query_period_s` resets the
/// decay clock; the tag starves when that happens before a full cooldown.
pub fn dos_window(cooldown_s: f64, attacker_query_period_s: f64) -> Result<DosOutcome> {
    if !(cooldown_s > 0.0 && attacker_query_period_s > 0.0) {
        return Err(Error::Range("cooldown and query period must be positive".into()));
    }
    Ok(DosOutcome { starved: attacker_query_period_s < cooldown_s })
}
