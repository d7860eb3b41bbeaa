//! SRAM cell physics and the tag power lifecycle.
//!
//! Each bit of tag memory is backed by a [`CellParams`]: the probability it
//! settles to `1` on a cold power-up, and how long it holds a stored value
//! once power is removed. Decay is resolved lazily when power returns: a cell
//! whose hold time was exceeded re-enters its power-up distribution, every
//! other cell keeps what was written.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Range the per-tag logistic midpoint is drawn from, in seconds.
pub const POPULATION_MIDPOINT_RANGE: (f64, f64) = (22.0, 25.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Probability of powering up as `1` after full decay.
    pub one_prob: f64,
    /// Seconds without power (at reference temperature) the stored value survives.
    pub decay_time: f64,
}

impl CellParams {
    pub fn new(one_prob: f64, decay_time: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&one_prob) {
            return Err(Error::Constraint(format!("one_prob {one_prob} not in [0, 1]")));
        }
        if !(decay_time > 0.0 && decay_time.is_finite()) {
            return Err(Error::Constraint(format!("decay_time {decay_time} must be positive and finite")));
        }
        Ok(Self { one_prob, decay_time })
    }
}

/// How power-up biases are assigned to cells.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BiasModel {
    /// A `noisy_fraction` of cells are fair coins, the rest are stuck at 0 or 1.
    #[default]
    TwoPopulation,
    /// Every cell draws its `one_prob` from Beta(alpha, beta); `noisy_fraction` is ignored.
    Beta { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagSpec {
    pub total_bytes: usize,
    /// Bytes held by firmware, never available for harvesting.
    pub reserved_bytes: usize,
    /// Leading bytes left out of decay measurements.
    pub excluded_bytes: usize,
    pub noisy_fraction: f64,
    pub temperature_c: f64,
    pub bias_model: BiasModel,
}

impl Default for TagSpec {
    fn default() -> Self {
        Self {
            total_bytes: 512,
            reserved_bytes: 136,
            excluded_bytes: 2,
            noisy_fraction: 0.103,
            temperature_c: 20.0,
            bias_model: BiasModel::TwoPopulation,
        }
    }
}

impl TagSpec {
    /// 512-byte tag with 376 bytes free.
    pub fn wisp41() -> Self {
        Self::default()
    }

    /// 256-byte tag with 144 bytes free.
    pub fn wisp2x() -> Self {
        Self { total_bytes: 256, reserved_bytes: 112, ..Self::default() }
    }

    pub fn free_bytes(&self) -> usize {
        self.total_bytes - self.reserved_bytes
    }

    pub fn total_bits(&self) -> usize {
        self.total_bytes * 8
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_bytes == 0 {
            return Err(Error::Constraint("total_bytes must be positive".into()));
        }
        if self.reserved_bytes + self.excluded_bytes > self.total_bytes {
            return Err(Error::Constraint(format!(
                "reserved ({}) + excluded ({}) bytes exceed total ({})",
                self.reserved_bytes, self.excluded_bytes, self.total_bytes
            )));
        }
        if !(0.0..=1.0).contains(&self.noisy_fraction) {
            return Err(Error::Constraint(format!("noisy_fraction {} not in [0, 1]", self.noisy_fraction)));
        }
        if !self.temperature_c.is_finite() {
            return Err(Error::Constraint("temperature must be finite".into()));
        }
        if let BiasModel::Beta { alpha, beta } = self.bias_model {
            if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                return Err(Error::Constraint("beta bias parameters must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Logistic remanence model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub midpoint_s: f64,
    pub slope_s: f64,
    pub temp_ref_c: f64,
    /// Degrees of warming that halve every hold time.
    pub temp_doubling_c: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        let (lo, hi) = POPULATION_MIDPOINT_RANGE;
        Self { midpoint_s: (lo + hi) / 2.0, slope_s: 1.25, temp_ref_c: 20.0, temp_doubling_c: 10.0 }
    }
}

impl DecayParams {
    /// Default parameters with the midpoint drawn uniformly from
    /// [`POPULATION_MIDPOINT_RANGE`], modelling tag-to-tag variation.
    pub fn for_population(seed: u64) -> Self {
        let (lo, hi) = POPULATION_MIDPOINT_RANGE;
        let midpoint_s = rng::stream(seed, streams::MIDPOINT).random_range(lo..=hi);
        Self { midpoint_s, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.midpoint_s) || !ok(self.slope_s) || !ok(self.temp_doubling_c) {
            return Err(Error::Constraint(format!(
                "midpoint ({}), slope ({}) and doubling ({}) must be positive",
                self.midpoint_s, self.slope_s, self.temp_doubling_c
            )));
        }
        if !self.temp_ref_c.is_finite() {
            return Err(Error::Constraint("reference temperature must be finite".into()));
        }
        Ok(())
    }

    /// Multiplier applied to elapsed time at `temperature_c`.
    pub fn temp_factor(&self, temperature_c: f64) -> f64 {
        ((temperature_c - self.temp_ref_c) / self.temp_doubling_c).exp2()
    }
}

/// Model fraction of cells that have lost their stored value after
/// `elapsed_s` without power.
pub fn decay_cdf(decay: &DecayParams, elapsed_s: f64, temperature_c: f64) -> Result<f64> {
    if !(elapsed_s >= 0.0) {
        return Err(Error::Range(format!("elapsed time {elapsed_s} is negative")));
    }
    let t = elapsed_s * decay.temp_factor(temperature_c);
    Ok(1.0 / (1.0 + (-(t - decay.midpoint_s) / decay.slope_s).exp()))
}

/// Fraction of positions at which `a` and `b` differ.
pub fn hamming_fraction(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.len() as f64)
}

/// A simulated tag.
#[derive(Debug, Clone)]
pub struct TagState {
    id: u64,
    spec: TagSpec,
    decay: DecayParams,
    cells: Vec<CellParams>,
    memory: Vec<bool>,
    powered: bool,
    last_power_off_s: Option<f64>,
    clock_s: f64,
    rng: ChaCha8Rng,
}

/// Builds an unpowered tag at clock 0. The cell population is a pure function
/// of `(spec, decay, seed)`.
pub fn create_tag(spec: TagSpec, decay: DecayParams, seed: u64) -> Result<TagState> {
    spec.validate()?;
    decay.validate()?;
    let mut rng = rng::stream(seed, streams::CELLS);
    let beta = match spec.bias_model {
        BiasModel::Beta { alpha, beta } => {
            Some(Beta::new(alpha, beta).map_err(|e| Error::Constraint(e.to_string()))?)
        }
        BiasModel::TwoPopulation => None,
    };
    let cells = (0..spec.total_bits())
        .map(|_| {
            let one_prob = match &beta {
                Some(dist) => dist.sample(&mut rng),
                None if rng.random_bool(spec.noisy_fraction) => 0.5,
                None => f64::from(u8::from(rng.random_bool(0.5))),
            };
            CellParams { one_prob, decay_time: sample_hold_time(&mut rng, &decay) }
        })
        .collect();
    Ok(TagState {
        id: seed,
        memory: vec![false; spec.total_bits()],
        spec,
        decay,
        cells,
        powered: false,
        last_power_off_s: None,
        clock_s: 0.0,
        rng: rng::stream(seed, streams::POWER_UP),
    })
}

impl TagState {
    /// Tag with an explicit cell population, one entry per bit.
    pub fn from_cells(spec: TagSpec, decay: DecayParams, cells: Vec<CellParams>, seed: u64) -> Result<Self> {
        spec.validate()?;
        decay.validate()?;
        if cells.len() != spec.total_bits() {
            return Err(Error::Constraint(format!("{} cells for {} bits", cells.len(), spec.total_bits())));
        }
        for c in &cells {
            CellParams::new(c.one_prob, c.decay_time)?;
        }
        Ok(Self {
            id: seed,
            memory: vec![false; spec.total_bits()],
            spec,
            decay,
            cells,
            powered: false,
            last_power_off_s: None,
            clock_s: 0.0,
            rng: rng::stream(seed, streams::POWER_UP),
        })
    }
}

/// Positive draw from logistic(midpoint, slope).
fn sample_hold_time(rng: &mut ChaCha8Rng, decay: &DecayParams) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u <= 0.0 {
            continue;
        }
        let t = decay.midpoint_s + decay.slope_s * (u / (1.0 - u)).ln();
        if t > 0.0 && t.is_finite() {
            return t;
        }
    }
}

impl TagState {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn spec(&self) -> &TagSpec {
        &self.spec
    }

    pub fn decay(&self) -> &DecayParams {
        &self.decay
    }

    pub fn cells(&self) -> &[CellParams] {
        &self.cells
    }

    pub fn is_powered(&self) -> bool {
        self.powered
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    pub fn last_power_off_s(&self) -> Option<f64> {
        self.last_power_off_s
    }

    pub fn len_bits(&self) -> usize {
        self.memory.len()
    }

    /// Switches power-up sampling to substream `stream` of `seed`, so a
    /// recreated tag can perform an independent first boot.
    pub fn reseed_power_up(&mut self, seed: u64, stream: u64) {
        self.rng = rng::stream(seed, stream);
    }

    fn check_time(&self, at_time_s: f64) -> Result<()> {
        if !(at_time_s >= self.clock_s) || !at_time_s.is_finite() {
            return Err(Error::ClockBackwards { requested_s: at_time_s, clock_s: self.clock_s });
        }
        Ok(())
    }

    /// Advances the clock without a power transition.
    pub fn advance_to(&mut self, at_time_s: f64) -> Result<()> {
        self.check_time(at_time_s)?;
        self.clock_s = at_time_s;
        Ok(())
    }

    /// Restores power at `at_time_s`. Returns the number of cells whose
    /// contents were lost and re-sampled.
    pub fn power_on(&mut self, at_time_s: f64) -> Result<usize> {
        self.check_time(at_time_s)?;
        if self.powered {
            return Err(Error::PowerState("powered"));
        }
        let effective = self
            .last_power_off_s
            .map(|off| (at_time_s - off) * self.decay.temp_factor(self.spec.temperature_c));
        let mut resampled = 0;
        for (bit, cell) in self.memory.iter_mut().zip(&self.cells) {
            // the draw is consumed for every cell so the stream stays aligned
            let fresh = self.rng.random::<f64>() < cell.one_prob;
            if effective.is_none_or(|e| e > cell.decay_time) {
                *bit = fresh;
                resampled += 1;
            }
        }
        self.powered = true;
        self.clock_s = at_time_s;
        Ok(resampled)
    }

    pub fn power_off(&mut self, at_time_s: f64) -> Result<()> {
        self.check_time(at_time_s)?;
        if !self.powered {
            return Err(Error::PowerState("unpowered"));
        }
        self.powered = false;
        self.last_power_off_s = Some(at_time_s);
        self.clock_s = at_time_s;
        Ok(())
    }

    fn range(&self, offset_bits: usize, len_bits: usize) -> Result<std::ops::Range<usize>> {
        if !self.powered {
            return Err(Error::Unpowered);
        }
        let end = offset_bits
            .checked_add(len_bits)
            .filter(|&end| end <= self.memory.len())
            .ok_or(Error::OutOfRange { offset: offset_bits, end: offset_bits.saturating_add(len_bits), len: self.memory.len() })?;
        Ok(offset_bits..end)
    }

    pub fn read_bits(&self, offset_bits: usize, len_bits: usize) -> Result<Vec<bool>> {
        let r = self.range(offset_bits, len_bits)?;
        Ok(self.memory[r].to_vec())
    }

    pub fn write_bits(&mut self, offset_bits: usize, bits: &[bool]) -> Result<()> {
        let r = self.range(offset_bits, bits.len())?;
        self.memory[r].copy_from_slice(bits);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn default_tag(seed: u64) -> TagState {
        create_tag(TagSpec::default(), DecayParams::default(), seed).unwrap()
    }

    fn uniform_pattern(seed: u64, n: usize) -> Vec<bool> {
        let mut rng = rng::stream(seed, 99);
        (0..n).map(|_| rng.random_bool(0.5)).collect()
    }

    #[test]
    fn noisy_cell_count_near_expectation() {
        let tag = default_tag(1);
        assert_eq!(tag.cells().len(), 4096);
        let noisy = tag.cells().iter().filter(|c| c.one_prob == 0.5).count();
        // 4096 * 0.103 = 421.9, sd = sqrt(4096 * 0.103 * 0.897) = 19.45
        assert!((noisy as f64 - 421.9).abs() < 4.0 * 19.45, "noisy = {noisy}");
        assert!(tag.cells().iter().all(|c| [0.0, 0.5, 1.0].contains(&c.one_prob)));
    }

    #[test]
    fn zero_noisy_fraction_gives_deterministic_cells() {
        let spec = TagSpec { noisy_fraction: 0.0, ..TagSpec::default() };
        let tag = create_tag(spec, DecayParams::default(), 9).unwrap();
        assert!(tag.cells().iter().all(|c| c.one_prob == 0.0 || c.one_prob == 1.0));
    }

    #[test]
    fn creation_is_deterministic() {
        assert_eq!(default_tag(5).cells(), default_tag(5).cells());
        assert_ne!(default_tag(5).cells(), default_tag(6).cells());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let spec = TagSpec { reserved_bytes: 511, excluded_bytes: 2, ..TagSpec::default() };
        assert!(matches!(create_tag(spec, DecayParams::default(), 0), Err(Error::Constraint(_))));
        let spec = TagSpec { noisy_fraction: 1.5, ..TagSpec::default() };
        assert!(create_tag(spec, DecayParams::default(), 0).is_err());
        let decay = DecayParams { slope_s: 0.0, ..DecayParams::default() };
        assert!(create_tag(TagSpec::default(), decay, 0).is_err());
        assert!(CellParams::new(1.1, 1.0).is_err());
        assert!(CellParams::new(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn beta_bias_mode_produces_graded_cells() {
        let spec = TagSpec { bias_model: BiasModel::Beta { alpha: 0.5, beta: 0.5 }, ..TagSpec::default() };
        let tag = create_tag(spec, DecayParams::default(), 3).unwrap();
        let graded = tag.cells().iter().filter(|c| c.one_prob > 0.01 && c.one_prob < 0.99).count();
        assert!(graded > 1000);
    }

    #[test]
    fn all_ones_cells_boot_to_ones() {
        let cells = vec![CellParams::new(1.0, 20.0).unwrap(); 4096];
        let mut tag = TagState::from_cells(TagSpec::default(), DecayParams::default(), cells, 3).unwrap();
        tag.power_on(0.0).unwrap();
        let bits = tag.read_bits(0, tag.len_bits()).unwrap();
        assert!(bits.iter().all(|&b| b));
    }

    #[test]
    fn zero_gap_cycle_keeps_memory() {
        let mut tag = default_tag(2);
        tag.power_on(0.0).unwrap();
        let pattern = uniform_pattern(1, 4096);
        tag.write_bits(0, &pattern).unwrap();
        tag.power_off(3.0).unwrap();
        assert_eq!(tag.read_bits(0, 8), Err(Error::Unpowered));
        assert_eq!(tag.power_on(3.0).unwrap(), 0);
        assert_eq!(tag.read_bits(0, 4096).unwrap(), pattern);
    }

    #[test]
    fn long_outage_resamples_everything() {
        let mut tag = default_tag(4);
        tag.power_on(0.0).unwrap();
        let pattern = uniform_pattern(2, 4096);
        tag.write_bits(0, &pattern).unwrap();
        tag.power_off(0.0).unwrap();
        assert_eq!(tag.power_on(60.0).unwrap(), 4096);
        let h = hamming_fraction(&pattern, &tag.read_bits(0, 4096).unwrap()).unwrap();
        // sd of a 4096-bit fair comparison is 0.0078
        assert!((h - 0.5).abs() < 0.04, "h = {h}");
    }

    #[test]
    fn fifteen_second_outage_barely_decays() {
        let mut tag = default_tag(8);
        tag.power_on(0.0).unwrap();
        let pattern = uniform_pattern(3, 4096);
        tag.write_bits(0, &pattern).unwrap();
        tag.power_off(10.0).unwrap();
        tag.power_on(25.0).unwrap();
        let h = hamming_fraction(&pattern, &tag.read_bits(0, 4096).unwrap()).unwrap();
        assert!(h <= 0.01, "h = {h}");
    }

    #[test]
    fn power_state_and_clock_errors() {
        let mut tag = default_tag(0);
        assert_eq!(tag.power_off(1.0), Err(Error::PowerState("unpowered")));
        tag.power_on(5.0).unwrap();
        assert_eq!(tag.power_on(6.0), Err(Error::PowerState("powered")));
        assert!(matches!(tag.power_off(4.0), Err(Error::ClockBackwards { .. })));
        assert!(matches!(tag.advance_to(1.0), Err(Error::ClockBackwards { .. })));
        tag.power_off(5.0).unwrap();
        assert!(matches!(tag.power_on(f64::NAN), Err(Error::ClockBackwards { .. })));
    }

    #[test]
    fn read_write_bounds() {
        let mut tag = default_tag(0);
        tag.power_on(0.0).unwrap();
        assert_eq!(tag.read_bits(0, 4096).unwrap().len(), 4096);
        assert!(matches!(tag.read_bits(4000, 97), Err(Error::OutOfRange { .. })));
        assert!(matches!(tag.write_bits(4095, &[true, true]), Err(Error::OutOfRange { .. })));
        assert!(matches!(tag.read_bits(usize::MAX, 2), Err(Error::OutOfRange { .. })));
        let before = tag.read_bits(0, 4096).unwrap();
        tag.write_bits(100, &[]).unwrap();
        assert_eq!(tag.read_bits(0, 4096).unwrap(), before);
        tag.write_bits(0, &vec![false; 4096]).unwrap();
        assert!(tag.read_bits(0, 4096).unwrap().iter().all(|&b| !b));
    }

    #[test]
    fn written_values_override_power_up_values() {
        let mut tag = default_tag(12);
        tag.power_on(0.0).unwrap();
        let boot = tag.read_bits(0, 4096).unwrap();
        let inverted: Vec<bool> = boot.iter().map(|b| !b).collect();
        tag.write_bits(0, &inverted).unwrap();
        tag.advance_to(1000.0).unwrap();
        assert_eq!(tag.read_bits(0, 4096).unwrap(), inverted);
    }

    #[test]
    fn decay_cdf_anchor_values() {
        let d = DecayParams::default();
        assert!((decay_cdf(&d, d.midpoint_s, 20.0).unwrap() - 0.5).abs() < 1e-15);
        let paper_fit = DecayParams { midpoint_s: 20.0, ..d };
        assert!(decay_cdf(&paper_fit, 15.0, 20.0).unwrap() <= 0.02);
        assert!(decay_cdf(&paper_fit, 30.0, 20.0).unwrap() >= 0.98);
        // 1 / (1 + e^-8)
        assert!((decay_cdf(&paper_fit, 30.0, 20.0).unwrap() - 0.999_664_649_1).abs() < 1e-9);
        assert!(decay_cdf(&d, 15.0, 20.0).unwrap() <= 0.02);
        assert!(decay_cdf(&d, 30.0, 20.0).unwrap() >= 0.98);
        assert!(matches!(decay_cdf(&d, -1.0, 20.0), Err(Error::Range(_))));
    }

    #[test]
    fn heat_accelerates_decay() {
        let d = DecayParams { midpoint_s: 20.0, ..DecayParams::default() };
        // 10 degrees above reference halves the hold time
        assert!((decay_cdf(&d, 10.0, 30.0).unwrap() - 0.5).abs() < 1e-12);
        let spec = TagSpec { temperature_c: 40.0, ..TagSpec::default() };
        let mut tag = create_tag(spec, d, 1).unwrap();
        tag.power_on(0.0).unwrap();
        tag.power_off(0.0).unwrap();
        // 8 s at 40 C is 32 s of reference-temperature decay
        assert!(tag.power_on(8.0).unwrap() > 4000);
    }

    #[test]
    fn hamming_fraction_cases() {
        let x = [true, false, true, true];
        let not_x: Vec<bool> = x.iter().map(|b| !b).collect();
        assert_eq!(hamming_fraction(&x, &x).unwrap(), 0.0);
        assert_eq!(hamming_fraction(&x, &not_x).unwrap(), 1.0);
        assert_eq!(hamming_fraction(&[false, true, false, true], &[false, true, true, false]).unwrap(), 0.5);
        assert_eq!(hamming_fraction(&x, &x[..3]), Err(Error::LengthMismatch(4, 3)));
        assert_eq!(hamming_fraction(&[], &[]), Err(Error::Empty));
    }

    #[test]
    fn population_midpoints_stay_in_range() {
        for seed in 0..200 {
            let m = DecayParams::for_population(seed).midpoint_s;
            assert!((22.0..=25.0).contains(&m));
        }
    }

    proptest! {
        #[test]
        fn decay_cdf_monotone_in_time_and_temperature(
            t1 in 0.0f64..100.0, dt in 0.0f64..100.0,
            temp1 in -40.0f64..80.0, dtemp in 0.0f64..40.0,
        ) {
            let d = DecayParams::default();
            prop_assert!(decay_cdf(&d, t1, temp1).unwrap() <= decay_cdf(&d, t1 + dt, temp1).unwrap());
            prop_assert!(decay_cdf(&d, t1, temp1).unwrap() <= decay_cdf(&d, t1, temp1 + dtemp).unwrap());
        }

        #[test]
        fn retention_while_powered(
            seed in 0u64..1000,
            writes in proptest::collection::vec((0usize..4000, proptest::collection::vec(any::<bool>(), 0..96), 0.0f64..50.0), 1..12),
        ) {
            let mut tag = default_tag(seed);
            tag.power_on(0.0).unwrap();
            let mut shadow = tag.read_bits(0, 4096).unwrap();
            let mut now = 0.0;
            for (offset, bits, dt) in writes {
                now += dt;
                tag.advance_to(now).unwrap();
                let bits = &bits[..bits.len().min(4096 - offset)];
                tag.write_bits(offset, bits).unwrap();
                shadow[offset..offset + bits.len()].copy_from_slice(bits);
                prop_assert_eq!(&tag.read_bits(0, 4096).unwrap(), &shadow);
            }
        }

        #[test]
        fn zero_gap_identity(seed in 0u64..1000, t in 0.0f64..1e6) {
            let mut tag = default_tag(seed);
            tag.power_on(0.0).unwrap();
            let before = tag.read_bits(0, 4096).unwrap();
            tag.power_off(t).unwrap();
            tag.power_on(t).unwrap();
            prop_assert_eq!(tag.read_bits(0, 4096).unwrap(), before);
        }
    }
}
