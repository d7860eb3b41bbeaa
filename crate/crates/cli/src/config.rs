//! Run configuration: TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sram_entropy::extractor::PhConfig;
use sram_entropy::sram::{BiasModel, DecayParams, TagSpec};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub tag: TagSection,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub ph: PhSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagSection {
    pub total_bytes: Option<usize>,
    pub reserved_bytes: Option<usize>,
    pub excluded_bytes: Option<usize>,
    pub noisy_fraction: Option<f64>,
    pub temperature_c: Option<f64>,
    /// `[alpha, beta]` switches to graded cell biases.
    pub beta_bias: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    /// Fixed midpoint for every tag; drawn per tag when absent.
    pub midpoint_s: Option<f64>,
    pub slope_s: Option<f64>,
    pub temp_ref_c: Option<f64>,
    pub temp_doubling_c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhSection {
    pub word_bits: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Fully resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: Option<u64>,
    tag: TagSection,
    decay: DecaySection,
    pub ph: PhConfig,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, seed: Option<u64>, word_bits: Option<u32>, out: Option<PathBuf>) -> Result<Self> {
        let word_bits = word_bits.or(file.ph.word_bits).unwrap_or(16);
        if word_bits != 16 && word_bits != 64 {
            bail!("word width must be 16 or 64, got {word_bits}");
        }
        Ok(Self {
            seed: seed.or(file.seed),
            tag: file.tag,
            decay: file.decay,
            ph: PhConfig::new(word_bits)?,
            output_path: out,
        })
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.context("this command is stochastic: pass --seed or set `seed` in the config file")
    }

    /// `base` with file overrides applied, validated.
    pub fn tag_spec(&self, base: TagSpec) -> Result<TagSpec> {
        let o = &self.tag;
        let spec = TagSpec {
            total_bytes: o.total_bytes.unwrap_or(base.total_bytes),
            reserved_bytes: o.reserved_bytes.unwrap_or(base.reserved_bytes),
            excluded_bytes: o.excluded_bytes.unwrap_or(base.excluded_bytes),
            noisy_fraction: o.noisy_fraction.unwrap_or(base.noisy_fraction),
            temperature_c: o.temperature_c.unwrap_or(base.temperature_c),
            bias_model: o.beta_bias.map_or(base.bias_model, |[alpha, beta]| BiasModel::Beta { alpha, beta }),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Decay parameters for the tag built from `tag_seed`.
    pub fn decay_params(&self, tag_seed: u64) -> Result<DecayParams> {
        let base = DecayParams::for_population(tag_seed);
        let d = &self.decay;
        let params = DecayParams {
            midpoint_s: d.midpoint_s.unwrap_or(base.midpoint_s),
            slope_s: d.slope_s.unwrap_or(base.slope_s),
            temp_ref_c: d.temp_ref_c.unwrap_or(base.temp_ref_c),
            temp_doubling_c: d.temp_doubling_c.unwrap_or(base.temp_doubling_c),
        };
        params.validate()?;
        Ok(params)
    }
}
