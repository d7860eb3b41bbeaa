use std::fmt::Write as _;

use anyhow::{bail, ensure, Context, Result};
use sram_entropy::bits;
use sram_entropy::entropy::BudgetRow;
use sram_entropy::extractor::{entropy_capacity, extractor_yield, DEFAULT_DENSITY};
use sram_entropy::protocol::{
    authenticate, cycled_harvests, keygen, scheduled_auth, HbPlusParams, ProtocolProfile, SupplyModel, WaitConvention,
};
use sram_entropy::remanence::{
    average_by_interval, fit_logistic, fit_to_csv_row, run_decay_experiment, samples_to_csv, FITS_CSV_HEADER,
};
use sram_entropy::rng::derive_seed;
use sram_entropy::sram::{create_tag, TagSpec, TagState};

use crate::config::RunConfig;

/// Parses `start:step:end` into the inclusive list of intervals.
pub fn parse_intervals(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, step, end] = parts.as_slice() else {
        bail!("interval spec must look like start:step:end, got {spec:?}");
    };
    let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in interval spec"));
    let (start, step, end) = (parse(start)?, parse(step)?, parse(end)?);
    ensure!(start.is_finite() && step.is_finite() && end.is_finite(), "interval spec must be finite");
    ensure!(start >= 0.0, "interval start must be non-negative");
    ensure!(step > 0.0, "interval step must be positive");
    ensure!(end >= start, "interval end precedes start");
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Generation {
    /// 512-byte tag, 376 bytes free
    Wisp41,
    /// 256-byte tag, 144 bytes free
    Wisp2x,
    /// Tag geometry from the config file
    Custom,
}

impl Generation {
    fn base(self) -> TagSpec {
        match self {
            Self::Wisp41 | Self::Custom => TagSpec::wisp41(),
            Self::Wisp2x => TagSpec::wisp2x(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Wisp41 => "wisp41",
            Self::Wisp2x => "wisp2x",
            Self::Custom => "custom",
        }
    }
}

fn spec_for(cfg: &RunConfig, generation: Generation) -> Result<TagSpec> {
    match generation {
        Generation::Custom => cfg.tag_spec(generation.base()),
        other => Ok(other.base()),
    }
}

fn build_tag(cfg: &RunConfig, spec: TagSpec, tag_seed: u64) -> Result<TagState> {
    Ok(create_tag(spec, cfg.decay_params(tag_seed)?, tag_seed)?)
}

pub fn decay(cfg: &RunConfig, tags: usize, intervals: &str) -> Result<String> {
    ensure!(tags >= 1, "at least one tag is required");
    let seed = cfg.require_seed()?;
    let intervals = parse_intervals(intervals)?;
    let spec = cfg.tag_spec(TagSpec::default())?;
    let mut samples = Vec::new();
    let mut fits = Vec::new();
    for i in 0..tags {
        let tag_seed = derive_seed(seed, i as u64);
        let mut tag = build_tag(cfg, spec.clone(), tag_seed)?.with_id(i as u64);
        let tag_samples = run_decay_experiment(&mut tag, &intervals, derive_seed(tag_seed, 1))?;
        if intervals.len() >= 4 {
            fits.push(fit_to_csv_row(&i.to_string(), &fit_logistic(&tag_samples)?));
        }
        samples.extend(tag_samples);
    }
    let mut out = samples_to_csv(&samples);
    for (t, h) in average_by_interval(&samples) {
        writeln!(out, "avg,{t:.6},{h:.6}")?;
    }
    if !fits.is_empty() {
        writeln!(out, "\n{FITS_CSV_HEADER}")?;
        for row in fits {
            writeln!(out, "{row}")?;
        }
    }
    Ok(out)
}

pub const BUDGET_CSV_HEADER: &str =
    "generation,free_bytes,capacity_bits,protocol,protocol_bits,harvests,wait_between_s,wait_per_s,supply_model";

pub fn budget(cfg: &RunConfig, protocol: ProtocolProfile, generation: Generation, cooldown_s: u64) -> Result<String> {
    let free = spec_for(cfg, generation)?.free_bytes();
    let mut out = format!("{BUDGET_CSV_HEADER}\n");
    let supplies = [
        (SupplyModel::EntropyCapacity, entropy_capacity(free as u64, DEFAULT_DENSITY)?),
        (SupplyModel::ExtractorYield, extractor_yield(free, cfg.ph) as u64),
    ];
    for (model, per_harvest) in supplies {
        if per_harvest == 0 {
            writeln!(
                out,
                "{},{free},0,{},{},infeasible,infeasible,infeasible,{}",
                generation.name(),
                protocol.name(),
                protocol.bits(),
                model.name()
            )?;
            continue;
        }
        let row = BudgetRow::from_supply(free as u64, per_harvest, protocol.bits(), cooldown_s)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            generation.name(),
            row.free_bytes,
            row.capacity_bits,
            protocol.name(),
            row.protocol_bits,
            row.harvests,
            row.wait_s_between,
            row.wait_s_per,
            model.name()
        )?;
    }
    Ok(out)
}

pub fn harvest(cfg: &RunConfig, generation: Generation, cycles: usize, off_interval_s: f64) -> Result<String> {
    let seed = cfg.require_seed()?;
    let mut tag = build_tag(cfg, spec_for(cfg, generation)?, seed)?;
    let outputs = cycled_harvests(&mut tag, cfg.ph, cycles, off_interval_s)?;
    Ok(outputs.iter().map(|b| bits::to_hex(b) + "\n").collect())
}

pub struct AuthArgs {
    pub protocol: ProtocolProfile,
    pub generation: Generation,
    pub supply: SupplyModel,
    pub convention: WaitConvention,
    pub cooldown_s: u64,
    pub transcript: bool,
}

pub fn auth(cfg: &RunConfig, args: &AuthArgs) -> Result<String> {
    let seed = cfg.require_seed()?;
    let mut tag = build_tag(cfg, spec_for(cfg, args.generation)?, seed)?;
    let mut sched = scheduled_auth(&mut tag, cfg.ph, args.protocol.bits(), args.cooldown_s, args.supply, args.convention)?;
    let mut out = String::new();
    if args.transcript {
        for event in &sched.events {
            writeln!(out, "{event}")?;
        }
    }
    let (verdict, consumed) = match args.protocol {
        ProtocolProfile::HbPlusParallel => {
            let params = HbPlusParams::default();
            let secrets = keygen(&params, derive_seed(seed, 1));
            let outcome = authenticate(&secrets, &params, &mut sched.pool, derive_seed(seed, 2), derive_seed(seed, 3))?;
            if args.transcript {
                for (i, rec) in outcome.transcript.iter().enumerate() {
                    writeln!(out, "{}", rec.to_line(i))?;
                }
            }
            (if outcome.accepted { "accepted" } else { "rejected" }, outcome.entropy_consumed)
        }
        ProtocolProfile::HbSharp => {
            let bits = args.protocol.bits();
            sched.pool.draw(bits as usize).context("pool short of one HB# random value")?;
            ("drawn", bits)
        }
    };
    writeln!(out, "{} harvests, {} s, {verdict}, {consumed} bits", sched.harvests, sched.sim_wall_time_s)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FileConfig;

    fn cfg(seed: u64) -> RunConfig {
        RunConfig::resolve(FileConfig::default(), Some(seed), None, None).unwrap()
    }

    #[test]
    fn interval_specs() {
        assert_eq!(parse_intervals("0:5:60").unwrap().len(), 13);
        assert_eq!(parse_intervals("0:5:0").unwrap(), vec![0.0]);
        assert_eq!(parse_intervals("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_intervals("5:0:60").is_err());
        assert!(parse_intervals("10:5:0").is_err());
        assert!(parse_intervals("0:5").is_err());
        assert!(parse_intervals("a:5:10").is_err());
    }

    #[test]
    fn decay_row_counts() {
        let out = decay(&cfg(7), 4, "0:5:60").unwrap();
        let (samples, fits) = out.split_once("\n\n").unwrap();
        let lines: Vec<&str> = samples.lines().collect();
        assert_eq!(lines[0], "tag_id,interval_s,hamming_fraction");
        assert_eq!(lines.len(), 1 + 52 + 13);
        assert_eq!(lines.iter().filter(|l| l.starts_with("avg,")).count(), 13);
        assert_eq!(fits.lines().count(), 1 + 4);

        let single = decay(&cfg(7), 4, "0:5:0").unwrap();
        assert_eq!(single.lines().filter(|l| l.ends_with(",0.000000,0.000000") && !l.starts_with("avg")).count(), 4);
    }

    #[test]
    fn budget_tables() {
        let out = budget(&cfg(0), ProtocolProfile::HbPlusParallel, Generation::Wisp41, 30).unwrap();
        assert!(out.contains("wisp41,376,309,hb_plus_parallel,17920,58,1710,1740,entropy_capacity"));
        assert!(out.contains("wisp41,376,185,hb_plus_parallel,17920,97,2880,2910,extractor_yield"));
        let out = budget(&cfg(0), ProtocolProfile::HbSharp, Generation::Wisp2x, 30).unwrap();
        assert!(out.contains("wisp2x,144,118,hb_sharp,512,5,120,150,entropy_capacity"));
        let wide = RunConfig::resolve(FileConfig::default(), None, Some(64), None).unwrap();
        let out = budget(&wide, ProtocolProfile::HbSharp, Generation::Wisp2x, 30).unwrap();
        assert!(out.contains("wisp2x,144,0,hb_sharp,512,infeasible,infeasible,infeasible,extractor_yield"));
    }

    #[test]
    fn harvest_lines() {
        let hot = harvest(&cfg(3), Generation::Wisp41, 5, 0.0).unwrap();
        let lines: Vec<&str> = hot.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| *l == lines[0]));
        // 185 bits -> 47 hex digits
        assert_eq!(lines[0].len(), 47);
        let cold = harvest(&cfg(3), Generation::Wisp41, 5, 60.0).unwrap();
        assert!(cold.lines().any(|l| l != cold.lines().next().unwrap()));
    }

    #[test]
    fn auth_reports() {
        let args = AuthArgs {
            protocol: ProtocolProfile::HbPlusParallel,
            generation: Generation::Wisp41,
            supply: SupplyModel::EntropyCapacity,
            convention: WaitConvention::Between,
            cooldown_s: 30,
            transcript: false,
        };
        assert_eq!(auth(&cfg(1), &args).unwrap(), "58 harvests, 1710 s, accepted, 17920 bits\n");
        let sharp = AuthArgs { protocol: ProtocolProfile::HbSharp, ..args };
        assert!(auth(&cfg(1), &sharp).unwrap().starts_with("2 harvests, 30 s"));
        let yield_supply = AuthArgs { supply: SupplyModel::ExtractorYield, ..args };
        assert!(auth(&cfg(1), &yield_supply).unwrap().starts_with("97 harvests"));
    }

    #[test]
    fn auth_transcript_lines() {
        let args = AuthArgs {
            protocol: ProtocolProfile::HbPlusParallel,
            generation: Generation::Wisp41,
            supply: SupplyModel::EntropyCapacity,
            convention: WaitConvention::Between,
            cooldown_s: 30,
            transcript: true,
        };
        let out = auth(&cfg(1), &args).unwrap();
        assert_eq!(out.lines().filter(|l| l.contains("harvest bits=")).count(), 58);
        // round, a (56 hex digits), b, z
        let rounds: Vec<&str> = out.lines().filter(|l| l.split(' ').count() == 4 && !l.contains('=')).collect();
        assert_eq!(rounds.len(), 80);
        assert_eq!(rounds[0].split(' ').nth(1).unwrap().len(), 56);
    }
}
