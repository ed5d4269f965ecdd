//! Symbol-level Monte Carlo simulation of the M-PAM downlink.
//!
//! Every slot draws a PAM level for each interferer inside the truncated
//! lattice, adds Gaussian receiver noise and detects the tagged symbol with
//! midpoint thresholds on the noiseless constellation.
//!
//! # Random streams
//!
//! Slots are split into fixed chunks of [`CHUNK_SLOTS`]. Chunk `c` draws from
//! ChaCha8 seeded with `seed_from_u64(seed)` on stream `c`, and per-chunk
//! statistics are merged in chunk order. A report therefore depends only on
//! the configuration and seed, never on the thread count.
//!
//! Interferers at bit-identical distances share a gain, so their combined
//! level is drawn in one step from the distribution of a sum of independent
//! uniform levels, quantised to 2^-32.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeSpec, LedIndex, ReceiverPos};
use crate::params::{DerivedParams, SystemParams};

/// Slots per random substream.
pub const CHUNK_SLOTS: u64 = 1 << 16;
pub const DEFAULT_ORACLE_RADIUS: u32 = 50;

/// Which PAM level the tagged LED sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransmitLevel {
    #[default]
    Uniform,
    /// Level index in `1..=M`.
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_slots: u64,
    pub seed: u64,
    /// Interferers are drawn from `[-radius, radius]²`; 0 leaves none.
    pub oracle_radius: u32,
    pub transmit_level: TransmitLevel,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_slots: 1_000_000,
            seed: 0,
            oracle_radius: DEFAULT_ORACLE_RADIUS,
            transmit_level: TransmitLevel::Uniform,
        }
    }
}

impl McConfig {
    pub fn validate(&self, pam_order: u32) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::invalid("n_slots", "must be >= 1"));
        }
        if let TransmitLevel::Fixed(l) = self.transmit_level {
            if l == 0 || l > pam_order {
                return Err(Error::invalid(
                    "transmit_level",
                    format!("{l} must lie in 1..={pam_order}"),
                ));
            }
        }
        Ok(())
    }
}

/// Empirical interference statistics and symbol error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_slots: u64,
    /// Mean interference current, A.
    pub emp_mean: f64,
    /// Unbiased sample variance of the interference current, A².
    pub emp_var: f64,
    pub emp_ser: f64,
    pub stderr_mean: f64,
    pub stderr_ser: f64,
}

/// Interferers sharing one gain.
struct Group {
    /// Current per unit of level index sum, `2·A·R_pd·G`.
    step: f64,
    sampler: usize,
}

struct Model {
    groups: Vec<Group>,
    samplers: Vec<Sampler>,
    /// Interference with every interferer at the lowest level; levels are odd multiples of `A`.
    floor: f64,
    /// Current of level 1 at the receiver, `A·R_pd·G₀₀`.
    unit: f64,
    levels: u32,
    noise: Normal<f64>,
    transmit: TransmitLevel,
}

/// Draws the sum of `count` independent uniform indices in `0..M` from one
/// 64-bit word: Vose alias table with 32-bit column selection and thresholds.
struct Sampler {
    /// Acceptance threshold per column, scaled by 2^32.
    threshold: Vec<u64>,
    alias: Vec<u32>,
}

impl Sampler {
    fn new(count: u32, levels: u32) -> Self {
        let mut pmf = vec![1.0];
        let step = 1.0 / f64::from(levels);
        for _ in 0..count {
            let mut next = vec![0.0; pmf.len() + levels as usize - 1];
            for (i, p) in pmf.iter().enumerate() {
                for slot in &mut next[i..i + levels as usize] {
                    *slot += p * step;
                }
            }
            pmf = next;
        }
        Sampler::from_pmf(&pmf)
    }

    fn from_pmf(pmf: &[f64]) -> Self {
        let n = pmf.len();
        let mut scaled: Vec<f64> = pmf.iter().map(|p| p * n as f64).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = (0..n).filter(|&i| scaled[i] < 1.0).collect();
        let mut large: Vec<usize> = (0..n).filter(|&i| scaled[i] >= 1.0).collect();
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for &i in large.iter().chain(&small) {
            scaled[i] = 1.0;
        }
        let full = (1u64 << 32) as f64;
        let threshold = scaled.iter().map(|&q| (q * full).round() as u64).collect();
        Sampler { threshold, alias }
    }

    #[inline]
    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let r = rng.next_u64();
        let col = (((r & 0xffff_ffff) * self.threshold.len() as u64) >> 32) as usize;
        if (r >> 32) < self.threshold[col] {
            col as u32
        } else {
            self.alias[col]
        }
    }
}

impl Model {
    fn build(
        pos: ReceiverPos,
        spec: &LatticeSpec,
        sp: &SystemParams,
        derived: &DerivedParams,
        mc: &McConfig,
    ) -> Result<Self> {
        let a = spec.active_spacing();
        let n = i64::from(mc.oracle_radius);
        let mut by_distance: BTreeMap<u64, u32> = BTreeMap::new();
        for i in -n..=n {
            for j in -n..=n {
                if i == 0 && j == 0 {
                    continue;
                }
                let dx = pos.x + i as f64 * a;
                let dy = pos.y + j as f64 * a;
                *by_distance
                    .entry((dx * dx + dy * dy).to_bits())
                    .or_default() += 1;
            }
        }

        let amp = sp.power_constant * sp.responsivity;
        let mut samplers = Vec::new();
        let mut sampler_for: BTreeMap<u32, usize> = BTreeMap::new();
        let mut groups = Vec::with_capacity(by_distance.len());
        let mut floor = lattice::Neumaier::default();
        for (bits, count) in by_distance {
            let dist = f64::from_bits(bits).sqrt();
            let gain =
                lattice::gain_at_distance(dist, spec.height, derived.lambertian_order, sp.pd_area);
            let sampler = match sampler_for.get(&count) {
                Some(&s) => s,
                None => {
                    samplers.push(Sampler::new(count, sp.pam_order));
                    sampler_for.insert(count, samplers.len() - 1);
                    samplers.len() - 1
                }
            };
            groups.push(Group {
                step: 2.0 * amp * gain,
                sampler,
            });
            floor.add(f64::from(count) * amp * gain);
        }
        // add small contributions first
        groups.reverse();

        let g00 = lattice::channel_gain(LedIndex::TAGGED, pos, spec, derived, sp.pd_area);
        let noise = Normal::new(0.0, derived.noise_variance.sqrt())
            .map_err(|e| Error::domain("simulate", format!("noise distribution: {e}")))?;
        Ok(Model {
            groups,
            samplers,
            floor: floor.total(),
            unit: amp * g00,
            levels: sp.pam_order,
            noise,
            transmit: mc.transmit_level,
        })
    }

    fn run_chunk(&self, seed: u64, chunk: u64, slots: u64) -> ChunkStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let level = Uniform::new_inclusive(1, self.levels);
        let mut stats = ChunkStats::default();
        for _ in 0..slots {
            let mut interference = self.floor;
            for g in &self.groups {
                let s = self.samplers[g.sampler].sample(&mut rng);
                interference += g.step * f64::from(s);
            }
            let sent = match self.transmit {
                TransmitLevel::Uniform => level.sample(&mut rng),
                TransmitLevel::Fixed(l) => l,
            };
            let received =
                f64::from(2 * sent - 1) * self.unit + interference + self.noise.sample(&mut rng);
            let decided =
                ((received / (2.0 * self.unit)).floor() + 1.0).clamp(1.0, f64::from(self.levels));
            stats.push(interference, decided != f64::from(sent));
        }
        stats
    }
}

/// Welford accumulator for one chunk.
#[derive(Debug, Default, Clone, Copy)]
struct ChunkStats {
    n: u64,
    mean: f64,
    m2: f64,
    errors: u64,
}

impl ChunkStats {
    fn push(&mut self, x: f64, error: bool) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.errors += u64::from(error);
    }

    fn merge(self, other: ChunkStats) -> ChunkStats {
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let frac = other.n as f64 / n as f64;
        ChunkStats {
            n,
            mean: self.mean + delta * frac,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * frac,
            errors: self.errors + other.errors,
        }
    }
}

/// Runs the Monte Carlo simulation at `pos`.
pub fn simulate(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    sp: &SystemParams,
    derived: &DerivedParams,
    mc: &McConfig,
) -> Result<McReport> {
    sp.validate()?;
    spec.validate()?;
    lattice::check_height(spec, derived)?;
    spec.check_in_cell(pos)?;
    mc.validate(sp.pam_order)?;
    let model = Model::build(pos, spec, sp, derived, mc)?;

    let chunks = mc.n_slots.div_ceil(CHUNK_SLOTS);
    let parts: Vec<ChunkStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let slots = (mc.n_slots - c * CHUNK_SLOTS).min(CHUNK_SLOTS);
            model.run_chunk(mc.seed, c, slots)
        })
        .collect();
    let total = parts
        .into_iter()
        .fold(ChunkStats::default(), ChunkStats::merge);

    let n = total.n as f64;
    let emp_var = if total.n > 1 {
        total.m2 / (n - 1.0)
    } else {
        0.0
    };
    let emp_ser = total.errors as f64 / n;
    Ok(McReport {
        n_slots: total.n,
        emp_mean: total.mean,
        emp_var,
        emp_ser,
        stderr_mean: (emp_var / n).sqrt(),
        stderr_ser: (emp_ser * (1.0 - emp_ser) / n).sqrt(),
    })
}
