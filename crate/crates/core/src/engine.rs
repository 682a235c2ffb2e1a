//! Deterministic Monte Carlo sweeps over transmit power.
//!
//! Every trial draws from its own counter-based stream keyed by
//! `(seed, sweep_index, trial_index)`, and trials are tallied into integer
//! counters, so a sweep is a pure function of the config no matter how many
//! workers run it or how the trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Add;

use crate::analysis::{s1_outage_analytical, s2_outage_analytical};
use crate::channel::{ChannelRealization, ModelParams};
use crate::config::SystemConfig;
use crate::error::{invalid_config, Result};
use crate::frab::{inner_gain, perfect_beamformer, Codebook};
use crate::noma::{evaluate_noma, evaluate_oma, evaluate_s1, form_beams, GainMatrix, RatePair};

/// Random stream owned by a single trial.
pub type TrialStream = ChaCha8Rng;

/// Trials per work item. Fixed so that the partition never depends on the worker count.
const CHUNK: u64 = 1024;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Below this many outage events the Wilson interval replaces the normal one.
const WILSON_EVENTS: u64 = 10;

// Separates these streams from any other use of the same seed.
const STREAM_DOMAIN: u64 = 0x6672_6162_6e6f_6d61;

/// Independent, reproducible stream for one trial.
///
/// `(seed, sweep_index)` form the ChaCha key and `trial_index` selects one of
/// its 2^64 streams, so no trial depends on any other.
pub fn stream_for_trial(seed: u64, sweep_index: u64, trial_index: u64) -> TrialStream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&sweep_index.to_le_bytes());
    key[16..24].copy_from_slice(&STREAM_DOMAIN.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Simulated,
    Analytical,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Simulated => f.write_str("simulated"),
            Provenance::Analytical => f.write_str("analytical"),
        }
    }
}

/// A point estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95_half: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            ci95_half: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub provenance: Provenance,
    pub values: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub trials: u64,
}

/// Result of a sweep: one row of x values and any number of named series over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub tx_dbm: Vec<f64>,
    pub rho: Vec<f64>,
    pub series: Vec<Series>,
    pub metadata: CurveMetadata,
}

impl OutageCurve {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// `(rho, mean)` pairs of one series, the input shape of the slope fit.
    pub fn rho_points(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let s = self.series(name)?;
        Some(self.rho.iter().copied().zip(s.values.iter().map(|e| e.mean)).collect())
    }
}

/// Series names produced by [`run_sweep`].
pub mod series {
    pub const OUTAGE_S1: &str = "outage_s1";
    pub const OUTAGE_S2: &str = "outage_s2";
    pub const OUTAGE_S1_PERFECT: &str = "outage_s1_perfect";
    pub const OUTAGE_OMA: &str = "outage_oma";
    pub const NOMA_SUM_RATE: &str = "noma_sum_rate";
    pub const OMA_SUM_RATE: &str = "oma_sum_rate";
    pub const OUTAGE_S1_ANALYTICAL: &str = "outage_s1_analytical";
    pub const OUTAGE_S2_ANALYTICAL: &str = "outage_s2_analytical";
}

/// First and second moments of a per-trial event count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    sum: u64,
    sum_sq: u64,
}

impl Moments {
    fn push(&mut self, c: u64) {
        self.sum += c;
        self.sum_sq += c * c;
    }

    fn mean(&self, n: u64) -> f64 {
        self.sum as f64 / n as f64
    }

    fn variance(&self, n: u64) -> f64 {
        let m = self.mean(n);
        (self.sum_sq as f64 / n as f64 - m * m).max(0.0)
    }
}

impl Add for Moments {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

/// Integer outage tallies over a set of trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    s1: Moments,
    s2: Moments,
    oma: Moments,
    perfect: Moments,
    /// `sum_t c1_t c2_t`, for the variance of the NOMA sum rate.
    s1_s2: u64,
}

impl Add for Tally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            s1: self.s1 + o.s1,
            s2: self.s2 + o.s2,
            oma: self.oma + o.oma,
            perfect: self.perfect + o.perfect,
            s1_s2: self.s1_s2 + o.s1_s2,
        }
    }
}

/// Outage events of one trial, counted over beams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialCounts {
    pub s1: u64,
    pub s2: u64,
    pub oma: u64,
    pub perfect: u64,
}

/// Everything fixed across the trials of one sweep point.
struct PointContext<'a> {
    config: &'a SystemConfig,
    params: ModelParams,
    codebook: Codebook,
    noise: f64,
}

impl PointContext<'_> {
    fn trial(&self, rng: &mut TrialStream) -> Result<TrialCounts> {
        let cfg = self.config;
        let channels = ChannelRealization::draw(&self.params, cfg.antennas, cfg.s1_size, cfg.s2_size, rng)?;
        let beams = form_beams(&channels, &self.codebook);
        let gains = GainMatrix::compute(&channels, &beams);
        let noma = evaluate_noma(&gains, &cfg.pa, &cfg.rates, self.noise)?;
        let oma = evaluate_oma(&gains.s1, &cfg.rates, self.noise);

        let ideal: Vec<Vec<_>> = channels.s1_channels.iter().map(|h| perfect_beamformer(h)).collect();
        let ideal_gains: Vec<Vec<f64>> = channels
            .s1_channels
            .iter()
            .map(|h| ideal.iter().map(|f| inner_gain(h, f)).collect())
            .collect();
        let perfect = evaluate_s1(&ideal_gains, &cfg.pa, cfg.rates.eps0(), self.noise);

        Ok(TrialCounts {
            s1: events(noma.beams.iter().map(|b| b.outage_s1)),
            s2: events(noma.beams.iter().map(|b| b.outage_s2)),
            oma: events(oma),
            perfect: events(perfect),
        })
    }
}

fn events(flags: impl IntoIterator<Item = bool>) -> u64 {
    flags.into_iter().filter(|&b| b).count() as u64
}

/// Outage counts of a single trial, drawn from `stream_for_trial(seed, sweep_index, trial_index)`.
pub fn simulate_trial(config: &SystemConfig, sweep_index: usize, trial_index: u64) -> Result<TrialCounts> {
    config.validate()?;
    let ctx = point_context(config, sweep_index)?;
    let mut rng = stream_for_trial(config.seed, sweep_index as u64, trial_index);
    ctx.trial(&mut rng)
}

fn point_context(config: &SystemConfig, sweep_index: usize) -> Result<PointContext<'_>> {
    let rho = *config
        .rho()
        .get(sweep_index)
        .ok_or_else(|| invalid_config(format!("sweep index {sweep_index} out of range")))?;
    Ok(PointContext {
        config,
        params: config.model_params(),
        codebook: Codebook::new(config.nq)?,
        noise: config.antennas as f64 / rho,
    })
}

fn run_point(config: &SystemConfig, sweep_index: usize) -> Result<Tally> {
    let ctx = point_context(config, sweep_index)?;
    let chunks = config.trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = Tally::default();
            let end = ((chunk + 1) * CHUNK).min(config.trials);
            for t in chunk * CHUNK..end {
                let mut rng = stream_for_trial(config.seed, sweep_index as u64, t);
                let c = ctx.trial(&mut rng)?;
                tally.trials += 1;
                tally.s1.push(c.s1);
                tally.s2.push(c.s2);
                tally.oma.push(c.oma);
                tally.perfect.push(c.perfect);
                tally.s1_s2 += c.s1 * c.s2;
            }
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a + b))
}

/// Outage probability per beam with a 95% half-width.
///
/// `moments` counts events per trial over `beams` beams. The normal interval
/// uses the spread of the per-trial fractions; with fewer than ten events the
/// Wilson score interval over all `trials * beams` beam-trials is used.
fn proportion(moments: &Moments, trials: u64, beams: u64) -> Estimate {
    let total = (trials * beams) as f64;
    let p = moments.sum as f64 / total;
    let half = if moments.sum < WILSON_EVENTS {
        wilson_half_width(p, total)
    } else {
        let var = moments.variance(trials) / (beams * beams) as f64;
        Z95 * (var / trials as f64).sqrt()
    };
    Estimate {
        mean: p,
        ci95_half: half,
    }
}

pub fn wilson_half_width(p: f64, n: f64) -> f64 {
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

fn sum_rates(t: &Tally, beams: u64, rates: &RatePair) -> (Estimate, Estimate) {
    let n = t.trials;
    let k = beams as f64;
    let (r0, r1) = (rates.r0, rates.r1);

    let (m1, m2) = (t.s1.mean(n), t.s2.mean(n));
    let cov = t.s1_s2 as f64 / n as f64 - m1 * m2;
    let noma_var = (r0 * r0 * t.s1.variance(n) + r1 * r1 * t.s2.variance(n) + 2.0 * r0 * r1 * cov).max(0.0);
    let noma = Estimate {
        mean: r0 * (k - m1) + r1 * (k - m2),
        ci95_half: Z95 * (noma_var / n as f64).sqrt(),
    };

    let r = r0 + r1;
    let oma = Estimate {
        mean: r * (k - t.oma.mean(n)),
        ci95_half: Z95 * (r * r * t.oma.variance(n) / n as f64).sqrt(),
    };
    (noma, oma)
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(config: &SystemConfig) -> Result<OutageCurve> {
    config.validate()?;
    let tallies = (0..config.tx_dbm.len())
        .map(|i| run_point(config, i))
        .collect::<Result<Vec<_>>>()?;
    assemble(config, &tallies)
}

/// Runs the sweep on a dedicated pool of `workers` threads. The result does not depend on `workers`.
pub fn run_sweep_with_workers(config: &SystemConfig, workers: usize) -> Result<OutageCurve> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid_config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

fn assemble(config: &SystemConfig, tallies: &[Tally]) -> Result<OutageCurve> {
    let beams = config.s1_size as u64;
    let n = config.trials;
    let simulated = |name: &str, f: &dyn Fn(&Tally) -> Estimate| Series {
        name: name.to_string(),
        provenance: Provenance::Simulated,
        values: tallies.iter().map(f).collect(),
    };

    let mut out = vec![
        simulated(series::OUTAGE_S1, &|t| proportion(&t.s1, n, beams)),
        simulated(series::OUTAGE_S2, &|t| proportion(&t.s2, n, beams)),
        simulated(series::OUTAGE_S1_PERFECT, &|t| proportion(&t.perfect, n, beams)),
        simulated(series::OUTAGE_OMA, &|t| proportion(&t.oma, n, beams)),
        simulated(series::NOMA_SUM_RATE, &|t| sum_rates(t, beams, &config.rates).0),
        simulated(series::OMA_SUM_RATE, &|t| sum_rates(t, beams, &config.rates).1),
    ];
    if config.analytical_scope() {
        out.extend(analytical_series(config)?);
    }

    Ok(OutageCurve {
        tx_dbm: config.tx_dbm.clone(),
        rho: config.rho(),
        series: out,
        metadata: CurveMetadata {
            config_hash: config.hash(),
            seed: config.seed,
            trials: config.trials,
        },
    })
}

/// Closed-form S1 and S2 outage over the sweep; requires the single-beam one-bit Rayleigh scope.
pub fn analytical_series(config: &SystemConfig) -> Result<Vec<Series>> {
    if !config.analytical_scope() {
        return Err(invalid_config(
            "closed-form outage needs s1_size = 1, nq = 2 and the rayleigh model",
        ));
    }
    let pa = &config.pa;
    let rho = config.rho();
    let s1 = rho
        .iter()
        .map(|&r| {
            s1_outage_analytical(r, pa, &config.rates, config.antennas, config.ry, config.alpha).map(Estimate::exact)
        })
        .collect::<Result<Vec<_>>>()?;
    let s2 = rho
        .iter()
        .map(|&r| {
            s2_outage_analytical(
                r,
                pa,
                &config.rates,
                config.antennas,
                config.alpha,
                config.r1,
                config.s2_size,
                config.gc_nodes,
            )
            .map(Estimate::exact)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Series {
            name: series::OUTAGE_S1_ANALYTICAL.to_string(),
            provenance: Provenance::Analytical,
            values: s1,
        },
        Series {
            name: series::OUTAGE_S2_ANALYTICAL.to_string(),
            provenance: Provenance::Analytical,
            values: s2,
        },
    ])
}

/// Analytical-only curve (no simulation), for the `analysis` command.
pub fn analytical_curve(config: &SystemConfig) -> Result<OutageCurve> {
    config.validate()?;
    Ok(OutageCurve {
        tx_dbm: config.tx_dbm.clone(),
        rho: config.rho(),
        series: analytical_series(config)?,
        metadata: CurveMetadata {
            config_hash: config.hash(),
            seed: config.seed,
            trials: 0,
        },
    })
}
