//! Power-domain NOMA on top of the FRAB beams: the SINR chain, partner
//! selection and the per-trial outage events, plus the single-user (OMA)
//! baseline that serves only the S1 user on each beam.
//!
//! Gains are always `|x^H f_l|^2` for some user channel `x` and beam `l`.
//! The noise term in every SINR is `M / rho`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid_config, invalid_input, Result};
use crate::frab::{inner_gain, Beamformer, Codebook};

const POWER_SUM_TOL: f64 = 1e-9;

/// Split of the beam power between the S1 message (`a0sq`) and the S2 message (`a1sq`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub a0sq: f64,
    pub a1sq: f64,
}

impl PowerAllocation {
    pub fn new(a0sq: f64, a1sq: f64) -> Result<Self> {
        let pa = Self { a0sq, a1sq };
        pa.validate()?;
        Ok(pa)
    }

    /// The whole beam power goes to the S1 user.
    pub fn single_user() -> Self {
        Self {
            a0sq: 1.0,
            a1sq: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0sq.is_finite() && self.a1sq.is_finite()) || self.a1sq < 0.0 {
            return Err(invalid_config("power fractions must be finite and non-negative"));
        }
        if self.a0sq < self.a1sq {
            return Err(invalid_config(format!(
                "power ordering violated: a0sq = {} < a1sq = {}",
                self.a0sq, self.a1sq
            )));
        }
        if (self.a0sq + self.a1sq - 1.0).abs() > POWER_SUM_TOL {
            return Err(invalid_config(format!(
                "power fractions must sum to 1, got {}",
                self.a0sq + self.a1sq
            )));
        }
        Ok(())
    }
}

impl Default for PowerAllocation {
    fn default() -> Self {
        Self {
            a0sq: 0.75,
            a1sq: 0.25,
        }
    }
}

/// Target rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r0: f64,
    pub r1: f64,
}

impl RatePair {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        let rates = Self { r0, r1 };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r1 > 0.0 && self.r0.is_finite() && self.r1.is_finite()) {
            return Err(invalid_config("target rates must be positive"));
        }
        Ok(())
    }

    pub fn eps0(&self) -> f64 {
        self.r0.exp2() - 1.0
    }

    pub fn eps1(&self) -> f64 {
        self.r1.exp2() - 1.0
    }

    /// SINR threshold for a single user carrying `r0 + r1`.
    pub fn oma_threshold(&self) -> f64 {
        (self.r0 + self.r1).exp2() - 1.0
    }
}

/// Noise term `M / rho`.
pub fn noise_term(antennas: usize, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(invalid_config(format!("rho must be positive, got {rho}")));
    }
    if antennas == 0 {
        return Err(invalid_config("antenna count must be at least 1"));
    }
    Ok(antennas as f64 / rho)
}

fn check_beam(gains: &[f64], beam: usize) -> Result<()> {
    if beam >= gains.len() {
        return Err(invalid_input(format!(
            "beam {beam} out of range for {} gains",
            gains.len()
        )));
    }
    Ok(())
}

#[inline]
fn interference(gains: &[f64], beam: usize) -> f64 {
    gains
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != beam)
        .map(|(_, g)| g)
        .sum()
}

#[inline]
fn superposed_sinr(gains: &[f64], beam: usize, pa: &PowerAllocation, noise: f64) -> f64 {
    let g = gains[beam];
    g * pa.a0sq / (g * pa.a1sq + interference(gains, beam) + noise)
}

#[inline]
fn post_sic_sinr(gains: &[f64], beam: usize, pa: &PowerAllocation, noise: f64) -> f64 {
    gains[beam] * pa.a1sq / (interference(gains, beam) + noise)
}

/// SINR of the S1 user on beam `beam`, treating its partner's message as noise.
///
/// `gains[l]` is `|h_k^H f_l|^2` for every beam `l`.
pub fn sinr_s1(
    gains: &[f64],
    beam: usize,
    pa: &PowerAllocation,
    antennas: usize,
    rho: f64,
) -> Result<f64> {
    let noise = noise_term(antennas, rho)?;
    check_beam(gains, beam)?;
    Ok(superposed_sinr(gains, beam, pa, noise))
}

/// SINR with which an S2 user decodes the S1 message of beam `beam` before cancelling it.
pub fn sinr_sic(
    gains: &[f64],
    beam: usize,
    pa: &PowerAllocation,
    antennas: usize,
    rho: f64,
) -> Result<f64> {
    sinr_s1(gains, beam, pa, antennas, rho)
}

/// SINR of the S2 user for its own message after successful cancellation.
pub fn sinr_s2_postsic(
    gains: &[f64],
    beam: usize,
    pa: &PowerAllocation,
    antennas: usize,
    rho: f64,
) -> Result<f64> {
    let noise = noise_term(antennas, rho)?;
    check_beam(gains, beam)?;
    Ok(post_sic_sinr(gains, beam, pa, noise))
}

/// Picks the S2 partner of `beam`: the user with the largest cancellation SINR.
///
/// `s2_gains[i][l]` is `|g_i^H f_l|^2`. Ties go to the lowest index, and the
/// same user may be picked by several beams.
pub fn select_partner(
    beam: usize,
    s2_gains: &[Vec<f64>],
    pa: &PowerAllocation,
    antennas: usize,
    rho: f64,
) -> Result<usize> {
    let noise = noise_term(antennas, rho)?;
    if s2_gains.is_empty() {
        return Err(invalid_config("S2 must contain at least one user"));
    }
    for row in s2_gains {
        check_beam(row, beam)?;
    }
    Ok(best_partner(beam, s2_gains, pa, noise).0)
}

fn best_partner(
    beam: usize,
    s2_gains: &[Vec<f64>],
    pa: &PowerAllocation,
    noise: f64,
) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, row) in s2_gains.iter().enumerate() {
        let s = superposed_sinr(row, beam, pa, noise);
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}

/// Effective gains of every user on every beam for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    /// `s1[k][l] = |h_k^H f_l|^2`.
    pub s1: Vec<Vec<f64>>,
    /// `s2[i][l] = |g_i^H f_l|^2`.
    pub s2: Vec<Vec<f64>>,
}

impl GainMatrix {
    pub fn compute<F: AsRef<[Complex64]>>(channels: &ChannelRealization, beams: &[F]) -> Self {
        let row = |x: &Vec<Complex64>| -> Vec<f64> {
            beams.iter().map(|f| inner_gain(x, f.as_ref())).collect()
        };
        Self {
            s1: channels.s1_channels.iter().map(row).collect(),
            s2: channels.s2_channels.iter().map(row).collect(),
        }
    }

    pub fn beams(&self) -> usize {
        self.s1.len()
    }
}

/// Everything decided on one beam during one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamOutcome {
    pub partner: usize,
    pub sinr_s1: f64,
    pub sinr_sic: f64,
    pub sinr_s2: f64,
    pub outage_s1: bool,
    pub outage_s2: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub beams: Vec<BeamOutcome>,
}

impl TrialOutcome {
    /// Sum over beams of the target rates of the users not in outage.
    pub fn sum_rate(&self, rates: &RatePair) -> f64 {
        self.beams
            .iter()
            .map(|b| {
                let mut r = 0.0;
                if !b.outage_s1 {
                    r += rates.r0;
                }
                if !b.outage_s2 {
                    r += rates.r1;
                }
                r
            })
            .sum()
    }
}

/// Decodes every beam given precomputed gains. `noise` is `M / rho`.
pub fn evaluate_noma(
    gains: &GainMatrix,
    pa: &PowerAllocation,
    rates: &RatePair,
    noise: f64,
) -> Result<TrialOutcome> {
    if gains.s2.is_empty() {
        return Err(invalid_config("S2 must contain at least one user"));
    }
    let eps0 = rates.eps0();
    let eps1 = rates.eps1();
    let beams = (0..gains.beams())
        .map(|k| {
            let sinr_s1 = superposed_sinr(&gains.s1[k], k, pa, noise);
            let (partner, sinr_sic) = best_partner(k, &gains.s2, pa, noise);
            let sinr_s2 = post_sic_sinr(&gains.s2[partner], k, pa, noise);
            BeamOutcome {
                partner,
                sinr_s1,
                sinr_sic,
                sinr_s2,
                outage_s1: sinr_s1 < eps0,
                outage_s2: sinr_sic < eps0 || sinr_s2 < eps1,
            }
        })
        .collect();
    Ok(TrialOutcome { beams })
}

/// Per-beam S1 outage (`sinr_s1 < threshold`) from the S1 gain rows alone.
pub fn evaluate_s1(s1_gains: &[Vec<f64>], pa: &PowerAllocation, threshold: f64, noise: f64) -> Vec<bool> {
    (0..s1_gains.len())
        .map(|k| superposed_sinr(&s1_gains[k], k, pa, noise) < threshold)
        .collect()
}

/// Per-beam outage of the S1 user alone at full power and rate `r0 + r1`.
pub fn evaluate_oma(s1_gains: &[Vec<f64>], rates: &RatePair, noise: f64) -> Vec<bool> {
    evaluate_s1(s1_gains, &PowerAllocation::single_user(), rates.oma_threshold(), noise)
}

/// Quantizes one beam per S1 user.
pub fn form_beams(channels: &ChannelRealization, codebook: &Codebook) -> Vec<Beamformer> {
    channels
        .s1_channels
        .iter()
        .map(|h| codebook.quantize(h))
        .collect()
}

fn check_realization(channels: &ChannelRealization) -> Result<usize> {
    let m = channels.antennas();
    if m == 0 {
        return Err(invalid_input("realization has no antennas"));
    }
    if channels.s1_channels.is_empty() {
        return Err(invalid_config("S1 must contain at least one user"));
    }
    let consistent = channels
        .s1_channels
        .iter()
        .chain(&channels.s2_channels)
        .all(|x| x.len() == m);
    if !consistent {
        return Err(invalid_input("channel vectors differ in length"));
    }
    Ok(m)
}

/// Full NOMA chain for one realization: quantize, select partners, decode.
pub fn run_trial(
    channels: &ChannelRealization,
    codebook: &Codebook,
    pa: &PowerAllocation,
    rates: &RatePair,
    rho: f64,
) -> Result<TrialOutcome> {
    let m = check_realization(channels)?;
    let noise = noise_term(m, rho)?;
    let beams = form_beams(channels, codebook);
    evaluate_noma(&GainMatrix::compute(channels, &beams), pa, rates, noise)
}

/// Single-user baseline on the same quantized beams.
pub fn run_trial_oma(
    channels: &ChannelRealization,
    codebook: &Codebook,
    rates: &RatePair,
    rho: f64,
) -> Result<Vec<bool>> {
    let m = check_realization(channels)?;
    let noise = noise_term(m, rho)?;
    let beams = form_beams(channels, codebook);
    let s1: Vec<Vec<f64>> = channels
        .s1_channels
        .iter()
        .map(|h| beams.iter().map(|f| inner_gain(h, &f.coefficients)).collect())
        .collect();
    Ok(evaluate_oma(&s1, rates, noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModel, ModelParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pa() -> PowerAllocation {
        PowerAllocation::default()
    }

    #[test]
    fn power_allocation_checks() {
        assert!(PowerAllocation::new(0.75, 0.25).is_ok());
        let err = PowerAllocation::new(0.4, 0.6).unwrap_err();
        assert!(err.to_string().contains("power ordering violated"));
        assert!(PowerAllocation::new(0.7, 0.2).is_err());
        assert!(PowerAllocation::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn rate_thresholds() {
        let r = RatePair::new(1.0, 1.5).unwrap();
        assert_eq!(r.eps0(), 1.0);
        assert!((r.eps1() - (2f64.powf(1.5) - 1.0)).abs() < 1e-15);
        assert!((r.oma_threshold() - (2f64.powf(2.5) - 1.0)).abs() < 1e-12);
        assert!(RatePair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn s1_sinr_examples() {
        // M / rho = 1
        let s = sinr_s1(&[1.0], 0, &pa(), 4, 4.0).unwrap();
        assert!((s - 0.6).abs() < 1e-15);
        let s = sinr_s1(&[2.0], 0, &PowerAllocation::single_user(), 4, 10.0).unwrap();
        assert!((s - 2.0 * 10.0 / 4.0).abs() < 1e-12);
        let s = sinr_s1(&[0.3], 0, &pa(), 4, f64::INFINITY).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
        assert!(sinr_s1(&[1.0], 0, &pa(), 4, 0.0).is_err());
        assert!(sinr_s1(&[1.0], 0, &pa(), 4, -1.0).is_err());
        assert!(sinr_s1(&[1.0], 1, &pa(), 4, 1.0).is_err());
    }

    #[test]
    fn sic_sinr_examples() {
        assert!((sinr_sic(&[1.0], 0, &pa(), 4, 4.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(sinr_sic(&[0.0], 0, &pa(), 4, 4.0).unwrap(), 0.0);
        let a = sinr_sic(&[0.5, 0.2], 0, &pa(), 4, 4.0).unwrap();
        let b = sinr_sic(&[0.6, 0.2], 0, &pa(), 4, 4.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn post_sic_examples() {
        assert!((sinr_s2_postsic(&[1.0], 0, &pa(), 4, 4.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(sinr_s2_postsic(&[0.0], 0, &pa(), 4, 4.0).unwrap(), 0.0);
        let lo = sinr_s2_postsic(&[1.0], 0, &pa(), 4, 1e6).unwrap();
        let hi = sinr_s2_postsic(&[1.0], 0, &pa(), 4, 1e7).unwrap();
        assert!((hi / lo - 10.0).abs() < 1e-9);
    }

    #[test]
    fn multi_beam_interference() {
        // g = [2, 0.5, 0.25], M / rho = 0.25
        let s = sinr_s1(&[2.0, 0.5, 0.25], 0, &pa(), 1, 4.0).unwrap();
        assert!((s - 1.5 / (0.5 + 0.75 + 0.25)).abs() < 1e-15);
        let s = sinr_s2_postsic(&[2.0, 0.5, 0.25], 0, &pa(), 1, 4.0).unwrap();
        assert!((s - 0.5 / 1.0).abs() < 1e-15);
    }

    #[test]
    fn partner_selection_examples() {
        let gains = vec![vec![0.1], vec![0.9]];
        assert_eq!(select_partner(0, &gains, &pa(), 4, 10.0).unwrap(), 1);
        assert_eq!(select_partner(0, &[vec![0.1]], &pa(), 4, 10.0).unwrap(), 0);
        assert_eq!(
            select_partner(0, &[vec![0.4], vec![0.4]], &pa(), 4, 10.0).unwrap(),
            0
        );
        assert!(select_partner(0, &[], &pa(), 4, 10.0).is_err());
        // With two beams, interference matters: user 1 is stronger on beam 0
        // but also hears beam 1 loudly.
        let gains = vec![vec![0.5, 0.01], vec![0.6, 0.6]];
        assert_eq!(select_partner(0, &gains, &pa(), 1, 100.0).unwrap(), 0);
    }

    fn realization(seed: u64, s1: usize, s2: usize, m: usize) -> ChannelRealization {
        let params = ModelParams {
            pathloss_exponent: 3.0,
            r1: 40.0,
            ry: 20.0,
            model: ChannelModel::Rayleigh,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelRealization::draw(&params, m, s1, s2, &mut rng).unwrap()
    }

    #[test]
    fn vanishing_power_means_outage() {
        let ch = realization(1, 2, 5, 4);
        let cb = Codebook::new(2).unwrap();
        let rates = RatePair::new(1.0, 1.0).unwrap();
        let out = run_trial(&ch, &cb, &pa(), &rates, 1e-30).unwrap();
        assert!(out.beams.iter().all(|b| b.outage_s1 && b.outage_s2));
        assert_eq!(out.sum_rate(&rates), 0.0);
        assert!(run_trial_oma(&ch, &cb, &rates, 1e-30).unwrap().iter().all(|&o| o));
    }

    #[test]
    fn single_beam_oma_never_fails_at_infinite_power() {
        let ch = realization(2, 1, 3, 4);
        let cb = Codebook::new(2).unwrap();
        let rates = RatePair::new(1.0, 1.5).unwrap();
        assert_eq!(run_trial_oma(&ch, &cb, &rates, f64::INFINITY).unwrap(), vec![false]);
    }

    #[test]
    fn single_beam_oma_threshold() {
        let rates = RatePair::new(1.0, 1.0).unwrap();
        // g / noise against 2^2 - 1 = 3
        let s1 = vec![vec![0.75]];
        assert_eq!(evaluate_oma(&s1, &rates, 0.25), vec![false]);
        assert_eq!(evaluate_oma(&s1, &rates, 0.2501), vec![true]);
    }

    #[test]
    fn s2_outage_requires_sic() {
        // Partner decodes its own message easily but cannot cancel first.
        let gains = GainMatrix {
            s1: vec![vec![1.0]],
            s2: vec![vec![1.0]],
        };
        let pa = PowerAllocation::new(0.55, 0.45).unwrap();
        let rates = RatePair::new(2.0, 0.1).unwrap();
        let out = evaluate_noma(&gains, &pa, &rates, 1e-6).unwrap();
        let b = out.beams[0];
        assert!(b.sinr_sic < rates.eps0() && b.sinr_s2 > rates.eps1());
        assert!(b.outage_s2);
    }

    #[test]
    fn single_beam_outage_matches_gain_threshold() {
        // sinr_s1 >= eps0  <=>  g >= (M eps0 / rho) / (a0 - eps0 a1)
        let pa = pa();
        let rates = RatePair::new(1.0, 1.0).unwrap();
        let (m, rho) = (4usize, 100.0);
        let phi0 = (m as f64 * rates.eps0() / rho) / (pa.a0sq - rates.eps0() * pa.a1sq);
        for g in [0.5 * phi0, 0.999 * phi0, 1.001 * phi0, 2.0 * phi0] {
            let s = sinr_s1(&[g], 0, &pa, m, rho).unwrap();
            assert_eq!(s < rates.eps0(), g < phi0, "g = {g}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn single_beam_selection_is_argmax_gain(
            gains in prop::collection::vec(1e-3f64..10.0, 1..40),
            rho in 0.1f64..1e3,
        ) {
            let rows: Vec<Vec<f64>> = gains.iter().map(|&g| vec![g]).collect();
            let by_sinr = select_partner(0, &rows, &pa(), 4, rho).unwrap();
            let mut by_gain = 0;
            for (i, &g) in gains.iter().enumerate() {
                if g > gains[by_gain] { by_gain = i; }
            }
            prop_assert_eq!(by_sinr, by_gain);
        }

        #[test]
        fn sinrs_increase_with_power(
            gains in prop::collection::vec(1e-3f64..10.0, 1..5),
            rho in 1e-2f64..1e4,
        ) {
            let hi = rho * 1.5;
            for k in 0..gains.len() {
                prop_assert!(sinr_s1(&gains, k, &pa(), 8, hi).unwrap() > sinr_s1(&gains, k, &pa(), 8, rho).unwrap());
                prop_assert!(sinr_s2_postsic(&gains, k, &pa(), 8, hi).unwrap() > sinr_s2_postsic(&gains, k, &pa(), 8, rho).unwrap());
            }
        }

        #[test]
        fn sinrs_are_scale_free(
            gains in prop::collection::vec(1e-3f64..10.0, 1..5),
            rho in 1e-2f64..1e4,
            c in 1e-3f64..1e3,
        ) {
            let scaled: Vec<f64> = gains.iter().map(|g| g * c).collect();
            for k in 0..gains.len() {
                let a = sinr_s1(&gains, k, &pa(), 8, rho).unwrap();
                let b = sinr_s1(&scaled, k, &pa(), 8, rho / c).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
                let a = sinr_s2_postsic(&gains, k, &pa(), 8, rho).unwrap();
                let b = sinr_s2_postsic(&scaled, k, &pa(), 8, rho / c).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }

        #[test]
        fn outages_non_increasing_in_power(seed in 0u64..1000, rho in 1e2f64..1e8) {
            let ch = realization(seed, 2, 6, 4);
            let cb = Codebook::new(2).unwrap();
            let rates = RatePair::new(1.0, 1.0).unwrap();
            let lo = run_trial(&ch, &cb, &pa(), &rates, rho).unwrap();
            let hi = run_trial(&ch, &cb, &pa(), &rates, rho * 2.0).unwrap();
            for (a, b) in lo.beams.iter().zip(&hi.beams) {
                prop_assert!(b.sinr_s1 > a.sinr_s1 && b.sinr_sic >= a.sinr_sic);
                prop_assert!(!b.outage_s1 || a.outage_s1);
                prop_assert!(a.sinr_s1 >= 0.0 && a.sinr_sic >= 0.0 && a.sinr_s2 >= 0.0);
            }
        }
    }
}
