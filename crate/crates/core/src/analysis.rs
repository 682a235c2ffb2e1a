//! Closed-form and small-argument outage expressions for the single-beam,
//! one-bit (`nq = 2`), Rayleigh case, and the log-log slope fit used to read
//! diversity orders off outage curves.
//!
//! The asymptotic CDFs grow without bound; every probability-returning
//! function here clamps to `[0, 1]`, and the `*_raw` variants expose the
//! unclamped value.

use std::f64::consts::PI;
use std::ops::Range;

use crate::channel::pathloss;
use crate::error::{invalid_input, Error, Result};
use crate::noma::{PowerAllocation, RatePair};
use crate::special::{beta, erf, ln_factorial};

/// Effective-gain thresholds below which decoding fails.
///
/// `None` means the power split cannot support the rate at any SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Gain needed to decode the S1 message (at either user).
    pub phi0: Option<f64>,
    /// Gain needed by the S2 user to decode its own message after SIC.
    pub phi1: Option<f64>,
}

impl Threshold {
    pub fn feasible(&self) -> bool {
        self.phi0.is_some() && self.phi1.is_some()
    }

    /// `max(phi0, phi1)`, the S2 user's requirement.
    pub fn s2_requirement(&self) -> Option<f64> {
        Some(self.phi0?.max(self.phi1?))
    }
}

/// `phi_i = (M eps_i / rho) / (a_i^2 - eps_i sum_{n>i} a_n^2)`.
pub fn thresholds(pa: &PowerAllocation, rates: &RatePair, antennas: usize, rho: f64) -> Threshold {
    let scale = antennas as f64 / rho;
    let phi = |eps: f64, denom: f64| (denom > 0.0).then(|| scale * eps / denom);
    let (eps0, eps1) = (rates.eps0(), rates.eps1());
    Threshold {
        phi0: phi(eps0, pa.a0sq - eps0 * pa.a1sq),
        phi1: phi(eps1, pa.a1sq),
    }
}

fn clamp_probability(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Small-`z` CDF of `(sum_m |x_m|)^2` for `M` i.i.d. `x_m ~ N(0, 1/2)`:
/// `2^M z^{M/2} / (pi^{M/2} M!)`. Unclamped.
pub fn prop1_cdf_raw(z: f64, antennas: usize) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let m = antennas as f64;
    (m * 2f64.ln() + 0.5 * m * (z.ln() - PI.ln()) - ln_factorial(antennas as u32)).exp()
}

pub fn prop1_cdf(z: f64, antennas: usize) -> f64 {
    clamp_probability(prop1_cdf_raw(z, antennas))
}

/// Small-`y` CDF of the one-bit FRAB gain `|h^H f|^2` for a Rayleigh user at
/// distance `d`. Unclamped. Needs `M >= 2`.
pub fn lemma1_cdf_raw(y: f64, antennas: usize, distance: f64, alpha: f64) -> Result<f64> {
    if antennas < 2 {
        return Err(invalid_input(format!(
            "the effective-gain approximation needs at least 2 antennas, got {antennas}"
        )));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let m = antennas as f64;
    let scaled = y / pathloss(distance, alpha);
    let ln = m * 2f64.ln() + 0.5 * (m + 1.0) * scaled.ln() + beta(1.5, 0.5 * m)?.ln()
        - 0.5 * m * PI.ln()
        - ln_factorial(antennas as u32 - 1)
        - 0.5 * m.ln()
        - 0.5 * PI.ln();
    Ok(ln.exp())
}

pub fn lemma1_cdf(y: f64, antennas: usize, distance: f64, alpha: f64) -> Result<f64> {
    Ok(clamp_probability(lemma1_cdf_raw(y, antennas, distance, alpha)?))
}

/// Exact CDF of `z0 = |sum_m sign(Re h_m) Im h_m|^2`, the imaginary part of
/// the one-bit effective gain: `gamma(1/2, (1 + d^alpha) z / M) / Gamma(1/2)`.
pub fn z0_cdf(z: f64, antennas: usize, distance: f64, alpha: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    // gamma(1/2, x) / Gamma(1/2) = erf(sqrt(x))
    erf((z / pathloss(distance, alpha) / antennas as f64).sqrt())
}

/// Gauss-Chebyshev rule that averages the per-distance exponential CDF over
/// a user dropped uniformly in a disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussChebyshev {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `c_n = 1 + (r1 (eta_n + 1) / 2)^alpha`, the inverse path loss at each node.
    pub rates: Vec<f64>,
}

impl GaussChebyshev {
    pub fn new(n_nodes: usize, r1: f64, alpha: f64) -> Result<Self> {
        if n_nodes == 0 {
            return Err(invalid_input("Gauss-Chebyshev rule needs at least one node"));
        }
        let n = n_nodes as f64;
        let nodes: Vec<f64> = (1..=n_nodes)
            .map(|i| ((2 * i - 1) as f64 * PI / (2.0 * n)).cos())
            .collect();
        let weights = nodes
            .iter()
            .map(|&eta| PI / (2.0 * n) * (1.0 - eta * eta).sqrt() * (eta + 1.0))
            .collect();
        let rates = nodes
            .iter()
            .map(|&eta| 1.0 + (0.5 * r1 * eta + 0.5 * r1).powf(alpha))
            .collect();
        Ok(Self {
            nodes,
            weights,
            rates,
        })
    }

    /// `sum_n w_n (1 - exp(-c_n y / M))`.
    pub fn cdf(&self, y: f64, antennas: usize) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let m = antennas as f64;
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(w, c)| w * -(-c * y / m).exp_m1())
            .sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// CDF of a random S2 user's composite gain `|g^H f|^2`, unclamped.
pub fn composite_cdf_gc(y: f64, antennas: usize, alpha: f64, r1: f64, n_nodes: usize) -> Result<f64> {
    Ok(GaussChebyshev::new(n_nodes, r1, alpha)?.cdf(y, antennas))
}

/// Outage probability of the S1 user on a single one-bit beam.
pub fn s1_outage_analytical(
    rho: f64,
    pa: &PowerAllocation,
    rates: &RatePair,
    antennas: usize,
    distance: f64,
    alpha: f64,
) -> Result<f64> {
    match thresholds(pa, rates, antennas, rho).phi0 {
        Some(phi0) => lemma1_cdf(phi0, antennas, distance, alpha),
        None => Ok(1.0),
    }
}

/// Outage probability of the selected S2 partner on a single beam:
/// `F(max(phi0, phi1))^{|S2|}`.
#[allow(clippy::too_many_arguments)]
pub fn s2_outage_analytical(
    rho: f64,
    pa: &PowerAllocation,
    rates: &RatePair,
    antennas: usize,
    alpha: f64,
    r1: f64,
    s2_size: usize,
    n_nodes: usize,
) -> Result<f64> {
    let rule = GaussChebyshev::new(n_nodes, r1, alpha)?;
    Ok(match thresholds(pa, rates, antennas, rho).s2_requirement() {
        Some(y) => clamp_probability(rule.cdf(y, antennas)).powi(s2_size as i32),
        None => 1.0,
    })
}

/// Least-squares fit of `log10(outage)` against `log10(rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Points that entered the fit.
    pub used: usize,
    /// Points in the window dropped for having non-positive outage.
    pub excluded: usize,
}

impl SlopeFit {
    /// Diversity order, the negated slope.
    pub fn diversity(&self) -> f64 {
        -self.slope
    }
}

/// Fits the high-SNR slope over `curve[window]`, where `curve` holds
/// `(rho_linear, outage)` pairs.
pub fn fit_diversity_slope(curve: &[(f64, f64)], window: Range<usize>) -> Result<SlopeFit> {
    let window = window.start.min(curve.len())..window.end.min(curve.len());
    let mut excluded = 0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(rho, p) in &curve[window] {
        if p > 0.0 && rho > 0.0 {
            xs.push(rho.log10());
            ys.push(p.log10());
        } else {
            excluded += 1;
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData { usable: n });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(invalid_input("slope fit needs distinct rho values"));
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        used: n,
        excluded,
    })
}

/// Default fit window: the top decade of `rho` among points with outage `>= floor`.
///
/// `curve` must be sorted by increasing `rho`.
pub fn high_snr_window(curve: &[(f64, f64)], floor: f64) -> Range<usize> {
    let Some(end) = curve.iter().rposition(|p| p.1 >= floor && p.1 > 0.0) else {
        return 0..0;
    };
    let rho_max = curve[end].0;
    let start = curve[..=end]
        .iter()
        .position(|p| p.0 >= rho_max / 10.0 * (1.0 - 1e-12))
        .unwrap_or(end);
    start..end + 1
}
