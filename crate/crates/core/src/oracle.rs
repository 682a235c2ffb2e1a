//! Independent reference computations used to check the closed forms:
//! adaptive quadrature and Monte Carlo samplers of the quantities whose
//! distributions the analysis approximates.
//!
//! Samplers draw from the engine's per-trial streams, one stream per block of
//! samples, so every oracle run is reproducible and independent of threading.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::channel::{gen_rayleigh, pathloss};
use crate::engine::stream_for_trial;
use crate::error::Result;
use crate::frab::{effective_gain, Codebook};

const BLOCK: u64 = 1 << 16;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Composite-gain CDF of a user uniform in a disk of radius `r1`, integrated
/// directly over distance: `int_0^r1 (2t / r1^2) (1 - exp(-(1 + t^alpha) y / M)) dt`.
pub fn composite_cdf_quadrature(y: f64, antennas: usize, alpha: f64, r1: f64) -> f64 {
    let m = antennas as f64;
    let integrand = |t: f64| 2.0 * t / (r1 * r1) * -(-(y / pathloss(t, alpha)) / m).exp_m1();
    adaptive_simpson(&integrand, 0.0, r1, 1e-9)
}

fn sample_blocks<F>(n: u64, seed: u64, tag: u64, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut crate::engine::TrialStream) -> Result<f64> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_for_trial(seed, tag, b);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.concat())
}

/// `n` draws of `(sum_m |x_m|)^2` with `x_m ~ N(0, 1/2)` i.i.d.
pub fn folded_normal_sum_samples(antennas: usize, n: u64, seed: u64) -> Vec<f64> {
    sample_blocks(n, seed, u64::MAX, |rng| {
        let s: f64 = (0..antennas)
            .map(|_| {
                let x: f64 = StandardNormal.sample(rng);
                (x * FRAC_1_SQRT_2).abs()
            })
            .sum();
        Ok(s * s)
    })
    .expect("folded normal sampling is infallible")
}

/// `n` draws of the quantized-beam gain `|h^H f|^2` of a Rayleigh user at distance `d`.
pub fn frab_gain_samples(antennas: usize, nq: usize, distance: f64, alpha: f64, n: u64, seed: u64) -> Result<Vec<f64>> {
    let codebook = Codebook::new(nq)?;
    sample_blocks(n, seed, u64::MAX - 1, |rng| {
        let h = gen_rayleigh(antennas, distance, alpha, rng)?;
        effective_gain(&h, &codebook.quantize(&h))
    })
}

/// `n` draws of `|sum_m sign(Re h_m) Im h_m|^2` for a Rayleigh user at distance `d`.
pub fn z0_samples(antennas: usize, distance: f64, alpha: f64, n: u64, seed: u64) -> Result<Vec<f64>> {
    sample_blocks(n, seed, u64::MAX - 2, |rng| {
        let h = gen_rayleigh(antennas, distance, alpha, rng)?;
        let s: f64 = h.iter().map(|x| x.im.copysign(x.re)).sum();
        Ok(s * s)
    })
}

/// `n` uniform draws on `[0, 1)`; used to sanity check stream quality.
pub fn uniform_samples(n: u64, seed: u64) -> Vec<f64> {
    sample_blocks(n, seed, u64::MAX - 3, |rng| Ok(rng.random::<f64>())).expect("infallible")
}

/// Sorted copy of `samples`, ready for [`empirical_cdf`].
pub fn sorted(mut samples: Vec<f64>) -> Vec<f64> {
    samples.sort_unstable_by(|a, b| a.total_cmp(b));
    samples
}

/// Fraction of `sorted` strictly below `x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s < x) as f64 / sorted.len() as f64
}

/// Kolmogorov-Smirnov distance between the sample and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erf;

    #[test]
    fn simpson_integrates_known_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), 0.0, 1.0, 1e-12);
        assert!((v - std::f64::consts::PI.sqrt() / 2.0 * erf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn quadrature_limits() {
        assert_eq!(composite_cdf_quadrature(0.0, 4, 3.0, 40.0), 0.0);
        assert!((composite_cdf_quadrature(1e9, 4, 3.0, 40.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_folded_normal_matches_erf() {
        // P(|x|^2 < z) = erf(sqrt(z)) for x ~ N(0, 1/2)
        let s = sorted(folded_normal_sum_samples(1, 200_000, 3));
        let ks = ks_distance(&s, |z| erf(z.sqrt()));
        assert!(ks < 0.005, "{ks}");
    }

    #[test]
    fn z0_matches_erf_law() {
        for (m, d) in [(2, 0.0), (4, 1.5)] {
            let s = sorted(z0_samples(m, d, 3.0, 1_000_000, 5).unwrap());
            let ks = ks_distance(&s, |z| crate::analysis::z0_cdf(z, m, d, 3.0));
            assert!(ks < 0.005, "M={m} d={d}: {ks}");
        }
    }

    #[test]
    fn samplers_are_reproducible() {
        assert_eq!(folded_normal_sum_samples(2, 70_000, 9), folded_normal_sum_samples(2, 70_000, 9));
        assert_ne!(folded_normal_sum_samples(2, 1000, 9), folded_normal_sum_samples(2, 1000, 10));
        assert_eq!(frab_gain_samples(3, 2, 0.0, 3.0, 10, 1).unwrap().len(), 10);
    }

    #[test]
    fn empirical_cdf_and_ks() {
        let s = sorted(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(empirical_cdf(&s, 0.5), 0.0);
        assert_eq!(empirical_cdf(&s, 2.5), 0.5);
        assert_eq!(empirical_cdf(&s, 5.0), 1.0);
        let u = sorted(uniform_samples(100_000, 4));
        assert!(ks_distance(&u, |x| x.clamp(0.0, 1.0)) < 0.006);
    }
}
