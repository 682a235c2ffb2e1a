//! Finite-resolution analog beamforming.
//!
//! Every beamformer entry is one of `nq` equally spaced unit-modulus phases.
//! A channel is quantized entry by entry onto the nearest codeword.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid_config, invalid_input, Result};

/// The `nq` phase alphabet `e^{j 2 pi i / nq}`, `i = 0..nq`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<Complex64>,
}

impl Codebook {
    pub fn new(nq: usize) -> Result<Self> {
        if nq < 2 {
            return Err(invalid_config(format!(
                "codebook needs at least 2 phases, got {nq}"
            )));
        }
        let codewords = (0..nq).map(|i| unit_phase(i, nq)).collect();
        Ok(Self { codewords })
    }

    pub fn nq(&self) -> usize {
        self.codewords.len()
    }

    pub fn codewords(&self) -> &[Complex64] {
        &self.codewords
    }

    /// Index of the codeword closest to the direction of `x`.
    ///
    /// Ties go to the lowest index; `x == 0` maps to index 0.
    pub fn nearest(&self, x: Complex64) -> usize {
        let r = x.norm();
        if r == 0.0 {
            return 0;
        }
        let u = x / r;
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, c) in self.codewords.iter().enumerate() {
            let dist = (c - u).norm_sqr();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    /// Quantizes `h` into a phase-only beamformer.
    pub fn quantize(&self, h: &[Complex64]) -> Beamformer {
        let indices: Vec<usize> = h.iter().map(|&x| self.nearest(x)).collect();
        let coefficients = indices.iter().map(|&i| self.codewords[i]).collect();
        Beamformer {
            coefficients,
            indices,
        }
    }
}

// Quarter turns are emitted exactly so that binary and quaternary codebooks
// hold clean {±1, ±j} values.
fn unit_phase(i: usize, nq: usize) -> Complex64 {
    if (4 * i).is_multiple_of(nq) {
        match 4 * i / nq {
            0 => return Complex64::new(1.0, 0.0),
            1 => return Complex64::new(0.0, 1.0),
            2 => return Complex64::new(-1.0, 0.0),
            3 => return Complex64::new(0.0, -1.0),
            _ => {}
        }
    }
    Complex64::from_polar(1.0, 2.0 * PI * i as f64 / nq as f64)
}

/// Phase-only beamformer drawn from a [`Codebook`].
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub coefficients: Vec<Complex64>,
    pub indices: Vec<usize>,
}

impl Beamformer {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

impl AsRef<[Complex64]> for Beamformer {
    fn as_ref(&self) -> &[Complex64] {
        &self.coefficients
    }
}

pub fn quantize(h: &[Complex64], codebook: &Codebook) -> Beamformer {
    codebook.quantize(h)
}

/// `|h^H f|^2` for equal-length slices. Dimensions are not checked.
#[inline]
pub fn inner_gain(h: &[Complex64], f: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (hm, fm) in h.iter().zip(f) {
        acc += hm.conj() * fm;
    }
    acc.norm_sqr()
}

/// Effective channel gain `|h^H f|^2` on beamformer `f`.
pub fn effective_gain(h: &[Complex64], f: &Beamformer) -> Result<f64> {
    if h.len() != f.len() {
        return Err(invalid_input(format!(
            "channel has {} entries but beamformer has {}",
            h.len(),
            f.len()
        )));
    }
    Ok(inner_gain(h, &f.coefficients))
}

/// Gain of the ideal unit-modulus beamformer `f_m = h_m / |h_m|`.
pub fn perfect_gain(h: &[Complex64]) -> f64 {
    let s: f64 = h.iter().map(|x| x.norm()).sum();
    s * s
}

/// Ideal (unquantized) phase-only beamformer for `h`; zero entries map to `1`.
pub fn perfect_beamformer(h: &[Complex64]) -> Vec<Complex64> {
    h.iter()
        .map(|&x| {
            let r = x.norm();
            if r == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x / r
            }
        })
        .collect()
}
