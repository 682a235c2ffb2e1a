//! User geometry and channel generation.
//!
//! S1 users sit on a circle of radius `ry` around the base station, S2 users
//! are dropped uniformly over a disk of radius `r1`. Channels follow either
//! Rayleigh fading or a single line-of-sight mmWave path.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid_config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserGeometry {
    pub group: Group,
    /// Distance to the base station in meters.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    Rayleigh,
    MmWaveLos,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Rayleigh => f.write_str("rayleigh"),
            ChannelModel::MmWaveLos => f.write_str("mmwave"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            "mmwave" | "mmwave-los" | "mmwave_los" => Ok(ChannelModel::MmWaveLos),
            other => Err(invalid_config(format!("unknown channel model `{other}`"))),
        }
    }
}

/// Geometry and propagation parameters shared by all users of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub pathloss_exponent: f64,
    pub r1: f64,
    pub ry: f64,
    pub model: ChannelModel,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(invalid_config("path-loss exponent must be positive"));
        }
        if !(self.r1 > 0.0 && self.r1.is_finite()) {
            return Err(invalid_config("r1 must be positive"));
        }
        if !(self.ry > 0.0 && self.ry.is_finite()) {
            return Err(invalid_config("ry must be positive"));
        }
        Ok(())
    }
}

/// One draw of every user's channel vector for a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub model: ChannelModel,
    /// `h_k` for every S1 user.
    pub s1_channels: Vec<Vec<Complex64>>,
    /// `g_i` for every S2 user.
    pub s2_channels: Vec<Vec<Complex64>>,
    pub s1_geometry: Vec<UserGeometry>,
    pub s2_geometry: Vec<UserGeometry>,
}

impl ChannelRealization {
    /// Draws geometry and channels for `s1_size` + `s2_size` users.
    pub fn draw<R: Rng + ?Sized>(
        params: &ModelParams,
        antennas: usize,
        s1_size: usize,
        s2_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut s1_channels = Vec::with_capacity(s1_size);
        let mut s1_geometry = Vec::with_capacity(s1_size);
        for _ in 0..s1_size {
            s1_channels.push(gen_channel(params, antennas, params.ry, rng)?);
            s1_geometry.push(UserGeometry {
                group: Group::S1,
                distance: params.ry,
            });
        }

        let mut s2_channels = Vec::with_capacity(s2_size);
        let mut s2_geometry = Vec::with_capacity(s2_size);
        for _ in 0..s2_size {
            let distance = sample_s2_distance(params.r1, rng);
            s2_channels.push(gen_channel(params, antennas, distance, rng)?);
            s2_geometry.push(UserGeometry {
                group: Group::S2,
                distance,
            });
        }

        Ok(Self {
            model: params.model,
            s1_channels,
            s2_channels,
            s1_geometry,
            s2_geometry,
        })
    }

    pub fn antennas(&self) -> usize {
        self.s1_channels
            .first()
            .or_else(|| self.s2_channels.first())
            .map_or(0, Vec::len)
    }
}

fn gen_channel<R: Rng + ?Sized>(
    params: &ModelParams,
    antennas: usize,
    distance: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    match params.model {
        ChannelModel::Rayleigh => gen_rayleigh(antennas, distance, params.pathloss_exponent, rng),
        ChannelModel::MmWaveLos => gen_mmwave(antennas, distance, params.pathloss_exponent, rng),
    }
}

/// `1 / (1 + d^alpha)`.
#[inline]
pub fn pathloss(distance: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + distance.powf(alpha))
}

/// Maps a uniform variate `u` in `[0, 1]` to a distance uniform over the disk area.
#[inline]
pub fn disk_distance(r1: f64, u: f64) -> f64 {
    r1 * u.sqrt()
}

pub fn sample_s2_distance<R: Rng + ?Sized>(r1: f64, rng: &mut R) -> f64 {
    disk_distance(r1, rng.random::<f64>())
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let scale = (variance).sqrt() * FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Rayleigh channel with per-entry power `1 / (1 + d^alpha)`.
pub fn gen_rayleigh<R: Rng + ?Sized>(
    antennas: usize,
    distance: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_antennas(antennas)?;
    let variance = pathloss(distance, alpha);
    Ok((0..antennas)
        .map(|_| complex_gaussian(variance, rng))
        .collect())
}

/// LOS mmWave channel with `a ~ CN(0, 1)` and direction `theta ~ U[-1, 1]`.
pub fn gen_mmwave<R: Rng + ?Sized>(
    antennas: usize,
    distance: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_antennas(antennas)?;
    let attenuation = complex_gaussian(1.0, rng);
    let theta = 2.0 * rng.random::<f64>() - 1.0;
    Ok(mmwave_vector(antennas, distance, alpha, attenuation, theta))
}

/// `a / (1 + d^alpha) * [1, e^{-j pi theta}, ..., e^{-j pi (M-1) theta}]`.
///
/// The amplitude, not the power, is divided by `1 + d^alpha` here.
pub fn mmwave_vector(
    antennas: usize,
    distance: f64,
    alpha: f64,
    attenuation: Complex64,
    theta: f64,
) -> Vec<Complex64> {
    let gain = attenuation * pathloss(distance, alpha);
    (0..antennas)
        .map(|m| gain * Complex64::from_polar(1.0, -PI * m as f64 * theta))
        .collect()
}

fn check_antennas(antennas: usize) -> Result<()> {
    if antennas == 0 {
        Err(invalid_config("antenna count must be at least 1"))
    } else {
        Ok(())
    }
}
