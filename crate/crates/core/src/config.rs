//! Scenario configuration, figure presets and the flat `key = value` file format.
//!
//! A config is resolved in layers: preset defaults, then a config file, then
//! individual overrides. Keys a later layer leaves unset keep the earlier
//! value; `ry` and (for the fig2 preset) `s2_size` follow `r1` and
//! `antennas` unless set explicitly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::analysis::thresholds;
use crate::channel::{ChannelModel, ModelParams};
use crate::error::{invalid_config, Error, Result};
use crate::noma::{PowerAllocation, RatePair};

/// Every key accepted in a config file, in canonical order.
pub const KEYS: &[&str] = &[
    "antennas",
    "nq",
    "s1_size",
    "s2_size",
    "r1",
    "ry",
    "alpha",
    "model",
    "a0sq",
    "a1sq",
    "rate0",
    "rate1",
    "tx_dbm",
    "noise_dbm",
    "trials",
    "seed",
    "gc_nodes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1Rayleigh,
    Fig1Mmwave,
    Fig2,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Fig1Rayleigh,
        Preset::Fig1Mmwave,
        Preset::Fig2,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Rayleigh => "fig1-rayleigh",
            Preset::Fig1Mmwave => "fig1-mmwave",
            Preset::Fig2 => "fig2",
            Preset::Custom => "custom",
        }
    }

    /// Default entries; scenario keys come after the shared ones and win.
    fn defaults(self) -> Vec<(&'static str, &'static str)> {
        const COMMON: &[(&str, &str)] = &[
            ("nq", "2"),
            ("a0sq", "0.75"),
            ("a1sq", "0.25"),
            ("noise_dbm", "-30"),
            ("trials", "10000"),
            ("seed", "0"),
            ("gc_nodes", "20"),
            ("model", "rayleigh"),
        ];
        let scenario: &[(&str, &str)] = match self {
            Preset::Fig1Rayleigh => &[
                ("antennas", "30"),
                ("s1_size", "3"),
                ("s2_size", "300"),
                ("r1", "40"),
                ("alpha", "3"),
                ("rate0", "1"),
                ("rate1", "1.5"),
                ("tx_dbm", "0:40:5"),
                ("model", "rayleigh"),
            ],
            Preset::Fig1Mmwave => &[
                ("antennas", "30"),
                ("s1_size", "3"),
                ("s2_size", "300"),
                ("r1", "40"),
                ("alpha", "3"),
                ("rate0", "1"),
                ("rate1", "1.5"),
                ("tx_dbm", "0:40:5"),
                ("model", "mmwave"),
            ],
            Preset::Fig2 => &[
                ("antennas", "4"),
                ("s1_size", "1"),
                ("r1", "40"),
                ("alpha", "3"),
                ("rate0", "1"),
                ("rate1", "1"),
                ("tx_dbm", "10:50:5"),
                ("model", "rayleigh"),
            ],
            Preset::Custom => &[],
        };
        COMMON.iter().chain(scenario).copied().collect()
    }

    /// `ry / r1` when `ry` is not given explicitly.
    fn ry_ratio(self) -> Option<f64> {
        match self {
            Preset::Fig1Rayleigh | Preset::Fig1Mmwave => Some(1.0),
            Preset::Fig2 => Some(0.5),
            Preset::Custom => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| invalid_config(format!("unknown preset `{}`", s.trim())))
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub antennas: usize,
    pub nq: usize,
    pub s1_size: usize,
    pub s2_size: usize,
    pub r1: f64,
    pub ry: f64,
    pub alpha: f64,
    pub model: ChannelModel,
    pub pa: PowerAllocation,
    pub rates: RatePair,
    pub tx_dbm: Vec<f64>,
    pub noise_dbm: f64,
    pub trials: u64,
    pub seed: u64,
    pub gc_nodes: usize,
}

impl SystemConfig {
    pub fn preset(preset: Preset) -> Result<Self> {
        ConfigBuilder::new(preset).build()
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            pathloss_exponent: self.alpha,
            r1: self.r1,
            ry: self.ry,
            model: self.model,
        }
    }

    /// Linear transmit-to-noise power ratio at every sweep point.
    pub fn rho(&self) -> Vec<f64> {
        self.tx_dbm.iter().map(|&tx| rho_linear(tx, self.noise_dbm)).collect()
    }

    /// Whether the single-beam, one-bit Rayleigh closed forms apply.
    pub fn analytical_scope(&self) -> bool {
        self.s1_size == 1 && self.nq == 2 && self.model == ChannelModel::Rayleigh
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("antennas", self.antennas),
            ("s1_size", self.s1_size),
            ("s2_size", self.s2_size),
            ("gc_nodes", self.gc_nodes),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(invalid_config(format!("{key} must be at least 1")));
            }
        }
        if self.nq < 2 {
            return Err(invalid_config("nq must be at least 2"));
        }
        if self.trials == 0 {
            return Err(invalid_config("trials must be at least 1"));
        }
        self.model_params().validate()?;
        self.pa.validate()?;
        self.rates.validate()?;
        if !self.noise_dbm.is_finite() {
            return Err(invalid_config("noise_dbm must be finite"));
        }
        if self.tx_dbm.is_empty() {
            return Err(invalid_config("tx_dbm sweep is empty"));
        }
        if self.tx_dbm.iter().any(|x| !x.is_finite()) {
            return Err(invalid_config("tx_dbm sweep has non-finite entries"));
        }
        if self.tx_dbm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid_config("tx_dbm sweep must be strictly increasing"));
        }
        Ok(())
    }

    /// Non-fatal findings, such as a power split that can never meet the rates.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let t = thresholds(&self.pa, &self.rates, self.antennas, 1.0);
        if t.phi0.is_none() {
            out.push(format!(
                "a0sq = {} cannot carry rate0 = {} against a1sq = {}: analytical outage \u{2261} 1 for S1 and S2",
                self.pa.a0sq, self.rates.r0, self.pa.a1sq
            ));
        } else if t.phi1.is_none() {
            out.push("a1sq = 0: analytical outage \u{2261} 1 for S2".to_string());
        }
        out
    }

    /// Canonical `key = value` text; parsing it back yields the same config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            s.push_str(key);
            s.push_str(" = ");
            s.push_str(&self.value_of(key));
            s.push('\n');
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "antennas" => self.antennas.to_string(),
            "nq" => self.nq.to_string(),
            "s1_size" => self.s1_size.to_string(),
            "s2_size" => self.s2_size.to_string(),
            "r1" => self.r1.to_string(),
            "ry" => self.ry.to_string(),
            "alpha" => self.alpha.to_string(),
            "model" => self.model.to_string(),
            "a0sq" => self.pa.a0sq.to_string(),
            "a1sq" => self.pa.a1sq.to_string(),
            "rate0" => self.rates.r0.to_string(),
            "rate1" => self.rates.r1.to_string(),
            "tx_dbm" => self
                .tx_dbm
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "noise_dbm" => self.noise_dbm.to_string(),
            "trials" => self.trials.to_string(),
            "seed" => self.seed.to_string(),
            "gc_nodes" => self.gc_nodes.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_config_text().as_bytes()))
    }
}

pub fn rho_linear(tx_dbm: f64, noise_dbm: f64) -> f64 {
    10f64.powf((tx_dbm - noise_dbm) / 10.0)
}

/// Parses `lo:hi:step` (inclusive) or a comma-separated list of dBm values.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(invalid_config(format!("sweep `{s}` is not lo:hi:step")));
        };
        let (lo, hi, step) = (parse_f64("tx_dbm", lo)?, parse_f64("tx_dbm", hi)?, parse_f64("tx_dbm", step)?);
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(invalid_config(format!(
                "sweep `{s}` needs step > 0 and hi >= lo"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| lo + i as f64 * step).collect())
    } else {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_f64("tx_dbm", p))
            .collect()
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| invalid_config(format!("{key}: `{}` is not a number", v.trim())))
}

fn parse_int<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| {
        invalid_config(format!("{key}: `{}` is not a non-negative integer", v.trim()))
    })
}

/// Splits config-file text into `(key, value)` pairs.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(invalid_config(format!(
                "line {}: expected `key = value`, got `{line}`",
                n + 1
            )));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Layered config resolution.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    preset: Preset,
    entries: BTreeMap<String, String>,
    explicit: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new(preset: Preset) -> Self {
        let entries = preset
            .defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            preset,
            entries,
            explicit: BTreeMap::new(),
        }
    }

    /// Starts from the preset named by a `preset = ...` line, if any, then applies the file.
    pub fn from_config_text(default: Preset, text: &str) -> Result<Self> {
        let pairs = parse_config_text(text)?;
        let preset = match pairs.iter().rev().find(|(k, _)| k == "preset") {
            Some((_, v)) => v.parse()?,
            None => default,
        };
        let mut b = Self::new(preset);
        for (k, v) in pairs.into_iter().filter(|(k, _)| k != "preset") {
            b.set(&k, &v)?;
        }
        Ok(b)
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(invalid_config(format!("unknown key `{key}`")));
        }
        self.explicit.insert(key.to_string(), value.trim().to_string());
        Ok(self)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.explicit
            .get(key)
            .or_else(|| self.entries.get(key))
            .map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| invalid_config(format!("missing key `{key}`")))
    }

    pub fn build(&self) -> Result<SystemConfig> {
        let antennas: usize = parse_int("antennas", self.require("antennas")?)?;
        let r1 = parse_f64("r1", self.require("r1")?)?;
        let s2_size = match (self.get("s2_size"), self.preset) {
            (Some(v), _) => parse_int("s2_size", v)?,
            (None, Preset::Fig2) => antennas,
            (None, _) => return Err(invalid_config("missing key `s2_size`")),
        };
        let ry = match (self.get("ry"), self.preset.ry_ratio()) {
            (Some(v), _) => parse_f64("ry", v)?,
            (None, Some(ratio)) => r1 * ratio,
            (None, None) => return Err(invalid_config("missing key `ry`")),
        };
        let cfg = SystemConfig {
            antennas,
            nq: parse_int("nq", self.require("nq")?)?,
            s1_size: parse_int("s1_size", self.require("s1_size")?)?,
            s2_size,
            r1,
            ry,
            alpha: parse_f64("alpha", self.require("alpha")?)?,
            model: self.require("model")?.parse()?,
            pa: PowerAllocation {
                a0sq: parse_f64("a0sq", self.require("a0sq")?)?,
                a1sq: parse_f64("a1sq", self.require("a1sq")?)?,
            },
            rates: RatePair {
                r0: parse_f64("rate0", self.require("rate0")?)?,
                r1: parse_f64("rate1", self.require("rate1")?)?,
            },
            tx_dbm: parse_sweep(self.require("tx_dbm")?)?,
            noise_dbm: parse_f64("noise_dbm", self.require("noise_dbm")?)?,
            trials: parse_int("trials", self.require("trials")?)?,
            seed: parse_int("seed", self.require("seed")?)?,
            gc_nodes: parse_int("gc_nodes", self.require("gc_nodes")?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_presets_match_captions() {
        for (p, model) in [
            (Preset::Fig1Rayleigh, ChannelModel::Rayleigh),
            (Preset::Fig1Mmwave, ChannelModel::MmWaveLos),
        ] {
            let c = SystemConfig::preset(p).unwrap();
            assert_eq!(
                (c.antennas, c.s1_size, c.s2_size, c.nq),
                (30, 3, 300, 2)
            );
            assert_eq!((c.r1, c.ry, c.alpha), (40.0, 40.0, 3.0));
            assert_eq!((c.rates.r0, c.rates.r1), (1.0, 1.5));
            assert_eq!((c.pa.a0sq, c.pa.a1sq), (0.75, 0.25));
            assert_eq!(c.noise_dbm, -30.0);
            assert_eq!(c.model, model);
            assert_eq!(c.tx_dbm, vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        }
    }

    #[test]
    fn fig2_preset_matches_caption() {
        let c = SystemConfig::preset(Preset::Fig2).unwrap();
        assert_eq!((c.s1_size, c.s2_size, c.nq), (1, c.antennas, 2));
        assert_eq!((c.r1, c.ry, c.alpha), (40.0, 20.0, 3.0));
        assert_eq!((c.rates.r0, c.rates.r1), (1.0, 1.0));
        assert_eq!(c.model, ChannelModel::Rayleigh);
        assert_eq!(c.tx_dbm.first(), Some(&10.0));
        assert_eq!(c.tx_dbm.last(), Some(&50.0));
        assert!(c.analytical_scope());

        let mut b = ConfigBuilder::new(Preset::Fig2);
        b.set("antennas", "8").unwrap().set("r1", "60").unwrap();
        let c = b.build().unwrap();
        assert_eq!((c.antennas, c.s2_size, c.ry), (8, 8, 30.0));
        b.set("s2_size", "3").unwrap();
        assert_eq!(b.build().unwrap().s2_size, 3);
    }

    #[test]
    fn custom_needs_scenario_keys() {
        let err = SystemConfig::preset(Preset::Custom).unwrap_err();
        assert!(err.to_string().contains("missing key"));
    }

    #[test]
    fn sweep_arithmetic() {
        assert_eq!(parse_sweep("0:40:5").unwrap().len(), 9);
        assert_eq!(parse_sweep("10:50:5").unwrap().len(), 9);
        assert_eq!(parse_sweep("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_sweep("5").unwrap(), vec![5.0]);
        assert_eq!(parse_sweep("1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_sweep("0:10").is_err());
        assert!(parse_sweep("0:10:0").is_err());
        assert!(parse_sweep("10:0:1").is_err());
        assert!(parse_sweep("a,b").is_err());
    }

    #[test]
    fn file_layering_and_comments() {
        let text = "# scenario\npreset = fig1-mmwave\nantennas = 16 # fewer\n\ntx_dbm = 15\n";
        let b = ConfigBuilder::from_config_text(Preset::Custom, text).unwrap();
        let c = b.build().unwrap();
        assert_eq!(b.preset(), Preset::Fig1Mmwave);
        assert_eq!(c.antennas, 16);
        assert_eq!(c.tx_dbm, vec![15.0]);
        assert_eq!(c.model, ChannelModel::MmWaveLos);
        assert!(ConfigBuilder::from_config_text(Preset::Fig2, "bogus = 1").is_err());
        assert!(ConfigBuilder::from_config_text(Preset::Fig2, "no equals sign").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        for p in [Preset::Fig1Rayleigh, Preset::Fig1Mmwave, Preset::Fig2] {
            let c = SystemConfig::preset(p).unwrap();
            let back = ConfigBuilder::from_config_text(Preset::Custom, &c.to_config_text())
                .unwrap()
                .build()
                .unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
        }
        let a = SystemConfig::preset(Preset::Fig2).unwrap();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invariant_violations() {
        let bad = |k: &str, v: &str| {
            let mut b = ConfigBuilder::new(Preset::Fig2);
            b.set(k, v).unwrap();
            b.build().unwrap_err().to_string()
        };
        assert!(bad("a0sq", "0.4").contains("power"));
        let mut b = ConfigBuilder::new(Preset::Fig2);
        b.set("a0sq", "0.4").unwrap().set("a1sq", "0.6").unwrap();
        assert!(b.build().unwrap_err().to_string().contains("power ordering violated"));
        assert!(bad("antennas", "0").contains("antennas"));
        assert!(bad("nq", "1").contains("nq"));
        assert!(bad("trials", "0").contains("trials"));
        assert!(bad("tx_dbm", "10,5").contains("increasing"));
        assert!(bad("rate0", "-1").contains("rates"));
        assert!(bad("model", "wifi").contains("model"));
        assert!(bad("alpha", "0").contains("exponent"));
    }

    #[test]
    fn infeasible_split_warns() {
        let mut b = ConfigBuilder::new(Preset::Fig2);
        b.set("rate0", "2").unwrap();
        let c = b.build().unwrap();
        let w = c.warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("analytical outage"));
        assert!(SystemConfig::preset(Preset::Fig2).unwrap().warnings().is_empty());
    }

    #[test]
    fn rho_from_dbm() {
        assert!((rho_linear(15.0, -30.0) - 10f64.powf(4.5)).abs() < 1e-6);
        assert_eq!(rho_linear(-30.0, -30.0), 1.0);
    }
}
