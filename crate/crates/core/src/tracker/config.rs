use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::huber_solver::{HuberConfig, Regularizer};

/// Which penalty the translation filter is solved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Huber,
    Ridge,
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "huber" => Ok(Self::Huber),
            "ridge" => Ok(Self::Ridge),
            other => Err(Error::InvalidConfig(format!(
                "unknown regularizer {other:?}"
            ))),
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Huber => "huber",
            Self::Ridge => "ridge",
        })
    }
}

/// Every tunable of the tracker. Defaults reproduce the reference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Regularization weight.
    pub lambda: f64,
    /// Huber knee.
    pub c: f64,
    /// Gaussian kernel bandwidth.
    pub sigma: f64,
    /// Updates happen only when the PSR exceeds this.
    pub psr_threshold: f64,
    /// Side of the square around the peak excluded from the PSR sidelobe.
    pub psr_exclusion: usize,
    /// Model learning rate `ε`.
    pub learning_rate: f64,
    pub regularizer: RegularizerKind,
    /// Search window size relative to the target.
    pub padding: f64,
    /// Largest side of the translation template, in cells.
    pub max_template_cells: usize,
    /// Label bandwidth relative to `sqrt(W·H)`.
    pub label_sigma_factor: f64,
    pub estimate_scale: bool,
    pub num_scales: usize,
    pub scale_base: f64,
    /// Largest side of the scale-sample template, in cells.
    pub scale_template_cells: usize,
    pub scale_sigma_factor: f64,
    pub scale_lambda: f64,
    pub scale_learning_rate: f64,
    /// Gate the scale-filter update with the translation PSR as well.
    pub gate_scale_update: bool,
    pub min_scale: f64,
    pub max_scale: f64,
    /// Minimum initial box side, px.
    pub min_box_size: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            c: 50.0,
            sigma: 0.5,
            psr_threshold: 10.0,
            psr_exclusion: 11,
            learning_rate: 0.02,
            regularizer: RegularizerKind::Huber,
            padding: 2.5,
            max_template_cells: 64,
            label_sigma_factor: 0.1,
            estimate_scale: true,
            num_scales: 33,
            scale_base: 1.02,
            scale_template_cells: 32,
            scale_sigma_factor: 0.25,
            scale_lambda: 0.01,
            scale_learning_rate: 0.025,
            gate_scale_update: true,
            min_scale: 0.2,
            max_scale: 5.0,
            min_box_size: 8.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn unit_rate(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must lie in (0, 1], got {v}"
        )))
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("c", self.c)?;
        positive("sigma", self.sigma)?;
        positive("psr_threshold", self.psr_threshold)?;
        // ε = 1 is the full-replacement limit; accepted for experiments.
        unit_rate("learning_rate", self.learning_rate)?;
        unit_rate("scale_learning_rate", self.scale_learning_rate)?;
        positive("padding", self.padding)?;
        positive("label_sigma_factor", self.label_sigma_factor)?;
        positive("scale_sigma_factor", self.scale_sigma_factor)?;
        positive("scale_lambda", self.scale_lambda)?;
        positive("min_scale", self.min_scale)?;
        positive("min_box_size", self.min_box_size)?;
        if self.max_scale < self.min_scale {
            return Err(Error::InvalidConfig("max_scale < min_scale".into()));
        }
        if self.num_scales == 0 || self.num_scales.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "num_scales must be odd, got {}",
                self.num_scales
            )));
        }
        if self.scale_base.is_nan() || self.scale_base <= 1.0 {
            return Err(Error::InvalidConfig("scale_base must be > 1".into()));
        }
        if self.max_template_cells < 2 || self.scale_template_cells < 1 || self.psr_exclusion == 0 {
            return Err(Error::InvalidConfig(
                "template and exclusion sizes must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        match self.regularizer {
            RegularizerKind::Huber => Regularizer::Huber(HuberConfig {
                lambda: self.lambda,
                c: self.c,
            }),
            RegularizerKind::Ridge => Regularizer::Ridge {
                lambda: self.lambda,
            },
        }
    }

    /// Sets one field by name, e.g. `set("learning_rate", "0.05")`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "lambda" => self.lambda = parse(key, value)?,
            "c" => self.c = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "psr_threshold" => self.psr_threshold = parse(key, value)?,
            "psr_exclusion" => self.psr_exclusion = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "regularizer" => self.regularizer = parse(key, value)?,
            "padding" => self.padding = parse(key, value)?,
            "max_template_cells" => self.max_template_cells = parse(key, value)?,
            "label_sigma_factor" => self.label_sigma_factor = parse(key, value)?,
            "estimate_scale" => self.estimate_scale = parse(key, value)?,
            "num_scales" => self.num_scales = parse(key, value)?,
            "scale_base" => self.scale_base = parse(key, value)?,
            "scale_template_cells" => self.scale_template_cells = parse(key, value)?,
            "scale_sigma_factor" => self.scale_sigma_factor = parse(key, value)?,
            "scale_lambda" => self.scale_lambda = parse(key, value)?,
            "scale_learning_rate" => self.scale_learning_rate = parse(key, value)?,
            "gate_scale_update" => self.gate_scale_update = parse(key, value)?,
            "min_scale" => self.min_scale = parse(key, value)?,
            "max_scale" => self.max_scale = parse(key, value)?,
            "min_box_size" => self.min_box_size = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value, got {raw:?}", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = TrackerConfig::default();
        cfg.validate().unwrap();
        assert_eq!(
            (cfg.lambda, cfg.c, cfg.sigma, cfg.psr_threshold),
            (1e-5, 50.0, 0.5, 10.0)
        );
        assert_eq!((cfg.num_scales, cfg.scale_base), (33, 1.02));
    }

    #[test]
    fn key_value_text() {
        let mut cfg = TrackerConfig::default();
        cfg.apply_text(
            "# comment\nlambda = 0.001\n\nregularizer=ridge  # trailing\nestimate_scale=false\n",
        )
        .unwrap();
        assert_eq!(cfg.lambda, 0.001);
        assert_eq!(cfg.regularizer, RegularizerKind::Ridge);
        assert!(!cfg.estimate_scale);
        assert!(cfg.apply_text("bogus=1").is_err());
        assert!(cfg.apply_text("lambda").is_err());
        assert!(cfg.set("num_scales", "x").is_err());
    }

    #[test]
    fn validation() {
        let bad = [
            ("num_scales", "32"),
            ("learning_rate", "0"),
            ("learning_rate", "1.5"),
            ("lambda", "-1"),
            ("scale_base", "1"),
        ];
        for (k, v) in bad {
            let mut cfg = TrackerConfig::default();
            cfg.set(k, v).unwrap();
            assert!(cfg.validate().is_err(), "{k}={v}");
        }
    }
}
