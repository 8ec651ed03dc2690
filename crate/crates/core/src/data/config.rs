//! Run configuration as a flat JSON document, with per-dataset presets.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::encoder::{EncoderConfig, FilterConfig, ThresholdRatios, DEFAULT_PAIR_BUDGET};
use crate::error::{AgeError, Result};
use crate::filter::KMode;
use crate::variants::{RxTarget, VariantConfig, VariantKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Cluster,
    Linkpred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Age,
    Ls,
    LsRa,
    LsRx,
}

/// `"auto"` or a positive number.
fn ser_k<S: Serializer>(k: &KMode, s: S) -> std::result::Result<S::Ok, S::Error> {
    match k {
        KMode::Auto => s.serialize_str("auto"),
        KMode::Fixed(v) => s.serialize_f64(*v),
    }
}

fn de_k<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<KMode, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Word(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(KMode::Fixed(v)),
        Raw::Word(w) if w == "auto" => Ok(KMode::Auto),
        Raw::Word(w) => Err(serde::de::Error::custom(format!(
            "k_mode must be \"auto\" or a number, got \"{w}\""
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t: usize,
    #[serde(serialize_with = "ser_k", deserialize_with = "de_k")]
    pub k_mode: KMode,
    pub h: usize,
    pub lr: f64,
    pub max_iter: usize,
    #[serde(rename = "T")]
    pub threshold_updates: u64,
    pub r_pos_st_ratio: f64,
    pub r_pos_ed_ratio: f64,
    pub r_neg_st_ratio: f64,
    pub r_neg_ed_ratio: f64,
    pub seed: u64,
    pub mode: RunMode,
    pub variant: Variant,
    pub val_frac: f64,
    pub test_frac: f64,
    pub row_normalize_features: bool,
    pub rx_target: RxTarget,
    pub pair_budget: u64,
    pub quantile_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t: 8,
            k_mode: KMode::Auto,
            h: 500,
            lr: 0.001,
            max_iter: 400,
            threshold_updates: 40,
            r_pos_st_ratio: 0.0110,
            r_pos_ed_ratio: 0.0010,
            r_neg_st_ratio: 0.1,
            r_neg_ed_ratio: 0.5,
            seed: 0,
            mode: RunMode::Cluster,
            variant: Variant::Age,
            val_frac: 0.05,
            test_frac: 0.10,
            row_normalize_features: false,
            rx_target: RxTarget::Raw,
            pair_budget: DEFAULT_PAIR_BUDGET,
            quantile_samples: 1_000_000,
        }
    }
}

impl RunConfig {
    /// Settings for a known dataset name; unknown names get the Cora settings.
    pub fn preset(dataset: &str) -> Self {
        let base = RunConfig::default();
        let ratios = |t, ps, pe, ns, ne| RunConfig {
            t,
            r_pos_st_ratio: ps,
            r_pos_ed_ratio: pe,
            r_neg_st_ratio: ns,
            r_neg_ed_ratio: ne,
            ..base.clone()
        };
        match dataset {
            "citeseer" => ratios(3, 0.0015, 0.0010, 0.1, 0.5),
            "wiki" => ratios(1, 0.0011, 0.0010, 0.1, 0.5),
            "pubmed" => ratios(35, 0.0013, 0.0010, 0.7, 0.8),
            "sbm" => RunConfig {
                t: 2,
                h: 32,
                lr: 0.01,
                max_iter: 100,
                threshold_updates: 10,
                r_pos_st_ratio: 0.10,
                r_pos_ed_ratio: 0.05,
                r_neg_st_ratio: 0.4,
                r_neg_ed_ratio: 0.6,
                ..base
            },
            _ => base,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| AgeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AgeError::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| AgeError::Config(format!("{}: {e}", path.display())))
    }

    pub fn ratios(&self) -> ThresholdRatios {
        ThresholdRatios {
            pos_st: self.r_pos_st_ratio,
            pos_ed: self.r_pos_ed_ratio,
            neg_st: self.r_neg_st_ratio,
            neg_ed: self.r_neg_ed_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = [
            self.r_pos_st_ratio,
            self.r_pos_ed_ratio,
            self.r_neg_st_ratio,
            self.r_neg_ed_ratio,
        ];
        if r.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(AgeError::Config(format!("threshold ratios {r:?} must lie in (0, 1]")));
        }
        if self.r_pos_ed_ratio > self.r_pos_st_ratio || self.r_neg_ed_ratio < self.r_neg_st_ratio {
            return Err(AgeError::Config(
                "positive ratio must not grow and negative ratio must not shrink".into(),
            ));
        }
        if self.r_pos_st_ratio > self.r_neg_st_ratio {
            return Err(AgeError::Config("positive ratio exceeds negative ratio".into()));
        }
        if let KMode::Fixed(k) = self.k_mode {
            if !(k > 0.0 && k.is_finite()) {
                return Err(AgeError::Config(format!("k = {k} must be positive")));
            }
        }
        self.encoder().update_period()?;
        if self.h == 0 || (self.lr.is_nan() || self.lr <= 0.0) {
            return Err(AgeError::Config("h and lr must be positive".into()));
        }
        Ok(())
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            t: self.t,
            k_mode: self.k_mode,
            row_normalize_features: self.row_normalize_features,
        }
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            h: self.h,
            lr: self.lr,
            max_iter: self.max_iter,
            threshold_updates: self.threshold_updates,
            ratios: self.ratios(),
            seed: self.seed,
            adaptive: true,
            update_thresholds: true,
            pair_budget: self.pair_budget,
            quantile_samples: self.quantile_samples,
        }
    }

    pub fn variant_config(&self, kind: VariantKind) -> VariantConfig {
        VariantConfig {
            rx_target: self.rx_target,
            ..VariantConfig::from_encoder(kind, &self.encoder())
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
