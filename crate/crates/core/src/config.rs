//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::baselines::Aggregation;
use crate::error::{Error, Result};
use crate::evaluation::{CandidatePolicy, DEFAULT_KS};
use crate::params::HyperParams;
use crate::training::NeuralModel;

/// Every model the CLI can train or evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelChoice {
    Neural(NeuralModel),
    CfAvg,
    CfLm,
    CfRd,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Neural(m) => m.name(),
            ModelChoice::CfAvg => "cf-avg",
            ModelChoice::CfLm => "cf-lm",
            ModelChoice::CfRd => "cf-rd",
        }
    }

    /// The CF aggregation, or `None` for the embedding models.
    pub fn aggregation(self, rd_lambda: f64) -> Option<Aggregation> {
        match self {
            ModelChoice::Neural(_) => None,
            ModelChoice::CfAvg => Some(Aggregation::Average),
            ModelChoice::CfLm => Some(Aggregation::LeastMisery),
            ModelChoice::CfRd => Some(Aggregation::RelevanceDisagreement { lambda: rd_lambda }),
        }
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cf-avg" => ModelChoice::CfAvg,
            "cf-lm" => ModelChoice::CfLm,
            "cf-rd" => ModelChoice::CfRd,
            other => ModelChoice::Neural(other.parse().map_err(|_| {
                Error::Config(format!(
                    "unknown model {other:?} (expected mosan, mf-avg, att-avg, cf-avg, cf-lm or cf-rd)"
                ))
            })?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Directory holding a prepared split (`train.tsv`, `valid.tsv`, ...).
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub model: ModelChoice,
    pub hp: HyperParams,
    pub ks: Vec<usize>,
    pub candidates: CandidatePolicy,
    pub rd_lambda: f64,
    pub k_nn: usize,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            model: ModelChoice::Neural(NeuralModel::Mosan),
            hp: HyperParams::default(),
            ks: DEFAULT_KS.to_vec(),
            candidates: CandidatePolicy::FullMinusTrain,
            rd_lambda: 0.8,
            k_nn: 50,
            threads: 1,
        }
    }
}

/// Keys accepted in a config file, in the order they are written.
pub const KEYS: [&str; 22] = [
    "data_dir",
    "out_dir",
    "model",
    "seed",
    "dim",
    "hidden",
    "batch_size",
    "learning_rate",
    "l2",
    "dropout",
    "negatives",
    "epochs",
    "patience",
    "init_std",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "ks",
    "candidates",
    "rd_lambda",
    "k_nn",
    "threads",
];

/// Keys that do not change any result and so stay out of the config hash.
const UNHASHED: [&str; 2] = ["out_dir", "threads"];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("bad value {raw:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let hp = &mut self.hp;
        match key {
            "data_dir" => self.data_dir = PathBuf::from(raw),
            "out_dir" => self.out_dir = PathBuf::from(raw),
            "model" => self.model = raw.parse()?,
            "seed" => hp.seed = parse_value(key, raw)?,
            "dim" => hp.dim = parse_value(key, raw)?,
            "hidden" => hp.hidden = parse_value(key, raw)?,
            "batch_size" => hp.batch_size = parse_value(key, raw)?,
            "learning_rate" => hp.learning_rate = parse_value(key, raw)?,
            "l2" => hp.l2 = parse_value(key, raw)?,
            "dropout" => hp.dropout = parse_value(key, raw)?,
            "negatives" => hp.negatives = parse_value(key, raw)?,
            "epochs" => hp.epochs = parse_value(key, raw)?,
            "patience" => hp.patience = parse_value(key, raw)?,
            "init_std" => hp.init_std = parse_value(key, raw)?,
            "adam_beta1" => hp.beta1 = parse_value(key, raw)?,
            "adam_beta2" => hp.beta2 = parse_value(key, raw)?,
            "adam_eps" => hp.eps = parse_value(key, raw)?,
            "ks" => {
                self.ks = raw
                    .split(',')
                    .map(|k| parse_value(key, k.trim()))
                    .collect::<Result<_>>()?
            }
            "candidates" => {
                self.candidates = raw
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value {raw:?} for candidates")))?
            }
            "rd_lambda" => self.rd_lambda = parse_value(key, raw)?,
            "k_nn" => self.k_nn = parse_value(key, raw)?,
            "threads" => self.threads = parse_value(key, raw)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Text form of one key.
    pub fn get(&self, key: &str) -> Option<String> {
        let hp = &self.hp;
        Some(match key {
            "data_dir" => self.data_dir.display().to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "model" => self.model.name().to_owned(),
            "seed" => hp.seed.to_string(),
            "dim" => hp.dim.to_string(),
            "hidden" => hp.hidden.to_string(),
            "batch_size" => hp.batch_size.to_string(),
            "learning_rate" => hp.learning_rate.to_string(),
            "l2" => hp.l2.to_string(),
            "dropout" => hp.dropout.to_string(),
            "negatives" => hp.negatives.to_string(),
            "epochs" => hp.epochs.to_string(),
            "patience" => hp.patience.to_string(),
            "init_std" => hp.init_std.to_string(),
            "adam_beta1" => hp.beta1.to_string(),
            "adam_beta2" => hp.beta2.to_string(),
            "adam_eps" => hp.eps.to_string(),
            "ks" => self.ks.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            "candidates" => self.candidates.name().to_owned(),
            "rd_lambda" => self.rd_lambda.to_string(),
            "k_nn" => self.k_nn.to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped; a repeated key is an error.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, "expected key = value"))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::parse(idx + 1, format!("duplicate key {key:?}")));
            }
            seen.push(key);
            self.set(key, value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::parse(idx + 1, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Every key, one `key = value` line each, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    /// SHA-256 over the result-relevant keys.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for key in KEYS.iter().filter(|k| !UNHASHED.contains(k)) {
            h.update(format!("{key}={}\n", self.get(key).expect("known key")));
        }
        hex(&h.finalize())
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must be a non-empty list of positive integers".into()));
        }
        if !(0.0..=1.0).contains(&self.rd_lambda) {
            return Err(Error::Config("rd_lambda must lie in [0, 1]".into()));
        }
        if self.k_nn == 0 || self.threads == 0 {
            return Err(Error::Config("k_nn and threads must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
