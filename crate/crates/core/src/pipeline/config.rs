//! TOML experiment configuration with dotted-key overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boost_inference::InferenceConfig;
use crate::boost_learning::{BoostConfig, Strategy};
use crate::ngram_lm::Smoothing;
use crate::seq2seq::{ModelConfig, TrainConfig};
use crate::textdata::{CorpusFormat, GrammarConfig, RuleConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    #[default]
    Single,
    Multi,
    Roundway,
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InferenceMode::Single => "single",
            InferenceMode::Multi => "multi",
            InferenceMode::Roundway => "roundway",
        })
    }
}

impl FromStr for InferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(InferenceMode::Single),
            "multi" => Ok(InferenceMode::Multi),
            "roundway" => Ok(InferenceMode::Roundway),
            _ => Err(Error::config(format!(
                "unknown inference mode {s:?} (single, multi or roundway)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Root of every artifact the stages write.
    pub work_dir: PathBuf,
    /// External corpora; when unset the synthesized splits under `work_dir/data` are used.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Native (error-free) sentences, one per line.
    pub native: Option<PathBuf>,
    pub corpus_format: String,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            work_dir: PathBuf::from("work"),
            train: None,
            dev: None,
            test: None,
            native: None,
            corpus_format: "tsv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Clean sentences generated before splitting.
    pub sentences: usize,
    /// Relative train/dev/test proportions.
    pub split: [usize; 3],
    /// Extra clean sentences written as native data.
    pub native: usize,
    /// Probability applied to every rule not listed in `rules`.
    pub rule_prob: f64,
    pub rules: BTreeMap<String, f64>,
    pub rules_file: Option<PathBuf>,
    pub grammar: GrammarConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sentences: 5000,
            split: [8, 1, 1],
            native: 0,
            rule_prob: 0.3,
            rules: BTreeMap::new(),
            rules_file: None,
            grammar: GrammarConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn rule_config(&self) -> Result<RuleConfig> {
        if !(0.0..=1.0).contains(&self.rule_prob) {
            return Err(Error::config(format!(
                "rule_prob {} outside [0, 1]",
                self.rule_prob
            )));
        }
        let mut text: String = crate::textdata::Rule::ALL
            .iter()
            .map(|r| format!("{} = {}\n", r.name(), self.rule_prob))
            .collect();
        if let Some(path) = &self.rules_file {
            text += &std::fs::read_to_string(path)
                .map_err(Error::io(format!("read {}", path.display())))?;
            text.push('\n');
        }
        for (k, v) in &self.rules {
            text += &format!("{k} = {v}\n");
        }
        RuleConfig::parse(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    /// Including the four reserved symbols.
    pub max_size: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self { max_size: 30000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub order: usize,
    pub discount: f64,
    pub unigram_add: f64,
    pub open_vocabulary: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        let s = Smoothing::default();
        Self {
            order: 5,
            discount: s.discount,
            unigram_add: s.unigram_add,
            open_vocabulary: s.open_vocabulary,
        }
    }
}

impl LmConfig {
    pub fn smoothing(&self) -> Smoothing {
        Smoothing {
            discount: self.discount,
            unigram_add: self.unigram_add,
            open_vocabulary: self.open_vocabulary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Every stochastic choice downstream derives from this seed.
    pub seed: u64,
    /// Strategy used by `boost-train` and selected for `correct`/`evaluate`.
    pub strategy: Strategy,
    pub mode: InferenceMode,
    /// Independently initialized models per direction, decoded as an ensemble.
    pub ensemble: usize,
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub vocab: VocabConfig,
    pub lm: LmConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub boost: BoostConfig,
    pub inference: InferenceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            strategy: Strategy::Dual,
            mode: InferenceMode::Single,
            ensemble: 1,
            paths: PathsConfig::default(),
            synth: SynthConfig::default(),
            vocab: VocabConfig::default(),
            lm: LmConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            boost: BoostConfig::default(),
            inference: InferenceConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::config(format!("empty key in {key:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("{p:?} in {key:?} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides (dotted keys), then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(Error::io(format!("read {}", p.display())))?
            }
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.boost.validate()?;
        self.inference.validate()?;
        if self.ensemble == 0 {
            return Err(Error::config("ensemble must be at least 1"));
        }
        if self.lm.order == 0 {
            return Err(Error::config("lm.order must be at least 1"));
        }
        if self.synth.split.iter().sum::<usize>() == 0 {
            return Err(Error::config("synth.split must not be all zero"));
        }
        self.corpus_format()?;
        self.synth.rule_config()?;
        for p in [
            &self.paths.train,
            &self.paths.dev,
            &self.paths.test,
            &self.paths.native,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::config(format!(
                    "input path {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        self.paths.corpus_format.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash of the canonical serialized config.
    pub fn hash(&self) -> String {
        crate::seed::sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
