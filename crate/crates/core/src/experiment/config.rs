use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, AuxSpec};
use crate::error::{Error, Result};
use crate::group::{divisors, normalize_generator, FiniteAbelianGroup, ProductSubgroup};
use crate::ops::HidingFunction;
use crate::rng::{self, derive_seed};

/// Labels for the child seeds derived from the experiment seed.
pub(crate) mod labels {
    pub const SUBGROUP: u64 = 1;
    pub const RELABEL: u64 = 2;
    pub const AUX: u64 = 3;
    pub const SHOTS_STANDARD: u64 = 4;
    pub const SHOTS_INIT_FREE: u64 = 5;
    pub const RECOVERY: u64 = 6;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Generators {
    List(Vec<i64>),
    Random { random_subgroup: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    Standard,
    InitFree,
    Both,
}

impl AlgorithmChoice {
    pub fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgorithmChoice::Standard => vec![Algorithm::Standard],
            AlgorithmChoice::InitFree => vec![Algorithm::InitFree],
            AlgorithmChoice::Both => vec![Algorithm::Standard, Algorithm::InitFree],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Shots,
    Exact,
    Channel,
    Recover,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

fn default_shots() -> u64 {
    1000
}

fn default_trials() -> u64 {
    100
}

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub moduli: Vec<i64>,
    pub generators: Generators,
    pub algorithm: AlgorithmChoice,
    #[serde(default)]
    pub aux: AuxSpec,
    pub mode: Mode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub relabel_f: bool,
    /// Recovery trials per algorithm.
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(moduli: Vec<i64>, generators: Vec<i64>, algorithm: AlgorithmChoice, mode: Mode) -> Self {
        Self {
            moduli,
            generators: Generators::List(generators),
            algorithm,
            aux: AuxSpec::Zero,
            mode,
            shots: default_shots(),
            seed: 0,
            relabel_f: false,
            trials: default_trials(),
            output: None,
            format: OutputFormat::Json,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the group, the planted subgroup and the hiding function.
    /// Generators that are not divisors of their modulus are normalized, with
    /// a warning.
    pub fn resolve(&self) -> Result<ResolvedInstance> {
        let group = FiniteAbelianGroup::from_signed(&self.moduli).map_err(|e| Error::Config(e.to_string()))?;
        let mut warnings = Vec::new();
        let raw: Vec<u64> = match &self.generators {
            Generators::List(g) => {
                if g.len() != group.rank() {
                    return Err(Error::Config(format!(
                        "{} generators for {} moduli",
                        g.len(),
                        group.rank()
                    )));
                }
                g.iter()
                    .zip(group.moduli())
                    .map(|(&h, &n)| h.rem_euclid(n as i64) as u64)
                    .collect()
            }
            Generators::Random { random_subgroup } => {
                let mut r = rng::stream(derive_seed(*random_subgroup, labels::SUBGROUP), 0);
                group
                    .moduli()
                    .iter()
                    .map(|&n| *divisors(n).choose(&mut r).expect("n ≥ 1 has divisors"))
                    .collect()
            }
        };
        let normalized: Vec<u64> = raw
            .iter()
            .zip(group.moduli())
            .map(|(&h, &n)| normalize_generator(h, n))
            .collect();
        if let Generators::List(g) = &self.generators {
            for ((&given, &norm), &n) in g.iter().zip(&normalized).zip(group.moduli()) {
                if given != norm as i64 && !(given == 0 && norm == n) {
                    warnings.push(format!(
                        "generator {given} of Z_{n} normalized to {norm} (same cyclic subgroup)"
                    ));
                }
            }
        }
        let hidden = ProductSubgroup::new(&group, &normalized)?;
        let relabel_seed = self.relabel_f.then(|| derive_seed(self.seed, labels::RELABEL));
        let f = HidingFunction::canonical(&hidden, relabel_seed)?;
        Ok(ResolvedInstance {
            group,
            hidden,
            f,
            relabel_seed,
            warnings,
        })
    }
}

/// A configuration turned into concrete group data.
#[derive(Clone, Debug)]
pub struct ResolvedInstance {
    pub group: FiniteAbelianGroup,
    pub hidden: ProductSubgroup,
    pub f: HidingFunction,
    pub relabel_seed: Option<u64>,
    pub warnings: Vec<String>,
}
