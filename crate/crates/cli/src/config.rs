//! Experiment configuration files.

use crate::CliError;
use compdiv_core::circuits::{bell_projector, BudgetPolynomial, BuildOptions, EffectOperator, GateSet, GateSpec};
use compdiv_core::qmatrix::DensityMatrix;
use compdiv_core::random::{random_density, rng};
use compdiv_core::resources::{bell_state, sigma_star};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSetSpec {
    Preset(String),
    Labels(Vec<String>),
    Inline(Vec<GateSpec>),
}

impl GateSetSpec {
    pub fn build(&self) -> Result<GateSet, CliError> {
        Ok(match self {
            Self::Preset(p) => GateSet::preset(p)?,
            Self::Labels(l) => GateSet::from_labels(l)?,
            Self::Inline(specs) => GateSet::from_specs(specs)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    File { path: PathBuf },
    Bell { n: usize },
    SigmaStar { n: usize },
    MaximallyMixed { qubits: usize },
    Basis { bits: Vec<u8> },
    /// Random state of the given rank drawn from stream `stream` of the run seed.
    Random { qubits: usize, rank: usize, stream: u64 },
}

impl StateSpec {
    pub fn resolve(&self, seed: u64, base: &Path) -> Result<DensityMatrix, CliError> {
        Ok(match self {
            Self::File { path } => DensityMatrix::load(base.join(path))?,
            Self::Bell { n } => bell_state(*n),
            Self::SigmaStar { n } => sigma_star(*n),
            Self::MaximallyMixed { qubits } => DensityMatrix::maximally_mixed(vec![2; *qubits]),
            Self::Basis { bits } => DensityMatrix::basis(bits),
            Self::Random { qubits, rank, stream } => {
                random_density(vec![2; *qubits], *rank, &mut rng(seed, 1_000_000 + stream))
            }
        })
    }
}

/// Named generators appended to an enumerated family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtraEffect {
    Bell { n: usize },
}

impl ExtraEffect {
    pub fn effect(&self) -> EffectOperator {
        match self {
            Self::Bell { n } => bell_projector(*n),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Bell { n } => format!("bell({n})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Tracedist,
    Renyi,
    Relent,
    Maxdiv,
    Conic,
    Fidelity,
    Hilbert,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Relent,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    BuildFamily {
        n: usize,
        #[serde(default)]
        extras: Vec<ExtraEffect>,
    },
    Divergence {
        n: usize,
        measure: Measure,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        rho: StateSpec,
        sigma: StateSpec,
        #[serde(default)]
        extras: Vec<ExtraEffect>,
    },
    ApproxTrial {
        n: usize,
        eps: f64,
        trials: u64,
        /// Family indices and weights of the hull element.
        indices: Vec<usize>,
        weights: Vec<f64>,
    },
    Stein {
        rho: StateSpec,
        sigma: StateSpec,
        eps: f64,
        m_max: usize,
        #[serde(default)]
        extras: Vec<ExtraEffect>,
    },
    Resource {
        n_a: usize,
        n_b: usize,
        rho: StateSpec,
        measure: ResourceKind,
        samples: usize,
        #[serde(default)]
        extras: Vec<ExtraEffect>,
    },
    Continuity {
        n_a: usize,
        n_b: usize,
        rho: StateSpec,
        rho2: StateSpec,
        samples: usize,
        #[serde(default)]
        extras: Vec<ExtraEffect>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Slack for inequalities checked by the verification suite.
    pub inequality: f64,
    /// Agreement required for claimed equalities.
    pub equality: f64,
    /// Maximum bracket width for exact resource values.
    pub bracket_width: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inequality: 1e-12, equality: 1e-9, bracket_width: 1e-6 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    /// Random pairs per randomized check.
    pub pairs: usize,
    /// Seeded trials per hull element in the sampling check.
    pub trials: u64,
    /// Overwrite the cache header before reloading it.
    pub corrupt_cache: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { pairs: 40, trials: 200, corrupt_cache: false }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gate_set: GateSetSpec,
    pub budget_poly: Vec<i64>,
    pub system_sizes: Vec<usize>,
    #[serde(default = "one")]
    pub ancillas: usize,
    #[serde(default)]
    pub postprocessing: bool,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub pipeline: Vec<Step>,
    #[serde(default)]
    pub verify: VerifySettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gate_set: GateSetSpec::Preset("HTCNOT".into()),
            budget_poly: vec![2],
            system_sizes: vec![1],
            ancillas: 1,
            postprocessing: true,
            seed: 0,
            tolerances: Tolerances::default(),
            outputs: Outputs::default(),
            pipeline: vec![],
            verify: VerifySettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.gate_set.build()?;
        if self.system_sizes.is_empty() || self.system_sizes.contains(&0) {
            return Err(CliError::Config("system_sizes must list positive qubit counts".into()));
        }
        if self.budget_poly.is_empty() {
            return Err(CliError::Config("budget_poly needs at least one coefficient".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializable")))
    }

    pub fn poly(&self) -> BudgetPolynomial {
        BudgetPolynomial::new(self.budget_poly.clone())
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions { n_anc: self.ancillas, postprocessing: self.postprocessing, ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_stable() {
        let mut c = ExperimentConfig::default();
        c.pipeline = vec![
            Step::BuildFamily { n: 1, extras: vec![] },
            Step::Resource {
                n_a: 1,
                n_b: 1,
                rho: StateSpec::Bell { n: 1 },
                measure: ResourceKind::Relent,
                samples: 10,
                extras: vec![ExtraEffect::Bell { n: 1 }],
            },
        ];
        let text = c.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["colour"] = 3.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["tolerances"]["typo"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let c = ExperimentConfig::from_json(
            r#"{"gate_set":{"labels":["H","T","CNOT"]},"budget_poly":[1,1],"system_sizes":[1],"seed":4}"#,
        )
        .unwrap();
        assert_eq!(c.ancillas, 1);
        assert!(c.pipeline.is_empty());
        assert!(ExperimentConfig::from_json(r#"{"gate_set":{"preset":"nope"},"budget_poly":[1],"system_sizes":[1],"seed":0}"#).is_err());
    }

    #[test]
    fn random_state_specs_are_seeded() {
        let s = StateSpec::Random { qubits: 1, rank: 2, stream: 3 };
        let a = s.resolve(9, Path::new(".")).unwrap();
        assert_eq!(a, s.resolve(9, Path::new(".")).unwrap());
        assert_ne!(a, s.resolve(10, Path::new(".")).unwrap());
    }
}
