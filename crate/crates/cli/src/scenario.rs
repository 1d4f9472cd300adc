//! Scenario files: the system and reference representations, the
//! reference state, the POVM generator and the target effect.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qrf::bounds::{plus_effect, InputDigest};
use qrf::phasepovm::CovariantPhasePovm;
use qrf::search::{ReferenceFamily, SearchOptions};
use qrf::{Effect, Operator, State, U1Representation};

use crate::error::CliError;
use crate::presets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub sys: U1Representation,
    #[serde(rename = "ref")]
    pub reference: U1Representation,
    pub omega: OmegaSpec,
    #[serde(rename = "T", default)]
    pub t: GeneratorSpec,
    #[serde(rename = "A", default)]
    pub a: TargetSpec,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchOptions>,
}

fn default_eps_grid() -> Vec<f64> {
    vec![1.0 / 16.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Family(FamilySpec),
    Matrix(State),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Number eigenvalue selected by `number-eigenstate`; the lowest level
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    #[default]
    #[serde(with = "canonical")]
    Canonical,
    Matrix(Operator),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    #[default]
    #[serde(with = "plus_qubit")]
    PlusQubit,
    Matrix(Operator),
}

macro_rules! keyword {
    ($module:ident, $word:literal) => {
        mod $module {
            use serde::{de::Error, Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str($word)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
                let s = String::deserialize(d)?;
                if s == $word {
                    Ok(())
                } else {
                    Err(D::Error::custom(format!("expected {:?}", $word)))
                }
            }
        }
    };
}

keyword!(canonical, "canonical");
keyword!(plus_qubit, "plus_qubit");

/// A scenario with every field turned into validated objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub sys: U1Representation,
    pub reference: U1Representation,
    pub omega: State,
    pub povm: CovariantPhasePovm,
    pub a: Effect,
    pub eps_grid: Vec<f64>,
    pub seed: u64,
    pub search: SearchOptions,
    pub digest: String,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads a preset by name or a scenario file by path.
    pub fn locate(file: Option<&Path>, preset: Option<&str>) -> Result<Self, CliError> {
        match (file, preset) {
            (Some(_), Some(_)) => Err(CliError::Usage("give a scenario file or --preset, not both".into())),
            (None, None) => Err(CliError::Usage("a scenario file or --preset is required".into())),
            (Some(f), None) => Self::load(f),
            (None, Some(name)) => presets::load(name),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("scenario serialises");
        InputDigest::new("scenario").bytes(compact.as_bytes()).finish()
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let omega = match &self.omega {
            OmegaSpec::Matrix(s) => s.clone(),
            OmegaSpec::Family(f) => family_state(f, &self.reference)?,
        };
        if omega.dim() != self.reference.dim() {
            return Err(CliError::Parse(format!(
                "omega has dimension {}, reference has {}",
                omega.dim(),
                self.reference.dim()
            )));
        }
        let povm = match &self.t {
            GeneratorSpec::Canonical => CovariantPhasePovm::canonical(self.reference.clone()),
            GeneratorSpec::Matrix(t) => CovariantPhasePovm::new(self.reference.clone(), t.clone())?,
        };
        let a = match &self.a {
            TargetSpec::PlusQubit => plus_effect(&self.sys)?,
            TargetSpec::Matrix(m) => Effect::new(m.clone())?,
        };
        if a.dim() != self.sys.dim() {
            return Err(CliError::Parse(format!(
                "A has dimension {}, system has {}",
                a.dim(),
                self.sys.dim()
            )));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(CliError::Parse(format!("eps_grid entry {e} outside [0, 1)")));
        }
        Ok(Resolved {
            sys: self.sys.clone(),
            reference: self.reference.clone(),
            omega,
            povm,
            a,
            eps_grid: self.eps_grid.clone(),
            seed: self.seed,
            search: self.search.clone().unwrap_or_default(),
            digest: self.digest(),
        })
    }
}

fn family_state(f: &FamilySpec, reference: &U1Representation) -> Result<State, CliError> {
    let dim = reference.dim();
    let family = match f.family.as_str() {
        "uniform-superposition" => ReferenceFamily::UniformSuperposition,
        "number-eigenstate" => {
            let level = f.n.unwrap_or_else(|| reference.min());
            let k = reference
                .index_of(level)
                .ok_or_else(|| CliError::Parse(format!("reference has no level {level}")))?;
            return Ok(State::basis(dim, k));
        }
        "binomial" => ReferenceFamily::Binomial(
            f.p.ok_or_else(|| CliError::Parse("binomial family needs \"p\"".into()))?,
        ),
        "gaussian" => ReferenceFamily::Gaussian(
            f.sigma
                .ok_or_else(|| CliError::Parse("gaussian family needs \"sigma\"".into()))?,
        ),
        other => return Err(CliError::Parse(format!("unknown reference family {other:?}"))),
    };
    Ok(family.state(dim)?)
}
