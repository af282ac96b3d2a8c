//! Scenario files: TOML with one section per experiment kind.
//!
//! Physical quantities are always explicit. Defaults exist only for
//! numerical controls (tolerances, sample counts, step counts).

use std::path::PathBuf;

use nhtdse_core::anyon::AnyonChainSpec;
use nhtdse_core::geomphase::TraceFamily;
use nhtdse_core::models::{DiagonalDecayModel, GainLossDimer};
use nhtdse_core::quench::{BondHopping, QuenchEdit};
use nhtdse_core::TdseVariant;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Complex matrix as rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Evolve,
    CompareTdse,
    Quench,
    LrbProbe,
    Geomphase,
    AnyonQuench,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Evolve => "evolve",
            Kind::CompareTdse => "compare-tdse",
            Kind::Quench => "quench",
            Kind::LrbProbe => "lrb-probe",
            Kind::Geomphase => "geomphase",
            Kind::AnyonQuench => "anyon-quench",
        }
    }

    /// Name of the TOML table holding the experiment parameters.
    pub fn section(self) -> String {
        self.as_str().replace('-', "_")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    /// Where tables and `summary.json` go; `nhtdse-out/<kind>` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_tdse: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lrb_probe: Option<LrbConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geomphase: Option<GeomphaseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anyon_quench: Option<AnyonConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "defaults::rtol")]
    pub rtol: f64,
    #[serde(default = "defaults::atol")]
    pub atol: f64,
    #[serde(default = "defaults::max_step")]
    pub max_step: f64,
    /// Disables error control when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    #[serde(default = "defaults::damping_step")]
    pub damping_step: f64,
    #[serde(default = "defaults::derivative_step")]
    pub derivative_step: f64,
    #[serde(default = "defaults::defect_tol")]
    pub defect_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: defaults::rtol(),
            atol: defaults::atol(),
            max_step: defaults::max_step(),
            fixed_step: None,
            damping_step: defaults::damping_step(),
            derivative_step: defaults::derivative_step(),
            defect_tol: defaults::defect_tol(),
        }
    }
}

pub mod defaults {
    use nhtdse_core::biortho::DEFAULT_DEFECT_TOL;
    use nhtdse_core::evolve::DEFAULT_DAMPING_STEP;
    use nhtdse_core::integrator::IntegratorOptions;
    use nhtdse_core::tdse::DEFAULT_DERIVATIVE_STEP;

    pub fn rtol() -> f64 {
        IntegratorOptions::default().rtol
    }
    pub fn atol() -> f64 {
        IntegratorOptions::default().atol
    }
    pub fn max_step() -> f64 {
        IntegratorOptions::default().max_step
    }
    pub fn damping_step() -> f64 {
        DEFAULT_DAMPING_STEP
    }
    pub fn derivative_step() -> f64 {
        DEFAULT_DERIVATIVE_STEP
    }
    pub fn defect_tol() -> f64 {
        DEFAULT_DEFECT_TOL
    }
    pub fn samples() -> usize {
        100
    }
    pub fn phase_steps() -> usize {
        4000
    }
}

/// Time-dependent Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Constant {
        h: MatrixRows,
    },
    /// `h0 + sin(frequency·t)·h1`
    Driven {
        h0: MatrixRows,
        h1: MatrixRows,
        frequency: f64,
    },
    Piecewise {
        pieces: Vec<MatrixRows>,
        quench_times: Vec<f64>,
    },
    DiagonalDecay(DiagonalDecayModel),
    GainLossDimer(GainLossDimer),
    /// Random smooth similarity-transformed schedule drawn from the seed.
    Similarity {
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    Amplitudes { values: Vec<[f64; 2]> },
    /// Random normalized vector drawn from the seed.
    Random,
    /// Right eigenvector `level` (eigenvalues sorted by real part) of the
    /// initial Hamiltonian.
    Eigenstate { level: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub variant: TdseVariant,
    pub t_span: [f64; 2],
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    pub model: ModelConfig,
    pub state: StateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "all_variants")]
    pub variants: Vec<TdseVariant>,
    pub t_span: [f64; 2],
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    pub model: ModelConfig,
    pub state: StateConfig,
}

fn all_variants() -> Vec<TdseVariant> {
    TdseVariant::ALL.to_vec()
}

impl From<EvolveConfig> for CompareConfig {
    fn from(e: EvolveConfig) -> Self {
        Self {
            variants: all_variants(),
            t_span: e.t_span,
            samples: e.samples,
            model: e.model,
            state: e.state,
        }
    }
}

/// Metric jump given either by the two Hamiltonians or by the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_minus: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_plus: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_minus: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_plus: Option<MatrixRows>,
    pub state: StateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrbConfig {
    pub sites: usize,
    /// Onsite energies as `[re, im]` pairs.
    pub onsite: Vec<[f64; 2]>,
    /// Same hopping on every bond; mutually exclusive with `hoppings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<BondHopping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hoppings: Option<Vec<BondHopping>>,
    pub edit: QuenchEdit,
    pub t_q: f64,
    pub state: StateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeomphaseConfig {
    pub families: Vec<TraceFamily>,
    #[serde(default = "defaults::phase_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabatic: Option<AdiabaticConfig>,
}

/// Dynamical cross-check of one family's level-1 phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticConfig {
    pub family: TraceFamily,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnyonConfig {
    pub sites: usize,
    /// Uniform hopping; mutually exclusive with `hoppings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hoppings: Option<Vec<f64>>,
    pub kappa: f64,
    pub filling: usize,
    pub quench_bond: usize,
    pub quench_value: f64,
}

impl AnyonConfig {
    pub fn spec(&self) -> Result<AnyonChainSpec, String> {
        let hoppings = match (&self.hopping, &self.hoppings) {
            (Some(t), None) => vec![*t; self.sites.saturating_sub(1)],
            (None, Some(list)) => list.clone(),
            _ => return Err("anyon-quench needs exactly one of `hopping` or `hoppings`".into()),
        };
        Ok(AnyonChainSpec {
            sites: self.sites,
            hoppings,
            kappa: self.kappa,
            filling: self.filling,
            quench_bond: self.quench_bond,
            quench_value: self.quench_value,
        })
    }
}

impl ScenarioConfig {
    /// Parses TOML text after applying `key=value` overrides.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self, String> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| format!("config is not valid TOML: {e}"))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let config: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| format!("config does not match the schema: {e}"))?;
        config.check_sections()?;
        Ok(config)
    }

    /// Exactly the section named by `kind` must be present.
    fn check_sections(&self) -> Result<(), String> {
        let present = [
            (Kind::Evolve, self.evolve.is_some()),
            (Kind::CompareTdse, self.compare_tdse.is_some()),
            (Kind::Quench, self.quench.is_some()),
            (Kind::LrbProbe, self.lrb_probe.is_some()),
            (Kind::Geomphase, self.geomphase.is_some()),
            (Kind::AnyonQuench, self.anyon_quench.is_some()),
        ];
        for (kind, is_present) in present {
            if kind == self.kind && !is_present {
                return Err(format!("kind = \"{}\" needs a [{}] section", kind.as_str(), kind.section()));
            }
            if kind != self.kind && is_present {
                return Err(format!(
                    "section [{}] does not belong to kind = \"{}\"",
                    kind.section(),
                    self.kind.as_str()
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in,
    /// output location excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let value = serde_json::to_value(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("nhtdse-out").join(self.kind.as_str()))
    }
}

/// Sets `a.b.c = value` in `table`, creating intermediate tables. The value
/// is read as a TOML literal and falls back to a plain string.
fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<(), String> {
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("invalid override key '{key}'"));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for part in path {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| format!("override '{key}': '{part}' is not a table"))?;
    }
    cursor.insert(last.to_string(), parsed);
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(arg: &str) -> Result<(String, String), String> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| format!("override '{arg}' must look like key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EVOLVE: &str = r#"
kind = "evolve"
seed = 3

[evolve]
t_span = [0.0, 1.0]
model = { type = "constant", h = [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]] }
state = { type = "amplitudes", values = [[1.0, 0.0], [0.0, 0.0]] }
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ScenarioConfig::parse(EVOLVE, &[]).unwrap();
        assert_eq!(c.kind, Kind::Evolve);
        let e = c.evolve.unwrap();
        assert_eq!(e.variant, TdseVariant::NewNH);
        assert_eq!(e.samples, 100);
        assert_eq!(c.integrator, IntegratorConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_stray_sections() {
        let typo = EVOLVE.replace("t_span", "tspan");
        assert!(ScenarioConfig::parse(&typo, &[]).is_err());
        let extra = format!("{EVOLVE}\n[geomphase]\nfamilies = []\n");
        let err = ScenarioConfig::parse(&extra, &[]).unwrap_err();
        assert!(err.contains("does not belong"), "{err}");
        let nested = EVOLVE.replace("type = \"constant\"", "type = \"constant\", bogus = 1");
        assert!(ScenarioConfig::parse(&nested, &[]).is_err());
    }

    #[test]
    fn overrides_use_toml_literals() {
        let overrides = vec![
            ("evolve.variant".to_string(), "gong".to_string()),
            ("evolve.samples".to_string(), "7".to_string()),
            ("integrator.rtol".to_string(), "1e-6".to_string()),
        ];
        let c = ScenarioConfig::parse(EVOLVE, &overrides).unwrap();
        assert_eq!(c.evolve.as_ref().unwrap().variant, TdseVariant::Gong);
        assert_eq!(c.evolve.as_ref().unwrap().samples, 7);
        assert_eq!(c.integrator.rtol, 1e-6);
        assert!(ScenarioConfig::parse(EVOLVE, &[("seed.x".into(), "1".into())]).is_err());
        assert_eq!(parse_override("a.b = 2").unwrap(), ("a.b".to_string(), "2".to_string()));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn hash_ignores_formatting_and_output_location() {
        let a = ScenarioConfig::parse(EVOLVE, &[]).unwrap();
        let reordered = r#"
seed = 3
kind = "evolve"
output_dir = "elsewhere"
[integrator]
rtol = 1e-9
[evolve]
state = { values = [[1.0, 0.0], [0.0, 0.0]], type = "amplitudes" }
model = { h = [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]], type = "constant" }
t_span = [0.0, 1.0]
"#;
        let b = ScenarioConfig::parse(reordered, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ScenarioConfig::parse(EVOLVE, &[("seed".into(), "4".into())]).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn model_variants_deserialize() {
        let text = r#"
kind = "compare-tdse"
[compare_tdse]
variants = ["new-nh", "gong"]
t_span = [0.0, 2.0]
model = { type = "gain-loss-dimer", gain = 0.5, coupling = 1.0 }
state = { type = "eigenstate", level = 0 }
"#;
        let c = ScenarioConfig::parse(text, &[]).unwrap();
        let cmp = c.compare_tdse.unwrap();
        assert_eq!(cmp.variants, vec![TdseVariant::NewNH, TdseVariant::Gong]);
        assert!(matches!(cmp.model, ModelConfig::GainLossDimer(_)));
    }
}
