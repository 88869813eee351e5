//! Experiment configuration files.
//!
//! ```toml
//! name = "square-sym"
//! lattice = "square"              # or a list, or a path to a catalog file
//! n_list = [16, 32, 64]
//! pde_grid = 128
//! horizon = 0.1
//! replicas = 20
//! master_seed = 7
//! snapshots = 10
//!
//! [drift]
//! envelope = [1, 0]
//! modes = [{ k = [1, 0], cos = "1/2" }]
//!
//! [profile]
//! modes = [{ k = [0, 0], cos = "1/2" }, { k = [1, 0], sin = 0.3 }]
//!
//! [[test_functions]]
//! modes = [{ k = [1, 0], cos = 1 }]
//!
//! [replacement]
//! bundles = ["occupation", "edge-product"]
//! epsilon = 0.2
//! k = 3
//! ```
//!
//! Coefficients accept integers, decimals, and fraction text. Omitted keys
//! take the defaults listed on [`ExperimentConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{self, Basis, LatticeSpec, NumberText, RealMatrix};
use crate::error::ParseError;
use crate::fourier::{DriftSpec, FourierField, FourierMode};
use crate::pde::DriftForm;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeText {
    k: Vec<i64>,
    cos: Option<NumberText>,
    sin: Option<NumberText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldText {
    modes: Vec<ModeText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftText {
    envelope: Option<[NumberText; 2]>,
    #[serde(default)]
    modes: Vec<ModeText>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    name: Option<String>,
    lattice: OneOrMany,
    basis: Option<Vec<Vec<NumberText>>>,
    n_list: Option<Vec<usize>>,
    pde_grid: Option<usize>,
    pde_form: Option<DriftForm>,
    horizon: NumberText,
    drift: Option<DriftText>,
    profile: FieldText,
    test_functions: Option<Vec<FieldText>>,
    replicas: Option<usize>,
    master_seed: Option<u64>,
    snapshots: Option<usize>,
    event_budget: Option<u64>,
    replacement: Option<ReplacementConfig>,
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundleName {
    Occupation,
    EdgeProduct,
    NeighborhoodProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplacementConfig {
    pub bundles: Vec<BundleName>,
    pub epsilon: f64,
    pub k: f64,
    /// Base edge of the edge-product bundle; its tail is the base vertex used.
    #[serde(default)]
    pub edge: usize,
}

/// A validated experiment.
///
/// Defaults: `n_list` {128, 256, 512} in one dimension and {16, 32, 64}
/// otherwise; `pde_grid` 256 in one dimension and 128 otherwise; 20
/// replicas; seed 0; 200 snapshot intervals; divergence drift form; zero
/// drift; test functions from [`default_test_functions`].
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub lattices: Vec<String>,
    pub basis: Option<Vec<Vec<f64>>>,
    pub n_list: Vec<usize>,
    pub pde_grid: usize,
    pub pde_form: DriftForm,
    pub horizon: f64,
    pub drift: DriftSpec,
    pub profile: FourierField,
    pub test_functions: Vec<FourierField>,
    pub replicas: usize,
    pub master_seed: u64,
    pub snapshots: usize,
    pub event_budget: Option<u64>,
    pub replacement: Option<ReplacementConfig>,
    #[serde(skip)]
    pub output: PathBuf,
    #[serde(skip)]
    specs: Vec<LatticeSpec>,
    #[serde(skip)]
    basis_matrix: Option<RealMatrix>,
}

fn field_err(field: &str, reason: impl ToString) -> ParseError {
    ParseError::Field {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

fn number(field: &str, v: &NumberText) -> Result<f64, ParseError> {
    let x = v.to_f64().map_err(|e| field_err(field, e))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(field_err(field, "not finite"))
    }
}

fn modes(field: &str, dim: usize, text: &[ModeText]) -> Result<FourierField, ParseError> {
    let mut out = Vec::with_capacity(text.len());
    for m in text {
        if m.k.len() != dim {
            return Err(field_err(
                field,
                format!("wave vector {:?} is not {dim}-dimensional", m.k),
            ));
        }
        let zero = NumberText::Int(0);
        out.push(FourierMode {
            k: m.k.clone(),
            cos: number(field, m.cos.as_ref().unwrap_or(&zero))?,
            sin: number(field, m.sin.as_ref().unwrap_or(&zero))?,
        });
    }
    Ok(FourierField::new(dim, out))
}

/// `{cos 2πy, sin 2πy, cos 4πy}` in one dimension; otherwise
/// `{cos 2πy₁, sin 2πy₁, cos 2πy₂}`.
pub fn default_test_functions(dim: usize) -> Vec<FourierField> {
    let axis = |i: usize, m: i64| {
        let mut k = vec![0; dim];
        k[i] = m;
        k
    };
    if dim == 1 {
        vec![
            FourierField::cosine(axis(0, 1), 1.0),
            FourierField::sine(axis(0, 1), 1.0),
            FourierField::cosine(axis(0, 2), 1.0),
        ]
    } else {
        vec![
            FourierField::cosine(axis(0, 1), 1.0),
            FourierField::sine(axis(0, 1), 1.0),
            FourierField::cosine(axis(1, 1), 1.0),
        ]
    }
}

impl ExperimentConfig {
    /// Reads a config file; relative lattice paths resolve against its
    /// directory.
    pub fn from_path(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
        Self::parse(&text, fallback, path.parent())
    }

    pub fn from_toml(text: &str, fallback_name: &str) -> Result<Self, ParseError> {
        Self::parse(text, fallback_name, None)
    }

    fn parse(text: &str, fallback_name: &str, dir: Option<&Path>) -> Result<Self, ParseError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
        let lattices = match file.lattice {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        };
        if lattices.is_empty() {
            return Err(field_err("lattice", "no lattice given"));
        }
        let mut specs = Vec::with_capacity(lattices.len());
        for l in &lattices {
            let spec = match (catalog::builtin(l), dir) {
                (Some(s), _) => s,
                (None, Some(d)) if Path::new(l).is_relative() => {
                    catalog::load(&d.join(l).to_string_lossy())?
                }
                _ => catalog::load(l)?,
            };
            specs.push(spec);
        }
        let dim = specs[0].graph.dim();
        if let Some(bad) = specs.iter().find(|s| s.graph.dim() != dim) {
            return Err(field_err(
                "lattice",
                format!("`{}` has dimension {}, expected {dim}", bad.name, bad.graph.dim()),
            ));
        }

        let basis_matrix = match &file.basis {
            None => None,
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(field_err("basis", format!("expected {dim} rows of {dim} entries")));
                }
                Some(RealMatrix::from_text(rows).map_err(|e| field_err("basis", e))?)
            }
        };

        let drift = match &file.drift {
            None => DriftSpec::zero(dim),
            Some(d) => {
                let envelope = match &d.envelope {
                    None => (1.0, 0.0),
                    Some([a, b]) => (number("drift.envelope", a)?, number("drift.envelope", b)?),
                };
                DriftSpec {
                    field: modes("drift", dim, &d.modes)?,
                    envelope,
                }
            }
        };
        let profile = modes("profile", dim, &file.profile.modes)?;
        let test_functions = match &file.test_functions {
            None => default_test_functions(dim),
            Some(list) => list
                .iter()
                .map(|f| modes("test_functions", dim, &f.modes))
                .collect::<Result<_, _>>()?,
        };

        let config = ExperimentConfig {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            lattices,
            basis: basis_matrix.as_ref().map(|m| m.values().to_vec()),
            n_list: file
                .n_list
                .unwrap_or_else(|| if dim == 1 { vec![128, 256, 512] } else { vec![16, 32, 64] }),
            pde_grid: file.pde_grid.unwrap_or(if dim == 1 { 256 } else { 128 }),
            pde_form: file.pde_form.unwrap_or(DriftForm::Divergence),
            horizon: number("horizon", &file.horizon)?,
            drift,
            profile,
            test_functions,
            replicas: file.replicas.unwrap_or(20),
            master_seed: file.master_seed.unwrap_or(0),
            snapshots: file.snapshots.unwrap_or(200),
            event_budget: file.event_budget,
            replacement: file.replacement,
            output: file
                .output
                .unwrap_or_else(|| PathBuf::from("results").join(fallback_name)),
            specs,
            basis_matrix,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ParseError> {
        if !(self.horizon > 0.0) {
            return Err(field_err("horizon", "must be positive"));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(field_err("n_list", "needs at least one N, each at least 2"));
        }
        if self.pde_grid < 4 {
            return Err(field_err("pde_grid", "must be at least 4"));
        }
        if self.replicas == 0 {
            return Err(field_err("replicas", "must be positive"));
        }
        if self.snapshots == 0 {
            return Err(field_err("snapshots", "must be positive"));
        }
        if self.test_functions.is_empty() {
            return Err(field_err("test_functions", "empty"));
        }
        let spread: f64 = self
            .profile
            .modes()
            .iter()
            .filter(|m| m.k.iter().any(|&k| k != 0))
            .map(|m| m.cos.hypot(m.sin))
            .sum();
        let mean = self.profile.mean();
        if mean - spread < 0.0 || mean + spread > 1.0 {
            return Err(field_err(
                "profile",
                format!("values may leave [0, 1]: mean {mean}, oscillation up to {spread}"),
            ));
        }
        if let Some(r) = &self.replacement {
            if !(r.epsilon > 0.0) || !(r.k >= 0.0) {
                return Err(field_err("replacement", "epsilon must be positive and k nonnegative"));
            }
            if r.bundles.is_empty() {
                return Err(field_err("replacement.bundles", "empty"));
            }
            for spec in &self.specs {
                if r.edge >= spec.graph.num_edges() {
                    return Err(field_err(
                        "replacement.edge",
                        format!("`{}` has {} oriented edges", spec.name, spec.graph.num_edges()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.specs[0].graph.dim()
    }

    /// Lattices with the basis override applied.
    pub fn lattice_specs(&self) -> Vec<LatticeSpec> {
        self.specs
            .iter()
            .cloned()
            .map(|mut s| {
                if let Some(m) = &self.basis_matrix {
                    s.basis = Basis::from_vectors(m.clone());
                }
                s
            })
            .collect()
    }

    /// Canonical JSON of every field that influences results; output location
    /// is excluded.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn profile_digest(&self) -> String {
        self.profile.digest()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
lattice = "square"
horizon = "1/10"
replicas = 4
[drift]
modes = [{ k = [1, 0], cos = "1/2" }]
[profile]
modes = [{ k = [0, 0], cos = 0.5 }, { k = [1, 0], sin = 0.3 }]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE, "sample").unwrap();
        assert_eq!(c.name, "sample");
        assert_eq!(c.n_list, vec![16, 32, 64]);
        assert_eq!(c.pde_grid, 128);
        assert_eq!(c.horizon, 0.1);
        assert_eq!(c.snapshots, 200);
        assert_eq!(c.drift.field.value(&[0.0, 0.3]), 0.5);
        assert_eq!(c.test_functions.len(), 3);
        assert_eq!(c.pde_form, DriftForm::Divergence);
    }

    #[test]
    fn equal_values_hash_equal() {
        let a = ExperimentConfig::from_toml(SAMPLE, "sample").unwrap();
        let b = ExperimentConfig::from_toml(&SAMPLE.replace("\"1/2\"", "0.5"), "sample").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(&SAMPLE.replace("replicas = 4", "replicas = 5"), "sample")
            .unwrap();
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.output = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), d.hash());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("horizon = \"1/10\"", "horizon = 0"),
            ("replicas = 4", "replicas = 0"),
            ("sin = 0.3", "sin = 0.7"),
            ("k = [1, 0], cos", "k = [1], cos"),
            ("lattice = \"square\"", "lattice = \"no-such-lattice\""),
            ("replicas = 4", "replicas = 4\ncolour = 1"),
        ] {
            let text = SAMPLE.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text, "bad").is_err(), "{to}");
        }
        let mixed = SAMPLE.replace("lattice = \"square\"", "lattice = [\"square\", \"line\"]");
        assert!(ExperimentConfig::from_toml(&mixed, "bad").is_err());
    }

    #[test]
    fn basis_override_applies() {
        let text = SAMPLE.replace("replicas = 4\n", "replicas = 4\nbasis = [[2, 0], [0, 2]]\n");
        let c = ExperimentConfig::from_toml(&text, "b").unwrap();
        assert_eq!(c.lattice_specs()[0].basis.matrix(), &[vec![2.0, 0.0], vec![0.0, 2.0]]);
    }

    #[test]
    fn default_test_functions_by_dimension() {
        let one = default_test_functions(1);
        assert_eq!(one[2].value(&[0.25]), -1.0);
        let two = default_test_functions(2);
        assert!((two[2].value(&[0.0, 0.5]) + 1.0).abs() < 1e-15);
    }
}
