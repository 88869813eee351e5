//! Lattice catalog files and the built-in entries.
//!
//! A catalog file is TOML:
//!
//! ```toml
//! name = "hexagonal"
//! dimension = 2
//! vertices = 2
//! oriented = false            # optional; true = both orientations listed
//! edges = [[0, 1, [0, 0]], [0, 1, [-1, 1]], [0, 1, [0, 1]]]
//! basis = [["sqrt(3)", 0], ["sqrt(3)/2", "3/2"]]   # row i is u_i
//! positions = [[0, 0], [0, -1]]                     # optional override
//! ```
//!
//! Numbers may be integers, decimals, or strings holding fractions and
//! `sqrt(n)` terms; the latter keep the exact arithmetic path available.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::exact::{decimal_to_rational, parse_surd, Scalar, Surd};
use crate::lattice::{BaseEdge, QuotientGraph};

const BUILTIN: &[(&str, &str)] = &[
    ("line", include_str!("../catalog/line.toml")),
    ("line2", include_str!("../catalog/line2.toml")),
    ("square", include_str!("../catalog/square.toml")),
    ("square-skew", include_str!("../catalog/square-skew.toml")),
    ("square-double", include_str!("../catalog/square-double.toml")),
    ("hexagonal", include_str!("../catalog/hexagonal.toml")),
    ("kagome", include_str!("../catalog/kagome.toml")),
];

/// Positions printed for the two-vertex line quotient with `Φ(0)=0, Φ(1)=−1`.
pub const LINE2_PRINTED_POSITIONS: [[i64; 1]; 2] = [[0], [-1]];

/// Periodic, non-harmonic positions on `square-double`: `(0,0)` and `(1,1/2)`.
pub fn square_double_nonharmonic_positions() -> RealMatrix {
    RealMatrix::from_exact(vec![
        vec![Surd::zero(), Surd::zero()],
        vec![Surd::one(), Surd::from_ratio(1, 2)],
    ])
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// A scalar written as integer, float, or expression text.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum NumberText {
    Int(i64),
    Float(f64),
    Text(String),
}

impl NumberText {
    pub fn to_surd(&self) -> Result<Option<Surd>, ParseError> {
        match self {
            NumberText::Int(i) => Ok(Some(Surd::from_i64(*i))),
            NumberText::Float(x) => Ok(decimal_to_rational(*x).map(Surd::rational)),
            NumberText::Text(t) => parse_surd(t).map(Some),
        }
    }

    pub fn to_f64(&self) -> Result<f64, ParseError> {
        match self {
            NumberText::Int(i) => Ok(*i as f64),
            NumberText::Float(x) => Ok(*x),
            NumberText::Text(t) => parse_surd(t).map(|s| s.to_f64()),
        }
    }
}

/// Real matrix kept in floating point and, when all entries are exact and
/// share one radicand, also in `Q(√r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    values: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<Surd>>>,
}

impl RealMatrix {
    pub fn from_f64(values: Vec<Vec<f64>>) -> Self {
        RealMatrix {
            values,
            exact: None,
        }
    }

    pub fn from_exact(exact: Vec<Vec<Surd>>) -> Self {
        let values = exact
            .iter()
            .map(|r| r.iter().map(Scalar::to_f64).collect())
            .collect();
        let exact = common_radicand(exact.iter().flatten()).map(|_| exact);
        RealMatrix { values, exact }
    }

    pub fn from_text(rows: &[Vec<NumberText>]) -> Result<Self, ParseError> {
        let values = rows
            .iter()
            .map(|r| r.iter().map(NumberText::to_f64).collect())
            .collect::<Result<Vec<Vec<f64>>, _>>()?;
        let mut exact = Vec::with_capacity(rows.len());
        for r in rows {
            let mut out = Vec::with_capacity(r.len());
            for v in r {
                match v.to_surd()? {
                    Some(s) => out.push(s),
                    None => {
                        return Ok(RealMatrix {
                            values,
                            exact: None,
                        })
                    }
                }
            }
            exact.push(out);
        }
        let exact = common_radicand(exact.iter().flatten()).map(|_| exact);
        Ok(RealMatrix { values, exact })
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn exact(&self) -> Option<&[Vec<Surd>]> {
        self.exact.as_deref()
    }

    pub fn transposed(&self) -> RealMatrix {
        fn t<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
            if m.is_empty() {
                return Vec::new();
            }
            (0..m[0].len())
                .map(|c| m.iter().map(|r| r[c].clone()).collect())
                .collect()
        }
        RealMatrix {
            values: t(&self.values),
            exact: self.exact.as_ref().map(|e| t(e)),
        }
    }
}

/// Radicand shared by all values (1 when all rational), or `None` if two
/// different square roots appear.
pub fn common_radicand<'a>(values: impl IntoIterator<Item = &'a Surd>) -> Option<u32> {
    let mut r = 1;
    for v in values {
        match (r, v.radicand()) {
            (_, 1) => {}
            (1, x) => r = x,
            (a, b) if a == b => {}
            _ => return None,
        }
    }
    Some(r)
}

/// Period basis as the matrix `U` whose columns are `u₁, …, u_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: RealMatrix,
}

impl Basis {
    /// From rows `u₁, …, u_d` as written in catalog files.
    pub fn from_vectors(vectors: RealMatrix) -> Self {
        Basis {
            columns: vectors.transposed(),
        }
    }

    pub fn identity(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Surd::one() } else { Surd::zero() })
                    .collect()
            })
            .collect();
        Basis {
            columns: RealMatrix::from_exact(rows),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.rows()
    }

    /// `U` in row-major order.
    pub fn matrix(&self) -> &[Vec<f64>] {
        self.columns.values()
    }

    pub fn exact_matrix(&self) -> Option<&[Vec<Surd>]> {
        self.columns.exact()
    }

    /// Basis vectors as rows, `u_i = vectors()[i]`.
    pub fn vectors(&self) -> RealMatrix {
        self.columns.transposed()
    }
}

/// A lattice entry: graph, period basis, and optional explicit positions.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub name: String,
    pub graph: QuotientGraph,
    pub basis: Basis,
    pub positions: Option<RealMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeFile {
    name: Option<String>,
    dimension: usize,
    vertices: usize,
    #[serde(default)]
    oriented: bool,
    edges: Vec<(usize, usize, Vec<i64>)>,
    basis: Vec<Vec<NumberText>>,
    positions: Option<Vec<Vec<NumberText>>>,
}

fn field_err(field: &str, reason: impl ToString) -> ParseError {
    ParseError::Field {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses catalog text; `fallback_name` is used when the file has no `name`.
pub fn parse_lattice(text: &str, fallback_name: &str) -> Result<LatticeSpec, ParseError> {
    let file: LatticeFile =
        toml::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    let d = file.dimension;
    if file.basis.len() != d || file.basis.iter().any(|r| r.len() != d) {
        return Err(field_err("basis", format!("expected {d} rows of {d} entries")));
    }
    let edges: Vec<BaseEdge> = file
        .edges
        .into_iter()
        .map(|(t, h, s)| BaseEdge::new(t, h, s))
        .collect();
    let graph = if file.oriented {
        QuotientGraph::from_oriented(d, file.vertices, edges)
    } else {
        QuotientGraph::from_unoriented(d, file.vertices, edges)
    }
    .map_err(|e| field_err("edges", e))?;
    let basis = Basis::from_vectors(RealMatrix::from_text(&file.basis)?);
    let positions = match file.positions {
        Some(rows) => {
            if rows.len() != file.vertices || rows.iter().any(|r| r.len() != d) {
                return Err(field_err(
                    "positions",
                    format!("expected {} rows of {d} entries", file.vertices),
                ));
            }
            Some(RealMatrix::from_text(&rows)?)
        }
        None => None,
    };
    Ok(LatticeSpec {
        name: file.name.unwrap_or_else(|| fallback_name.to_string()),
        graph,
        basis,
        positions,
    })
}

pub fn builtin(name: &str) -> Option<LatticeSpec> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| parse_lattice(text, n).expect("built-in catalog entries are valid"))
}

/// Resolves a built-in name or reads a catalog file.
pub fn load(name_or_path: &str) -> Result<LatticeSpec, ParseError> {
    if let Some(spec) = builtin(name_or_path) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name_or_path);
    parse_lattice(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_load() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap();
            assert_eq!(spec.name, name);
            assert_eq!(spec.basis.dim(), spec.graph.dim());
            assert!(spec.basis.exact_matrix().is_some(), "{name}");
        }
        let kagome = builtin("kagome").unwrap();
        assert_eq!(kagome.graph.num_vertices(), 3);
        assert_eq!(kagome.graph.num_edges(), 12);
    }

    #[test]
    fn basis_columns_are_vectors() {
        let skew = builtin("square-skew").unwrap();
        // u₂ = (1/2, 1) is the second column of U
        assert_eq!(skew.basis.matrix()[0][1], 0.5);
        assert_eq!(skew.basis.matrix()[1][1], 1.0);
        assert_eq!(skew.basis.matrix()[1][0], 0.0);
    }

    #[test]
    fn involution_violation_names_edge() {
        let text = r#"
            dimension = 1
            vertices = 1
            oriented = true
            edges = [[0, 0, [1]], [0, 0, [1]]]
            basis = [[1]]
        "#;
        let err = parse_lattice(text, "bad").unwrap_err().to_string();
        assert!(err.contains("edge 0"), "{err}");
        assert!(err.contains("no reverse"), "{err}");
    }

    #[test]
    fn positions_and_mixed_radicands() {
        let text = r#"
            dimension = 2
            vertices = 1
            edges = [[0, 0, [1, 0]], [0, 0, [0, 1]]]
            basis = [["sqrt(2)", 0], [0, "sqrt(3)"]]
            positions = [[0.25, 0]]
        "#;
        let spec = parse_lattice(text, "mixed").unwrap();
        assert!(spec.basis.exact_matrix().is_none());
        assert!((spec.basis.matrix()[1][1] - 3f64.sqrt()).abs() < 1e-15);
        let pos = spec.positions.unwrap();
        assert_eq!(pos.exact().unwrap()[0][0], Surd::from_ratio(1, 4));
    }

    #[test]
    fn rejects_wrong_basis_shape() {
        let text = r#"
            dimension = 2
            vertices = 1
            edges = [[0, 0, [1, 0]], [0, 0, [0, 1]]]
            basis = [[1, 0]]
        "#;
        assert!(parse_lattice(text, "x").is_err());
    }
}
