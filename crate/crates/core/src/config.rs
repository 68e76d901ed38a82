//! JSON model files.
//!
//! ```json
//! {"n": 2,
//!  "edges": [{"from": 1, "to": 1, "p": "1/2", "c": "1/3"}, ...],
//!  "chi": ["1/2", "1/2"]}
//! ```
//!
//! Vertices are 1-based. Coefficients may be strings (`"1/3"`, `"0.25"`)
//! or JSON numbers; both are kept as exact rationals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarkovSystem, Number};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberSpec {
    Text(String),
    Value(serde_json::Number),
}

impl NumberSpec {
    fn to_number(&self) -> Result<Number> {
        match self {
            NumberSpec::Text(s) => s.parse(),
            // serde_json keeps the shortest round-trip decimal form
            NumberSpec::Value(v) => v.to_string().parse(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub p: NumberSpec,
    pub c: NumberSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub edges: Vec<EdgeSpec>,
    pub chi: Vec<NumberSpec>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_system(&self) -> Result<MarkovSystem> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            for v in [e.from, e.to] {
                if v == 0 || v > self.n {
                    return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
                }
            }
            edges.push((e.from - 1, e.to - 1, e.p.to_number()?, e.c.to_number()?));
        }
        let chi = self.chi.iter().map(NumberSpec::to_number).collect::<Result<Vec<_>>>()?;
        MarkovSystem::from_edges(self.n, edges, chi)
    }

    /// Config describing `sys`, with exact coefficients written as fractions.
    pub fn from_system(sys: &MarkovSystem) -> Self {
        let edges = sys
            .edges()
            .map(|(i, j)| EdgeSpec {
                from: i + 1,
                to: j + 1,
                p: NumberSpec::Text(sys.p_number(i, j).to_string()),
                c: NumberSpec::Text(sys.c_number(i, j).to_string()),
            })
            .collect();
        let chi = (0..sys.n_vertices())
            .map(|i| NumberSpec::Text(sys.chi_number(i).to_string()))
            .collect();
        ModelConfig { n: sys.n_vertices(), edges, chi }
    }
}

/// Reads and parses a model file. I/O failures surface as [`Error::Io`],
/// malformed content as [`Error::Json`] or [`Error::Config`].
pub fn load_model(path: impl AsRef<Path>) -> Result<MarkovSystem> {
    let text = std::fs::read_to_string(path)?;
    ModelConfig::from_json(&text)?.to_system()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture_b;

    #[test]
    fn parses_mixed_number_forms() {
        let text = r#"{"n": 2, "edges": [
            {"from": 1, "to": 1, "p": 0.5, "c": "1/3"},
            {"from": 1, "to": 2, "p": "1/2", "c": 0.25},
            {"from": 2, "to": 1, "p": "0.5", "c": "1/3"},
            {"from": 2, "to": 2, "p": "1/2", "c": "1/3"}],
            "chi": ["1/2", 0.5]}"#;
        let sys = ModelConfig::from_json(text).unwrap().to_system().unwrap();
        assert!(sys.is_exact());
        assert_eq!(sys.c(0, 1), 0.25);
        assert_eq!(sys.p(0, 0), 0.5);
    }

    #[test]
    fn rejects_bad_vertices_and_duplicates() {
        let bad = r#"{"n": 1, "edges": [{"from": 1, "to": 2, "p": "1", "c": "0.5"}], "chi": ["1"]}"#;
        assert!(matches!(
            ModelConfig::from_json(bad).unwrap().to_system(),
            Err(Error::VertexOutOfRange { vertex: 2, n: 1 })
        ));
        let dup = r#"{"n": 1, "edges": [{"from": 1, "to": 1, "p": "1", "c": "0.5"},
            {"from": 1, "to": 1, "p": "1", "c": "0.5"}], "chi": ["1"]}"#;
        assert!(matches!(ModelConfig::from_json(dup).unwrap().to_system(), Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trip() {
        let sys = fixture_b();
        let cfg = ModelConfig::from_system(&sys);
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ModelConfig::from_json(&text).unwrap().to_system().unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(back.p_number(i, j), sys.p_number(i, j));
                assert_eq!(back.c_number(i, j), sys.c_number(i, j));
            }
        }
    }
}
