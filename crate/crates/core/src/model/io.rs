//! JSON file formats for pmfs and Markov triples.
//!
//! ```json
//! {"kind":"explicit","support":[0,1],"probs":[0.75,0.25]}
//! {"kind":"geometric","p":0.5}
//! {"kind":"zipf","s":2.5}
//! {"side":[[0,0,0.45],[0,1,0.05],[1,0,0.05],[1,1,0.45]],
//!  "kernel":{"0":{"kind":"explicit","support":[0,1],"probs":[0.8,0.2]}, "1": ...}}
//! ```
//!
//! An optional `tail_eps` field is accepted on every pmf.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{JointPmf2, Kernel, MarkovTriple, Pmf, PmfKind};
use crate::alphabet::Symbol;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PmfFile {
    Explicit {
        support: Vec<Symbol>,
        probs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_eps: Option<f64>,
    },
    Geometric {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_eps: Option<f64>,
    },
    Zipf {
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_eps: Option<f64>,
    },
}

impl PmfFile {
    pub fn to_pmf(&self) -> Result<Pmf> {
        let (pmf, eps) = match self {
            PmfFile::Explicit { support, probs, tail_eps } => (Pmf::explicit(support, probs)?, tail_eps),
            PmfFile::Geometric { p, tail_eps } => (Pmf::geometric(*p)?, tail_eps),
            PmfFile::Zipf { s, tail_eps } => (Pmf::zipf(*s)?, tail_eps),
        };
        match eps {
            Some(e) => pmf.with_tail_eps(*e),
            None => Ok(pmf),
        }
    }
}

impl From<&Pmf> for PmfFile {
    fn from(pmf: &Pmf) -> Self {
        let tail_eps = (pmf.tail_eps() != super::DEFAULT_TAIL_EPS).then_some(pmf.tail_eps());
        match pmf.kind() {
            PmfKind::Explicit(t) => PmfFile::Explicit {
                support: t.keys().copied().collect(),
                probs: t.values().copied().collect(),
                tail_eps,
            },
            PmfKind::Geometric { p } => PmfFile::Geometric { p: *p, tail_eps },
            PmfKind::Zipf { s } => PmfFile::Zipf { s: *s, tail_eps },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleFile {
    pub side: Vec<(Symbol, Symbol, f64)>,
    pub kernel: BTreeMap<String, PmfFile>,
}

impl TripleFile {
    pub fn to_triple(&self) -> Result<MarkovTriple> {
        let side = JointPmf2::new(self.side.iter().copied())
            .map_err(|e| Error::field("side", e.to_string()))?;
        let mut rows = Vec::with_capacity(self.kernel.len());
        for (key, row) in &self.kernel {
            let y: Symbol = key
                .parse()
                .map_err(|_| Error::field(format!("kernel.{key}"), "row key is not a nonnegative integer"))?;
            let pmf = row
                .to_pmf()
                .map_err(|e| Error::field(format!("kernel.{key}"), e.to_string()))?;
            rows.push((y, pmf));
        }
        MarkovTriple::new(side, Kernel::new(rows))
    }
}

impl From<&MarkovTriple> for TripleFile {
    fn from(t: &MarkovTriple) -> Self {
        TripleFile {
            side: t.side().entries().collect(),
            kernel: t.kernel().rows().map(|(y, r)| (y.to_string(), PmfFile::from(r))).collect(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_pmf(json: &str) -> Result<Pmf> {
    serde_json::from_str::<PmfFile>(json)?.to_pmf()
}

pub fn parse_triple(json: &str) -> Result<MarkovTriple> {
    serde_json::from_str::<TripleFile>(json)?.to_triple()
}

pub fn load_pmf(path: impl AsRef<Path>) -> Result<Pmf> {
    parse_pmf(&read(path.as_ref())?)
}

pub fn load_triple(path: impl AsRef<Path>) -> Result<MarkovTriple> {
    parse_triple(&read(path.as_ref())?)
}

pub fn triple_to_json(t: &MarkovTriple) -> String {
    serde_json::to_string_pretty(&TripleFile::from(t)).expect("triple serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_normative_pmf_forms() {
        let e = parse_pmf(r#"{"kind":"explicit","support":[3,7],"probs":[0.75,0.25]}"#).unwrap();
        assert_eq!(e.mass(3), 0.75);
        let g = parse_pmf(r#"{"kind":"geometric","p":0.5}"#).unwrap();
        assert_eq!(g.mass(1), 0.25);
        let z = parse_pmf(r#"{"kind":"zipf","s":2.5,"tail_eps":1e-6}"#).unwrap();
        assert_eq!(z.tail_eps(), 1e-6);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = parse_pmf(r#"{"kind":"geometric","q":0.5}"#).unwrap_err().to_string();
        assert!(err.contains("q") || err.contains("`p`"), "{err}");
        let err = parse_triple(r#"{"side":[[0,0,1.0]],"kernel":{"zero":{"kind":"geometric","p":0.5}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("kernel.zero"), "{err}");
        let err = parse_triple(r#"{"side":[[0,0,1.0]],"kernel":{"0":{"kind":"geometric","p":1.5}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("kernel.0"), "{err}");
        let err = parse_triple(r#"{"side":[[0,0,0.5]],"kernel":{"0":{"kind":"geometric","p":0.5}}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("side"), "{err}");
    }

    #[test]
    fn triple_json_round_trip() {
        let json = r#"{"side":[[0,0,0.45],[0,1,0.05],[1,0,0.05],[1,1,0.45]],
            "kernel":{"0":{"kind":"explicit","support":[0,1],"probs":[0.8,0.2]},
                      "1":{"kind":"geometric","p":0.4}}}"#;
        let t = parse_triple(json).unwrap();
        let back = parse_triple(&triple_to_json(&t)).unwrap();
        assert_eq!(TripleFile::from(&t), TripleFile::from(&back));
    }
}
