//! Instance files: a single JSON document carrying the graph, the exact
//! rational node weights, and the finite scenario distribution.
//!
//! All probability data stays exact: scenario probabilities are integer
//! numerators over the shared denominator M, and weights are numerator and
//! denominator pairs. Optional metadata (generator family, instance id)
//! rides along for result bookkeeping and never affects semantics.

use std::path::Path;

use num::{BigInt, BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};

use rcds_core::{FullRealization, Graph, NodeSet, ScenarioSet};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub n: usize,
    pub root: usize,
    /// Node weights as [numerator, denominator] pairs, indexed by node id.
    pub weights: Vec<(i128, i128)>,
    pub edges: Vec<(usize, usize)>,
    /// Optional grid positions as ([x num, x den], [y num, y den]) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<((i128, i128), (i128, i128))>>,
    pub scenarios: Vec<ScenarioEntry>,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioEntry {
    /// One character per node: '1' at position v when v is active.
    pub states: String,
    /// Probability numerator; the scenario has probability k/M.
    pub k: u64,
}

/// An instance read back from disk, with the metadata resolved.
#[derive(Debug)]
pub struct LoadedInstance {
    pub graph: Graph,
    pub scenarios: ScenarioSet,
    pub family: String,
    pub id: String,
}

fn rational_pair(r: &BigRational, field: &str) -> Result<(i128, i128), CliError> {
    let num = r
        .numer()
        .to_i128()
        .ok_or_else(|| CliError::Malformed(format!("{field}: numerator exceeds 128 bits")))?;
    let den = r
        .denom()
        .to_i128()
        .ok_or_else(|| CliError::Malformed(format!("{field}: denominator exceeds 128 bits")))?;
    Ok((num, den))
}

/// Encode a graph and scenario set into the file schema.
pub fn to_file(
    g: &Graph,
    s: &ScenarioSet,
    family: Option<String>,
    id: Option<String>,
) -> Result<InstanceFile, CliError> {
    let mut weights = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        weights.push(rational_pair(g.weight(v), &format!("weights[{v}]"))?);
    }
    let positions = match g.positions() {
        None => None,
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for (v, (x, y)) in list.iter().enumerate() {
                out.push((
                    rational_pair(x, &format!("positions[{v}].x"))?,
                    rational_pair(y, &format!("positions[{v}].y"))?,
                ));
            }
            Some(out)
        }
    };
    let scenarios = (0..s.len())
        .map(|i| {
            let psi = s.scenario(i);
            let states: String = (0..g.n())
                .map(|v| if psi.is_active(v) { '1' } else { '0' })
                .collect();
            ScenarioEntry { states, k: s.k(i) }
        })
        .collect();
    Ok(InstanceFile {
        version: FORMAT_VERSION,
        n: g.n(),
        root: g.root(),
        weights,
        edges: g.edges().to_vec(),
        positions,
        scenarios,
        m: s.m(),
        family,
        id,
    })
}

/// Decode and fully validate a parsed file. Every rejection names the
/// offending field.
pub fn from_file(file: &InstanceFile) -> Result<(Graph, ScenarioSet), CliError> {
    if file.version != FORMAT_VERSION {
        return Err(CliError::Malformed(format!(
            "version: expected {FORMAT_VERSION}, found {}",
            file.version
        )));
    }
    if file.weights.len() != file.n {
        return Err(CliError::Malformed(format!(
            "weights: expected {} entries, found {}",
            file.n,
            file.weights.len()
        )));
    }
    let mut weights = Vec::with_capacity(file.n);
    for (v, &(num, den)) in file.weights.iter().enumerate() {
        if den <= 0 || num < 0 {
            return Err(CliError::Malformed(format!(
                "weights[{v}]: expected nonnegative numerator and positive denominator"
            )));
        }
        weights.push(BigRational::new(BigInt::from(num), BigInt::from(den)));
    }
    let mut graph = Graph::new(file.n, file.root, &file.edges, weights)
        .map_err(|e| CliError::Malformed(format!("edges/root: {e}")))?;
    if let Some(positions) = &file.positions {
        if positions.len() != file.n {
            return Err(CliError::Malformed(format!(
                "positions: expected {} entries, found {}",
                file.n,
                positions.len()
            )));
        }
        let mut list = Vec::with_capacity(file.n);
        for (v, ((xn, xd), (yn, yd))) in positions.iter().enumerate() {
            if *xd <= 0 || *yd <= 0 {
                return Err(CliError::Malformed(format!(
                    "positions[{v}]: expected positive denominators"
                )));
            }
            list.push((
                BigRational::new(BigInt::from(*xn), BigInt::from(*xd)),
                BigRational::new(BigInt::from(*yn), BigInt::from(*yd)),
            ));
        }
        graph.set_positions(list);
    }
    if file.scenarios.is_empty() {
        return Err(CliError::Malformed("scenarios: empty".into()));
    }
    let mut scenarios = Vec::with_capacity(file.scenarios.len());
    for (i, entry) in file.scenarios.iter().enumerate() {
        if entry.states.len() != file.n || entry.states.bytes().any(|b| b != b'0' && b != b'1') {
            return Err(CliError::Malformed(format!(
                "scenarios[{i}].states: expected {} characters of '0' or '1'",
                file.n
            )));
        }
        let mut active = NodeSet::empty(file.n);
        for (v, b) in entry.states.bytes().enumerate() {
            if b == b'1' {
                active.insert(v);
            }
        }
        scenarios.push((FullRealization::new(active), entry.k));
    }
    let set = ScenarioSet::new(file.root, scenarios, file.m)
        .map_err(|e| CliError::Malformed(format!("scenarios/M: {e}")))?;
    Ok((graph, set))
}

/// Write an instance to `path` as pretty-printed JSON.
pub fn write_instance(
    path: &Path,
    g: &Graph,
    s: &ScenarioSet,
    family: Option<String>,
    id: Option<String>,
) -> Result<(), CliError> {
    let file = to_file(g, s, family, id)?;
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Malformed(format!("encoding failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Read and validate an instance from `path`. Parse failures carry the
/// line and column; the id defaults to the file stem.
pub fn read_instance(path: &Path) -> Result<LoadedInstance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Malformed(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let (graph, scenarios) = from_file(&file)?;
    let id = file.id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into())
    });
    let family = file.family.clone().unwrap_or_else(|| "custom".into());
    Ok(LoadedInstance {
        graph,
        scenarios,
        family,
        id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;
    use rcds_core::fixture_tri_branch;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn tri_branch() -> (Graph, ScenarioSet) {
        fixture_tri_branch(&BigRational::one(), &rat(2, 1), &rat(3, 1)).expect("fixture")
    }

    #[test]
    fn round_trip_preserves_the_tri_branch_instance() {
        let (g, s) = tri_branch();
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("tri.json");
        write_instance(&path, &g, &s, Some("fixture".into()), Some("tri-1".into()))
            .expect("write");
        let loaded = read_instance(&path).expect("read");
        assert_eq!(loaded.id, "tri-1");
        assert_eq!(loaded.family, "fixture");
        assert_eq!(loaded.graph.n(), g.n());
        assert_eq!(loaded.graph.root(), g.root());
        assert_eq!(loaded.graph.edges(), g.edges());
        for v in 0..g.n() {
            assert_eq!(loaded.graph.weight(v), g.weight(v));
        }
        assert_eq!(loaded.scenarios.len(), s.len());
        assert_eq!(loaded.scenarios.m(), s.m());
        for i in 0..s.len() {
            assert_eq!(loaded.scenarios.k(i), s.k(i));
            for v in 0..g.n() {
                assert_eq!(
                    loaded.scenarios.scenario(i).is_active(v),
                    s.scenario(i).is_active(v)
                );
            }
        }
    }

    #[test]
    fn missing_metadata_falls_back_to_the_file_stem() {
        let (g, s) = tri_branch();
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("plain.json");
        write_instance(&path, &g, &s, None, None).expect("write");
        let loaded = read_instance(&path).expect("read");
        assert_eq!(loaded.id, "plain");
        assert_eq!(loaded.family, "custom");
    }

    #[test]
    fn rejections_name_the_offending_field() {
        let (g, s) = tri_branch();
        let base = to_file(&g, &s, None, None).expect("encode");

        let mut bad = base.clone();
        bad.version = 2;
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("version"), "got: {err}");

        let mut bad = base.clone();
        bad.weights[3] = (1, 0);
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("weights[3]"), "got: {err}");

        let mut bad = base.clone();
        bad.weights.pop();
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("weights"), "got: {err}");

        let mut bad = base.clone();
        bad.scenarios[1].states.pop();
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("scenarios[1].states"), "got: {err}");

        let mut bad = base.clone();
        bad.scenarios[0].states = bad.scenarios[0].states.replace('1', "x");
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("scenarios[0].states"), "got: {err}");

        let mut bad = base.clone();
        bad.edges.push((0, 99));
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("edges"), "got: {err}");

        let mut bad = base;
        bad.m = 1;
        let err = from_file(&bad).unwrap_err().to_string();
        assert!(err.contains("scenarios/M"), "got: {err}");
    }

    #[test]
    fn parse_failures_carry_the_line_and_column() {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{\n  \"version\": 1,\n  oops\n}\n").expect("write");
        let err = read_instance(&path).unwrap_err().to_string();
        assert!(err.contains("broken.json"), "got: {err}");
        assert!(err.contains("line 3"), "got: {err}");
    }
}
