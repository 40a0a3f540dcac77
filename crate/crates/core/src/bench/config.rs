use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{generate_graph, BenchError, GraphKind, GraphSpec};
use crate::agent::Hyperparams;
use crate::compiler::HardwareParams;
use crate::graph::GraphState;

/// Source label for generator output standing in for circuit-derived benchmarks.
pub const SYNTHETIC: &str = "synthetic stand-in";

/// One `[[graph]]` table: either an edge-list `file` or a generator `kind` with `n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl GraphEntry {
    pub fn generated(spec: &GraphSpec) -> Self {
        GraphEntry {
            name: None,
            file: None,
            kind: Some(spec.kind.to_string()),
            n: Some(spec.n),
            seed: spec.seed,
        }
    }

    /// Loads or generates the graph; relative files resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<NamedGraph, BenchError> {
        match (&self.file, &self.kind) {
            (Some(file), None) => {
                let path = base.join(file);
                let text = fs::read_to_string(&path).map_err(|e| {
                    BenchError::Config(format!("graph file {}: {e}", path.display()))
                })?;
                let graph = GraphState::from_edge_list(&text)?;
                let name = self.name.clone().unwrap_or_else(|| {
                    file.file_stem().map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned())
                });
                Ok(NamedGraph { name, source: format!("file:{}", file.display()), graph })
            }
            (None, Some(kind)) => {
                let kind: GraphKind = kind.parse()?;
                let n = self
                    .n
                    .ok_or_else(|| BenchError::Config(format!("graph kind {kind} needs n")))?;
                let spec = GraphSpec::new(kind, n, self.seed);
                Ok(NamedGraph {
                    name: self.name.clone().unwrap_or_else(|| spec.name()),
                    source: SYNTHETIC.to_string(),
                    graph: generate_graph(&spec)?,
                })
            }
            _ => Err(BenchError::Config("each graph needs exactly one of `file` or `kind`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedGraph {
    pub name: String,
    /// `file:<path>` or [`SYNTHETIC`].
    pub source: String,
    pub graph: GraphState,
}

impl NamedGraph {
    pub fn from_spec(spec: &GraphSpec) -> Result<Self, BenchError> {
        GraphEntry::generated(spec).resolve(Path::new("."))
    }
}

/// Experiment configuration, read from TOML:
///
/// ```toml
/// [hardware]
/// t_cz_ns = 10.0
/// [train]
/// episodes = 300
/// [[graph]]
/// kind = "cycle"
/// n = 10
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub hardware: HardwareParams,
    #[serde(default)]
    pub train: Hyperparams,
    #[serde(default, rename = "graph")]
    pub graphs: Vec<GraphEntry>,
    /// Directory relative graph files resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, BenchError> {
        let mut cfg: Config =
            toml::from_str(text).map_err(|e| BenchError::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.hardware.validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(BenchError::io(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            BenchError::Config(m) => BenchError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every configured graph, in file order. Fails before any work if one is unusable.
    pub fn load_graphs(&self) -> Result<Vec<NamedGraph>, BenchError> {
        if self.graphs.is_empty() {
            return Err(BenchError::Config("no [[graph]] entries".into()));
        }
        self.graphs.iter().map(|g| g.resolve(&self.base_dir)).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config tables serialise")
    }
}

/// Default hyperparameters on path-10, star-10 and cycle-10.
pub fn default_training_config() -> Config {
    let graphs = [GraphKind::Path, GraphKind::Star, GraphKind::Cycle]
        .into_iter()
        .map(|kind| GraphEntry::generated(&GraphSpec::new(kind, 10, 0)))
        .collect();
    Config { graphs, ..Config::default() }
}
