//! JSON instance files.
//!
//! ```json
//! {
//!   "nodes": [{"index": 0, "label": "X1", "hidden": false, "intervenable": true, "reward": false}, ...],
//!   "edges": [[0, 1], ...],
//!   "bidirected": [],
//!   "cpts": [{"node": 1, "parent_order": [0], "table": [0.25, 0.75]}, ...]
//! }
//! ```
//!
//! Tables use the little-endian bitmask convention of [`Cpt`]. Probabilities
//! are written with shortest round-trip formatting, so a save/load cycle is
//! bit-exact. A file may omit `cpts` to describe a bare graph; such files can
//! be inspected structurally but not sampled.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cbn, Cpt};
use crate::admg::{Admg, NodeId};
use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub index: usize,
    pub label: String,
    #[serde(default)]
    pub hidden: bool,
    #[serde(default)]
    pub intervenable: bool,
    #[serde(default)]
    pub reward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptEntry {
    pub node: usize,
    pub parent_order: Vec<usize>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub bidirected: Vec<[usize; 2]>,
    #[serde(default)]
    pub cpts: Vec<CptEntry>,
}

impl InstanceFile {
    pub fn from_graph(g: &Admg) -> Self {
        let nodes = g
            .nodes()
            .map(|v| NodeEntry {
                index: v.0,
                label: g.label(v).to_string(),
                hidden: g.is_hidden(v),
                intervenable: g.is_intervenable(v),
                reward: g.reward() == v,
            })
            .collect();
        InstanceFile {
            nodes,
            edges: g.directed_edges().iter().map(|(a, b)| [a.0, b.0]).collect(),
            bidirected: g
                .bidirected_edges()
                .iter()
                .map(|(a, b)| [a.0, b.0])
                .collect(),
            cpts: Vec::new(),
        }
    }

    pub fn from_cbn(cbn: &Cbn) -> Self {
        let mut file = Self::from_graph(cbn.graph());
        file.cpts = cbn
            .cpts()
            .iter()
            .map(|c| CptEntry {
                node: c.owner.0,
                parent_order: c.parent_order.iter().map(|p| p.0).collect(),
                table: c.table.clone(),
            })
            .collect();
        file
    }

    pub fn has_tables(&self) -> bool {
        !self.cpts.is_empty()
    }

    pub fn to_graph(&self) -> Result<Admg> {
        for (k, node) in self.nodes.iter().enumerate() {
            if node.index != k {
                return Err(ModelError::Format(format!(
                    "node entries must be listed by dense index; entry {k} has index {}",
                    node.index
                )));
            }
        }
        let mut b = Admg::builder();
        let ids: Vec<NodeId> = self
            .nodes
            .iter()
            .map(|n| {
                if n.hidden {
                    b.hidden_node(n.label.clone())
                } else {
                    b.node(n.label.clone())
                }
            })
            .collect();
        let rewards: Vec<&NodeEntry> = self.nodes.iter().filter(|n| n.reward).collect();
        if rewards.len() != 1 {
            return Err(ModelError::Format(format!(
                "expected exactly one reward node, found {}",
                rewards.len()
            )));
        }
        let id = |i: usize| NodeId(i);
        for &[a, c] in &self.edges {
            b.edge(id(a), id(c));
        }
        for &[a, c] in &self.bidirected {
            b.bidirected(id(a), id(c));
        }
        for (n, &v) in self.nodes.iter().zip(&ids) {
            if n.intervenable {
                b.intervenable(v);
            }
        }
        b.reward(id(rewards[0].index));
        b.build()
    }

    pub fn to_cbn(&self) -> Result<Cbn> {
        if !self.has_tables() {
            return Err(ModelError::Format(
                "instance has no conditional probability tables".into(),
            ));
        }
        let graph = self.to_graph()?;
        let mut cpts = Vec::with_capacity(self.cpts.len());
        for c in &self.cpts {
            if c.node >= graph.len() {
                return Err(ModelError::NodeOutOfRange {
                    index: c.node,
                    len: graph.len(),
                });
            }
            if let Some(&p) = c.parent_order.iter().find(|&&p| p >= graph.len()) {
                return Err(ModelError::NodeOutOfRange {
                    index: p,
                    len: graph.len(),
                });
            }
            cpts.push(Cpt::new(
                NodeId(c.node),
                c.parent_order.iter().map(|&p| NodeId(p)).collect(),
                c.table.clone(),
            )?);
        }
        Cbn::new(graph, cpts)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn save_instance(cbn: &Cbn, path: impl AsRef<Path>) -> Result<()> {
    let mut text = InstanceFile::from_cbn(cbn).to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Cbn> {
    InstanceFile::read(path)?.to_cbn()
}
