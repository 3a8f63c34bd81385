//! Hierarchical attributed relational graphs.
//!
//! [`construct_harg`] turns a property record into a rooted multi-level
//! graph: record metadata as level-1 leaves, primary entities at level 1,
//! entity attributes as leaves one level below their entity, and relations
//! as labeled edges (a secondary object hangs one level below its subject;
//! two primaries connect on their own level). [`discover_eplv`] condenses
//! the graph into its entity-with-property-in-leaf vertices — the unit of
//! assignment for content edit distance.

use crate::property::{PropertyRecord, PropertyValue};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const ROOT_LABEL: &str = "ROOT";
/// Leaf label for a declared-but-empty property value.
pub const NULL_LABEL: &str = "NULL";
pub const HAS_ENTITY_LABEL: &str = "hasEntity";
pub const METADATA_PREFIX: &str = "metadata:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HargNode {
    pub id: usize,
    pub level: u32,
    pub label: String,
    pub is_leaf: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HargEdge {
    pub from: usize,
    pub to: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Harg {
    pub sample_id: String,
    pub nodes: Vec<HargNode>,
    pub edges: Vec<HargEdge>,
}

impl Harg {
    pub fn node(&self, id: usize) -> &HargNode {
        &self.nodes[id]
    }

    /// Deterministic JSON dump for golden-file comparison.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    /// DOT export for eyeballing graphs.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", self.sample_id);
        for node in &self.nodes {
            let shape = if node.is_leaf { "box" } else { "ellipse" };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", shape={}];",
                node.id, node.label, shape
            );
        }
        for edge in &self.edges {
            let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", edge.from, edge.to, edge.label);
        }
        out.push_str("}\n");
        out
    }

    fn is_entity(&self, id: usize) -> bool {
        let node = &self.nodes[id];
        !node.is_leaf && node.level >= 1
    }
}

/// An entity node bundled with its leaf-attached property values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EplVertex {
    pub id: usize,
    pub entity_type: String,
    pub level: u32,
    pub props: BTreeMap<String, PropertyValue>,
    pub parent: Option<usize>,
    pub adjacent_edge_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EplGraph {
    pub sample_id: String,
    pub root: usize,
    pub vertices: Vec<EplVertex>,
}

impl EplGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: usize) -> Option<&EplVertex> {
        self.vertices.iter().find(|v| v.id == id)
    }
}

struct Builder {
    nodes: Vec<HargNode>,
    edges: Vec<HargEdge>,
}

impl Builder {
    fn add_node(&mut self, level: u32, label: impl Into<String>, is_leaf: bool) -> usize {
        let id = self.nodes.len();
        self.nodes.push(HargNode {
            id,
            level,
            label: label.into(),
            is_leaf,
        });
        id
    }

    fn add_edge(&mut self, from: usize, to: usize, label: impl Into<String>) {
        self.edges.push(HargEdge {
            from,
            to,
            label: label.into(),
        });
    }

    /// One leaf per token of the value, or a single NULL leaf when empty.
    fn add_value_leaves(&mut self, parent: usize, level: u32, label: &str, value: &PropertyValue) {
        let tokens = value.tokens();
        if tokens.is_empty() {
            let leaf = self.add_node(level, NULL_LABEL, true);
            self.add_edge(parent, leaf, label);
        } else {
            for token in tokens {
                let leaf = self.add_node(level, token.clone(), true);
                self.add_edge(parent, leaf, label);
            }
        }
    }
}

/// Build the hierarchical graph for one record. Node ids are assigned in a
/// fixed order (root, metadata leaves by name, entities in record order,
/// attribute leaves by name) so equal records produce identical graphs.
pub fn construct_harg(record: &PropertyRecord) -> Harg {
    let mut b = Builder {
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let root = b.add_node(0, ROOT_LABEL, false);

    for (name, value) in &record.metadata {
        b.add_value_leaves(root, 1, &format!("{METADATA_PREFIX}{name}"), value);
    }

    let mut node_of: BTreeMap<&str, usize> = BTreeMap::new();
    for entity in &record.entities {
        let id = b.add_node(0, entity.entity_type.clone(), false);
        node_of.insert(entity.id.as_str(), id);
    }

    // Placement: primaries at level 1, secondaries one level below the
    // subject that references them, leftovers at level 1.
    let mut level_of: BTreeMap<usize, u32> = BTreeMap::new();
    for entity in &record.entities {
        if entity.primary {
            let id = node_of[entity.id.as_str()];
            level_of.insert(id, 1);
            b.add_edge(root, id, HAS_ENTITY_LABEL);
        }
    }
    let mut pending: Vec<&crate::property::Relation> = record.relations.iter().collect();
    loop {
        let mut progressed = false;
        pending.retain(|rel| {
            let subj = node_of[rel.subject.as_str()];
            let obj = node_of[rel.object.as_str()];
            match (level_of.get(&subj).copied(), level_of.get(&obj).copied()) {
                (Some(level), None) => {
                    level_of.insert(obj, level + 1);
                    b.add_edge(subj, obj, rel.name.clone());
                    progressed = true;
                    false
                }
                (Some(_), Some(_)) => {
                    // Both placed already: connect shallow end to deep end so
                    // edges never point up the hierarchy. Edges that would
                    // span more than one level are dropped.
                    let (from, to) = if level_of[&subj] <= level_of[&obj] {
                        (subj, obj)
                    } else {
                        (obj, subj)
                    };
                    if level_of[&to] - level_of[&from] <= 1 {
                        b.add_edge(from, to, rel.name.clone());
                    }
                    progressed = true;
                    false
                }
                _ => true,
            }
        });
        if !progressed {
            break;
        }
    }
    // Entities not reachable through any relation still belong to the sample.
    for entity in &record.entities {
        let id = node_of[entity.id.as_str()];
        if let std::collections::btree_map::Entry::Vacant(slot) = level_of.entry(id) {
            slot.insert(1);
            b.add_edge(root, id, HAS_ENTITY_LABEL);
        }
    }
    // Relations whose subject was unplaced when first seen.
    for rel in pending {
        let subj = node_of[rel.subject.as_str()];
        let obj = node_of[rel.object.as_str()];
        let (from, to) = if level_of[&subj] <= level_of[&obj] {
            (subj, obj)
        } else {
            (obj, subj)
        };
        if level_of[&to] - level_of[&from] <= 1 {
            b.add_edge(from, to, rel.name.clone());
        }
    }
    for (&id, &level) in &level_of {
        b.nodes[id].level = level;
    }

    for entity in &record.entities {
        let id = node_of[entity.id.as_str()];
        let level = b.nodes[id].level;
        for (name, value) in &entity.attrs {
            b.add_value_leaves(id, level + 1, name, value);
        }
    }

    b.edges.sort_by(|a, c| {
        (a.from, a.to, a.label.as_str()).cmp(&(c.from, c.to, c.label.as_str()))
    });
    Harg {
        sample_id: record.id.clone(),
        nodes: b.nodes,
        edges: b.edges,
    }
}

/// Condense a graph into its EPL vertices: one per entity node plus one for
/// the root (record metadata lives there).
pub fn discover_eplv(g: &Harg) -> EplGraph {
    let mut vertices = Vec::new();
    for node in &g.nodes {
        if node.is_leaf {
            continue;
        }
        let mut props: BTreeMap<String, Vec<&HargNode>> = BTreeMap::new();
        for edge in &g.edges {
            if edge.from == node.id && g.nodes[edge.to].is_leaf {
                let name = edge
                    .label
                    .strip_prefix(METADATA_PREFIX)
                    .unwrap_or(&edge.label)
                    .to_string();
                props.entry(name).or_default().push(&g.nodes[edge.to]);
            }
        }
        let props: BTreeMap<String, PropertyValue> = props
            .into_iter()
            .map(|(name, mut leaves)| {
                leaves.sort_by_key(|leaf| leaf.id);
                let values: Vec<String> = leaves
                    .iter()
                    .filter(|leaf| leaf.label != NULL_LABEL)
                    .map(|leaf| leaf.label.clone())
                    .collect();
                let value = match values.len() {
                    0 => PropertyValue::null(),
                    1 => PropertyValue::Scalar(values.into_iter().next().unwrap()),
                    _ => PropertyValue::List(values),
                };
                (name, value)
            })
            .collect();

        // Parent edge: the incoming edge from one level up.
        let parent_edge = g
            .edges
            .iter()
            .filter(|e| e.to == node.id && g.nodes[e.from].level + 1 == node.level)
            .min_by_key(|e| e.from);
        let parent = parent_edge.map(|e| e.from);

        let mut labels: Vec<String> = Vec::new();
        if let Some(edge) = parent_edge {
            labels.push(edge.label.clone());
        }
        for edge in &g.edges {
            let other = if edge.from == node.id {
                edge.to
            } else if edge.to == node.id {
                edge.from
            } else {
                continue;
            };
            if g.is_entity(other) && !labels.contains(&edge.label) {
                labels.push(edge.label.clone());
            }
        }

        vertices.push(EplVertex {
            id: node.id,
            entity_type: node.label.clone(),
            level: node.level,
            props,
            parent,
            adjacent_edge_labels: labels,
        });
    }
    EplGraph {
        sample_id: g.sample_id.clone(),
        root: 0,
        vertices,
    }
}
