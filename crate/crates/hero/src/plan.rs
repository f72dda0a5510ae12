//! Execution plans as operator trees with per-node statistics.
//!
//! A plan's *logical structure* is its operator names and tree shape with all
//! statistics stripped. Structure is summarized by a stable 64-bit digest;
//! the statistics live in a preorder vector of estimated cardinalities. Plans
//! with different structures are infinitely distant; plans with the same
//! structure are compared by the mean relative difference of their
//! statistics vectors.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One node of an execution plan. Operator names are an open set (plans may
/// contain operators beyond the seven hintable kinds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    pub op: String,
    pub est_rows: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub est_cost: Option<f64>,
    #[serde(default)]
    pub children: Vec<PlanNode>,
}

impl PlanNode {
    pub fn new(op: impl Into<String>, est_rows: f64, children: Vec<PlanNode>) -> PlanNode {
        PlanNode {
            op: op.into(),
            est_rows,
            est_cost: None,
            children,
        }
    }

    pub fn leaf(op: impl Into<String>, est_rows: f64) -> PlanNode {
        PlanNode::new(op, est_rows, Vec::new())
    }

    /// Checks the node invariants recursively: cardinalities are finite and
    /// non-negative, nodes have at most two children.
    pub fn validate(&self) -> Result<()> {
        if !self.est_rows.is_finite() || self.est_rows < 0.0 {
            return Err(Error::InvalidDataset(format!(
                "plan node {:?} has invalid est_rows {}",
                self.op, self.est_rows
            )));
        }
        if let Some(c) = self.est_cost {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "plan node {:?} has invalid est_cost {c}",
                    self.op
                )));
            }
        }
        if self.children.len() > 2 {
            return Err(Error::InvalidDataset(format!(
                "plan node {:?} has {} children (at most 2 allowed)",
                self.op,
                self.children.len()
            )));
        }
        for child in &self.children {
            child.validate()?;
        }
        Ok(())
    }

    fn count_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(PlanNode::count_nodes)
            .sum::<usize>()
    }
}

/// A plan with its precomputed structure digest and statistics vector.
///
/// Serializes as the bare root node, which is exactly the plan object of the
/// dataset file format; the derived fields are recomputed on deserialization.
#[derive(Debug, Clone)]
pub struct PlanTree {
    root: PlanNode,
    structure_hash: u64,
    stats_vector: Vec<f64>,
}

impl PlanTree {
    pub fn new(root: PlanNode) -> PlanTree {
        let structure_hash = hash_structure(&root);
        let mut stats_vector = Vec::with_capacity(root.count_nodes());
        collect_stats(&root, &mut stats_vector);
        PlanTree {
            root,
            structure_hash,
            stats_vector,
        }
    }

    pub fn root(&self) -> &PlanNode {
        &self.root
    }

    /// Digest of the stats-free canonical form: operator names and tree
    /// shape only. Stable across runs and platforms.
    pub fn structure_hash(&self) -> u64 {
        self.structure_hash
    }

    /// Estimated cardinalities in preorder.
    pub fn stats_vector(&self) -> &[f64] {
        &self.stats_vector
    }

    /// Exact-identity key: structure digest plus bit-exact statistics.
    pub fn identity_key(&self) -> PlanKey {
        PlanKey {
            structure_hash: self.structure_hash,
            stats_bits: self.stats_vector.iter().map(|v| v.to_bits()).collect(),
        }
    }
}

impl PartialEq for PlanTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Serialize for PlanTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.root.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PlanTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        PlanNode::deserialize(deserializer).map(PlanTree::new)
    }
}

/// Hash-map key for exact plan identity (structure and statistics).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanKey {
    structure_hash: u64,
    stats_bits: Vec<u64>,
}

// FNV-1a over the canonical preorder serialization. The canonical form is a
// parenthesized preorder walk with length-prefixed operator names, so no
// operator name can collide with tree punctuation.
const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn hash_structure(root: &PlanNode) -> u64 {
    fn feed(h: &mut u64, bytes: &[u8]) {
        for b in bytes {
            *h ^= *b as u64;
            *h = h.wrapping_mul(FNV_PRIME);
        }
    }
    fn walk(node: &PlanNode, h: &mut u64) {
        feed(h, b"(");
        feed(h, &(node.op.len() as u32).to_le_bytes());
        feed(h, node.op.as_bytes());
        for child in &node.children {
            walk(child, h);
        }
        feed(h, b")");
    }
    let mut h = FNV_OFFSET;
    walk(root, &mut h);
    h
}

fn collect_stats(node: &PlanNode, out: &mut Vec<f64>) {
    out.push(node.est_rows);
    for child in &node.children {
        collect_stats(child, out);
    }
}

/// Distance between two plans: infinite when the logical structures differ,
/// otherwise the mean relative difference of the statistics vectors,
/// `(1/n) * sum_i |a_i - b_i| / max(a_i, b_i, 1)`.
pub fn plan_distance(a: &PlanTree, b: &PlanTree) -> f64 {
    if a.structure_hash != b.structure_hash {
        return f64::INFINITY;
    }
    let (va, vb) = (a.stats_vector(), b.stats_vector());
    if va.len() != vb.len() {
        // Equal digests imply equal shapes; a length mismatch means a hash
        // collision between distinct structures.
        return f64::INFINITY;
    }
    let n = va.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = va
        .iter()
        .zip(vb)
        .map(|(x, y)| (x - y).abs() / x.max(*y).max(1.0))
        .sum();
    sum / n as f64
}

/// Exact plan identity: equal structure and element-wise equal statistics.
/// This is the dedup relation for execution: identical plans are executed
/// once.
pub fn plan_identity(a: &PlanTree, b: &PlanTree) -> bool {
    a.structure_hash == b.structure_hash && a.stats_vector == b.stats_vector
}
