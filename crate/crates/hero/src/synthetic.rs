//! Seeded synthetic dataset generator for desk-scale testing.
//!
//! The generator mirrors the phenomena the rest of the crate cares about:
//! queries that share identical default plans (collisions), many hintsets
//! mapping onto few distinct plans per query, dop-dependent plans, occasional
//! timeouts, and a unique per-query optimum. Latency is a pure function of
//! (query, plan), so outcome reuse for identical plans is sound.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::plan::{PlanNode, PlanTree};
use crate::replay::{schema, ReplayDataset, DATASET_VERSION};
use crate::OperatorKind;

const JOIN_OPS: [&str; 3] = ["NestedLoopJoin", "HashJoin", "MergeJoin"];
const SCAN_OPS: [&str; 4] = ["SeqScan", "IndexScan", "IndexOnlyScan", "BitmapScan"];

/// Builds a left-deep join chain. Statistics are drawn per node, so two
/// chains with equal shape still form distinct plans.
fn draw_core(rng: &mut ChaCha8Rng, extra_depth: usize) -> PlanNode {
    let depth = rng.gen_range(2..=5) + extra_depth;
    let rows = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(0.0..6.0)).round();
    let leaf = |rng: &mut ChaCha8Rng| {
        let op = SCAN_OPS[rng.gen_range(0..SCAN_OPS.len())];
        PlanNode::leaf(op, rows(rng))
    };
    let mut node = leaf(rng);
    for _ in 0..depth {
        let op = JOIN_OPS[rng.gen_range(0..JOIN_OPS.len())];
        let r = rows(rng);
        node = PlanNode::new(op, r, vec![node, leaf(rng)]);
    }
    node
}

/// Draws a core whose structure digest is new to `taken`.
fn draw_fresh_core(rng: &mut ChaCha8Rng, taken: &mut HashSet<u64>) -> PlanNode {
    let mut attempt = 0usize;
    loop {
        let core = draw_core(rng, attempt / 8);
        let hash = PlanTree::new(core.clone()).structure_hash();
        if taken.insert(hash) {
            return core;
        }
        attempt += 1;
    }
}

/// A plan for one (variant, dop) cell: the variant core under a parallelism
/// marker whose statistic carries the dop, so plans differ across dops and
/// latency stays a function of the plan.
fn with_dop_marker(core: &PlanNode, dop: u32) -> PlanTree {
    PlanTree::new(PlanNode::new("Gather", dop as f64, vec![core.clone()]))
}

/// Spreadsheet-style letter suffix: 0 -> "a", 25 -> "z", 26 -> "aa".
fn letter_suffix(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// Generates a validated dataset, deterministic for a fixed seed.
///
/// `collision_rate` is the probability that each query after the first joins
/// an existing group; members of a group share an identical default plan and
/// a template named after the group.
pub fn generate_synthetic(
    seed: u64,
    n_queries: usize,
    dop_values: &[u32],
    collision_rate: f64,
) -> Result<ReplayDataset> {
    if n_queries == 0 {
        return Err(Error::InvalidConfig("n_queries must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&collision_rate) {
        return Err(Error::InvalidConfig(format!(
            "collision_rate {collision_rate} outside [0, 1]"
        )));
    }
    let dops = crate::DopValues::new(dop_values.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    struct Group {
        core: PlanNode,
        members: usize,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut group_hashes: HashSet<u64> = HashSet::new();
    let mut queries = Vec::with_capacity(n_queries);

    for qi in 0..n_queries {
        let gi = if qi > 0 && rng.gen_bool(collision_rate) {
            rng.gen_range(0..groups.len())
        } else {
            groups.push(Group {
                core: draw_fresh_core(&mut rng, &mut group_hashes),
                members: 0,
            });
            groups.len() - 1
        };
        let template = (gi + 1).to_string();
        let name = format!("{template}{}", letter_suffix(groups[gi].members));
        groups[gi].members += 1;

        // Variant 0 is the group's shared default core; the rest are
        // query-specific shapes, digest-distinct within this query.
        let n_variants = rng.gen_range(4..=8usize);
        let mut cores = vec![groups[gi].core.clone()];
        let mut taken: HashSet<u64> = cores
            .iter()
            .map(|c| PlanTree::new(c.clone()).structure_hash())
            .collect();
        for _ in 1..n_variants {
            cores.push(draw_fresh_core(&mut rng, &mut taken));
        }

        // The planner model: which variant each ops_mask produces. Mask 0
        // always keeps the default shape.
        let variant_of: Vec<usize> = (0..crate::hint_space::NUM_MASKS as usize)
            .map(|mask| {
                if mask == 0 {
                    0
                } else {
                    rng.gen_range(0..n_variants)
                }
            })
            .collect();

        // Latency per (variant, dop) cell: base x 2^u. The default cell is
        // pinned near the base so it never times out; cells are nudged until
        // pairwise distinct so a unique optimal plan exists.
        let base = 50.0 * 10f64.powf(rng.gen_range(0.0..2.0));
        let timeout_ms = 6.0 * base;
        let mut seen_bits: HashSet<u64> = HashSet::new();
        let mut lat = vec![vec![0.0f64; dops.len()]; n_variants];
        let mut planning = vec![vec![0.0f64; dops.len()]; n_variants];
        for (v, row) in lat.iter_mut().enumerate() {
            for (d, cell) in row.iter_mut().enumerate() {
                let u = if v == 0 && d == 0 {
                    rng.gen_range(-0.5..0.5)
                } else {
                    rng.gen_range(-3.0..3.0)
                };
                let mut ms = base * 2f64.powf(u);
                while !seen_bits.insert(ms.to_bits()) {
                    ms *= 1.0 + 1e-7;
                }
                *cell = ms;
            }
        }
        for row in planning.iter_mut() {
            for cell in row.iter_mut() {
                *cell = rng.gen_range(0.5..5.0);
            }
        }

        let mut entries = Vec::with_capacity(dops.space_size());
        for (mask, &v) in variant_of.iter().enumerate() {
            for (d, &dop) in dops.as_slice().iter().enumerate() {
                let ms = lat[v][d];
                let timed_out = ms > timeout_ms;
                entries.push(schema::RawEntry {
                    ops_mask: mask as u8,
                    dop,
                    plan: with_dop_marker(&cores[v], dop),
                    planning_ms: planning[v][d],
                    execution_ms: (!timed_out).then_some(ms),
                    timed_out,
                });
            }
        }
        queries.push(schema::RawQuery {
            name,
            template,
            timeout_ms,
            entries,
        });
    }

    ReplayDataset::from_raw(schema::RawDataset {
        version: DATASET_VERSION,
        dop_values: dop_values.to_vec(),
        operators: OperatorKind::ALL.iter().map(|o| o.name().into()).collect(),
        queries,
    })
}
