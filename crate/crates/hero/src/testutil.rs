//! Test-only dataset builders.

use crate::plan::{PlanNode, PlanTree};
use crate::replay::{schema, ReplayDataset, DATASET_VERSION};
use crate::OperatorKind;

pub(crate) fn canonical_operators() -> Vec<String> {
    OperatorKind::ALL.iter().map(|o| o.name().into()).collect()
}

/// Builds a dataset whose plan for each entry is a single node carrying the
/// latency as its statistic. Within a query, plan identity then coincides
/// with equal latency, so any latency function yields a consistent dataset.
pub(crate) fn lookup_dataset(
    dops: &[u32],
    timeout_ms: f64,
    names: &[&str],
    latency: impl Fn(&str, u8, u32) -> f64,
) -> ReplayDataset {
    let pairs: Vec<(&str, &str)> = names.iter().map(|n| (*n, *n)).collect();
    lookup_dataset_with_templates(dops, timeout_ms, &pairs, latency)
}

/// As `lookup_dataset` but with an explicit template per query.
pub(crate) fn lookup_dataset_with_templates(
    dops: &[u32],
    timeout_ms: f64,
    names: &[(&str, &str)],
    latency: impl Fn(&str, u8, u32) -> f64,
) -> ReplayDataset {
    let queries = names
        .iter()
        .map(|(name, template)| {
            let mut entries = Vec::new();
            for mask in 0..crate::hint_space::NUM_MASKS as u16 {
                for &dop in dops {
                    let ms = latency(name, mask as u8, dop);
                    let timed_out = ms > timeout_ms;
                    entries.push(schema::RawEntry {
                        ops_mask: mask as u8,
                        dop,
                        plan: PlanTree::new(PlanNode::leaf("SeqScan", ms)),
                        planning_ms: 1.0,
                        execution_ms: (!timed_out).then_some(ms),
                        timed_out,
                    });
                }
            }
            schema::RawQuery {
                name: name.to_string(),
                template: template.to_string(),
                timeout_ms,
                entries,
            }
        })
        .collect();
    ReplayDataset::from_raw(schema::RawDataset {
        version: DATASET_VERSION,
        dop_values: dops.to_vec(),
        operators: canonical_operators(),
        queries,
    })
    .unwrap()
}
