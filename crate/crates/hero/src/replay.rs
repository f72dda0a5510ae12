//! The replay oracle: a lookup table of pre-collected (query, hintset)
//! outcomes standing in for a live DBMS.
//!
//! A dataset stores, for every query and every hintset of the space, the plan
//! produced by the planner together with planning and execution times.
//! Planning is a free lookup; execution charges its latency to exploration
//! accounting and honors an optional budget with timeout semantics.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hint_space::{DopValues, HintSet, OperatorKind, ThetaId, DEFAULT_THETA_ID};
use crate::plan::{PlanKey, PlanTree};

/// Wire format of a dataset file. Field names are normative; entries may be
/// listed in any order.
pub mod schema {
    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawDataset {
        pub version: u32,
        pub dop_values: Vec<u32>,
        pub operators: Vec<String>,
        pub queries: Vec<RawQuery>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawQuery {
        pub name: String,
        pub template: String,
        pub timeout_ms: f64,
        pub entries: Vec<RawEntry>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawEntry {
        pub ops_mask: u8,
        pub dop: u32,
        pub plan: PlanTree,
        pub planning_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub execution_ms: Option<f64>,
        pub timed_out: bool,
    }
}

pub const DATASET_VERSION: u32 = 1;

/// One stored planner/executor observation for a (query, hintset) pair.
#[derive(Debug, Clone)]
pub struct PlanEntry {
    pub plan: PlanTree,
    pub planning_ms: f64,
    /// Absent when the execution hit the query timeout.
    pub execution_ms: Option<f64>,
    pub timed_out: bool,
}

/// One query of the workload, with a total entry table indexed by ThetaId.
#[derive(Debug, Clone)]
pub struct QueryRecord {
    name: String,
    template: String,
    timeout_ms: f64,
    entries: Vec<PlanEntry>,
}

impl QueryRecord {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn timeout_ms(&self) -> f64 {
        self.timeout_ms
    }

    pub fn entry(&self, id: ThetaId) -> &PlanEntry {
        &self.entries[id.0 as usize]
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    /// Latency attributed to a hintset when comparing policies: the stored
    /// execution time, or the query timeout for a timed-out entry.
    pub fn effective_latency(&self, id: ThetaId) -> f64 {
        let e = self.entry(id);
        e.execution_ms.unwrap_or(self.timeout_ms)
    }

    pub fn default_latency(&self) -> f64 {
        self.effective_latency(DEFAULT_THETA_ID)
    }

    /// Minimum effective latency over the whole space, with the smallest
    /// ThetaId among achievers.
    pub fn best_entry(&self) -> (ThetaId, f64) {
        let mut best = (DEFAULT_THETA_ID, self.default_latency());
        for (i, _) in self.entries.iter().enumerate() {
            let id = ThetaId(i as u32);
            let lat = self.effective_latency(id);
            if lat < best.1 {
                best = (id, lat);
            }
        }
        best
    }

    /// Number of distinct plans (exact identity) over the space.
    pub fn unique_plans(&self) -> usize {
        let mut seen: std::collections::HashSet<PlanKey> = std::collections::HashSet::new();
        for e in &self.entries {
            seen.insert(e.plan.identity_key());
        }
        seen.len()
    }
}

/// Result of replaying one execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    /// Observed latency; for a timed-out execution this equals the charged
    /// budget and is a lower bound on the true latency.
    pub latency_ms: f64,
    pub timed_out: bool,
    /// Time charged to exploration accounting.
    pub charged_ms: f64,
}

/// A validated replay dataset. Immutable after load; lookups are pure.
#[derive(Debug, Clone)]
pub struct ReplayDataset {
    dops: DopValues,
    queries: Vec<QueryRecord>,
    by_name: HashMap<String, usize>,
}

impl ReplayDataset {
    pub fn load(path: impl AsRef<Path>) -> Result<ReplayDataset> {
        let bytes = std::fs::read(path)?;
        let raw: schema::RawDataset = serde_json::from_slice(&bytes)?;
        ReplayDataset::from_raw(raw)
    }

    /// Validates a raw dataset: schema version, operator order, dop set,
    /// entry totality per query, timeout consistency, plan invariants, and
    /// absence of structure-digest collisions.
    pub fn from_raw(raw: schema::RawDataset) -> Result<ReplayDataset> {
        if raw.version != DATASET_VERSION {
            return Err(Error::InvalidDataset(format!(
                "unsupported dataset version {} (expected {DATASET_VERSION})",
                raw.version
            )));
        }
        let expected: Vec<String> = OperatorKind::ALL.iter().map(|o| o.name().into()).collect();
        if raw.operators != expected {
            return Err(Error::OperatorOrderMismatch {
                expected,
                found: raw.operators,
            });
        }
        let dops = DopValues::new(raw.dop_values)?;
        if raw.queries.is_empty() {
            return Err(Error::InvalidDataset("dataset contains no queries".into()));
        }

        let space = dops.space_size();
        let mut queries = Vec::with_capacity(raw.queries.len());
        let mut by_name = HashMap::new();
        // Structure digests must be collision-free within a dataset: one
        // digest, one canonical form.
        let mut digests: HashMap<u64, PlanTree> = HashMap::new();

        for rq in raw.queries {
            if by_name.contains_key(&rq.name) {
                return Err(Error::DuplicateQuery(rq.name));
            }
            if !rq.timeout_ms.is_finite() || rq.timeout_ms <= 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "query {:?} has non-positive timeout {}",
                    rq.name, rq.timeout_ms
                )));
            }
            let mut entries: Vec<Option<PlanEntry>> = (0..space).map(|_| None).collect();
            for re in rq.entries {
                let h = HintSet {
                    ops_mask: re.ops_mask,
                    dop: re.dop,
                };
                if re.ops_mask as u32 >= crate::hint_space::NUM_MASKS {
                    return Err(Error::InvalidDataset(format!(
                        "query {:?}: ops_mask {} out of range",
                        rq.name, re.ops_mask
                    )));
                }
                let id = dops.try_theta_id(&h)?;
                let slot = &mut entries[id.0 as usize];
                if slot.is_some() {
                    return Err(Error::DuplicateEntry {
                        query: rq.name,
                        theta_id: id.0,
                    });
                }
                let check = |detail: String| Error::InvalidEntry {
                    query: rq.name.clone(),
                    theta_id: id.0,
                    detail,
                };
                re.plan
                    .root()
                    .validate()
                    .map_err(|e| check(e.to_string()))?;
                if !(re.planning_ms >= 0.0 && re.planning_ms.is_finite()) {
                    return Err(check(format!("invalid planning_ms {}", re.planning_ms)));
                }
                match (re.timed_out, re.execution_ms) {
                    (true, Some(ms)) => {
                        return Err(check(format!(
                            "timed_out entry must not carry execution_ms (found {ms})"
                        )));
                    }
                    (false, None) => {
                        return Err(check("entry without execution_ms must be timed_out".into()));
                    }
                    (false, Some(ms)) => {
                        if !(ms >= 0.0 && ms.is_finite()) {
                            return Err(check(format!("invalid execution_ms {ms}")));
                        }
                        if ms > rq.timeout_ms {
                            return Err(check(format!(
                                "execution_ms {ms} exceeds timeout_ms {}",
                                rq.timeout_ms
                            )));
                        }
                    }
                    (true, None) => {}
                }
                match digests.entry(re.plan.structure_hash()) {
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(re.plan.clone());
                    }
                    std::collections::hash_map::Entry::Occupied(o) => {
                        if !same_structure(o.get().root(), re.plan.root()) {
                            return Err(check(
                                "structure digest collision between distinct plan shapes".into(),
                            ));
                        }
                    }
                }
                *slot = Some(PlanEntry {
                    plan: re.plan,
                    planning_ms: re.planning_ms,
                    execution_ms: re.execution_ms,
                    timed_out: re.timed_out,
                });
            }
            let mut total = Vec::with_capacity(space);
            for (i, slot) in entries.into_iter().enumerate() {
                match slot {
                    Some(e) => total.push(e),
                    None => {
                        return Err(Error::MissingEntry {
                            query: rq.name,
                            theta_id: i as u32,
                        });
                    }
                }
            }
            if total[DEFAULT_THETA_ID.0 as usize].timed_out {
                return Err(Error::InvalidDataset(format!(
                    "query {:?}: the default hintset entry is timed out",
                    rq.name
                )));
            }
            by_name.insert(rq.name.clone(), queries.len());
            queries.push(QueryRecord {
                name: rq.name,
                template: rq.template,
                timeout_ms: rq.timeout_ms,
                entries: total,
            });
        }

        Ok(ReplayDataset {
            dops,
            queries,
            by_name,
        })
    }

    pub fn to_raw(&self) -> schema::RawDataset {
        schema::RawDataset {
            version: DATASET_VERSION,
            dop_values: self.dops.as_slice().to_vec(),
            operators: OperatorKind::ALL.iter().map(|o| o.name().into()).collect(),
            queries: self
                .queries
                .iter()
                .map(|q| schema::RawQuery {
                    name: q.name.clone(),
                    template: q.template.clone(),
                    timeout_ms: q.timeout_ms,
                    entries: q
                        .entries
                        .iter()
                        .enumerate()
                        .map(|(i, e)| {
                            let h = self.dops.theta(ThetaId(i as u32));
                            schema::RawEntry {
                                ops_mask: h.ops_mask,
                                dop: h.dop,
                                plan: e.plan.clone(),
                                planning_ms: e.planning_ms,
                                execution_ms: e.execution_ms,
                                timed_out: e.timed_out,
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Writes the dataset in canonical form (entries in ThetaId order).
    /// Byte-identical for identical datasets.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(&self.to_raw())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn dop_values(&self) -> &DopValues {
        &self.dops
    }

    pub fn default_hintset(&self) -> HintSet {
        self.dops.default_hintset()
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn query_names(&self) -> Vec<String> {
        self.queries.iter().map(|q| q.name.clone()).collect()
    }

    pub fn query(&self, name: &str) -> Result<&QueryRecord> {
        self.by_name
            .get(name)
            .map(|i| &self.queries[*i])
            .ok_or_else(|| Error::UnknownQuery(name.into()))
    }

    /// Planner lookup: the stored plan and planning time for (query, hintset).
    /// Pure; carries no execution cost.
    pub fn get_plan(&self, query: &str, h: HintSet) -> Result<(&PlanTree, f64)> {
        let q = self.query(query)?;
        let id = self.dops.try_theta_id(&h)?;
        let e = q.entry(id);
        Ok((&e.plan, e.planning_ms))
    }

    /// Replays one execution. A stored timeout, or a stored latency above
    /// the given budget, yields a timed-out outcome charged
    /// `min(budget or timeout, timeout)`; otherwise the stored latency is
    /// both the outcome and the charge.
    pub fn execute(
        &self,
        query: &str,
        h: HintSet,
        budget_ms: Option<f64>,
    ) -> Result<ExecutionOutcome> {
        let q = self.query(query)?;
        let id = self.dops.try_theta_id(&h)?;
        let e = q.entry(id);
        let cap = budget_ms.unwrap_or(q.timeout_ms).min(q.timeout_ms);
        let outcome = match e.execution_ms {
            Some(ms) if budget_ms.is_none_or(|b| ms <= b) => ExecutionOutcome {
                latency_ms: ms,
                timed_out: false,
                charged_ms: ms,
            },
            _ => ExecutionOutcome {
                latency_ms: cap,
                timed_out: true,
                charged_ms: cap,
            },
        };
        Ok(outcome)
    }
}

/// Structural equality ignoring statistics: same operators, same shape.
fn same_structure(a: &crate::plan::PlanNode, b: &crate::plan::PlanNode) -> bool {
    a.op == b.op
        && a.children.len() == b.children.len()
        && a.children
            .iter()
            .zip(&b.children)
            .all(|(x, y)| same_structure(x, y))
}
