//! Graph storage of observed plans and the inference built on it.
//!
//! Vertices are distinct plans; edges record, anchored at a query's
//! default-plan vertex, which hintset produced which plan and at what
//! latency. The out-edge set of an anchor is one context model. Inference
//! finds the nearest stored anchor for a fresh default plan, plans the
//! model's most promising hintsets, and recommends one only if the plan it
//! produces now stays within distance tau of the plan the storage observed;
//! otherwise it falls back to the default hintset.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hint_space::{DopValues, HintSet, ThetaId, DEFAULT_THETA_ID};
use crate::plan::{plan_distance, PlanKey, PlanTree};
use crate::replay::ReplayDataset;
use crate::search::ExplorationLog;

pub type VertexId = u64;

/// One distinct observed plan.
#[derive(Debug, Clone)]
pub struct PlanVertex {
    pub id: VertexId,
    pub plan: PlanTree,
    /// Template of the query whose exploration first anchored here; targets
    /// never used as an anchor keep the template of the log that added them.
    pub template: String,
    pub enabled: bool,
    /// Minimum latency seen for this plan; a lower bound where the only
    /// observations timed out.
    pub best_latency_ms: f64,
}

/// One observed transition: applying `theta` to the query anchored at
/// `from` produced the plan at `to`.
#[derive(Debug, Clone)]
pub struct HintEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub theta: HintSet,
    pub source_latency_ms: f64,
    pub target_latency_ms: f64,
    pub timed_out: bool,
}

impl HintEdge {
    /// Speedup of the transition; > 1 means the hint helped.
    pub fn boost(&self) -> f64 {
        self.source_latency_ms / self.target_latency_ms
    }
}

/// An anchor vertex together with its out-edges; a view, never stored.
#[derive(Debug, Clone)]
pub struct ContextModel<'a> {
    pub anchor: &'a PlanVertex,
    pub edges: Vec<&'a HintEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Plan-distance threshold for both model matching and the guard.
    pub tau: f64,
    pub top_k: usize,
    pub min_boost: f64,
    pub super_fast: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            tau: 0.1,
            top_k: 3,
            min_boost: 1.1,
            super_fast: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau {} invalid", self.tau)));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        if !(self.min_boost >= 1.0 && self.min_boost.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "min_boost {} must be at least 1",
                self.min_boost
            )));
        }
        Ok(())
    }
}

/// How one inference reached its answer.
#[derive(Debug, Clone, Serialize)]
pub struct InferenceReport {
    pub query: String,
    pub chosen: HintSet,
    pub chosen_theta_id: ThetaId,
    /// Every planner call made, default hintset first.
    pub planned: Vec<HintSet>,
    /// Total planning time of those calls: the model overhead added on top
    /// of executing the chosen hintset.
    pub planning_ms: f64,
    pub model_anchor: Option<VertexId>,
    pub candidates: usize,
    pub decision_path: DecisionPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionPath {
    /// No enabled model within tau of the fresh default plan.
    NoModel,
    /// A model matched but offered no hint above min_boost.
    NoCandidates,
    /// Every candidate's fresh plan drifted beyond tau from the stored one.
    GuardRejectedAll,
    Chosen,
    /// Super-fast path found no model with the query's template.
    NoMatchingTemplate,
}

impl std::fmt::Display for DecisionPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DecisionPath::NoModel => "no_model",
            DecisionPath::NoCandidates => "no_candidates",
            DecisionPath::GuardRejectedAll => "guard_rejected_all",
            DecisionPath::Chosen => "chosen",
            DecisionPath::NoMatchingTemplate => "no_matching_template",
        };
        f.write_str(s)
    }
}

/// Wire format of a storage file.
pub mod schema {
    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawStorage {
        pub vertices: Vec<RawVertex>,
        pub edges: Vec<RawEdge>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawVertex {
        pub id: VertexId,
        pub plan: PlanTree,
        pub template: String,
        pub enabled: bool,
        pub best_latency_ms: f64,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    pub struct RawEdge {
        pub from: VertexId,
        pub to: VertexId,
        pub ops_mask: u8,
        pub dop: u32,
        pub source_latency_ms: f64,
        pub target_latency_ms: f64,
        pub timed_out: bool,
    }
}

/// Value identity of an edge, for idempotent ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct EdgeKey {
    from: VertexId,
    to: VertexId,
    theta: HintSet,
    source_bits: u64,
    target_bits: u64,
    timed_out: bool,
}

impl EdgeKey {
    fn of(e: &HintEdge) -> EdgeKey {
        EdgeKey {
            from: e.from,
            to: e.to,
            theta: e.theta,
            source_bits: e.source_latency_ms.to_bits(),
            target_bits: e.target_latency_ms.to_bits(),
            timed_out: e.timed_out,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphStorage {
    dops: DopValues,
    vertices: Vec<PlanVertex>,
    edges: Vec<HintEdge>,
    plan_index: HashMap<PlanKey, VertexId>,
    out_edges: HashMap<VertexId, Vec<usize>>,
    edge_keys: HashSet<EdgeKey>,
}

impl GraphStorage {
    pub fn new(dops: DopValues) -> GraphStorage {
        GraphStorage {
            dops,
            vertices: Vec::new(),
            edges: Vec::new(),
            plan_index: HashMap::new(),
            out_edges: HashMap::new(),
            edge_keys: HashSet::new(),
        }
    }

    pub fn dop_values(&self) -> &DopValues {
        &self.dops
    }

    pub fn vertices(&self) -> &[PlanVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[HintEdge] {
        &self.edges
    }

    pub fn vertex(&self, id: VertexId) -> Result<&PlanVertex> {
        self.vertices
            .get(id as usize)
            .ok_or(Error::UnknownVertex(id))
    }

    fn out_degree(&self, id: VertexId) -> usize {
        self.out_edges.get(&id).map_or(0, Vec::len)
    }

    /// The enabled anchors: vertices that own at least one out-edge.
    pub fn models(&self) -> Vec<ContextModel<'_>> {
        self.vertices
            .iter()
            .filter(|v| v.enabled && self.out_degree(v.id) > 0)
            .map(|v| self.model_of(v))
            .collect()
    }

    fn model_of<'a>(&'a self, anchor: &'a PlanVertex) -> ContextModel<'a> {
        let edges = self
            .out_edges
            .get(&anchor.id)
            .map(|idx| idx.iter().map(|&i| &self.edges[i]).collect())
            .unwrap_or_default();
        ContextModel { anchor, edges }
    }

    fn upsert_vertex(&mut self, plan: &PlanTree, template: &str, latency_ms: f64) -> VertexId {
        match self.plan_index.get(&plan.identity_key()) {
            Some(&id) => {
                let v = &mut self.vertices[id as usize];
                if latency_ms < v.best_latency_ms {
                    v.best_latency_ms = latency_ms;
                }
                id
            }
            None => {
                let id = self.vertices.len() as VertexId;
                self.plan_index.insert(plan.identity_key(), id);
                self.vertices.push(PlanVertex {
                    id,
                    plan: plan.clone(),
                    template: template.into(),
                    enabled: true,
                    best_latency_ms: latency_ms,
                });
                id
            }
        }
    }

    /// Folds one exploration log into the graph: vertices merged by plan
    /// identity, one edge per explored state anchored at the query's
    /// default-plan vertex. Ingesting the same log again changes nothing.
    pub fn ingest(&mut self, log: &ExplorationLog) -> Result<()> {
        if log.dop_values != self.dops.as_slice() {
            return Err(Error::UniverseMismatch(format!(
                "log for query {:?} has dop values {:?}, storage has {:?}",
                log.query,
                log.dop_values,
                self.dops.as_slice()
            )));
        }
        let default = log
            .states
            .iter()
            .find(|s| s.theta_id == DEFAULT_THETA_ID)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "exploration log for query {:?} lacks the default-hintset state",
                    log.query
                ))
            })?;
        let source_latency = default.outcome.latency_ms;
        let anchor = self.upsert_vertex(&default.plan, &log.template, source_latency);
        // A vertex first seen as a plain target adopts the template of the
        // first query it anchors.
        if self.out_degree(anchor) == 0 {
            self.vertices[anchor as usize].template = log.template.clone();
        }
        for state in &log.states {
            let to = self.upsert_vertex(&state.plan, &log.template, state.outcome.latency_ms);
            let edge = HintEdge {
                from: anchor,
                to,
                theta: state.theta,
                source_latency_ms: source_latency,
                target_latency_ms: state.outcome.latency_ms,
                timed_out: state.outcome.timed_out,
            };
            if self.edge_keys.insert(EdgeKey::of(&edge)) {
                self.out_edges
                    .entry(anchor)
                    .or_default()
                    .push(self.edges.len());
                self.edges.push(edge);
            }
        }
        Ok(())
    }

    /// The enabled model whose anchor plan lies closest to `p0`, within tau;
    /// ties go to the smaller vertex id.
    pub fn nearest_model(&self, p0: &PlanTree, cfg: &InferenceConfig) -> Option<ContextModel<'_>> {
        let mut best: Option<(f64, VertexId)> = None;
        for v in &self.vertices {
            if !v.enabled || self.out_degree(v.id) == 0 {
                continue;
            }
            let d = plan_distance(p0, &v.plan);
            if d > cfg.tau {
                continue;
            }
            let closer = match best {
                None => true,
                Some((bd, _)) => d < bd,
            };
            if closer {
                best = Some((d, v.id));
            }
        }
        best.map(|(_, id)| self.model_of(&self.vertices[id as usize]))
    }

    /// The model's qualifying out-edges: completed, boost at least
    /// min_boost, one edge per hintset (the best), ordered by boost
    /// descending then ThetaId, truncated to top_k.
    fn promising_edges<'a>(
        &self,
        model: &ContextModel<'a>,
        cfg: &InferenceConfig,
    ) -> Vec<&'a HintEdge> {
        let mut best_by_theta: HashMap<ThetaId, &HintEdge> = HashMap::new();
        for &e in &model.edges {
            let boost = e.boost();
            if e.timed_out || !boost.is_finite() || boost < cfg.min_boost {
                continue;
            }
            best_by_theta
                .entry(self.dops.theta_id(&e.theta))
                .and_modify(|cur| {
                    if boost > cur.boost() {
                        *cur = e;
                    }
                })
                .or_insert(e);
        }
        let mut out: Vec<&HintEdge> = best_by_theta.into_values().collect();
        out.sort_by(|a, b| {
            b.boost().total_cmp(&a.boost()).then_with(|| {
                self.dops
                    .theta_id(&a.theta)
                    .cmp(&self.dops.theta_id(&b.theta))
            })
        });
        out.truncate(cfg.top_k);
        out
    }

    pub fn promising_hints(
        &self,
        model: &ContextModel<'_>,
        cfg: &InferenceConfig,
    ) -> Vec<(HintSet, f64)> {
        self.promising_edges(model, cfg)
            .into_iter()
            .map(|e| (e.theta, e.boost()))
            .collect()
    }

    /// Recommends a hintset for a query. Plans the default hintset, matches
    /// a model, plans the model's promising hintsets (one batch; against a
    /// replay oracle the accounting equals sequential calls), keeps those
    /// whose fresh plan stays within tau of the stored target plan, and
    /// returns the survivor with the highest boost. Every fallback returns
    /// the default hintset, whose latency equals the default latency.
    pub fn infer(
        &self,
        ds: &ReplayDataset,
        query: &str,
        cfg: &InferenceConfig,
    ) -> Result<(HintSet, InferenceReport)> {
        cfg.validate()?;
        let theta_def = self.dops.default_hintset();
        let (p0, planning) = ds.get_plan(query, theta_def)?;
        let p0 = p0.clone();
        let mut report = InferenceReport {
            query: query.into(),
            chosen: theta_def,
            chosen_theta_id: DEFAULT_THETA_ID,
            planned: vec![theta_def],
            planning_ms: planning,
            model_anchor: None,
            candidates: 0,
            decision_path: DecisionPath::NoModel,
        };
        let model = match self.nearest_model(&p0, cfg) {
            Some(m) => m,
            None => return Ok((theta_def, report)),
        };
        report.model_anchor = Some(model.anchor.id);
        let candidates = self.promising_edges(&model, cfg);
        self.select(ds, query, cfg, candidates, report)
    }

    /// Template-routed inference: skips plan matching and pools the
    /// promising hintsets of every enabled model sharing the query's
    /// template, then applies the same guard and selection.
    pub fn infer_super_fast(
        &self,
        ds: &ReplayDataset,
        query: &str,
        cfg: &InferenceConfig,
    ) -> Result<(HintSet, InferenceReport)> {
        cfg.validate()?;
        let theta_def = self.dops.default_hintset();
        let template = ds.query(query)?.template().to_string();
        let (_, planning) = ds.get_plan(query, theta_def)?;
        let report = InferenceReport {
            query: query.into(),
            chosen: theta_def,
            chosen_theta_id: DEFAULT_THETA_ID,
            planned: vec![theta_def],
            planning_ms: planning,
            model_anchor: None,
            candidates: 0,
            decision_path: DecisionPath::NoMatchingTemplate,
        };
        let models: Vec<ContextModel<'_>> = self
            .models()
            .into_iter()
            .filter(|m| m.anchor.template == template)
            .collect();
        if models.is_empty() {
            return Ok((theta_def, report));
        }
        // Union of per-model promising edges, one per hintset (best boost,
        // then smaller anchor id for determinism).
        let mut best_by_theta: HashMap<ThetaId, &HintEdge> = HashMap::new();
        for m in &models {
            for e in self.promising_edges(m, cfg) {
                best_by_theta
                    .entry(self.dops.theta_id(&e.theta))
                    .and_modify(|cur| {
                        let better = e.boost() > cur.boost()
                            || (e.boost() == cur.boost() && e.from < cur.from);
                        if better {
                            *cur = e;
                        }
                    })
                    .or_insert(e);
            }
        }
        let mut candidates: Vec<&HintEdge> = best_by_theta.into_values().collect();
        candidates.sort_by(|a, b| {
            b.boost().total_cmp(&a.boost()).then_with(|| {
                self.dops
                    .theta_id(&a.theta)
                    .cmp(&self.dops.theta_id(&b.theta))
            })
        });
        self.select(ds, query, cfg, candidates, report)
    }

    /// Shared tail of both inference paths: plan candidates, guard against
    /// the stored target plans, pick the surviving edge with the best boost.
    fn select(
        &self,
        ds: &ReplayDataset,
        query: &str,
        cfg: &InferenceConfig,
        candidates: Vec<&HintEdge>,
        mut report: InferenceReport,
    ) -> Result<(HintSet, InferenceReport)> {
        let theta_def = self.dops.default_hintset();
        report.candidates = candidates.len();
        if candidates.is_empty() {
            report.decision_path = DecisionPath::NoCandidates;
            return Ok((theta_def, report));
        }
        report.decision_path = DecisionPath::GuardRejectedAll;
        let mut winner: Option<(f64, ThetaId, HintSet)> = None;
        for e in candidates {
            let (fresh, planning) = ds.get_plan(query, e.theta)?;
            report.planned.push(e.theta);
            report.planning_ms += planning;
            let stored = &self.vertices[e.to as usize].plan;
            if plan_distance(fresh, stored) > cfg.tau {
                continue;
            }
            let id = self.dops.theta_id(&e.theta);
            let better = match winner {
                None => true,
                Some((b, wid, _)) => e.boost() > b || (e.boost() == b && id < wid),
            };
            if better {
                winner = Some((e.boost(), id, e.theta));
            }
        }
        if let Some((_, id, theta)) = winner {
            report.chosen = theta;
            report.chosen_theta_id = id;
            report.decision_path = DecisionPath::Chosen;
            return Ok((theta, report));
        }
        Ok((theta_def, report))
    }

    /// Hides or restores one model; unknown ids are an error.
    pub fn set_enabled(&mut self, id: VertexId, flag: bool) -> Result<()> {
        if id as usize >= self.vertices.len() {
            return Err(Error::UnknownVertex(id));
        }
        self.vertices[id as usize].enabled = flag;
        Ok(())
    }

    pub fn to_raw(&self) -> schema::RawStorage {
        schema::RawStorage {
            vertices: self
                .vertices
                .iter()
                .map(|v| schema::RawVertex {
                    id: v.id,
                    plan: v.plan.clone(),
                    template: v.template.clone(),
                    enabled: v.enabled,
                    best_latency_ms: v.best_latency_ms,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| schema::RawEdge {
                    from: e.from,
                    to: e.to,
                    ops_mask: e.theta.ops_mask,
                    dop: e.theta.dop,
                    source_latency_ms: e.source_latency_ms,
                    target_latency_ms: e.target_latency_ms,
                    timed_out: e.timed_out,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(&self.to_raw())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Loads and fully validates a storage file. The dop universe comes from
    /// the caller (the storage format carries none), so edges can be checked
    /// against the dataset the storage will serve.
    pub fn load(path: impl AsRef<Path>, dops: &DopValues) -> Result<GraphStorage> {
        let bytes = std::fs::read(path)?;
        let raw: schema::RawStorage = serde_json::from_slice(&bytes)?;
        GraphStorage::from_raw(raw, dops)
    }

    pub fn from_raw(raw: schema::RawStorage, dops: &DopValues) -> Result<GraphStorage> {
        let mut g = GraphStorage::new(dops.clone());
        for (i, rv) in raw.vertices.iter().enumerate() {
            if rv.id != i as VertexId {
                return Err(Error::InvalidStorage(format!(
                    "vertex ids must be dense and ordered; found {} at position {i}",
                    rv.id
                )));
            }
            rv.plan
                .root()
                .validate()
                .map_err(|e| Error::InvalidStorage(format!("vertex {}: {e}", rv.id)))?;
            if g.plan_index.insert(rv.plan.identity_key(), rv.id).is_some() {
                return Err(Error::InvalidStorage(format!(
                    "vertex {} duplicates another vertex's plan",
                    rv.id
                )));
            }
            g.vertices.push(PlanVertex {
                id: rv.id,
                plan: rv.plan.clone(),
                template: rv.template.clone(),
                enabled: rv.enabled,
                best_latency_ms: rv.best_latency_ms,
            });
        }
        for (i, re) in raw.edges.iter().enumerate() {
            let bad = |msg: String| Error::InvalidStorage(format!("edge {i}: {msg}"));
            if re.from as usize >= g.vertices.len() || re.to as usize >= g.vertices.len() {
                return Err(bad(format!("endpoint {} -> {} unknown", re.from, re.to)));
            }
            if re.ops_mask as u32 >= crate::hint_space::NUM_MASKS {
                return Err(bad(format!("ops_mask {} out of range", re.ops_mask)));
            }
            let theta = HintSet {
                ops_mask: re.ops_mask,
                dop: re.dop,
            };
            dops.try_theta_id(&theta).map_err(|e| bad(e.to_string()))?;
            if !(re.source_latency_ms > 0.0 && re.target_latency_ms > 0.0) {
                return Err(bad("latencies must be positive".into()));
            }
            let edge = HintEdge {
                from: re.from,
                to: re.to,
                theta,
                source_latency_ms: re.source_latency_ms,
                target_latency_ms: re.target_latency_ms,
                timed_out: re.timed_out,
            };
            g.edge_keys.insert(EdgeKey::of(&edge));
            g.out_edges
                .entry(edge.from)
                .or_default()
                .push(g.edges.len());
            g.edges.push(edge);
        }
        Ok(g)
    }
}
