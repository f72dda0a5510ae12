//! Hintset exploration strategies: parameterized local search plus greedy
//! and exhaustive baselines.
//!
//! All strategies share the cost model: planning is free but accounted,
//! executions charge their latency, a hintset whose plan was already
//! executed reuses the known outcome at zero charge, and neighbor executions
//! run under a budget equal to the incumbent latency, so a bad hint can
//! never cost more than the best plan found so far.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hint_space::{DopValues, HintSet, OperatorKind, ThetaId, JOIN_MASK, SCAN_MASK};
use crate::plan::{PlanKey, PlanTree};
use crate::replay::{ExecutionOutcome, QueryRecord, ReplayDataset};

/// Neighborhood shape of the local search. Each flag contributes moves; at
/// least one must be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub join: bool,
    pub scan: bool,
    pub dop: bool,
    pub join_x_dop: bool,
    pub inl: bool,
    /// None runs until no neighbor improves.
    pub max_iters: Option<u32>,
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.join || self.scan || self.dop || self.join_x_dop || self.inl) {
            return Err(Error::InvalidConfig(
                "search params enable no neighborhood dimension".into(),
            ));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// All five dimensions, unbounded iterations.
    pub fn full() -> SearchParams {
        SearchParams {
            join: true,
            scan: true,
            dop: true,
            join_x_dop: true,
            inl: true,
            max_iters: None,
        }
    }

    /// The single-dimension moves of the greedy baseline: one operator bit
    /// or one dop substitution at a time.
    fn greedy() -> SearchParams {
        SearchParams {
            join: true,
            scan: true,
            dop: true,
            join_x_dop: false,
            inl: false,
            max_iters: None,
        }
    }

    fn label(&self) -> String {
        let mut dims = Vec::new();
        if self.join {
            dims.push("join");
        }
        if self.scan {
            dims.push("scan");
        }
        if self.dop {
            dims.push("dop");
        }
        if self.join_x_dop {
            dims.push("join_x_dop");
        }
        if self.inl {
            dims.push("inl");
        }
        let iters = match self.max_iters {
            Some(n) => n.to_string(),
            None => "max".into(),
        };
        format!("{}#iters={iters}", dims.join("+"))
    }
}

impl std::fmt::Display for SearchParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Local { params: SearchParams },
    Greedy,
    Exhaustive,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Local { params } => write!(f, "local({params})"),
            Strategy::Greedy => f.write_str("greedy"),
            Strategy::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

/// One planned hintset in an exploration.
#[derive(Debug, Clone, Serialize)]
pub struct ExploredState {
    pub theta: HintSet,
    pub theta_id: ThetaId,
    pub plan: PlanTree,
    pub outcome: ExecutionOutcome,
    /// False when the plan was already executed under another hintset and
    /// the outcome was reused; such states charge nothing.
    pub executed: bool,
}

/// Full record of one query's exploration.
#[derive(Debug, Clone, Serialize)]
pub struct ExplorationLog {
    pub query: String,
    pub template: String,
    pub dop_values: Vec<u32>,
    pub states: Vec<ExploredState>,
    pub unique_plans: usize,
    /// Sum of charged execution time over executed states.
    pub exploration_ms: f64,
    /// Sum of planning time over all planned states.
    pub planning_ms_total: f64,
    pub iterations: u32,
    pub best_theta: HintSet,
    pub best_theta_id: ThetaId,
    pub best_latency_ms: f64,
    pub default_latency_ms: f64,
}

/// Compact per-query summary for reports; omits the plans.
#[derive(Debug, Clone, Serialize)]
pub struct ExplorationReport {
    pub query: String,
    pub template: String,
    pub states_explored: usize,
    pub unique_plans: usize,
    pub executed: usize,
    pub exploration_ms: f64,
    pub planning_ms_total: f64,
    pub iterations: u32,
    pub best_theta: HintSet,
    pub best_theta_id: ThetaId,
    pub best_latency_ms: f64,
    pub default_latency_ms: f64,
}

impl ExplorationLog {
    pub fn report(&self) -> ExplorationReport {
        ExplorationReport {
            query: self.query.clone(),
            template: self.template.clone(),
            states_explored: self.states.len(),
            unique_plans: self.unique_plans,
            executed: self.states.iter().filter(|s| s.executed).count(),
            exploration_ms: self.exploration_ms,
            planning_ms_total: self.planning_ms_total,
            iterations: self.iterations,
            best_theta: self.best_theta,
            best_theta_id: self.best_theta_id,
            best_latency_ms: self.best_latency_ms,
            default_latency_ms: self.default_latency_ms,
        }
    }
}

/// The candidate hintsets one move away from `theta`: each enabled dimension
/// contributes its moves; the result is deduplicated, excludes `theta`, and
/// is sorted by ThetaId.
pub fn neighborhood(theta: HintSet, params: &SearchParams, dops: &DopValues) -> Vec<HintSet> {
    let mut out = Vec::new();
    if params.join {
        for op in OperatorKind::ALL.iter().filter(|o| o.is_join()) {
            out.push(HintSet {
                ops_mask: theta.ops_mask ^ op.bit(),
                dop: theta.dop,
            });
        }
    }
    if params.scan {
        for op in OperatorKind::ALL.iter().filter(|o| !o.is_join()) {
            out.push(HintSet {
                ops_mask: theta.ops_mask ^ op.bit(),
                dop: theta.dop,
            });
        }
    }
    if params.dop {
        for d in dops.iter().filter(|&d| d != theta.dop) {
            out.push(HintSet {
                ops_mask: theta.ops_mask,
                dop: d,
            });
        }
    }
    if params.join_x_dop {
        // Every join-bit pattern paired with every dop, scan bits held fixed.
        for pattern in 0..8u8 {
            let mask = (theta.ops_mask & SCAN_MASK) | (pattern << 4);
            debug_assert_eq!(mask & !(JOIN_MASK | SCAN_MASK), 0);
            for d in dops.iter() {
                out.push(HintSet {
                    ops_mask: mask,
                    dop: d,
                });
            }
        }
    }
    if params.inl {
        out.push(theta.toggle_inl());
    }
    let mut seen: HashSet<ThetaId> = HashSet::new();
    out.retain(|h| *h != theta && seen.insert(dops.theta_id(h)));
    out.sort_by_key(|h| dops.theta_id(h));
    out
}

/// Per-query exploration state shared by all strategies.
struct Explorer<'a> {
    ds: &'a ReplayDataset,
    q: &'a QueryRecord,
    states: Vec<ExploredState>,
    executed: HashMap<PlanKey, ExecutionOutcome>,
    visited: HashSet<ThetaId>,
    exploration_ms: f64,
    planning_ms_total: f64,
}

impl<'a> Explorer<'a> {
    fn new(ds: &'a ReplayDataset, query: &str) -> Result<Explorer<'a>> {
        Ok(Explorer {
            ds,
            q: ds.query(query)?,
            states: Vec::new(),
            executed: HashMap::new(),
            visited: HashSet::new(),
            exploration_ms: 0.0,
            planning_ms_total: 0.0,
        })
    }

    /// Plans one hintset and executes it unless its plan is already known.
    /// Returns the (possibly reused) outcome.
    fn probe(&mut self, h: HintSet, budget_ms: Option<f64>) -> Result<ExecutionOutcome> {
        let id = self.ds.dop_values().try_theta_id(&h)?;
        self.visited.insert(id);
        let (plan, planning_ms) = self.ds.get_plan(self.q.name(), h)?;
        let plan = plan.clone();
        self.planning_ms_total += planning_ms;
        let key = plan.identity_key();
        let (outcome, executed) = match self.executed.get(&key) {
            Some(prior) => (
                ExecutionOutcome {
                    charged_ms: 0.0,
                    ..*prior
                },
                false,
            ),
            None => {
                let out = self.ds.execute(self.q.name(), h, budget_ms)?;
                self.executed.insert(key, out);
                self.exploration_ms += out.charged_ms;
                (out, true)
            }
        };
        self.states.push(ExploredState {
            theta: h,
            theta_id: id,
            plan,
            outcome,
            executed,
        });
        Ok(outcome)
    }

    fn finish(
        self,
        iterations: u32,
        best: (HintSet, ThetaId, f64),
        default_latency_ms: f64,
    ) -> ExplorationLog {
        let unique_plans = self
            .states
            .iter()
            .map(|s| s.plan.identity_key())
            .collect::<HashSet<_>>()
            .len();
        ExplorationLog {
            query: self.q.name().into(),
            template: self.q.template().into(),
            dop_values: self.ds.dop_values().as_slice().to_vec(),
            states: self.states,
            unique_plans,
            exploration_ms: self.exploration_ms,
            planning_ms_total: self.planning_ms_total,
            iterations,
            best_theta: best.0,
            best_theta_id: best.1,
            best_latency_ms: best.2,
            default_latency_ms,
        }
    }
}

/// Hill-climbing over the parameterized neighborhood. Starts at the default
/// hintset with its executed latency as incumbent; per iteration probes all
/// unvisited neighbors (budgeted at the incumbent), then moves to the
/// strict-best improving one, smaller ThetaId on ties. Probes within an
/// iteration are independent, so batched and sequential execution charge the
/// same totals against a replay oracle.
pub fn local_search(
    ds: &ReplayDataset,
    query: &str,
    params: &SearchParams,
) -> Result<ExplorationLog> {
    params.validate()?;
    let dops = ds.dop_values().clone();
    let mut ex = Explorer::new(ds, query)?;

    let mut current = dops.default_hintset();
    let out = ex.probe(current, None)?;
    let default_latency = out.latency_ms;
    let mut best = (current, crate::DEFAULT_THETA_ID, default_latency);

    let mut iterations = 0u32;
    while params.max_iters.is_none_or(|m| iterations < m) {
        let frontier: Vec<HintSet> = neighborhood(current, params, &dops)
            .into_iter()
            .filter(|h| !ex.visited.contains(&dops.theta_id(h)))
            .collect();
        if frontier.is_empty() {
            break;
        }
        iterations += 1;
        let mut winner: Option<(f64, ThetaId, HintSet)> = None;
        for h in frontier {
            let id = dops.theta_id(&h);
            let out = ex.probe(h, Some(best.2))?;
            if out.timed_out || out.latency_ms >= best.2 {
                continue;
            }
            let improves = match winner {
                None => true,
                Some((lat, wid, _)) => out.latency_ms < lat || (out.latency_ms == lat && id < wid),
            };
            if improves {
                winner = Some((out.latency_ms, id, h));
            }
        }
        match winner {
            Some((lat, id, h)) => {
                current = h;
                best = (h, id, lat);
            }
            None => break,
        }
    }
    Ok(ex.finish(iterations, best, default_latency))
}

/// Single-dimension steepest-ascent baseline: evaluates each operator-bit
/// toggle and each dop substitution one at a time, takes the best improving
/// change, repeats until none improves.
pub fn greedy_search(ds: &ReplayDataset, query: &str) -> Result<ExplorationLog> {
    local_search(ds, query, &SearchParams::greedy())
}

/// Plans every hintset of the space in ThetaId order and executes each
/// not-yet-seen plan without a budget. The resulting best latency is the
/// true per-query optimum.
pub fn exhaustive_search(ds: &ReplayDataset, query: &str) -> Result<ExplorationLog> {
    let dops = ds.dop_values().clone();
    let mut ex = Explorer::new(ds, query)?;
    let mut best: Option<(f64, ThetaId, HintSet)> = None;
    for h in dops.enumerate_space() {
        let id = dops.theta_id(&h);
        let out = ex.probe(h, None)?;
        if out.timed_out {
            continue;
        }
        let improves = match best {
            None => true,
            Some((lat, bid, _)) => out.latency_ms < lat || (out.latency_ms == lat && id < bid),
        };
        if improves {
            best = Some((out.latency_ms, id, h));
        }
    }
    // The default entry never times out, so a best state exists.
    let (lat, id, h) = best.expect("space contains a non-timed-out state");
    let default_latency = ex.states[0].outcome.latency_ms;
    Ok(ex.finish(1, (h, id, lat), default_latency))
}

pub fn run_strategy(
    ds: &ReplayDataset,
    query: &str,
    strategy: &Strategy,
) -> Result<ExplorationLog> {
    match strategy {
        Strategy::Local { params } => local_search(ds, query, params),
        Strategy::Greedy => greedy_search(ds, query),
        Strategy::Exhaustive => exhaustive_search(ds, query),
    }
}
