//! Hint-based query optimizer layer.
//!
//! The library works against a replay oracle: a pre-collected table of
//! (query, hintset) -> (plan, latency) observations. Offline, a
//! parameterized local search explores the hintset space per query under a
//! latency budget, never executing the same plan twice. The observations
//! feed a graph of plans whose edges record which hintsets moved one plan to
//! another and at what speedup. Online, inference matches a fresh default
//! plan against stored plans and recommends a hintset only when the plan it
//! would produce stays close to the stored evidence, falling back to the
//! default hintset otherwise.

pub mod error;
pub mod eval;
pub mod graph;
pub mod hint_space;
pub mod plan;
pub mod replay;
pub mod search;
pub mod synthetic;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use eval::{
    c_learning, exploration_cost, f_beta, split_workload, sweep, workload_metrics, PolicyChoice,
    SplitKind, SplitSpec, SweepResult, WorkloadMetrics,
};
pub use graph::{
    ContextModel, DecisionPath, GraphStorage, HintEdge, InferenceConfig, InferenceReport,
    PlanVertex, VertexId,
};
pub use hint_space::{DopValues, HintSet, OperatorKind, ThetaId, DEFAULT_THETA_ID};
pub use plan::{plan_distance, plan_identity, PlanKey, PlanNode, PlanTree};
pub use replay::{ExecutionOutcome, PlanEntry, QueryRecord, ReplayDataset};
pub use search::{
    exhaustive_search, greedy_search, local_search, neighborhood, run_strategy, ExplorationLog,
    ExplorationReport, ExploredState, SearchParams, Strategy,
};
pub use synthetic::generate_synthetic;
