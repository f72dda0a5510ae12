//! Workload metrics, the F_beta boost-versus-budget score, strategy sweeps,
//! and train/test splits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hint_space::HintSet;
use crate::replay::ReplayDataset;
use crate::search::{run_strategy, ExplorationLog, Strategy};

/// One policy decision: the hintset executed for a query plus the model time
/// spent deciding it.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyChoice {
    pub query: String,
    pub theta: HintSet,
    pub model_ms: f64,
}

/// Aggregate quality of a policy over a workload. Boost percentages compare
/// total latencies against the all-default baseline; "of opt" variants
/// divide the achieved saving by the saving of the per-query optimum. The
/// e2e view charges model time on top of execution, the ex view does not.
#[derive(Debug, Clone, Serialize)]
pub struct WorkloadMetrics {
    pub e2e_boost_pct: f64,
    pub e2e_boost_pct_of_opt: f64,
    pub ex_boost_pct_of_opt: f64,
    pub timeouts_pct: f64,
    pub degradations_pct: f64,
    pub inference_ms: f64,
    pub exploration_ms: f64,
}

/// Fraction of the optimal saving actually achieved. When the default is
/// already optimal there is nothing to save: reaching it counts as 100,
/// losing time counts as 0.
fn pct_of_opt(saving: f64, opt_saving: f64) -> f64 {
    if opt_saving > 0.0 {
        // The ratio first: an optimal policy scores exactly 100.
        100.0 * (saving / opt_saving)
    } else if saving >= 0.0 {
        100.0
    } else {
        0.0
    }
}

pub fn workload_metrics(
    ds: &ReplayDataset,
    workload: &[String],
    choices: &[PolicyChoice],
    exploration_ms: f64,
) -> Result<WorkloadMetrics> {
    if workload.is_empty() {
        return Err(Error::WorkloadTooSmall {
            needed: 1,
            actual: 0,
        });
    }
    let by_query: HashMap<&str, &PolicyChoice> =
        choices.iter().map(|c| (c.query.as_str(), c)).collect();
    let mut t_def = 0.0;
    let mut t_opt = 0.0;
    let mut t_chosen = 0.0;
    let mut model_ms = 0.0;
    let mut timeouts = 0usize;
    let mut degradations = 0usize;
    for name in workload {
        let choice = by_query
            .get(name.as_str())
            .ok_or_else(|| Error::MissingChoice(name.clone()))?;
        let q = ds.query(name)?;
        let id = ds.dop_values().try_theta_id(&choice.theta)?;
        let def = q.default_latency();
        let chosen = q.effective_latency(id);
        t_def += def;
        t_opt += q.best_entry().1;
        t_chosen += chosen;
        model_ms += choice.model_ms;
        if q.entry(id).timed_out {
            timeouts += 1;
        }
        if chosen > def {
            degradations += 1;
        }
    }
    let n = workload.len() as f64;
    Ok(WorkloadMetrics {
        e2e_boost_pct: 100.0 * (1.0 - (model_ms + t_chosen) / t_def),
        e2e_boost_pct_of_opt: pct_of_opt(t_def - (model_ms + t_chosen), t_def - t_opt),
        ex_boost_pct_of_opt: pct_of_opt(t_def - t_chosen, t_def - t_opt),
        timeouts_pct: 100.0 * timeouts as f64 / n,
        degradations_pct: 100.0 * degradations as f64 / n,
        inference_ms: model_ms,
        exploration_ms,
    })
}

/// The harmonic boost-versus-budget score with c_boost in the recall
/// position: large beta favors boost, small beta favors saved learning time.
pub fn f_beta(c_boost: f64, c_learning: f64, beta: f64) -> f64 {
    if c_boost == 0.0 || c_learning == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * c_boost * c_learning / (b2 * c_learning + c_boost)
}

/// Share of the exhaustive exploration cost that a strategy saved.
pub fn c_learning(exploration_ms: f64, exhaustive_ms: f64) -> f64 {
    if exhaustive_ms <= 0.0 {
        return if exploration_ms <= 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - exploration_ms / exhaustive_ms).clamp(0.0, 1.0)
}

/// Total cost of an exploration: charged execution plus planning.
pub fn exploration_cost(logs: &[ExplorationLog]) -> f64 {
    logs.iter()
        .map(|l| l.exploration_ms + l.planning_ms_total)
        .sum()
}

/// One strategy's sweep outcome over a workload.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub label: String,
    pub states_explored: usize,
    pub states_all: usize,
    pub plans_explored: usize,
    pub plans_all: usize,
    pub exploration_ms: f64,
    pub best_total_latency_ms: f64,
    pub c_boost: f64,
    pub c_learning: f64,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepWinner {
    pub beta: f64,
    pub row: usize,
    pub label: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub betas: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub winners: Vec<SweepWinner>,
}

impl SweepResult {
    /// One CSV row per strategy; stable column order, one f column per beta.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "strategy".to_string(),
            "states_explored".into(),
            "states_all".into(),
            "plans_explored".into(),
            "plans_all".into(),
            "exploration_ms".into(),
            "best_total_latency_ms".into(),
            "c_boost".into(),
            "c_learning".into(),
        ];
        for b in &self.betas {
            header.push(format!("f_beta_{b}"));
        }
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.label.clone(),
                r.states_explored.to_string(),
                r.states_all.to_string(),
                r.plans_explored.to_string(),
                r.plans_all.to_string(),
                r.exploration_ms.to_string(),
                r.best_total_latency_ms.to_string(),
                r.c_boost.to_string(),
                r.c_learning.to_string(),
            ];
            for f in &r.f {
                rec.push(f.to_string());
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv write failed: {e}"))
}

/// Runs every strategy over the workload and scores it against the
/// exhaustive baseline. Each strategy is costed independently; queries run
/// in parallel, aggregation is order-independent.
pub fn sweep(
    ds: &ReplayDataset,
    workload: &[String],
    strategies: &[Strategy],
    betas: &[f64],
) -> Result<SweepResult> {
    if strategies.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one strategy".into(),
        ));
    }
    if workload.is_empty() {
        return Err(Error::WorkloadTooSmall {
            needed: 1,
            actual: 0,
        });
    }
    for b in betas {
        if !(*b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta {b} must be positive")));
        }
    }
    let run_all = |strategy: &Strategy| -> Result<Vec<ExplorationLog>> {
        workload
            .par_iter()
            .map(|q| run_strategy(ds, q, strategy))
            .collect()
    };
    let exhaustive_logs = run_all(&Strategy::Exhaustive)?;
    let exhaustive_ms = exploration_cost(&exhaustive_logs);

    let mut t_def = 0.0;
    let mut t_opt = 0.0;
    for (name, log) in workload.iter().zip(&exhaustive_logs) {
        t_def += ds.query(name)?.default_latency();
        t_opt += log.best_latency_ms;
    }
    let opt_saving = t_def - t_opt;
    let space = ds.dop_values().space_size();
    let plans_all: usize = workload
        .iter()
        .map(|name| ds.query(name).map(|q| q.unique_plans()))
        .sum::<Result<usize>>()?;

    let mut rows = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let logs = match strategy {
            Strategy::Exhaustive => exhaustive_logs.clone(),
            _ => run_all(strategy)?,
        };
        let explored_ms = exploration_cost(&logs);
        let best_total: f64 = logs.iter().map(|l| l.best_latency_ms).sum();
        let c_boost = if opt_saving > 0.0 {
            ((t_def - best_total) / opt_saving).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let cl = c_learning(explored_ms, exhaustive_ms);
        rows.push(SweepRow {
            strategy: *strategy,
            label: strategy.to_string(),
            states_explored: logs.iter().map(|l| l.states.len()).sum(),
            states_all: workload.len() * space,
            plans_explored: logs
                .iter()
                .map(|l| l.states.iter().filter(|s| s.executed).count())
                .sum(),
            plans_all,
            exploration_ms: explored_ms,
            best_total_latency_ms: best_total,
            c_boost,
            c_learning: cl,
            f: betas.iter().map(|&b| f_beta(c_boost, cl, b)).collect(),
        });
    }

    let winners = betas
        .iter()
        .enumerate()
        .map(|(bi, &beta)| {
            let mut best = 0usize;
            for (ri, row) in rows.iter().enumerate().skip(1) {
                let (bf, bs) = (rows[best].f[bi], rows[best].states_explored);
                if row.f[bi] > bf || (row.f[bi] == bf && row.states_explored < bs) {
                    best = ri;
                }
            }
            SweepWinner {
                beta,
                row: best,
                label: rows[best].label.clone(),
            }
        })
        .collect();

    Ok(SweepResult {
        betas: betas.to_vec(),
        rows,
        winners,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Random,
    Structure,
    FastToSlow,
    SlowToFast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            kind: SplitKind::Random,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Splits a workload into train and test query names, deterministically for
/// a fixed spec. The structure split moves whole groups of queries sharing a
/// default-plan structure, so no group straddles the two sides.
pub fn split_workload(
    ds: &ReplayDataset,
    workload: &[String],
    spec: &SplitSpec,
) -> Result<(Vec<String>, Vec<String>)> {
    if workload.len() < 2 {
        return Err(Error::WorkloadTooSmall {
            needed: 2,
            actual: workload.len(),
        });
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let n = workload.len();
    let target = ((n as f64 * spec.train_fraction).floor() as usize).clamp(1, n - 1);
    let mut names: Vec<String> = workload.to_vec();
    names.sort();

    let (mut train, mut test): (Vec<String>, Vec<String>) = match spec.kind {
        SplitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            names.shuffle(&mut rng);
            let rest = names.split_off(target);
            (names, rest)
        }
        SplitKind::FastToSlow | SplitKind::SlowToFast => {
            let mut keyed: Vec<(f64, String)> = names
                .into_iter()
                .map(|name| Ok((ds.query(&name)?.default_latency(), name)))
                .collect::<Result<_>>()?;
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            if spec.kind == SplitKind::SlowToFast {
                keyed.reverse();
            }
            let mut names: Vec<String> = keyed.into_iter().map(|(_, n)| n).collect();
            let rest = names.split_off(target);
            (names, rest)
        }
        SplitKind::Structure => {
            let mut by_hash: HashMap<u64, Vec<String>> = HashMap::new();
            for name in names {
                let hash = ds
                    .query(&name)?
                    .entry(crate::DEFAULT_THETA_ID)
                    .plan
                    .structure_hash();
                by_hash.entry(hash).or_default().push(name);
            }
            let mut groups: Vec<Vec<String>> = by_hash.into_values().collect();
            groups.sort_by(|a, b| a[0].cmp(&b[0]));
            if groups.len() < 2 {
                return Err(Error::InvalidConfig(
                    "structure split needs at least two default-plan structures".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            groups.shuffle(&mut rng);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for g in groups {
                if train.len() < target {
                    train.extend(g);
                } else {
                    test.extend(g);
                }
            }
            if test.is_empty() {
                // Everything fit under the target; peel off the last group.
                return Err(Error::InvalidConfig(
                    "structure split left the test side empty; lower train_fraction".into(),
                ));
            }
            (train, test)
        }
    };
    train.sort();
    test.sort();
    Ok((train, test))
}
