//! Domain types and the closed-form time/cost model.
//!
//! A task's execution time on a site is the time to pull its data over plus
//! the time to process it. A site's running time is its summed execution time
//! plus one deployment delay, or zero if it runs nothing. Sites are billed per
//! started block of running time, and a plan's makespan is the largest per-site
//! execution time.

mod plan;
mod scenario;
pub mod score;
mod time;

use serde::Serialize;

pub use plan::Plan;
pub use scenario::{
    BetaWeight, CostModel, DataLocation, LocationIx, Scenario, Site, SiteIx, Task, TaskIx,
};
pub use score::{score_plans, Normalizer};
pub use time::Time;

use crate::error::Result;

/// Time to move a task's data to `site`.
pub fn transfer_time(task: &Task, site: SiteIx, cost: &CostModel) -> Result<Time> {
    let rate = cost.transfer_rate(task.location, site)?;
    Ok(Time::from_secs_f64(task.size * rate))
}

/// Time to process a task's data. Identical on every site.
pub fn compute_time(task: &Task, cost: &CostModel) -> Time {
    Time::from_secs_f64(task.size * cost.compute_rate)
}

pub fn exec_time(task: &Task, site: SiteIx, cost: &CostModel) -> Result<Time> {
    Ok(transfer_time(task, site, cost)? + compute_time(task, cost))
}

/// Summed execution time of the tasks `plan` puts on `site`.
pub fn site_exec_time(plan: &Plan, site: SiteIx, scenario: &Scenario) -> Time {
    plan.tasks_on(site)
        .iter()
        .map(|&t| task_exec(scenario, t, site))
        .sum()
}

/// Deployment plus execution, or zero for a site that executes nothing.
pub fn running_time(site_exec: Time, cost: &CostModel) -> Time {
    running_with_deploy(site_exec, cost.deploy())
}

pub(crate) fn running_with_deploy(site_exec: Time, deploy: Time) -> Time {
    if site_exec > Time::ZERO {
        deploy + site_exec
    } else {
        Time::ZERO
    }
}

/// Started billing blocks for a running time.
pub fn time_blocks(running: Time, cost: &CostModel) -> u64 {
    running.blocks_of(cost.block())
}

/// Execution time of a scenario task on a site; the rate lookup cannot fail
/// because scenarios are validated on construction.
pub(crate) fn task_exec(scenario: &Scenario, task: TaskIx, site: SiteIx) -> Time {
    let t = scenario.task(task);
    Time::from_secs_f64(t.size * scenario.rate(task, site)) + compute_time(t, scenario.cost())
}

/// Precomputed `exec_time` for every (task, site) pair.
#[derive(Debug, Clone)]
pub struct ExecTable {
    n_sites: usize,
    exec: Vec<Time>,
}

impl ExecTable {
    pub fn new(scenario: &Scenario) -> Self {
        let n_sites = scenario.sites().len();
        let exec = scenario
            .task_ixs()
            .flat_map(|t| scenario.site_ixs().map(move |c| task_exec(scenario, t, c)))
            .collect();
        ExecTable { n_sites, exec }
    }

    pub fn get(&self, task: TaskIx, site: SiteIx) -> Time {
        self.exec[task.0 * self.n_sites + site.0]
    }
}

/// Every quantity the model derives from a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanMetrics {
    pub per_site_exec: Vec<Time>,
    pub per_site_running: Vec<Time>,
    pub per_site_blocks: Vec<u64>,
    pub total_blocks: u64,
    /// Makespan: the largest per-site execution time, deployment excluded.
    pub overall_exec: Time,
    pub total_cost: f64,
    /// Only set once the plan has been ranked against a candidate set.
    pub score: Option<f64>,
}

impl PlanMetrics {
    fn from_site_exec(per_site_exec: Vec<Time>, cost: &CostModel) -> Self {
        let per_site_running: Vec<Time> = per_site_exec
            .iter()
            .map(|&e| running_time(e, cost))
            .collect();
        let per_site_blocks: Vec<u64> = per_site_running
            .iter()
            .map(|&r| time_blocks(r, cost))
            .collect();
        let total_blocks = per_site_blocks.iter().sum();
        let overall_exec = per_site_exec.iter().copied().max().unwrap_or_default();
        PlanMetrics {
            per_site_exec,
            per_site_running,
            per_site_blocks,
            total_blocks,
            overall_exec,
            total_cost: total_blocks as f64 * cost.unit_cost,
            score: None,
        }
    }

    /// Wall-clock finish of the whole plan: the largest running time,
    /// deployment included.
    pub fn overall_finish(&self) -> Time {
        self.per_site_running
            .iter()
            .copied()
            .max()
            .unwrap_or_default()
    }

    pub fn sites_used(&self) -> usize {
        self.per_site_exec.iter().filter(|e| !e.is_zero()).count()
    }
}

pub fn plan_metrics(plan: &Plan, scenario: &Scenario) -> Result<PlanMetrics> {
    plan.validate(scenario)?;
    Ok(metrics_unchecked(plan, scenario))
}

pub(crate) fn metrics_unchecked(plan: &Plan, scenario: &Scenario) -> PlanMetrics {
    let per_site_exec = scenario
        .site_ixs()
        .map(|c| site_exec_time(plan, c, scenario))
        .collect();
    PlanMetrics::from_site_exec(per_site_exec, scenario.cost())
}
