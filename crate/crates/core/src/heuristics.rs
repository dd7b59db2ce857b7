//! Plan construction heuristics.
//!
//! The pipeline starts from the nearest plan (every task on the site closest
//! to its data), squeezes billing blocks out of it by emptying sites that
//! waste most of their last block, then rebalances load from the
//! longest-running site across the sites still in use. Running it for every block target between 1 and the
//! nearest plan's block count yields a small candidate set, and a β-weighted
//! score picks one of them.
//!
//! Ties are always broken towards the lowest site or task position.

use std::cmp::Reverse;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::score::argmin_score;
use crate::model::{
    metrics_unchecked, running_with_deploy, BetaWeight, ExecTable, Plan, PlanMetrics, Scenario,
    SiteIx, TaskIx, Time,
};

/// Moves already made during one invocation of a move-based heuristic.
///
/// A (task, from, to) move is allowed at most once, which bounds the number
/// of moves by `|T|·|C|·(|C|−1)` and so guarantees termination.
#[derive(Debug, Clone, Default)]
pub struct MoveLedger {
    n_sites: usize,
    bits: Vec<u64>,
    len: usize,
}

impl MoveLedger {
    pub fn new(n_tasks: usize, n_sites: usize) -> Self {
        let slots = n_tasks * n_sites * n_sites;
        MoveLedger {
            n_sites,
            bits: vec![0; slots.div_ceil(64)],
            len: 0,
        }
    }

    fn slot(&self, task: TaskIx, from: SiteIx, to: SiteIx) -> (usize, u64) {
        let i = (task.0 * self.n_sites + from.0) * self.n_sites + to.0;
        (i / 64, 1 << (i % 64))
    }

    pub fn contains(&self, task: TaskIx, from: SiteIx, to: SiteIx) -> bool {
        let (w, m) = self.slot(task, from, to);
        self.bits[w] & m != 0
    }

    /// Returns false if the move was already recorded.
    pub fn record(&mut self, task: TaskIx, from: SiteIx, to: SiteIx) -> bool {
        let (w, m) = self.slot(task, from, to);
        let fresh = self.bits[w] & m == 0;
        self.bits[w] |= m;
        self.len += usize::from(fresh);
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// A distinct plan produced by the pipeline, with its metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    #[serde(skip)]
    pub plan: Plan,
    pub metrics: PlanMetrics,
    /// Block targets that produced this plan.
    pub min_tb: Vec<u64>,
}

/// Ordered, duplicate-free list of candidate plans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Adds the plan unless an identical assignment is already present, in
    /// which case only its `min_tb` list grows. Returns the plan's position.
    pub fn insert(&mut self, plan: Plan, metrics: PlanMetrics, min_tb: u64) -> usize {
        if let Some(i) = self.candidates.iter().position(|c| c.plan == plan) {
            self.candidates[i].min_tb.push(min_tb);
            return i;
        }
        self.candidates.push(Candidate {
            plan,
            metrics,
            min_tb: vec![min_tb],
        });
        self.candidates.len() - 1
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Candidate> {
        self.candidates.get(i)
    }

    pub fn metrics(&self) -> Vec<PlanMetrics> {
        self.candidates.iter().map(|c| c.metrics.clone()).collect()
    }

    /// Position of the best candidate for `beta`, or `None` if empty.
    pub fn best_for(&self, beta: BetaWeight) -> Option<usize> {
        argmin_score(&self.metrics(), beta)
    }
}

impl<'a> IntoIterator for &'a CandidateSet {
    type Item = &'a Candidate;
    type IntoIter = std::slice::Iter<'a, Candidate>;
    fn into_iter(self) -> Self::IntoIter {
        self.candidates.iter()
    }
}

/// Output of [`find_plan`].
#[derive(Debug, Clone)]
pub struct FoundPlan {
    pub chosen: usize,
    pub candidates: CandidateSet,
    /// Scores of every candidate for the requested β, in candidate order.
    pub scores: Vec<f64>,
}

impl FoundPlan {
    pub fn candidate(&self) -> &Candidate {
        &self.candidates.candidates[self.chosen]
    }

    pub fn plan(&self) -> &Plan {
        &self.candidate().plan
    }

    pub fn metrics(&self) -> &PlanMetrics {
        &self.candidate().metrics
    }
}

/// Output of [`find_plan_budget`].
#[derive(Debug, Clone)]
pub struct BudgetPlan {
    pub plan: Plan,
    pub metrics: PlanMetrics,
    pub max_blocks: u64,
    /// False when the pipeline could not get under the budget. The plan is
    /// still the best effort found.
    pub feasible: bool,
}

/// Which sites [`balance_with`] may move tasks onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceScope {
    /// Every site in the scenario, used or not.
    #[default]
    AllSites,
    /// Only sites that hold tasks in the input plan.
    UsedSites,
}

/// Mutable working copy of a plan with cached per-site execution times.
///
/// Each site's task list is kept sorted longest execution first.
struct Layout<'a> {
    scenario: &'a Scenario,
    exec: &'a ExecTable,
    deploy: Time,
    block: Time,
    members: Vec<Vec<TaskIx>>,
    site_exec: Vec<Time>,
    /// Per location, sites closest first.
    closest: Vec<Vec<SiteIx>>,
    open: Vec<bool>,
}

impl<'a> Layout<'a> {
    fn new(scenario: &'a Scenario, exec: &'a ExecTable, plan: &Plan) -> Self {
        let mut members: Vec<Vec<TaskIx>> = plan.per_site().to_vec();
        for (c, tasks) in members.iter_mut().enumerate() {
            tasks.sort_by_key(|&t| (Reverse(exec.get(t, SiteIx(c))), t));
        }
        let site_exec = members
            .iter()
            .enumerate()
            .map(|(c, tasks)| tasks.iter().map(|&t| exec.get(t, SiteIx(c))).sum())
            .collect();
        let closest = (0..scenario.locations().len())
            .map(|l| {
                let row = &scenario.cost().transfer[l];
                let mut sites: Vec<SiteIx> = scenario.site_ixs().collect();
                sites.sort_by(|a, b| row[a.0].total_cmp(&row[b.0]).then(a.cmp(b)));
                sites
            })
            .collect();
        Layout {
            scenario,
            exec,
            deploy: scenario.cost().deploy(),
            block: scenario.cost().block(),
            open: vec![true; members.len()],
            members,
            site_exec,
            closest,
        }
    }

    fn restrict_to_used(&mut self) {
        for (open, tasks) in self.open.iter_mut().zip(&self.members) {
            *open = !tasks.is_empty();
        }
    }

    fn sites(&self) -> impl Iterator<Item = SiteIx> + '_ {
        (0..self.members.len()).map(SiteIx)
    }

    fn is_empty(&self, site: SiteIx) -> bool {
        self.members[site.0].is_empty()
    }

    fn running(&self, site: SiteIx) -> Time {
        running_with_deploy(self.site_exec[site.0], self.deploy)
    }

    /// Running time `site` would have after taking `task`.
    fn running_with(&self, site: SiteIx, task: TaskIx) -> Time {
        running_with_deploy(
            self.site_exec[site.0] + self.exec.get(task, site),
            self.deploy,
        )
    }

    fn blocks(&self, site: SiteIx) -> u64 {
        self.running(site).blocks_of(self.block)
    }

    fn total_blocks(&self) -> u64 {
        self.sites().map(|c| self.blocks(c)).sum()
    }

    /// Charged-but-unused time in the site's last block.
    fn waste(&self, site: SiteIx) -> Time {
        let rem = self.running(site).rem_of(self.block);
        if rem.is_zero() {
            Time::ZERO
        } else {
            self.block - rem
        }
    }

    /// Open sites other than `from`, closest to the task's data first.
    fn receivers(&self, task: TaskIx, from: SiteIx) -> impl Iterator<Item = SiteIx> + '_ {
        let loc = self.scenario.task(task).location;
        self.closest[loc.0]
            .iter()
            .copied()
            .filter(move |&c| c != from && self.open[c.0])
    }

    fn move_task(&mut self, task: TaskIx, from: SiteIx, to: SiteIx) {
        let src = &mut self.members[from.0];
        let pos = src.iter().position(|&t| t == task).expect("task on donor");
        src.remove(pos);
        self.site_exec[from.0] -= self.exec.get(task, from);
        let key = (Reverse(self.exec.get(task, to)), task);
        let exec = self.exec;
        let dst = &mut self.members[to.0];
        let at = dst.partition_point(|&t| (Reverse(exec.get(t, to)), t) < key);
        dst.insert(at, task);
        self.site_exec[to.0] += self.exec.get(task, to);
    }

    fn into_plan(self) -> Plan {
        Plan::new(self.members)
    }
}

/// Move bookkeeping for one heuristic run.
struct Moves {
    ledger: MoveLedger,
    /// Tasks with no unrecorded move left from their current site. Stays set
    /// until the task moves, since the ledger only grows.
    spent: Vec<bool>,
}

impl Moves {
    fn new(layout: &Layout<'_>) -> Self {
        let n_tasks = layout.scenario.tasks().len();
        Moves {
            ledger: MoveLedger::new(n_tasks, layout.members.len()),
            spent: vec![false; n_tasks],
        }
    }

    /// First unrecorded move off `donor` that `accept` allows, trying the
    /// donor's tasks longest first and receivers closest first.
    fn first_move(
        &mut self,
        layout: &Layout<'_>,
        donor: SiteIx,
        accept: impl Fn(&Layout<'_>, TaskIx, SiteIx) -> bool,
    ) -> Option<(TaskIx, SiteIx)> {
        for &task in &layout.members[donor.0] {
            if self.spent[task.0] {
                continue;
            }
            let mut untried = false;
            for to in layout.receivers(task, donor) {
                if self.ledger.contains(task, donor, to) {
                    continue;
                }
                untried = true;
                if accept(layout, task, to) {
                    return Some((task, to));
                }
            }
            if !untried {
                self.spent[task.0] = true;
            }
        }
        None
    }

    fn apply(&mut self, layout: &mut Layout<'_>, task: TaskIx, from: SiteIx, to: SiteIx) {
        layout.move_task(task, from, to);
        self.ledger.record(task, from, to);
        self.spent[task.0] = false;
    }
}

/// Assigns every task to the site with the lowest transfer rate from its data.
pub fn nearest_plan(scenario: &Scenario) -> Plan {
    let site_of: Vec<SiteIx> = scenario
        .task_ixs()
        .map(|t| {
            scenario
                .site_ixs()
                .min_by(|&a, &b| scenario.rate(t, a).total_cmp(&scenario.rate(t, b)))
                .expect("scenario has sites")
        })
        .collect();
    Plan::from_site_of(&site_of, scenario.sites().len())
}

/// Moves tasks off the sites wasting most of their last block until the plan
/// uses at most `min_tb` blocks or no legal move is left.
///
/// A move is legal only if it leaves the receiving site's block count
/// unchanged and has not been made before in this call. Donors are tried in
/// order of decreasing waste, and each donor's tasks longest first.
pub fn reduce_time_blocks(scenario: &Scenario, plan: &Plan, min_tb: u64) -> Result<Plan> {
    plan.validate(scenario)?;
    let exec = ExecTable::new(scenario);
    let mut layout = Layout::new(scenario, &exec, plan);
    reduce_layout(&mut layout, min_tb);
    Ok(layout.into_plan())
}

fn reduce_layout(layout: &mut Layout<'_>, min_tb: u64) {
    let mut ledger = Moves::new(layout);
    'select: while layout.total_blocks() > min_tb {
        let mut donors: Vec<SiteIx> = layout.sites().filter(|&c| !layout.is_empty(c)).collect();
        donors.sort_by_key(|&c| (Reverse(layout.waste(c)), c));
        for donor in donors {
            let found = ledger.first_move(layout, donor, |l, task, to| {
                l.running_with(to, task).blocks_of(l.block) == l.blocks(to)
            });
            if let Some((task, to)) = found {
                ledger.apply(layout, task, donor, to);
                continue 'select;
            }
        }
        return;
    }
}

/// Moves tasks off the longest-running site onto sites that would still
/// finish strictly before it did, until no such move is left.
pub fn balance(scenario: &Scenario, plan: &Plan) -> Result<Plan> {
    balance_with(scenario, plan, BalanceScope::AllSites)
}

/// [`balance`] with a choice of receiving sites.
///
/// With [`BalanceScope::UsedSites`] sites left empty by the input plan stay
/// empty, so the site count chosen by block reduction survives balancing.
pub fn balance_with(scenario: &Scenario, plan: &Plan, scope: BalanceScope) -> Result<Plan> {
    plan.validate(scenario)?;
    let exec = ExecTable::new(scenario);
    let mut layout = Layout::new(scenario, &exec, plan);
    if scope == BalanceScope::UsedSites {
        layout.restrict_to_used();
    }
    balance_layout(&mut layout);
    Ok(layout.into_plan())
}

fn balance_layout(layout: &mut Layout<'_>) {
    let mut ledger = Moves::new(layout);
    loop {
        let Some(donor) = layout
            .sites()
            .filter(|&c| !layout.is_empty(c))
            .max_by_key(|&c| (layout.running(c), Reverse(c)))
        else {
            return;
        };
        let donor_running = layout.running(donor);
        let found = ledger.first_move(layout, donor, |l, task, to| {
            l.running_with(to, task) < donor_running
        });
        match found {
            Some((task, to)) => ledger.apply(layout, task, donor, to),
            None => return,
        }
    }
}

fn pipeline(scenario: &Scenario, exec: &ExecTable, start: &Plan, min_tb: u64) -> (Plan, Plan) {
    let mut layout = Layout::new(scenario, exec, start);
    reduce_layout(&mut layout, min_tb);
    let reduced = Plan::new(layout.members.clone());
    layout.restrict_to_used();
    balance_layout(&mut layout);
    (reduced, layout.into_plan())
}

/// Builds the candidate set for every block target from 1 up to the nearest
/// plan's block count.
pub fn candidate_plans(scenario: &Scenario) -> CandidateSet {
    let exec = ExecTable::new(scenario);
    let nearest = nearest_plan(scenario);
    let upper = metrics_unchecked(&nearest, scenario).total_blocks.max(1);
    let plans: Vec<(u64, Plan)> = (1..=upper)
        .into_par_iter()
        .map(|min_tb| (min_tb, pipeline(scenario, &exec, &nearest, min_tb).1))
        .collect();
    let mut set = CandidateSet::default();
    for (min_tb, plan) in plans {
        let metrics = metrics_unchecked(&plan, scenario);
        set.insert(plan, metrics, min_tb);
    }
    set
}

/// Picks the candidate with the lowest β-weighted score.
pub fn find_plan(scenario: &Scenario, beta: BetaWeight) -> FoundPlan {
    select(candidate_plans(scenario), beta)
}

/// Ranks an existing candidate set for `beta`.
pub fn select(mut candidates: CandidateSet, beta: BetaWeight) -> FoundPlan {
    let metrics = candidates.metrics();
    let scores = crate::model::score_plans(&metrics, beta);
    let chosen = argmin_score(&metrics, beta).expect("candidate set is never empty");
    for (c, &s) in candidates.candidates.iter_mut().zip(&scores) {
        c.metrics.score = Some(s);
    }
    FoundPlan {
        chosen,
        candidates,
        scores,
    }
}

/// Runs the pipeline once with the block budget as its target.
///
/// Balancing may push a receiving site into a new block. If that takes an
/// in-budget reduced plan over budget, the reduced plan is returned instead.
pub fn find_plan_budget(scenario: &Scenario, max_blocks: u64) -> Result<BudgetPlan> {
    if max_blocks == 0 {
        return Err(Error::InvalidBudget(max_blocks));
    }
    let exec = ExecTable::new(scenario);
    let nearest = nearest_plan(scenario);
    let (reduced, balanced) = pipeline(scenario, &exec, &nearest, max_blocks);
    let balanced_metrics = metrics_unchecked(&balanced, scenario);
    let (plan, metrics) = if balanced_metrics.total_blocks <= max_blocks {
        (balanced, balanced_metrics)
    } else {
        let reduced_metrics = metrics_unchecked(&reduced, scenario);
        if reduced_metrics.total_blocks <= max_blocks {
            (reduced, reduced_metrics)
        } else {
            (balanced, balanced_metrics)
        }
    };
    Ok(BudgetPlan {
        feasible: metrics.total_blocks <= max_blocks,
        plan,
        metrics,
        max_blocks,
    })
}

/// Puts every task on the single site with the lowest total execution time.
pub fn centralised_plan(scenario: &Scenario) -> Plan {
    let exec = ExecTable::new(scenario);
    let best = scenario
        .site_ixs()
        .min_by_key(|&c| {
            let total: Time = scenario.task_ixs().map(|t| exec.get(t, c)).sum();
            (total, c)
        })
        .expect("scenario has sites");
    Plan::single_site(best, scenario.sites().len(), scenario.tasks().len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{plan_metrics, CostModel, DataLocation, LocationIx, Site, Task};

    /// One location per task, so each task can have its own transfer row.
    fn scenario(sizes: &[f64], rows: Vec<Vec<f64>>, deploy: f64, block: f64) -> Scenario {
        let n_sites = rows[0].len();
        Scenario::new(
            (0..rows.len())
                .map(|i| DataLocation {
                    id: format!("l{i}"),
                    label: String::new(),
                })
                .collect(),
            (0..n_sites)
                .map(|i| Site {
                    id: format!("s{i}"),
                    label: String::new(),
                })
                .collect(),
            sizes
                .iter()
                .enumerate()
                .map(|(i, &size)| Task {
                    id: format!("t{i}"),
                    location: LocationIx(i.min(rows.len() - 1)),
                    size,
                })
                .collect(),
            CostModel {
                transfer: rows,
                compute_rate: 1.0,
                deploy_time: deploy,
                block_seconds: block,
                unit_cost: 1.0,
            },
        )
        .unwrap()
    }

    fn plan(per_site: &[&[usize]]) -> Plan {
        Plan::new(
            per_site
                .iter()
                .map(|ts| ts.iter().map(|&t| TaskIx(t)).collect())
                .collect(),
        )
    }

    #[test]
    fn ledger_records_once() {
        let mut l = MoveLedger::new(1, 2);
        assert!(l.record(TaskIx(0), SiteIx(0), SiteIx(1)));
        assert!(!l.record(TaskIx(0), SiteIx(0), SiteIx(1)));
        assert!(l.contains(TaskIx(0), SiteIx(0), SiteIx(1)));
        assert!(!l.contains(TaskIx(0), SiteIx(1), SiteIx(0)));
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn nearest_plan_follows_argmin() {
        let sc = scenario(
            &[1.0, 1.0],
            vec![vec![1.0, 9.0], vec![9.0, 1.0]],
            0.0,
            3600.0,
        );
        assert_eq!(nearest_plan(&sc), plan(&[&[0], &[1]]));
    }

    #[test]
    fn nearest_plan_ties_go_to_first_site() {
        let sc = scenario(&[1.0, 2.0, 3.0], vec![vec![2.0, 2.0, 2.0]], 0.0, 3600.0);
        assert_eq!(nearest_plan(&sc), plan(&[&[0, 1, 2], &[], &[]]));
    }

    #[test]
    fn nearest_plan_single_site() {
        let sc = scenario(&[1.0, 2.0], vec![vec![5.0]], 0.0, 3600.0);
        assert_eq!(nearest_plan(&sc), plan(&[&[0, 1]]));
    }

    #[test]
    fn reduce_empties_short_site() {
        // block 100 s, zero transfer: site 0 runs 10 s, site 1 runs 10 s.
        let sc = scenario(&[10.0, 5.0, 5.0], vec![vec![0.0, 0.0]], 0.0, 100.0);
        let start = plan(&[&[0], &[1, 2]]);
        assert_eq!(plan_metrics(&start, &sc).unwrap().total_blocks, 2);
        let out = reduce_time_blocks(&sc, &start, 1).unwrap();
        assert_eq!(out, plan(&[&[], &[0, 1, 2]]));
        assert_eq!(plan_metrics(&out, &sc).unwrap().total_blocks, 1);
    }

    #[test]
    fn reduce_stops_when_target_already_met() {
        let sc = scenario(&[10.0, 5.0, 5.0], vec![vec![0.0, 0.0]], 0.0, 100.0);
        let start = plan(&[&[0], &[1, 2]]);
        assert_eq!(reduce_time_blocks(&sc, &start, 2).unwrap(), start);
    }

    #[test]
    fn reduce_single_site_is_noop() {
        let sc = scenario(&[60.0, 70.0], vec![vec![0.0]], 0.0, 100.0);
        let start = plan(&[&[0, 1]]);
        assert_eq!(reduce_time_blocks(&sc, &start, 1).unwrap(), start);
    }

    #[test]
    fn reduce_never_grows_receiver_blocks() {
        // Each site is at 60 s of a 100 s block; any move would overflow.
        let sc = scenario(&[60.0, 60.0], vec![vec![0.0, 0.0]], 0.0, 100.0);
        let start = plan(&[&[0], &[1]]);
        assert_eq!(reduce_time_blocks(&sc, &start, 1).unwrap(), start);
    }

    #[test]
    fn balance_splits_two_equal_tasks() {
        let sc = scenario(&[50.0, 50.0], vec![vec![0.0, 0.0]], 0.0, 3600.0);
        let out = balance(&sc, &plan(&[&[0, 1], &[]])).unwrap();
        let m = plan_metrics(&out, &sc).unwrap();
        assert_eq!(m.per_site_exec, vec![Time::from_secs_f64(50.0); 2]);
        assert_eq!(out, plan(&[&[1], &[0]]));
    }

    #[test]
    fn balance_leaves_balanced_plan_alone() {
        let sc = scenario(&[50.0, 50.0], vec![vec![0.0, 0.0]], 0.0, 3600.0);
        let start = plan(&[&[0], &[1]]);
        assert_eq!(balance(&sc, &start).unwrap(), start);
        let single = scenario(&[50.0, 50.0], vec![vec![0.0]], 0.0, 3600.0);
        let start = plan(&[&[0, 1]]);
        assert_eq!(balance(&single, &start).unwrap(), start);
    }

    #[test]
    fn balance_prefers_closest_receiver() {
        let sc = scenario(&[50.0, 50.0], vec![vec![0.0, 0.2, 0.1]], 10.0, 3600.0);
        let out = balance(&sc, &plan(&[&[0, 1], &[], &[]])).unwrap();
        assert_eq!(out, plan(&[&[1], &[], &[0]]));
    }

    #[test]
    fn balance_tries_shorter_tasks_when_longest_cannot_move() {
        // Site 0: tasks of 90 s and 10 s; site 1 holds 85 s.
        // The 90 s task would make site 1 finish at 175 > 100; the 10 s task fits.
        let sc = scenario(&[90.0, 10.0, 85.0], vec![vec![0.0, 0.0]], 0.0, 3600.0);
        let out = balance(&sc, &plan(&[&[0, 1], &[2]])).unwrap();
        assert_eq!(out, plan(&[&[0], &[1, 2]]));
    }

    #[test]
    fn centralised_picks_cheapest_site() {
        let sc = scenario(&[10.0, 10.0], vec![vec![5.0, 10.0]], 0.0, 3600.0);
        assert_eq!(centralised_plan(&sc), plan(&[&[0, 1], &[]]));
        let sc = scenario(&[10.0, 10.0], vec![vec![10.0, 5.0]], 0.0, 3600.0);
        assert_eq!(centralised_plan(&sc), plan(&[&[], &[0, 1]]));
        let tie = scenario(&[10.0], vec![vec![3.0, 3.0]], 0.0, 3600.0);
        assert_eq!(centralised_plan(&tie), plan(&[&[0], &[]]));
        let one = scenario(&[10.0], vec![vec![3.0]], 0.0, 3600.0);
        assert_eq!(centralised_plan(&one), plan(&[&[0]]));
    }

    #[test]
    fn budget_zero_is_rejected() {
        let sc = scenario(&[10.0], vec![vec![3.0]], 0.0, 3600.0);
        assert!(matches!(
            find_plan_budget(&sc, 0),
            Err(Error::InvalidBudget(0))
        ));
    }

    #[test]
    fn budget_at_nearest_bound_is_feasible() {
        let sc = scenario(
            &[40.0, 30.0, 20.0, 50.0],
            vec![
                vec![0.1, 1.0, 2.0],
                vec![1.0, 0.1, 2.0],
                vec![2.0, 1.0, 0.1],
                vec![0.1, 2.0, 1.0],
            ],
            5.0,
            100.0,
        );
        let nearest_blocks = plan_metrics(&nearest_plan(&sc), &sc).unwrap().total_blocks;
        let out = find_plan_budget(&sc, nearest_blocks).unwrap();
        assert!(out.feasible);
        assert!(out.metrics.total_blocks <= nearest_blocks);
        let huge = find_plan_budget(&sc, 1_000).unwrap();
        assert!(huge.feasible);
    }

    #[test]
    fn budget_unreachable_is_flagged() {
        // Two 80 s tasks in 100 s blocks: any plan needs at least 2 blocks.
        let sc = scenario(&[80.0, 80.0], vec![vec![0.0, 0.0]], 0.0, 100.0);
        let out = find_plan_budget(&sc, 1).unwrap();
        assert!(!out.feasible);
        assert_eq!(out.metrics.total_blocks, 2);
        out.plan.validate(&sc).unwrap();
    }

    #[test]
    fn used_sites_scope_keeps_empty_sites_empty() {
        let sc = scenario(&[50.0, 50.0, 50.0], vec![vec![0.0, 0.0, 0.0]], 0.0, 3600.0);
        let start = plan(&[&[0, 1, 2], &[], &[]]);
        assert_eq!(
            balance_with(&sc, &start, BalanceScope::UsedSites).unwrap(),
            start
        );
        let start = plan(&[&[0, 1, 2], &[], &[]]);
        let all = balance(&sc, &start).unwrap();
        assert_eq!(all.sites_used(), 3);
        let two = plan(&[&[0, 1], &[], &[2]]);
        let out = balance_with(&sc, &two, BalanceScope::UsedSites).unwrap();
        assert!(out.tasks_on(SiteIx(1)).is_empty());
    }

    #[test]
    fn find_plan_extremes() {
        let rows = (0..4)
            .map(|i| (0..4).map(|c| if c == i { 0.0 } else { 0.5 }).collect())
            .collect();
        let sc = scenario(&[15.0; 4], rows, 5.0, 100.0);
        let cheap = find_plan(&sc, BetaWeight::new(0.0).unwrap());
        let fast = find_plan(&sc, BetaWeight::new(1.0).unwrap());
        let min_blocks = cheap
            .candidates
            .iter()
            .map(|c| c.metrics.total_blocks)
            .min();
        let min_exec = fast.candidates.iter().map(|c| c.metrics.overall_exec).min();
        assert_eq!(Some(cheap.metrics().total_blocks), min_blocks);
        assert_eq!(Some(fast.metrics().overall_exec), min_exec);
        assert!(cheap.candidates.len() >= 2, "{:?}", cheap.candidates);
    }

    #[test]
    fn candidate_set_deduplicates() {
        let sc = scenario(&[10.0], vec![vec![0.0, 0.0]], 0.0, 100.0);
        let mut set = CandidateSet::default();
        let p = plan(&[&[0], &[]]);
        let m = plan_metrics(&p, &sc).unwrap();
        assert_eq!(set.insert(p.clone(), m.clone(), 1), 0);
        assert_eq!(set.insert(p, m.clone(), 2), 0);
        assert_eq!(set.insert(plan(&[&[], &[0]]), m, 3), 1);
        assert_eq!(set.len(), 2);
        assert_eq!(set.get(0).unwrap().min_tb, vec![1, 2]);
    }
}
