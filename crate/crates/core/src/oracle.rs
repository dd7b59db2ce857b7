//! Exhaustive reference solver for small instances.
//!
//! Every task → site assignment is enumerated in lexicographic order (first
//! task most significant, lower sites first), so the first minimum found is
//! the lexicographically smallest optimal assignment. Partial assignments are
//! pruned once their makespan, block count or score already reaches the
//! incumbent; all three only grow as tasks are added, so pruning never
//! discards a better or earlier-ranked solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heuristics::{find_plan, FoundPlan};
use crate::model::{
    running_with_deploy, BetaWeight, ExecTable, Normalizer, Plan, PlanMetrics, Scenario, SiteIx,
    TaskIx, Time,
};

pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Score,
    Makespan,
    Blocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest `|C|^|T|` the oracle accepts.
    pub cap: u64,
    pub prune: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            cap: DEFAULT_CAP,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub best_plan: Plan,
    pub objective: Objective,
    /// Score of the best plan, normalized over every feasible assignment.
    pub best_score: f64,
    pub best_makespan: Time,
    pub best_blocks: u64,
    /// Complete assignments evaluated in the minimizing pass.
    pub enumerated: u64,
    #[serde(skip)]
    pub normalizer: Normalizer,
}

pub fn exact_optimum(
    scenario: &Scenario,
    beta: BetaWeight,
    objective: Objective,
) -> Result<OracleResult> {
    exact_optimum_with(scenario, beta, objective, &OracleConfig::default())
}

pub fn exact_optimum_with(
    scenario: &Scenario,
    beta: BetaWeight,
    objective: Objective,
    config: &OracleConfig,
) -> Result<OracleResult> {
    check_cap(scenario, config.cap)?;
    let search = Search::new(scenario);
    let normalizer = search.maxima();

    let mut best = Best {
        value: None,
        site_of: Vec::new(),
    };
    let mut state = State::new(&search);
    let mut enumerated = 0;
    search.minimize(
        &mut state,
        &mut best,
        &mut enumerated,
        &Goal {
            objective,
            beta,
            normalizer,
            prune: config.prune,
        },
    );

    let best_plan = Plan::from_site_of(&best.site_of, scenario.sites().len());
    let m = crate::model::metrics_unchecked(&best_plan, scenario);
    Ok(OracleResult {
        best_score: normalizer.score(m.overall_exec, m.total_blocks, beta),
        best_makespan: m.overall_exec,
        best_blocks: m.total_blocks,
        best_plan,
        objective,
        enumerated,
        normalizer,
    })
}

/// Heuristic vs exact comparison on one instance.
#[derive(Debug, Clone)]
pub struct OptimalityGap {
    pub heuristic: FoundPlan,
    /// The heuristic's pick, scored with the oracle's normalization so the two
    /// scores are on the same scale.
    pub heuristic_score: f64,
    pub oracle: OracleResult,
    pub gap: f64,
}

/// `heuristic score − oracle score` for `beta`; never negative.
pub fn optimality_gap(scenario: &Scenario, beta: BetaWeight) -> Result<OptimalityGap> {
    optimality_gap_with(scenario, beta, &OracleConfig::default())
}

pub fn optimality_gap_with(
    scenario: &Scenario,
    beta: BetaWeight,
    config: &OracleConfig,
) -> Result<OptimalityGap> {
    let oracle = exact_optimum_with(scenario, beta, Objective::Score, config)?;
    let heuristic = find_plan(scenario, beta);
    let heuristic_score = score_under(&oracle.normalizer, heuristic.metrics(), beta);
    Ok(OptimalityGap {
        gap: heuristic_score - oracle.best_score,
        heuristic,
        heuristic_score,
        oracle,
    })
}

fn score_under(norm: &Normalizer, m: &PlanMetrics, beta: BetaWeight) -> f64 {
    norm.score(m.overall_exec, m.total_blocks, beta)
}

fn check_cap(scenario: &Scenario, cap: u64) -> Result<()> {
    let sites = scenario.sites().len() as u64;
    let tasks = u32::try_from(scenario.tasks().len()).unwrap_or(u32::MAX);
    match sites.checked_pow(tasks) {
        Some(n) if n <= cap => Ok(()),
        Some(n) => Err(Error::CapExceeded {
            needed: n.to_string(),
            cap,
        }),
        None => Err(Error::CapExceeded {
            needed: format!("{sites}^{tasks}"),
            cap,
        }),
    }
}

struct Goal {
    objective: Objective,
    beta: BetaWeight,
    normalizer: Normalizer,
    prune: bool,
}

/// Objective values are compared as f64; makespan and blocks are exact
/// integers well inside f64's integer range at oracle scale.
struct Best {
    value: Option<f64>,
    site_of: Vec<SiteIx>,
}

struct Search {
    exec: ExecTable,
    n_tasks: usize,
    n_sites: usize,
    deploy: Time,
    block: Time,
}

struct State {
    site_exec: Vec<Time>,
    site_of: Vec<SiteIx>,
}

impl State {
    fn new(search: &Search) -> Self {
        State {
            site_exec: vec![Time::ZERO; search.n_sites],
            site_of: Vec::with_capacity(search.n_tasks),
        }
    }
}

impl Search {
    fn new(scenario: &Scenario) -> Self {
        Search {
            exec: ExecTable::new(scenario),
            n_tasks: scenario.tasks().len(),
            n_sites: scenario.sites().len(),
            deploy: scenario.cost().deploy(),
            block: scenario.cost().block(),
        }
    }

    fn makespan(&self, state: &State) -> Time {
        state.site_exec.iter().copied().max().unwrap_or_default()
    }

    fn blocks(&self, state: &State) -> u64 {
        state
            .site_exec
            .iter()
            .map(|&e| running_with_deploy(e, self.deploy).blocks_of(self.block))
            .sum()
    }

    fn value(&self, state: &State, goal: &Goal) -> f64 {
        match goal.objective {
            Objective::Makespan => self.makespan(state).as_micros() as f64,
            Objective::Blocks => self.blocks(state) as f64,
            Objective::Score => {
                goal.normalizer
                    .score(self.makespan(state), self.blocks(state), goal.beta)
            }
        }
    }

    /// First pass: maxima of makespan and blocks over every assignment.
    fn maxima(&self) -> Normalizer {
        let mut state = State::new(self);
        let mut norm = Normalizer {
            max_exec: Time::ZERO,
            max_blocks: 0,
        };
        self.visit_all(&mut state, &mut |s| {
            norm.max_exec = norm.max_exec.max(self.makespan(s));
            norm.max_blocks = norm.max_blocks.max(self.blocks(s));
        });
        norm
    }

    fn visit_all(&self, state: &mut State, f: &mut impl FnMut(&State)) {
        let depth = state.site_of.len();
        if depth == self.n_tasks {
            f(state);
            return;
        }
        let task = TaskIx(depth);
        for c in 0..self.n_sites {
            let site = SiteIx(c);
            let e = self.exec.get(task, site);
            state.site_exec[c] += e;
            state.site_of.push(site);
            self.visit_all(state, f);
            state.site_of.pop();
            state.site_exec[c] -= e;
        }
    }

    /// Second pass: depth-first minimization in lexicographic order.
    fn minimize(&self, state: &mut State, best: &mut Best, enumerated: &mut u64, goal: &Goal) {
        let depth = state.site_of.len();
        if depth == self.n_tasks {
            *enumerated += 1;
            let v = self.value(state, goal);
            if best.value.is_none_or(|b| v < b) {
                best.value = Some(v);
                best.site_of.clone_from(&state.site_of);
            }
            return;
        }
        let task = TaskIx(depth);
        for c in 0..self.n_sites {
            let site = SiteIx(c);
            let e = self.exec.get(task, site);
            state.site_exec[c] += e;
            state.site_of.push(site);
            let pruned = goal.prune && best.value.is_some_and(|b| self.value(state, goal) >= b);
            if !pruned {
                self.minimize(state, best, enumerated, goal);
            }
            state.site_of.pop();
            state.site_exec[c] -= e;
        }
    }
}
