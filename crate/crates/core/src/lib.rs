//! Planning and simulation for bags of distributed tasks.
//!
//! A bag of distributed tasks is a set of independent tasks whose input data
//! sits at many different places. Running them on cloud VMs in several
//! regions trades money (VMs are billed per started hour) against makespan
//! (more VMs closer to the data finish sooner). This crate provides
//!
//! - [`model`]: the time and cost model and the plan score,
//! - [`heuristics`]: nearest-plan construction, block reduction, balancing
//!   and β-driven plan selection, plus the single-VM baseline,
//! - [`oracle`]: an exhaustive solver for checking the heuristics on small
//!   instances,
//! - [`sim`]: a discrete-event replay of plans, with optional transfer noise,
//! - [`workload`]: scenario files and synthetic scenario generation.

pub mod error;
pub mod heuristics;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
pub use heuristics::{
    balance, balance_with, centralised_plan, find_plan, find_plan_budget, nearest_plan,
    reduce_time_blocks, BalanceScope, BudgetPlan, Candidate, CandidateSet, FoundPlan, MoveLedger,
};
pub use model::{
    plan_metrics, BetaWeight, CostModel, DataLocation, LocationIx, Plan, PlanMetrics, Scenario,
    Site, SiteIx, Task, TaskIx, Time,
};
pub use oracle::{exact_optimum, optimality_gap, Objective, OracleConfig, OracleResult};
pub use sim::{evaluate_plans, simulate, NoiseSpec, PlanEntry, PlanKind, SimTrace, TaskOrder};
pub use workload::{generate_scenario, load_scenario, save_scenario, GeneratorSpec};
