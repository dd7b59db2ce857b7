//! Discrete-event replay of a plan.
//!
//! Every site with work deploys first, then runs its tasks one after another:
//! fetch the data, then process it. Sites run in parallel from time zero. In
//! deterministic mode the replay reproduces the model's running times exactly;
//! with noise, each task's transfer time is scaled by a log-normal factor.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    compute_time, metrics_unchecked, running_with_deploy, Plan, Scenario, SiteIx, TaskIx, Time,
};

/// Multiplicative log-normal noise on transfer times, `exp(N(0, sigma²))`,
/// drawn once per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub seed: u64,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(seed: u64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(NoiseSpec { seed, sigma })
    }

    /// The spec used for repetition `rep`; seeds depend only on
    /// (base seed, repetition), never on scheduling.
    pub fn for_repetition(&self, rep: u64) -> NoiseSpec {
        NoiseSpec {
            seed: self
                .seed
                .wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            sigma: self.sigma,
        }
    }

    /// One transfer multiplier per task, in task order.
    pub fn multipliers(&self, n_tasks: usize) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![1.0; n_tasks];
        }
        let dist = LogNormal::new(0.0, self.sigma).expect("sigma validated");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n_tasks).map(|_| dist.sample(&mut rng)).collect()
    }
}

/// Order in which a site works through its tasks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOrder {
    /// Scenario order.
    #[default]
    Canonical,
    /// Lexicographic by task id.
    ById,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DeployStart,
    DeployEnd,
    TransferStart,
    TransferEnd,
    ComputeStart,
    ComputeEnd,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::DeployStart => "deploy_start",
            EventKind::DeployEnd => "deploy_end",
            EventKind::TransferStart => "transfer_start",
            EventKind::TransferEnd => "transfer_end",
            EventKind::ComputeStart => "compute_start",
            EventKind::ComputeEnd => "compute_end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub at: Time,
    pub site: SiteIx,
    /// `None` for deployment events.
    pub task: Option<TaskIx>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    /// Ordered by timestamp, then site; per-site emission order is kept.
    pub events: Vec<SimEvent>,
    pub per_site_finish: Vec<Time>,
    pub measured_blocks: Vec<u64>,
    /// Realized transfer time of every task, in task order.
    pub task_transfer: Vec<Time>,
}

impl SimTrace {
    pub fn overall_finish(&self) -> Time {
        self.per_site_finish
            .iter()
            .copied()
            .max()
            .unwrap_or_default()
    }

    pub fn total_blocks(&self) -> u64 {
        self.measured_blocks.iter().sum()
    }

    /// Writes `timestamp,site,task,kind` rows with a header. Deployment rows
    /// have an empty task column.
    pub fn write_csv<W: Write>(&self, scenario: &Scenario, mut out: W) -> std::io::Result<()> {
        writeln!(out, "timestamp,site,task,kind")?;
        for e in &self.events {
            let task = e.task.map(|t| scenario.task(t).id.as_str()).unwrap_or("");
            writeln!(
                out,
                "{},{},{},{}",
                e.at,
                scenario.site(e.site).id,
                task,
                e.kind.as_str()
            )?;
        }
        Ok(())
    }
}

pub fn simulate(
    plan: &Plan,
    scenario: &Scenario,
    noise: Option<&NoiseSpec>,
    order: TaskOrder,
) -> Result<SimTrace> {
    let n = scenario.tasks().len();
    let multipliers = noise.map_or_else(|| vec![1.0; n], |spec| spec.multipliers(n));
    simulate_with_multipliers(plan, scenario, &multipliers, order)
}

/// Replays `plan` with explicit per-task transfer multipliers.
pub fn simulate_with_multipliers(
    plan: &Plan,
    scenario: &Scenario,
    multipliers: &[f64],
    order: TaskOrder,
) -> Result<SimTrace> {
    plan.validate(scenario)?;
    if multipliers.len() != scenario.tasks().len() {
        return Err(Error::InvalidSpec(format!(
            "{} transfer multipliers for {} tasks",
            multipliers.len(),
            scenario.tasks().len()
        )));
    }
    let cost = scenario.cost();
    let deploy = cost.deploy();
    let block = cost.block();

    let mut task_transfer = vec![Time::ZERO; scenario.tasks().len()];
    let mut events = Vec::new();
    let mut per_site_finish = Vec::with_capacity(scenario.sites().len());

    for site in scenario.site_ixs() {
        let mut tasks = plan.tasks_on(site).to_vec();
        if order == TaskOrder::ById {
            tasks.sort_by(|&a, &b| scenario.task(a).id.cmp(&scenario.task(b).id));
        }
        let work: Vec<(TaskIx, Time, Time)> = tasks
            .iter()
            .map(|&t| {
                let task = scenario.task(t);
                let base = Time::from_secs_f64(task.size * scenario.rate(t, site));
                (t, base.scale(multipliers[t.0]), compute_time(task, cost))
            })
            .collect();
        let exec: Time = work.iter().map(|&(_, tr, co)| tr + co).sum();
        let started = running_with_deploy(exec, deploy) > Time::ZERO;

        let mut clock = Time::ZERO;
        let mut emit = |at: Time, task: Option<TaskIx>, kind: EventKind| {
            events.push(SimEvent {
                at,
                site,
                task,
                kind,
            })
        };
        if started {
            emit(clock, None, EventKind::DeployStart);
            clock += deploy;
            emit(clock, None, EventKind::DeployEnd);
        }
        for (t, transfer, compute) in work {
            task_transfer[t.0] = transfer;
            emit(clock, Some(t), EventKind::TransferStart);
            clock += transfer;
            emit(clock, Some(t), EventKind::TransferEnd);
            emit(clock, Some(t), EventKind::ComputeStart);
            clock += compute;
            emit(clock, Some(t), EventKind::ComputeEnd);
        }
        per_site_finish.push(clock);
    }

    // Stable, so each site's emission order survives equal timestamps.
    events.sort_by_key(|e| (e.at, e.site));
    let measured_blocks = per_site_finish.iter().map(|f| f.blocks_of(block)).collect();
    Ok(SimTrace {
        events,
        per_site_finish,
        measured_blocks,
        task_transfer,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Decentralised,
    Centralised,
}

#[derive(Debug, Clone)]
pub struct PlanEntry {
    pub name: String,
    pub plan: Plan,
    pub kind: PlanKind,
}

/// One row of the predicted-vs-simulated table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub name: String,
    pub kind: PlanKind,
    pub sites_used: usize,
    pub predicted_blocks: u64,
    pub simulated_blocks_mean: f64,
    /// Largest running time including deployment, as a wall clock would see it.
    pub predicted_finish: Time,
    pub simulated_finish_mean: f64,
    /// Makespan excluding deployment, the quantity that enters the score.
    pub predicted_overall_exec: Time,
    /// Simulated blocks relative to the base plan's.
    pub cost_increase: Option<f64>,
    /// Base plan's simulated finish over this plan's.
    pub speedup: Option<f64>,
    /// Realized transfer seconds per data unit, averaged over all tasks
    /// and repetitions.
    pub transfer_secs_per_unit: f64,
    /// Data units moved per second of transfer; absent when nothing had to move.
    pub transfer_units_per_sec: Option<f64>,
    /// Every repetition billed exactly the predicted blocks.
    pub accurate: bool,
    /// Some repetition billed more blocks than predicted.
    pub underpredicted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub repetitions: u64,
    pub noise: Option<NoiseSpec>,
    /// Row used as the base for cost increase and speedup.
    pub base: usize,
    pub rows: Vec<EvalRow>,
}

/// Simulates every plan `repetitions` times and compares against the model.
///
/// The base plan is the decentralised entry using the fewest sites (first
/// such entry on ties); without decentralised entries it is the fewest-site
/// entry overall. Every plan sees the same per-task multipliers within a
/// repetition.
pub fn evaluate_plans(
    plans: &[PlanEntry],
    scenario: &Scenario,
    repetitions: u64,
    noise: Option<&NoiseSpec>,
) -> Result<EvalReport> {
    if repetitions == 0 {
        return Err(Error::InvalidSpec(
            "at least one repetition is required".into(),
        ));
    }
    if plans.is_empty() {
        return Err(Error::InvalidSpec("no plans to evaluate".into()));
    }
    let n = scenario.tasks().len();
    let total_size: f64 = scenario.tasks().iter().map(|t| t.size).sum();
    let rep_multipliers: Vec<Vec<f64>> = (0..repetitions)
        .map(|r| match noise {
            Some(spec) => spec.for_repetition(r).multipliers(n),
            None => vec![1.0; n],
        })
        .collect();

    struct Partial {
        predicted_blocks: u64,
        predicted_finish: Time,
        predicted_exec: Time,
        sites_used: usize,
        blocks_sum: u64,
        finish_sum: f64,
        transfer_sum: f64,
        accurate: bool,
        underpredicted: bool,
    }

    let mut partials = Vec::with_capacity(plans.len());
    for entry in plans {
        entry.plan.validate(scenario)?;
        let predicted = metrics_unchecked(&entry.plan, scenario);
        let mut p = Partial {
            predicted_blocks: predicted.total_blocks,
            predicted_finish: predicted.overall_finish(),
            predicted_exec: predicted.overall_exec,
            sites_used: entry.plan.sites_used(),
            blocks_sum: 0,
            finish_sum: 0.0,
            transfer_sum: 0.0,
            accurate: true,
            underpredicted: false,
        };
        for multipliers in &rep_multipliers {
            let trace = simulate_with_multipliers(
                &entry.plan,
                scenario,
                multipliers,
                TaskOrder::Canonical,
            )?;
            let blocks = trace.total_blocks();
            p.blocks_sum += blocks;
            p.finish_sum += trace.overall_finish().as_secs_f64();
            p.transfer_sum += trace
                .task_transfer
                .iter()
                .map(|t| t.as_secs_f64())
                .sum::<f64>();
            p.accurate &= blocks == p.predicted_blocks;
            p.underpredicted |= blocks > p.predicted_blocks;
        }
        partials.push(p);
    }

    let fewest = |kind: Option<PlanKind>| {
        plans
            .iter()
            .zip(&partials)
            .enumerate()
            .filter(|(_, (e, _))| kind.is_none_or(|k| e.kind == k))
            .min_by_key(|(i, (_, p))| (p.sites_used, *i))
            .map(|(i, _)| i)
    };
    let base = fewest(Some(PlanKind::Decentralised))
        .or_else(|| fewest(None))
        .expect("plans is non-empty");

    let reps = repetitions as f64;
    let base_blocks = partials[base].blocks_sum as f64 / reps;
    let base_finish = partials[base].finish_sum / reps;
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);

    let rows = plans
        .iter()
        .zip(&partials)
        .map(|(entry, p)| {
            let blocks_mean = p.blocks_sum as f64 / reps;
            let finish_mean = p.finish_sum / reps;
            let transfer_mean = p.transfer_sum / reps;
            EvalRow {
                name: entry.name.clone(),
                kind: entry.kind,
                sites_used: p.sites_used,
                predicted_blocks: p.predicted_blocks,
                simulated_blocks_mean: blocks_mean,
                predicted_finish: p.predicted_finish,
                simulated_finish_mean: finish_mean,
                predicted_overall_exec: p.predicted_exec,
                cost_increase: ratio(blocks_mean, base_blocks),
                speedup: ratio(base_finish, finish_mean),
                transfer_secs_per_unit: transfer_mean / total_size,
                transfer_units_per_sec: ratio(total_size, transfer_mean),
                accurate: p.accurate,
                underpredicted: p.underpredicted,
            }
        })
        .collect();

    Ok(EvalReport {
        repetitions,
        noise: noise.copied(),
        base,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{plan_metrics, CostModel, DataLocation, LocationIx, Site, Task};

    fn scenario(sizes: &[f64], rates: Vec<f64>, deploy: f64, block: f64) -> Scenario {
        Scenario::new(
            vec![DataLocation {
                id: "l".into(),
                label: String::new(),
            }],
            (0..rates.len())
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
                    location: LocationIx(0),
                    size,
                })
                .collect(),
            CostModel {
                transfer: vec![rates],
                compute_rate: 1.0,
                deploy_time: deploy,
                block_seconds: block,
                unit_cost: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_site_finish_is_deploy_plus_exec() {
        // exec 10 and 20 with zero transfer.
        let sc = scenario(&[10.0, 20.0], vec![0.0], 5.0, 3600.0);
        let plan = Plan::single_site(SiteIx(0), 1, 2);
        let trace = simulate(&plan, &sc, None, TaskOrder::Canonical).unwrap();
        assert_eq!(trace.per_site_finish, vec![Time::from_secs_f64(35.0)]);
        assert_eq!(trace.measured_blocks, vec![1]);
        assert_eq!(trace.events.len(), 2 + 2 * 4);
        assert_eq!(trace.events.last().unwrap().at, Time::from_secs_f64(35.0));
    }

    #[test]
    fn empty_sites_emit_nothing() {
        let sc = scenario(&[10.0], vec![0.5, 0.5], 5.0, 3600.0);
        let plan = Plan::single_site(SiteIx(1), 2, 1);
        let trace = simulate(&plan, &sc, None, TaskOrder::Canonical).unwrap();
        assert!(trace.events.iter().all(|e| e.site == SiteIx(1)));
        assert_eq!(trace.per_site_finish[0], Time::ZERO);
        assert_eq!(trace.measured_blocks[0], 0);
    }

    #[test]
    fn zero_sigma_matches_model() {
        let sc = scenario(&[3.0, 4.0, 5.0], vec![0.3, 0.7], 2.0, 10.0);
        let plan = Plan::new(vec![vec![TaskIx(0), TaskIx(2)], vec![TaskIx(1)]]);
        let model = plan_metrics(&plan, &sc).unwrap();
        let noise = NoiseSpec::new(42, 0.0).unwrap();
        let trace = simulate(&plan, &sc, Some(&noise), TaskOrder::Canonical).unwrap();
        assert_eq!(trace.per_site_finish, model.per_site_running);
        assert_eq!(trace.measured_blocks, model.per_site_blocks);
    }

    #[test]
    fn same_seed_same_trace() {
        let sc = scenario(&[3.0, 4.0, 5.0], vec![0.3, 0.7], 2.0, 10.0);
        let plan = Plan::new(vec![vec![TaskIx(0), TaskIx(2)], vec![TaskIx(1)]]);
        let noise = NoiseSpec::new(7, 0.8).unwrap();
        let a = simulate(&plan, &sc, Some(&noise), TaskOrder::Canonical).unwrap();
        let b = simulate(&plan, &sc, Some(&noise), TaskOrder::Canonical).unwrap();
        assert_eq!(a, b);
        let other = NoiseSpec::new(8, 0.8).unwrap();
        let c = simulate(&plan, &sc, Some(&other), TaskOrder::Canonical).unwrap();
        assert_ne!(a.per_site_finish, c.per_site_finish);
    }

    #[test]
    fn task_order_changes_trace_not_finish() {
        let mut sc_tasks = scenario(&[1.0, 2.0, 3.0], vec![0.5], 1.0, 100.0);
        // Rename so id order reverses scenario order.
        let tasks: Vec<Task> = sc_tasks
            .tasks()
            .iter()
            .enumerate()
            .map(|(i, t)| Task {
                id: format!("t{}", 9 - i),
                ..t.clone()
            })
            .collect();
        sc_tasks = Scenario::new(
            sc_tasks.locations().to_vec(),
            sc_tasks.sites().to_vec(),
            tasks,
            sc_tasks.cost().clone(),
        )
        .unwrap();
        let plan = Plan::single_site(SiteIx(0), 1, 3);
        let a = simulate(&plan, &sc_tasks, None, TaskOrder::Canonical).unwrap();
        let b = simulate(&plan, &sc_tasks, None, TaskOrder::ById).unwrap();
        assert_eq!(a.per_site_finish, b.per_site_finish);
        assert_eq!(a.events[2].task, Some(TaskIx(0)));
        assert_eq!(b.events[2].task, Some(TaskIx(2)));
    }

    #[test]
    fn csv_export() {
        let sc = scenario(&[1.0], vec![1.0], 0.5, 100.0);
        let plan = Plan::single_site(SiteIx(0), 1, 1);
        let trace = simulate(&plan, &sc, None, TaskOrder::Canonical).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&sc, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "timestamp,site,task,kind\n\
             0.000000,s0,,deploy_start\n\
             0.500000,s0,,deploy_end\n\
             0.500000,s0,t0,transfer_start\n\
             1.500000,s0,t0,transfer_end\n\
             1.500000,s0,t0,compute_start\n\
             2.500000,s0,t0,compute_end\n"
        );
    }

    #[test]
    fn evaluate_base_against_itself() {
        let sc = scenario(&[3.0, 4.0, 5.0], vec![0.3, 0.7], 2.0, 10.0);
        let split = Plan::new(vec![vec![TaskIx(0), TaskIx(2)], vec![TaskIx(1)]]);
        let entries = vec![
            PlanEntry {
                name: "plan_2".into(),
                plan: split,
                kind: PlanKind::Decentralised,
            },
            PlanEntry {
                name: "centralised".into(),
                plan: Plan::single_site(SiteIx(0), 2, 3),
                kind: PlanKind::Centralised,
            },
        ];
        let report = evaluate_plans(&entries, &sc, 3, None).unwrap();
        assert_eq!(report.base, 0);
        let base = &report.rows[0];
        assert_eq!(base.cost_increase, Some(1.0));
        assert_eq!(base.speedup, Some(1.0));
        for row in &report.rows {
            assert!(row.accurate && !row.underpredicted);
            assert_eq!(row.simulated_blocks_mean, row.predicted_blocks as f64);
            assert_eq!(
                row.simulated_finish_mean,
                row.predicted_finish.as_secs_f64()
            );
        }
        assert!(evaluate_plans(&entries, &sc, 0, None).is_err());
    }

    #[test]
    fn noise_spec_rejects_negative_sigma() {
        assert!(NoiseSpec::new(1, -0.1).is_err());
        assert!(NoiseSpec::new(1, f64::NAN).is_err());
    }
}
