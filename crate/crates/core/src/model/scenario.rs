use std::collections::HashSet;

use serde::Serialize;

use super::time::Time;
use crate::error::{Error, Result};

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub usize);

        impl $name {
            pub const fn index(self) -> usize {
                self.0
            }
        }
    };
}

index_type!(
    /// Position of a data location within its scenario.
    LocationIx
);
index_type!(
    /// Position of a site within its scenario. Lower positions win ties.
    SiteIx
);
index_type!(
    /// Position of a task within its scenario's bag.
    TaskIx
);

/// A place where task input data lives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataLocation {
    pub id: String,
    pub label: String,
}

/// A cloud region hosting exactly one executor VM.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Site {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Task {
    pub id: String,
    pub location: LocationIx,
    /// Data size in abstract units; strictly positive.
    pub size: f64,
}

/// Rates, deployment time and billing parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostModel {
    /// Seconds per data unit, `transfer[location][site]`.
    pub transfer: Vec<Vec<f64>>,
    /// Seconds per data unit, identical on every site.
    pub compute_rate: f64,
    pub deploy_time: f64,
    pub block_seconds: f64,
    /// Currency per started block.
    pub unit_cost: f64,
}

impl CostModel {
    pub const DEFAULT_BLOCK_SECONDS: f64 = 3600.0;

    pub fn transfer_rate(&self, location: LocationIx, site: SiteIx) -> Result<f64> {
        self.transfer
            .get(location.0)
            .and_then(|row| row.get(site.0))
            .copied()
            .ok_or(Error::MissingRate {
                location: location.0,
                site: site.0,
            })
    }

    pub fn deploy(&self) -> Time {
        Time::from_secs_f64(self.deploy_time)
    }

    pub fn block(&self) -> Time {
        Time::from_secs_f64(self.block_seconds)
    }
}

/// The user's performance-vs-cost preference: 1 favours makespan, 0 favours blocks.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct BetaWeight(f64);

impl BetaWeight {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(BetaWeight(value))
        } else {
            Err(Error::InvalidBeta(value))
        }
    }

    pub const fn value(self) -> f64 {
        self.0
    }
}

/// A validated problem instance.
///
/// Construction checks every cross-reference, so the indices stored in tasks
/// and plans can be used without further bounds checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    locations: Vec<DataLocation>,
    sites: Vec<Site>,
    tasks: Vec<Task>,
    cost: CostModel,
}

impl Scenario {
    pub fn new(
        locations: Vec<DataLocation>,
        sites: Vec<Site>,
        tasks: Vec<Task>,
        cost: CostModel,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidScenario(msg));
        if sites.is_empty() {
            return invalid("scenario has no sites".into());
        }
        if tasks.is_empty() {
            return invalid("scenario has no tasks".into());
        }
        unique_ids("location", locations.iter().map(|l| l.id.as_str()))?;
        unique_ids("site", sites.iter().map(|s| s.id.as_str()))?;
        unique_ids("task", tasks.iter().map(|t| t.id.as_str()))?;

        if cost.transfer.len() != locations.len() {
            return invalid(format!(
                "transfer matrix has {} rows for {} locations",
                cost.transfer.len(),
                locations.len()
            ));
        }
        for (loc, row) in locations.iter().zip(&cost.transfer) {
            if row.len() < sites.len() {
                return invalid(format!(
                    "missing transfer rate for location '{}' to site '{}'",
                    loc.id,
                    sites[row.len()].id
                ));
            }
            if row.len() > sites.len() {
                return invalid(format!(
                    "location '{}' has {} transfer rates for {} sites",
                    loc.id,
                    row.len(),
                    sites.len()
                ));
            }
            for (site, &rate) in sites.iter().zip(row) {
                if !(rate.is_finite() && rate >= 0.0) {
                    return invalid(format!(
                        "transfer rate for location '{}' to site '{}' must be finite and non-negative, got {rate}",
                        loc.id, site.id
                    ));
                }
            }
        }
        for (name, value) in [
            ("compute_rate", cost.compute_rate),
            ("deploy_time", cost.deploy_time),
            ("unit_cost", cost.unit_cost),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return invalid(format!(
                    "{name} must be finite and non-negative, got {value}"
                ));
            }
        }
        if !(cost.block_seconds.is_finite() && cost.block().as_micros() > 0) {
            return invalid(format!(
                "block_seconds must be positive (at least one microsecond), got {}",
                cost.block_seconds
            ));
        }
        for task in &tasks {
            if task.location.0 >= locations.len() {
                return invalid(format!(
                    "task '{}' refers to unknown location #{}",
                    task.id, task.location.0
                ));
            }
            if !(task.size.is_finite() && task.size > 0.0) {
                return invalid(format!(
                    "task '{}' must have a finite positive size, got {}",
                    task.id, task.size
                ));
            }
        }

        Ok(Scenario {
            locations,
            sites,
            tasks,
            cost,
        })
    }

    pub fn locations(&self) -> &[DataLocation] {
        &self.locations
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn site(&self, ix: SiteIx) -> &Site {
        &self.sites[ix.0]
    }

    pub fn task(&self, ix: TaskIx) -> &Task {
        &self.tasks[ix.0]
    }

    pub fn site_ixs(&self) -> impl Iterator<Item = SiteIx> + Clone {
        (0..self.sites.len()).map(SiteIx)
    }

    pub fn task_ixs(&self) -> impl Iterator<Item = TaskIx> + Clone {
        (0..self.tasks.len()).map(TaskIx)
    }

    pub fn site_by_id(&self, id: &str) -> Option<SiteIx> {
        self.sites.iter().position(|s| s.id == id).map(SiteIx)
    }

    pub fn task_by_id(&self, id: &str) -> Option<TaskIx> {
        self.tasks.iter().position(|t| t.id == id).map(TaskIx)
    }

    /// Per-unit transfer rate from a task's data location to `site`.
    pub(crate) fn rate(&self, task: TaskIx, site: SiteIx) -> f64 {
        self.cost.transfer[self.tasks[task.0].location.0][site.0]
    }
}

fn unique_ids<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidScenario(format!(
                "duplicate {kind} id '{id}'"
            )));
        }
    }
    Ok(())
}
