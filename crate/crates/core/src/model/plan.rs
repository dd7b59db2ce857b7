use super::scenario::{Scenario, SiteIx, TaskIx};
use crate::error::{Error, Result};

/// An assignment of the task bag to sites.
///
/// Each site's task list is kept sorted so that two plans with the same
/// assignment compare equal regardless of how they were built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    per_site: Vec<Vec<TaskIx>>,
}

impl Plan {
    /// Builds a plan from per-site task lists. No validation is done here;
    /// call [`Plan::validate`] before trusting a plan from outside the crate.
    pub fn new(mut per_site: Vec<Vec<TaskIx>>) -> Self {
        for tasks in &mut per_site {
            tasks.sort_unstable();
        }
        Plan { per_site }
    }

    /// Builds a plan from a task → site vector.
    pub fn from_site_of(site_of: &[SiteIx], n_sites: usize) -> Self {
        let mut per_site = vec![Vec::new(); n_sites];
        for (t, site) in site_of.iter().enumerate() {
            per_site[site.0].push(TaskIx(t));
        }
        Plan { per_site }
    }

    /// Everything on one site.
    pub fn single_site(site: SiteIx, n_sites: usize, n_tasks: usize) -> Self {
        let mut per_site = vec![Vec::new(); n_sites];
        per_site[site.0] = (0..n_tasks).map(TaskIx).collect();
        Plan { per_site }
    }

    pub fn n_sites(&self) -> usize {
        self.per_site.len()
    }

    pub fn tasks_on(&self, site: SiteIx) -> &[TaskIx] {
        &self.per_site[site.0]
    }

    pub fn per_site(&self) -> &[Vec<TaskIx>] {
        &self.per_site
    }

    /// Number of sites with at least one task.
    pub fn sites_used(&self) -> usize {
        self.per_site.iter().filter(|t| !t.is_empty()).count()
    }

    /// Checks that every task appears on exactly one site and that the plan
    /// has one entry per scenario site.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let n_tasks = scenario.tasks().len();
        if self.per_site.len() != scenario.sites().len() {
            return Err(Error::InvalidPlan(format!(
                "plan covers {} sites, scenario has {}",
                self.per_site.len(),
                scenario.sites().len()
            )));
        }
        let mut owner: Vec<Option<usize>> = vec![None; n_tasks];
        for (site, tasks) in self.per_site.iter().enumerate() {
            for &t in tasks {
                let slot = owner.get_mut(t.0).ok_or_else(|| {
                    Error::InvalidPlan(format!("task #{} is not in the scenario", t.0))
                })?;
                if let Some(first) = slot.replace(site) {
                    return Err(Error::InvalidPlan(format!(
                        "task '{}' assigned to both '{}' and '{}'",
                        scenario.task(t).id,
                        scenario.sites()[first].id,
                        scenario.sites()[site].id
                    )));
                }
            }
        }
        if let Some(t) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidPlan(format!(
                "task '{}' is not assigned to any site",
                scenario.task(TaskIx(t)).id
            )));
        }
        Ok(())
    }

    /// Task → site vector. Only meaningful for valid plans.
    pub fn site_of(&self, n_tasks: usize) -> Vec<SiteIx> {
        let mut out = vec![SiteIx(0); n_tasks];
        for (site, tasks) in self.per_site.iter().enumerate() {
            for t in tasks {
                out[t.0] = SiteIx(site);
            }
        }
        out
    }
}
