//! Report documents and file output.
//!
//! Every report is one JSON object opening with `schema`, `command` and the
//! echoed `params`. Tables that plotting scripts want are also written as CSV
//! next to the JSON file: `<out>.json` gets `<out>.csv` and friends.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bodt_core::{Candidate, Plan, PlanMetrics, Scenario, SiteIx, TaskIx, Time};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "bodt-report v1";

#[derive(Debug, Serialize)]
pub struct Report<'a, P: Serialize, B: Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub params: &'a P,
    pub scenario: ScenarioSummary,
    #[serde(flatten)]
    pub body: B,
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub locations: usize,
    pub sites: usize,
    pub tasks: usize,
    pub compute_rate: f64,
    pub deploy_time: f64,
    pub block_seconds: f64,
    pub unit_cost: f64,
}

impl ScenarioSummary {
    pub fn of(scenario: &Scenario) -> Self {
        let cost = scenario.cost();
        ScenarioSummary {
            locations: scenario.locations().len(),
            sites: scenario.sites().len(),
            tasks: scenario.tasks().len(),
            compute_rate: cost.compute_rate,
            deploy_time: cost.deploy_time,
            block_seconds: cost.block_seconds,
            unit_cost: cost.unit_cost,
        }
    }
}

/// A plan as site id → task ids, every site listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub assignment: Vec<SiteTasks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteTasks {
    pub site: String,
    pub tasks: Vec<String>,
}

impl PlanDoc {
    pub fn of(plan: &Plan, scenario: &Scenario) -> Self {
        PlanDoc {
            assignment: scenario
                .site_ixs()
                .map(|c| SiteTasks {
                    site: scenario.site(c).id.clone(),
                    tasks: plan
                        .tasks_on(c)
                        .iter()
                        .map(|&t| scenario.task(t).id.clone())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_plan(&self, scenario: &Scenario) -> anyhow::Result<Plan> {
        let mut per_site: Vec<Vec<TaskIx>> = vec![Vec::new(); scenario.sites().len()];
        let mut seen_sites = HashSet::new();
        let mut seen_tasks = HashSet::new();
        for entry in &self.assignment {
            let Some(c) = scenario.site_by_id(&entry.site) else {
                bail!("plan names unknown site '{}'", entry.site);
            };
            if !seen_sites.insert(c) {
                bail!("plan lists site '{}' twice", entry.site);
            }
            for id in &entry.tasks {
                let Some(t) = scenario.task_by_id(id) else {
                    bail!("plan names unknown task '{id}'");
                };
                if !seen_tasks.insert(t) {
                    bail!("plan assigns task '{id}' more than once");
                }
                per_site[c.0].push(t);
            }
        }
        if let Some(t) = scenario.task_ixs().find(|t| !seen_tasks.contains(t)) {
            bail!("plan leaves task '{}' unassigned", scenario.task(t).id);
        }
        let plan = Plan::new(per_site);
        plan.validate(scenario)?;
        Ok(plan)
    }

    /// Reads a bare plan document, or the `chosen.plan` of a `plan` report.
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read plan file {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        let doc = if value.get("assignment").is_some() {
            value
        } else if let Some(plan) = value.get("chosen").and_then(|c| c.get("plan")) {
            plan.clone()
        } else if let Some(plan) = value.get("plan") {
            plan.clone()
        } else {
            bail!(
                "{} holds neither an `assignment` nor a report with a plan",
                path.display()
            );
        };
        serde_json::from_value(doc).with_context(|| format!("bad plan in {}", path.display()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteMetrics {
    pub site: String,
    pub tasks: usize,
    pub exec: Time,
    pub running: Time,
    pub blocks: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsDoc {
    pub sites_used: usize,
    pub total_blocks: u64,
    pub total_cost: f64,
    /// Makespan without deployment; this is what the score uses.
    pub overall_exec: Time,
    /// Largest running time, deployment included.
    pub overall_finish: Time,
    pub score: Option<f64>,
    pub per_site: Vec<SiteMetrics>,
}

impl MetricsDoc {
    pub fn of(metrics: &PlanMetrics, plan: &Plan, scenario: &Scenario) -> Self {
        MetricsDoc {
            sites_used: metrics.sites_used(),
            total_blocks: metrics.total_blocks,
            total_cost: metrics.total_cost,
            overall_exec: metrics.overall_exec,
            overall_finish: metrics.overall_finish(),
            score: metrics.score,
            per_site: scenario
                .site_ixs()
                .map(|c| SiteMetrics {
                    site: scenario.site(c).id.clone(),
                    tasks: plan.tasks_on(c).len(),
                    exec: metrics.per_site_exec[c.0],
                    running: metrics.per_site_running[c.0],
                    blocks: metrics.per_site_blocks[c.0],
                })
                .collect(),
        }
    }
}

/// One line of a candidate table.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub name: String,
    pub index: usize,
    pub min_tb: Vec<u64>,
    pub sites_used: usize,
    pub total_blocks: u64,
    pub overall_exec: Time,
    pub overall_finish: Time,
    pub total_cost: f64,
    pub score: Option<f64>,
}

impl CandidateRow {
    pub fn of(index: usize, name: &str, c: &Candidate) -> Self {
        CandidateRow {
            name: name.to_owned(),
            index,
            min_tb: c.min_tb.clone(),
            sites_used: c.metrics.sites_used(),
            total_blocks: c.metrics.total_blocks,
            overall_exec: c.metrics.overall_exec,
            overall_finish: c.metrics.overall_finish(),
            total_cost: c.metrics.total_cost,
            score: c.metrics.score,
        }
    }
}

/// `plan_<k>` by number of used sites; repeats become `plan_<k>-2`, `-3`, …
pub fn plan_names<'a>(plans: impl IntoIterator<Item = &'a Plan>) -> Vec<String> {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    plans
        .into_iter()
        .map(|p| {
            let k = p.sites_used();
            let n = seen.entry(k).or_insert(0);
            *n += 1;
            if *n == 1 {
                format!("plan_{k}")
            } else {
                format!("plan_{k}-{n}")
            }
        })
        .collect()
}

pub fn plan_name(plan: &Plan) -> String {
    format!("plan_{}", plan.sites_used())
}

/// Exact decimal seconds, as in traces.
pub fn secs(t: Time) -> String {
    t.to_string()
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// A CSV table to be written next to the JSON report.
pub struct Table {
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(
        suffix: impl Into<String>,
        header: impl IntoIterator<Item = S>,
    ) -> Self {
        Table {
            suffix: suffix.into(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }
}

/// `<out without extension><suffix>`.
pub fn companion(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.with_extension("").into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the JSON report to `out` (or stdout) and every table beside it.
/// Tables are skipped when writing to stdout.
pub fn emit<R: Serialize>(out: Option<&Path>, report: &R, tables: &[Table]) -> anyhow::Result<()> {
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    match out {
        None => {
            std::io::stdout().write_all(&json)?;
        }
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
            }
            fs::write(path, &json).with_context(|| format!("cannot write {}", path.display()))?;
            for table in tables {
                let p = companion(path, &table.suffix);
                fs::write(&p, table.to_bytes()?)
                    .with_context(|| format!("cannot write {}", p.display()))?;
            }
        }
    }
    Ok(())
}

/// Site id for CSV output.
pub fn site_id(scenario: &Scenario, c: SiteIx) -> &str {
    &scenario.site(c).id
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_keyed_by_site_count() {
        let a = Plan::new(vec![vec![TaskIx(0)], vec![TaskIx(1)], vec![]]);
        let b = Plan::new(vec![vec![TaskIx(0), TaskIx(1)], vec![], vec![]]);
        let c = Plan::new(vec![vec![TaskIx(1)], vec![], vec![TaskIx(0)]]);
        let d = Plan::new(vec![vec![], vec![TaskIx(1)], vec![TaskIx(0)]]);
        assert_eq!(
            plan_names([&a, &b, &c, &d]),
            ["plan_2", "plan_1", "plan_2-2", "plan_2-3"]
        );
    }

    #[test]
    fn companion_paths() {
        assert_eq!(
            companion(Path::new("r/plan.json"), ".csv"),
            PathBuf::from("r/plan.csv")
        );
        assert_eq!(
            companion(Path::new("out"), ".scores.csv"),
            PathBuf::from("out.scores.csv")
        );
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = Table::new(".csv", vec!["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(
            String::from_utf8(t.to_bytes().unwrap()).unwrap(),
            "a,b\n1,\"x,y\"\n"
        );
    }
}
