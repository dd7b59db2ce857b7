use std::path::Path;

use anyhow::anyhow;
use bodt_core::heuristics::{candidate_plans, select};
use bodt_core::oracle::{exact_optimum_with, optimality_gap_with, DEFAULT_CAP};
use bodt_core::sim::{simulate as replay, EvalRow};
use bodt_core::{
    centralised_plan, evaluate_plans, find_plan_budget, generate_scenario, load_scenario,
    plan_metrics, save_scenario, BetaWeight, GeneratorSpec, NoiseSpec, Objective, OracleConfig,
    Plan, PlanEntry, PlanKind, Scenario, TaskOrder, Time,
};
use serde::Serialize;

use crate::report::{
    emit, opt, plan_name, plan_names, secs, site_id, CandidateRow, MetricsDoc, PlanDoc, Report,
    ScenarioSummary, Table,
};
use crate::{exit, BudgetArgs, Failure, GenerateArgs, Order, PlanArgs, SimulateArgs, SweepArgs};

type Outcome = Result<u8, Failure>;

pub const ORACLE_CAP_ENV: &str = "BODT_ORACLE_CAP";

fn load(path: &Path) -> Result<Scenario, Failure> {
    Ok(load_scenario(path)?)
}

fn beta(value: f64) -> Result<BetaWeight, Failure> {
    Ok(BetaWeight::new(value)?)
}

/// Re-checks every plan about to be reported.
fn check<'a>(
    plans: impl IntoIterator<Item = &'a Plan>,
    scenario: &Scenario,
) -> Result<(), Failure> {
    for p in plans {
        p.validate(scenario)
            .map_err(|e| Failure::internal(anyhow!("produced an invalid plan: {e}")))?;
    }
    Ok(())
}

fn write<P: Serialize, B: Serialize>(
    command: &'static str,
    params: &P,
    out: Option<&Path>,
    scenario: &Scenario,
    body: B,
    tables: &[Table],
) -> Result<(), Failure> {
    let report = Report {
        schema: crate::report::SCHEMA,
        command,
        params,
        scenario: ScenarioSummary::of(scenario),
        body,
    };
    emit(out, &report, tables).map_err(Failure::input)
}

fn candidate_table(rows: &[CandidateRow]) -> Table {
    let mut t = Table::new(
        ".csv",
        vec![
            "name",
            "index",
            "min_tb",
            "sites_used",
            "total_blocks",
            "overall_exec",
            "overall_finish",
            "total_cost",
            "score",
        ],
    );
    for r in rows {
        t.push(vec![
            r.name.clone(),
            r.index.to_string(),
            r.min_tb
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            r.sites_used.to_string(),
            r.total_blocks.to_string(),
            secs(r.overall_exec),
            secs(r.overall_finish),
            r.total_cost.to_string(),
            opt(r.score),
        ]);
    }
    t
}

fn site_table(suffix: &str, metrics: &MetricsDoc) -> Table {
    let mut t = Table::new(suffix, vec!["site", "tasks", "exec", "running", "blocks"]);
    for s in &metrics.per_site {
        t.push(vec![
            s.site.clone(),
            s.tasks.to_string(),
            secs(s.exec),
            secs(s.running),
            s.blocks.to_string(),
        ]);
    }
    t
}

#[derive(Serialize)]
struct Chosen {
    name: String,
    index: usize,
    plan: PlanDoc,
    metrics: MetricsDoc,
}

#[derive(Serialize)]
struct PlanBody {
    chosen: Chosen,
    candidates: Vec<CandidateRow>,
}

pub fn plan(args: &PlanArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let b = beta(args.beta)?;
    let found = select(candidate_plans(&sc), b);
    check(found.candidates.iter().map(|c| &c.plan), &sc)?;
    let names = plan_names(found.candidates.iter().map(|c| &c.plan));
    let rows: Vec<CandidateRow> = found
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| CandidateRow::of(i, &names[i], c))
        .collect();
    let chosen = Chosen {
        name: names[found.chosen].clone(),
        index: found.chosen,
        plan: PlanDoc::of(found.plan(), &sc),
        metrics: MetricsDoc::of(found.metrics(), found.plan(), &sc),
    };
    let tables = [
        candidate_table(&rows),
        site_table(".sites.csv", &chosen.metrics),
    ];
    let body = PlanBody {
        chosen,
        candidates: rows,
    };
    write("plan", args, args.out.as_deref(), &sc, body, &tables)?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    chosen: String,
    index: usize,
    sites_used: usize,
    total_blocks: u64,
    overall_exec: Time,
    overall_finish: Time,
    score: f64,
}

#[derive(Serialize)]
struct ScoreMatrix {
    candidates: Vec<String>,
    /// One row per β, one score per candidate.
    scores: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SweepBody {
    rows: Vec<SweepRow>,
    /// Blocks never fall and makespan never rises as β grows along the list.
    monotone: bool,
    candidates: Vec<CandidateRow>,
    score_matrix: ScoreMatrix,
}

pub fn default_betas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let values = args.betas.clone().unwrap_or_else(default_betas);
    if values.is_empty() {
        return Err(Failure::input(anyhow!("--betas needs at least one value")));
    }
    let betas = values
        .iter()
        .map(|&v| beta(v))
        .collect::<Result<Vec<_>, _>>()?;
    let set = candidate_plans(&sc);
    check(set.iter().map(|c| &c.plan), &sc)?;
    let names = plan_names(set.iter().map(|c| &c.plan));
    let picks: Vec<_> = betas.iter().map(|&b| select(set.clone(), b)).collect();

    let rows: Vec<SweepRow> = picks
        .iter()
        .zip(&values)
        .map(|(f, &v)| {
            let m = f.metrics();
            SweepRow {
                beta: v,
                chosen: names[f.chosen].clone(),
                index: f.chosen,
                sites_used: m.sites_used(),
                total_blocks: m.total_blocks,
                overall_exec: m.overall_exec,
                overall_finish: m.overall_finish(),
                score: f.scores[f.chosen],
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let monotone = order.windows(2).all(|w| {
        let (lo, hi) = (&rows[w[0]], &rows[w[1]]);
        hi.total_blocks >= lo.total_blocks && hi.overall_exec <= lo.overall_exec
    });

    let candidates: Vec<CandidateRow> = set
        .iter()
        .enumerate()
        .map(|(i, c)| CandidateRow {
            score: None,
            ..CandidateRow::of(i, &names[i], c)
        })
        .collect();
    let matrix = ScoreMatrix {
        candidates: names.clone(),
        scores: picks.iter().map(|f| f.scores.clone()).collect(),
    };

    let mut main = Table::new(
        ".csv",
        vec![
            "beta",
            "chosen",
            "index",
            "sites_used",
            "total_blocks",
            "overall_exec",
            "overall_finish",
            "score",
        ],
    );
    for r in &rows {
        main.push(vec![
            r.beta.to_string(),
            r.chosen.clone(),
            r.index.to_string(),
            r.sites_used.to_string(),
            r.total_blocks.to_string(),
            secs(r.overall_exec),
            secs(r.overall_finish),
            r.score.to_string(),
        ]);
    }
    let header = std::iter::once("beta".to_owned()).chain(names.iter().cloned());
    let mut scores = Table::new(".scores.csv", header);
    for (v, f) in values.iter().zip(&picks) {
        let mut row = vec![v.to_string()];
        row.extend(f.scores.iter().map(f64::to_string));
        scores.push(row);
    }
    let mut cand_table = candidate_table(&candidates);
    cand_table.suffix = ".candidates.csv".into();

    let body = SweepBody {
        rows,
        monotone,
        candidates,
        score_matrix: matrix,
    };
    write(
        "sweep",
        args,
        args.out.as_deref(),
        &sc,
        body,
        &[main, scores, cand_table],
    )?;
    if monotone {
        Ok(exit::OK)
    } else {
        eprintln!("bodt: chosen plans are not monotone in beta");
        Ok(exit::INTERNAL)
    }
}

#[derive(Serialize)]
struct BudgetBody {
    budget: u64,
    feasible: bool,
    name: String,
    plan: PlanDoc,
    metrics: MetricsDoc,
}

pub fn budget(args: &BudgetArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let found = find_plan_budget(&sc, args.budget)?;
    check([&found.plan], &sc)?;
    let metrics = MetricsDoc::of(&found.metrics, &found.plan, &sc);
    let tables = [site_table(".csv", &metrics)];
    let body = BudgetBody {
        budget: args.budget,
        feasible: found.feasible,
        name: plan_name(&found.plan),
        plan: PlanDoc::of(&found.plan, &sc),
        metrics,
    };
    write("budget", args, args.out.as_deref(), &sc, body, &tables)?;
    if found.feasible {
        Ok(exit::OK)
    } else {
        eprintln!(
            "bodt: no plan found within {} blocks; best effort uses {}",
            args.budget, found.metrics.total_blocks
        );
        Ok(exit::INFEASIBLE)
    }
}

#[derive(Serialize)]
struct CompareRow {
    role: PlanKind,
    name: String,
    sites_used: usize,
    total_blocks: u64,
    overall_exec: Time,
    overall_finish: Time,
    total_cost: f64,
    /// Blocks relative to the decentralised plan.
    cost_increase: Option<f64>,
    /// Decentralised finish over this plan's finish.
    speedup: Option<f64>,
    plan: PlanDoc,
}

#[derive(Serialize)]
struct CompareBody {
    beta: f64,
    /// Centralised blocks minus decentralised blocks.
    blocks_saved: i64,
    rows: Vec<CompareRow>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn compare(args: &PlanArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let b = beta(args.beta)?;
    let found = select(candidate_plans(&sc), b);
    let names = plan_names(found.candidates.iter().map(|c| &c.plan));
    let central = centralised_plan(&sc);
    check([found.plan(), &central], &sc)?;
    let central_metrics = plan_metrics(&central, &sc)?;
    let base = found.metrics().clone();
    let entries = [
        (
            PlanKind::Decentralised,
            names[found.chosen].clone(),
            found.plan(),
            &base,
        ),
        (
            PlanKind::Centralised,
            "centralised".to_owned(),
            &central,
            &central_metrics,
        ),
    ];
    let rows: Vec<CompareRow> = entries
        .into_iter()
        .map(|(role, name, plan, m)| CompareRow {
            role,
            name,
            sites_used: m.sites_used(),
            total_blocks: m.total_blocks,
            overall_exec: m.overall_exec,
            overall_finish: m.overall_finish(),
            total_cost: m.total_cost,
            cost_increase: ratio(m.total_blocks as f64, base.total_blocks as f64),
            speedup: ratio(
                base.overall_finish().as_secs_f64(),
                m.overall_finish().as_secs_f64(),
            ),
            plan: PlanDoc::of(plan, &sc),
        })
        .collect();
    let mut t = Table::new(
        ".csv",
        vec![
            "role",
            "name",
            "sites_used",
            "total_blocks",
            "overall_exec",
            "overall_finish",
            "total_cost",
            "cost_increase",
            "speedup",
        ],
    );
    for r in &rows {
        t.push(vec![
            match r.role {
                PlanKind::Decentralised => "decentralised".into(),
                PlanKind::Centralised => "centralised".into(),
            },
            r.name.clone(),
            r.sites_used.to_string(),
            r.total_blocks.to_string(),
            secs(r.overall_exec),
            secs(r.overall_finish),
            r.total_cost.to_string(),
            opt(r.cost_increase),
            opt(r.speedup),
        ]);
    }
    let body = CompareBody {
        beta: args.beta,
        blocks_saved: central_metrics.total_blocks as i64 - base.total_blocks as i64,
        rows,
    };
    write("compare", args, args.out.as_deref(), &sc, body, &[t])?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct SimulateBody {
    repetitions: u64,
    noise: NoiseSpec,
    base: String,
    chosen: Option<String>,
    /// Some plan billed more blocks than predicted in some repetition.
    any_underpredicted: bool,
    rows: Vec<EvalRow>,
}

fn simulated_plans(
    args: &SimulateArgs,
    sc: &Scenario,
) -> Result<(Vec<PlanEntry>, Option<String>), Failure> {
    let central = centralised_plan(sc);
    if let Some(path) = &args.plan {
        let plan = PlanDoc::read(path)
            .and_then(|doc| doc.to_plan(sc))
            .map_err(Failure::input)?;
        let kind = if plan == central {
            PlanKind::Centralised
        } else {
            PlanKind::Decentralised
        };
        let name = plan_name(&plan);
        return Ok((vec![PlanEntry { name, plan, kind }], None));
    }
    let set = candidate_plans(sc);
    let names = plan_names(set.iter().map(|c| &c.plan));
    let chosen = match args.beta {
        Some(v) => {
            let b = beta(v)?;
            set.best_for(b).map(|i| names[i].clone())
        }
        None => None,
    };
    let mut entries: Vec<PlanEntry> = set
        .iter()
        .zip(names)
        .map(|(c, name)| PlanEntry {
            name,
            plan: c.plan.clone(),
            kind: PlanKind::Decentralised,
        })
        .collect();
    entries.push(PlanEntry {
        name: "centralised".into(),
        plan: central,
        kind: PlanKind::Centralised,
    });
    Ok((entries, chosen))
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let noise = NoiseSpec::new(args.seed, args.sigma)?;
    let (entries, chosen) = simulated_plans(args, &sc)?;
    check(entries.iter().map(|e| &e.plan), &sc)?;
    let report = evaluate_plans(&entries, &sc, args.reps, Some(&noise))?;

    let mut t = Table::new(
        ".csv",
        vec![
            "name",
            "kind",
            "sites_used",
            "predicted_blocks",
            "simulated_blocks_mean",
            "predicted_finish",
            "simulated_finish_mean",
            "predicted_overall_exec",
            "cost_increase",
            "speedup",
            "transfer_secs_per_unit",
            "transfer_units_per_sec",
            "accurate",
            "underpredicted",
        ],
    );
    for r in &report.rows {
        t.push(vec![
            r.name.clone(),
            match r.kind {
                PlanKind::Decentralised => "decentralised".into(),
                PlanKind::Centralised => "centralised".into(),
            },
            r.sites_used.to_string(),
            r.predicted_blocks.to_string(),
            r.simulated_blocks_mean.to_string(),
            secs(r.predicted_finish),
            r.simulated_finish_mean.to_string(),
            secs(r.predicted_overall_exec),
            opt(r.cost_increase),
            opt(r.speedup),
            r.transfer_secs_per_unit.to_string(),
            opt(r.transfer_units_per_sec),
            r.accurate.to_string(),
            r.underpredicted.to_string(),
        ]);
    }
    let order = match args.order {
        Order::Canonical => TaskOrder::Canonical,
        Order::ById => TaskOrder::ById,
    };
    let mut tables = vec![t];
    if args.out.is_some() {
        let first = noise.for_repetition(0);
        for e in &entries {
            let trace = replay(&e.plan, &sc, Some(&first), order)?;
            let mut trace_table = Table::new(
                format!(".trace.{}.csv", e.name),
                vec!["timestamp", "site", "task", "kind"],
            );
            for ev in &trace.events {
                trace_table.push(vec![
                    secs(ev.at),
                    site_id(&sc, ev.site).to_owned(),
                    ev.task.map(|t| sc.task(t).id.clone()).unwrap_or_default(),
                    ev.kind.as_str().to_owned(),
                ]);
            }
            tables.push(trace_table);
        }
    }
    let body = SimulateBody {
        repetitions: report.repetitions,
        noise,
        base: report.rows[report.base].name.clone(),
        chosen,
        any_underpredicted: report.rows.iter().any(|r| r.underpredicted),
        rows: report.rows,
    };
    write("simulate", args, args.out.as_deref(), &sc, body, &tables)?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct OracleSide {
    name: String,
    score: f64,
    overall_exec: Time,
    total_blocks: u64,
    plan: PlanDoc,
}

#[derive(Serialize)]
struct OracleBody {
    beta: f64,
    cap: u64,
    enumerated: u64,
    oracle: OracleSide,
    heuristic: OracleSide,
    gap: f64,
    /// Fewest blocks any assignment can bill.
    min_blocks: u64,
    /// Shortest makespan any assignment can reach.
    min_overall_exec: Time,
}

fn oracle_cap() -> Result<u64, Failure> {
    match std::env::var(ORACLE_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::input(anyhow!(
                "{ORACLE_CAP_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(DEFAULT_CAP),
    }
}

pub fn oracle(args: &PlanArgs) -> Outcome {
    let sc = load(&args.scenario)?;
    let b = beta(args.beta)?;
    let config = OracleConfig {
        cap: oracle_cap()?,
        ..OracleConfig::default()
    };
    let gap = optimality_gap_with(&sc, b, &config)?;
    let blocks = exact_optimum_with(&sc, b, Objective::Blocks, &config)?;
    let fast = exact_optimum_with(&sc, b, Objective::Makespan, &config)?;
    let h = &gap.heuristic;
    check([h.plan(), &gap.oracle.best_plan], &sc)?;
    if gap.gap < 0.0 {
        return Err(Failure::internal(anyhow!(
            "heuristic beat the exact optimum by {}",
            -gap.gap
        )));
    }
    let body = OracleBody {
        beta: args.beta,
        cap: config.cap,
        enumerated: gap.oracle.enumerated,
        oracle: OracleSide {
            name: plan_name(&gap.oracle.best_plan),
            score: gap.oracle.best_score,
            overall_exec: gap.oracle.best_makespan,
            total_blocks: gap.oracle.best_blocks,
            plan: PlanDoc::of(&gap.oracle.best_plan, &sc),
        },
        heuristic: OracleSide {
            name: plan_name(h.plan()),
            score: gap.heuristic_score,
            overall_exec: h.metrics().overall_exec,
            total_blocks: h.metrics().total_blocks,
            plan: PlanDoc::of(h.plan(), &sc),
        },
        gap: gap.gap,
        min_blocks: blocks.best_blocks,
        min_overall_exec: fast.best_makespan,
    };
    write("oracle", args, args.out.as_deref(), &sc, body, &[])?;
    Ok(exit::OK)
}

pub fn generate(args: &GenerateArgs) -> Outcome {
    let spec = GeneratorSpec {
        n_locations: args.locations,
        n_sites: args.sites,
        n_tasks: args.tasks,
        size_range: (args.size_min, args.size_max),
        transfer_range: (args.transfer_min, args.transfer_max),
        compute_rate: args.compute_rate,
        deploy_time: args.deploy_time,
        block_seconds: args.block_seconds,
        unit_cost: args.unit_cost,
        seed: args.seed,
    };
    let sc = generate_scenario(&spec)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Failure::input)?;
    }
    save_scenario(&sc, &args.out)?;
    Ok(exit::OK)
}
