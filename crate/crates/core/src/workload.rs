//! Scenario files and synthetic scenario generation.
//!
//! Scenario files are TOML documents that open with a fixed format header:
//!
//! ```toml
//! format = "bodt-scenario v1"
//! units = "rate=s/unit time=s cost=currency/block"
//!
//! [cost]
//! compute_rate = 1.0
//! deploy_time = 120.0
//! block_seconds = 3600.0
//! unit_cost = 1.0
//!
//! [[sites]]
//! id = "s0"
//! label = "us-east-1"
//!
//! [[locations]]
//! id = "l00"
//! label = "pl-node-00"
//! transfer = [0.4]        # one rate per site, in [[sites]] order
//!
//! [[tasks]]
//! id = "t0000"
//! location = "l00"
//! size = 1.25
//! ```
//!
//! The `transfer` arrays together form the dense location × site matrix.
//! `docs/scenario-format.md` has the full grammar.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostModel, DataLocation, LocationIx, Scenario, Site, Task};

pub const FORMAT_HEADER: &str = "bodt-scenario v1";
pub const UNITS_HEADER: &str = "rate=s/unit time=s cost=currency/block";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format: String,
    units: String,
    cost: CostDoc,
    sites: Vec<SiteDoc>,
    locations: Vec<LocationDoc>,
    tasks: Vec<TaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostDoc {
    compute_rate: f64,
    deploy_time: f64,
    #[serde(default = "default_block_seconds")]
    block_seconds: f64,
    unit_cost: f64,
}

fn default_block_seconds() -> f64 {
    CostModel::DEFAULT_BLOCK_SECONDS
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteDoc {
    id: String,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationDoc {
    id: String,
    #[serde(default)]
    label: String,
    transfer: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: String,
    location: String,
    size: f64,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_owned(),
            message,
        },
        other => other,
    })
}

/// Parses scenario text. Parse errors carry line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Parse {
        path: "<scenario>".into(),
        message: e.to_string().trim_end().to_owned(),
    })?;
    if doc.format != FORMAT_HEADER {
        return Err(Error::InvalidScenario(format!(
            "unsupported format header '{}', expected '{FORMAT_HEADER}'",
            doc.format
        )));
    }
    if doc.units != UNITS_HEADER {
        return Err(Error::InvalidScenario(format!(
            "unsupported units '{}', expected '{UNITS_HEADER}'",
            doc.units
        )));
    }

    let location_ix: HashMap<&str, usize> = doc
        .locations
        .iter()
        .enumerate()
        .map(|(i, l)| (l.id.as_str(), i))
        .collect();
    let tasks = doc
        .tasks
        .iter()
        .map(|t| {
            let ix = location_ix.get(t.location.as_str()).ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "task '{}' refers to unknown location '{}'",
                    t.id, t.location
                ))
            })?;
            Ok(Task {
                id: t.id.clone(),
                location: LocationIx(*ix),
                size: t.size,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cost = CostModel {
        transfer: doc.locations.iter().map(|l| l.transfer.clone()).collect(),
        compute_rate: doc.cost.compute_rate,
        deploy_time: doc.cost.deploy_time,
        block_seconds: doc.cost.block_seconds,
        unit_cost: doc.cost.unit_cost,
    };
    let locations = doc
        .locations
        .into_iter()
        .map(|l| DataLocation {
            id: l.id,
            label: l.label,
        })
        .collect();
    let sites = doc
        .sites
        .into_iter()
        .map(|s| Site {
            id: s.id,
            label: s.label,
        })
        .collect();
    Scenario::new(locations, sites, tasks, cost)
}

/// Canonical text form: fixed key order, shortest round-tripping floats.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let cost = scenario.cost();
    let doc = ScenarioDoc {
        format: FORMAT_HEADER.into(),
        units: UNITS_HEADER.into(),
        cost: CostDoc {
            compute_rate: cost.compute_rate,
            deploy_time: cost.deploy_time,
            block_seconds: cost.block_seconds,
            unit_cost: cost.unit_cost,
        },
        sites: scenario
            .sites()
            .iter()
            .map(|s| SiteDoc {
                id: s.id.clone(),
                label: s.label.clone(),
            })
            .collect(),
        locations: scenario
            .locations()
            .iter()
            .zip(&cost.transfer)
            .map(|(l, row)| LocationDoc {
                id: l.id.clone(),
                label: l.label.clone(),
                transfer: row.clone(),
            })
            .collect(),
        tasks: scenario
            .tasks()
            .iter()
            .map(|t| TaskDoc {
                id: t.id.clone(),
                location: scenario.locations()[t.location.index()].id.clone(),
                size: t.size,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario_to_string(scenario)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// AWS region names used as site labels when there are at most eight sites.
const REGION_LABELS: [&str; 8] = [
    "us-east-1",
    "us-west-1",
    "us-west-2",
    "eu-west-1",
    "ap-southeast-1",
    "ap-southeast-2",
    "ap-northeast-1",
    "sa-east-1",
];

/// Parameters of the ring-geometry generator.
///
/// Sites sit evenly spaced on a ring. Each data location picks a home site
/// and sits close to it, so its home is its strictly nearest site. The
/// transfer rate between a location and a site grows linearly with their
/// distance along the ring, from `transfer_range.0` to `transfer_range.1` at
/// the opposite side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_locations: usize,
    pub n_sites: usize,
    pub n_tasks: usize,
    pub size_range: (f64, f64),
    pub transfer_range: (f64, f64),
    pub compute_rate: f64,
    pub deploy_time: f64,
    pub block_seconds: f64,
    pub unit_cost: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    /// 47 data locations, 8 sites, 3290 tasks, hourly billing.
    fn default() -> Self {
        GeneratorSpec {
            n_locations: 47,
            n_sites: 8,
            n_tasks: 3290,
            size_range: (0.5, 1.5),
            transfer_range: (0.2, 6.0),
            compute_rate: 1.0,
            deploy_time: 120.0,
            block_seconds: CostModel::DEFAULT_BLOCK_SECONDS,
            unit_cost: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_locations == 0 || self.n_sites == 0 || self.n_tasks == 0 {
            return bad("location, site and task counts must all be at least 1".into());
        }
        for (name, (lo, hi), min_lo) in [
            ("size_range", self.size_range, f64::MIN_POSITIVE),
            ("transfer_range", self.transfer_range, 0.0),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo >= min_lo && lo <= hi) {
                return bad(format!("{name} ({lo}, {hi}) is not a valid range"));
            }
        }
        Ok(())
    }
}

/// Builds a scenario from `spec`. Pure function of the spec, seed included.
pub fn generate_scenario(spec: &GeneratorSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let site_width = digits(spec.n_sites);
    let loc_width = digits(spec.n_locations);
    let task_width = digits(spec.n_tasks);

    let sites: Vec<Site> = (0..spec.n_sites)
        .map(|i| Site {
            id: format!("s{i:0site_width$}"),
            label: if spec.n_sites <= REGION_LABELS.len() {
                REGION_LABELS[i].to_owned()
            } else {
                format!("region-{i}")
            },
        })
        .collect();
    let site_angle = |i: usize| 2.0 * PI * i as f64 / spec.n_sites as f64;
    let half_gap = PI / spec.n_sites as f64;

    let (rate_lo, rate_hi) = spec.transfer_range;
    let mut locations = Vec::with_capacity(spec.n_locations);
    let mut transfer = Vec::with_capacity(spec.n_locations);
    for i in 0..spec.n_locations {
        let home = rng.random_range(0..spec.n_sites);
        let angle = site_angle(home) + rng.random_range(-0.5..0.5) * half_gap;
        locations.push(DataLocation {
            id: format!("l{i:0loc_width$}"),
            label: format!("pl-node-{i:0loc_width$}"),
        });
        transfer.push(
            (0..spec.n_sites)
                .map(|c| rate_lo + (rate_hi - rate_lo) * ring_distance(angle, site_angle(c)) / PI)
                .collect(),
        );
    }

    let (size_lo, size_hi) = spec.size_range;
    let tasks = (0..spec.n_tasks)
        .map(|i| Task {
            id: format!("t{i:0task_width$}"),
            location: LocationIx(rng.random_range(0..spec.n_locations)),
            size: if size_lo == size_hi {
                size_lo
            } else {
                rng.random_range(size_lo..size_hi)
            },
        })
        .collect();

    Scenario::new(
        locations,
        sites,
        tasks,
        CostModel {
            transfer,
            compute_rate: spec.compute_rate,
            deploy_time: spec.deploy_time,
            block_seconds: spec.block_seconds,
            unit_cost: spec.unit_cost,
        },
    )
}

/// Shortest angular distance, in `[0, π]`.
fn ring_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn digits(count: usize) -> usize {
    count.saturating_sub(1).max(1).ilog10() as usize + 1
}

/// Bounds for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomLimits {
    pub max_tasks: usize,
    pub max_sites: usize,
    pub max_locations: usize,
}

/// An unstructured random instance: uniform rates, sizes, deployment and
/// block length, sized so that block counts vary between plans. Used by
/// property tests and benchmarks.
pub fn random_scenario(seed: u64, limits: RandomLimits) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tasks = rng.random_range(1..=limits.max_tasks.max(1));
    let n_sites = rng.random_range(1..=limits.max_sites.max(1));
    let n_locations = rng.random_range(1..=limits.max_locations.max(1));
    let transfer = (0..n_locations)
        .map(|_| (0..n_sites).map(|_| rng.random_range(0.0..5.0)).collect())
        .collect();
    let tasks = (0..n_tasks)
        .map(|i| Task {
            id: format!("t{i:03}"),
            location: LocationIx(rng.random_range(0..n_locations)),
            size: rng.random_range(0.5..10.0),
        })
        .collect();
    let cost = CostModel {
        transfer,
        compute_rate: rng.random_range(0.0..2.0),
        deploy_time: rng.random_range(0.0..20.0),
        block_seconds: rng.random_range(10.0..120.0),
        unit_cost: 1.0,
    };
    Scenario::new(
        (0..n_locations)
            .map(|i| DataLocation {
                id: format!("l{i:03}"),
                label: String::new(),
            })
            .collect(),
        (0..n_sites)
            .map(|i| Site {
                id: format!("s{i:03}"),
                label: String::new(),
            })
            .collect(),
        tasks,
        cost,
    )
    .expect("random scenarios satisfy every invariant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::nearest_plan;
    use crate::model::SiteIx;

    const MINIMAL: &str = r#"
format = "bodt-scenario v1"
units = "rate=s/unit time=s cost=currency/block"

[cost]
compute_rate = 1.0
deploy_time = 10.0
unit_cost = 0.5

[[sites]]
id = "a"

[[locations]]
id = "x"
transfer = [2.0]

[[tasks]]
id = "t"
location = "x"
size = 3.0
"#;

    #[test]
    fn parses_minimal_file() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.locations().len(), 1);
        assert_eq!(sc.sites().len(), 1);
        assert_eq!(sc.tasks().len(), 1);
        assert_eq!(sc.cost().block_seconds, 3600.0);
    }

    #[test]
    fn missing_matrix_entry_names_pair() {
        let text = MINIMAL.replace(
            "[[sites]]\nid = \"a\"",
            "[[sites]]\nid = \"a\"\n\n[[sites]]\nid = \"b\"",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            err.to_string().contains("location 'x' to site 'b'"),
            "{err}"
        );
    }

    #[test]
    fn unknown_location_and_bad_size() {
        let err =
            parse_scenario(&MINIMAL.replace("location = \"x\"", "location = \"y\"")).unwrap_err();
        assert!(err.to_string().contains("unknown location 'y'"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("size = 3.0", "size = -1.0")).unwrap_err();
        assert!(err.to_string().contains("positive size"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario(&MINIMAL.replace("size = 3.0", "size = = 3.0")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
        let err =
            parse_scenario(&MINIMAL.replace("bodt-scenario v1", "bodt-scenario v2")).unwrap_err();
        assert!(err.to_string().contains("format header"));
    }

    #[test]
    fn round_trip_and_canonical_bytes() {
        let sc = generate_scenario(&GeneratorSpec {
            n_tasks: 50,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.toml");
        let b = dir.path().join("b.toml");
        save_scenario(&sc, &a).unwrap();
        let back = load_scenario(&a).unwrap();
        assert_eq!(back, sc);
        save_scenario(&back, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let sc = parse_scenario(MINIMAL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = save_scenario(&sc, dir.path().join("missing/dir/x.toml")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn load_reports_path() {
        let err = load_scenario("/definitely/not/here.toml").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.toml"));
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = GeneratorSpec {
            n_tasks: 200,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            generate_scenario(&spec).unwrap(),
            generate_scenario(&spec).unwrap()
        );
        let other = GeneratorSpec {
            seed: 10,
            ..spec.clone()
        };
        assert_ne!(
            generate_scenario(&other).unwrap(),
            generate_scenario(&spec).unwrap()
        );
    }

    #[test]
    fn default_shape() {
        let sc = generate_scenario(&GeneratorSpec::default()).unwrap();
        assert_eq!(sc.locations().len(), 47);
        assert_eq!(sc.sites().len(), 8);
        assert_eq!(sc.tasks().len(), 3290);
        assert_eq!(sc.sites()[0].id, "s0");
        assert_eq!(sc.locations()[0].id, "l00");
        assert_eq!(sc.tasks()[0].id, "t0000");
    }

    #[test]
    fn every_location_has_a_unique_nearest_site() {
        let sc = generate_scenario(&GeneratorSpec::default()).unwrap();
        for row in &sc.cost().transfer {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(row.iter().filter(|&&r| r == min).count(), 1, "{row:?}");
        }
    }

    #[test]
    fn one_site_takes_everything() {
        let sc = generate_scenario(&GeneratorSpec {
            n_sites: 1,
            n_tasks: 40,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(nearest_plan(&sc).tasks_on(SiteIx(0)).len(), 40);
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            GeneratorSpec {
                n_sites: 0,
                ..Default::default()
            },
            GeneratorSpec {
                size_range: (2.0, 1.0),
                ..Default::default()
            },
            GeneratorSpec {
                size_range: (0.0, 1.0),
                ..Default::default()
            },
        ] {
            assert!(matches!(
                generate_scenario(&spec),
                Err(Error::InvalidSpec(_))
            ));
        }
    }

    #[test]
    fn digit_widths() {
        assert_eq!(digits(1), 1);
        assert_eq!(digits(8), 1);
        assert_eq!(digits(10), 1);
        assert_eq!(digits(11), 2);
        assert_eq!(digits(47), 2);
        assert_eq!(digits(3290), 4);
    }
}
