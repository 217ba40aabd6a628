//! Multi-seed scenario runner, aggregation and plot-data tables.
//!
//! A [`Scenario`] expands into one simulation per
//! `(size × protocol × fitness form × seed)`. Runs execute in parallel on a
//! dedicated thread pool and are collected in a fixed order, so the same
//! scenario always produces the same files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{AssignError, AssignmentProblem, EligibilityMap, FitnessForm, FitnessWeights};
use crate::gsa::GsaParams;
use crate::net::{deploy_random, distance, DeployOptions, Deployment, RadioParams};
use crate::sim::{check_feasibility, run_simulation, Protocol, ProtocolKind, SimConfig, SimError, SimSummary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
    #[error("figure `{figure}` needs runs that are absent: {}", missing.join(", "))]
    MissingRuns { figure: String, missing: Vec<String> },
    #[error("run {label} failed: {source}")]
    Run {
        label: String,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One network size of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub n_sensors: usize,
    pub n_gateways: usize,
    pub field_side: f64,
}

/// Optional replacements for simulation defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radio: Option<RadioParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsa: Option<GsaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ff1_weights: Option<FitnessWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ff2_weights: Option<FitnessWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deploy: Option<DeployOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recluster_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_at_first_death: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub sizes: Vec<SizePoint>,
    pub protocols: Vec<ProtocolKind>,
    pub fitness_forms: Vec<FitnessForm>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Pinned topology used for every run instead of random deployments.
    #[serde(skip)]
    pub deployment: Option<Deployment>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Invalid(m));
        if self.sizes.is_empty() {
            return bad("no sizes".into());
        }
        if self.protocols.is_empty() {
            return bad("protocol list is empty".into());
        }
        if self.fitness_forms.is_empty() {
            return bad("fitness form list is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return bad("duplicate seeds".into());
        }
        let mut ns: Vec<usize> = self.sizes.iter().map(|s| s.n_sensors).collect();
        ns.sort_unstable();
        ns.dedup();
        if ns.len() != self.sizes.len() {
            return bad("two sizes share a sensor count".into());
        }
        for c in self.configs(self.sizes[0], self.seeds[0]) {
            c.validate().map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Every simulation config of one `(size, seed)` cell, in
    /// protocol-major order.
    pub fn configs(&self, size: SizePoint, seed: u64) -> Vec<SimConfig> {
        let o = &self.overrides;
        let mut out = Vec::new();
        for &kind in &self.protocols {
            for &form in &self.fitness_forms {
                let mut c = SimConfig::new(size.n_sensors, size.n_gateways, size.field_side, Protocol::new(kind, form), seed);
                if let Some(r) = o.radio {
                    c.radio = r;
                }
                if let Some(g) = o.gsa {
                    c.gsa = g;
                }
                c.weights = match form {
                    FitnessForm::Ff1 => o.ff1_weights,
                    FitnessForm::Ff2 => o.ff2_weights,
                };
                if let Some(d) = o.deploy {
                    c.deploy = d;
                }
                if let Some(p) = o.recluster_period {
                    c.recluster_period = p;
                }
                if let Some(m) = o.max_rounds {
                    c.max_rounds = m;
                }
                if let Some(s) = o.stop_at_first_death {
                    c.stop_at_first_death = s;
                }
                if let Some(t) = o.plateau_tolerance {
                    c.plateau_tolerance = t;
                }
                c.deployment = self.deployment.clone();
                out.push(c);
            }
        }
        out
    }

    pub fn run_count(&self) -> usize {
        self.sizes.len() * self.protocols.len() * self.fitness_forms.len() * self.seeds.len()
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("iv-a", include_str!("../../../presets/iv-a.json")),
    ("iv-a-500", include_str!("../../../presets/iv-a-500.json")),
    ("iv-a-1500", include_str!("../../../presets/iv-a-1500.json")),
    ("iv-a-2500", include_str!("../../../presets/iv-a-2500.json")),
    ("iv-b-ff", include_str!("../../../presets/iv-b-ff.json")),
    ("iv-c-scale", include_str!("../../../presets/iv-c-scale.json")),
    ("iv-e-wa", include_str!("../../../presets/iv-e-wa.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Loads a preset, preferring `<dir>/<name>.json` when `dir` is given.
pub fn load_preset(name: &str, dir: Option<&Path>) -> Result<Scenario, ExperimentError> {
    if let Some(dir) = dir {
        let path = dir.join(format!("{name}.json"));
        if path.exists() {
            return Scenario::from_json(&fs::read_to_string(path)?);
        }
    }
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ExperimentError::UnknownPreset(name.to_string()))?;
    Scenario::from_json(text)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub size: SizePoint,
    pub protocol: Protocol,
    pub seed: u64,
    pub summary: SimSummary,
}

impl RunRecord {
    pub fn label(&self) -> String {
        run_label(self.size.n_sensors, self.protocol, self.seed)
    }
}

fn run_label(n: usize, p: Protocol, seed: u64) -> String {
    format!("n{}-{}-{}-seed{}", n, p.kind.label(), p.fitness.label(), seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleSeed {
    pub n_sensors: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ResultSet {
    pub scenario: String,
    pub runs: Vec<RunRecord>,
    pub infeasible: Vec<InfeasibleSeed>,
}

/// Executes every combination of `s` on up to `jobs` threads.
///
/// A seed whose deployment is infeasible for any listed protocol is skipped
/// for all of them and recorded in `infeasible`, so the remaining runs stay
/// paired across protocols.
pub fn run_scenario(s: &Scenario, jobs: usize) -> Result<ResultSet, ExperimentError> {
    s.validate()?;
    let mut cells = Vec::new();
    let mut infeasible = Vec::new();
    for &size in &s.sizes {
        for &seed in &s.seeds {
            let configs = s.configs(size, seed);
            match configs.iter().try_for_each(check_feasibility) {
                Ok(()) => cells.extend(configs.into_iter().map(|c| (size, c))),
                Err(e @ SimError::Infeasible { .. }) => infeasible.push(InfeasibleSeed {
                    n_sensors: size.n_sensors,
                    seed,
                    reason: e.to_string(),
                }),
                Err(e) => {
                    return Err(ExperimentError::Invalid(e.to_string()));
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let results: Vec<Result<RunRecord, ExperimentError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|(size, cfg)| {
                run_simulation(cfg)
                    .map(|summary| RunRecord {
                        size: *size,
                        protocol: cfg.protocol,
                        seed: cfg.seed,
                        summary,
                    })
                    .map_err(|source| ExperimentError::Run {
                        label: run_label(size.n_sensors, cfg.protocol, cfg.seed),
                        source,
                    })
            })
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ResultSet {
        scenario: s.name.clone(),
        runs,
        infeasible,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n_sensors: usize,
    pub protocol: ProtocolKind,
    pub fitness: FitnessForm,
    pub runs: usize,
    pub mean_lifetime: f64,
    pub std_lifetime: f64,
    pub mean_energy: f64,
    pub std_energy: f64,
    pub mean_clusters: f64,
}

fn mean_clusters(s: &SimSummary) -> f64 {
    let c = s.cluster_counts();
    if c.is_empty() {
        0.0
    } else {
        c.iter().sum::<usize>() as f64 / c.len() as f64
    }
}

fn mean_cluster_size(s: &SimSummary) -> f64 {
    let e = &s.epochs;
    if e.is_empty() {
        0.0
    } else {
        e.iter().map(|r| r.mean_cluster_size).sum::<f64>() / e.len() as f64
    }
}

impl ResultSet {
    /// Runs grouped by `(n, protocol, fitness)` in sorted order.
    pub fn groups(&self) -> BTreeMap<(usize, ProtocolKind, FitnessForm), Vec<&RunRecord>> {
        let mut g: BTreeMap<_, Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.runs {
            g.entry((r.size.n_sensors, r.protocol.kind, r.protocol.fitness)).or_default().push(r);
        }
        for v in g.values_mut() {
            v.sort_by_key(|r| r.seed);
        }
        g
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        self.groups()
            .into_iter()
            .map(|((n, kind, form), runs)| {
                let lifetimes: Vec<f64> = runs.iter().map(|r| r.summary.lifetime_rounds as f64).collect();
                let energies: Vec<f64> = runs.iter().map(|r| r.summary.mean_round_consumption()).collect();
                let clusters: Vec<f64> = runs.iter().map(|r| mean_clusters(&r.summary)).collect();
                let (mean_lifetime, std_lifetime) = mean_std(&lifetimes);
                let (mean_energy, std_energy) = mean_std(&energies);
                AggregateRow {
                    n_sensors: n,
                    protocol: kind,
                    fitness: form,
                    runs: runs.len(),
                    mean_lifetime,
                    std_lifetime,
                    mean_energy,
                    std_energy,
                    mean_clusters: mean_std(&clusters).0,
                }
            })
            .collect()
    }

    pub fn find(&self, n: usize, kind: ProtocolKind, form: FitnessForm) -> Option<AggregateRow> {
        self.aggregate()
            .into_iter()
            .find(|r| r.n_sensors == n && r.protocol == kind && r.fitness == form)
    }

    pub fn aggregate_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.aggregate() {
            w.serialize(row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    /// Writes `runs/<label>/{summary.json,rounds.csv}`, `aggregate.csv` and,
    /// when seeds were skipped, `infeasible.csv` under `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<(), ExperimentError> {
        for r in &self.runs {
            let dir = out_dir.join("runs").join(r.label());
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("summary.json"), r.summary.to_doc().to_json())?;
            r.summary.write_rounds_csv(fs::File::create(dir.join("rounds.csv"))?)?;
        }
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join("aggregate.csv"), self.aggregate_csv()?)?;
        if !self.infeasible.is_empty() {
            let mut w = csv::Writer::from_path(out_dir.join("infeasible.csv"))?;
            for i in &self.infeasible {
                w.serialize(i)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FigureKind {
    /// Mean residual sensor energy per round.
    EnergyCurve,
    Lifetime,
    Consumption,
    Clusters,
}

struct Figure {
    id: &'static str,
    kind: FigureKind,
    /// Restrict to this sensor count.
    n: Option<usize>,
    /// Restrict to sensor counts at or above this.
    min_n: usize,
    series: &'static [(ProtocolKind, Option<FitnessForm>)],
}

use FitnessForm::{Ff1, Ff2};
use ProtocolKind::{GcGsa, GsaEec, WaGsa};

const GC_VS_EEC: &[(ProtocolKind, Option<FitnessForm>)] = &[(GcGsa, None), (GsaEec, None)];
const GC_VS_WA: &[(ProtocolKind, Option<FitnessForm>)] = &[(GcGsa, None), (WaGsa, None)];

const FIGURES: &[Figure] = &[
    Figure { id: "fig1-energy-n500", kind: FigureKind::EnergyCurve, n: Some(500), min_n: 0, series: GC_VS_EEC },
    Figure { id: "fig2-energy-n1500", kind: FigureKind::EnergyCurve, n: Some(1500), min_n: 0, series: GC_VS_EEC },
    Figure { id: "fig3-energy-n2500", kind: FigureKind::EnergyCurve, n: Some(2500), min_n: 0, series: GC_VS_EEC },
    Figure { id: "fig4-lifetime-vs-n", kind: FigureKind::Lifetime, n: None, min_n: 0, series: GC_VS_EEC },
    Figure {
        id: "fig5-ff-comparison",
        kind: FigureKind::EnergyCurve,
        n: Some(2500),
        min_n: 0,
        series: &[(GcGsa, Some(Ff1)), (GcGsa, Some(Ff2)), (GsaEec, Some(Ff1)), (GsaEec, Some(Ff2))],
    },
    Figure {
        id: "fig6-ff-lifetime",
        kind: FigureKind::Lifetime,
        n: None,
        min_n: 0,
        series: &[(GcGsa, Some(Ff1)), (GcGsa, Some(Ff2))],
    },
    Figure { id: "fig7-energy-large-n", kind: FigureKind::Consumption, n: None, min_n: 4000, series: GC_VS_EEC },
    Figure { id: "fig8-lifetime-large-n", kind: FigureKind::Lifetime, n: None, min_n: 4000, series: GC_VS_EEC },
    Figure { id: "fig11-wa-energy", kind: FigureKind::EnergyCurve, n: None, min_n: 0, series: GC_VS_WA },
    Figure { id: "fig12-wa-lifetime", kind: FigureKind::Lifetime, n: None, min_n: 0, series: GC_VS_WA },
    Figure { id: "table2-clusters", kind: FigureKind::Clusters, n: None, min_n: 0, series: GC_VS_WA },
];

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

/// The preset whose runs feed `figure`.
pub fn preset_for_figure(figure: &str) -> Option<&'static str> {
    Some(match figure {
        "fig1-energy-n500" => "iv-a-500",
        "fig2-energy-n1500" => "iv-a-1500",
        "fig3-energy-n2500" => "iv-a-2500",
        "fig4-lifetime-vs-n" => "iv-a",
        "fig5-ff-comparison" | "fig6-ff-lifetime" => "iv-b-ff",
        "fig7-energy-large-n" | "fig8-lifetime-large-n" => "iv-c-scale",
        "fig11-wa-energy" | "fig12-wa-lifetime" | "table2-clusters" => "iv-e-wa",
        _ => return None,
    })
}

/// Every figure that `results` can produce, as `(id, csv)`.
pub fn available_plots(results: &ResultSet) -> Vec<(&'static str, String)> {
    FIGURES
        .iter()
        .filter_map(|f| emit_plot_data(results, f.id).ok().map(|csv| (f.id, csv)))
        .collect()
}

fn series_label(kind: ProtocolKind, form: FitnessForm) -> String {
    format!("{}/{}", kind.label(), form.label())
}

/// Reshapes `results` into the long-format CSV behind figure `figure`.
pub fn emit_plot_data(results: &ResultSet, figure: &str) -> Result<String, ExperimentError> {
    let fig = FIGURES
        .iter()
        .find(|f| f.id == figure)
        .ok_or_else(|| ExperimentError::UnknownFigure(figure.to_string()))?;
    let groups = results.groups();
    let in_scope = |n: usize| fig.n.map_or(true, |want| want == n) && n >= fig.min_n;
    let matches = |kind: ProtocolKind, form: FitnessForm, want: &(ProtocolKind, Option<FitnessForm>)| {
        kind == want.0 && want.1.map_or(true, |f| f == form)
    };

    let mut sizes: Vec<usize> = groups.keys().map(|k| k.0).filter(|&n| in_scope(n)).collect();
    sizes.dedup();
    let mut missing = Vec::new();
    if sizes.is_empty() {
        let scope = match (fig.n, fig.min_n) {
            (Some(n), _) => format!("n={n}"),
            (None, 0) => "any n".to_string(),
            (None, m) => format!("n>={m}"),
        };
        for want in fig.series {
            missing.push(format!("{}{} at {}", want.0.label(), want.1.map_or(String::new(), |f| format!("/{}", f.label())), scope));
        }
    }
    for &n in &sizes {
        for want in fig.series {
            if !groups.keys().any(|&(gn, k, f)| gn == n && matches(k, f, want)) {
                missing.push(format!(
                    "{}{} at n={}",
                    want.0.label(),
                    want.1.map_or(String::new(), |f| format!("/{}", f.label())),
                    n
                ));
            }
        }
    }
    if !missing.is_empty() {
        return Err(ExperimentError::MissingRuns {
            figure: figure.to_string(),
            missing,
        });
    }

    let selected: Vec<((usize, ProtocolKind, FitnessForm), &Vec<&RunRecord>)> = groups
        .iter()
        .filter(|(&(n, k, f), _)| in_scope(n) && fig.series.iter().any(|w| matches(k, f, w)))
        .map(|(k, v)| (*k, v))
        .collect();

    let mut out = String::new();
    match fig.kind {
        FigureKind::EnergyCurve => {
            out.push_str("n,round,series,mean_sensor_energy,runs\n");
            for ((n, k, f), runs) in &selected {
                let len = runs.iter().map(|r| r.summary.reports.len()).max().unwrap_or(0);
                for i in 0..len {
                    let vals: Vec<f64> = runs
                        .iter()
                        .filter_map(|r| r.summary.reports.get(i).map(|x| x.mean_sensor_energy))
                        .collect();
                    let (m, _) = mean_std(&vals);
                    let _ = writeln!(out, "{},{},{},{},{}", n, i + 1, series_label(*k, *f), m, vals.len());
                }
            }
        }
        FigureKind::Lifetime | FigureKind::Consumption => {
            let metric = if fig.kind == FigureKind::Lifetime { "mean_lifetime" } else { "mean_energy" };
            let _ = writeln!(out, "n,series,{metric},stddev,runs");
            for ((n, k, f), runs) in &selected {
                let vals: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        if fig.kind == FigureKind::Lifetime {
                            r.summary.lifetime_rounds as f64
                        } else {
                            r.summary.mean_round_consumption()
                        }
                    })
                    .collect();
                let (m, sd) = mean_std(&vals);
                let _ = writeln!(out, "{},{},{},{},{}", n, series_label(*k, *f), m, sd, vals.len());
            }
        }
        FigureKind::Clusters => {
            out.push_str("n,mode,fitness,cluster_count,mean_size,runs\n");
            for ((n, k, f), runs) in &selected {
                let counts: Vec<f64> = runs.iter().map(|r| mean_clusters(&r.summary)).collect();
                let sizes: Vec<f64> = runs.iter().map(|r| mean_cluster_size(&r.summary)).collect();
                let mode = if *k == GcGsa { "GC" } else { "WA" };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    n,
                    mode,
                    f.label(),
                    mean_std(&counts).0,
                    mean_std(&sizes).0,
                    runs.len()
                );
            }
        }
    }
    Ok(out)
}

/// One GSA-versus-exhaustive comparison on a small random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub instance: usize,
    pub heads: usize,
    pub gateways: usize,
    pub fitness: FitnessForm,
    pub seed: u64,
    pub gsa_fitness: f64,
    pub optimum: f64,
    pub relative_gap: f64,
}

/// Parameters of the small-instance oracle sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub instances: usize,
    pub max_heads: usize,
    pub max_gateways: usize,
    pub field_side: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            max_heads: 6,
            max_gateways: 4,
            field_side: 200.0,
            seed: 1,
        }
    }
}

/// Random small head/gateway instances: every sensor plays a head and has
/// at least one gateway within `range`.
pub fn oracle_instances(cfg: &OracleConfig) -> Vec<(crate::net::Deployment, EligibilityMap)> {
    let mut out = Vec::new();
    let mut k = 0u64;
    while out.len() < cfg.instances {
        let s = crate::sim::derive_seed(cfg.seed, k);
        k += 1;
        let c = 1 + (s % cfg.max_heads as u64) as usize;
        let m = 1 + ((s >> 16) % cfg.max_gateways as u64) as usize;
        let dep = deploy_random(c, m, cfg.field_side, s, &DeployOptions::default());
        let range = dep.gateways[0].tx_range;
        let lists: Vec<_> = dep
            .sensors
            .iter()
            .map(|h| {
                let l: Vec<_> = dep
                    .gateways
                    .iter()
                    .filter(|g| distance(h.pos, g.pos) <= range)
                    .map(|g| g.id)
                    .collect();
                (h.id, l)
            })
            .collect();
        if let Ok(elig) = EligibilityMap::from_lists(lists) {
            out.push((dep, elig));
        }
    }
    out
}

/// Compares GSA against exhaustive enumeration on every instance, both
/// fitness forms.
pub fn oracle_check(cfg: &OracleConfig, params: &GsaParams) -> Result<Vec<OracleRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (i, (dep, elig)) in oracle_instances(cfg).into_iter().enumerate() {
        let problem = AssignmentProblem::new(elig, &dep)?;
        for form in [Ff1, Ff2] {
            let w = FitnessWeights::for_form(form);
            let seed = crate::sim::derive_seed(cfg.seed ^ 0x5eed, i as u64);
            let gsa = problem.solve_gsa(&w, params, seed)?.fitness.unwrap_or(0.0);
            let best = problem.solve_exhaustive(&w, 1 << 20)?.fitness.unwrap_or(0.0);
            let gap = if best == 0.0 { 0.0 } else { (gsa - best) / best.abs() };
            rows.push(OracleRow {
                instance: i,
                heads: problem.dims(),
                gateways: dep.gateways.len(),
                fitness: form,
                seed,
                gsa_fitness: gsa,
                optimum: best,
                relative_gap: gap,
            });
        }
    }
    Ok(rows)
}
