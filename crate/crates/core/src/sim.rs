//! Round-based network operation with energy accounting.
//!
//! Each round every alive sensor senses once. In clustered protocols a
//! member sends its 500-bit message to its parent; relays store and forward
//! every message they receive without merging; the head receives its
//! cluster's messages and sends one aggregated 4000-bit packet to its
//! gateway. In the direct baseline every sensor sends a 4000-bit packet to
//! its gateway. Gateways forward each packet they receive to the base
//! station, which has unlimited energy.
//!
//! Energy is debited at the end of the round and a node whose energy
//! reaches zero is dead from the next round on. Clusters and assignments are
//! rebuilt every `recluster_period` rounds from the residual energies at
//! that moment; in between, traffic sent to a dead node is lost.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{
    AssignError, AssignmentProblem, EligibilityMap, FitnessForm, FitnessWeights,
};
use crate::clustering::{cluster_links, head_of_each, ClusterMode, Link, SensorGraph, DEFAULT_PLATEAU_TOLERANCE};
use crate::gsa::GsaParams;
use crate::net::{
    deploy_random, distance, rx_energy, tx_energy, DeployOptions, Deployment, NetError, NodeId,
    RadioParams, SpatialGrid,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("deployment with seed {seed} is infeasible: sensor {sensor} has no gateway within {range} m")]
    Infeasible { seed: u64, sensor: NodeId, range: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Assign(#[from] AssignError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Gradient clustering + GSA head-to-gateway assignment.
    #[serde(rename = "GC_GSA")]
    GcGsa,
    /// Watershed-style clustering + GSA assignment.
    #[serde(rename = "WA_GSA")]
    WaGsa,
    /// Every sensor assigned directly to a gateway by GSA.
    #[serde(rename = "GSA_EEC")]
    GsaEec,
}

impl ProtocolKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProtocolKind::GcGsa => "GC_GSA",
            ProtocolKind::WaGsa => "WA_GSA",
            ProtocolKind::GsaEec => "GSA_EEC",
        }
    }

    pub fn cluster_mode(&self) -> Option<ClusterMode> {
        match self {
            ProtocolKind::GcGsa => Some(ClusterMode::Gc),
            ProtocolKind::WaGsa => Some(ClusterMode::Wa),
            ProtocolKind::GsaEec => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub fitness: FitnessForm,
}

impl Protocol {
    pub const fn new(kind: ProtocolKind, fitness: FitnessForm) -> Self {
        Self { kind, fitness }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_sensors: usize,
    pub n_gateways: usize,
    pub field_side: f64,
    #[serde(default)]
    pub deploy: DeployOptions,
    pub protocol: Protocol,
    #[serde(default)]
    pub radio: RadioParams,
    /// Defaults to the standard weights of `protocol.fitness`.
    #[serde(default)]
    pub weights: Option<FitnessWeights>,
    #[serde(default)]
    pub gsa: GsaParams,
    #[serde(default = "default_recluster_period")]
    pub recluster_period: usize,
    pub max_rounds: usize,
    /// Stop at the first sensor death instead of running to `max_rounds`.
    #[serde(default = "default_true")]
    pub stop_at_first_death: bool,
    #[serde(default = "default_tolerance")]
    pub plateau_tolerance: f64,
    pub seed: u64,
    /// Pinned topology; replaces the random deployment when present.
    #[serde(skip)]
    pub deployment: Option<Deployment>,
}

fn default_recluster_period() -> usize {
    20
}

fn default_true() -> bool {
    true
}

fn default_tolerance() -> f64 {
    DEFAULT_PLATEAU_TOLERANCE
}

impl SimConfig {
    pub fn new(n_sensors: usize, n_gateways: usize, field_side: f64, protocol: Protocol, seed: u64) -> Self {
        Self {
            n_sensors,
            n_gateways,
            field_side,
            deploy: DeployOptions::default(),
            protocol,
            radio: RadioParams::default(),
            weights: None,
            gsa: GsaParams::default(),
            recluster_period: default_recluster_period(),
            max_rounds: 100_000,
            stop_at_first_death: true,
            plateau_tolerance: DEFAULT_PLATEAU_TOLERANCE,
            seed,
            deployment: None,
        }
    }

    pub fn effective_weights(&self) -> FitnessWeights {
        let mut w = self
            .weights
            .unwrap_or_else(|| FitnessWeights::for_form(self.protocol.fitness));
        w.form = self.protocol.fitness;
        w
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.recluster_period == 0 {
            return bad("recluster_period must be at least 1");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        if self.deployment.is_none() && !(self.field_side > 0.0) {
            return bad("field_side must be positive");
        }
        if !(self.plateau_tolerance >= 0.0) {
            return bad("plateau_tolerance must be non-negative");
        }
        self.radio.validate()?;
        self.gsa.validate().map_err(AssignError::from)?;
        self.effective_weights().validate()?;
        Ok(())
    }

    fn build_deployment(&self) -> Result<Deployment, SimError> {
        let dep = match &self.deployment {
            Some(d) => d.clone(),
            None => deploy_random(self.n_sensors, self.n_gateways, self.field_side, self.seed, &self.deploy),
        };
        dep.validate()?;
        Ok(dep)
    }
}

/// How each sensor (by index) forwards traffic during one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hop {
    Idle,
    /// Forward messages to another sensor.
    Relay { parent: usize, dist: f64 },
    /// Send one aggregated packet to a gateway.
    Uplink { gateway: usize, dist: f64 },
}

/// Index-level forwarding plan for the rounds of one epoch.
#[derive(Debug, Clone)]
pub struct Routing {
    hops: Vec<Hop>,
    /// Sensors ordered so every relay comes before its parent.
    order: Vec<usize>,
    bs_dist: Vec<f64>,
}

impl Routing {
    /// Builds a plan from parent links and a head-to-gateway map given as
    /// `(head index, gateway index)` pairs.
    pub fn from_links(dep: &Deployment, links: &[Link], uplinks: &[(usize, usize)]) -> Self {
        let s = &dep.sensors;
        let mut hops = vec![Hop::Idle; s.len()];
        for (u, link) in links.iter().enumerate() {
            if let Link::Parent(p) = *link {
                hops[u] = Hop::Relay {
                    parent: p,
                    dist: distance(s[u].pos, s[p].pos),
                };
            }
        }
        for &(h, g) in uplinks {
            hops[h] = Hop::Uplink {
                gateway: g,
                dist: distance(s[h].pos, dep.gateways[g].pos),
            };
        }
        let roots = head_of_each(links);
        let mut depth = vec![0usize; s.len()];
        for u in 0..s.len() {
            if roots[u].is_none() {
                continue;
            }
            let mut k = 0;
            let mut cur = u;
            while let Link::Parent(p) = links[cur] {
                k += 1;
                cur = p;
            }
            depth[u] = k;
        }
        let mut order: Vec<usize> = (0..s.len()).filter(|&u| hops[u] != Hop::Idle).collect();
        order.sort_by_key(|&u| std::cmp::Reverse(depth[u]));
        Self::finish(dep, hops, order)
    }

    /// Direct plan: every listed sensor uplinks to its gateway.
    pub fn direct(dep: &Deployment, uplinks: &[(usize, usize)]) -> Self {
        let links: Vec<Link> = dep
            .sensors
            .iter()
            .map(|s| if s.alive { Link::Head } else { Link::Dead })
            .collect();
        Self::from_links(dep, &links, uplinks)
    }

    fn finish(dep: &Deployment, hops: Vec<Hop>, order: Vec<usize>) -> Self {
        let bs_dist = dep.gateways.iter().map(|g| distance(g.pos, dep.bs_pos)).collect();
        Self { hops, order, bs_dist }
    }

    pub fn hop(&self, sensor: usize) -> Hop {
        self.hops[sensor]
    }

    pub fn heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.hops
            .iter()
            .enumerate()
            .filter(|(_, h)| matches!(h, Hop::Uplink { .. }))
            .map(|(u, _)| u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    /// Energy debited from sensors and gateways this round.
    pub energy_spent: f64,
    pub sensor_energy_spent: f64,
    /// Mean residual energy over all sensors (dead ones count as zero).
    pub mean_sensor_energy: f64,
    pub min_sensor_energy: f64,
    pub alive_sensors: usize,
    pub alive_gateways: usize,
    pub delivered_messages: u64,
    pub dropped_messages: u64,
}

/// Plays one round on `dep` following `routing`.
pub fn run_round(dep: &mut Deployment, routing: &Routing, radio: &RadioParams, round: usize) -> RoundReport {
    let n = dep.sensors.len();
    let msg_rx = rx_energy(radio.message_bits, radio);
    let pkt_rx = rx_energy(radio.packet_bits, radio);
    let mut inbox = vec![0u64; n];
    let mut charge = vec![0.0; n];
    let mut gw_packets = vec![0u64; dep.gateways.len()];
    let mut gw_messages = vec![0u64; dep.gateways.len()];
    let mut dropped = 0u64;

    for &u in &routing.order {
        if !dep.sensors[u].alive {
            dropped += inbox[u];
            continue;
        }
        let carried = inbox[u] + 1;
        match routing.hops[u] {
            Hop::Idle => unreachable!("idle sensors are not scheduled"),
            Hop::Relay { parent, dist } => {
                charge[u] += inbox[u] as f64 * msg_rx
                    + carried as f64 * tx_energy(radio.message_bits, dist, radio);
                if dep.sensors[parent].alive {
                    inbox[parent] += carried;
                } else {
                    dropped += carried;
                }
            }
            Hop::Uplink { gateway, dist } => {
                charge[u] += inbox[u] as f64 * msg_rx + tx_energy(radio.packet_bits, dist, radio);
                if dep.gateways[gateway].alive {
                    gw_packets[gateway] += 1;
                    gw_messages[gateway] += carried;
                } else {
                    dropped += carried;
                }
            }
        }
    }

    let mut spent = 0.0;
    let mut sensor_spent = 0.0;
    for (s, c) in dep.sensors.iter_mut().zip(&charge) {
        if *c > 0.0 {
            let debit = c.min(s.energy);
            s.energy -= debit;
            sensor_spent += debit;
            if s.energy <= 0.0 {
                s.energy = 0.0;
                s.alive = false;
            }
        }
    }
    spent += sensor_spent;
    let mut delivered = 0;
    for (j, g) in dep.gateways.iter_mut().enumerate() {
        let k = gw_packets[j];
        if k == 0 || !g.alive {
            continue;
        }
        delivered += gw_messages[j];
        let c = k as f64 * (pkt_rx + tx_energy(radio.packet_bits, routing.bs_dist[j], radio));
        let debit = c.min(g.energy);
        g.energy -= debit;
        spent += debit;
        if g.energy <= 0.0 {
            g.energy = 0.0;
            g.alive = false;
        }
    }

    let (sum, min) = dep
        .sensors
        .iter()
        .fold((0.0, f64::INFINITY), |(a, m), s| (a + s.energy, m.min(s.energy)));
    RoundReport {
        round,
        energy_spent: spent,
        sensor_energy_spent: sensor_spent,
        mean_sensor_energy: if n == 0 { 0.0 } else { sum / n as f64 },
        min_sensor_energy: if n == 0 { 0.0 } else { min },
        alive_sensors: dep.alive_sensors(),
        alive_gateways: dep.alive_gateways(),
        delivered_messages: delivered,
        dropped_messages: dropped,
    }
}

/// Clustering and assignment statistics of one re-clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub round: usize,
    pub cluster_count: usize,
    pub mean_cluster_size: f64,
    /// Heads with no live gateway in range, kept on a dead one.
    pub stranded_heads: usize,
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SimSummary {
    pub protocol: Protocol,
    pub seed: u64,
    /// Rounds completed before the first sensor died (or all simulated
    /// rounds when none died).
    pub lifetime_rounds: usize,
    pub rounds_simulated: usize,
    pub reports: Vec<RoundReport>,
    pub epochs: Vec<EpochRecord>,
    pub final_state: Deployment,
    pub n_sensors: usize,
    pub n_gateways: usize,
}

impl SimSummary {
    /// Mean residual sensor energy after each round.
    pub fn avg_energy_curve(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.mean_sensor_energy).collect()
    }

    /// Energy consumed per sensor per round while the whole network is
    /// alive (the first round is always included).
    pub fn mean_round_consumption(&self) -> f64 {
        let window = self.lifetime_rounds.max(1).min(self.reports.len());
        if window == 0 || self.n_sensors == 0 {
            return 0.0;
        }
        let spent: f64 = self.reports[..window].iter().map(|r| r.sensor_energy_spent).sum();
        spent / (self.n_sensors as f64 * window as f64)
    }

    pub fn cluster_counts(&self) -> Vec<usize> {
        self.epochs.iter().map(|e| e.cluster_count).collect()
    }

    pub fn to_doc(&self) -> SummaryDoc {
        SummaryDoc {
            protocol: self.protocol.kind,
            fitness: self.protocol.fitness,
            seed: self.seed,
            n_sensors: self.n_sensors,
            n_gateways: self.n_gateways,
            lifetime_rounds: self.lifetime_rounds,
            rounds_simulated: self.rounds_simulated,
            mean_round_consumption: self.mean_round_consumption(),
            final_mean_sensor_energy: self.reports.last().map_or(0.0, |r| r.mean_sensor_energy),
            cluster_counts: self.cluster_counts(),
            mean_cluster_sizes: self.epochs.iter().map(|e| e.mean_cluster_size).collect(),
        }
    }

    /// `round,mean_sensor_energy,min_sensor_energy,alive_sensors,energy_spent`
    pub fn write_rounds_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "mean_sensor_energy", "min_sensor_energy", "alive_sensors", "energy_spent"])?;
        for r in &self.reports {
            w.write_record([
                r.round.to_string(),
                r.mean_sensor_energy.to_string(),
                r.min_sensor_energy.to_string(),
                r.alive_sensors.to_string(),
                r.energy_spent.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The per-run `summary.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub protocol: ProtocolKind,
    pub fitness: FitnessForm,
    pub seed: u64,
    pub n_sensors: usize,
    pub n_gateways: usize,
    pub lifetime_rounds: usize,
    pub rounds_simulated: usize,
    pub mean_round_consumption: f64,
    pub final_mean_sensor_energy: f64,
    pub cluster_counts: Vec<usize>,
    pub mean_cluster_sizes: Vec<f64>,
}

impl SummaryDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Derives an independent 64-bit seed for `stream` from `seed` (SplitMix64).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Planner<'a> {
    cfg: &'a SimConfig,
    weights: FitnessWeights,
    graph: Option<SensorGraph>,
    gateway_grid: SpatialGrid,
    /// Gateway each sensor last uplinked to.
    last_gateway: Vec<Option<usize>>,
}

impl<'a> Planner<'a> {
    fn new(cfg: &'a SimConfig, dep: &Deployment) -> Self {
        let graph = cfg.protocol.kind.cluster_mode().map(|_| SensorGraph::build(dep));
        let cell = dep.gateways.iter().map(|g| g.tx_range).fold(100.0, f64::max);
        Self {
            cfg,
            weights: cfg.effective_weights(),
            graph,
            gateway_grid: SpatialGrid::new(dep.gateways.iter().map(|g| g.pos).collect(), cell),
            last_gateway: vec![None; dep.sensors.len()],
        }
    }

    /// Uplink range of sensor `u` under this protocol.
    fn range(&self, dep: &Deployment, u: usize) -> f64 {
        match self.cfg.protocol.kind {
            ProtocolKind::GsaEec => dep.sensors[u].tx_range,
            _ => dep.gateways.first().map_or(0.0, |g| g.tx_range),
        }
    }

    fn check_feasible(&self, dep: &Deployment) -> Result<(), SimError> {
        for (u, s) in dep.sensors.iter().enumerate() {
            let range = self.range(dep, u);
            if s.alive && self.gateway_grid.within(s.pos, range).is_empty() {
                return Err(SimError::Infeasible {
                    seed: dep.seed,
                    sensor: s.id,
                    range,
                });
            }
        }
        Ok(())
    }

    fn plan(&mut self, dep: &Deployment, round: usize, epoch: u64) -> Result<(Routing, EpochRecord), SimError> {
        let links = match (self.cfg.protocol.kind.cluster_mode(), &self.graph) {
            (Some(mode), Some(graph)) => cluster_links(dep, graph, mode, self.cfg.plateau_tolerance),
            _ => dep
                .sensors
                .iter()
                .map(|s| if s.alive { Link::Head } else { Link::Dead })
                .collect(),
        };
        let heads: Vec<usize> = (0..links.len()).filter(|&u| links[u] == Link::Head).collect();

        let mut uplinks = Vec::with_capacity(heads.len());
        let mut entries = Vec::new();
        let mut stranded = 0;
        for &h in &heads {
            let pos = dep.sensors[h].pos;
            let in_range = self.gateway_grid.within(pos, self.range(dep, h));
            let live: Vec<NodeId> = in_range
                .iter()
                .filter(|&&j| dep.gateways[j].alive)
                .map(|&j| dep.gateways[j].id)
                .collect();
            if !live.is_empty() {
                entries.push((dep.sensors[h].id, live));
                continue;
            }
            stranded += 1;
            let fallback = self.last_gateway[h].filter(|j| in_range.contains(j)).or_else(|| {
                in_range
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        distance(pos, dep.gateways[a].pos).total_cmp(&distance(pos, dep.gateways[b].pos))
                    })
            });
            if let Some(j) = fallback {
                uplinks.push((h, j));
            }
        }

        let elig = EligibilityMap::from_lists(entries)?;
        let problem = AssignmentProblem::new(elig, dep)?;
        let outcome = problem.solve_gsa(&self.weights, &self.cfg.gsa, derive_seed(self.cfg.seed, epoch))?;
        for (head, gw) in outcome.assignment.iter() {
            let h = dep.sensor_index(head).expect("head is a sensor");
            let g = dep.gateway_index(gw).expect("assigned gateway exists");
            uplinks.push((h, g));
        }
        for &(h, g) in &uplinks {
            self.last_gateway[h] = Some(g);
        }
        uplinks.sort_unstable();

        let alive = dep.alive_sensors();
        let record = EpochRecord {
            round,
            cluster_count: heads.len(),
            mean_cluster_size: if heads.is_empty() {
                0.0
            } else {
                alive as f64 / heads.len() as f64
            },
            stranded_heads: stranded,
            fitness: outcome.fitness,
        };
        Ok((Routing::from_links(dep, &links, &uplinks), record))
    }
}

/// Builds the deployment of `cfg` and checks that every sensor has a
/// gateway within the protocol's uplink range.
pub fn check_feasibility(cfg: &SimConfig) -> Result<(), SimError> {
    cfg.validate()?;
    let dep = cfg.build_deployment()?;
    Planner::new(cfg, &dep).check_feasible(&dep)
}

/// Deploys the network and runs it until the first sensor death (or
/// `max_rounds`), re-clustering every `recluster_period` rounds.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimSummary, SimError> {
    cfg.validate()?;
    let mut dep = cfg.build_deployment()?;
    let mut planner = Planner::new(cfg, &dep);
    planner.check_feasible(&dep)?;

    let initially_alive = dep.alive_sensors();
    let mut reports = Vec::new();
    let mut epochs = Vec::new();
    let mut lifetime = None;
    let mut routing = None;

    for round in 1..=cfg.max_rounds {
        if (round - 1) % cfg.recluster_period == 0 {
            let epoch = ((round - 1) / cfg.recluster_period) as u64;
            let (r, record) = planner.plan(&dep, round, epoch)?;
            routing = Some(r);
            epochs.push(record);
        }
        let report = run_round(&mut dep, routing.as_ref().expect("planned"), &cfg.radio, round);
        let alive = report.alive_sensors;
        reports.push(report);
        if lifetime.is_none() && alive < initially_alive {
            lifetime = Some(round - 1);
            if cfg.stop_at_first_death {
                break;
            }
        }
        if alive == 0 {
            break;
        }
    }

    Ok(SimSummary {
        protocol: cfg.protocol,
        seed: cfg.seed,
        lifetime_rounds: lifetime.unwrap_or(reports.len()),
        rounds_simulated: reports.len(),
        reports,
        epochs,
        n_sensors: dep.sensors.len(),
        n_gateways: dep.gateways.len(),
        final_state: dep,
    })
}
