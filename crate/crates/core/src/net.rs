//! Physical network model: node placement, geometry and the first-order
//! radio energy model.
//!
//! Sensors receive ids `0..n` and gateways `n..n+m` when deployed at random.
//! A deployment loaded from JSON may use any ids as long as they are unique.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("node {id} at ({x}, {y}) lies outside the {side} m field")]
    OutOfField { id: NodeId, x: f64, y: f64, side: f64 },
    #[error("invalid deployment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        distance(*self, *other)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    pub id: NodeId,
    pub pos: Position,
    pub energy: f64,
    pub alive: bool,
    pub tx_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayNode {
    pub id: NodeId,
    pub pos: Position,
    pub energy: f64,
    pub alive: bool,
    pub tx_range: f64,
}

/// Constants of the first-order radio model.
///
/// `eps_fs` is the free-space amplifier coefficient (J/bit/m², used below
/// `d0`) and `eps_mp` the multipath coefficient (J/bit/m⁴, used at or above
/// `d0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    pub e_elec: f64,
    pub eps_fs: f64,
    pub eps_mp: f64,
    pub d0: f64,
    pub packet_bits: u64,
    pub message_bits: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_elec: 50e-9,
            eps_fs: 10e-12,
            eps_mp: 0.0013e-12,
            d0: 86.0,
            packet_bits: 4000,
            message_bits: 500,
        }
    }
}

impl RadioParams {
    /// Crossover distance implied by the two amplifier coefficients.
    pub fn crossover_distance(&self) -> f64 {
        (self.eps_fs / self.eps_mp).sqrt()
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let positive = [self.e_elec, self.eps_fs, self.eps_mp, self.d0];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(NetError::Invalid("radio constants must be positive".into()));
        }
        if self.packet_bits == 0 || self.message_bits == 0 {
            return Err(NetError::Invalid("packet and message sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Energy spent transmitting `bits` over `d` meters.
pub fn tx_energy(bits: u64, d: f64, params: &RadioParams) -> f64 {
    let l = bits as f64;
    let amp = if d < params.d0 {
        params.eps_fs * d * d
    } else {
        params.eps_mp * d.powi(4)
    };
    l * params.e_elec + l * amp
}

/// Energy spent receiving `bits`.
pub fn rx_energy(bits: u64, params: &RadioParams) -> f64 {
    bits as f64 * params.e_elec
}

/// Per-node initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeParams {
    pub sensor_energy: f64,
    pub gateway_energy: f64,
    /// Sensor maximum transmission range (d_max).
    pub sensor_range: f64,
    /// Gateway maximum transmission range (R_max).
    pub gateway_range: f64,
}

impl Default for NodeParams {
    fn default() -> Self {
        Self {
            sensor_energy: 1.0,
            gateway_energy: 5.0,
            sensor_range: 100.0,
            gateway_range: 150.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Independent uniform draws over the whole square.
    #[default]
    Uniform,
    /// One uniform draw inside each cell of a near-square grid.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeployOptions {
    pub nodes: NodeParams,
    pub placement: Placement,
    /// Base station position; the field center when `None`.
    pub bs_pos: Option<Position>,
}

impl Default for DeployOptions {
    fn default() -> Self {
        Self {
            nodes: NodeParams::default(),
            placement: Placement::Uniform,
            bs_pos: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub sensors: Vec<SensorNode>,
    pub gateways: Vec<GatewayNode>,
    pub bs_pos: Position,
    pub field_side: f64,
    pub seed: u64,
}

/// Deploys sensors and gateways at random over a `field_side` square.
///
/// Sensors are drawn first, then gateways, from one ChaCha8 stream seeded by
/// `seed`, so the same arguments always give the same deployment.
pub fn deploy_random(
    n_sensors: usize,
    n_gateways: usize,
    field_side: f64,
    seed: u64,
    opts: &DeployOptions,
) -> Deployment {
    assert!(field_side > 0.0, "field side must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sensor_pos = place(&mut rng, n_sensors, field_side, opts.placement);
    let gateway_pos = place(&mut rng, n_gateways, field_side, opts.placement);
    let p = &opts.nodes;
    let sensors = sensor_pos
        .into_iter()
        .enumerate()
        .map(|(i, pos)| SensorNode {
            id: i as NodeId,
            pos,
            energy: p.sensor_energy,
            alive: p.sensor_energy > 0.0,
            tx_range: p.sensor_range,
        })
        .collect();
    let gateways = gateway_pos
        .into_iter()
        .enumerate()
        .map(|(j, pos)| GatewayNode {
            id: (n_sensors + j) as NodeId,
            pos,
            energy: p.gateway_energy,
            alive: p.gateway_energy > 0.0,
            tx_range: p.gateway_range,
        })
        .collect();
    let center = Position::new(field_side / 2.0, field_side / 2.0);
    Deployment {
        sensors,
        gateways,
        bs_pos: opts.bs_pos.unwrap_or(center),
        field_side,
        seed,
    }
}

fn place(rng: &mut ChaCha8Rng, count: usize, side: f64, placement: Placement) -> Vec<Position> {
    match placement {
        Placement::Uniform => (0..count)
            .map(|_| Position::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
            .collect(),
        Placement::Stratified => {
            if count == 0 {
                return Vec::new();
            }
            let cols = (count as f64).sqrt().ceil() as usize;
            let rows = count.div_ceil(cols);
            let (cw, ch) = (side / cols as f64, side / rows as f64);
            (0..count)
                .map(|k| {
                    let (r, c) = (k / cols, k % cols);
                    Position::new(
                        (c as f64 + rng.gen::<f64>()) * cw,
                        (r as f64 + rng.gen::<f64>()) * ch,
                    )
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Sensor(usize),
    Gateway(usize),
}

impl Deployment {
    pub fn empty(field_side: f64) -> Self {
        Self {
            sensors: Vec::new(),
            gateways: Vec::new(),
            bs_pos: Position::new(field_side / 2.0, field_side / 2.0),
            field_side,
            seed: 0,
        }
    }

    pub fn locate(&self, id: NodeId) -> Option<NodeRef> {
        // Random deployments use contiguous ids, so try the direct index first.
        let i = id as usize;
        if self.sensors.get(i).is_some_and(|s| s.id == id) {
            return Some(NodeRef::Sensor(i));
        }
        if let Some(j) = i.checked_sub(self.sensors.len()) {
            if self.gateways.get(j).is_some_and(|g| g.id == id) {
                return Some(NodeRef::Gateway(j));
            }
        }
        if let Some(i) = self.sensors.iter().position(|s| s.id == id) {
            return Some(NodeRef::Sensor(i));
        }
        self.gateways
            .iter()
            .position(|g| g.id == id)
            .map(NodeRef::Gateway)
    }

    pub fn position_of(&self, id: NodeId) -> Result<Position, NetError> {
        match self.locate(id) {
            Some(NodeRef::Sensor(i)) => Ok(self.sensors[i].pos),
            Some(NodeRef::Gateway(j)) => Ok(self.gateways[j].pos),
            None => Err(NetError::UnknownNode(id)),
        }
    }

    pub fn sensor_index(&self, id: NodeId) -> Option<usize> {
        match self.locate(id) {
            Some(NodeRef::Sensor(i)) => Some(i),
            _ => None,
        }
    }

    pub fn gateway_index(&self, id: NodeId) -> Option<usize> {
        match self.locate(id) {
            Some(NodeRef::Gateway(j)) => Some(j),
            _ => None,
        }
    }

    pub fn alive_sensors(&self) -> usize {
        self.sensors.iter().filter(|s| s.alive).count()
    }

    pub fn alive_gateways(&self) -> usize {
        self.gateways.iter().filter(|g| g.alive).count()
    }

    pub fn total_energy(&self) -> f64 {
        self.sensors.iter().map(|s| s.energy).sum::<f64>()
            + self.gateways.iter().map(|g| g.energy).sum::<f64>()
    }

    /// Checks id uniqueness, field bounds and energy/liveness consistency.
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.field_side > 0.0) {
            return Err(NetError::Invalid("field side must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        let nodes = self
            .sensors
            .iter()
            .map(|s| (s.id, s.pos, s.energy, s.alive, s.tx_range))
            .chain(
                self.gateways
                    .iter()
                    .map(|g| (g.id, g.pos, g.energy, g.alive, g.tx_range)),
            );
        for (id, pos, energy, alive, range) in nodes {
            if !seen.insert(id) {
                return Err(NetError::DuplicateId(id));
            }
            let inside = |v: f64| (0.0..=self.field_side).contains(&v);
            if !(inside(pos.x) && inside(pos.y)) {
                return Err(NetError::OutOfField {
                    id,
                    x: pos.x,
                    y: pos.y,
                    side: self.field_side,
                });
            }
            if !(energy >= 0.0) || alive != (energy > 0.0) {
                return Err(NetError::Invalid(format!(
                    "node {id}: energy {energy} inconsistent with alive={alive}"
                )));
            }
            if !(range > 0.0) {
                return Err(NetError::Invalid(format!("node {id}: range must be positive")));
            }
        }
        Ok(())
    }
}

/// Alive nodes (sensors and gateways) within `range` of `node_id`, excluding
/// the node itself, in ascending id order.
pub fn neighbors(dep: &Deployment, node_id: NodeId, range: f64) -> Result<Vec<NodeId>, NetError> {
    let origin = dep.position_of(node_id)?;
    let sensors = dep
        .sensors
        .iter()
        .filter(|s| s.alive)
        .map(|s| (s.id, s.pos));
    let gateways = dep
        .gateways
        .iter()
        .filter(|g| g.alive)
        .map(|g| (g.id, g.pos));
    let mut out: Vec<NodeId> = sensors
        .chain(gateways)
        .filter(|&(id, pos)| id != node_id && distance(origin, pos) <= range)
        .map(|(id, _)| id)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Uniform bucket grid over a set of points for fixed-radius queries.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
    points: Vec<Position>,
}

impl SpatialGrid {
    pub fn new(points: Vec<Position>, cell: f64) -> Self {
        let cell = cell.max(1e-9);
        let max = points
            .iter()
            .fold(0.0f64, |m, p| m.max(p.x).max(p.y))
            .max(cell);
        let cols = ((max / cell).floor() as usize + 1).max(1);
        let rows = cols;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (k, p) in points.iter().enumerate() {
            let (c, r) = Self::cell_of(p, cell, cols, rows);
            buckets[r * cols + c].push(k);
        }
        Self {
            cell,
            cols,
            rows,
            buckets,
            points,
        }
    }

    fn cell_of(p: &Position, cell: f64, cols: usize, rows: usize) -> (usize, usize) {
        let c = ((p.x.max(0.0) / cell).floor() as usize).min(cols - 1);
        let r = ((p.y.max(0.0) / cell).floor() as usize).min(rows - 1);
        (c, r)
    }

    /// Indices of points within `radius` of `center`, ascending.
    pub fn within(&self, center: Position, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let span = (radius / self.cell).ceil() as isize;
        let (c0, r0) = Self::cell_of(&center, self.cell, self.cols, self.rows);
        for dr in -span..=span {
            let r = r0 as isize + dr;
            if r < 0 || r >= self.rows as isize {
                continue;
            }
            for dc in -span..=span {
                let c = c0 as isize + dc;
                if c < 0 || c >= self.cols as isize {
                    continue;
                }
                for &k in &self.buckets[r as usize * self.cols + c as usize] {
                    if distance(center, self.points[k]) <= radius {
                        out.push(k);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sensor,
    Gateway,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_range: Option<f64>,
}

/// JSON form of a [`Deployment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeploymentDoc {
    pub field_side: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bs: Option<Position>,
    pub nodes: Vec<NodeRecord>,
}

impl From<&Deployment> for DeploymentDoc {
    fn from(dep: &Deployment) -> Self {
        let sensors = dep.sensors.iter().map(|s| NodeRecord {
            id: s.id,
            x: s.pos.x,
            y: s.pos.y,
            energy: Some(s.energy),
            role: Role::Sensor,
            tx_range: Some(s.tx_range),
        });
        let gateways = dep.gateways.iter().map(|g| NodeRecord {
            id: g.id,
            x: g.pos.x,
            y: g.pos.y,
            energy: Some(g.energy),
            role: Role::Gateway,
            tx_range: Some(g.tx_range),
        });
        Self {
            field_side: dep.field_side,
            seed: dep.seed,
            bs: Some(dep.bs_pos),
            nodes: sensors.chain(gateways).collect(),
        }
    }
}

impl DeploymentDoc {
    /// Builds a validated deployment; missing energies and ranges fall back
    /// to `defaults`.
    pub fn into_deployment(self, defaults: &NodeParams) -> Result<Deployment, NetError> {
        let mut dep = Deployment::empty(self.field_side);
        dep.seed = self.seed;
        if let Some(bs) = self.bs {
            dep.bs_pos = bs;
        }
        for n in self.nodes {
            let pos = Position::new(n.x, n.y);
            match n.role {
                Role::Sensor => {
                    let energy = n.energy.unwrap_or(defaults.sensor_energy);
                    dep.sensors.push(SensorNode {
                        id: n.id,
                        pos,
                        energy,
                        alive: energy > 0.0,
                        tx_range: n.tx_range.unwrap_or(defaults.sensor_range),
                    })
                }
                Role::Gateway => {
                    let energy = n.energy.unwrap_or(defaults.gateway_energy);
                    dep.gateways.push(GatewayNode {
                        id: n.id,
                        pos,
                        energy,
                        alive: energy > 0.0,
                        tx_range: n.tx_range.unwrap_or(defaults.gateway_range),
                    })
                }
            }
        }
        dep.validate()?;
        Ok(dep)
    }
}

impl Deployment {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DeploymentDoc::from(self)).expect("deployment serializes")
    }

    pub fn from_json(text: &str, defaults: &NodeParams) -> Result<Self, NetError> {
        let doc: DeploymentDoc =
            serde_json::from_str(text).map_err(|e| NetError::Invalid(e.to_string()))?;
        doc.into_deployment(defaults)
    }
}
