//! First-level clustering by residual-energy gradient.
//!
//! Every alive sensor points at a neighbor with more residual energy, so
//! energy never decreases along the path to the cluster head and the nodes
//! that relay the most traffic are the ones best able to afford it. A sensor
//! with no richer neighbor heads its own cluster.
//!
//! Two modes are provided:
//!
//! * [`ClusterMode::Gc`] follows the steepest ascent. Ties are broken by the
//!   lower id, and a connected set of equal-energy sensors (a plateau) is
//!   treated as a unit: it drains through its members that do have a richer
//!   neighbor, or, if none does, forms one cluster headed by its lowest id.
//! * [`ClusterMode::Wa`] refuses to join a neighbor whose energy is within a
//!   relative tolerance of the sensor's own, so near-flat regions split into
//!   many small clusters.
//!
//! Every head produced in GC mode is also a head in WA mode, so GC never
//! yields more clusters than WA on the same snapshot.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::net::{Deployment, NodeId, SpatialGrid};

pub const DEFAULT_PLATEAU_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterMode {
    #[serde(rename = "GC")]
    Gc,
    #[serde(rename = "WA")]
    Wa,
}

/// Symmetric sensor adjacency: `u` and `v` are linked when their distance
/// is within both transmission ranges. Lists are sorted by node id.
#[derive(Debug, Clone)]
pub struct SensorGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl SensorGraph {
    pub fn build(dep: &Deployment) -> Self {
        let sensors = &dep.sensors;
        let max_range = sensors.iter().map(|s| s.tx_range).fold(0.0, f64::max);
        let grid = SpatialGrid::new(sensors.iter().map(|s| s.pos).collect(), max_range.max(1.0));
        let adj = sensors
            .iter()
            .enumerate()
            .map(|(u, su)| {
                let mut list: Vec<(usize, f64)> = grid
                    .within(su.pos, su.tx_range)
                    .into_iter()
                    .filter(|&v| v != u)
                    .filter_map(|v| {
                        let d = su.pos.distance_to(&sensors[v].pos);
                        (d <= sensors[v].tx_range).then_some((v, d))
                    })
                    .collect();
                list.sort_by_key(|&(v, _)| sensors[v].id);
                list
            })
            .collect();
        Self { adj }
    }

    /// Neighbors of sensor index `u` as `(index, distance)` pairs.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

/// Role of a sensor (by index) in a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Dead,
    Head,
    Parent(usize),
}

/// Computes the parent link of every sensor from its current energy.
pub fn cluster_links(dep: &Deployment, graph: &SensorGraph, mode: ClusterMode, tolerance: f64) -> Vec<Link> {
    let sensors = &dep.sensors;
    let n = sensors.len();
    // Dead sensors get -inf so they never win a comparison.
    let energy: Vec<f64> = sensors
        .iter()
        .map(|s| if s.alive { s.energy } else { f64::NEG_INFINITY })
        .collect();
    let alive = |i: usize| sensors[i].alive;

    // Neighbor lists are sorted by id, so keeping the first maximum breaks
    // ties toward the lower id.
    let mut best: Vec<Option<usize>> = vec![None; n];
    let mut on_plateau = vec![false; n];
    for u in (0..n).filter(|&u| alive(u)) {
        let mut top = f64::NEG_INFINITY;
        for &(v, _) in graph.neighbors(u) {
            let e = energy[v];
            if e > top {
                top = e;
                best[u] = Some(v);
            }
            if e == energy[u] {
                on_plateau[u] = true;
            }
        }
        if top == f64::NEG_INFINITY {
            best[u] = None;
        }
    }

    let mut links: Vec<Link> = (0..n)
        .map(|i| if alive(i) { Link::Head } else { Link::Dead })
        .collect();

    match mode {
        ClusterMode::Wa => {
            for u in (0..n).filter(|&u| alive(u)) {
                if let Some(b) = best[u] {
                    if energy[b] - energy[u] > tolerance * energy[u] {
                        links[u] = Link::Parent(b);
                    }
                }
            }
        }
        ClusterMode::Gc => {
            let up: Vec<Option<usize>> = (0..n)
                .map(|u| best[u].filter(|&b| energy[b] > energy[u]))
                .collect();
            for u in (0..n).filter(|&u| alive(u) && !on_plateau[u]) {
                if let Some(p) = up[u] {
                    links[u] = Link::Parent(p);
                }
            }
            for plateau in plateaus(dep, graph, &on_plateau) {
                let exits: Vec<usize> = plateau.iter().copied().filter(|&u| up[u].is_some()).collect();
                let sources = if exits.is_empty() {
                    let head = *plateau
                        .iter()
                        .min_by_key(|&&u| sensors[u].id)
                        .expect("plateaus are non-empty");
                    vec![head]
                } else {
                    for &u in &exits {
                        links[u] = Link::Parent(up[u].expect("exit has a richer neighbor"));
                    }
                    exits
                };
                drain_plateau(dep, graph, &sources, &mut links);
            }
        }
    }
    links
}

/// Connected components of alive sensors joined by equal-energy edges,
/// restricted to sensors flagged in `candidates` (those with at least one
/// equal-energy neighbor). Each component is sorted by index.
fn plateaus(dep: &Deployment, graph: &SensorGraph, candidates: &[bool]) -> Vec<Vec<usize>> {
    let s = &dep.sensors;
    let n = s.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if !candidates[start] || !s[start].alive || comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut k = 0;
        while k < members.len() {
            let u = members[k];
            k += 1;
            for &(v, _) in graph.neighbors(u) {
                if s[v].alive && comp[v] == usize::MAX && s[v].energy == s[u].energy {
                    comp[v] = id;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Breadth-first search inside a plateau from `sources`; every reached node
/// that is not a source gets its BFS predecessor as parent.
fn drain_plateau(dep: &Deployment, graph: &SensorGraph, sources: &[usize], links: &mut [Link]) {
    let s = &dep.sensors;
    let level = s[sources[0]].energy;
    let mut seen: BTreeSet<usize> = sources.iter().copied().collect();
    let mut queue: VecDeque<usize> = sources.iter().copied().collect();
    while let Some(u) = queue.pop_front() {
        for &(v, _) in graph.neighbors(u) {
            if s[v].alive && s[v].energy == level && seen.insert(v) {
                links[v] = Link::Parent(u);
                queue.push_back(v);
            }
        }
    }
}

/// First-level clustering of the alive sensors.
///
/// `members` maps each head to every sensor of its cluster, the head
/// included, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub mode: ClusterMode,
    pub parent: BTreeMap<NodeId, Option<NodeId>>,
    pub heads: Vec<NodeId>,
    pub members: BTreeMap<NodeId, Vec<NodeId>>,
}

impl ClusterSet {
    pub fn from_links(dep: &Deployment, mode: ClusterMode, links: &[Link]) -> Self {
        let id = |i: usize| dep.sensors[i].id;
        let mut parent = BTreeMap::new();
        let mut heads = Vec::new();
        for (i, link) in links.iter().enumerate() {
            match *link {
                Link::Dead => {}
                Link::Head => {
                    parent.insert(id(i), None);
                    heads.push(id(i));
                }
                Link::Parent(p) => {
                    parent.insert(id(i), Some(id(p)));
                }
            }
        }
        heads.sort_unstable();
        let roots = head_of_each(links);
        let mut members: BTreeMap<NodeId, Vec<NodeId>> =
            heads.iter().map(|&h| (h, Vec::new())).collect();
        for (i, root) in roots.iter().enumerate() {
            if let Some(r) = root {
                members.get_mut(&id(*r)).expect("root is a head").push(id(i));
            }
        }
        for list in members.values_mut() {
            list.sort_unstable();
        }
        Self {
            mode,
            parent,
            heads,
            members,
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.heads.len()
    }

    /// Mean number of sensors per cluster (0 when empty).
    pub fn mean_cluster_size(&self) -> f64 {
        if self.heads.is_empty() {
            0.0
        } else {
            self.parent.len() as f64 / self.heads.len() as f64
        }
    }

    /// Follows parent links from `node` to its head, or `None` if the walk
    /// leaves the set or exceeds the number of nodes.
    pub fn head_of(&self, node: NodeId) -> Option<NodeId> {
        let mut cur = node;
        for _ in 0..=self.parent.len() {
            match self.parent.get(&cur)? {
                None => return Some(cur),
                Some(p) => cur = *p,
            }
        }
        None
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cluster set serializes")
    }
}

/// Head index reached from each alive sensor, memoized along the walk.
pub(crate) fn head_of_each(links: &[Link]) -> Vec<Option<usize>> {
    let n = links.len();
    let mut root: Vec<Option<usize>> = vec![None; n];
    let mut path = Vec::new();
    for start in 0..n {
        if links[start] == Link::Dead || root[start].is_some() {
            continue;
        }
        path.clear();
        let mut cur = start;
        let found = loop {
            if let Some(r) = root[cur] {
                break Some(r);
            }
            match links[cur] {
                Link::Head => break Some(cur),
                Link::Parent(p) if path.len() <= n => {
                    path.push(cur);
                    cur = p;
                }
                _ => break None,
            }
        };
        if let Some(r) = found {
            root[cur] = Some(r);
            for &u in &path {
                root[u] = Some(r);
            }
        }
    }
    root
}

/// Clusters the alive sensors of `dep` with the default plateau tolerance.
pub fn build_clusters(dep: &Deployment, mode: ClusterMode) -> ClusterSet {
    build_clusters_with(dep, &SensorGraph::build(dep), mode, DEFAULT_PLATEAU_TOLERANCE)
}

pub fn build_clusters_with(
    dep: &Deployment,
    graph: &SensorGraph,
    mode: ClusterMode,
    tolerance: f64,
) -> ClusterSet {
    let links = cluster_links(dep, graph, mode, tolerance);
    ClusterSet::from_links(dep, mode, &links)
}

/// Head counts `(GC, WA)` on the same snapshot.
pub fn cluster_count_comparison(dep: &Deployment) -> (usize, usize) {
    let graph = SensorGraph::build(dep);
    let gc = build_clusters_with(dep, &graph, ClusterMode::Gc, DEFAULT_PLATEAU_TOLERANCE);
    let wa = build_clusters_with(dep, &graph, ClusterMode::Wa, DEFAULT_PLATEAU_TOLERANCE);
    (gc.cluster_count(), wa.cluster_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{deploy_random, DeployOptions, Position, SensorNode};

    fn line(spacing: f64, energies: &[f64]) -> Deployment {
        let mut dep = Deployment::empty(1000.0);
        for (i, &e) in energies.iter().enumerate() {
            dep.sensors.push(SensorNode {
                id: i as NodeId,
                pos: Position::new(i as f64 * spacing, 0.0),
                energy: e,
                alive: e > 0.0,
                tx_range: 100.0,
            });
        }
        dep
    }

    #[test]
    fn empty_and_isolated() {
        let dep = Deployment::empty(100.0);
        let cs = build_clusters(&dep, ClusterMode::Gc);
        assert!(cs.heads.is_empty() && cs.parent.is_empty());
        assert_eq!(cluster_count_comparison(&dep), (0, 0));

        let dep = line(500.0, &[0.7]);
        for mode in [ClusterMode::Gc, ClusterMode::Wa] {
            let cs = build_clusters(&dep, mode);
            assert_eq!(cs.heads, vec![0]);
            assert_eq!(cs.members[&0], vec![0]);
        }
    }

    #[test]
    fn ascending_line_forms_one_cluster() {
        let dep = line(50.0, &[0.4, 0.6, 0.8, 1.0]);
        let cs = build_clusters(&dep, ClusterMode::Gc);
        assert_eq!(cs.heads, vec![3]);
        // Steepest ascent within 100 m: 0 -> 2, 1 -> 3, 2 -> 3.
        assert_eq!(cs.parent[&0], Some(2));
        assert_eq!(cs.parent[&1], Some(3));
        assert_eq!(cs.parent[&2], Some(3));
        assert_eq!(cs.members[&3], vec![0, 1, 2, 3]);
    }

    #[test]
    fn equal_energy_component() {
        // 0..5 connected in a chain, 5 alone far away.
        let mut dep = line(60.0, &[1.0; 5]);
        dep.sensors.push(SensorNode {
            id: 5,
            pos: Position::new(900.0, 0.0),
            energy: 1.0,
            alive: true,
            tx_range: 100.0,
        });
        let gc = build_clusters(&dep, ClusterMode::Gc);
        assert_eq!(gc.heads, vec![0, 5]);
        assert_eq!(gc.members[&0], vec![0, 1, 2, 3, 4]);
        for i in 1..5 {
            assert_eq!(gc.parent[&i], Some(i - 1));
        }
        let wa = build_clusters(&dep, ClusterMode::Wa);
        assert_eq!(wa.heads, (0..6).collect::<Vec<_>>());
        assert_eq!(cluster_count_comparison(&dep), (2, 6));
    }

    #[test]
    fn plateau_drains_through_exit() {
        // Plateau 0-1-2 at 0.5 J; node 3 is richer and only reachable from 2.
        let dep = line(60.0, &[0.5, 0.5, 0.5, 0.9]);
        let cs = build_clusters(&dep, ClusterMode::Gc);
        assert_eq!(cs.heads, vec![3]);
        assert_eq!(cs.parent[&2], Some(3));
        assert_eq!(cs.parent[&1], Some(2));
        assert_eq!(cs.parent[&0], Some(1));
    }

    #[test]
    fn watershed_splits_near_flat_neighbors() {
        let dep = line(50.0, &[0.500, 0.502, 0.9]);
        let wa = build_clusters_with(&dep, &SensorGraph::build(&dep), ClusterMode::Wa, 0.01);
        // 0's best neighbor is 2 (0.9, 100 m away): far above tolerance.
        assert_eq!(wa.parent[&0], Some(2));
        let dep = line(80.0, &[0.500, 0.502, 0.9]);
        let wa = build_clusters_with(&dep, &SensorGraph::build(&dep), ClusterMode::Wa, 0.01);
        // Now 0 only sees 1, which is within 1%.
        assert_eq!(wa.parent[&0], None);
        assert_eq!(wa.parent[&1], Some(2));
        let gc = build_clusters(&dep, ClusterMode::Gc);
        assert_eq!(gc.parent[&0], Some(1));
    }

    #[test]
    fn dead_sensors_are_excluded() {
        let mut dep = line(50.0, &[0.4, 0.6, 0.8]);
        dep.sensors[1].alive = false;
        dep.sensors[1].energy = 0.0;
        let cs = build_clusters(&dep, ClusterMode::Gc);
        assert!(!cs.parent.contains_key(&1));
        assert_eq!(cs.parent[&0], Some(2));
    }

    #[test]
    fn head_of_follows_chain() {
        let dep = line(50.0, &[0.4, 0.6, 0.8, 1.0]);
        let cs = build_clusters(&dep, ClusterMode::Gc);
        for id in 0..4 {
            assert_eq!(cs.head_of(id), Some(3));
        }
        assert_eq!(cs.head_of(17), None);
    }

    #[test]
    fn cluster_set_json_has_parent_and_heads() {
        let dep = line(50.0, &[0.4, 1.0]);
        let v: serde_json::Value = serde_json::from_str(&build_clusters(&dep, ClusterMode::Gc).to_json()).unwrap();
        assert_eq!(v["mode"], "GC");
        assert_eq!(v["heads"], serde_json::json!([1]));
        assert_eq!(v["parent"]["0"], 1);
    }

    #[test]
    fn deterministic_on_random_snapshot() {
        let mut dep = deploy_random(300, 0, 250.0, 4, &DeployOptions::default());
        for (i, s) in dep.sensors.iter_mut().enumerate() {
            s.energy = 0.5 + ((i * 7919) % 101) as f64 / 200.0;
        }
        for mode in [ClusterMode::Gc, ClusterMode::Wa] {
            assert_eq!(build_clusters(&dep, mode), build_clusters(&dep, mode));
        }
    }
}
