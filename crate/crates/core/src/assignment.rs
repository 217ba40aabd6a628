//! Second-level association of cluster heads to gateways.
//!
//! A GSA agent is a real vector with one coordinate per head. Coordinate `d`
//! ranges over `[0, l_d)`, where `l_d` is the number of gateways eligible for
//! head `d`, and its floor indexes that head's eligibility list. Two fitness
//! forms score a decoded assignment from
//!
//! * `f1`: summed residual energy of the assigned gateways (one term per
//!   head, so a gateway shared by `k` heads counts `k` times), and
//! * `f2`: summed head-to-gateway plus gateway-to-BS distance.
//!
//! FF1 is `alpha / f1 + beta * f2` with `alpha + beta = 1`. FF2 is the ratio
//! `(beta * f2 + t1) / (alpha * f1 + t2)`, mapped into `[0, 1)` by
//! `r / (1 + r)`; the map is strictly increasing, so it never changes which
//! assignment is best.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gsa::{self, GsaError, GsaParams, SearchBox};
use crate::net::{distance, Deployment, NodeId, SpatialGrid};

#[derive(Debug, Error, PartialEq)]
pub enum AssignError {
    #[error("cluster head {head} has no eligible gateway in range")]
    Infeasible { head: NodeId },
    #[error("node {0} is not a sensor of this deployment")]
    UnknownHead(NodeId),
    #[error("fitness is degenerate: assigned gateways hold no energy")]
    DegenerateFitness,
    #[error("invalid fitness configuration: {0}")]
    Config(String),
    #[error("assignment does not cover head {0}")]
    Unassigned(NodeId),
    #[error("exhaustive search over {0} assignments is too large")]
    TooLarge(u128),
    #[error(transparent)]
    Gsa(#[from] GsaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitnessForm {
    #[serde(rename = "FF1")]
    Ff1,
    #[serde(rename = "FF2")]
    Ff2,
}

impl FitnessForm {
    pub fn label(&self) -> &'static str {
        match self {
            FitnessForm::Ff1 => "FF1",
            FitnessForm::Ff2 => "FF2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub t1: f64,
    #[serde(default)]
    pub t2: f64,
    pub form: FitnessForm,
}

impl FitnessWeights {
    pub fn ff1() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            t1: 0.0,
            t2: 0.0,
            form: FitnessForm::Ff1,
        }
    }

    pub fn ff2() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            t1: 0.0,
            t2: 1.0,
            form: FitnessForm::Ff2,
        }
    }

    pub fn for_form(form: FitnessForm) -> Self {
        match form {
            FitnessForm::Ff1 => Self::ff1(),
            FitnessForm::Ff2 => Self::ff2(),
        }
    }

    pub fn validate(&self) -> Result<(), AssignError> {
        let bad = |m: &str| Err(AssignError::Config(m.to_string()));
        if ![self.alpha, self.beta, self.t1, self.t2].iter().all(|v| v.is_finite()) {
            return bad("weights must be finite");
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return bad("alpha and beta must be non-negative");
        }
        match self.form {
            FitnessForm::Ff1 if (self.alpha + self.beta - 1.0).abs() > 1e-9 => {
                bad("FF1 requires alpha + beta = 1")
            }
            FitnessForm::Ff2 if self.t1 < 0.0 || self.t2 < 0.0 => {
                bad("FF2 offsets t1 and t2 must be non-negative")
            }
            FitnessForm::Ff2 if self.alpha == 0.0 && self.t2 == 0.0 => {
                bad("FF2 denominator alpha * f1 + t2 can vanish")
            }
            _ => Ok(()),
        }
    }

    /// Scores aggregate energy `f1` and distance `f2`.
    pub fn score(&self, f1: f64, f2: f64) -> Result<f64, AssignError> {
        match self.form {
            FitnessForm::Ff1 => {
                if !(f1 > 0.0) {
                    return Err(AssignError::DegenerateFitness);
                }
                Ok(self.alpha / f1 + self.beta * f2)
            }
            FitnessForm::Ff2 => {
                let den = self.alpha * f1 + self.t2;
                if !(den > 0.0) {
                    return Err(AssignError::Config(format!(
                        "FF2 denominator alpha * f1 + t2 = {den} is not positive"
                    )));
                }
                let raw = (self.beta * f2 + self.t1) / den;
                Ok(raw / (1.0 + raw))
            }
        }
    }
}

/// Alive gateways reachable by each head, in ascending gateway id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityMap {
    heads: Vec<NodeId>,
    lists: Vec<Vec<NodeId>>,
}

impl EligibilityMap {
    pub fn from_lists(entries: Vec<(NodeId, Vec<NodeId>)>) -> Result<Self, AssignError> {
        let mut heads = Vec::with_capacity(entries.len());
        let mut lists = Vec::with_capacity(entries.len());
        for (h, mut list) in entries {
            if list.is_empty() {
                return Err(AssignError::Infeasible { head: h });
            }
            list.sort_unstable();
            heads.push(h);
            lists.push(list);
        }
        Ok(Self { heads, lists })
    }

    pub fn heads(&self) -> &[NodeId] {
        &self.heads
    }

    pub fn list(&self, d: usize) -> &[NodeId] {
        &self.lists[d]
    }

    pub fn get(&self, head: NodeId) -> Option<&[NodeId]> {
        self.heads
            .iter()
            .position(|&h| h == head)
            .map(|d| self.lists[d].as_slice())
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Number of distinct assignments.
    pub fn search_space(&self) -> u128 {
        self.lists
            .iter()
            .try_fold(1u128, |acc, l| acc.checked_mul(l.len() as u128))
            .unwrap_or(u128::MAX)
    }
}

/// Eligible gateways (alive, within `range`) for each head.
pub fn build_eligibility(heads: &[NodeId], dep: &Deployment, range: f64) -> Result<EligibilityMap, AssignError> {
    let grid = SpatialGrid::new(dep.gateways.iter().map(|g| g.pos).collect(), range.max(1.0));
    let entries = heads
        .iter()
        .map(|&h| {
            let i = dep.sensor_index(h).ok_or(AssignError::UnknownHead(h))?;
            let list: Vec<NodeId> = grid
                .within(dep.sensors[i].pos, range)
                .into_iter()
                .filter(|&j| dep.gateways[j].alive)
                .map(|j| dep.gateways[j].id)
                .collect();
            Ok((h, list))
        })
        .collect::<Result<Vec<_>, AssignError>>()?;
    EligibilityMap::from_lists(entries)
}

/// Head id to gateway id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub BTreeMap<NodeId, NodeId>);

impl Assignment {
    pub fn gateway_of(&self, head: NodeId) -> Option<NodeId> {
        self.0.get(&head).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.iter().map(|(&h, &g)| (h, g))
    }
}

fn decode_index(x: f64, len: usize) -> usize {
    debug_assert!(len > 0);
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    (x.floor() as usize).min(len - 1)
}

/// Maps an agent position to an assignment by flooring each coordinate into
/// its head's eligibility list. Out-of-range coordinates clamp to the ends.
pub fn decode_agent(position: &[f64], elig: &EligibilityMap) -> Assignment {
    assert_eq!(position.len(), elig.len(), "one coordinate per head");
    Assignment(
        position
            .iter()
            .enumerate()
            .map(|(d, &x)| {
                let list = elig.list(d);
                (elig.heads[d], list[decode_index(x, list.len())])
            })
            .collect(),
    )
}

/// Aggregates `(f1, f2)` of an assignment over the deployment.
pub fn objectives(a: &Assignment, dep: &Deployment) -> Result<(f64, f64), AssignError> {
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for (h, g) in a.iter() {
        let hp = dep.sensor_index(h).ok_or(AssignError::UnknownHead(h))?;
        let gj = dep.gateway_index(g).ok_or(AssignError::Unassigned(h))?;
        let gw = &dep.gateways[gj];
        f1 += gw.energy;
        f2 += distance(dep.sensors[hp].pos, gw.pos) + distance(gw.pos, dep.bs_pos);
    }
    Ok((f1, f2))
}

pub fn fitness_ff1(a: &Assignment, dep: &Deployment, w: &FitnessWeights) -> Result<f64, AssignError> {
    let w = FitnessWeights { form: FitnessForm::Ff1, ..*w };
    w.validate()?;
    let (f1, f2) = objectives(a, dep)?;
    w.score(f1, f2)
}

pub fn fitness_ff2(a: &Assignment, dep: &Deployment, w: &FitnessWeights) -> Result<f64, AssignError> {
    let w = FitnessWeights { form: FitnessForm::Ff2, ..*w };
    w.validate()?;
    let (f1, f2) = objectives(a, dep)?;
    w.score(f1, f2)
}

/// Dispatches on `w.form`.
pub fn fitness(a: &Assignment, dep: &Deployment, w: &FitnessWeights) -> Result<f64, AssignError> {
    match w.form {
        FitnessForm::Ff1 => fitness_ff1(a, dep, w),
        FitnessForm::Ff2 => fitness_ff2(a, dep, w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatewayOption {
    pub gateway: NodeId,
    pub energy: f64,
    /// Head-to-gateway plus gateway-to-BS distance.
    pub route_len: f64,
}

/// Precomputed per-head option tables, so a candidate can be scored in
/// `O(c)` without touching the deployment.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    elig: EligibilityMap,
    options: Vec<Vec<GatewayOption>>,
}

impl AssignmentProblem {
    pub fn new(elig: EligibilityMap, dep: &Deployment) -> Result<Self, AssignError> {
        let options = (0..elig.len())
            .map(|d| {
                let h = elig.heads[d];
                let hp = dep.sensors[dep.sensor_index(h).ok_or(AssignError::UnknownHead(h))?].pos;
                elig.list(d)
                    .iter()
                    .map(|&g| {
                        let gw = &dep.gateways[dep.gateway_index(g).ok_or(AssignError::Unassigned(h))?];
                        Ok(GatewayOption {
                            gateway: g,
                            energy: gw.energy,
                            route_len: distance(hp, gw.pos) + distance(gw.pos, dep.bs_pos),
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>, AssignError>>()?;
        Ok(Self { elig, options })
    }

    pub fn eligibility(&self) -> &EligibilityMap {
        &self.elig
    }

    pub fn dims(&self) -> usize {
        self.options.len()
    }

    pub fn score_choice(&self, choice: &[usize], w: &FitnessWeights) -> Result<f64, AssignError> {
        let (f1, f2) = choice
            .iter()
            .zip(&self.options)
            .fold((0.0, 0.0), |(e, d), (&k, opts)| (e + opts[k].energy, d + opts[k].route_len));
        w.score(f1, f2)
    }

    fn score_position(&self, x: &[f64], w: &FitnessWeights) -> f64 {
        let (f1, f2) = x
            .iter()
            .zip(&self.options)
            .fold((0.0, 0.0), |(e, d), (&xd, opts)| {
                let o = &opts[decode_index(xd, opts.len())];
                (e + o.energy, d + o.route_len)
            });
        w.score(f1, f2).unwrap_or(f64::NAN)
    }

    pub fn assignment_of(&self, choice: &[usize]) -> Assignment {
        Assignment(
            choice
                .iter()
                .enumerate()
                .map(|(d, &k)| (self.elig.heads[d], self.options[d][k].gateway))
                .collect(),
        )
    }

    fn search_box(&self) -> Result<SearchBox, AssignError> {
        let upper = self.options.iter().map(|o| o.len() as f64).collect();
        Ok(SearchBox::new(vec![0.0; self.dims()], upper)?)
    }

    /// Runs GSA over the encoded space and decodes the best agent.
    pub fn solve_gsa(&self, w: &FitnessWeights, params: &GsaParams, seed: u64) -> Result<AssignmentOutcome, AssignError> {
        w.validate()?;
        if self.dims() == 0 {
            return Ok(AssignmentOutcome {
                assignment: Assignment::default(),
                fitness: None,
                weights: *w,
            });
        }
        let bounds = self.search_box()?;
        let f = |x: &[f64]| self.score_position(x, w);
        let out = gsa::optimize(&f, params, &bounds, seed)?;
        let choice: Vec<usize> = out
            .best_position
            .iter()
            .zip(&self.options)
            .map(|(&x, o)| decode_index(x, o.len()))
            .collect();
        Ok(AssignmentOutcome {
            assignment: self.assignment_of(&choice),
            fitness: Some(out.best_fitness),
            weights: *w,
        })
    }

    /// Enumerates every assignment; refuses spaces above `limit`.
    pub fn solve_exhaustive(&self, w: &FitnessWeights, limit: u128) -> Result<AssignmentOutcome, AssignError> {
        w.validate()?;
        let space = self.elig.search_space();
        if space > limit {
            return Err(AssignError::TooLarge(space));
        }
        let mut choice = vec![0usize; self.dims()];
        let mut best = (f64::INFINITY, choice.clone());
        loop {
            let f = self.score_choice(&choice, w)?;
            if f < best.0 {
                best = (f, choice.clone());
            }
            // Odometer increment.
            let mut d = 0;
            loop {
                if d == choice.len() {
                    let fitness = (!choice.is_empty()).then_some(best.0);
                    return Ok(AssignmentOutcome {
                        assignment: self.assignment_of(&best.1),
                        fitness,
                        weights: *w,
                    });
                }
                choice[d] += 1;
                if choice[d] < self.options[d].len() {
                    break;
                }
                choice[d] = 0;
                d += 1;
            }
        }
    }
}

/// A solved assignment with the score and weights that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentOutcome {
    pub assignment: Assignment,
    /// `None` for an empty head set.
    pub fitness: Option<f64>,
    pub weights: FitnessWeights,
}

impl AssignmentOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serializes")
    }
}

/// Associates `heads` to gateways within the gateway range (R_max).
pub fn assign_heads(
    heads: &[NodeId],
    dep: &Deployment,
    w: &FitnessWeights,
    gsa: &GsaParams,
    seed: u64,
) -> Result<AssignmentOutcome, AssignError> {
    let range = dep.gateways.first().map_or(0.0, |g| g.tx_range);
    assign_heads_in_range(heads, dep, range, w, gsa, seed)
}

pub fn assign_heads_in_range(
    heads: &[NodeId],
    dep: &Deployment,
    range: f64,
    w: &FitnessWeights,
    gsa: &GsaParams,
    seed: u64,
) -> Result<AssignmentOutcome, AssignError> {
    let elig = build_eligibility(heads, dep, range)?;
    AssignmentProblem::new(elig, dep)?.solve_gsa(w, gsa, seed)
}

/// Single-level baseline: every alive sensor is its own head and must reach
/// a gateway within its own range (d_max).
pub fn assign_sensors_direct(
    dep: &Deployment,
    w: &FitnessWeights,
    gsa: &GsaParams,
    seed: u64,
) -> Result<AssignmentOutcome, AssignError> {
    let heads: Vec<NodeId> = dep.sensors.iter().filter(|s| s.alive).map(|s| s.id).collect();
    let range = dep.sensors.iter().map(|s| s.tx_range).fold(0.0, f64::max);
    assign_heads_in_range(&heads, dep, range, w, gsa, seed)
}
