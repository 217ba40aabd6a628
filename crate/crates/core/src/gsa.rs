//! Gravitational Search Algorithm over a box-bounded continuous space.
//!
//! Agents are point masses. Each iteration the population is evaluated,
//! fitness is turned into normalized masses (lower fitness means heavier),
//! every agent is pulled toward every other agent in proportion to the
//! other's mass, and velocities/positions are advanced. The gravitational
//! "constant" decays over the run, so the search contracts from exploration
//! to exploitation.
//!
//! All randomness comes from one ChaCha8 stream in a fixed order:
//!
//! 1. initial positions, agent-major then dimension-major;
//! 2. per iteration, one force weight per ordered pair `(i, j)`, `j != i`,
//!    `i`-major;
//! 3. per iteration, one velocity weight per `(agent, dimension)`.
//!
//! A given seed therefore reproduces a run bit for bit.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GsaError {
    #[error("invalid GSA parameters: {0}")]
    InvalidParams(String),
    #[error("fitness is not finite ({value}) at position {position:?}")]
    NonFiniteFitness { position: Vec<f64>, value: f64 },
}

/// Schedule for the gravitational constant `G(t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityDecay {
    /// `G0 * exp(-alpha * t / t_max)`.
    #[default]
    Exponential,
    /// `G0 * (1 / t)^alpha`. Only sensible with a small `alpha`.
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsaParams {
    pub n_agents: usize,
    pub t_max: usize,
    pub g0: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub decay: GravityDecay,
}

impl Default for GsaParams {
    fn default() -> Self {
        Self {
            n_agents: 30,
            t_max: 100,
            g0: 100.0,
            alpha: 20.0,
            epsilon: 1e-9,
            decay: GravityDecay::Exponential,
        }
    }
}

impl GsaParams {
    pub fn validate(&self) -> Result<(), GsaError> {
        let bad = |m: &str| Err(GsaError::InvalidParams(m.to_string()));
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1");
        }
        if self.t_max == 0 {
            return bad("t_max must be at least 1");
        }
        if !(self.g0 > 0.0 && self.g0.is_finite()) {
            return bad("g0 must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

/// Per-dimension search bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GsaError> {
        if lower.len() != upper.len() {
            return Err(GsaError::InvalidParams("bound vectors differ in length".into()));
        }
        if lower.is_empty() {
            return Err(GsaError::InvalidParams("at least one dimension is required".into()));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite()))
        {
            return Err(GsaError::InvalidParams("need lower < upper in every dimension".into()));
        }
        Ok(Self { lower, upper })
    }

    /// The same interval in every dimension.
    pub fn uniform(dims: usize, lower: f64, upper: f64) -> Result<Self, GsaError> {
        Self::new(vec![lower; dims], vec![upper; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Objective to minimize.
pub trait Fitness {
    fn evaluate(&self, position: &[f64]) -> f64;
}

impl<F> Fitness for F
where
    F: Fn(&[f64]) -> f64,
{
    fn evaluate(&self, position: &[f64]) -> f64 {
        self(position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub mass: f64,
}

impl Agent {
    pub fn at_rest(position: Vec<f64>) -> Self {
        let dims = position.len();
        Self {
            position,
            velocity: vec![0.0; dims],
            fitness: f64::INFINITY,
            mass: 0.0,
        }
    }
}

/// `G(t)` for iteration `t` in `1..=t_max`.
pub fn gravitational_constant(t: usize, params: &GsaParams) -> f64 {
    let t = t.max(1) as f64;
    match params.decay {
        GravityDecay::Exponential => params.g0 * (-params.alpha * t / params.t_max as f64).exp(),
        GravityDecay::Hyperbolic => params.g0 * t.powf(-params.alpha),
    }
}

/// Normalized masses from fitness values (minimization).
///
/// When every agent has the same fitness the masses are uniform.
pub fn compute_masses(fitnesses: &[f64], epsilon: f64) -> Vec<f64> {
    if fitnesses.is_empty() {
        return Vec::new();
    }
    let best = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = if best == worst {
        vec![1.0; fitnesses.len()]
    } else {
        fitnesses
            .iter()
            .map(|f| (f - worst) / (best - worst) + epsilon)
            .collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|m| m / total).collect()
}

/// Accelerations of every agent under the pull of all others.
///
/// With active, passive and inertial masses equal, agent `i`'s own mass
/// cancels: `a_i = G * sum_j rand_ij * M_j / (R_ij + eps) * (x_j - x_i)`.
/// `uniform` supplies the `rand_ij` weights in `i`-major order.
pub fn compute_accelerations(
    agents: &[Agent],
    g: f64,
    epsilon: f64,
    uniform: &mut impl FnMut() -> f64,
) -> Vec<Vec<f64>> {
    let n = agents.len();
    let dims = agents.first().map_or(0, |a| a.position.len());
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = agents[i]
                .position
                .iter()
                .zip(&agents[j].position)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut acc = vec![vec![0.0; dims]; n];
    for (i, acc_i) in acc.iter_mut().enumerate() {
        let xi = &agents[i].position;
        for (j, other) in agents.iter().enumerate() {
            if j == i {
                continue;
            }
            let w = uniform() * g * other.mass / (dist[i * n + j] + epsilon);
            for ((a, xj), xi) in acc_i.iter_mut().zip(&other.position).zip(xi) {
                *a += w * (xj - xi);
            }
        }
    }
    acc
}

/// Advances one agent: `v' = rand * v + a`, `x' = clamp(x + v')`.
///
/// A velocity component whose position hits a bound is reset to zero.
pub fn step_kinematics(
    agent: &mut Agent,
    accel: &[f64],
    bounds: &SearchBox,
    uniform: &mut impl FnMut() -> f64,
) {
    debug_assert_eq!(accel.len(), agent.position.len());
    let limits = bounds.lower.iter().zip(&bounds.upper);
    for (((x, v), a), (lo, hi)) in agent
        .position
        .iter_mut()
        .zip(agent.velocity.iter_mut())
        .zip(accel)
        .zip(limits)
    {
        *v = uniform() * *v + a;
        let moved = *x + *v;
        if moved <= *lo {
            *x = *lo;
            *v = 0.0;
        } else if moved >= *hi {
            *x = *hi;
            *v = 0.0;
        } else {
            *x = moved;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Best fitness seen so far, including this iteration.
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsaOutcome {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub trace: Vec<TraceRow>,
}

/// Minimizes `f` over `bounds` for `params.t_max` iterations.
pub fn optimize(
    f: &impl Fitness,
    params: &GsaParams,
    bounds: &SearchBox,
    seed: u64,
) -> Result<GsaOutcome, GsaError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move || rng.gen::<f64>();
    let dims = bounds.dims();

    let mut agents: Vec<Agent> = (0..params.n_agents)
        .map(|_| {
            let pos = (0..dims)
                .map(|d| bounds.lower[d] + uniform() * (bounds.upper[d] - bounds.lower[d]))
                .collect();
            Agent::at_rest(pos)
        })
        .collect();

    let mut best_position = agents[0].position.clone();
    let mut best_fitness = f64::INFINITY;
    let mut trace = Vec::with_capacity(params.t_max);

    for t in 1..=params.t_max {
        for agent in agents.iter_mut() {
            let value = f.evaluate(&agent.position);
            if !value.is_finite() {
                return Err(GsaError::NonFiniteFitness {
                    position: agent.position.clone(),
                    value,
                });
            }
            agent.fitness = value;
        }
        let (iter_best, best_idx) = agents
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(bf, bi), (i, a)| {
                if a.fitness < bf {
                    (a.fitness, i)
                } else {
                    (bf, bi)
                }
            });
        if iter_best < best_fitness {
            best_fitness = iter_best;
            best_position.clone_from(&agents[best_idx].position);
        }
        let mean = agents.iter().map(|a| a.fitness).sum::<f64>() / agents.len() as f64;
        trace.push(TraceRow {
            iteration: t,
            best_fitness,
            mean_fitness: mean,
        });

        let fitnesses: Vec<f64> = agents.iter().map(|a| a.fitness).collect();
        for (agent, m) in agents.iter_mut().zip(compute_masses(&fitnesses, params.epsilon)) {
            agent.mass = m;
        }
        let g = gravitational_constant(t, params);
        let accel = compute_accelerations(&agents, g, params.epsilon, &mut uniform);
        for (agent, a) in agents.iter_mut().zip(&accel) {
            step_kinematics(agent, a, bounds, &mut uniform);
        }
    }

    Ok(GsaOutcome {
        best_position,
        best_fitness,
        trace,
    })
}

/// Writes `iteration,best_fitness,mean_fitness` rows with a header.
pub fn write_trace_csv(trace: &[TraceRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
