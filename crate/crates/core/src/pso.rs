//! Particle swarm search over per-link transmit and per-node receive
//! beamwidths.
//!
//! Positions are kept feasible by [`repair`] before every evaluation, so the
//! fitness landscape is plain welfare with no penalty terms. The RNG is
//! ChaCha8 seeded from a `u64`, which gives the same stream on every
//! platform. Fitness evaluations within an iteration run in parallel; best
//! updates are a sequential fold in particle order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::{self, RadioParams};
use crate::scalar::Scalar;
use crate::topology::{NodeId, Topology};
use crate::welfare::WelfareEvaluator;

/// Decision vector: transmit width of each link (link order), then receive
/// width of each node (id order). Degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamwidthVector<S> {
    values: Vec<S>,
    link_count: usize,
}

impl<S: Scalar> BeamwidthVector<S> {
    pub fn uniform(topology: &Topology<S>, width: S) -> Self {
        Self {
            values: vec![width; topology.dimension()],
            link_count: topology.links.len(),
        }
    }

    pub fn from_values(topology: &Topology<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != topology.dimension() {
            return Err(Error::Dimension {
                expected: topology.dimension(),
                actual: values.len(),
            });
        }
        Ok(Self {
            values,
            link_count: topology.links.len(),
        })
    }

    /// Transmit width on link `link`.
    #[inline]
    pub fn tx(&self, link: usize) -> S {
        self.values[link]
    }

    /// Receive width of `node`.
    #[inline]
    pub fn rx(&self, node: NodeId) -> S {
        self.values[self.link_count + node.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    /// Whether every width is inside its bounds and every link clears the
    /// beamwidth-product bound.
    pub fn is_feasible(&self, topology: &Topology<S>, params: &RadioParams<S>) -> bool {
        if self.len() != topology.dimension() {
            return false;
        }
        let uppers = upper_bounds(topology, params);
        let in_box = self
            .values
            .iter()
            .zip(&uppers)
            .all(|(&v, &hi)| v >= params.min_beamwidth && v <= hi);
        in_box
            && topology.links.iter().enumerate().all(|(i, l)| {
                self.tx(i) * self.rx(l.rx)
                    >= radio::beamwidth_product_bound(
                        l.tx_sector_width,
                        l.rx_sector_width,
                        params.pilot_ratio,
                    )
            })
    }
}

/// Sector width capping each component.
fn upper_bounds<S: Scalar>(topology: &Topology<S>, params: &RadioParams<S>) -> Vec<S> {
    let mut out: Vec<S> = topology.links.iter().map(|l| l.tx_sector_width).collect();
    let mut rx = vec![params.sector_width; topology.nodes.len()];
    for l in &topology.links {
        rx[l.rx.0] = l.rx_sector_width;
    }
    out.extend(rx);
    out
}

/// Projects `position` onto the feasible set: clamp to `[min, sector]`, then
/// widen both ends of any link below the product bound by a common factor.
/// Feasible input comes back unchanged.
pub fn repair<S: Scalar>(
    position: &BeamwidthVector<S>,
    topology: &Topology<S>,
    params: &RadioParams<S>,
) -> BeamwidthVector<S> {
    let uppers = upper_bounds(topology, params);
    let mut out = position.clone();
    for (v, &hi) in out.values.iter_mut().zip(&uppers) {
        *v = if v.is_nan() {
            params.min_beamwidth
        } else {
            v.max(params.min_beamwidth).min(hi)
        };
    }
    let lc = out.link_count;
    for (i, l) in topology.links.iter().enumerate() {
        let bound = radio::beamwidth_product_bound(
            l.tx_sector_width,
            l.rx_sector_width,
            params.pilot_ratio,
        );
        let ri = lc + l.rx.0;
        let (mut t, mut r) = (out.values[i], out.values[ri]);
        if t * r >= bound {
            continue;
        }
        let k = (bound / (t * r)).sqrt();
        t = (t * k).min(l.tx_sector_width);
        r = (r * k).min(l.rx_sector_width);
        if t * r < bound {
            r = (bound / t).min(l.rx_sector_width);
        }
        if t * r < bound {
            t = (bound / r).min(l.tx_sector_width);
        }
        // absorb rounding in the products above
        let nudge = S::one() + S::epsilon() * S::lit(4.0);
        while t * r < bound {
            if r < l.rx_sector_width {
                r = (r * nudge).min(l.rx_sector_width);
            } else if t < l.tx_sector_width {
                t = (t * nudge).min(l.tx_sector_width);
            } else {
                break;
            }
        }
        out.values[i] = t;
        out.values[ri] = r;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig<S> {
    pub particles: usize,
    pub inertia: S,
    pub cognitive: S,
    pub social: S,
    pub iterations: usize,
    pub seed: u64,
    /// Every particle starts here, degrees.
    pub initial_beamwidth: S,
    /// Initial velocity components are uniform on `[0, this]`, degrees.
    pub initial_velocity_max: S,
    /// Draw the random attraction factors per dimension instead of once per
    /// particle per iteration.
    pub per_dimension_draws: bool,
}

impl<S: Scalar> Default for SwarmConfig<S> {
    fn default() -> Self {
        Self {
            particles: 30,
            inertia: S::lit(0.5),
            cognitive: S::lit(1.5),
            social: S::lit(1.5),
            iterations: 200,
            seed: 1,
            initial_beamwidth: S::lit(3.0),
            initial_velocity_max: S::lit(90.0),
            per_dimension_draws: false,
        }
    }
}

impl<S: Scalar> SwarmConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("swarm needs at least one particle".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("initial_velocity_max", self.initial_velocity_max),
        ] {
            if !(v >= S::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.initial_beamwidth > S::zero()) {
            return Err(Error::Config("initial_beamwidth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle<S> {
    pub position: BeamwidthVector<S>,
    pub velocity: Vec<S>,
    pub fitness: S,
    pub best_position: BeamwidthVector<S>,
    pub best_fitness: S,
}

/// One velocity update with explicit attraction factors.
pub fn velocity_update<S: Scalar>(
    velocity: &[S],
    position: &[S],
    personal_best: &[S],
    global_best: &[S],
    config: &SwarmConfig<S>,
    r_cognitive: S,
    r_social: S,
) -> Vec<S> {
    velocity
        .iter()
        .zip(position)
        .zip(personal_best.iter().zip(global_best))
        .map(|((&v, &x), (&pb, &gb))| {
            config.inertia * v
                + config.cognitive * r_cognitive * (pb - x)
                + config.social * r_social * (gb - x)
        })
        .collect()
}

/// New velocity for `particle`, drawing the attraction factors from `rng`.
pub fn update_velocity<S: Scalar, R: Rng>(
    particle: &Particle<S>,
    global_best: &BeamwidthVector<S>,
    config: &SwarmConfig<S>,
    rng: &mut R,
) -> Vec<S> {
    let x = particle.position.values();
    let pb = particle.best_position.values();
    let gb = global_best.values();
    if config.per_dimension_draws {
        (0..x.len())
            .map(|d| {
                let rc = S::lit(rng.gen::<f64>());
                let rs = S::lit(rng.gen::<f64>());
                velocity_update(
                    &particle.velocity[d..=d],
                    &x[d..=d],
                    &pb[d..=d],
                    &gb[d..=d],
                    config,
                    rc,
                    rs,
                )[0]
            })
            .collect()
    } else {
        let rc = S::lit(rng.gen::<f64>());
        let rs = S::lit(rng.gen::<f64>());
        velocity_update(&particle.velocity, x, pb, gb, config, rc, rs)
    }
}

/// Best-so-far and population statistics after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<S> {
    pub iteration: usize,
    /// Global best welfare so far.
    pub best: S,
    /// Best welfare among the current positions.
    pub current: S,
    /// Mean welfare of the current positions.
    pub mean: S,
}

#[derive(Debug, Clone)]
pub struct Swarm<S> {
    pub particles: Vec<Particle<S>>,
    pub global_best: BeamwidthVector<S>,
    pub global_best_fitness: S,
    pub config: SwarmConfig<S>,
    /// Evaluated positions that failed the feasibility check. Stays zero.
    pub infeasible_evaluations: usize,
    pub evaluations: usize,
    rng: ChaCha8Rng,
}

impl<S: Scalar> Swarm<S> {
    /// All particles start at the same repaired width; velocities are random.
    pub fn initialize(
        evaluator: &WelfareEvaluator<'_, S>,
        config: &SwarmConfig<S>,
    ) -> Result<Self> {
        config.validate()?;
        let topology = evaluator.topology();
        let params = evaluator.params();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let start = repair(
            &BeamwidthVector::uniform(topology, config.initial_beamwidth),
            topology,
            params,
        );
        let velocities: Vec<Vec<S>> = (0..config.particles)
            .map(|_| {
                (0..start.len())
                    .map(|_| S::lit(rng.gen::<f64>()) * config.initial_velocity_max)
                    .collect()
            })
            .collect();
        let mut swarm = Swarm {
            particles: Vec::with_capacity(config.particles),
            global_best: start.clone(),
            global_best_fitness: S::neg_infinity(),
            config: config.clone(),
            infeasible_evaluations: 0,
            evaluations: 0,
            rng,
        };
        let positions = vec![start; config.particles];
        let fitness = swarm.evaluate_all(evaluator, &positions)?;
        for ((position, velocity), f) in positions.into_iter().zip(velocities).zip(fitness) {
            swarm.particles.push(Particle {
                best_position: position.clone(),
                best_fitness: f,
                position,
                velocity,
                fitness: f,
            });
        }
        swarm.update_global();
        Ok(swarm)
    }

    fn evaluate_all(
        &mut self,
        evaluator: &WelfareEvaluator<'_, S>,
        positions: &[BeamwidthVector<S>],
    ) -> Result<Vec<S>> {
        let topology = evaluator.topology();
        let params = evaluator.params();
        let results: Vec<(bool, Result<S>)> = positions
            .par_iter()
            .map(|p| (p.is_feasible(topology, params), evaluator.gamma(p)))
            .collect();
        self.evaluations += positions.len();
        let mut out = Vec::with_capacity(results.len());
        for (feasible, r) in results {
            if !feasible {
                self.infeasible_evaluations += 1;
            }
            out.push(r?);
        }
        Ok(out)
    }

    fn update_global(&mut self) {
        for p in &self.particles {
            if p.best_fitness > self.global_best_fitness {
                self.global_best_fitness = p.best_fitness;
                self.global_best = p.best_position.clone();
            }
        }
    }

    /// Moves every particle once, re-evaluates and updates the bests.
    pub fn step(&mut self, evaluator: &WelfareEvaluator<'_, S>) -> Result<()> {
        let topology = evaluator.topology();
        let params = evaluator.params();
        let mut moved = Vec::with_capacity(self.particles.len());
        for i in 0..self.particles.len() {
            let v = update_velocity(
                &self.particles[i],
                &self.global_best,
                &self.config,
                &mut self.rng,
            );
            let p = &mut self.particles[i];
            for (x, &dv) in p.position.values.iter_mut().zip(&v) {
                *x = *x + dv;
            }
            p.velocity = v;
            p.position = repair(&p.position, topology, params);
            moved.push(p.position.clone());
        }
        let fitness = self.evaluate_all(evaluator, &moved)?;
        for (p, f) in self.particles.iter_mut().zip(fitness) {
            p.fitness = f;
            if f > p.best_fitness {
                p.best_fitness = f;
                p.best_position = p.position.clone();
            }
        }
        self.update_global();
        Ok(())
    }

    pub fn trace_point(&self, iteration: usize) -> TracePoint<S> {
        let current = self
            .particles
            .iter()
            .map(|p| p.fitness)
            .fold(S::neg_infinity(), S::max);
        let mean =
            self.particles.iter().map(|p| p.fitness).sum::<S>() / S::count(self.particles.len());
        TracePoint {
            iteration,
            best: self.global_best_fitness,
            current,
            mean,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimization<S> {
    pub best: BeamwidthVector<S>,
    pub best_fitness: S,
    /// Entry 0 is the initial swarm, then one entry per iteration.
    pub trace: Vec<TracePoint<S>>,
    pub infeasible_evaluations: usize,
    pub evaluations: usize,
}

/// Initializes a swarm and runs `config.iterations` steps.
pub fn optimize<S: Scalar>(
    evaluator: &WelfareEvaluator<'_, S>,
    config: &SwarmConfig<S>,
) -> Result<Optimization<S>> {
    let mut swarm = Swarm::initialize(evaluator, config)?;
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(swarm.trace_point(0));
    for it in 1..=config.iterations {
        swarm.step(evaluator)?;
        trace.push(swarm.trace_point(it));
    }
    Ok(Optimization {
        best: swarm.global_best,
        best_fitness: swarm.global_best_fitness,
        trace,
        infeasible_evaluations: swarm.infeasible_evaluations,
        evaluations: swarm.evaluations,
    })
}
