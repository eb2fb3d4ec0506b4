//! Finite-population best-response dynamics.
//!
//! Agent `i` of `n` has inconvenience `α((i+½)/n)`. Each step one agent is
//! drawn uniformly and switches only if the other action is strictly cheaper
//! at the load its own switch would produce. After every `n` consecutive
//! steps without a switch a full scan decides whether everyone is
//! best-responding.
//!
//! All costs are exact. They are precomputed per car count as two thresholds
//! (a driver leaves when `α < leave[k]`, a rider joins when `α > join[k]`) and
//! rank-compressed together with the agents' α values so each step is an
//! integer comparison.

use std::io::{self, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameInstance, ModelKind};
use crate::rational::{floor_usize, one, q, to_f64, zero, Signs, Q};

pub const DEFAULT_AGENTS: usize = 1000;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentPopulation {
    /// Non-increasing in the agent index.
    pub alphas: Vec<Q>,
    /// `true` for the public good (car), `false` for the alternative.
    pub choices: Vec<bool>,
    pub seed: u64,
}

impl AgentPopulation {
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn cars(&self) -> usize {
        self.choices.iter().filter(|c| **c).count()
    }

    pub fn share(&self) -> Q {
        q(self.cars() as i64, self.n() as i64)
    }
}

fn agent_alphas(g: &GameInstance, n: usize) -> Vec<Q> {
    let two_n = 2 * n as i64;
    (0..n).map(|i| g.alpha().at(&q(2 * i as i64 + 1, two_n))).collect()
}

fn initial_choices(n: usize, x0: &Q, seed: u64) -> Result<Vec<bool>> {
    if *x0 < zero() || *x0 > one() {
        return Err(Error::Domain(format!("initial share {x0} is outside [0, 1]")));
    }
    let cars = floor_usize(&(x0 * Q::from(n as u64) + q(1, 2))).unwrap_or(n).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices = vec![false; n];
    for i in sample(&mut rng, n, cars) {
        choices[i] = true;
    }
    Ok(choices)
}

/// `round(x0·n)` drivers chosen uniformly by a generator seeded with `seed`.
pub fn init_population(g: &GameInstance, n: usize, x0: &Q, seed: u64) -> Result<AgentPopulation> {
    if n == 0 {
        return Err(Error::Domain("population needs at least one agent".into()));
    }
    let choices = initial_choices(n, x0, seed)?;
    Ok(AgentPopulation { alphas: agent_alphas(g, n), choices, seed })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub x: f64,
    pub sc_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsTrace {
    /// Row 0 is the initial state; one row per step after that.
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub final_x: Q,
    pub final_is_equilibrium: bool,
    pub steps_taken: u64,
}

impl DynamicsTrace {
    pub const CSV_HEADER: &'static str = "step,x,sc_ratio";

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.step, r.x, r.sc_ratio)?;
        }
        Ok(())
    }
}

/// Per-`(game, n)` data shared by every run: thresholds, ranks and SC ratios.
pub struct DynamicsModel {
    n: usize,
    alphas: Vec<Q>,
    alpha_rank: Vec<u32>,
    leave_rank: Vec<u32>,
    join_rank: Vec<u32>,
    sc_ratio: Vec<f64>,
}

impl DynamicsModel {
    pub fn new(g: &GameInstance, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("population needs at least one agent".into()));
        }
        let tech = g.tech();
        let shared_model = tech.kind() == ModelKind::SharedExternality;
        let load = |k: usize| tech.load(&q(k as i64, n as i64));
        // cost of driving and the α-free part of riding, with k drivers
        let car_cost: Vec<Q> = (0..=n)
            .map(|k| {
                let y = load(k);
                g.externality().at(&y) + g.tax().at(&y)
            })
            .collect();
        let ride_base: Vec<Q> = (0..=n)
            .map(|k| {
                if shared_model {
                    let y = load(k);
                    g.externality().at(&y) + tech.tau() * g.tax().at(&y)
                } else {
                    zero()
                }
            })
            .collect();
        // leave[k]: a driver among k leaves when α < leave[k]; join[k]: a rider joins when α > join[k]
        let leave: Vec<Q> = (0..=n).map(|k| if k == 0 { zero() } else { &car_cost[k] - &ride_base[k - 1] }).collect();
        let join: Vec<Q> = (0..=n).map(|k| if k == n { zero() } else { &car_cost[k + 1] - &ride_base[k] }).collect();
        let alphas = agent_alphas(g, n);

        let mut all: Vec<&Q> = alphas.iter().chain(leave.iter()).chain(join.iter()).collect();
        all.sort();
        all.dedup();
        let rank = |v: &Q| all.binary_search(&v).expect("value was inserted") as u32;
        let alpha_rank = alphas.iter().map(rank).collect();
        let leave_rank = leave.iter().map(rank).collect();
        let join_rank = join.iter().map(rank).collect();

        let (_, sc_star) = g.social_optimum();
        let sc_ratio = (0..=n)
            .map(|k| {
                let sc = g.sc(&q(k as i64, n as i64));
                if sc_star.is_zero() {
                    if sc.is_zero() {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    to_f64(&(sc / &sc_star))
                }
            })
            .collect();
        Ok(DynamicsModel { n, alphas, alpha_rank, leave_rank, join_rank, sc_ratio })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn population(&self, x0: &Q, seed: u64) -> Result<AgentPopulation> {
        let choices = initial_choices(self.n, x0, seed)?;
        Ok(AgentPopulation { alphas: self.alphas.clone(), choices, seed })
    }

    pub fn simulator(&self, pop: AgentPopulation) -> Result<Simulator<'_>> {
        if pop.n() != self.n || pop.alphas != self.alphas {
            return Err(Error::Precondition("population does not belong to this model".into()));
        }
        let cars = pop.cars();
        Ok(Simulator { model: self, choices: pop.choices, cars, rng: ChaCha8Rng::seed_from_u64(pop.seed) })
    }

    pub fn run(&self, x0: &Q, seed: u64, max_steps: u64) -> Result<DynamicsTrace> {
        if max_steps == 0 {
            return Err(Error::Domain("max_steps must be at least 1".into()));
        }
        Ok(self.simulator(self.population(x0, seed)?)?.run(max_steps))
    }
}

/// A population in motion.
pub struct Simulator<'a> {
    model: &'a DynamicsModel,
    choices: Vec<bool>,
    cars: usize,
    rng: ChaCha8Rng,
}

impl Simulator<'_> {
    pub fn cars(&self) -> usize {
        self.cars
    }

    fn wants_switch(&self, i: usize) -> bool {
        let m = self.model;
        if self.choices[i] {
            m.alpha_rank[i] < m.leave_rank[self.cars]
        } else {
            m.alpha_rank[i] > m.join_rank[self.cars]
        }
    }

    /// Draws one agent and lets it best-respond; returns whether it switched.
    pub fn step(&mut self) -> bool {
        let i = self.rng.gen_range(0..self.model.n);
        if !self.wants_switch(i) {
            return false;
        }
        if self.choices[i] {
            self.cars -= 1;
        } else {
            self.cars += 1;
        }
        self.choices[i] = !self.choices[i];
        true
    }

    /// Full scan: no agent strictly gains by switching.
    pub fn is_stable(&self) -> bool {
        (0..self.model.n).all(|i| !self.wants_switch(i))
    }

    fn row(&self, step: u64) -> TraceRow {
        let n = self.model.n;
        TraceRow { step, x: self.cars as f64 / n as f64, sc_ratio: self.model.sc_ratio[self.cars] }
    }

    pub fn run(mut self, max_steps: u64) -> DynamicsTrace {
        let n = self.model.n;
        let mut rows = vec![self.row(0)];
        let mut quiet = 0usize;
        let mut converged = false;
        let mut step = 0u64;
        while step < max_steps {
            step += 1;
            if self.step() {
                quiet = 0;
            } else {
                quiet += 1;
            }
            rows.push(self.row(step));
            if quiet >= n {
                if self.is_stable() {
                    converged = true;
                    break;
                }
                quiet = 0;
            }
        }
        DynamicsTrace {
            rows,
            converged,
            final_x: q(self.cars as i64, n as i64),
            final_is_equilibrium: self.is_stable(),
            steps_taken: step,
        }
    }
}

pub fn run_dynamics(g: &GameInstance, n: usize, x0: &Q, seed: u64, max_steps: u64) -> Result<DynamicsTrace> {
    DynamicsModel::new(g, n)?.run(x0, seed, max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Technology;
    use crate::piecewise::{MonotoneFn, Piece, PiecewiseFn};
    use crate::rational::{qi, zero};
    use crate::taxes::pigouvian_tax;
    use proptest::prelude::*;

    fn bistable() -> GameInstance {
        let lp =
            PiecewiseFn::from_pieces(vec![Piece::constant(q(3, 25), one()).closed(), Piece::constant(one(), q(1, 2))])
                .unwrap();
        let alpha = MonotoneFn::non_increasing(
            PiecewiseFn::from_pieces(vec![
                Piece::constant(q(3, 50), q(6, 5)).closed(),
                Piece::constant(one(), q(4, 5)),
            ])
            .unwrap(),
        )
        .unwrap();
        let tax = pigouvian_tax(&lp, &Technology::bus());
        GameInstance::new(lp, zero(), alpha, tax, Technology::bus()).unwrap()
    }

    #[test]
    fn population_setup() {
        let g = bistable();
        let p = init_population(&g, 1000, &q(5, 100), 7).unwrap();
        assert_eq!(p.cars(), 50);
        assert!(p.alphas.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(p.alphas.iter().filter(|a| **a == q(6, 5)).count(), 60);
        assert_eq!(init_population(&g, 1000, &zero(), 7).unwrap().cars(), 0);
        assert_eq!(p, init_population(&g, 1000, &q(5, 100), 7).unwrap());
        assert_ne!(p.choices, init_population(&g, 1000, &q(5, 100), 8).unwrap().choices);
        assert!(init_population(&g, 0, &zero(), 1).is_err());
        assert!(init_population(&g, 10, &qi(2), 1).is_err());
    }

    #[test]
    fn drivers_leave_between_the_equilibria() {
        let g = bistable();
        let n = 1000;
        // 80 drivers, all from the α = 0.8 group: each one is better off riding
        let mut pop = init_population(&g, n, &zero(), 1).unwrap();
        for c in pop.choices.iter_mut().skip(100).take(80) {
            *c = true;
        }
        let model = DynamicsModel::new(&g, n).unwrap();
        let sim = model.simulator(pop).unwrap();
        assert!((100..180).all(|i| sim.wants_switch(i)));
        // 200 drivers: riders with α = 0.8 now pay the low tax and join
        let mut pop = init_population(&g, n, &zero(), 1).unwrap();
        for c in pop.choices.iter_mut().take(200) {
            *c = true;
        }
        let sim = model.simulator(pop).unwrap();
        assert!(sim.wants_switch(500));
        assert!(!sim.wants_switch(10));
    }

    #[test]
    fn basins_of_attraction() {
        let g = bistable();
        for seed in 0..5 {
            for (x0, target) in
                [(q(5, 100), q(6, 100)), (q(115, 1000), q(6, 100)), (q(1, 2), one()), (q(125, 1000), one())]
            {
                let t = run_dynamics(&g, 1000, &x0, seed, DEFAULT_MAX_STEPS).unwrap();
                assert!(t.converged && t.final_is_equilibrium);
                assert_eq!(t.final_x, target, "x0 = {x0}, seed = {seed}");
                assert_eq!(t.rows.len() as u64, t.steps_taken + 1);
                assert!(t.rows.iter().all(|r| r.sc_ratio >= 1.0));
            }
        }
    }

    #[test]
    fn knife_edge_start_never_stays() {
        let g = bistable();
        for seed in 0..10 {
            let t = run_dynamics(&g, 1000, &q(12, 100), seed, DEFAULT_MAX_STEPS).unwrap();
            assert!(t.converged);
            assert_ne!(t.final_x, q(12, 100));
        }
    }

    #[test]
    fn csv_shape() {
        let t = run_dynamics(&bistable(), 50, &q(1, 2), 3, 5).unwrap();
        assert!(!t.converged);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,x,sc_ratio"));
        assert_eq!(lines.count(), 6);
        assert!(run_dynamics(&bistable(), 50, &q(1, 2), 3, 0).is_err());
    }

    #[test]
    fn train_dynamics_settle() {
        // α ≡ 1 against T = x + 1/2: indifference at 1/2
        let alpha = MonotoneFn::non_increasing(PiecewiseFn::constant(one())).unwrap();
        let g = GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            alpha,
            PiecewiseFn::constant(q(1, 2)),
            Technology::train(),
        )
        .unwrap();
        let t = run_dynamics(&g, 200, &zero(), 11, DEFAULT_MAX_STEPS).unwrap();
        assert!(t.converged);
        assert!(t.final_x == q(99, 200) || t.final_x == q(1, 2), "{}", t.final_x);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn deterministic_and_stable(seed in 0u64..1000, x0 in 0i64..=100) {
            let g = bistable();
            let x0 = q(x0, 100);
            let a = run_dynamics(&g, 300, &x0, seed, 200_000).unwrap();
            let b = run_dynamics(&g, 300, &x0, seed, 200_000).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.converged);
            prop_assert!(a.final_is_equilibrium);
            let eq = g.equilibrium_set();
            let near = eq.points.iter().any(|p| {
                let d = &a.final_x - p;
                d.clone() * d <= q(1, 300 * 300)
            });
            prop_assert!(near, "final {} not near {:?}", a.final_x, eq.points);
        }
    }
}
