//! The game model: ride-sharing technologies, personal and social cost,
//! exact equilibrium enumeration and the social optimum.
//!
//! Two cost structures are covered. In the *shared-externality* model every
//! agent suffers the road externality `l(κ(x))`, where `κ(x) = (1−κ)x + κ` is
//! the road load when a fraction `x` drives (the bus model is `κ = τ = 0`).
//! In the *train* model only drivers suffer it. Both reduce the equilibrium
//! question to a sandwich `α(x⁻) ≥ T(x) ≥ α(x⁺)` against an effective tax `T`.

use crate::error::{Error, Result};
use crate::piecewise::{MonotoneFn, PiecewiseFn};
use crate::rational::{format_rational, one, q, zero, Signs, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Everyone suffers the externality; alternative users add load `κ`.
    SharedExternality,
    /// Only public-good users suffer the externality; the alternative adds no load.
    Train,
}

/// Ride-sharing technology `{κ, τ}` plus the cost structure it lives in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Technology {
    kind: ModelKind,
    kappa: Q,
    tau: Q,
}

impl Technology {
    pub fn shared(kappa: Q, tau: Q) -> Result<Self> {
        let unit = |v: &Q| !v.is_negative() && *v < one();
        if !unit(&kappa) || !unit(&tau) {
            return Err(Error::InvalidGame(format!(
                "technology needs 0 ≤ κ < 1 and 0 ≤ τ < 1, got κ = {}, τ = {}",
                format_rational(&kappa),
                format_rational(&tau)
            )));
        }
        Ok(Technology { kind: ModelKind::SharedExternality, kappa, tau })
    }

    pub fn bus() -> Self {
        Technology { kind: ModelKind::SharedExternality, kappa: zero(), tau: zero() }
    }

    /// Non-tolled carpools of capacity `k`: `κ = 1/k`, `τ = 0`.
    pub fn carpool(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidGame("carpool capacity must be at least 2".into()));
        }
        Technology::shared(q(1, k as i64), zero())
    }

    /// Tolled carpools of capacity `k` splitting the toll: `κ = τ = 1/k`.
    pub fn tolled_carpool(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidGame("carpool capacity must be at least 2".into()));
        }
        Technology::shared(q(1, k as i64), q(1, k as i64))
    }

    pub fn train() -> Self {
        Technology { kind: ModelKind::Train, kappa: zero(), tau: zero() }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kappa(&self) -> &Q {
        &self.kappa
    }

    pub fn tau(&self) -> &Q {
        &self.tau
    }

    /// Road load `κ(x)`; the identity for the train model.
    pub fn load(&self, x: &Q) -> Q {
        match self.kind {
            ModelKind::SharedExternality => (one() - &self.kappa) * x + &self.kappa,
            ModelKind::Train => x.clone(),
        }
    }

    /// `(1−κ)/(1−τ)`, the factor relating a load-indexed toll to the
    /// marginal externality a driver imposes.
    pub fn toll_factor(&self) -> Q {
        (one() - &self.kappa) / (one() - &self.tau)
    }

    /// Lower end of the reachable load range `[κ, 1]`.
    pub fn min_load(&self) -> &Q {
        &self.kappa
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    /// Use the public good (drive a private car).
    Car,
    /// Use the alternative (shared ride, bus or train).
    Shared,
}

/// A closed, open or half-open stretch of equilibria.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqInterval {
    pub lo: Q,
    pub hi: Q,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl EqInterval {
    pub fn contains(&self, x: &Q) -> bool {
        (x > &self.lo || (self.lo_closed && *x == self.lo)) && (x < &self.hi || (self.hi_closed && *x == self.hi))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquilibriumSet {
    /// Isolated equilibria.
    pub points: Vec<Q>,
    /// Equilibrium sets of positive measure.
    pub intervals: Vec<EqInterval>,
    /// Flow-reversal points that fail the sandwich condition: best-reply flow
    /// points away from them on both sides.
    pub knife_edges: Vec<Q>,
}

impl EquilibriumSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.points.contains(x) || self.intervals.iter().any(|i| i.contains(x))
    }
}

/// `(l′, l(0), α, t, ν)`: everything the analyses consume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameInstance {
    l_prime: PiecewiseFn,
    l0: Q,
    alpha: MonotoneFn,
    tax: PiecewiseFn,
    tech: Technology,
    l: PiecewiseFn,
    effective_tax: PiecewiseFn,
    sc_slope: PiecewiseFn,
}

impl GameInstance {
    pub fn new(l_prime: PiecewiseFn, l0: Q, alpha: MonotoneFn, tax: PiecewiseFn, tech: Technology) -> Result<Self> {
        if !tax.is_nonnegative() {
            return Err(Error::InvalidGame("tax must be non-negative (use new_with_subsidy for signed taxes)".into()));
        }
        GameInstance::new_with_subsidy(l_prime, l0, alpha, tax, tech)
    }

    /// Like [`GameInstance::new`] but accepts a tax that may be negative somewhere.
    pub fn new_with_subsidy(
        l_prime: PiecewiseFn,
        l0: Q,
        alpha: MonotoneFn,
        tax: PiecewiseFn,
        tech: Technology,
    ) -> Result<Self> {
        if !l_prime.is_piecewise_constant() {
            return Err(Error::InvalidGame("l′ must be piecewise constant".into()));
        }
        if !l_prime.is_nonnegative() {
            return Err(Error::InvalidGame("l′ must be non-negative (l non-decreasing)".into()));
        }
        if l0.is_negative() {
            return Err(Error::InvalidGame("l(0) must be non-negative".into()));
        }
        if !alpha.inner().is_nonnegative() {
            return Err(Error::InvalidGame("α must be non-negative".into()));
        }
        if alpha.direction() != crate::piecewise::Direction::NonIncreasing {
            return Err(Error::InvalidGame("α must be non-increasing".into()));
        }
        let l = l_prime.antiderivative(l0.clone())?;
        let (effective_tax, sc_slope) = match tech.kind {
            ModelKind::SharedExternality => {
                let slope = one() - &tech.kappa;
                let t = tax.compose_affine(&slope, &tech.kappa)?.scale(&(one() - &tech.tau));
                let marginal = l_prime.compose_affine(&slope, &tech.kappa)?.scale(&slope);
                (t, marginal.sub(alpha.inner()))
            }
            ModelKind::Train => {
                let t = l.add(&tax);
                let marginal = l.add(&l_prime.mul_identity()?);
                (t, marginal.sub(alpha.inner()))
            }
        };
        Ok(GameInstance { l_prime, l0, alpha, tax, tech, l, effective_tax, sc_slope })
    }

    /// The same game under a different tax.
    pub fn with_tax(&self, tax: PiecewiseFn) -> Result<Self> {
        GameInstance::new(self.l_prime.clone(), self.l0.clone(), self.alpha.clone(), tax, self.tech.clone())
    }

    pub fn l_prime(&self) -> &PiecewiseFn {
        &self.l_prime
    }

    pub fn l0(&self) -> &Q {
        &self.l0
    }

    pub fn alpha(&self) -> &MonotoneFn {
        &self.alpha
    }

    pub fn tax(&self) -> &PiecewiseFn {
        &self.tax
    }

    pub fn tech(&self) -> &Technology {
        &self.tech
    }

    /// The externality function `l`, reconstructed from `l′` and `l(0)`.
    pub fn externality(&self) -> &PiecewiseFn {
        &self.l
    }

    /// `T(x)`: `(1−τ)·t(κ(x))` in the shared model, `l(x) + t(x)` for trains.
    pub fn effective_tax(&self) -> &PiecewiseFn {
        &self.effective_tax
    }

    /// Piecewise-affine derivative of the social cost in `x`.
    pub fn social_cost_slope(&self) -> &PiecewiseFn {
        &self.sc_slope
    }

    pub fn load(&self, x: &Q) -> Q {
        self.tech.load(x)
    }

    pub fn personal_cost(&self, i: &Q, x: &Q, action: Action) -> Result<Q> {
        self.alpha.inner().eval(i)?;
        self.alpha.inner().eval(x)?;
        let y = self.load(x);
        let (l, t) = (self.l.at(&y), self.tax.at(&y));
        Ok(match (self.tech.kind, action) {
            (ModelKind::SharedExternality, Action::Car) => l + t,
            (ModelKind::SharedExternality, Action::Shared) => self.alpha.at(i) + l + &self.tech.tau * t,
            (ModelKind::Train, Action::Car) => l + t,
            (ModelKind::Train, Action::Shared) => self.alpha.at(i),
        })
    }

    pub fn social_cost(&self, x: &Q) -> Result<Q> {
        self.alpha.inner().eval(x)?;
        Ok(self.sc(x))
    }

    /// Social cost at `x ∈ [0, 1]` (unchecked).
    pub fn sc(&self, x: &Q) -> Q {
        let inconvenience = self.alpha.inner().integrate_unchecked(x, &one());
        match self.tech.kind {
            ModelKind::SharedExternality => self.l.at(&self.load(x)) + inconvenience,
            ModelKind::Train => x * self.l.at(x) + inconvenience,
        }
    }

    /// The sandwich `α(x⁻) ≥ T(x) ≥ α(x⁺)` at `x ∈ [0, 1]`.
    pub fn is_equilibrium(&self, x: &Q) -> bool {
        let (left, right) = self.alpha.limits_unchecked(x);
        let t = self.effective_tax.at(x);
        left >= t && right <= t
    }

    /// Every analytic equilibrium, grouped into isolated points and intervals,
    /// with failing flow-reversal points reported separately.
    pub fn equilibrium_set(&self) -> EquilibriumSet {
        enum Atom {
            Point(Q),
            Open(Q, Q),
        }
        let gap = self.alpha.inner().sub(&self.effective_tax);
        let knots = gap.knots();
        let m = gap.segments().len();
        let mut atoms = Vec::new();
        let mut knife_edges = Vec::new();
        for j in 0..=m {
            let k = &knots[j];
            if self.is_equilibrium(k) {
                atoms.push(Atom::Point(k.clone()));
            } else if j > 0 && j < m {
                let (below, above) = gap.limits_unchecked(k);
                if below.is_some_and(|v| v.is_negative()) && above.is_some_and(|v| v.is_positive()) {
                    knife_edges.push(k.clone());
                }
            }
            if j < m {
                let seg = &gap.segments()[j];
                if seg.is_zero() {
                    atoms.push(Atom::Open(k.clone(), knots[j + 1].clone()));
                } else if let Some(r) = seg.root().filter(|r| r > k && *r < knots[j + 1]) {
                    atoms.push(Atom::Point(r));
                }
            }
        }

        let mut groups: Vec<(EqInterval, bool)> = Vec::new();
        for atom in atoms {
            match atom {
                Atom::Point(p) => match groups.last_mut() {
                    Some((g, _)) if g.hi == p && !g.hi_closed => g.hi_closed = true,
                    _ => groups.push((EqInterval { lo: p.clone(), hi: p, lo_closed: true, hi_closed: true }, false)),
                },
                Atom::Open(a, b) => match groups.last_mut() {
                    Some((g, wide)) if g.hi == a && g.hi_closed => {
                        g.hi = b;
                        g.hi_closed = false;
                        *wide = true;
                    }
                    _ => groups.push((EqInterval { lo: a, hi: b, lo_closed: false, hi_closed: false }, true)),
                },
            }
        }
        let mut set = EquilibriumSet { knife_edges, ..Default::default() };
        for (g, wide) in groups {
            if wide {
                set.intervals.push(g);
            } else {
                set.points.push(g.lo);
            }
        }
        set
    }

    /// Points of `[a, b]` where the piecewise-quadratic social cost can attain
    /// an extremum: the ends, slope breakpoints and slope zeros.
    pub fn sc_extremum_candidates(&self, a: &Q, b: &Q) -> Vec<Q> {
        let mut out = vec![a.clone()];
        out.extend(self.sc_slope.knots().iter().filter(|k| *k > a && *k < b).cloned());
        out.extend(self.sc_slope.interior_roots().into_iter().filter(|r| r > a && r < b));
        out.push(b.clone());
        out.sort();
        out.dedup();
        out
    }

    /// Exact global minimiser of the social cost, ties broken toward smaller `x`.
    pub fn social_optimum(&self) -> (Q, Q) {
        self.sc_extremum_candidates(&zero(), &one())
            .into_iter()
            .map(|x| {
                let v = self.sc(&x);
                (x, v)
            })
            .fold(None, |best: Option<(Q, Q)>, (x, v)| match best {
                Some((bx, bv)) if bv <= v => Some((bx, bv)),
                _ => Some((x, v)),
            })
            .expect("candidate list is never empty")
    }

    /// Largest social cost over `[a, b]`, with its smallest maximiser.
    pub fn sc_max_on(&self, a: &Q, b: &Q) -> (Q, Q) {
        self.sc_extremum_candidates(a, b)
            .into_iter()
            .map(|x| {
                let v = self.sc(&x);
                (x, v)
            })
            .fold(None, |best: Option<(Q, Q)>, (x, v)| match best {
                Some((bx, bv)) if bv >= v => Some((bx, bv)),
                _ => Some((x, v)),
            })
            .expect("candidate list is never empty")
    }

    /// Largest `|SC′|` over `[0, 1]`, used to size grid-oracle tolerances.
    pub fn sc_slope_bound(&self) -> Q {
        let (lo, hi) = self.sc_slope.range_bounds();
        lo.abs().max(hi.abs())
    }

    /// True when the optimum costs nothing.
    pub fn optimum_is_free(&self) -> bool {
        self.social_optimum().1.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::Piece;
    use crate::rational::{qi, to_f64};
    use crate::taxes::pigouvian_tax;

    fn steps(pieces: &[(Q, Q, bool)]) -> PiecewiseFn {
        PiecewiseFn::from_pieces(
            pieces
                .iter()
                .map(|(e, v, c)| {
                    let p = Piece::constant(e.clone(), v.clone());
                    if *c {
                        p.closed()
                    } else {
                        p
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn bistable() -> GameInstance {
        let lp = steps(&[(q(3, 25), one(), true), (one(), q(1, 2), false)]);
        let alpha = MonotoneFn::non_increasing(steps(&[(q(3, 50), q(6, 5), true), (one(), q(4, 5), false)])).unwrap();
        let tax = pigouvian_tax(&lp, &Technology::bus());
        GameInstance::new(lp, zero(), alpha, tax, Technology::bus()).unwrap()
    }

    fn gap_game(h: Q, eps: Q) -> GameInstance {
        let lp = steps(&[(eps.clone(), one(), true), (one(), one() / &h, false)]);
        let alpha = MonotoneFn::non_increasing(steps(&[
            (&eps / qi(2), one() + &eps, true),
            (one() - &eps, one() - &eps, true),
            (one(), zero(), false),
        ]))
        .unwrap();
        let tax = pigouvian_tax(&lp, &Technology::bus());
        GameInstance::new(lp, zero(), alpha, tax, Technology::bus()).unwrap()
    }

    #[test]
    fn loads() {
        assert_eq!(Technology::bus().load(&q(3, 10)), q(3, 10));
        assert_eq!(Technology::carpool(4).unwrap().load(&zero()), q(1, 4));
        assert_eq!(Technology::shared(q(1, 2), zero()).unwrap().load(&one()), one());
        assert_eq!(Technology::train().load(&q(1, 7)), q(1, 7));
        assert!(Technology::shared(one(), zero()).is_err());
        assert!(Technology::shared(zero(), qi(-1)).is_err());
        assert!(Technology::carpool(1).is_err());
    }

    #[test]
    fn personal_costs() {
        let g = bistable();
        let x = q(1, 2);
        let l = g.externality().at(&x);
        assert_eq!(g.personal_cost(&q(1, 10), &x, Action::Car).unwrap(), &l + q(1, 2));
        assert_eq!(g.personal_cost(&q(1, 10), &x, Action::Shared).unwrap(), q(4, 5) + &l);

        // tolled carpool K=4, t ≡ 1, x = 0: passenger pays a quarter of the toll
        let tech = Technology::tolled_carpool(4).unwrap();
        let lp = PiecewiseFn::constant(one());
        let alpha = MonotoneFn::non_increasing(PiecewiseFn::constant(qi(2))).unwrap();
        let g = GameInstance::new(lp, zero(), alpha, PiecewiseFn::constant(one()), tech).unwrap();
        let shared = g.personal_cost(&q(1, 2), &zero(), Action::Shared).unwrap();
        assert_eq!(shared, qi(2) + q(1, 4) + q(1, 4));
        assert_eq!(g.personal_cost(&q(1, 2), &zero(), Action::Car).unwrap(), q(1, 4) + one());

        // τ = 0: the shared cost ignores the tax
        let tech = Technology::carpool(2).unwrap();
        let mk = |t: Q| {
            GameInstance::new(
                PiecewiseFn::constant(one()),
                zero(),
                MonotoneFn::non_increasing(PiecewiseFn::constant(one())).unwrap(),
                PiecewiseFn::constant(t),
                tech.clone(),
            )
            .unwrap()
        };
        assert_eq!(
            mk(qi(3)).personal_cost(&zero(), &q(1, 3), Action::Shared).unwrap(),
            mk(qi(7)).personal_cost(&zero(), &q(1, 3), Action::Shared).unwrap()
        );

        let train = GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            MonotoneFn::non_increasing(PiecewiseFn::constant(qi(5))).unwrap(),
            PiecewiseFn::constant(one()),
            Technology::train(),
        )
        .unwrap();
        assert_eq!(train.personal_cost(&zero(), &q(1, 2), Action::Shared).unwrap(), qi(5));
        assert_eq!(train.personal_cost(&zero(), &q(1, 2), Action::Car).unwrap(), q(3, 2));
    }

    #[test]
    fn social_costs() {
        assert_eq!(bistable().social_cost(&one()).unwrap(), q(56, 100));
        let lp = steps(&[(q(1, 2), qi(2), false), (one(), qi(3), false)]);
        let g = GameInstance::new(
            lp,
            zero(),
            MonotoneFn::non_increasing(PiecewiseFn::constant(zero())).unwrap(),
            PiecewiseFn::constant(zero()),
            Technology::carpool(4).unwrap(),
        )
        .unwrap();
        assert_eq!(g.social_cost(&zero()).unwrap(), g.externality().at(&q(1, 4)));
        assert!(g.social_cost(&qi(2)).is_err());
    }

    #[test]
    fn gap_equilibria_and_knife_edge() {
        let eps = q(1, 1000);
        let g = gap_game(qi(10), eps.clone());
        let eq = g.equilibrium_set();
        assert_eq!(eq.points, vec![&eps / qi(2), one() - &eps]);
        assert!(eq.intervals.is_empty());
        assert_eq!(eq.knife_edges, vec![eps]);
    }

    #[test]
    fn bistable_equilibria() {
        let eq = bistable().equilibrium_set();
        assert_eq!(eq.points, vec![q(3, 50), one()]);
        assert_eq!(eq.knife_edges, vec![q(3, 25)]);
        let (x, v) = bistable().social_optimum();
        assert_eq!((x, v), (one(), q(56, 100)));
    }

    #[test]
    fn universal_indifference_is_one_interval() {
        let c = q(2, 3);
        let g = GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            MonotoneFn::non_increasing(PiecewiseFn::constant(c.clone())).unwrap(),
            PiecewiseFn::constant(c),
            Technology::bus(),
        )
        .unwrap();
        let eq = g.equilibrium_set();
        assert!(eq.points.is_empty());
        assert_eq!(eq.intervals, vec![EqInterval { lo: zero(), hi: one(), lo_closed: true, hi_closed: true }]);
    }

    #[test]
    fn crossing_inside_a_segment() {
        // α = 1 − x against a constant tax 1/4 ⇒ single equilibrium at 3/4
        let alpha =
            MonotoneFn::non_increasing(PiecewiseFn::from_pieces(vec![Piece::linear(one(), qi(-1), one())]).unwrap())
                .unwrap();
        let g = GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            alpha,
            PiecewiseFn::constant(q(1, 4)),
            Technology::bus(),
        )
        .unwrap();
        assert_eq!(g.equilibrium_set().points, vec![q(3, 4)]);
    }

    #[test]
    fn discontinuous_tax_can_leave_no_equilibrium() {
        // t jumps over α = 1/2 at 1/2 and the point value at 1/2 sits below α(1/2⁺)
        let tax = PiecewiseFn::from_pieces(vec![
            Piece::constant(q(1, 2), zero()),
            Piece::point(q(1, 2), zero()),
            Piece::constant(one(), one()),
        ])
        .unwrap();
        let g = GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            MonotoneFn::non_increasing(PiecewiseFn::constant(q(1, 2))).unwrap(),
            tax,
            Technology::bus(),
        )
        .unwrap();
        let eq = g.equilibrium_set();
        assert!(eq.is_empty());
        assert_eq!(eq.knife_edges, Vec::<Q>::new());
    }

    #[test]
    fn bus_is_the_plain_public_good_game() {
        let g = bistable();
        for i in 0..=50 {
            let x = q(i, 50);
            let l = g.externality().at(&x);
            let inconvenience = g.alpha().inner().integrate(&x, &one()).unwrap();
            assert_eq!(g.sc(&x), l + inconvenience);
            assert_eq!(g.effective_tax().at(&x), g.tax().at(&x));
        }
    }

    #[test]
    fn optimum_free_when_alpha_zero() {
        let g = GameInstance::new(
            PiecewiseFn::constant(one()),
            q(1, 3),
            MonotoneFn::non_increasing(PiecewiseFn::constant(zero())).unwrap(),
            PiecewiseFn::constant(zero()),
            Technology::carpool(2).unwrap(),
        )
        .unwrap();
        let (x, v) = g.social_optimum();
        assert_eq!(x, zero());
        assert_eq!(v, q(1, 3) + q(1, 2));
        assert!(to_f64(&v) > 0.0);
    }

    #[test]
    fn rejects_invalid_games() {
        let ok_alpha = MonotoneFn::non_increasing(PiecewiseFn::constant(one())).unwrap();
        let neg = PiecewiseFn::constant(qi(-1));
        assert!(GameInstance::new(
            neg.clone(),
            zero(),
            ok_alpha.clone(),
            PiecewiseFn::constant(zero()),
            Technology::bus()
        )
        .is_err());
        assert!(GameInstance::new(
            PiecewiseFn::constant(one()),
            qi(-1),
            ok_alpha.clone(),
            PiecewiseFn::constant(zero()),
            Technology::bus()
        )
        .is_err());
        assert!(GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            ok_alpha.clone(),
            neg.clone(),
            Technology::bus()
        )
        .is_err());
        assert!(GameInstance::new_with_subsidy(PiecewiseFn::constant(one()), zero(), ok_alpha, neg, Technology::bus())
            .is_ok());
        let neg_alpha = MonotoneFn::non_increasing(PiecewiseFn::constant(qi(-1))).unwrap();
        assert!(GameInstance::new(
            PiecewiseFn::constant(one()),
            zero(),
            neg_alpha,
            PiecewiseFn::constant(zero()),
            Technology::bus()
        )
        .is_err());
    }
}
