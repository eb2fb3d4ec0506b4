use pgcg_core::adversary::{rsg_adversary, sqrth_adversary};
use pgcg_core::bounds::price_of_anarchy;
use pgcg_core::families::{instance_rng, random_game, random_shared_preset, signed_continuous_tax, step_l_prime};
use pgcg_core::oracle::grid_optimum;
use pgcg_core::rational::{q, qi, zero, Q};
use pgcg_core::taxes::{derivative_ratio, TaxScheme};
use pgcg_core::{Ext, GameInstance, MonotoneFn, PiecewiseFn};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Q> {
    (0i64..=1000).prop_map(|n| q(n, 1000))
}

fn sorted3() -> impl Strategy<Value = (Q, Q, Q)> {
    (unit(), unit(), unit()).prop_map(|(a, b, c)| {
        let mut v = [a, b, c];
        v.sort();
        let [a, b, c] = v;
        (a, b, c)
    })
}

fn game(seed: u64) -> GameInstance {
    random_game(&mut instance_rng(seed, 0)).expect("generated games are valid")
}

/// A step or continuous piecewise-linear function on `[0, 1]`.
fn function(seed: u64) -> PiecewiseFn {
    let mut rng = instance_rng(seed, 1);
    if seed & 1 == 0 {
        step_l_prime(&mut rng, 1 + (seed % 7) as usize)
    } else {
        signed_continuous_tax(&mut rng)
    }
}

fn sandwich(g: &GameInstance, x: &Q) -> bool {
    let (left, right) = g.alpha().limits(x).unwrap();
    let t = Ext::Finite(g.effective_tax().eval(x).unwrap());
    left >= t && t >= right
}

fn scheme(pick: u8, c: Q) -> TaxScheme {
    match pick % 4 {
        0 => TaxScheme::Pigouvian,
        1 => TaxScheme::ConstantSqrt,
        2 => TaxScheme::Zero,
        _ => TaxScheme::Constant(c),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn integrate_is_additive(seed in any::<u64>(), (a, b, c) in sorted3()) {
        let f = function(seed);
        let whole = f.integrate(&a, &c).unwrap();
        prop_assert_eq!(whole, f.integrate(&a, &b).unwrap() + f.integrate(&b, &c).unwrap());
    }

    #[test]
    fn antiderivative_differences_are_integrals(seed in any::<u64>(), (a, _, b) in sorted3(), c0 in -5i64..5) {
        // Antiderivatives are only formed for step functions.
        let f = function(seed & !1);
        let big_f = f.antiderivative(qi(c0)).unwrap();
        prop_assert_eq!(big_f.eval(&b).unwrap() - big_f.eval(&a).unwrap(), f.integrate(&a, &b).unwrap());
    }

    #[test]
    fn compose_affine_is_pointwise(seed in any::<u64>(), k in 0i64..1000, xs in prop::collection::vec(unit(), 1..40)) {
        let f = function(seed);
        let (scale, shift) = (q(1000 - k, 1000), q(k, 1000));
        let g = f.compose_affine(&scale, &shift).unwrap();
        for x in &xs {
            prop_assert_eq!(g.eval(x).unwrap(), f.eval(&(&scale * x + &shift)).unwrap());
        }
    }

    #[test]
    fn range_bounds_bracket_values(seed in any::<u64>(), xs in prop::collection::vec(unit(), 1..40)) {
        let f = function(seed);
        let (lo, hi) = f.range_bounds();
        for x in &xs {
            let v = f.eval(x).unwrap();
            prop_assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn monotone_limits_are_ordered(seed in any::<u64>()) {
        let g = game(seed);
        let alpha: &MonotoneFn = g.alpha();
        for k in alpha.inner().knots() {
            let (left, right) = alpha.limits(k).unwrap();
            let v = Ext::Finite(alpha.at(k));
            prop_assert!(left >= v && v >= right, "at {}", k);
        }
    }

    #[test]
    fn equilibria_satisfy_the_sandwich(seed in any::<u64>()) {
        let g = game(seed);
        let eq = g.equilibrium_set();
        for p in &eq.points {
            prop_assert!(sandwich(&g, p), "point {}", p);
        }
        for iv in &eq.intervals {
            let mid = (&iv.lo + &iv.hi) / qi(2);
            prop_assert!(sandwich(&g, &mid), "interval midpoint {}", mid);
            if iv.lo_closed { prop_assert!(sandwich(&g, &iv.lo)); }
            if iv.hi_closed { prop_assert!(sandwich(&g, &iv.hi)); }
        }
        for k in &eq.knife_edges {
            prop_assert!(!sandwich(&g, k), "knife-edge {}", k);
        }
    }

    #[test]
    fn optimum_is_below_every_cost(seed in any::<u64>(), xs in prop::collection::vec(unit(), 1..60)) {
        let g = game(seed);
        let (x_star, sc_star) = g.social_optimum();
        prop_assert_eq!(g.sc(&x_star), sc_star.clone());
        for x in &xs {
            prop_assert!(sc_star <= g.social_cost(x).unwrap());
        }
    }

    #[test]
    fn social_cost_ignores_the_tax(seed in any::<u64>(), xs in prop::collection::vec(unit(), 1..20)) {
        let g = game(seed);
        let untaxed = g.with_tax(PiecewiseFn::constant(zero())).unwrap();
        for x in &xs {
            prop_assert_eq!(g.sc(x), untaxed.sc(x));
        }
    }

    #[test]
    fn continuous_taxes_admit_an_equilibrium(seed in any::<u64>()) {
        let g = game(seed);
        let t = signed_continuous_tax(&mut instance_rng(seed, 2)).max_zero();
        prop_assert!(t.is_continuous());
        let eq = g.with_tax(t).unwrap().equilibrium_set();
        prop_assert!(!eq.points.is_empty() || !eq.intervals.is_empty());
    }

    #[test]
    fn poa_is_scale_invariant(seed in any::<u64>(), num in 1i64..20, den in 1i64..20) {
        let g = game(seed);
        let c = q(num, den);
        let scaled = GameInstance::new(
            g.l_prime().scale(&c),
            g.l0() * &c,
            MonotoneFn::non_increasing(g.alpha().inner().scale(&c)).unwrap(),
            g.tax().scale(&c),
            g.tech().clone(),
        ).unwrap();
        prop_assert_eq!(price_of_anarchy(&scaled).poa, price_of_anarchy(&g).poa);
    }

    #[test]
    fn grid_optimum_is_within_one_cell(seed in any::<u64>()) {
        let g = game(seed);
        let r = q(1, 250);
        let (_, sc_star) = g.social_optimum();
        let (_, best) = grid_optimum(&g, &r).unwrap();
        prop_assert!(best >= sc_star);
        prop_assert!(best <= &sc_star + g.sc_slope_bound() * &r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adversary_witnesses_hold(h in 2i64..60, k in 20i64..2000, pick in any::<u8>(), c in 0i64..30) {
        let (h, eps) = (qi(h), q(1, k));
        let a = sqrth_adversary(&h, &eps, &scheme(pick, q(c, 10))).unwrap();
        prop_assert!(a.game.is_equilibrium(&a.witness));
        prop_assert!(!a.game.equilibrium_set().knife_edges.contains(&a.witness));
        prop_assert!(price_of_anarchy(&a.game).poa >= a.claimed_bound);
        prop_assert_eq!(derivative_ratio(a.game.l_prime(), a.game.tech()), Ext::Finite(h));
    }

    #[test]
    fn shared_adversary_ratio_is_h(seed in any::<u64>(), h in 2i64..60, k in 20i64..2000, pick in any::<u8>()) {
        let tech = random_shared_preset(&mut instance_rng(seed, 3));
        let h = qi(h);
        let a = rsg_adversary(&tech, &h, &q(1, k), &scheme(pick, q(1, 2))).unwrap();
        prop_assert_eq!(derivative_ratio(a.game.l_prime(), a.game.tech()), Ext::Finite(h));
        prop_assert!(a.game.is_equilibrium(&a.witness));
        prop_assert!(price_of_anarchy(&a.game).poa >= a.claimed_bound);
    }
}
