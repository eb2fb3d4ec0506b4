//! Price of anarchy and the theorem-level checks built on it.

use crate::adversary::AdversarialInstance;
use crate::error::{Error, Result};
use crate::game::{GameInstance, ModelKind};
use crate::piecewise::Direction;
use crate::rational::{one, q, sqrt_ceil, sqrt_exact, Ext, Signs, Q, SQRT_DIGITS};
use crate::taxes::{constant_sqrt_tax, gamma_tax, pigouvian_tax, GammaEnvelope};

pub use crate::taxes::derivative_ratio;

/// Slack allowed when a bound involves an irrational square root.
pub const SQRT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PoaReport {
    pub poa: Ext,
    /// Location of the supremum; `None` when there is no equilibrium.
    pub worst_equilibrium: Option<Q>,
    pub sc_worst: Option<Q>,
    pub optimum: Q,
    pub sc_opt: Q,
    pub equilibria_count: usize,
    pub knife_edge_count: usize,
}

/// PoA excluding knife-edge points.
pub fn price_of_anarchy(g: &GameInstance) -> PoaReport {
    price_of_anarchy_with(g, false)
}

/// PoA, optionally letting knife-edge points count as equilibria.
pub fn price_of_anarchy_with(g: &GameInstance, include_knife_edges: bool) -> PoaReport {
    let eq = g.equilibrium_set();
    let (optimum, sc_opt) = g.social_optimum();
    let mut worst: Option<(Q, Q)> = None;
    let mut consider = |x: Q, v: Q| {
        if worst.as_ref().is_none_or(|(_, w)| v > *w) {
            worst = Some((x, v));
        }
    };
    for p in &eq.points {
        consider(p.clone(), g.sc(p));
    }
    if include_knife_edges {
        for k in &eq.knife_edges {
            consider(k.clone(), g.sc(k));
        }
    }
    for iv in &eq.intervals {
        // SC is continuous, so the supremum over an open end is attained at it
        let (x, v) = g.sc_max_on(&iv.lo, &iv.hi);
        consider(x, v);
    }
    let equilibria_count =
        eq.points.len() + eq.intervals.len() + if include_knife_edges { eq.knife_edges.len() } else { 0 };
    let poa = match &worst {
        None => Ext::Finite(one()),
        Some((_, w)) if sc_opt.is_zero() => {
            if w.is_zero() {
                Ext::Finite(one())
            } else {
                Ext::PosInf
            }
        }
        Some((_, w)) => Ext::Finite(w / &sc_opt),
    };
    let (worst_equilibrium, sc_worst) = match worst {
        Some((x, v)) => (Some(x), Some(v)),
        None => (None, None),
    };
    PoaReport {
        poa,
        worst_equilibrium,
        sc_worst,
        optimum,
        sc_opt,
        equilibria_count,
        knife_edge_count: eq.knife_edges.len(),
    }
}

/// Outcome of one theorem check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub poa: Ext,
    pub bound: Ext,
    /// `"upper"` when `poa ≤ bound` is required, `"lower"` for `poa ≥ bound`.
    pub sense: &'static str,
}

fn upper(poa: Ext, bound: Ext) -> Verdict {
    Verdict { pass: poa <= bound, poa, bound, sense: "upper" }
}

/// `PoA ≤ √H` for the constant geometric-mean tax.
pub fn check_sqrth_upper(g: &GameInstance) -> Result<Verdict> {
    if g.tech().kind() != ModelKind::SharedExternality {
        return Err(Error::Precondition("the √H guarantee is stated for shared-externality games".into()));
    }
    let expected = constant_sqrt_tax(g.l_prime(), g.tech())?;
    if !g.tax().equivalent(&expected) {
        return Err(Error::Precondition("the game's tax is not the constant √H tax for its l′".into()));
    }
    let h = match derivative_ratio(g.l_prime(), g.tech()) {
        Ext::Finite(h) => h,
        _ => return Err(Error::Precondition("H is infinite".into())),
    };
    let poa = price_of_anarchy(g).poa;
    Ok(match sqrt_exact(&h) {
        Some(root) => upper(poa, Ext::Finite(root)),
        None => {
            let slack = q(1, 1_000_000_000);
            upper(poa, Ext::Finite(sqrt_ceil(&h, SQRT_DIGITS) + slack))
        }
    })
}

/// `PoA ≤ γ` for the γ-envelope tax.
pub fn check_gamma_upper(g: &GameInstance, env: &GammaEnvelope) -> Result<Verdict> {
    if g.tech().kind() != ModelKind::SharedExternality {
        return Err(Error::Precondition("the γ guarantee is stated for shared-externality games".into()));
    }
    if !g.tax().equivalent(&gamma_tax(env, g.tech())) {
        return Err(Error::Precondition("the game's tax is not the γ-envelope tax".into()));
    }
    Ok(upper(price_of_anarchy(g).poa, Ext::Finite(env.gamma.clone())))
}

/// Pigouvian guarantee: `PoA = 1` when `l′` is non-decreasing on the reachable
/// loads, and `PoA ≤ H` in general.
pub fn check_pigouvian(g: &GameInstance) -> Result<Verdict> {
    if g.tech().kind() != ModelKind::SharedExternality {
        return Err(Error::Precondition("the Pigouvian guarantees are stated for shared-externality games".into()));
    }
    if !g.tax().equivalent(&pigouvian_tax(g.l_prime(), g.tech())) {
        return Err(Error::Precondition("the game's tax is not Pigouvian".into()));
    }
    let kappa = g.tech().kappa();
    let on_loads = g.l_prime().compose_affine(&(one() - kappa), kappa)?;
    let bound = if on_loads.is_monotone(Direction::NonDecreasing) {
        Ext::Finite(one())
    } else {
        derivative_ratio(g.l_prime(), g.tech())
    };
    Ok(upper(price_of_anarchy(g).poa, bound))
}

/// The witness is an equilibrium and the achieved PoA reaches the claimed bound.
pub fn check_adversary(a: &AdversarialInstance) -> Verdict {
    let poa = price_of_anarchy(&a.game).poa;
    let pass = a.game.is_equilibrium(&a.witness) && poa >= a.claimed_bound;
    Verdict { pass, poa, bound: a.claimed_bound.clone(), sense: "lower" }
}
