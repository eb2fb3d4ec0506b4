//! Lower-bound constructions: for a supplied tax, build an `(l, α)` pair whose
//! price of anarchy is provably large, together with the equilibrium that
//! witnesses it.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::game::{GameInstance, ModelKind, Technology};
use crate::piecewise::{MonotoneFn, Piece, PiecewiseFn};
use crate::rational::{cmp_with_sqrt, format_rational, one, qi, sqrt_floor, zero, Ext, Signs, Q, SQRT_DIGITS};
use crate::taxes::{pigouvian_tax, TaxScheme};

/// Which branch of the two-case construction produced the instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    /// The tax at the witness is high: α is flat up to 1 and the optimum sits at 1.
    One,
    /// The tax at the witness is low: α drops to 0 just past the witness.
    Two,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::One => "case-1",
            Case::Two => "case-2",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdversarialInstance {
    pub game: GameInstance,
    pub witness: Q,
    /// Guaranteed lower bound on `SC(witness)/SC*`.
    pub claimed_bound: Ext,
    pub case: Case,
}

fn closed_steps(parts: Vec<(Q, Q)>) -> Result<PiecewiseFn> {
    PiecewiseFn::from_pieces(parts.into_iter().map(|(end, v)| Piece::constant(end, v).closed()).collect())
}

fn check_ratio(name: &str, h: &Q) -> Result<()> {
    if *h <= one() {
        return Err(Error::Domain(format!("{name} must exceed 1, got {}", format_rational(h))));
    }
    Ok(())
}

fn check_eps(eps: &Q, upper: &Q) -> Result<()> {
    if !eps.is_positive() || eps >= upper {
        return Err(Error::Domain(format!(
            "ε must lie in (0, {}), got {}",
            format_rational(upper),
            format_rational(eps)
        )));
    }
    Ok(())
}

/// α that equals `c` before 1 and drops to 0 only at `x = 1`.
fn flat_alpha(c: &Q) -> Result<MonotoneFn> {
    MonotoneFn::non_increasing(PiecewiseFn::from_pieces(vec![
        Piece::constant(one(), c.clone()),
        Piece::point(one(), zero()),
    ])?)
}

/// α that equals `c` on `[0, cut]` and 0 after.
fn cliff_alpha(c: &Q, cut: &Q) -> Result<MonotoneFn> {
    MonotoneFn::non_increasing(closed_steps(vec![(cut.clone(), c.clone()), (one(), zero())])?)
}

/// The bus-model construction against `tax`: `l′ = 1` on `[0, 2ε]`, `1/H` after.
pub fn sqrth_adversary(h: &Q, eps: &Q, tax: &TaxScheme) -> Result<AdversarialInstance> {
    rsg_adversary(&Technology::bus(), h, eps, tax)
}

/// The ride-sharing generalisation: `l′` is shaped on loads so that
/// `(1−κ)·l′(κ(x))` is `1` on `[0, 2ε]` and `1/H` after, and the branch is
/// taken on the effective tax `(1−τ)·t(κ(ε))` against `√(1/H)`.
pub fn rsg_adversary(tech: &Technology, h: &Q, eps: &Q, tax: &TaxScheme) -> Result<AdversarialInstance> {
    if tech.kind() != ModelKind::SharedExternality {
        return Err(Error::Precondition("the √H construction needs a shared-externality technology".into()));
    }
    check_ratio("H", h)?;
    check_eps(eps, &(one() / qi(2)))?;
    let kappa = tech.kappa().clone();
    let delta = one() / h;
    let inv = one() / (one() - &kappa);
    let mut parts = Vec::new();
    if kappa.is_positive() {
        parts.push((kappa.clone(), zero()));
    }
    parts.push(((one() - &kappa) * qi(2) * eps + &kappa, inv.clone()));
    parts.push((one(), &delta * &inv));
    let l_prime = closed_steps(parts)?;
    let t = tax.resolve(&l_prime, tech)?;
    let c = (one() - tech.tau()) * t.eval(&tech.load(eps))?;

    let (alpha, case, claimed_bound) = if cmp_with_sqrt(&c, &delta) != Ordering::Less {
        let sc_one = &delta + qi(2) * eps * (one() - &delta);
        let bound = sqrt_floor(&delta, SQRT_DIGITS) / sc_one;
        (flat_alpha(&c)?, Case::One, Ext::Finite(bound))
    } else {
        let bound = if c.is_zero() { Ext::PosInf } else { Ext::Finite(one() / ((one() + eps) * &c)) };
        (cliff_alpha(&c, &(eps + eps * eps))?, Case::Two, bound)
    };
    let game = GameInstance::new(l_prime, zero(), alpha, t, tech.clone())?;
    Ok(AdversarialInstance { game, witness: eps.clone(), claimed_bound, case })
}

/// The instance on which the Pigouvian tax loses a factor close to `H`.
/// The witness is the strict equilibrium `ε/2`.
pub fn pigouvian_gap_instance(h: &Q, eps: &Q) -> Result<AdversarialInstance> {
    check_ratio("H", h)?;
    check_eps(eps, &(one() / qi(3)))?;
    let l_prime = closed_steps(vec![(eps.clone(), one()), (one(), one() / h)])?;
    let alpha = MonotoneFn::non_increasing(closed_steps(vec![
        (eps / qi(2), one() + eps),
        (one() - eps, one() - eps),
        (one(), zero()),
    ])?)?;
    let tech = Technology::bus();
    let tax = pigouvian_tax(&l_prime, &tech);
    let three_halves = qi(3) / qi(2);
    let numerator = eps / qi(2) + (one() - &three_halves * eps) * (one() - eps);
    let denominator = eps + (one() - qi(2) * eps) / h;
    let game = GameInstance::new(l_prime, zero(), alpha, tax, tech)?;
    Ok(AdversarialInstance {
        game,
        witness: eps / qi(2),
        claimed_bound: Ext::Finite(numerator / denominator),
        case: Case::One,
    })
}

/// The train-model construction: `l′` is a spike of height `Z²/ε` on
/// `(ε−δ, ε]` with `δ = ε/Z²`, so only the drivers between those loads pay.
pub fn train_adversary(z: &Q, eps: &Q, tax: &TaxScheme) -> Result<AdversarialInstance> {
    check_ratio("Z", z)?;
    check_eps(eps, &one())?;
    let delta = one() / z;
    let small = eps * &delta * &delta;
    let l_prime = closed_steps(vec![(eps - &small, zero()), (eps.clone(), &delta / &small), (one(), zero())])?;
    let tech = Technology::train();
    let t = tax.resolve(&l_prime, &tech)?;
    let l = l_prime.antiderivative(zero())?;
    let c = l.at(eps) + t.eval(eps)?;
    let (alpha, case, claimed_bound) = if c >= one() {
        (flat_alpha(&c)?, Case::One, Ext::Finite((one() - eps) / &delta))
    } else {
        (cliff_alpha(&c, eps)?, Case::Two, Ext::Finite(z.clone()))
    };
    let game = GameInstance::new(l_prime, zero(), alpha, t, tech)?;
    Ok(AdversarialInstance { game, witness: eps.clone(), claimed_bound, case })
}
