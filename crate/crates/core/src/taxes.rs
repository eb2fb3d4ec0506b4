//! Tax schemes: Pigouvian, the constant geometric-mean tax, the γ-envelope
//! tax and the subsidy truncation.

use crate::error::{Error, Result};
use crate::game::Technology;
use crate::piecewise::{Affine, Direction, PiecewiseFn};
use crate::rational::{format_rational, sqrt_floor, zero, Ext, Signs, Q, SQRT_DIGITS};

/// `t = ((1−κ)/(1−τ))·l′`.
pub fn pigouvian_tax(l_prime: &PiecewiseFn, tech: &Technology) -> PiecewiseFn {
    l_prime.scale(&tech.toll_factor())
}

/// Infimum and supremum of `l′` over the reachable loads `(κ, 1]`.
pub fn reachable_range(l_prime: &PiecewiseFn, tech: &Technology) -> (Q, Q) {
    l_prime.range_bounds_above(tech.min_load()).expect("κ < 1 keeps the reachable range non-empty")
}

/// `sup l′ / inf l′` over the reachable loads; `+∞` when the infimum is 0.
pub fn derivative_ratio(l_prime: &PiecewiseFn, tech: &Technology) -> Ext {
    let (inf, sup) = reachable_range(l_prime, tech);
    if inf.is_zero() {
        Ext::PosInf
    } else {
        Ext::Finite(sup / inf)
    }
}

/// Constant tax `((1−κ)/(1−τ))·√(sup l′ · inf l′)`, i.e. `√H·inf` scaled by
/// the toll factor. Irrational roots are rounded down to [`SQRT_DIGITS`] digits.
pub fn constant_sqrt_tax(l_prime: &PiecewiseFn, tech: &Technology) -> Result<PiecewiseFn> {
    let (inf, sup) = reachable_range(l_prime, tech);
    if !inf.is_positive() {
        return Err(Error::Precondition("inf l′ is 0 on the reachable range, so H is undefined".into()));
    }
    let factor = tech.toll_factor();
    let level = sqrt_floor(&(&factor * &factor * sup * inf), SQRT_DIGITS);
    Ok(PiecewiseFn::constant(level))
}

/// A non-decreasing minorant `L′ ≤ l′` together with `γ = sup l′/L′`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaEnvelope {
    pub l_prime_minorant: PiecewiseFn,
    pub gamma: Q,
}

/// `L′(x) = inf_{z ≥ x} l′(z)`, the largest non-decreasing function below `l′`,
/// which also minimises `γ` over all valid envelopes.
pub fn best_monotone_minorant(l_prime: &PiecewiseFn) -> Result<GammaEnvelope> {
    if !l_prime.is_piecewise_constant() {
        return Err(Error::Unsupported("γ-envelope needs a piecewise-constant l′".into()));
    }
    let (lo, _) = l_prime.range_bounds();
    if !lo.is_positive() {
        return Err(Error::Precondition("l′ must be strictly positive for a γ-envelope".into()));
    }
    let knots = l_prime.knots().to_vec();
    let points = l_prime.point_values();
    let segs = l_prime.segments();
    let m = segs.len();
    let mut env_points = vec![zero(); m + 1];
    let mut env_segs = vec![Affine::constant(zero()); m];
    let mut running = points[m].clone();
    env_points[m] = running.clone();
    for j in (0..m).rev() {
        running = running.min(segs[j].intercept.clone());
        env_segs[j] = Affine::constant(running.clone());
        running = running.min(points[j].clone());
        env_points[j] = running.clone();
    }
    let mut gamma = zero();
    for j in 0..=m {
        gamma = gamma.max(&points[j] / &env_points[j]);
        if j < m {
            gamma = gamma.max(&segs[j].intercept / &env_segs[j].intercept);
        }
    }
    let minorant = PiecewiseFn::from_parts(knots, env_segs, env_points)?.simplified();
    debug_assert!(minorant.is_monotone(Direction::NonDecreasing));
    Ok(GammaEnvelope { l_prime_minorant: minorant, gamma })
}

/// `t = ((1−κ)/(1−τ))·L′`.
pub fn gamma_tax(env: &GammaEnvelope, tech: &Technology) -> PiecewiseFn {
    env.l_prime_minorant.scale(&tech.toll_factor())
}

/// Result of [`truncate_subsidy`].
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub tax: PiecewiseFn,
    /// `false` when the input was discontinuous and negative somewhere, where
    /// the no-subsidy guarantee is not established.
    pub guarantee_applies: bool,
}

/// `t̃ = max(t, 0)`, refined at zero crossings.
pub fn truncate_subsidy(t: &PiecewiseFn) -> Truncation {
    let guarantee_applies = t.is_continuous() || t.is_nonnegative();
    Truncation { tax: t.max_zero(), guarantee_applies }
}

/// A tax chosen by name and resolved against a concrete `(l′, ν)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TaxScheme {
    Pigouvian,
    ConstantSqrt,
    GammaEnvelope,
    Constant(Q),
    Zero,
    Custom(PiecewiseFn),
}

impl TaxScheme {
    /// Parses the parameter-free scheme names.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "pigouvian" => Ok(TaxScheme::Pigouvian),
            "constant-sqrt" => Ok(TaxScheme::ConstantSqrt),
            "gamma-envelope" => Ok(TaxScheme::GammaEnvelope),
            "zero" => Ok(TaxScheme::Zero),
            other => Err(Error::Parse(format!(
                "unknown tax scheme {other:?} (expected pigouvian, constant-sqrt, gamma-envelope, zero, constant or custom)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaxScheme::Pigouvian => "pigouvian",
            TaxScheme::ConstantSqrt => "constant-sqrt",
            TaxScheme::GammaEnvelope => "gamma-envelope",
            TaxScheme::Constant(_) => "constant",
            TaxScheme::Zero => "zero",
            TaxScheme::Custom(_) => "custom",
        }
    }

    pub fn resolve(&self, l_prime: &PiecewiseFn, tech: &Technology) -> Result<PiecewiseFn> {
        match self {
            TaxScheme::Pigouvian => Ok(pigouvian_tax(l_prime, tech)),
            TaxScheme::ConstantSqrt => constant_sqrt_tax(l_prime, tech),
            TaxScheme::GammaEnvelope => Ok(gamma_tax(&best_monotone_minorant(l_prime)?, tech)),
            TaxScheme::Constant(c) => {
                if c.is_negative() {
                    return Err(Error::InvalidFunction(format!("constant tax {} is negative", format_rational(c))));
                }
                Ok(PiecewiseFn::constant(c.clone()))
            }
            TaxScheme::Zero => Ok(PiecewiseFn::constant(zero())),
            TaxScheme::Custom(t) => Ok(t.clone()),
        }
    }
}
