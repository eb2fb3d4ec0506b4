//! Seeded random generators for the instance families used by the property
//! sweeps, the acceptance suite and the CLI `sweep` command.
//!
//! All values are small-denominator rationals so that sweeps of a few hundred
//! instances stay fast under exact arithmetic.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::game::{GameInstance, Technology};
use crate::piecewise::{Affine, MonotoneFn, Piece, PiecewiseFn};
use crate::rational::{one, q, qi, zero, Q};
use crate::taxes::{constant_sqrt_tax, pigouvian_tax};

/// Independent generator for instance `index` of a sweep seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Knot denominator for generated breakpoints.
const KNOT_GRID: i64 = 200;

/// `0 = k₀ < k₁ < … < k_pieces = 1` with interior knots on the `1/KNOT_GRID` lattice.
pub fn random_knots<R: Rng>(rng: &mut R, pieces: usize) -> Vec<Q> {
    random_knots_above(rng, pieces, &zero())
}

/// Like [`random_knots`] but with every interior knot strictly above `floor`.
pub fn random_knots_above<R: Rng>(rng: &mut R, pieces: usize, floor: &Q) -> Vec<Q> {
    let first = (0..KNOT_GRID).find(|i| q(*i, KNOT_GRID) > *floor).unwrap_or(KNOT_GRID - 1).max(1);
    let slots = (KNOT_GRID - first) as usize;
    let interior = (pieces.max(1) - 1).min(slots);
    let mut picks: Vec<i64> = sample(rng, slots, interior).into_iter().map(|i| first + i as i64).collect();
    picks.sort_unstable();
    let mut knots = vec![zero()];
    knots.extend(picks.into_iter().map(|i| q(i, KNOT_GRID)));
    knots.push(one());
    knots
}

/// A step function taking `values[j]` on `(kⱼ, kⱼ₊₁)`. Each interior knot
/// takes the value of a randomly chosen neighbour.
fn step_fn<R: Rng>(rng: &mut R, knots: Vec<Q>, values: &[Q]) -> PiecewiseFn {
    let m = values.len();
    let mut points = Vec::with_capacity(m + 1);
    points.push(values[0].clone());
    for j in 1..m {
        points.push(if rng.gen_bool(0.5) { values[j - 1].clone() } else { values[j].clone() });
    }
    points.push(values[m - 1].clone());
    let segments = values.iter().cloned().map(Affine::constant).collect();
    PiecewiseFn::from_parts(knots, segments, points).expect("generated knots are valid")
}

/// Non-decreasing step `l′` with `pieces` levels drawn from multiples of 1/4.
pub fn nondecreasing_step_l_prime<R: Rng>(rng: &mut R, pieces: usize) -> PiecewiseFn {
    let knots = random_knots(rng, pieces);
    let m = knots.len() - 1;
    let mut level = rng.gen_range(0..=4);
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        values.push(q(level, 4));
        level += rng.gen_range(0..=6);
    }
    step_fn(rng, knots, &values)
}

/// Arbitrary non-negative step `l′` (not necessarily monotone).
pub fn step_l_prime<R: Rng>(rng: &mut R, pieces: usize) -> PiecewiseFn {
    let knots = random_knots(rng, pieces);
    let values: Vec<Q> = (0..knots.len() - 1).map(|_| q(rng.gen_range(0..=16), 4)).collect();
    step_fn(rng, knots, &values)
}

/// A step `l′` from the family with sup/inf over the reachable loads `(κ, 1]`
/// at most `max_root²`. The extreme levels are `a·u²` and `a·v²`, so `√H = v/u`
/// is rational and the constant geometric-mean tax is exact.
pub fn lh_l_prime<R: Rng>(rng: &mut R, tech: &Technology, max_root: i64) -> PiecewiseFn {
    let pieces = rng.gen_range(2..=8);
    let knots = random_knots_above(rng, pieces, tech.min_load());
    let m = knots.len() - 1;
    let a = q(rng.gen_range(1..=8), 8);
    let u = rng.gen_range(1..=4);
    let v = rng.gen_range(u..=u * max_root.max(1));
    let lo = &a * qi(u * u);
    let hi = &a * qi(v * v);
    let mut values: Vec<Q> = (0..m)
        .map(|_| {
            let w = q(rng.gen_range(0..=16), 16);
            &lo + (&hi - &lo) * w
        })
        .collect();
    // every piece meets (κ, 1], so planting both extremes pins inf and sup
    let i = rng.gen_range(0..m);
    let j = if m > 1 { (i + rng.gen_range(1..m)) % m } else { i };
    values[i] = lo.clone();
    values[j] = hi;
    if i == j {
        values[i] = lo;
    }
    step_fn(rng, knots, &values)
}

/// Three-level bump `l′ = {a on [0, p], b on (p, r], c after}` with `b` above
/// both shoulders: the derivative of an S-shaped externality.
pub fn sigmoid_l_prime<R: Rng>(rng: &mut R) -> PiecewiseFn {
    let knots = random_knots(rng, 3);
    let a = q(rng.gen_range(1..=8), 4);
    let c = q(rng.gen_range(1..=8), 4);
    let peak = if a > c { a.clone() } else { c.clone() };
    let b = peak + q(rng.gen_range(1..=24), 4);
    let values = [a, b, c];
    let values = &values[..knots.len() - 1];
    step_fn(rng, knots, values)
}

/// `max_level` bounds the first level; later levels decrease from it.
fn descending<R: Rng>(rng: &mut R, count: usize, max_level: i64) -> Vec<Q> {
    let mut level = rng.gen_range(max_level / 2..=max_level);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(q(level, 8));
        level = (level - rng.gen_range(0..=max_level / 3)).max(0);
    }
    out
}

/// Non-increasing step `α`.
pub fn step_alpha<R: Rng>(rng: &mut R) -> MonotoneFn {
    let pieces = rng.gen_range(1..=6);
    let knots = random_knots(rng, pieces);
    let values = descending(rng, knots.len() - 1, 40);
    MonotoneFn::non_increasing(step_fn(rng, knots, &values)).expect("descending levels")
}

/// Non-increasing `α` mixing flat and downward-sloping segments, with jumps.
pub fn mixed_alpha<R: Rng>(rng: &mut R) -> MonotoneFn {
    let pieces = rng.gen_range(1..=5);
    let knots = random_knots(rng, pieces);
    let m = knots.len() - 1;
    // left and right end values of each segment, non-increasing throughout
    let ends = descending(rng, 2 * m, 40);
    let mut segments = Vec::with_capacity(m);
    for j in 0..m {
        let (a, b) = if rng.gen_bool(0.4) { (&ends[2 * j], &ends[2 * j]) } else { (&ends[2 * j], &ends[2 * j + 1]) };
        let slope = (b - a) / (&knots[j + 1] - &knots[j]);
        let intercept = a - &slope * &knots[j];
        segments.push(Affine::new(slope, intercept));
    }
    let mut points = vec![segments[0].at(&knots[0])];
    for j in 1..m {
        let left = segments[j - 1].at(&knots[j]);
        let right = segments[j].at(&knots[j]);
        points.push(if rng.gen_bool(0.5) { left } else { right });
    }
    let end = segments[m - 1].at(&knots[m]);
    points.push(if rng.gen_bool(0.2) { zero() } else { end });
    let f = PiecewiseFn::from_parts(knots, segments, points).expect("generated knots are valid");
    MonotoneFn::non_increasing(f).expect("descending segment ends")
}

/// Either a step or a mixed `α`.
pub fn random_alpha<R: Rng>(rng: &mut R) -> MonotoneFn {
    if rng.gen_bool(0.5) {
        step_alpha(rng)
    } else {
        mixed_alpha(rng)
    }
}

/// Continuous piecewise-linear tax with node values in `[-1, 2]`, negative somewhere
/// with high probability.
pub fn signed_continuous_tax<R: Rng>(rng: &mut R) -> PiecewiseFn {
    let pieces = rng.gen_range(1..=5);
    let knots = random_knots(rng, pieces);
    let nodes: Vec<Q> = knots.iter().map(|_| q(rng.gen_range(-10..=20), 10)).collect();
    let segments = knots
        .windows(2)
        .zip(nodes.windows(2))
        .map(|(k, v)| {
            let slope = (&v[1] - &v[0]) / (&k[1] - &k[0]);
            let intercept = &v[0] - &slope * &k[0];
            Affine::new(slope, intercept)
        })
        .collect();
    PiecewiseFn::from_parts(knots, segments, nodes).expect("generated knots are valid")
}

/// The shared-model technology presets: bus, carpool-K and tolled-carpool-K for K ∈ 2..=5.
pub fn shared_presets() -> Vec<Technology> {
    let mut out = vec![Technology::bus()];
    for k in 2..=5 {
        out.push(Technology::carpool(k).expect("k ≥ 2"));
        out.push(Technology::tolled_carpool(k).expect("k ≥ 2"));
    }
    out
}

pub fn random_shared_preset<R: Rng>(rng: &mut R) -> Technology {
    let presets = shared_presets();
    presets[rng.gen_range(0..presets.len())].clone()
}

/// A game from a broad mix of `l′`, `α`, technology and tax shapes, for oracle sweeps.
pub fn random_game<R: Rng>(rng: &mut R) -> Result<GameInstance> {
    let train = rng.gen_bool(0.2);
    let tech = if train { Technology::train() } else { random_shared_preset(rng) };
    let pieces = rng.gen_range(1..=6);
    let l_prime = match rng.gen_range(0..3) {
        0 => nondecreasing_step_l_prime(rng, pieces),
        1 => step_l_prime(rng, pieces),
        _ => lh_l_prime(rng, &tech, 10),
    };
    let l0 = q(rng.gen_range(0..=4), 4);
    let alpha = random_alpha(rng);
    let tax = match rng.gen_range(0..5) {
        0 => PiecewiseFn::constant(zero()),
        1 if !train => pigouvian_tax(&l_prime, &tech),
        2 if !train => constant_sqrt_tax(&l_prime, &tech).unwrap_or_else(|_| PiecewiseFn::constant(zero())),
        3 => {
            let values: Vec<Q> = (0..rng.gen_range(1..=4)).map(|_| q(rng.gen_range(0..=12), 4)).collect();
            let knots = random_knots(rng, values.len());
            let values = &values[..knots.len() - 1];
            step_fn(rng, knots, values)
        }
        _ => PiecewiseFn::constant(q(rng.gen_range(0..=12), 4)),
    };
    GameInstance::new(l_prime, l0, alpha, tax, tech)
}

/// Two-basin bus game: `l′ = {1 on [0, 0.12], Δ after}`, `α = {1.2 on [0, 0.06],
/// 0.8 after}`, Pigouvian tax. Stable equilibria at 0.06 and 1, knife-edge at 0.12.
pub fn bistable(delta: &Q) -> Result<GameInstance> {
    let l_prime = PiecewiseFn::from_pieces(vec![
        Piece::constant(q(3, 25), one()).closed(),
        Piece::constant(one(), delta.clone()),
    ])?;
    let alpha = MonotoneFn::non_increasing(PiecewiseFn::from_pieces(vec![
        Piece::constant(q(3, 50), q(6, 5)).closed(),
        Piece::constant(one(), q(4, 5)),
    ])?)?;
    let tech = Technology::bus();
    let tax = pigouvian_tax(&l_prime, &tech);
    GameInstance::new(l_prime, zero(), alpha, tax, tech)
}

/// A random constant tax in `[0, 3]`.
pub fn random_constant<R: Rng>(rng: &mut R) -> Q {
    q(rng.gen_range(0..=30), 10)
}
