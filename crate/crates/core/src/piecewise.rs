//! Exact piecewise-constant and piecewise-linear functions on `[0, 1]`.
//!
//! A function is stored as a strictly increasing knot list `0 = k₀ < … < kₘ = 1`,
//! one affine formula per open segment `(kⱼ, kⱼ₊₁)`, and an explicit value at
//! every knot. Which piece "owns" a breakpoint is therefore just the value
//! stored at that knot, so closed/open conventions such as `1 on [0, 0.12]`,
//! `Δ on (0.12, 1]` and isolated point values like `0 at x = 1` are all
//! representable without special cases.

use std::fmt;

use crate::error::{Error, Result};
use crate::rational::{format_rational, one, qi, zero, Ext, Signs, Q};

/// `slope · x + intercept`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub slope: Q,
    pub intercept: Q,
}

impl Affine {
    pub fn new(slope: Q, intercept: Q) -> Self {
        Affine { slope, intercept }
    }

    pub fn constant(c: Q) -> Self {
        Affine { slope: zero(), intercept: c }
    }

    pub fn at(&self, x: &Q) -> Q {
        if self.slope.is_zero() {
            return self.intercept.clone();
        }
        &self.slope * x + &self.intercept
    }

    pub fn is_constant(&self) -> bool {
        self.slope.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.slope.is_zero() && self.intercept.is_zero()
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: &Q, b: &Q) -> Q {
        let flat = &self.intercept * (b - a);
        if self.slope.is_zero() {
            return flat;
        }
        &self.slope * (b * b - a * a) / qi(2) + flat
    }

    /// The unique zero when the formula is not constant.
    pub fn root(&self) -> Option<Q> {
        (!self.slope.is_zero()).then(|| -&self.intercept / &self.slope)
    }

    fn add(&self, other: &Affine) -> Affine {
        Affine::new(&self.slope + &other.slope, &self.intercept + &other.intercept)
    }

    fn sub(&self, other: &Affine) -> Affine {
        Affine::new(&self.slope - &other.slope, &self.intercept - &other.intercept)
    }

    fn scale(&self, c: &Q) -> Affine {
        Affine::new(&self.slope * c, &self.intercept * c)
    }
}

/// One record of the external piece-list form of a function.
///
/// Pieces are listed left to right; each covers the stretch from the previous
/// piece's end (or 0) to its own `end`. A breakpoint belongs to the piece on
/// its right unless `include_end` is set. A piece whose `end` equals the
/// previous end is a single-point piece that fixes the value there. The last
/// piece always includes `x = 1` unless a point piece at 1 follows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub end: Q,
    pub formula: Affine,
    pub include_end: bool,
}

impl Piece {
    pub fn constant(end: Q, value: Q) -> Self {
        Piece { end, formula: Affine::constant(value), include_end: false }
    }

    pub fn linear(end: Q, slope: Q, intercept: Q) -> Self {
        Piece { end, formula: Affine::new(slope, intercept), include_end: false }
    }

    pub fn point(at: Q, value: Q) -> Self {
        Piece { end: at, formula: Affine::constant(value), include_end: true }
    }

    /// Marks the right endpoint as belonging to this piece.
    pub fn closed(mut self) -> Self {
        self.include_end = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseFn {
    knots: Vec<Q>,
    segments: Vec<Affine>,
    points: Vec<Q>,
}

fn domain_check(x: &Q) -> Result<()> {
    if x.is_negative() || *x > one() {
        return Err(Error::Domain(format!("position {} outside [0, 1]", format_rational(x))));
    }
    Ok(())
}

fn merge_knots(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x < y => {
                i += 1;
                x
            }
            (Some(x), Some(y)) if y < x => {
                j += 1;
                y
            }
            (Some(x), Some(_)) => {
                i += 1;
                j += 1;
                x
            }
            (Some(x), None) => {
                i += 1;
                x
            }
            (None, Some(y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next.clone());
    }
    out
}

impl PiecewiseFn {
    pub fn constant(c: Q) -> Self {
        PiecewiseFn {
            knots: vec![zero(), one()],
            segments: vec![Affine::constant(c.clone())],
            points: vec![c.clone(), c],
        }
    }

    /// Builds from the canonical representation, validating its shape.
    pub fn from_parts(knots: Vec<Q>, segments: Vec<Affine>, points: Vec<Q>) -> Result<Self> {
        if knots.len() < 2 || segments.len() + 1 != knots.len() || points.len() != knots.len() {
            return Err(Error::InvalidFunction("mismatched knot/segment/point counts".into()));
        }
        if knots[0] != zero() || knots[knots.len() - 1] != one() {
            return Err(Error::InvalidFunction("knots must start at 0 and end at 1".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFunction("knots must be strictly increasing".into()));
        }
        Ok(PiecewiseFn { knots, segments, points })
    }

    /// Builds from the external piece list (see [`Piece`]).
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self> {
        let mut knots = vec![zero()];
        let mut segments: Vec<Affine> = Vec::new();
        let mut points: Vec<Option<Q>> = vec![None];
        for (idx, piece) in pieces.into_iter().enumerate() {
            domain_check(&piece.end).map_err(|_| {
                Error::InvalidFunction(format!("piece {idx}: end {} outside [0, 1]", format_rational(&piece.end)))
            })?;
            let start = knots.last().expect("non-empty").clone();
            if piece.end < start {
                return Err(Error::InvalidFunction(format!(
                    "piece {idx}: end {} precedes previous end {}",
                    format_rational(&piece.end),
                    format_rational(&start)
                )));
            }
            let last = points.len() - 1;
            if piece.end == start {
                if points[last].is_some() {
                    return Err(Error::InvalidFunction(format!(
                        "piece {idx}: value at {} is already fixed by a neighbouring piece",
                        format_rational(&start)
                    )));
                }
                points[last] = Some(piece.formula.at(&start));
                continue;
            }
            if points[last].is_none() {
                points[last] = Some(piece.formula.at(&start));
            }
            points.push(piece.include_end.then(|| piece.formula.at(&piece.end)));
            knots.push(piece.end);
            segments.push(piece.formula);
        }
        if segments.is_empty() {
            return Err(Error::InvalidFunction("no piece of positive length".into()));
        }
        if *knots.last().expect("non-empty") != one() {
            return Err(Error::InvalidFunction("pieces must extend to 1".into()));
        }
        let last_seg = segments.last().expect("non-empty").clone();
        let points = points.into_iter().zip(&knots).map(|(p, k)| p.unwrap_or_else(|| last_seg.at(k))).collect();
        PiecewiseFn::from_parts(knots, segments, points)
    }

    /// The external piece list; `from_pieces(f.to_pieces())` reproduces `f`.
    pub fn to_pieces(&self) -> Vec<Piece> {
        let m = self.segments.len();
        let mut out = Vec::new();
        if self.points[0] != self.segments[0].at(&self.knots[0]) {
            out.push(Piece::point(zero(), self.points[0].clone()));
        }
        for j in 0..m {
            let seg = &self.segments[j];
            let end = &self.knots[j + 1];
            let value = &self.points[j + 1];
            let left = seg.at(end);
            let piece = |include_end| Piece { end: end.clone(), formula: seg.clone(), include_end };
            if j + 1 == m {
                if *value == left {
                    out.push(piece(true));
                } else {
                    out.push(piece(false));
                    out.push(Piece::point(end.clone(), value.clone()));
                }
            } else if *value == self.segments[j + 1].at(end) {
                out.push(piece(false));
            } else if *value == left {
                out.push(piece(true));
            } else {
                out.push(piece(false));
                out.push(Piece::point(end.clone(), value.clone()));
            }
        }
        out
    }

    pub fn knots(&self) -> &[Q] {
        &self.knots
    }

    pub fn segments(&self) -> &[Affine] {
        &self.segments
    }

    pub fn point_values(&self) -> &[Q] {
        &self.points
    }

    /// Index of the open segment containing `x`, for `x` not a knot.
    fn segment_of(&self, x: &Q) -> usize {
        let idx = self.knots.partition_point(|k| k <= x);
        idx.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Value at `x`; the caller guarantees `x ∈ [0, 1]`.
    pub fn at(&self, x: &Q) -> Q {
        match self.knots.binary_search(x) {
            Ok(j) => self.points[j].clone(),
            Err(j) => self.segments[j.clamp(1, self.segments.len()) - 1].at(x),
        }
    }

    pub fn eval(&self, x: &Q) -> Result<Q> {
        domain_check(x)?;
        Ok(self.at(x))
    }

    /// One-sided limits; `None` where the side falls outside `[0, 1]`.
    pub fn limits(&self, x: &Q) -> Result<(Option<Q>, Option<Q>)> {
        domain_check(x)?;
        Ok(self.limits_unchecked(x))
    }

    pub(crate) fn limits_unchecked(&self, x: &Q) -> (Option<Q>, Option<Q>) {
        match self.knots.binary_search(x) {
            Ok(j) => {
                let left = (j > 0).then(|| self.segments[j - 1].at(x));
                let right = (j < self.segments.len()).then(|| self.segments[j].at(x));
                (left, right)
            }
            Err(_) => {
                let v = self.segments[self.segment_of(x)].at(x);
                (Some(v.clone()), Some(v))
            }
        }
    }

    /// Exact `∫ₐᵇ f`.
    pub fn integrate(&self, a: &Q, b: &Q) -> Result<Q> {
        domain_check(a)?;
        domain_check(b)?;
        if a > b {
            return Err(Error::Domain(format!(
                "integration bounds reversed: {} > {}",
                format_rational(a),
                format_rational(b)
            )));
        }
        Ok(self.integrate_unchecked(a, b))
    }

    pub(crate) fn integrate_unchecked(&self, a: &Q, b: &Q) -> Q {
        let mut total = zero();
        if a >= b {
            return total;
        }
        let first = self.segment_of(a);
        for j in first..self.segments.len() {
            if self.knots[j] >= *b {
                break;
            }
            let lo = if self.knots[j] > *a { &self.knots[j] } else { a };
            let hi = if self.knots[j + 1] < *b { &self.knots[j + 1] } else { b };
            if lo < hi {
                total += self.segments[j].integral(lo, hi);
            }
        }
        total
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments.iter().all(Affine::is_constant)
    }

    /// `F(x) = c0 + ∫₀ˣ f`, continuous and piecewise linear.
    pub fn antiderivative(&self, c0: Q) -> Result<PiecewiseFn> {
        if !self.is_piecewise_constant() {
            return Err(Error::Unsupported(
                "antiderivative of a piecewise-linear function would be piecewise quadratic".into(),
            ));
        }
        let mut value = c0;
        let mut points = vec![value.clone()];
        let mut segments = Vec::with_capacity(self.segments.len());
        for (j, seg) in self.segments.iter().enumerate() {
            let c = seg.intercept.clone();
            let start = &self.knots[j];
            segments.push(Affine::new(c.clone(), &value - &c * start));
            value += &c * (&self.knots[j + 1] - start);
            points.push(value.clone());
        }
        PiecewiseFn::from_parts(self.knots.clone(), segments, points)
    }

    /// Exact infimum and supremum over `[0, 1]`.
    pub fn range_bounds(&self) -> (Q, Q) {
        let mut values: Vec<Q> = self.points.clone();
        for (j, seg) in self.segments.iter().enumerate() {
            values.push(seg.at(&self.knots[j]));
            values.push(seg.at(&self.knots[j + 1]));
        }
        min_max(values)
    }

    /// Exact infimum and supremum over the half-open range `(lo, 1]`.
    pub fn range_bounds_above(&self, lo: &Q) -> Result<(Q, Q)> {
        domain_check(lo)?;
        if *lo >= one() {
            return Err(Error::Domain("empty range (lo, 1]".into()));
        }
        let mut values = Vec::new();
        for (j, k) in self.knots.iter().enumerate() {
            if k > lo {
                values.push(self.points[j].clone());
            }
        }
        for (j, seg) in self.segments.iter().enumerate() {
            if self.knots[j + 1] > *lo {
                let start = if self.knots[j] > *lo { &self.knots[j] } else { lo };
                values.push(seg.at(start));
                values.push(seg.at(&self.knots[j + 1]));
            }
        }
        Ok(min_max(values))
    }

    /// `g(x) = f(scale · x + shift)`, with breakpoints pulled back through the map.
    pub fn compose_affine(&self, scale: &Q, shift: &Q) -> Result<PiecewiseFn> {
        if !scale.is_positive() {
            return Err(Error::Domain("affine scale must be positive".into()));
        }
        let top = scale + shift;
        if shift.is_negative() || top > one() {
            return Err(Error::Domain(format!(
                "image [{}, {}] escapes [0, 1]",
                format_rational(shift),
                format_rational(&top)
            )));
        }
        let mut knots = vec![zero()];
        for k in &self.knots {
            if k > shift && *k < top {
                knots.push((k - shift) / scale);
            }
        }
        knots.push(one());
        let segments = knots
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / qi(2);
                let f = &self.segments[self.segment_of(&(scale * &mid + shift))];
                Affine::new(&f.slope * scale, &f.slope * shift + &f.intercept)
            })
            .collect();
        let points = knots.iter().map(|u| self.at(&(scale * u + shift))).collect();
        PiecewiseFn::from_parts(knots, segments, points)
    }

    fn zip_with(
        &self,
        other: &PiecewiseFn,
        seg_op: impl Fn(&Affine, &Affine) -> Affine,
        point_op: impl Fn(&Q, &Q) -> Q,
    ) -> PiecewiseFn {
        let knots = merge_knots(&self.knots, &other.knots);
        let two = qi(2);
        let segments = knots
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / &two;
                seg_op(&self.segments[self.segment_of(&mid)], &other.segments[other.segment_of(&mid)])
            })
            .collect();
        let points = knots.iter().map(|k| point_op(&self.at(k), &other.at(k))).collect();
        PiecewiseFn { knots, segments, points }
    }

    pub fn add(&self, other: &PiecewiseFn) -> PiecewiseFn {
        self.zip_with(other, Affine::add, |a, b| a + b)
    }

    pub fn sub(&self, other: &PiecewiseFn) -> PiecewiseFn {
        self.zip_with(other, Affine::sub, |a, b| a - b)
    }

    pub fn scale(&self, c: &Q) -> PiecewiseFn {
        PiecewiseFn {
            knots: self.knots.clone(),
            segments: self.segments.iter().map(|s| s.scale(c)).collect(),
            points: self.points.iter().map(|p| p * c).collect(),
        }
    }

    /// `x · f(x)` for piecewise-constant `f`.
    pub fn mul_identity(&self) -> Result<PiecewiseFn> {
        if !self.is_piecewise_constant() {
            return Err(Error::Unsupported("x·f(x) only supported for piecewise-constant f".into()));
        }
        Ok(PiecewiseFn {
            knots: self.knots.clone(),
            segments: self.segments.iter().map(|s| Affine::new(s.intercept.clone(), zero())).collect(),
            points: self.points.iter().zip(&self.knots).map(|(p, k)| p * k).collect(),
        })
    }

    /// Zeros of segment formulas strictly inside their segments.
    pub fn interior_roots(&self) -> Vec<Q> {
        self.segments
            .iter()
            .enumerate()
            .filter_map(|(j, s)| s.root().filter(|r| *r > self.knots[j] && *r < self.knots[j + 1]))
            .collect()
    }

    /// `max(f, 0)`, refining segments at their zero crossings.
    pub fn max_zero(&self) -> PiecewiseFn {
        let mut knots = vec![zero()];
        let mut segments = Vec::new();
        let mut points = vec![self.points[0].clone().max(zero())];
        for (j, seg) in self.segments.iter().enumerate() {
            let (a, b) = (&self.knots[j], &self.knots[j + 1]);
            let mut cuts = vec![a.clone()];
            if let Some(r) = seg.root().filter(|r| r > a && r < b) {
                cuts.push(r);
            }
            cuts.push(b.clone());
            for w in cuts.windows(2) {
                let mid = (&w[0] + &w[1]) / qi(2);
                segments.push(if seg.at(&mid).is_negative() { Affine::constant(zero()) } else { seg.clone() });
                knots.push(w[1].clone());
                points.push(if w[1] == *b { self.points[j + 1].clone().max(zero()) } else { zero() });
            }
        }
        PiecewiseFn { knots, segments, points }
    }

    /// Merges neighbouring segments that share a formula and a continuous knot.
    pub fn simplified(&self) -> PiecewiseFn {
        let mut knots = vec![self.knots[0].clone()];
        let mut segments: Vec<Affine> = vec![self.segments[0].clone()];
        let mut points = vec![self.points[0].clone()];
        for j in 1..self.segments.len() {
            let k = &self.knots[j];
            let prev = segments.last().expect("non-empty");
            if *prev == self.segments[j] && prev.at(k) == self.points[j] {
                continue;
            }
            knots.push(k.clone());
            points.push(self.points[j].clone());
            segments.push(self.segments[j].clone());
        }
        knots.push(one());
        points.push(self.points[self.points.len() - 1].clone());
        PiecewiseFn { knots, segments, points }
    }

    /// True when both functions take the same value at every point of `[0, 1]`.
    pub fn equivalent(&self, other: &PiecewiseFn) -> bool {
        let diff = self.sub(other);
        diff.segments.iter().all(Affine::is_zero) && diff.points.iter().all(Signs::is_zero)
    }

    pub fn is_continuous(&self) -> bool {
        self.knots.iter().all(|k| {
            let (l, r) = self.limits_unchecked(k);
            let v = self.at(k);
            l.is_none_or(|l| l == v) && r.is_none_or(|r| r == v)
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.range_bounds().0.is_negative()
    }

    /// The function's values in left-to-right order: knot value, segment start
    /// limit, segment end limit, next knot value, …
    fn value_sequence(&self) -> Vec<Q> {
        let mut seq = Vec::with_capacity(3 * self.segments.len() + 1);
        for (j, seg) in self.segments.iter().enumerate() {
            seq.push(self.points[j].clone());
            seq.push(seg.at(&self.knots[j]));
            seq.push(seg.at(&self.knots[j + 1]));
        }
        seq.push(self.points[self.points.len() - 1].clone());
        seq
    }

    /// Index pairs (in piece order) where the direction is violated, if any.
    pub fn monotonicity_violation(&self, dir: Direction) -> Option<(Q, Q)> {
        let seq = self.value_sequence();
        seq.windows(2)
            .find(|w| match dir {
                Direction::NonIncreasing => w[1] > w[0],
                Direction::NonDecreasing => w[1] < w[0],
            })
            .map(|w| (w[0].clone(), w[1].clone()))
    }

    pub fn is_monotone(&self, dir: Direction) -> bool {
        self.monotonicity_violation(dir).is_none()
    }
}

fn min_max(values: Vec<Q>) -> (Q, Q) {
    let mut it = values.into_iter();
    let first = it.next().expect("a function has at least one value");
    it.fold((first.clone(), first), |(lo, hi), v| {
        if v < lo {
            (v, hi)
        } else if v > hi {
            (lo, v)
        } else {
            (lo, hi)
        }
    })
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_affine = |a: &Affine| {
            if a.is_constant() {
                format_rational(&a.intercept)
            } else {
                format!("{}·x + {}", format_rational(&a.slope), format_rational(&a.intercept))
            }
        };
        let mut start = zero();
        let mut start_closed = true;
        f.write_str("{")?;
        for (i, p) in self.to_pieces().iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            if p.end == start {
                write!(f, "{} at {}", fmt_affine(&p.formula), format_rational(&p.end))?;
                start_closed = false;
            } else {
                write!(
                    f,
                    "{} on {}{}, {}{}",
                    fmt_affine(&p.formula),
                    if start_closed { "[" } else { "(" },
                    format_rational(&start),
                    format_rational(&p.end),
                    if p.include_end { "]" } else { ")" }
                )?;
                start_closed = !p.include_end;
                start = p.end.clone();
            }
        }
        f.write_str("}")
    }
}

/// A piecewise function certified monotone in the declared direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneFn {
    inner: PiecewiseFn,
    direction: Direction,
}

impl MonotoneFn {
    pub fn new(inner: PiecewiseFn, direction: Direction) -> Result<Self> {
        if let Some((a, b)) = inner.monotonicity_violation(direction) {
            return Err(Error::InvalidFunction(format!(
                "function is not {:?}: value {} is followed by {}",
                direction,
                format_rational(&a),
                format_rational(&b)
            )));
        }
        Ok(MonotoneFn { inner, direction })
    }

    pub fn non_increasing(inner: PiecewiseFn) -> Result<Self> {
        MonotoneFn::new(inner, Direction::NonIncreasing)
    }

    pub fn inner(&self) -> &PiecewiseFn {
        &self.inner
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn at(&self, x: &Q) -> Q {
        self.inner.at(x)
    }

    /// One-sided limits with the boundary convention of a monotone function
    /// extended outside `[0, 1]`: for a non-increasing function the left limit
    /// at 0 is `+∞` and the right limit at 1 is `−∞` (mirrored otherwise).
    pub fn limits(&self, x: &Q) -> Result<(Ext, Ext)> {
        domain_check(x)?;
        Ok(self.limits_unchecked(x))
    }

    pub(crate) fn limits_unchecked(&self, x: &Q) -> (Ext, Ext) {
        let (l, r) = self.inner.limits_unchecked(x);
        let (below, above) = match self.direction {
            Direction::NonIncreasing => (Ext::PosInf, Ext::NegInf),
            Direction::NonDecreasing => (Ext::NegInf, Ext::PosInf),
        };
        (l.map_or(below, Ext::Finite), r.map_or(above, Ext::Finite))
    }
}
