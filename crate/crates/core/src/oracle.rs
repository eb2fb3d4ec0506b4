//! Brute-force grid checks for the analytic equilibrium set and optimum.
//!
//! The grid is `{0, r, 2r, …, 1}` augmented with every breakpoint of `α`, of
//! the effective tax and of the social-cost slope, so that between two
//! consecutive samples all three are affine. An equilibrium hiding strictly
//! between samples is then exactly a sign change of `α − T`, which the oracle
//! records as a crossing cell.

use crate::error::{Error, Result};
use crate::game::{EquilibriumSet, GameInstance};
use crate::rational::{format_rational, one, q, zero, Signs, Q};

pub const DEFAULT_RESOLUTION: (i64, i64) = (1, 10_000);

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub resolution: Q,
    pub optimum_cell: Q,
    pub optimum_value: Q,
    /// Grid points satisfying the sandwich condition.
    pub equilibrium_cells: Vec<Q>,
    /// Consecutive grid points `(p, q)` with an equilibrium strictly between them.
    pub crossing_cells: Vec<(Q, Q)>,
}

fn check_resolution(r: &Q) -> Result<()> {
    if !r.is_positive() || *r > q(1, 100) {
        return Err(Error::Domain(format!("resolution must lie in (0, 1/100], got {}", format_rational(r))));
    }
    Ok(())
}

/// Sorted grid `{i·r} ∪ breakpoints`.
pub fn grid_points(g: &GameInstance, r: &Q) -> Result<Vec<Q>> {
    check_resolution(r)?;
    let mut pts = Vec::new();
    let mut x = zero();
    while x < one() {
        pts.push(x.clone());
        x += r;
    }
    pts.push(one());
    pts.extend(g.alpha().inner().knots().iter().cloned());
    pts.extend(g.effective_tax().knots().iter().cloned());
    pts.extend(g.social_cost_slope().knots().iter().cloned());
    pts.sort();
    pts.dedup();
    Ok(pts)
}

/// Smallest sampled social cost and its first location.
pub fn grid_optimum(g: &GameInstance, r: &Q) -> Result<(Q, Q)> {
    let pts = grid_points(g, r)?;
    Ok(argmin(g, &pts))
}

fn argmin(g: &GameInstance, pts: &[Q]) -> (Q, Q) {
    let mut best: Option<(Q, Q)> = None;
    for p in pts {
        let v = g.sc(p);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((p.clone(), v));
        }
    }
    best.expect("grid is never empty")
}

/// Equilibrium grid points and sign-change cells `(p, q)`.
pub type GridEquilibria = (Vec<Q>, Vec<(Q, Q)>);

/// Grid points passing the sandwich, plus sign-change cells.
pub fn grid_equilibria(g: &GameInstance, r: &Q) -> Result<GridEquilibria> {
    let pts = grid_points(g, r)?;
    Ok(scan_equilibria(g, &pts))
}

fn scan_equilibria(g: &GameInstance, pts: &[Q]) -> GridEquilibria {
    let alpha = g.alpha().inner();
    let t = g.effective_tax();
    let cells = pts.iter().filter(|p| g.is_equilibrium(p)).cloned().collect();
    let mut crossings = Vec::new();
    for w in pts.windows(2) {
        let right_of_p = alpha.limits_unchecked(&w[0]).1.zip(t.limits_unchecked(&w[0]).1).map(|(a, b)| a - b);
        let left_of_q = alpha.limits_unchecked(&w[1]).0.zip(t.limits_unchecked(&w[1]).0).map(|(a, b)| a - b);
        if let (Some(a), Some(b)) = (right_of_p, left_of_q) {
            if (a.is_positive() && b.is_negative()) || (a.is_negative() && b.is_positive()) {
                crossings.push((w[0].clone(), w[1].clone()));
            }
        }
    }
    (cells, crossings)
}

pub fn grid_report(g: &GameInstance, r: &Q) -> Result<GridReport> {
    let pts = grid_points(g, r)?;
    let (optimum_cell, optimum_value) = argmin(g, &pts);
    let (equilibrium_cells, crossing_cells) = scan_equilibria(g, &pts);
    Ok(GridReport { resolution: r.clone(), optimum_cell, optimum_value, equilibrium_cells, crossing_cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleDiff {
    pub grid: GridReport,
    pub analytic: EquilibriumSet,
    pub x_star: Q,
    pub sc_star: Q,
    pub discrepancies: Vec<String>,
}

impl OracleDiff {
    pub fn agrees(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

fn distance_to_set(x: &Q, set: &EquilibriumSet) -> Option<Q> {
    let mut best: Option<Q> = None;
    let mut see = |d: Q| {
        if best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    };
    for p in &set.points {
        see((x - p).abs());
    }
    for iv in &set.intervals {
        see(if *x < iv.lo {
            &iv.lo - x
        } else if *x > iv.hi {
            x - &iv.hi
        } else {
            zero()
        });
    }
    best
}

/// Runs both oracles and lists every disagreement beyond one grid cell.
pub fn verify(g: &GameInstance, r: &Q) -> Result<OracleDiff> {
    let grid = grid_report(g, r)?;
    let analytic = g.equilibrium_set();
    let (x_star, sc_star) = g.social_optimum();
    let discrepancies = compare(g, &grid, &analytic, &sc_star);
    Ok(OracleDiff { grid, analytic, x_star, sc_star, discrepancies })
}

/// Disagreements between a grid report and claimed analytic results.
pub fn compare(g: &GameInstance, grid: &GridReport, analytic: &EquilibriumSet, sc_star: &Q) -> Vec<String> {
    let r = &grid.resolution;
    let mut discrepancies = Vec::new();
    let fmt = format_rational;

    let gap = &grid.optimum_value - sc_star;
    if gap.is_negative() {
        discrepancies.push(format!(
            "grid optimum {} at {} undercuts analytic SC* {}",
            fmt(&grid.optimum_value),
            fmt(&grid.optimum_cell),
            fmt(sc_star)
        ));
    } else if gap > g.sc_slope_bound() * r {
        discrepancies.push(format!(
            "grid optimum {} exceeds analytic SC* {} by more than one cell's slope",
            fmt(&grid.optimum_value),
            fmt(sc_star)
        ));
    }

    let near_grid = |x: &Q| {
        grid.equilibrium_cells.iter().any(|c| (c - x).abs() <= *r)
            || grid.crossing_cells.iter().any(|(a, b)| a <= x && x <= b)
    };
    for p in &analytic.points {
        if !near_grid(p) {
            discrepancies.push(format!("analytic equilibrium {} has no grid equilibrium within one cell", fmt(p)));
        }
    }
    for iv in &analytic.intervals {
        for end in [&iv.lo, &iv.hi] {
            if !near_grid(end) {
                discrepancies.push(format!(
                    "analytic interval [{}, {}] end {} has no grid equilibrium within one cell",
                    fmt(&iv.lo),
                    fmt(&iv.hi),
                    fmt(end)
                ));
            }
        }
    }
    let within = |x: &Q| distance_to_set(x, analytic).is_some_and(|d| d <= *r);
    for c in &grid.equilibrium_cells {
        if !within(c) {
            discrepancies.push(format!("grid equilibrium {} is missing from the analytic set", fmt(c)));
        }
    }
    for (a, b) in &grid.crossing_cells {
        let hit = analytic.points.iter().any(|p| a < p && p < b) || (within(a) && within(b));
        if !hit {
            discrepancies.push(format!(
                "grid sign change in ({}, {}) is missing from the analytic set",
                fmt(a),
                fmt(b)
            ));
        }
    }
    discrepancies
}
