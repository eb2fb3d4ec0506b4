//! JSON shapes emitted by the subcommands. Every exact number is written as a
//! canonical rational string (`"3/8"`, `"inf"`) with a float approximation
//! beside it. `schema/reports.schema.json` documents and validates them.

use pgcg_core::adversary::AdversarialInstance;
use pgcg_core::bounds::{PoaReport, Verdict};
use pgcg_core::dynamics::DynamicsTrace;
use pgcg_core::oracle::OracleDiff;
use pgcg_core::rational::{format_rational, to_f64};
use pgcg_core::{EquilibriumSet, Ext, PiecewiseFn, Q};
use serde::Serialize;

use crate::scenario::{fn_specs, PieceSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Number {
    pub exact: String,
    pub approx: f64,
}

impl From<&Q> for Number {
    fn from(q: &Q) -> Self {
        Number { exact: format_rational(q), approx: to_f64(q) }
    }
}

impl From<&Ext> for Number {
    fn from(e: &Ext) -> Self {
        Number { exact: e.to_string(), approx: e.to_f64() }
    }
}

fn nums(v: &[Q]) -> Vec<Number> {
    v.iter().map(Number::from).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalJson {
    pub lo: Number,
    pub hi: Number,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EqReport {
    pub report: &'static str,
    pub scenario: String,
    pub points: Vec<Number>,
    pub intervals: Vec<IntervalJson>,
    pub knife_edges: Vec<Number>,
}

impl EqReport {
    pub fn new(scenario: &str, eq: &EquilibriumSet) -> Self {
        EqReport {
            report: "eq",
            scenario: scenario.into(),
            points: nums(&eq.points),
            intervals: eq
                .intervals
                .iter()
                .map(|iv| IntervalJson {
                    lo: (&iv.lo).into(),
                    hi: (&iv.hi).into(),
                    lo_closed: iv.lo_closed,
                    hi_closed: iv.hi_closed,
                })
                .collect(),
            knife_edges: nums(&eq.knife_edges),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimumReport {
    pub report: &'static str,
    pub scenario: String,
    pub x_star: Number,
    pub sc_star: Number,
}

impl OptimumReport {
    pub fn new(scenario: &str, x: &Q, sc: &Q) -> Self {
        OptimumReport { report: "optimum", scenario: scenario.into(), x_star: x.into(), sc_star: sc.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckJson {
    pub theorem: &'static str,
    pub sense: &'static str,
    pub bound: Number,
    pub pass: bool,
}

impl CheckJson {
    pub fn new(theorem: &'static str, v: &Verdict) -> Self {
        CheckJson { theorem, sense: v.sense, bound: (&v.bound).into(), pass: v.pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoaJson {
    pub report: &'static str,
    pub scenario: String,
    pub tax: String,
    pub include_knife_edges: bool,
    pub poa: Number,
    pub worst_equilibrium: Option<Number>,
    pub sc_worst: Option<Number>,
    pub optimum: Number,
    pub sc_opt: Number,
    pub equilibria_count: usize,
    pub knife_edge_count: usize,
    /// The guarantee that applies to the tax scheme, if any.
    pub check: Option<CheckJson>,
}

impl PoaJson {
    pub fn new(scenario: &str, tax: &str, include_knife_edges: bool, r: &PoaReport, check: Option<CheckJson>) -> Self {
        PoaJson {
            report: "poa",
            scenario: scenario.into(),
            tax: tax.into(),
            include_knife_edges,
            poa: (&r.poa).into(),
            worst_equilibrium: r.worst_equilibrium.as_ref().map(Number::from),
            sc_worst: r.sc_worst.as_ref().map(Number::from),
            optimum: (&r.optimum).into(),
            sc_opt: (&r.sc_opt).into(),
            equilibria_count: r.equilibria_count,
            knife_edge_count: r.knife_edge_count,
            check,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaxReport {
    pub report: &'static str,
    pub scenario: String,
    pub scheme: String,
    pub pieces: Vec<PieceSpec>,
    /// The tax as the car users pay it, `(1−τ)·t(κ(x))`, or `l + t` for the train.
    pub effective: Vec<PieceSpec>,
    pub gamma: Option<Number>,
    pub derivative_ratio: Number,
}

impl TaxReport {
    pub fn new(
        scenario: &str,
        scheme: &str,
        t: &PiecewiseFn,
        effective: &PiecewiseFn,
        gamma: Option<&Q>,
        h: &Ext,
    ) -> Self {
        TaxReport {
            report: "tax",
            scenario: scenario.into(),
            scheme: scheme.into(),
            pieces: fn_specs(t),
            effective: fn_specs(effective),
            gamma: gamma.map(Number::from),
            derivative_ratio: h.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdversaryReport {
    pub report: &'static str,
    pub family: String,
    pub tax: String,
    pub case: &'static str,
    pub witness: Number,
    pub witness_is_equilibrium: bool,
    pub bound: Number,
    pub poa: Number,
    pub sc_witness: Number,
    pub sc_opt: Number,
    pub pass: bool,
    /// The generated game as a scenario document.
    pub scenario: String,
}

impl AdversaryReport {
    pub fn new(family: &str, tax: &str, a: &AdversarialInstance, v: &Verdict, r: &PoaReport, scenario: String) -> Self {
        AdversaryReport {
            report: "adversary",
            family: family.into(),
            tax: tax.into(),
            case: a.case.label(),
            witness: (&a.witness).into(),
            witness_is_equilibrium: a.game.is_equilibrium(&a.witness),
            bound: (&a.claimed_bound).into(),
            poa: (&v.poa).into(),
            sc_witness: (&a.game.sc(&a.witness)).into(),
            sc_opt: (&r.sc_opt).into(),
            pass: v.pass,
            scenario,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateReport {
    pub report: &'static str,
    pub scenario: String,
    pub n: usize,
    pub x0: Number,
    pub seed: u64,
    pub converged: bool,
    pub steps_taken: u64,
    pub final_x: Number,
    pub final_is_equilibrium: bool,
}

impl SimulateReport {
    pub fn new(scenario: &str, n: usize, x0: &Q, seed: u64, t: &DynamicsTrace) -> Self {
        SimulateReport {
            report: "simulate",
            scenario: scenario.into(),
            n,
            x0: x0.into(),
            seed,
            converged: t.converged,
            steps_taken: t.steps_taken,
            final_x: (&t.final_x).into(),
            final_is_equilibrium: t.final_is_equilibrium,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub report: &'static str,
    pub scenario: String,
    pub resolution: Number,
    pub grid_points: usize,
    pub grid_optimum: Number,
    pub grid_optimum_value: Number,
    pub analytic_optimum: Number,
    pub analytic_sc_star: Number,
    pub equilibrium_cells: usize,
    pub crossing_cells: usize,
    pub discrepancies: Vec<String>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(scenario: &str, grid_points: usize, d: &OracleDiff) -> Self {
        VerifyReport {
            report: "verify",
            scenario: scenario.into(),
            resolution: (&d.grid.resolution).into(),
            grid_points,
            grid_optimum: (&d.grid.optimum_cell).into(),
            grid_optimum_value: (&d.grid.optimum_value).into(),
            analytic_optimum: (&d.x_star).into(),
            analytic_sc_star: (&d.sc_star).into(),
            equilibrium_cells: d.grid.equilibrium_cells.len(),
            crossing_cells: d.grid.crossing_cells.len(),
            discrepancies: d.discrepancies.clone(),
            pass: d.agrees(),
        }
    }
}

/// One row of a `sweep` table.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub key: String,
    pub family: String,
    pub params: String,
    pub poa: Number,
    pub bound: Number,
    pub sense: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub report: &'static str,
    pub family: String,
    pub instances: usize,
    pub failures: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "key,family,params,poa,poa_approx,bound,bound_approx,sense,pass";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.key, r.family, r.params, r.poa.exact, r.poa.approx, r.bound.exact, r.bound.approx, r.sense, r.pass
            ));
        }
        out
    }
}
