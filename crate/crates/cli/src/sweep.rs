//! Randomised and gridded instance sweeps. Each instance draws from its own
//! RNG stream, so verdicts do not depend on worker scheduling; rows come back
//! in key order.

use std::fmt;
use std::str::FromStr;

use pgcg_core::adversary::sqrth_adversary;
use pgcg_core::bounds::{check_adversary, check_gamma_upper, check_pigouvian, check_sqrth_upper, price_of_anarchy};
use pgcg_core::families::{
    instance_rng, lh_l_prime, nondecreasing_step_l_prime, random_alpha, random_game, random_shared_preset,
    shared_presets, sigmoid_l_prime, signed_continuous_tax, step_alpha, step_l_prime,
};
use pgcg_core::oracle::verify;
use pgcg_core::rational::{format_rational, q, Q};
use pgcg_core::taxes::{
    best_monotone_minorant, constant_sqrt_tax, gamma_tax, pigouvian_tax, truncate_subsidy, TaxScheme,
};
use pgcg_core::{Ext, GameInstance, Technology};
use rand::Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::report::{SweepReport, SweepRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `√H` construction over a grid of `H`, `ε` and taxes.
    Adversary,
    /// Non-decreasing step `l′` under the Pigouvian tax: PoA = 1.
    Pigouvian,
    /// Bounded-ratio step `l′` under the constant geometric-mean tax: PoA ≤ √H.
    ConstantSqrt,
    /// Bounded-ratio step `l′` under the Pigouvian tax: PoA ≤ H.
    PigouvianLh,
    /// Bump-shaped `l′` under the γ-envelope tax: PoA ≤ γ.
    Gamma,
    /// Continuous signed taxes: truncating subsidies never raises PoA.
    Truncation,
    /// Random games checked against the grid oracle.
    Oracle,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Adversary,
        Family::Pigouvian,
        Family::ConstantSqrt,
        Family::PigouvianLh,
        Family::Gamma,
        Family::Truncation,
        Family::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Adversary => "adversary",
            Family::Pigouvian => "pigouvian",
            Family::ConstantSqrt => "constant-sqrt",
            Family::PigouvianLh => "pigouvian-lh",
            Family::Gamma => "gamma",
            Family::Truncation => "truncation",
            Family::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Family::ALL.iter().map(Family::name).collect();
            format!("unknown family {s:?} (expected one of {})", names.join(", "))
        })
    }
}

/// Settings for one sweep.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub family: Family,
    pub count: usize,
    pub seed: u64,
    /// Grid axes for [`Family::Adversary`].
    pub h_values: Vec<Q>,
    pub eps_values: Vec<Q>,
    pub taxes: Vec<TaxScheme>,
    /// Oracle resolution for [`Family::Oracle`].
    pub resolution: Q,
}

impl SweepConfig {
    pub fn new(family: Family, count: usize, seed: u64) -> Self {
        SweepConfig {
            family,
            count,
            seed,
            h_values: vec![q(4, 1), q(16, 1), q(100, 1)],
            eps_values: vec![q(1, 100), q(1, 1000), q(1, 10_000)],
            taxes: vec![TaxScheme::Pigouvian, TaxScheme::ConstantSqrt, TaxScheme::Zero],
            resolution: q(1, 10_000),
        }
    }
}

fn row(key: usize, family: Family, params: String, poa: &Ext, bound: &Ext, sense: &str, pass: bool) -> SweepRow {
    SweepRow {
        key: format!("{key:05}"),
        family: family.name().into(),
        params,
        poa: poa.into(),
        bound: bound.into(),
        sense: sense.into(),
        pass,
    }
}

pub fn tax_label(t: &TaxScheme) -> String {
    match t {
        TaxScheme::Constant(c) => format!("constant:{}", format_rational(c)),
        other => other.name().to_string(),
    }
}

/// Runs one instance of a randomised family.
pub fn random_instance(family: Family, seed: u64, index: usize, resolution: &Q) -> Result<SweepRow, CliError> {
    let mut rng = instance_rng(seed, index as u64);
    let rng = &mut rng;
    match family {
        Family::Adversary => Err(CliError::input("family", "the adversary family is a grid, not a random family")),
        Family::Pigouvian => {
            let presets = shared_presets();
            let tech = presets[index % presets.len()].clone();
            let pieces = rng.gen_range(3..=10);
            let lp = nondecreasing_step_l_prime(rng, pieces);
            let g = GameInstance::new(
                lp.clone(),
                q(rng.gen_range(0..=4), 4),
                step_alpha(rng),
                pigouvian_tax(&lp, &tech),
                tech,
            )?;
            let v = check_pigouvian(&g)?;
            Ok(row(index, family, preset_label(g.tech()), &v.poa, &v.bound, "equal", v.poa == Ext::Finite(q(1, 1))))
        }
        Family::ConstantSqrt | Family::PigouvianLh => {
            let tech = random_shared_preset(rng);
            let lp = lh_l_prime(rng, &tech, 10);
            let alpha = random_alpha(rng);
            let l0 = q(rng.gen_range(0..=4), 4);
            let (g, v) = if family == Family::ConstantSqrt {
                let g = GameInstance::new(lp.clone(), l0, alpha, constant_sqrt_tax(&lp, &tech)?, tech)?;
                let v = check_sqrth_upper(&g)?;
                (g, v)
            } else {
                let g = GameInstance::new(lp.clone(), l0, alpha, pigouvian_tax(&lp, &tech), tech)?;
                let v = check_pigouvian(&g)?;
                (g, v)
            };
            let h = pgcg_core::taxes::derivative_ratio(g.l_prime(), g.tech());
            Ok(row(index, family, format!("{} H={h}", preset_label(g.tech())), &v.poa, &v.bound, v.sense, v.pass))
        }
        Family::Gamma => {
            let tech = random_shared_preset(rng);
            let lp = sigmoid_l_prime(rng);
            let env = best_monotone_minorant(&lp)?;
            let g = GameInstance::new(lp, q(rng.gen_range(0..=4), 4), random_alpha(rng), gamma_tax(&env, &tech), tech)?;
            let v = check_gamma_upper(&g, &env)?;
            Ok(row(
                index,
                family,
                format!("{} gamma={}", preset_label(g.tech()), format_rational(&env.gamma)),
                &v.poa,
                &v.bound,
                v.sense,
                v.pass,
            ))
        }
        Family::Truncation => {
            let tech = random_shared_preset(rng);
            let pieces = rng.gen_range(1..=5);
            let lp = step_l_prime(rng, pieces);
            let t = signed_continuous_tax(rng);
            let g = GameInstance::new_with_subsidy(lp, q(rng.gen_range(0..=4), 4), random_alpha(rng), t.clone(), tech)?;
            let truncated = truncate_subsidy(&t);
            let before = price_of_anarchy(&g).poa;
            let after = price_of_anarchy(&g.with_tax(truncated.tax)?).poa;
            let pass = after <= before;
            Ok(row(index, family, preset_label(g.tech()), &after, &before, "upper", pass))
        }
        Family::Oracle => {
            let g = random_game(rng)?;
            let d = verify(&g, resolution)?;
            let params = format!("{} discrepancies={}", preset_label(g.tech()), d.discrepancies.len());
            let zero = Ext::Finite(q(0, 1));
            let found = Ext::Finite(q(d.discrepancies.len() as i64, 1));
            Ok(row(index, family, params, &found, &zero, "upper", d.agrees()))
        }
    }
}

fn preset_label(t: &Technology) -> String {
    match t.kind() {
        pgcg_core::ModelKind::Train => "train".into(),
        _ => format!("kappa={} tau={}", format_rational(t.kappa()), format_rational(t.tau())),
    }
}

fn adversary_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    let mut grid = Vec::new();
    for h in &cfg.h_values {
        for eps in &cfg.eps_values {
            for t in &cfg.taxes {
                grid.push((h.clone(), eps.clone(), t.clone()));
            }
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, (h, eps, t))| {
            let a = sqrth_adversary(h, eps, t)?;
            let v = check_adversary(&a);
            let params = format!(
                "H={} eps={} tax={} {}",
                format_rational(h),
                format_rational(eps),
                tax_label(t),
                a.case.label()
            );
            Ok(row(i, Family::Adversary, params, &v.poa, &v.bound, v.sense, v.pass))
        })
        .collect()
}

/// Runs a sweep and collects its verdict table.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, CliError> {
    let rows = match cfg.family {
        Family::Adversary => adversary_rows(cfg)?,
        f => (0..cfg.count)
            .into_par_iter()
            .map(|i| random_instance(f, cfg.seed, i, &cfg.resolution))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let failures = rows.iter().filter(|r| !r.pass).count();
    Ok(SweepReport { report: "sweep", family: cfg.family.name().into(), instances: rows.len(), failures, rows })
}
