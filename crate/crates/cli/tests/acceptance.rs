//! Acceptance gate: the nine end-to-end criteria, each at its stated
//! tolerance and runtime budget. Every criterion prints one `PASS`/`FAIL`
//! line (written straight to stderr so it shows even when output is captured).

use std::io::Write;
use std::time::{Duration, Instant};

use pgcg_cli::bundled;
use pgcg_cli::sweep::{random_instance, Family};
use pgcg_core::adversary::{pigouvian_gap_instance, sqrth_adversary, train_adversary};
use pgcg_core::bounds::price_of_anarchy;
use pgcg_core::dynamics::{DynamicsModel, DEFAULT_MAX_STEPS};
use pgcg_core::families::{bistable, instance_rng, random_constant};
use pgcg_core::oracle::verify;
use pgcg_core::rational::{format_rational, q, qi};
use pgcg_core::taxes::TaxScheme;
use pgcg_core::{Ext, Q};
use rayon::prelude::*;

struct Outcome {
    failures: Vec<String>,
    summary: String,
}

fn gate(id: u32, title: &str, budget_secs: u64, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_budget = elapsed < Duration::from_secs(budget_secs);
    let pass = out.failures.is_empty() && in_budget;
    let mut line = format!(
        "[acceptance] criterion {id} {} {title}: {} ({:.2}s / {budget_secs}s)\n",
        if pass { "PASS" } else { "FAIL" },
        out.summary,
        elapsed.as_secs_f64()
    );
    for f in out.failures.iter().take(12) {
        line.push_str(&format!("[acceptance]     {f}\n"));
    }
    if out.failures.len() > 12 {
        line.push_str(&format!("[acceptance]     … {} more\n", out.failures.len() - 12));
    }
    std::io::stderr().write_all(line.as_bytes()).ok();
    assert!(in_budget, "criterion {id} exceeded its {budget_secs}s budget ({elapsed:?})");
    assert!(out.failures.is_empty(), "criterion {id} failed: {} failing cases", out.failures.len());
}

/// Runs `count` instances of a sweep family and collects the failing rows.
fn family_sweep(family: Family, count: usize, seed: u64) -> (usize, Vec<String>) {
    let rows: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| random_instance(family, seed, i, &q(1, 10_000)))
        .collect::<Result<_, _>>()
        .expect("generated instances are valid");
    let failures = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("#{} {}: poa {} vs bound {}", r.key, r.params, r.poa.exact, r.bound.exact))
        .collect();
    (rows.len(), failures)
}

#[test]
fn criterion_1_pigouvian_is_efficient_for_convex_externalities() {
    gate(1, "Pigouvian PoA = 1 on non-decreasing l′", 10, || {
        let (n, failures) = family_sweep(Family::Pigouvian, 500, 101);
        Outcome { summary: format!("{n} instances over 9 presets, {} with PoA ≠ 1", failures.len()), failures }
    });
}

#[test]
fn criterion_2_constant_sqrt_tax_upper_bound() {
    gate(2, "constant √H tax gives PoA ≤ √H", 30, || {
        let (n, failures) = family_sweep(Family::ConstantSqrt, 1000, 202);
        Outcome { summary: format!("{n} instances with H ∈ [1, 100], {} above √H", failures.len()), failures }
    });
}

#[test]
fn criterion_3_sqrt_h_lower_bound_construction() {
    gate(3, "√H adversary reaches √H·(1 − 5ε√H)", 5, || {
        let roots = [2i64, 4, 10];
        let eps = [q(1, 100), q(1, 1000), q(1, 10_000)];
        let mut cases = Vec::new();
        for (ri, r) in roots.iter().enumerate() {
            for (ei, e) in eps.iter().enumerate() {
                let c = random_constant(&mut instance_rng(303, (ri * 3 + ei) as u64));
                for t in [TaxScheme::Pigouvian, TaxScheme::ConstantSqrt, TaxScheme::Zero, TaxScheme::Constant(c)] {
                    cases.push((*r, e.clone(), t));
                }
            }
        }
        let failures: Vec<String> = cases
            .par_iter()
            .filter_map(|(r, e, t)| {
                let root = qi(*r);
                let a = sqrth_adversary(&(&root * &root), e, t).expect("valid parameters");
                let poa = price_of_anarchy(&a.game).poa;
                let floor = &root * (qi(1) - qi(5) * e * &root);
                let mut bad = Vec::new();
                if poa < floor {
                    bad.push(format!("PoA {:.4} < required {:.4}", poa.to_f64(), Ext::Finite(floor).to_f64()));
                }
                if *t == TaxScheme::ConstantSqrt && poa > Ext::Finite(root.clone()) {
                    bad.push(format!("PoA {:.4} > √H", poa.to_f64()));
                }
                let label = match t {
                    TaxScheme::Constant(c) => format!("constant:{}", format_rational(c)),
                    other => other.name().to_string(),
                };
                (!bad.is_empty()).then(|| {
                    format!("H={} ε={} tax={label} {}: {}", r * r, format_rational(e), a.case.label(), bad.join(", "))
                })
            })
            .collect();
        Outcome { summary: format!("{} instances, {} short of the bound", cases.len(), failures.len()), failures }
    });
}

#[test]
fn criterion_4_pigouvian_gap_and_h_upper_bound() {
    gate(4, "Pigouvian gap reaches 0.98·H; PoA ≤ H on the bounded-ratio family", 10, || {
        let a = pigouvian_gap_instance(&qi(10), &q(1, 1000)).expect("valid parameters");
        let poa = price_of_anarchy(&a.game).poa;
        let mut failures = Vec::new();
        if poa < Ext::Finite(q(98, 10)) {
            failures.push(format!("gap instance PoA {:.4} < 9.8", poa.to_f64()));
        }
        let (n, mut sweep) = family_sweep(Family::PigouvianLh, 500, 404);
        failures.append(&mut sweep);
        Outcome {
            summary: format!("gap PoA {:.4}; {n} bounded-ratio instances, {} failing", poa.to_f64(), failures.len()),
            failures,
        }
    });
}

#[test]
fn criterion_5_gamma_envelope_upper_bound() {
    gate(5, "γ-envelope tax gives PoA ≤ γ", 10, || {
        let (n, failures) = family_sweep(Family::Gamma, 200, 505);
        Outcome { summary: format!("{n} bump-shaped l′ instances, {} above γ", failures.len()), failures }
    });
}

#[test]
fn criterion_6_train_lower_bound() {
    gate(6, "train adversary reaches Z·(1 − 2ε)", 5, || {
        let eps = q(1, 100);
        let mut taxes = vec![TaxScheme::Zero];
        for c in [q(1, 10), q(1, 2), qi(1), qi(2)] {
            taxes.push(TaxScheme::Constant(c));
        }
        for i in 0..4 {
            taxes.push(TaxScheme::Constant(random_constant(&mut instance_rng(606, i))));
        }
        let mut failures = Vec::new();
        let mut count = 0;
        let mut worst = f64::INFINITY;
        for z in [qi(5), qi(20)] {
            for t in &taxes {
                count += 1;
                let a = train_adversary(&z, &eps, t).expect("valid parameters");
                let poa = price_of_anarchy(&a.game).poa;
                let floor: Q = &z * (qi(1) - qi(2) * &eps);
                worst = worst.min(poa.to_f64() / z_f64(&z));
                if poa < floor {
                    failures.push(format!(
                        "Z={} tax={:?} {}: PoA {:.4} < {:.4}",
                        format_rational(&z),
                        t,
                        a.case.label(),
                        poa.to_f64(),
                        Ext::Finite(floor).to_f64()
                    ));
                }
            }
        }
        Outcome { summary: format!("{count} instances, min PoA/Z = {worst:.4}"), failures }
    });
}

fn z_f64(z: &Q) -> f64 {
    Ext::Finite(z.clone()).to_f64()
}

#[test]
fn criterion_7_subsidy_truncation() {
    gate(7, "truncating subsidies never raises PoA", 15, || {
        let (n, failures) = family_sweep(Family::Truncation, 300, 707);
        Outcome { summary: format!("{n} continuous signed taxes, {} violations", failures.len()), failures }
    });
}

#[test]
fn criterion_8_best_response_basins() {
    gate(8, "best-response dynamics basins", 60, || {
        let g = bistable(&q(1, 2)).expect("valid instance");
        let model = DynamicsModel::new(&g, 1000).expect("valid population");
        let starts = [q(5, 100), q(10, 100), q(50, 100), q(115, 1000), q(125, 1000)];
        let runs: Vec<(usize, u64, Q, bool)> = starts
            .iter()
            .enumerate()
            .flat_map(|(si, _)| (0..100u64).map(move |seed| (si, seed)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(si, seed)| {
                let t = model.run(&starts[si], seed, DEFAULT_MAX_STEPS).expect("valid run");
                (si, seed, t.final_x, t.converged)
            })
            .collect();
        let low = |x: &Q| *x >= q(5, 100) && *x <= q(7, 100);
        let mut failures = Vec::new();
        let mut counts = [0usize; 5];
        for (si, seed, x, converged) in &runs {
            let x0 = format_rational(&starts[*si]);
            if !converged {
                failures.push(format!("x0={x0} seed={seed} did not converge within 10⁶ steps"));
            }
            if *x == q(12, 100) {
                failures.push(format!("x0={x0} seed={seed} settled on the knife-edge 0.12"));
            }
            let hit = match si {
                0 | 1 | 3 => low(x),
                _ => *x == qi(1),
            };
            if hit {
                counts[*si] += 1;
            } else if *si <= 2 {
                failures.push(format!("x0={x0} seed={seed} ended at {}", format_rational(x)));
            }
        }
        for (si, need) in [(3usize, 95usize), (4, 95)] {
            if counts[si] < need {
                failures.push(format!(
                    "x0={}: {}/100 runs reached the expected basin",
                    format_rational(&starts[si]),
                    counts[si]
                ));
            }
        }
        Outcome {
            summary: format!(
                "500 runs; basin hits 0.05→{} 0.1→{} 0.5→{} 0.115→{} 0.125→{} (of 100)",
                counts[0], counts[1], counts[2], counts[3], counts[4]
            ),
            failures,
        }
    });
}

#[test]
fn criterion_9_oracle_equivalence() {
    gate(9, "analytic engine matches the grid oracle at r = 10⁻⁴", 30, || {
        let r = q(1, 10_000);
        let mut failures: Vec<String> = bundled::BUNDLED
            .par_iter()
            .flat_map(|(name, text)| {
                let l = pgcg_cli::parse_scenario(text).expect("bundled scenarios parse");
                let d = verify(&l.game, &r).expect("valid resolution");
                d.discrepancies.into_iter().map(|m| format!("{name}: {m}")).collect::<Vec<_>>()
            })
            .collect();
        let (n, mut random) = family_sweep(Family::Oracle, 200, 909);
        failures.append(&mut random);
        Outcome {
            summary: format!(
                "{} bundled + {n} random scenarios, {} discrepancies",
                bundled::BUNDLED.len(),
                failures.len()
            ),
            failures,
        }
    });
}
