//! Subcommand definitions and their execution.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pgcg_core::adversary::{
    pigouvian_gap_instance, rsg_adversary, sqrth_adversary, train_adversary, AdversarialInstance,
};
use pgcg_core::bounds::{
    check_adversary, check_gamma_upper, check_pigouvian, check_sqrth_upper, price_of_anarchy, price_of_anarchy_with,
    Verdict,
};
use pgcg_core::dynamics::{DynamicsModel, DynamicsTrace};
use pgcg_core::oracle::{grid_points, verify, DEFAULT_RESOLUTION};
use pgcg_core::rational::{parse_rational, q};
use pgcg_core::taxes::{best_monotone_minorant, derivative_ratio, TaxScheme};
use pgcg_core::{GameInstance, ModelKind, Q};
use serde::Serialize;

use crate::bundled;
use crate::error::{exit, CliError};
use crate::report::{
    AdversaryReport, CheckJson, EqReport, OptimumReport, PoaJson, SimulateReport, TaxReport, VerifyReport,
};
use crate::scenario::{self, Loaded, Scenario};
use crate::sweep::{run_sweep, Family, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "pgcg", version, about = "Public-good congestion and ride-sharing games")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Oracle grid step, e.g. `1e-4` or `1/10000`.
    #[arg(long, global = true)]
    pub resolution: Option<String>,
    /// RNG seed for `simulate` and `sweep`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Count knife-edge points as equilibria in `poa`.
    #[arg(long, global = true)]
    pub include_knife_edges: bool,
    /// Directory for emitted files; created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium set: isolated points, intervals and knife-edges.
    Eq(ScenarioArg),
    /// Social optimum `(x*, SC*)`.
    Optimum(ScenarioArg),
    /// Price of anarchy, plus the guarantee check for the tax scheme.
    Poa(PoaArgs),
    /// Materialise the tax function.
    Tax(PoaArgs),
    /// Generate a lower-bound instance and check it.
    Adversary(AdversaryArgs),
    /// Best-response dynamics trace as CSV `step,x,sc_ratio`.
    Simulate(SimulateArgs),
    /// Verdict table over a randomised family or the adversary grid.
    Sweep(SweepArgs),
    /// Compare the analytic engine against the grid oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Scenario file, or the name of a bundled scenario.
    pub scenario: String,
}

#[derive(Debug, Args)]
pub struct PoaArgs {
    pub scenario: String,
    /// Override the scenario's tax: pigouvian, constant-sqrt, gamma-envelope, zero, constant:V.
    #[arg(long)]
    pub tax: Option<String>,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    /// sqrth (bus), rsg (any shared technology), gap (Pigouvian gap) or train.
    #[arg(long, default_value = "sqrth")]
    pub family: String,
    #[arg(long = "H")]
    pub h: Option<String>,
    #[arg(long = "Z")]
    pub z: Option<String>,
    #[arg(long)]
    pub eps: String,
    #[arg(long, default_value = "pigouvian")]
    pub tax: String,
    /// Technology preset for `--family rsg`.
    #[arg(long, default_value = "bus")]
    pub technology: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long)]
    pub max_steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// adversary, pigouvian, constant-sqrt, pigouvian-lh, gamma, truncation or oracle.
    #[arg(long)]
    pub family: Family,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Comma-separated H values for the adversary grid.
    #[arg(long = "H", value_delimiter = ',')]
    pub h: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub tax: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scenario file or bundled name; omit with `--bundled`.
    pub scenario: Option<String>,
    /// Verify every bundled scenario.
    #[arg(long)]
    pub bundled: bool,
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn json<T: Serialize>(value: &T, pass: bool) -> Self {
        Outcome {
            stdout: serde_json::to_string_pretty(value).expect("reports serialise") + "\n",
            stderr: String::new(),
            code: if pass { exit::PASS } else { exit::CHECK_FAILED },
        }
    }
}

fn number(text: &str, flag: &str) -> Result<Q, CliError> {
    parse_rational(text).map_err(|e| CliError::input(flag, e.to_string()))
}

/// Parses a `--tax` value.
pub fn parse_tax(text: &str) -> Result<TaxScheme, CliError> {
    match text.split_once(':') {
        Some(("constant", v)) => Ok(TaxScheme::Constant(number(v, "--tax")?)),
        Some(_) => Err(CliError::input("--tax", format!("unknown tax {text:?}"))),
        None => TaxScheme::from_name(text).map_err(|e| CliError::input("--tax", e.to_string())),
    }
}

/// Loads a scenario file, falling back to the bundled set for bare names.
pub fn load(name: &str) -> Result<Loaded, CliError> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(text) = bundled::get(name) {
            return scenario::parse_scenario(text);
        }
    }
    scenario::load_scenario(path)
}

fn resolution(g: &GlobalOpts, s: Option<&Scenario>) -> Result<Q, CliError> {
    if let Some(r) = &g.resolution {
        return number(r, "--resolution");
    }
    if let Some(r) = s.map(Scenario::resolution).transpose()?.flatten() {
        return Ok(r);
    }
    Ok(q(DEFAULT_RESOLUTION.0, DEFAULT_RESOLUTION.1))
}

fn write_out(g: &GlobalOpts, file: &str, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file), contents)?;
    }
    Ok(())
}

/// The theorem check attached to a tax scheme, when one applies.
pub fn scheme_check(g: &GameInstance, scheme: &TaxScheme) -> Result<Option<CheckJson>, CliError> {
    if g.tech().kind() != ModelKind::SharedExternality {
        return Ok(None);
    }
    let check = |name, v: pgcg_core::Result<Verdict>| -> Result<Option<CheckJson>, CliError> {
        match v {
            Ok(v) => Ok(Some(CheckJson::new(name, &v))),
            Err(pgcg_core::Error::Precondition(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    match scheme {
        TaxScheme::Pigouvian => check("pigouvian", check_pigouvian(g)),
        TaxScheme::ConstantSqrt => check("constant-sqrt", check_sqrth_upper(g)),
        TaxScheme::GammaEnvelope => {
            let env = best_monotone_minorant(g.l_prime())?;
            check("gamma-envelope", check_gamma_upper(g, &env))
        }
        _ => Ok(None),
    }
}

fn loaded_with(name: &str, tax: &Option<String>) -> Result<(Loaded, GameInstance, TaxScheme), CliError> {
    let l = load(name)?;
    let (game, scheme) = match tax {
        Some(t) => l.scenario.game_with(Some(&parse_tax(t)?))?,
        None => (l.game.clone(), l.scheme.clone()),
    };
    Ok((l, game, scheme))
}

fn label(l: &Loaded, name: &str) -> String {
    if l.scenario.name.is_empty() {
        name.to_string()
    } else {
        l.scenario.name.clone()
    }
}

pub fn build_adversary(a: &AdversaryArgs) -> Result<(AdversarialInstance, TaxScheme), CliError> {
    let eps = number(&a.eps, "--eps")?;
    let tax = parse_tax(&a.tax)?;
    let need = |v: &Option<String>, flag: &str| -> Result<Q, CliError> {
        number(v.as_deref().ok_or_else(|| CliError::input(flag, "required for this family"))?, flag)
    };
    let inst = match a.family.as_str() {
        "sqrth" => sqrth_adversary(&need(&a.h, "--H")?, &eps, &tax)?,
        "rsg" => rsg_adversary(&scenario::preset(&a.technology)?, &need(&a.h, "--H")?, &eps, &tax)?,
        "gap" => {
            return Ok((pigouvian_gap_instance(&need(&a.h, "--H")?, &eps)?, TaxScheme::Pigouvian));
        }
        "train" => train_adversary(&need(&a.z, "--Z")?, &eps, &tax)?,
        other => return Err(CliError::input("--family", format!("unknown adversary family {other:?}"))),
    };
    Ok((inst, tax))
}

fn simulate(g: &GlobalOpts, a: &SimulateArgs) -> Result<Outcome, CliError> {
    let l = load(&a.scenario)?;
    let spec = l.scenario.dynamics.clone().unwrap_or_default();
    let n = a.n.unwrap_or(spec.n);
    let x0 = match &a.x0 {
        Some(x) => number(x, "--x0")?,
        None => l.scenario.dynamics_x0()?,
    };
    let seed = g.seed.unwrap_or(spec.seed);
    let max_steps = a.max_steps.unwrap_or(spec.max_steps);
    let trace: DynamicsTrace = DynamicsModel::new(&l.game, n)?.run(&x0, seed, max_steps)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("csv is ascii");
    let summary = SimulateReport::new(&label(&l, &a.scenario), n, &x0, seed, &trace);
    let summary_json = serde_json::to_string_pretty(&summary).expect("reports serialise") + "\n";
    let code = if trace.converged { exit::PASS } else { exit::CHECK_FAILED };
    if g.out.is_some() {
        write_out(g, "trace.csv", &csv)?;
        write_out(g, "simulate.json", &summary_json)?;
        Ok(Outcome { stdout: summary_json, stderr: String::new(), code })
    } else {
        Ok(Outcome { stdout: csv, stderr: summary_json, code })
    }
}

fn verify_one(g: &GlobalOpts, name: &str) -> Result<VerifyReport, CliError> {
    let l = load(name)?;
    let r = resolution(g, Some(&l.scenario))?;
    let d = verify(&l.game, &r)?;
    let n = grid_points(&l.game, &r)?.len();
    Ok(VerifyReport::new(&label(&l, name), n, &d))
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let (file, outcome) = match &cli.command {
        Command::Eq(a) => {
            let l = load(&a.scenario)?;
            ("eq.json", Outcome::json(&EqReport::new(&label(&l, &a.scenario), &l.game.equilibrium_set()), true))
        }
        Command::Optimum(a) => {
            let l = load(&a.scenario)?;
            let (x, sc) = l.game.social_optimum();
            ("optimum.json", Outcome::json(&OptimumReport::new(&label(&l, &a.scenario), &x, &sc), true))
        }
        Command::Poa(a) => {
            let (l, game, scheme) = loaded_with(&a.scenario, &a.tax)?;
            let knife = g.include_knife_edges || l.scenario.analysis.include_knife_edges;
            let r = price_of_anarchy_with(&game, knife);
            let check = scheme_check(&game, &scheme)?;
            let pass = check.as_ref().is_none_or(|c| c.pass);
            let report = PoaJson::new(&label(&l, &a.scenario), scheme.name(), knife, &r, check);
            ("poa.json", Outcome::json(&report, pass))
        }
        Command::Tax(a) => {
            let (l, game, scheme) = loaded_with(&a.scenario, &a.tax)?;
            let gamma = match scheme {
                TaxScheme::GammaEnvelope => Some(best_monotone_minorant(game.l_prime())?.gamma),
                _ => None,
            };
            let h = derivative_ratio(game.l_prime(), game.tech());
            let report = TaxReport::new(
                &label(&l, &a.scenario),
                scheme.name(),
                game.tax(),
                game.effective_tax(),
                gamma.as_ref(),
                &h,
            );
            ("tax.json", Outcome::json(&report, true))
        }
        Command::Adversary(a) => {
            let (inst, tax) = build_adversary(a)?;
            let v = check_adversary(&inst);
            let r = price_of_anarchy(&inst.game);
            let name = format!("{}-adversary", a.family);
            let toml = Scenario::from_game(&name, &inst.game, None).to_toml();
            write_out(g, "adversary.toml", &toml)?;
            let report = AdversaryReport::new(&a.family, &crate::sweep::tax_label(&tax), &inst, &v, &r, toml);
            ("adversary.json", Outcome::json(&report, v.pass))
        }
        Command::Simulate(a) => return simulate(g, a),
        Command::Sweep(a) => {
            let mut cfg = SweepConfig::new(a.family, a.count, g.seed.unwrap_or(0));
            if !a.h.is_empty() {
                cfg.h_values = a.h.iter().map(|h| number(h, "--H")).collect::<Result<_, _>>()?;
            }
            if !a.eps.is_empty() {
                cfg.eps_values = a.eps.iter().map(|e| number(e, "--eps")).collect::<Result<_, _>>()?;
            }
            if !a.tax.is_empty() {
                cfg.taxes = a.tax.iter().map(|t| parse_tax(t)).collect::<Result<_, _>>()?;
            }
            cfg.resolution = resolution(g, None)?;
            let report = run_sweep(&cfg)?;
            write_out(g, "sweep.csv", &report.csv())?;
            let pass = report.failures == 0;
            ("sweep.json", Outcome::json(&report, pass))
        }
        Command::Verify(a) => {
            let names: Vec<String> = match (&a.scenario, a.bundled) {
                (Some(s), false) => vec![s.clone()],
                (None, true) => bundled::names().map(str::to_string).collect(),
                _ => return Err(CliError::input("verify", "give a scenario or --bundled, not both")),
            };
            let reports = names.iter().map(|n| verify_one(g, n)).collect::<Result<Vec<_>, _>>()?;
            let pass = reports.iter().all(|r| r.pass);
            let out = if reports.len() == 1 { Outcome::json(&reports[0], pass) } else { Outcome::json(&reports, pass) };
            ("verify.json", out)
        }
    };
    write_out(g, file, &outcome.stdout)?;
    Ok(outcome)
}

/// Parses arguments, runs, and maps errors to exit code 2.
pub fn run_from<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT_ERROR } else { exit::PASS };
            let text = e.render().to_string();
            return if code == exit::PASS {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    match execute(&cli) {
        Ok(o) => o,
        Err(e) => Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: exit::INPUT_ERROR },
    }
}
